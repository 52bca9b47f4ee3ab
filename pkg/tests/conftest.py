"""Shared oracles: central finite differences, independent of the dual-number code."""

from __future__ import annotations

import numpy as np
import pytest

from nhmech import systems
from nhmech.constraints import random_states_on_N

FD_STEP = 1e-5


def fd_jacobian(f, x, h=FD_STEP):
    """Central differences of a float function; output shape + trailing input axis."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    J = np.zeros(f0.shape + (x.size,))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        J[..., i] = (np.asarray(f(x + e), dtype=float) - np.asarray(f(x - e), dtype=float)) / (2 * h)
    return J


def fd_hessian(f, x, h=1e-4):
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            H[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)
    return H


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


@pytest.fixture(scope="session")
def free_particle():
    return systems.get("free_particle")


@pytest.fixture(scope="session")
def carriage():
    return systems.get("carriage")


@pytest.fixture(scope="session")
def horizontal():
    return systems.get("horizontal_particle")


def states(bundle, count, seed=0):
    return random_states_on_N(bundle.cs, count, np.random.default_rng(seed), bundle.q_box)


def pytest_terminal_summary(terminalreporter):
    lines = [
        value
        for key in ("passed", "failed")
        for rep in terminalreporter.stats.get(key, [])
        if getattr(rep, "when", None) == "call"
        for name, value in getattr(rep, "user_properties", [])
        if name == "acceptance"
    ]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
