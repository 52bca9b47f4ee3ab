import math

import numpy as np
import pytest

from nhmech import diffcalc as dc
from nhmech import hamjac as hj
from nhmech import reduction as rd
from nhmech import systems
from nhmech.errors import UnsupportedOperationError
from nhmech.report import quasi_random_grid

Y_GRID = np.stack([np.full(100, 0.4), np.linspace(-3, 3, 100), np.full(100, -1.1)], axis=1)


def family(c1, c2):
    return systems.get("free_particle").candidates["hj_family"](c1, c2)


def perturbed_family():
    # in N but with the wrong speed profile: E∘X is not constant
    return hj.HJCandidate("vector_field", lambda q: dc.stack([1.0 / (1 + q[1] ** 2), 2.0 + 0.0 * q[1], q[1] / (1 + q[1] ** 2)]), "perturbed")


@pytest.mark.parametrize("c1,c2", [(1.0, 2.0), (0.3, -1.5), (2.0, 0.0)])
def test_hj_family_passes_all_conditions(free_particle, c1, c2):
    X = family(c1, c2)
    sysm, cs = free_particle.sys, free_particle.cs
    assert hj.check_in_N(X, cs, Y_GRID).passed
    assert hj.check_closedness_linear(X, sysm, cs, Y_GRID).passed
    assert hj.check_hj_condition(X, sysm, cs, Y_GRID, strong=True).passed
    assert hj.check_hj_condition(X, sysm, cs, Y_GRID, strong=False).passed
    assert hj.check_related(X, sysm, cs, Y_GRID).passed


def test_hj_family_induced_dynamics(free_particle):
    X = family(1.0, 2.0)
    expected = free_particle.fixtures["induced_dynamics"].value
    for q in Y_GRID:
        np.testing.assert_allclose(X(q), expected(q, 1.0, 2.0), atol=1e-10)


def test_hj_family_energy_level(free_particle):
    rep = hj.check_hj_condition(family(1.0, 2.0), free_particle.sys, free_particle.cs, Y_GRID, strong=True)
    level = free_particle.fixtures["energy_level"].value(1.0, 2.0)
    assert all(e == pytest.approx(level, abs=1e-12) for e in rep.notes["energy_values"])


def test_integral_curve_of_family(free_particle):
    # ẏ = c2 so y(t) = y0 + c2 t; ẋ = c1/√(1+y²) integrates to (c1/c2) asinh(y)
    X = family(1.0, 2.0)
    path = hj.integrate_base_field(X, [0.0, 0.0, 0.0], 1e-3, 500)
    y = path[-1, 1]
    assert y == pytest.approx(1.0, abs=1e-12)
    assert path[-1, 0] == pytest.approx(0.5 * math.asinh(1.0), abs=1e-10)
    assert path[-1, 2] == pytest.approx(0.5 * (math.sqrt(2.0) - 1.0), abs=1e-10)


def test_negative_controls(free_particle):
    sysm, cs = free_particle.sys, free_particle.cs
    bad = perturbed_family()
    assert hj.check_in_N(bad, cs, Y_GRID).passed
    assert not hj.check_hj_condition(bad, sysm, cs, Y_GRID, strong=True).passed
    off = hj.HJCandidate("vector_field", lambda q: dc.stack([1.0 + 0.0 * q[0], 0.0 * q[0], 0.0 * q[0]]), "off")
    assert not hj.check_in_N(off, cs, Y_GRID).passed


def test_no_reaction_diagnostic_fails_on_constrained_system(free_particle):
    rep = hj.check_no_reaction(family(1.0, 2.0), free_particle.sys, free_particle.cs, Y_GRID)
    assert not rep.passed


@pytest.mark.parametrize("cand", [family(1.0, 2.0), family(0.5, -0.3), perturbed_family()])
def test_legendre_duality(free_particle, cand):
    sysm, cs = free_particle.sys, free_particle.cs
    sigma = hj.legendre_candidate(sysm, cand)
    for strong in (False, True):
        lag = hj.check_hj_condition(cand, sysm, cs, Y_GRID, strong=strong)
        ham = hj.check_hamiltonian_hj(sigma, sysm, cs, Y_GRID, strong=strong)
        assert lag.passed == ham.passed
        if not lag.passed:
            assert ham.max_residual / lag.max_residual < 10 and lag.max_residual / ham.max_residual < 10
    np.testing.assert_allclose(
        hj.check_in_M(sigma, sysm, cs, Y_GRID).max_residual, hj.check_in_N(cand, cs, Y_GRID).max_residual, atol=1e-9
    )


def test_hamiltonian_gate_stops_at_in_M(free_particle):
    sigma = hj.HJCandidate("one_form", lambda q: dc.stack([1.0 + 0.0 * q[0], 0.0 * q[0], 0.0 * q[0]]), "off")
    rep = hj.check_hamiltonian_hj(sigma, free_particle.sys, free_particle.cs, Y_GRID)
    assert not rep.passed and rep.notes["stage"] == "in_M"


def test_forced_hj_sign_on_reduced_carriage(carriage):
    red = rd.chaplygin_reduce(carriage.sys, carriage.cs, carriage.action)
    grid = quasi_random_grid(carriage.qbar_box, 30, 1)
    x1 = carriage.reduced_candidates["xbar1"]()
    assert hj.check_forced_hj(x1, red.base, red.gyro, grid, sign=-1).passed
    assert not hj.check_forced_hj(x1, red.base, red.gyro, grid, sign=1).passed


def test_nonlinear_pullback_on_cone():
    b = systems.get("appel_hamel")
    X = b.candidates["cone"](0.6, 0.8)
    grid = quasi_random_grid(b.q_box, 20, 0)
    assert hj.check_in_N(X, b.cs, grid).passed
    assert hj.check_nonlinear_pullback(X, b.sys, b.cs, grid).passed
    assert hj.check_hj_condition(X, b.sys, b.cs, grid).passed
    with pytest.raises(UnsupportedOperationError):
        hj.check_closedness_linear(X, b.sys, b.cs, grid)


def test_nonlinear_pullback_agrees_with_linear_closedness(free_particle):
    for cand in (family(1.0, 2.0), perturbed_family()):
        a = hj.check_closedness_linear(cand, free_particle.sys, free_particle.cs, Y_GRID)
        b = hj.check_nonlinear_pullback(cand, free_particle.sys, free_particle.cs, Y_GRID)
        assert a.max_residual == pytest.approx(b.max_residual, abs=1e-12)


def test_kind_mismatch_rejected(free_particle):
    sigma = hj.legendre_candidate(free_particle.sys, family(1.0, 2.0))
    with pytest.raises(ValueError):
        hj.check_in_N(sigma, free_particle.cs, Y_GRID)
    with pytest.raises(ValueError):
        hj.HJCandidate("tensor", lambda q: q)
