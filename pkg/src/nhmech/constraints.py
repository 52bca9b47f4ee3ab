"""Constraint submanifold N, reaction covectors, and the distributions built from them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from . import diffcalc as dc
from .diffcalc import Subspace
from .errors import CompatibilityError, DomainError
from .mechanics import LagrangianSystem, State, derivatives, require_regular, two_form_matrix
from .report import CheckReport

DEFAULT_TOL = 1e-8

VectorField = Callable[[Any], Any]


@dataclass(frozen=True)
class ConstraintSet:
    """``k`` constraint functions ψ(q, v) with optional linear coefficient data.

    For linear constraints ``coeff(q)`` returns the k×n matrix with
    ψ(q, v) = coeff(q) @ v.
    """

    k: int
    psi: Callable[[Any, Any], Any]
    linear: bool = False
    coeff: Callable[[Any], Any] | None = None
    name: str = ""

    @classmethod
    def from_coefficients(cls, k: int, coeff: Callable[[Any], Any], name: str = "") -> "ConstraintSet":
        return cls(k, lambda q, v: coeff(q) @ v, True, coeff, name)

    @classmethod
    def empty(cls, n: int, name: str = "unconstrained") -> "ConstraintSet":
        return cls(0, lambda q, v: np.zeros(0), True, lambda q: np.zeros((0, n)), name)


@dataclass(frozen=True)
class ChowFlag:
    growth: list[int]
    complete: bool
    depth_used: int


@dataclass(frozen=True)
class ConstraintDerivatives:
    psi: np.ndarray
    dq: np.ndarray  # ∂ψ/∂q, k×n
    dv: np.ndarray  # ∂ψ/∂v, k×n


def residual(cs: ConstraintSet, s: State) -> np.ndarray:
    return np.asarray(cs.psi(s.q, s.v), dtype=float).reshape(cs.k)


def constraint_derivatives(cs: ConstraintSet, q: Any, v: Any) -> ConstraintDerivatives:
    n = np.shape(q)[0]
    if cs.k == 0:
        return ConstraintDerivatives(np.zeros(0), np.zeros((0, n)), np.zeros((0, n)))
    z = np.concatenate([q, v])
    val, J = dc.value_and_jacobian(lambda w: cs.psi(w[:n], w[n:]), z)
    J = np.asarray(J, dtype=float).reshape(cs.k, 2 * n)
    return ConstraintDerivatives(np.asarray(val, dtype=float).reshape(cs.k), J[:, :n], J[:, n:])


def reaction_rows(cs: ConstraintSet, q: Any, v: Any) -> Any:
    """∂ψ/∂v at (q, v); differentiable in q and v."""
    n = dc.shape_of(q)[0]
    if cs.k == 0:
        return np.zeros((0, n))
    return dc.jacobian(lambda w: cs.psi(q, w), v)


def reaction_basis(cs: ConstraintSet, s: State) -> np.ndarray:
    """Rows (∂ψᵃ/∂vⁱ) of the semibasic reaction covectors at s."""
    return np.asarray(reaction_rows(cs, s.q, s.v), dtype=float).reshape(cs.k, s.q.size)


def constraint_distribution(cs: ConstraintSet, s: State, tol: float = dc.DEFAULT_RANK_TOL) -> Subspace:
    return Subspace.kernel(reaction_basis(cs, s), s.q.size, tol)


def compatibility_matrix(sys: LagrangianSystem, cs: ConstraintSet, s: State) -> np.ndarray:
    """𝒞 = −A W⁻¹ Aᵀ with A = ∂ψ/∂v."""
    d = derivatives(sys, s.q, s.v)
    require_regular(d.W)
    A = reaction_basis(cs, s)
    return -A @ np.linalg.solve(d.W, A.T)


def require_on_N(cs: ConstraintSet, s: State, tol: float = DEFAULT_TOL) -> None:
    r = residual(cs, s)
    worst = float(np.max(np.abs(r))) if r.size else 0.0
    if worst > tol:
        raise DomainError(f"state is off the constraint submanifold (max |ψ| = {worst:.3e})", worst)


def check_admissibility(cs: ConstraintSet, s: State, tol: float = DEFAULT_TOL) -> CheckReport:
    """Pass iff the reaction covectors have full rank k at s."""
    require_on_N(cs, s, tol)
    rows = reaction_basis(cs, s)
    rank = dc.subspace_rank(list(rows))
    return CheckReport.from_residuals(
        "admissibility",
        [float(cs.k - rank)],
        0.0,
        notes={"rank": rank, "k": cs.k},
    )


def check_ideal(cs: ConstraintSet, samples: Sequence[State], tol: float = DEFAULT_TOL) -> CheckReport:
    """Liouville field tangent to N: v·∂ψ/∂v vanishes at samples on N."""
    res, details = [], []
    for s in samples:
        val = reaction_basis(cs, s) @ s.v if cs.k else np.zeros(0)
        r = float(np.max(np.abs(val))) if val.size else 0.0
        res.append(r)
        details.append({"q": s.q.tolist(), "v": s.v.tolist(), "residual": r})
    return CheckReport.from_residuals("ideal", res, tol, details=details)


def tangent_space_N(cs: ConstraintSet, s: State, tol: float = dc.DEFAULT_RANK_TOL) -> Subspace:
    """T_sN = ker dψ(s) inside R^{2n}."""
    n = s.q.size
    d = constraint_derivatives(cs, s.q, s.v)
    return Subspace.kernel(np.hstack([d.dq, d.dv]), 2 * n, tol)


def f_l_space(cs: ConstraintSet, s: State, tol: float = dc.DEFAULT_RANK_TOL) -> Subspace:
    """F_L(s): vectors whose base part lies in the constraint distribution."""
    n = s.q.size
    A = reaction_basis(cs, s)
    return Subspace.kernel(np.hstack([A, np.zeros((cs.k, n))]), 2 * n, tol)


def h_form_gap(sys: LagrangianSystem, cs: ConstraintSet, s: State, tol: float = dc.DEFAULT_RANK_TOL) -> float:
    """Smallest singular value of ω_L restricted to ℋ, relative to the largest."""
    H = tangent_space_N(cs, s, tol).intersect(f_l_space(cs, s, tol))
    if H.dim == 0:
        return 1.0
    omega = two_form_matrix(derivatives(sys, s.q, s.v, fast=False))
    sv = np.linalg.svd(H.basis @ omega @ H.basis.T, compute_uv=False)
    return float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0


def h_distribution(sys: LagrangianSystem, cs: ConstraintSet, s: State, tol: float = dc.DEFAULT_RANK_TOL) -> Subspace:
    """ℋ_s = T_sN ∩ F_L(s), with nondegeneracy of ω_L on it checked."""
    require_on_N(cs, s)
    H = tangent_space_N(cs, s, tol).intersect(f_l_space(cs, s, tol))
    gap = h_form_gap(sys, cs, s, tol)
    if H.dim % 2 or gap <= tol:
        raise CompatibilityError(
            f"ω_L restricted to ℋ is degenerate (dim {H.dim}, relative singular value {gap:.3e})"
        )
    return H


def chow_flag(
    generators: Sequence[VectorField],
    q: Any,
    max_depth: int | None = None,
    tol: float = dc.DEFAULT_RANK_TOL,
) -> ChowFlag:
    """Growth of the span of iterated brackets of ``generators`` at q.

    Depth d adds the brackets of every depth-(d−1) field with every
    generator. Iteration stops once the span is the whole tangent space.
    """
    q = np.asarray(q, dtype=float)
    n = q.size
    max_depth = n if max_depth is None else max_depth
    gens = list(generators)
    layer = list(gens)
    values = [dc.real_part(g(q)) for g in gens]
    growth = [dc.subspace_rank(values, tol)]
    depth = 1
    while growth[-1] < n and depth < max_depth and layer:
        depth += 1
        next_layer = []
        for f in layer:
            for g in gens:
                if f is g:
                    continue
                b = dc.bracket_field(g, f)
                next_layer.append(b)
                values.append(dc.real_part(b(q)))
        layer = next_layer
        growth.append(dc.subspace_rank(values, tol))
    return ChowFlag(growth, growth[-1] == n, depth)


def chow_sweep(
    generators: Sequence[VectorField],
    points: Sequence[Any],
    max_depth: int | None = None,
    tol: float = dc.DEFAULT_RANK_TOL,
) -> list[ChowFlag]:
    """chow_flag at several base points."""
    return [chow_flag(generators, q, max_depth, tol) for q in points]


def project_velocity_to_N(
    cs: ConstraintSet, q: np.ndarray, v: np.ndarray, metric: np.ndarray | None = None, iters: int = 30
) -> np.ndarray:
    """Minimal-norm (in ``metric``) velocity correction onto ψ(q, ·) = 0."""
    if cs.k == 0:
        return v
    Winv = np.eye(q.size) if metric is None else np.linalg.inv(metric)
    v = np.array(v, dtype=float)
    for _ in range(iters):
        r = np.asarray(cs.psi(q, v), dtype=float).reshape(cs.k)
        if np.max(np.abs(r)) < 1e-15 * max(1.0, float(np.max(np.abs(v)))):
            break
        A = np.asarray(reaction_rows(cs, q, v), dtype=float).reshape(cs.k, q.size)
        v = v - Winv @ A.T @ np.linalg.lstsq(A @ Winv @ A.T, r, rcond=None)[0]
        if cs.linear:
            break
    return v


def random_states_on_N(
    cs: ConstraintSet,
    count: int,
    rng: np.random.Generator,
    q_box: Sequence[tuple[float, float]],
    v_scale: float = 1.0,
) -> list[State]:
    """Random states with ψ = 0: uniform q in the box, velocities projected onto N."""
    out: list[State] = []
    lo = np.array([b[0] for b in q_box])
    hi = np.array([b[1] for b in q_box])
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 50 * count + 100:
            raise DomainError("could not sample states on the constraint submanifold")
        q = lo + (hi - lo) * rng.random(lo.size)
        v = project_velocity_to_N(cs, q, v_scale * rng.standard_normal(lo.size))
        r = np.asarray(cs.psi(q, v), dtype=float)
        if r.size and np.max(np.abs(r)) > 1e-12:
            continue
        if not np.all(np.isfinite(v)) or np.linalg.norm(v) < 1e-6:
            continue
        out.append(State(q, v))
    return out
