"""Sampled verification of Hamilton-Jacobi conditions for candidate fields and one-forms.

Every check evaluates its condition pointwise on a grid of configurations and
returns a :class:`CheckReport`. Ideal-membership conditions are tested by
pairing with the constraint distribution at each point, which is exact where
the reaction covectors have full rank.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from . import diffcalc as dc
from .constraints import ConstraintSet, reaction_rows
from .diffcalc import Subspace
from .dynamics import constrained_field
from .errors import UnsupportedOperationError
from .mechanics import (
    LagrangianSystem,
    State,
    derivatives,
    energy_qv,
    hamiltonian_qp,
    inverse_metric_apply,
    momentum_qv,
    two_form_matrix,
)
from .report import CheckReport

DEFAULT_TOL = 1e-8

Force = Callable[[Any, Any], Any]


@dataclass(frozen=True)
class HJCandidate:
    """A vector field X: Q → TQ or a one-form σ: Q → T*Q given in coordinates."""

    kind: str
    map: Callable[[Any], Any]
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in ("vector_field", "one_form"):
            raise ValueError(f"unknown candidate kind {self.kind!r}")

    def __call__(self, q: Any) -> Any:
        return self.map(q)


def _grid(grid: Any) -> tuple[np.ndarray, dict[str, Any]]:
    if isinstance(grid, tuple) and len(grid) == 2 and isinstance(grid[1], dict):
        return np.atleast_2d(np.asarray(grid[0], dtype=float)), grid[1]
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    return pts, {"kind": "explicit", "count": int(pts.shape[0])}


def _require(cand: HJCandidate, kind: str) -> None:
    if cand.kind != kind:
        raise ValueError(f"candidate {cand.label!r} is a {cand.kind}, expected {kind}")


def _maxabs(x: Any) -> float:
    arr = np.asarray(dc.real_part(x), dtype=float)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def _distribution(cs: ConstraintSet, q: np.ndarray, v: np.ndarray) -> Subspace:
    rows = np.asarray(reaction_rows(cs, q, v), dtype=float).reshape(cs.k, q.size)
    return Subspace.kernel(rows, q.size)


def _point_record(q: np.ndarray, residual: float, **extra: Any) -> dict[str, Any]:
    rec = {"q": q.tolist(), "residual": residual}
    rec.update(extra)
    return rec


def _sweep(name: str, pts: np.ndarray, spec: dict[str, Any], tol: float, fn: Callable[[np.ndarray], float], **notes: Any) -> CheckReport:
    res, details = [], []
    for q in pts:
        r = float(fn(q))
        res.append(r)
        details.append(_point_record(q, r))
    return CheckReport.from_residuals(name, res, tol, spec, details, notes)


def check_in_N(cand: HJCandidate, cs: ConstraintSet, grid: Any, tol: float = DEFAULT_TOL) -> CheckReport:
    """max |ψ(q, X(q))| over the grid."""
    _require(cand, "vector_field")
    pts, spec = _grid(grid)
    return _sweep("in_N", pts, spec, tol, lambda q: _maxabs(cs.psi(q, cand(q))) if cs.k else 0.0)


def fiber_derivative_form(sys: LagrangianSystem, cand: HJCandidate) -> Callable[[Any], Any]:
    """q ↦ 𝔽L(X(q)), the one-form induced by a vector-field candidate."""
    return lambda q: momentum_qv(sys, q, cand(q))


def exterior_derivative_matrix(form: Callable[[Any], Any], q: Any) -> np.ndarray:
    """Matrix D of dβ at q so that dβ(u, w) = uᵀ D w, for a one-form β(q)."""
    J = np.asarray(dc.real_part(dc.jacobian(form, q)), dtype=float)
    return J.T - J


def pullback_two_form_matrix(sys: LagrangianSystem, cand: HJCandidate, q: np.ndarray) -> np.ndarray:
    """Matrix of X*ω_L at q computed from the tangent map of X and ω_L on TQ."""
    n = q.size
    v = np.asarray(dc.real_part(cand(q)), dtype=float)
    DX = np.asarray(dc.real_part(dc.jacobian(cand.map, q)), dtype=float)
    TX = np.vstack([np.eye(n), DX])
    omega = two_form_matrix(derivatives(sys, q, v, fast=False))
    return TX.T @ omega @ TX


def _pairs_residual(matrix: np.ndarray, D: Subspace) -> float:
    if D.dim == 0:
        return 0.0
    return _maxabs(D.basis @ matrix @ D.basis.T)


def check_closedness_linear(
    cand: HJCandidate, sys: LagrangianSystem, cs: ConstraintSet, grid: Any, tol: float = DEFAULT_TOL
) -> CheckReport:
    """d(𝔽L∘X) vanishes on pairs from the constraint distribution."""
    _require(cand, "vector_field")
    if not cs.linear:
        raise UnsupportedOperationError("closedness test for linear constraints; use check_nonlinear_pullback")
    pts, spec = _grid(grid)
    form = fiber_derivative_form(sys, cand)

    def residual(q: np.ndarray) -> float:
        D = _distribution(cs, q, np.asarray(dc.real_part(cand(q))))
        return _pairs_residual(exterior_derivative_matrix(form, q), D)

    return _sweep("closedness", pts, spec, tol, residual)


def check_nonlinear_pullback(
    cand: HJCandidate, sys: LagrangianSystem, cs: ConstraintSet, grid: Any, tol: float = DEFAULT_TOL
) -> CheckReport:
    """X*ω_L vanishes on pairs from ker ∂ψ/∂v(q, X(q))."""
    _require(cand, "vector_field")
    pts, spec = _grid(grid)

    def residual(q: np.ndarray) -> float:
        D = _distribution(cs, q, np.asarray(dc.real_part(cand(q))))
        return _pairs_residual(pullback_two_form_matrix(sys, cand, q), D)

    return _sweep("nonlinear_pullback", pts, spec, tol, residual)


def check_hj_condition(
    cand: HJCandidate,
    sys: LagrangianSystem,
    cs: ConstraintSet,
    grid: Any,
    strong: bool = False,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Weak: d(E_L∘X) annihilates ker ∂ψ/∂v(q, X(q)). Strong: d(E_L∘X) = 0."""
    _require(cand, "vector_field")
    pts, spec = _grid(grid)
    g = lambda q: energy_qv(sys, q, cand(q))  # noqa: E731

    def residual(q: np.ndarray) -> float:
        dg = np.asarray(dc.real_part(dc.gradient(g, q)), dtype=float)
        if strong:
            return _maxabs(dg)
        D = _distribution(cs, q, np.asarray(dc.real_part(cand(q))))
        return _maxabs(D.basis @ dg) if D.dim else 0.0

    rep = _sweep("hj_strong" if strong else "hj_weak", pts, spec, tol, residual)
    rep.notes["energy_values"] = [float(dc.real_part(g(q))) for q in pts[: min(5, len(pts))]]
    return rep


def check_related(
    cand: HJCandidate, sys: LagrangianSystem, cs: ConstraintSet, grid: Any, tol: float = DEFAULT_TOL
) -> CheckReport:
    """|DX(q)·X(q) − a(q, X(q))| with a the constrained acceleration."""
    _require(cand, "vector_field")
    pts, spec = _grid(grid)

    def residual(q: np.ndarray) -> float:
        v = np.asarray(dc.real_part(cand(q)), dtype=float)
        a = constrained_field(sys, cs, State(q, v), tol=max(tol, 1e-8)).acceleration
        DXv = np.asarray(dc.real_part(dc.jvp(cand.map, q, v)), dtype=float)
        return _maxabs(DXv - a)

    return _sweep("related", pts, spec, tol, residual)


def check_no_reaction(
    cand: HJCandidate, sys: LagrangianSystem, cs: ConstraintSet, grid: Any, tol: float = DEFAULT_TOL
) -> CheckReport:
    """Diagnostic: do the reaction covectors annihilate every image TX(u)?

    Since the reaction covectors are semibasic this asks whether ∂ψ/∂v(q, X(q))
    vanishes; genuinely constrained systems fail it.
    """
    _require(cand, "vector_field")
    pts, spec = _grid(grid)
    return _sweep(
        "no_reaction", pts, spec, tol, lambda q: _maxabs(reaction_rows(cs, q, np.asarray(dc.real_part(cand(q))))) if cs.k else 0.0
    )


def check_forced_hj(
    cand: HJCandidate,
    sys: LagrangianSystem,
    force: Force,
    grid: Any,
    tol: float = DEFAULT_TOL,
    sign: int = -1,
) -> CheckReport:
    """Residual of d(E∘X) = sign · X*α (vector field) or d(H∘σ) = sign · σ*β (one-form).

    ``force(q, v_or_p)`` returns the semibasic covector components. The
    default ``sign = -1`` is the forced Hamilton-Jacobi equation.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    pts, spec = _grid(grid)
    if cand.kind == "vector_field":
        g = lambda q: energy_qv(sys, q, cand(q))  # noqa: E731
    else:
        g = lambda q: hamiltonian_qp(sys, q, cand(q))  # noqa: E731

    def residual(q: np.ndarray) -> float:
        dg = np.asarray(dc.real_part(dc.gradient(g, q)), dtype=float)
        alpha = np.asarray(dc.real_part(force(q, np.asarray(dc.real_part(cand(q))))), dtype=float)
        return _maxabs(dg - sign * alpha)

    return _sweep("forced_hj", pts, spec, tol, residual, sign=sign)


def check_in_M(cand: HJCandidate, sys: LagrangianSystem, cs: ConstraintSet, grid: Any, tol: float = DEFAULT_TOL) -> CheckReport:
    """σ(Q) ⊆ 𝔽L(N): Ψ = ψ(q, M(q)⁻¹σ(q)) vanishes."""
    _require(cand, "one_form")
    pts, spec = _grid(grid)
    return _sweep(
        "in_M", pts, spec, tol, lambda q: _maxabs(cs.psi(q, inverse_metric_apply(sys, q, cand(q)))) if cs.k else 0.0
    )


def check_hamiltonian_hj(
    cand: HJCandidate,
    sys: LagrangianSystem,
    cs: ConstraintSet,
    grid: Any,
    strong: bool = False,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Hamiltonian-side twin: σ(Q) ⊆ M first, then dσ on the distribution and d(H∘σ).

    The report's ``max_residual`` is the largest of the three component
    residuals, each of which is also listed in ``notes``.
    """
    _require(cand, "one_form")
    if not sys.is_mechanical:
        raise UnsupportedOperationError("Hamiltonian-side checks require a mechanical-type Lagrangian")
    if cs.k and not cs.linear:
        raise UnsupportedOperationError("Hamiltonian-side checks support linear constraints only")
    pts, spec = _grid(grid)
    gate = check_in_M(cand, sys, cs, (pts, spec), tol)
    if not gate.passed:
        gate.notes["stage"] = "in_M"
        return gate
    g = lambda q: hamiltonian_qp(sys, q, cand(q))  # noqa: E731
    closed, hj, details = [], [], []
    for q in pts:
        v = np.asarray(dc.real_part(inverse_metric_apply(sys, q, cand(q))), dtype=float)
        D = _distribution(cs, q, v)
        c = _pairs_residual(exterior_derivative_matrix(cand.map, q), D)
        dg = np.asarray(dc.real_part(dc.gradient(g, q)), dtype=float)
        h = _maxabs(dg) if strong else (_maxabs(D.basis @ dg) if D.dim else 0.0)
        closed.append(c)
        hj.append(h)
        details.append(_point_record(q, max(c, h), closedness=c, hj=h))
    worst = [max(a, b, m) for a, b, m in zip(closed, hj, [d["residual"] for d in gate.details])]
    return CheckReport.from_residuals(
        "hamiltonian_hj_strong" if strong else "hamiltonian_hj_weak",
        worst,
        tol,
        spec,
        details,
        {
            "in_M": gate.max_residual,
            "closedness": max(closed, default=0.0),
            "hj": max(hj, default=0.0),
        },
    )


def legendre_candidate(sys: LagrangianSystem, cand: HJCandidate) -> HJCandidate:
    """σ = 𝔽L∘X as a one-form candidate."""
    _require(cand, "vector_field")
    return HJCandidate("one_form", fiber_derivative_form(sys, cand), f"FL({cand.label})")


def integrate_base_field(cand: HJCandidate, q0: Any, dt: float, steps: int) -> np.ndarray:
    """RK4 integral curve of q̇ = X(q) on Q."""
    q = np.asarray(q0, dtype=float)
    out = [q.copy()]
    X = lambda x: np.asarray(dc.real_part(cand(x)), dtype=float)  # noqa: E731
    for _ in range(steps):
        k1 = X(q)
        k2 = X(q + 0.5 * dt * k1)
        k3 = X(q + 0.5 * dt * k2)
        k4 = X(q + dt * k3)
        q = q + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(q.copy())
    return np.asarray(out)


def grid_points(grid: Any) -> Sequence[np.ndarray]:
    return list(_grid(grid)[0])
