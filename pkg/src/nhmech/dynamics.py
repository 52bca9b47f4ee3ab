"""Constrained Euler-Lagrange dynamics, integration, and equation-of-motion checks."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Any, TextIO

import numpy as np

from . import diffcalc as dc
from .constraints import (
    ConstraintSet,
    constraint_derivatives,
    f_l_space,
    require_on_N,
    tangent_space_N,
)
from .diffcalc import Subspace
from .errors import (
    CompatibilityError,
    DegenerateFormError,
    DomainError,
    NHMechError,
    NumericalError,
    UnsupportedOperationError,
)
from .mechanics import (
    LagrangianSystem,
    PhasePoint,
    State,
    derivatives,
    energy_differential,
    energy_qv,
    hamiltonian_qp,
    inverse_metric_apply,
    require_regular,
    two_form_matrix,
)
from .report import CheckReport, fmt17

__all__ = [
    "CheckReport",
    "ConstrainedField",
    "HamiltonianField",
    "Trajectory",
    "bates_sniatycki_check",
    "constrained_field",
    "hamiltonian_field",
    "integrate",
    "projector_field",
    "verify_motion_equation",
]

COMPATIBILITY_COND_LIMIT = 1e12


@dataclass(frozen=True)
class ConstrainedField:
    acceleration: np.ndarray
    multipliers: np.ndarray
    residual_norm: float

    def as_vector(self, v: np.ndarray) -> np.ndarray:
        return np.concatenate([v, self.acceleration])


@dataclass(frozen=True)
class HamiltonianField:
    qdot: np.ndarray
    pdot: np.ndarray
    multipliers: np.ndarray


def _linear_parts(cs: ConstraintSet, q: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ψ, ∂ψ/∂v and (∂ψ/∂q)·v, using the coefficient matrix when available."""
    if cs.k == 0:
        n = q.size
        return np.zeros(0), np.zeros((0, n)), np.zeros(0)
    if cs.linear and cs.coeff is not None:
        A = np.asarray(cs.coeff(q), dtype=float).reshape(cs.k, q.size)
        dA = np.asarray(dc.jvp(cs.coeff, q, v), dtype=float).reshape(cs.k, q.size)
        return A @ v, A, dA @ v
    d = constraint_derivatives(cs, q, v)
    return d.psi, d.dv, d.dq @ v


def _solve_field(sys: LagrangianSystem, cs: ConstraintSet, q: np.ndarray, v: np.ndarray) -> ConstrainedField:
    d = derivatives(sys, q, v)
    require_regular(d.W)
    rhs = d.dq - d.Wvq @ v
    _, A, psi_q_v = _linear_parts(cs, q, v)
    Winv_rhs = np.linalg.solve(d.W, rhs)
    if cs.k:
        Winv_At = np.linalg.solve(d.W, A.T)
        S = A @ Winv_At  # equals −𝒞
        if np.linalg.cond(S) > COMPATIBILITY_COND_LIMIT:
            raise CompatibilityError(f"multiplier system is singular (cond {np.linalg.cond(S):.3e})")
        lam = np.linalg.solve(S, -(psi_q_v + A @ Winv_rhs))
        acc = Winv_rhs + Winv_At @ lam
    else:
        lam = np.zeros(0)
        acc = Winv_rhs
    el = d.W @ acc - rhs - A.T @ lam
    tangency = psi_q_v + A @ acc
    res = max(float(np.max(np.abs(el))), float(np.max(np.abs(tangency))) if cs.k else 0.0)
    return ConstrainedField(acc, lam, res)


def constrained_field(sys: LagrangianSystem, cs: ConstraintSet, s: State, tol: float = 1e-8) -> ConstrainedField:
    """Γ_{L,N} at s via Lagrange multipliers (λ enters as +λ_a ∂ψᵃ/∂v)."""
    sys.check_state(s)
    require_on_N(cs, s, tol)
    return _solve_field(sys, cs, s.q, s.v)


def projector_field(sys: LagrangianSystem, cs: ConstraintSet, s: State, tol: float = 1e-8) -> ConstrainedField:
    """Γ_{L,N} from the splitting T(TQ)|_N = TN ⊕ F_L^⊥ applied to Γ_L.

    Independent of :func:`constrained_field`: uses full nested-dual second
    derivatives and no multiplier system.
    """
    sys.check_state(s)
    require_on_N(cs, s, tol)
    n = sys.n
    d = derivatives(sys, s.q, s.v, fast=False)
    require_regular(d.W)
    gamma = np.concatenate([s.v, np.linalg.solve(d.W, d.dq - d.Wvq @ s.v)])
    if cs.k == 0:
        return ConstrainedField(gamma[n:], np.zeros(0), 0.0)
    omega = two_form_matrix(d)
    TN = tangent_space_N(cs, s)
    try:
        F_perp = dc.symplectic_orthogonal(omega, f_l_space(cs, s))
    except DegenerateFormError as exc:
        raise CompatibilityError(str(exc)) from exc
    basis = np.vstack([TN.basis, F_perp.basis]).T
    if basis.shape[1] != 2 * n or np.linalg.cond(basis) > COMPATIBILITY_COND_LIMIT:
        raise CompatibilityError("TN and F_L^⊥ do not split the tangent space")
    coeffs = np.linalg.solve(basis, gamma)
    gamma_N = TN.basis.T @ coeffs[: TN.dim]
    acc = gamma_N[n:]
    A = np.asarray(dc.jacobian(lambda w: cs.psi(s.q, w), s.v), dtype=float).reshape(cs.k, n)
    lam = np.linalg.lstsq(A.T, d.W @ acc - (d.dq - d.Wvq @ s.v), rcond=None)[0]
    el = d.W @ acc - (d.dq - d.Wvq @ s.v) - A.T @ lam
    sode = gamma_N[:n] - s.v
    return ConstrainedField(acc, lam, max(float(np.max(np.abs(el))), float(np.max(np.abs(sode)))))


@dataclass
class Trajectory:
    times: np.ndarray
    q: np.ndarray
    v: np.ndarray
    multipliers: np.ndarray
    energy: np.ndarray
    psi_max: np.ndarray

    @property
    def states(self) -> list[State]:
        return [State(a, b) for a, b in zip(self.q, self.v)]

    def __len__(self) -> int:
        return self.times.size

    def csv_header(self) -> list[str]:
        n = self.q.shape[1]
        k = self.multipliers.shape[1]
        return (
            ["t"]
            + [f"q{i + 1}" for i in range(n)]
            + [f"v{i + 1}" for i in range(n)]
            + [f"lam{i + 1}" for i in range(k)]
            + ["energy", "psi_max"]
        )

    def write_csv(self, out: TextIO) -> None:
        out.write(",".join(self.csv_header()) + "\n")
        for i in range(self.times.size):
            row = [self.times[i], *self.q[i], *self.v[i], *self.multipliers[i], self.energy[i], self.psi_max[i]]
            out.write(",".join(fmt17(x + 0.0) for x in row) + "\n")

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _energy_fast(sys: LagrangianSystem, q: np.ndarray, v: np.ndarray) -> float:
    if sys.is_mechanical:
        return float(0.5 * v @ (np.asarray(sys.metric(q)) @ v) + float(sys.potential_value(q)))
    return float(energy_qv(sys, q, v))


def _stabilize(sys: LagrangianSystem, cs: ConstraintSet, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Minimal W-metric velocity correction back onto ψ(q, ·) = 0."""
    W = np.asarray(sys.metric(q)) if sys.is_mechanical else derivatives(sys, q, v).W
    for _ in range(1 if cs.linear else 20):
        psi, A, _ = _linear_parts(cs, q, v)
        if not psi.size or np.max(np.abs(psi)) == 0.0:
            break
        Winv_At = np.linalg.solve(W, A.T)
        v = v - Winv_At @ np.linalg.solve(A @ Winv_At, psi)
        if np.max(np.abs(psi)) < 1e-15:
            break
    return v


def integrate(
    sys: LagrangianSystem,
    cs: ConstraintSet,
    s0: State,
    dt: float,
    steps: int,
    stabilize: bool = True,
    tol: float = 1e-8,
) -> Trajectory:
    """Classical RK4 on (q, v) with optional post-step velocity projection."""
    sys.check_state(s0)
    require_on_N(cs, s0, tol)
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if not dt > 0:
        raise ValueError("dt must be positive")
    n, k = sys.n, cs.k
    qs = np.empty((steps + 1, n))
    vs = np.empty((steps + 1, n))
    lams = np.empty((steps + 1, k))
    es = np.empty(steps + 1)
    ps = np.empty(steps + 1)
    q, v = s0.q.copy(), s0.v.copy()

    def accel(qq: np.ndarray, vv: np.ndarray) -> ConstrainedField:
        return _solve_field(sys, cs, qq, vv)

    def record(i: int, qq: np.ndarray, vv: np.ndarray, f: ConstrainedField) -> None:
        qs[i], vs[i], lams[i] = qq, vv, f.multipliers
        es[i] = _energy_fast(sys, qq, vv)
        psi = np.asarray(cs.psi(qq, vv), dtype=float)
        ps[i] = float(np.max(np.abs(psi))) if psi.size else 0.0

    step = 0
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            f1 = accel(q, v)
            record(0, q, v, f1)
            for step in range(1, steps + 1):
                k1q, k1v = v, f1.acceleration
                k2q = v + 0.5 * dt * k1v
                k2v = accel(q + 0.5 * dt * k1q, k2q).acceleration
                k3q = v + 0.5 * dt * k2v
                k3v = accel(q + 0.5 * dt * k2q, k3q).acceleration
                k4q = v + dt * k3v
                k4v = accel(q + dt * k3q, k4q).acceleration
                q = q + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
                v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
                if stabilize and k:
                    v = _stabilize(sys, cs, q, v)
                if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
                    raise FloatingPointError("non-finite state")
                f1 = accel(q, v)
                record(step, q, v, f1)
    except (ArithmeticError, np.linalg.LinAlgError, NHMechError, ValueError) as exc:
        raise NumericalError(f"{type(exc).__name__}: {exc}", step) from exc
    return Trajectory(np.arange(steps + 1) * dt, qs, vs, lams, es, ps)


def verify_motion_equation(
    sys: LagrangianSystem,
    cs: ConstraintSet,
    s: State,
    tol: float = 1e-9,
    field: ConstrainedField | None = None,
) -> CheckReport:
    """Residual one-form ι_Γω_L − dE_L against F_L, tangency to N, and SODE check.

    ``field`` overrides the computed field (used for negative controls).
    """
    sys.check_state(s)
    require_on_N(cs, s)
    n = sys.n
    f = constrained_field(sys, cs, s) if field is None else field
    gamma = np.concatenate([s.v, f.acceleration])
    d = derivatives(sys, s.q, s.v, fast=False)
    omega = two_form_matrix(d)
    form = omega.T @ gamma - energy_differential(sys, s)
    FL = f_l_space(cs, s)
    pairing = float(np.max(np.abs(FL.basis @ form))) if FL.dim else 0.0
    cd = constraint_derivatives(cs, s.q, s.v)
    tangency = float(np.max(np.abs(cd.dq @ s.v + cd.dv @ f.acceleration))) if cs.k else 0.0
    sode = float(np.max(np.abs(gamma[:n] - s.v)))
    worst = max(pairing, tangency, sode)
    return CheckReport.from_residuals(
        "motion_equation",
        [worst],
        tol,
        details=[{"q": s.q.tolist(), "v": s.v.tolist(), "pairing": pairing, "tangency": tangency, "sode": sode}],
        notes={"pairing_FL": pairing, "tangency_N": tangency, "sode": sode},
    )


def hamiltonian_field(sys: LagrangianSystem, cs: ConstraintSet, ph: PhasePoint, tol: float = 1e-8) -> HamiltonianField:
    """Constrained Hamilton equations for mechanical systems with linear constraints."""
    if not sys.is_mechanical:
        raise UnsupportedOperationError("Hamiltonian field requires a mechanical-type Lagrangian")
    if cs.k and not (cs.linear and cs.coeff is not None):
        raise UnsupportedOperationError("Hamiltonian field supports linear constraints only")
    q, p = ph.q, ph.p
    n = sys.n
    qdot = np.asarray(inverse_metric_apply(sys, q, p), dtype=float)
    Hq = np.asarray(dc.gradient(lambda x: hamiltonian_qp(sys, x, p), q), dtype=float)
    if cs.k == 0:
        return HamiltonianField(qdot, -Hq, np.zeros(0))
    A = np.asarray(cs.coeff(q), dtype=float).reshape(cs.k, n)
    Psi = A @ qdot
    off = float(np.max(np.abs(Psi)))
    if off > tol:
        raise DomainError(f"phase point is off the constrained momentum submanifold (max |Ψ| = {off:.3e})", off)

    def Psi_of_q(x: Any) -> Any:
        return cs.coeff(x) @ inverse_metric_apply(sys, x, p)

    dPsi_q = np.asarray(dc.jvp(Psi_of_q, q, qdot), dtype=float)
    M = np.asarray(sys.metric(q), dtype=float)
    Minv_At = np.linalg.solve(M, A.T)
    S = A @ Minv_At
    beta = np.linalg.solve(S, -dPsi_q + Minv_At.T @ Hq)
    return HamiltonianField(qdot, -Hq + A.T @ beta, beta)


def _tangent_lift(generator: Any, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.concatenate([dc.real_part(generator(q)), dc.real_part(dc.jvp(generator, q, v))])


def bates_sniatycki_check(
    sys: LagrangianSystem, cs: ConstraintSet, action: Any, s: State, tol: float = 1e-9
) -> CheckReport:
    """Γ_{L,N} satisfies ω_L(Γ, u) = dE_L(u) for u in 𝒰 = ℋ ∩ (𝒱 ∩ F_L)^⊥."""
    sys.check_state(s)
    require_on_N(cs, s)
    n = sys.n
    f = constrained_field(sys, cs, s)
    gamma = np.concatenate([s.v, f.acceleration])
    d = derivatives(sys, s.q, s.v, fast=False)
    omega = two_form_matrix(d)
    TN = tangent_space_N(cs, s)
    FL = f_l_space(cs, s)
    H = TN.intersect(FL)
    gens = list(getattr(action, "generators", []) or [])
    V = Subspace.span([_tangent_lift(g, s.q, s.v) for g in gens], 2 * n) if gens else Subspace.zero(2 * n)
    VF = V.intersect(FL)
    U = H.intersect(dc.symplectic_orthogonal(omega, VF)) if VF.dim else H
    form = omega.T @ gamma - energy_differential(sys, s)
    res = float(np.max(np.abs(U.basis @ form))) if U.dim else 0.0
    return CheckReport.from_residuals(
        "bates_sniatycki",
        [res],
        tol,
        details=[{"q": s.q.tolist(), "v": s.v.tolist(), "residual": res}],
        notes={"dim_U": U.dim, "dim_H": H.dim, "dim_V_cap_FL": VF.dim},
    )
