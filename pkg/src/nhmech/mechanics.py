"""Lagrangian and Hamiltonian structures on TQ and T*Q."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import diffcalc as dc
from .diffcalc import Dual, SmoothMap
from .errors import DimensionError, RegularityError, UnsupportedOperationError

REGULARITY_COND_LIMIT = 1e12

Map = Callable[..., Any]


@dataclass(frozen=True)
class State:
    """A point (q, v) of TQ."""

    q: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        q = np.asarray(self.q, dtype=float).ravel()
        v = np.asarray(self.v, dtype=float).ravel()
        if q.shape != v.shape:
            raise DimensionError(f"q has {q.size} entries but v has {v.size}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.q, self.v])

    @classmethod
    def from_stacked(cls, z: Any) -> "State":
        z = np.asarray(z, dtype=float)
        n = z.size // 2
        return cls(z[:n], z[n:])


@dataclass(frozen=True)
class PhasePoint:
    """A point (q, p) of T*Q."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self) -> None:
        q = np.asarray(self.q, dtype=float).ravel()
        p = np.asarray(self.p, dtype=float).ravel()
        if q.shape != p.shape:
            raise DimensionError(f"q has {q.size} entries but p has {p.size}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class LagrangianSystem:
    """Configuration dimension ``n`` and a Lagrangian ``lagrangian(q, v)``.

    ``metric`` and ``potential`` are optional mechanical-type data. When
    present the Lagrangian must equal ``½ vᵀ M(q) v − V(q)``; use
    :meth:`mechanical` to build it that way.
    """

    n: int
    lagrangian: Map
    metric: Map | None = None
    potential: Map | None = None
    name: str = ""

    @classmethod
    def mechanical(cls, n: int, metric: Map, potential: Map | None = None, name: str = "") -> "LagrangianSystem":
        def lagrangian(q: Any, v: Any) -> Any:
            kinetic = 0.5 * (v @ (metric(q) @ v))
            return kinetic - potential(q) if potential is not None else kinetic

        return cls(n, lagrangian, metric, potential, name)

    @property
    def is_mechanical(self) -> bool:
        return self.metric is not None

    @property
    def L(self) -> SmoothMap:
        """The Lagrangian as a map on the stacked state (q, v)."""
        n = self.n
        return SmoothMap(2 * n, 1, lambda z: self.lagrangian(z[:n], z[n:]), name=self.name or "L")

    def potential_value(self, q: Any) -> Any:
        return 0.0 if self.potential is None else self.potential(q)

    def check_state(self, s: State) -> None:
        if s.q.size != self.n:
            raise DimensionError(f"{self.name or 'system'} has n={self.n}, state has {s.q.size}")


@dataclass(frozen=True)
class LagrangianDerivatives:
    """First and second derivatives of L at a state."""

    p: np.ndarray  # ∂L/∂v
    dq: np.ndarray  # ∂L/∂q
    W: np.ndarray  # ∂²L/∂v∂v
    Wvq: np.ndarray  # [i, j] = ∂²L/∂v_i ∂q_j


def derivatives(sys: LagrangianSystem, q: Any, v: Any, fast: bool = True) -> LagrangianDerivatives:
    """Gradient and Hessian blocks of L at (q, v).

    With ``fast`` and mechanical data on float input, only first derivatives
    of the metric and potential are taken; otherwise the full Hessian of L
    comes from one nested dual evaluation.
    """
    n = sys.n
    plain = not isinstance(q, Dual) and not isinstance(v, Dual)
    if fast and plain and sys.is_mechanical:
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        M, dM = dc.value_and_jacobian(sys.metric, q)
        M = np.asarray(M, dtype=float)
        dV = np.zeros(n) if sys.potential is None else np.asarray(dc.gradient(sys.potential, q), dtype=float)
        Wvq = np.einsum("ijk,j->ik", dM, v)
        dq = 0.5 * np.einsum("ijk,i,j->k", dM, v, v) - dV
        return LagrangianDerivatives(M @ v, dq, M, Wvq)
    z = dc.concatenate([q, v])
    g, H = dc.gradient_and_hessian(sys.L.fn, z)
    return LagrangianDerivatives(g[n:], g[:n], H[n:, n:], H[n:, :n])


def require_regular(W: np.ndarray, where: str = "") -> None:
    W = dc.real_part(W)
    cond = np.linalg.cond(W) if W.size else 1.0
    if not np.isfinite(cond) or cond > REGULARITY_COND_LIMIT:
        raise RegularityError(f"velocity Hessian is singular{where} (condition number {cond:.3e})")


def momentum_qv(sys: LagrangianSystem, q: Any, v: Any) -> Any:
    """∂L/∂v at (q, v); differentiable in q and v."""
    return dc.gradient(lambda w: sys.lagrangian(q, w), v)


def energy_qv(sys: LagrangianSystem, q: Any, v: Any) -> Any:
    """E_L = v·∂L/∂v − L at (q, v); differentiable in q and v."""
    return v @ momentum_qv(sys, q, v) - sys.lagrangian(q, v)


def energy(sys: LagrangianSystem, s: State) -> float:
    sys.check_state(s)
    return float(energy_qv(sys, s.q, s.v))


def legendre(sys: LagrangianSystem, s: State) -> PhasePoint:
    sys.check_state(s)
    return PhasePoint(s.q, dc.real_part(momentum_qv(sys, s.q, s.v)))


def _require_mechanical(sys: LagrangianSystem) -> None:
    if not sys.is_mechanical:
        raise UnsupportedOperationError("Hamiltonian-side operations need mechanical-type data (metric, potential)")


def inverse_metric_apply(sys: LagrangianSystem, q: Any, p: Any) -> Any:
    """M(q)⁻¹ p, differentiable in q and p."""
    _require_mechanical(sys)
    M = sys.metric(q)
    require_regular(M, " (metric)")
    return dc.solve(M, p)


def legendre_inverse(sys: LagrangianSystem, ph: PhasePoint) -> State:
    if ph.q.size != sys.n:
        raise DimensionError(f"system has n={sys.n}, phase point has {ph.q.size}")
    return State(ph.q, dc.real_part(inverse_metric_apply(sys, ph.q, ph.p)))


def hamiltonian_qp(sys: LagrangianSystem, q: Any, p: Any) -> Any:
    """H = ½ pᵀ M(q)⁻¹ p + V(q), differentiable in q and p."""
    return 0.5 * (p @ inverse_metric_apply(sys, q, p)) + sys.potential_value(q)


def hamiltonian(sys: LagrangianSystem, ph: PhasePoint) -> float:
    if ph.q.size != sys.n:
        raise DimensionError(f"system has n={sys.n}, phase point has {ph.q.size}")
    return float(hamiltonian_qp(sys, ph.q, ph.p))


def two_form_matrix(d: LagrangianDerivatives) -> np.ndarray:
    """Matrix A of ω_L = dqⁱ∧dpᵢ so that ω_L(U, V) = Uᵀ A V."""
    B = d.Wvq - d.Wvq.T
    n = B.shape[0]
    return np.block([[B, d.W], [-d.W, np.zeros((n, n))]])


def lagrangian_two_form(sys: LagrangianSystem, s: State) -> np.ndarray:
    sys.check_state(s)
    return two_form_matrix(derivatives(sys, s.q, s.v, fast=False))


def energy_differential(sys: LagrangianSystem, s: State) -> np.ndarray:
    """dE_L at (q, v) as a covector on the stacked state space."""
    n = sys.n
    return np.asarray(dc.gradient(lambda z: energy_qv(sys, z[:n], z[n:]), s.stacked), dtype=float)


def unconstrained_field(sys: LagrangianSystem, s: State) -> np.ndarray:
    """Euler-Lagrange field (v, a) with a = W⁻¹(∂L/∂q − ∂²L/∂v∂q · v)."""
    sys.check_state(s)
    d = derivatives(sys, s.q, s.v)
    require_regular(d.W)
    a = np.linalg.solve(d.W, d.dq - d.Wvq @ s.v)
    return np.concatenate([s.v, a])
