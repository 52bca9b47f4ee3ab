"""Symmetry: invariance, case classification, momentum, Chaplygin reduction and reconstruction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import diffcalc as dc
from .constraints import (
    ConstraintSet,
    chow_flag,
    constraint_distribution,
    f_l_space,
    project_velocity_to_N,
    reaction_basis,
    reaction_rows,
    require_on_N,
    tangent_space_N,
)
from .diffcalc import Subspace
from .dynamics import Trajectory, constrained_field
from .errors import ClassificationError, ConfigurationError
from .hamjac import (
    DEFAULT_TOL,
    HJCandidate,
    _grid,
    check_hj_condition,
    check_in_N,
    check_nonlinear_pullback,
    exterior_derivative_matrix,
)
from .mechanics import LagrangianSystem, State, derivatives, energy_qv, momentum_qv
from .report import CheckReport

VectorField = Callable[[Any], Any]

CASES = ("pure_kinematic", "horizontal", "general")


@dataclass(frozen=True)
class QuotientData:
    """Chart data for Q → Q̄.

    ``transport(q, w)`` carries a vector at ``section(project(q))`` to T_qQ by
    the group element relating the two points; identity for translations.
    ``hlift(q, vbar)`` is the horizontal lift of a connection whose horizontal
    space is the constraint distribution (Chaplygin case only).
    """

    dim_qbar: int
    project: Callable[[Any], Any]
    section: Callable[[Any], Any]
    hlift: Callable[[Any, Any], Any] | None = None
    transport: Callable[[Any, Any], Any] | None = None


@dataclass(frozen=True)
class GroupActionSpec:
    dim_g: int
    generators: Sequence[VectorField]
    structure_constants: np.ndarray | None = None
    quotient: QuotientData | None = None

    def generator_matrix(self, q: Any) -> np.ndarray:
        """Columns ξ_i(q)."""
        n = np.size(q)
        if self.dim_g == 0:
            return np.zeros((n, 0))
        return np.stack([np.asarray(dc.real_part(g(q)), dtype=float) for g in self.generators], axis=1)

    def combination(self, xi: Any) -> VectorField:
        """Vector field Σ ξⁱ(q) ξ_i(q) for constant or configuration-dependent coefficients."""
        gens = list(self.generators)

        def field(q: Any) -> Any:
            coeffs = xi(q) if callable(xi) else np.asarray(xi, dtype=float)
            total = 0.0 * q
            for i, g in enumerate(gens):
                total = total + coeffs[i] * g(q)
            return total

        return field


@dataclass(frozen=True)
class Classification:
    case: str
    dim_intersection: int
    dim_vertical: int
    dim_h: int
    dim_sum: int
    dim_tn: int


@dataclass(frozen=True)
class ReducedSystem:
    """Reduced data. ``base`` and ``gyro`` are set for Chaplygin reductions only."""

    sys: LagrangianSystem
    cs: ConstraintSet
    action: GroupActionSpec
    base: LagrangianSystem | None = None
    gyro: Callable[[Any, Any], np.ndarray] | None = None
    notes: dict[str, Any] = field(default_factory=dict)

    def forced_acceleration(self, qbar: Any, vbar: Any) -> np.ndarray:
        """Acceleration of d/dt ∂L*/∂v̄ − ∂L*/∂q̄ = ᾱ."""
        if self.base is None or self.gyro is None:
            raise ConfigurationError("forced reduced dynamics exist only for Chaplygin reductions")
        qbar = np.asarray(qbar, dtype=float)
        vbar = np.asarray(vbar, dtype=float)
        d = derivatives(self.base, qbar, vbar)
        return np.linalg.solve(d.W, d.dq - d.Wvq @ vbar + self.gyro(qbar, vbar))


def _lift(g: VectorField, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.concatenate([dc.real_part(g(q)), dc.real_part(dc.jvp(g, q, v))])


def check_invariance(
    sys: LagrangianSystem, cs: ConstraintSet, action: GroupActionSpec, samples: Sequence[State], tol: float = DEFAULT_TOL
) -> CheckReport:
    """ξᶜ(L) = 0 and ξᶜ(ψ) = 0 on N for every generator, at the samples."""
    n = sys.n
    Lz = sys.L.fn
    per_gen = []
    res = []
    details = []
    for i, g in enumerate(action.generators):
        worst_L = worst_psi = 0.0
        for s in samples:
            lift = _lift(g, s.q, s.v)
            z = s.stacked
            dL = float(dc.real_part(dc.jvp(Lz, z, lift)))
            worst_L = max(worst_L, abs(dL))
            if cs.k:
                dpsi = dc.jvp(lambda w: cs.psi(w[:n], w[n:]), z, lift)
                worst_psi = max(worst_psi, float(np.max(np.abs(dc.real_part(dpsi)))))
        per_gen.append({"generator": i, "lagrangian": worst_L, "constraints": worst_psi, "pass": max(worst_L, worst_psi) <= tol})
        res.append(max(worst_L, worst_psi))
        details.append(per_gen[-1])
    return CheckReport.from_residuals(
        "invariance", res, tol, {"kind": "states", "count": len(samples)}, details, {"per_generator": per_gen}
    )


def vertical_space(action: GroupActionSpec, s: State) -> Subspace:
    """Span of tangent-lifted generators at s inside R^{2n}."""
    n = s.q.size
    if action.dim_g == 0:
        return Subspace.zero(2 * n)
    return Subspace.span([_lift(g, s.q, s.v) for g in action.generators], 2 * n)


def classify_case(
    sys: LagrangianSystem, cs: ConstraintSet, action: GroupActionSpec, s: State, tol: float = dc.DEFAULT_RANK_TOL
) -> Classification:
    """Relative position of 𝒱_N and ℋ = TN ∩ F_L at s."""
    require_on_N(cs, s)
    TN = tangent_space_N(cs, s, tol)
    VN = vertical_space(action, s).intersect(TN)
    H = TN.intersect(f_l_space(cs, s, tol))
    inter = VN.intersect(H)
    total = VN + H
    if VN.dim == 0 or (inter.dim == 0 and total.dim == TN.dim):
        case = "pure_kinematic"
    elif inter.dim == VN.dim:
        case = "horizontal"
    else:
        case = "general"
    return Classification(case, inter.dim, VN.dim, H.dim, total.dim, TN.dim)


def momentum_subspace(
    sys: LagrangianSystem,
    cs: ConstraintSet,
    action: GroupActionSpec,
    q: Any,
    velocities: Sequence[Any] | None = None,
    rng: np.random.Generator | None = None,
    samples: int = 5,
) -> Subspace:
    """𝔤^q: coefficient vectors ξ whose ξ_Q(q) is annihilated by the reactions at sampled v."""
    q = np.asarray(q, dtype=float)
    if action.dim_g == 0:
        return Subspace.zero(0)
    G = action.generator_matrix(q)
    if cs.k == 0:
        return Subspace.full(action.dim_g)
    if velocities is None:
        rng = np.random.default_rng(0) if rng is None else rng
        velocities = [project_velocity_to_N(cs, q, rng.standard_normal(q.size)) for _ in range(samples)]
    rows = [np.asarray(reaction_rows(cs, q, np.asarray(v, dtype=float)), dtype=float).reshape(cs.k, q.size) @ G for v in velocities]
    return Subspace.kernel(np.vstack(rows), action.dim_g)


def nonholonomic_momentum(sys: LagrangianSystem, action: GroupActionSpec, xi: Any, s: State) -> float:
    """J = ∂L/∂v · ξ_Q(q) for a constant coefficient vector or a section q ↦ ξ(q)."""
    field_ = action.combination(xi)
    return float(dc.real_part(momentum_qv(sys, s.q, s.v)) @ dc.real_part(field_(s.q)))


def noether_check(
    sys: LagrangianSystem,
    cs: ConstraintSet,
    action: GroupActionSpec,
    xi_section: Any,
    traj: Trajectory,
    tol: float = 1e-6,
) -> CheckReport:
    """Compare d/dt J along a trajectory (five-point differences) with Θᶜ(L)."""
    field_ = action.combination(xi_section)
    Lz = sys.L.fn
    states = traj.states
    J = np.array([nonholonomic_momentum(sys, action, xi_section, s) for s in states])
    theta_c = []
    in_gq = []
    for s in states:
        lift = _lift(field_, s.q, s.v)
        theta_c.append(float(dc.real_part(dc.jvp(Lz, s.stacked, lift))))
        if cs.k:
            rows = reaction_basis(cs, s)
            in_gq.append(float(np.max(np.abs(rows @ dc.real_part(field_(s.q))))))
    theta_c = np.asarray(theta_c)
    if len(states) < 5:
        raise ValueError("the momentum-rate check needs at least five trajectory samples")
    h = float(traj.times[1] - traj.times[0])
    dJ = (-J[4:] + 8 * J[3:-1] - 8 * J[1:-3] + J[:-4]) / (12 * h)
    res = np.abs(dJ - theta_c[2:-2])
    details = [{"t": float(traj.times[i + 2]), "dJdt": float(dJ[i]), "theta_c_L": float(theta_c[i + 2]), "residual": float(res[i])} for i in range(res.size)]
    return CheckReport.from_residuals(
        "noether",
        res.tolist(),
        tol,
        {"kind": "trajectory", "count": int(res.size), "dt": h},
        details,
        {
            "delta_J": float(J[-1] - J[0]),
            "max_abs_theta_c_L": float(np.max(np.abs(theta_c))),
            "max_reaction_pairing": max(in_gq, default=0.0),
        },
    )


# ---------------------------------------------------------------------------
# Chaplygin reduction


def _require_quotient(action: GroupActionSpec | None, need_hlift: bool = False) -> QuotientData:
    if action is None or action.quotient is None:
        raise ConfigurationError("the group action has no quotient data")
    if need_hlift and action.quotient.hlift is None:
        raise ConfigurationError("the quotient data has no horizontal lift")
    return action.quotient


def lift_matrix(action: GroupActionSpec, q: Any) -> Any:
    """Matrix H(q) of the (linear) horizontal lift v̄ ↦ hlift(q, v̄)."""
    quo = _require_quotient(action, True)
    return dc.jacobian(lambda vb: quo.hlift(q, vb), np.zeros(quo.dim_qbar))


class _ChaplyginForm:
    """Gyroscopic one-form computed on N in coordinates z = (q, v̄), v = hlift(q, v̄)."""

    def __init__(self, sys: LagrangianSystem, cs: ConstraintSet, action: GroupActionSpec):
        self.sys, self.cs, self.action = sys, cs, action
        self.quo = _require_quotient(action, True)
        self.n = sys.n
        self.nb = self.quo.dim_qbar

    def beta(self, z: Any) -> Any:
        """j*θ_L, the Liouville one-form p·dq pulled back to N."""
        q, vb = z[: self.n], z[self.n :]
        p = momentum_qv(self.sys, q, self.quo.hlift(q, vb))
        return dc.concatenate([p, np.zeros(self.nb)])

    def h_beta(self, z: Any) -> Any:
        """h*β: the horizontal projection composed with β."""
        q, vb = z[: self.n], z[self.n :]
        p = momentum_qv(self.sys, q, self.quo.hlift(q, vb))
        P = dc.jacobian(self.quo.project, q)
        H = lift_matrix(self.action, q)
        return dc.concatenate([P.T @ (H.T @ p), np.zeros(self.nb)])

    def horizontal(self, z: np.ndarray, w: np.ndarray) -> np.ndarray:
        q = z[: self.n]
        P = np.asarray(dc.jacobian(self.quo.project, q), dtype=float)
        H = np.asarray(lift_matrix(self.action, q), dtype=float)
        return np.concatenate([H @ (P @ w[: self.n]), w[self.n :]])

    def field(self, z: np.ndarray) -> np.ndarray:
        q, vb = z[: self.n], z[self.n :]
        v = np.asarray(dc.real_part(self.quo.hlift(q, vb)), dtype=float)
        a = constrained_field(self.sys, self.cs, State(q, v)).acceleration
        Pv_rate = np.asarray(dc.real_part(dc.jvp(lambda x: dc.jacobian(self.quo.project, x) @ v, q, v)), dtype=float)
        P = np.asarray(dc.jacobian(self.quo.project, q), dtype=float)
        return np.concatenate([v, Pv_rate + P @ a])

    def alpha_tilde(self, z: np.ndarray) -> np.ndarray:
        """α̃(Y) = dβ(hΓ, hY) − d(h*β)(Γ, Y) as a covector on z-space."""
        gamma = self.field(z)
        dbeta = exterior_derivative_matrix(self.beta, z)
        dhbeta = exterior_derivative_matrix(self.h_beta, z)
        hgamma = self.horizontal(z, gamma)
        dim = z.size
        hY = np.stack([self.horizontal(z, e) for e in np.eye(dim)], axis=1)
        return hgamma @ dbeta @ hY - gamma @ dhbeta

    def reduced_force(self, qbar: Any, vbar: Any) -> tuple[np.ndarray, np.ndarray]:
        """ᾱ(q̄, v̄) on Q̄ and the v̄-components of α̃ (which must vanish)."""
        q = np.asarray(dc.real_part(self.quo.section(np.asarray(qbar, dtype=float))), dtype=float)
        z = np.concatenate([q, np.asarray(vbar, dtype=float)])
        at = self.alpha_tilde(z)
        H = np.asarray(lift_matrix(self.action, q), dtype=float)
        # Sign: the reduced equation is ι_Γ̄ ω_{L*} = dE_{L*} − ᾱ, i.e. ᾱ is the
        # force in d/dt ∂L*/∂v̄ − ∂L*/∂q̄ = ᾱ; this equals −α̃ evaluated with θ_L.
        return -(H.T @ at[: self.n]), at[self.n :]


def chaplygin_reduce(
    sys: LagrangianSystem,
    cs: ConstraintSet,
    action: GroupActionSpec,
    samples: Sequence[State] | None = None,
) -> ReducedSystem:
    """L*(q̄, v̄) = L(θ(q̄), hlift(θ(q̄), v̄)) and the gyroscopic force ᾱ."""
    quo = _require_quotient(action, True)
    if samples:
        for s in samples:
            c = classify_case(sys, cs, action, s)
            if c.case != "pure_kinematic":
                raise ClassificationError(f"Chaplygin reduction needs the pure kinematic case, found {c.case}")

    def reduced_lagrangian(qb: Any, vb: Any) -> Any:
        q = quo.section(qb)
        return sys.lagrangian(q, quo.hlift(q, vb))

    def reduced_metric(qb: Any) -> Any:
        q = quo.section(qb)
        H = lift_matrix(action, q)
        return H.T @ (sys.metric(q) @ H)

    def reduced_potential(qb: Any) -> Any:
        return sys.potential(quo.section(qb))

    metric = reduced_metric if sys.is_mechanical else None
    potential = reduced_potential if sys.is_mechanical and sys.potential is not None else None

    base = LagrangianSystem(quo.dim_qbar, reduced_lagrangian, metric, potential, name=f"{sys.name}_reduced")
    form = _ChaplyginForm(sys, cs, action)

    def gyro(qb: Any, vb: Any) -> np.ndarray:
        return form.reduced_force(qb, vb)[0]

    return ReducedSystem(sys, cs, action, base, gyro, {"form": form})


def reduce_general(sys: LagrangianSystem, cs: ConstraintSet, action: GroupActionSpec) -> ReducedSystem:
    """Reduced data for the general case; conditions are evaluated at section points."""
    _require_quotient(action)
    return ReducedSystem(sys, cs, action)


def reduced_energy(red: ReducedSystem, qbar: Any, v: Any) -> float:
    """Ē_L at the reduced state represented by v ∈ T_{θ(q̄)}Q."""
    quo = _require_quotient(red.action)
    q = np.asarray(dc.real_part(quo.section(np.asarray(qbar, dtype=float))), dtype=float)
    return float(dc.real_part(energy_qv(red.sys, q, np.asarray(v, dtype=float))))


def _fiber_closedness(base: LagrangianSystem, cand: HJCandidate, q: np.ndarray) -> float:
    form = lambda x: momentum_qv(base, x, cand(x))  # noqa: E731
    M = exterior_derivative_matrix(form, q)
    return float(np.max(np.abs(M))) if M.size else 0.0


def check_reduced_hj(
    red: ReducedSystem,
    cand: HJCandidate,
    grid: Any,
    variant: str = "chaplygin",
    tol: float = DEFAULT_TOL,
    sign: str | None = None,
) -> CheckReport:
    """Reduced Hamilton-Jacobi conditions.

    chaplygin: d(E*∘X̄) = ±X̄*ᾱ; both signs are evaluated and reported, and
    with ``sign=None`` the better one decides the verdict.
    pure_kinematic: d(E*∘X̄) = −X̄*ᾱ together with closedness of 𝔽L*∘X̄.
    general: X̄ maps q̄ to a velocity at θ(q̄); the condition is that
    d(E∘X) annihilates D + V_Q at section points, the pullback of the
    reduced reaction space.
    """
    pts, spec = _grid(grid)
    if variant in ("chaplygin", "pure_kinematic"):
        if red.base is None or red.gyro is None:
            raise ConfigurationError(f"variant {variant!r} needs a Chaplygin reduction")
        base = red.base
        g = lambda x: energy_qv(base, x, cand(x))  # noqa: E731
        r_minus, r_plus, closed, details = [], [], [], []
        for qb in pts:
            dg = np.asarray(dc.real_part(dc.gradient(g, qb)), dtype=float)
            alpha = red.gyro(qb, np.asarray(dc.real_part(cand(qb)), dtype=float))
            m = float(np.max(np.abs(dg + alpha)))
            p = float(np.max(np.abs(dg - alpha)))
            c = _fiber_closedness(base, cand, qb)
            r_minus.append(m)
            r_plus.append(p)
            closed.append(c)
            details.append({"q": qb.tolist(), "minus": m, "plus": p, "closedness": c})
        worst_minus, worst_plus = max(r_minus, default=0.0), max(r_plus, default=0.0)
        satisfied = [name for name, r in (("minus", worst_minus), ("plus", worst_plus)) if r <= tol]
        notes = {
            "residual_minus": worst_minus,
            "residual_plus": worst_plus,
            "satisfied_signs": satisfied,
            "closedness": max(closed, default=0.0),
        }
        if variant == "pure_kinematic":
            res = [max(a, b) for a, b in zip(r_minus, closed)]
            for d, r in zip(details, res):
                d["residual"] = r
            return CheckReport.from_residuals("reduced_hj_pure_kinematic", res, tol, spec, details, notes)
        if sign is None:
            chosen = r_minus if worst_minus <= worst_plus else r_plus
            notes["sign"] = "minus" if worst_minus <= worst_plus else "plus"
        elif sign in ("minus", "plus"):
            chosen = r_minus if sign == "minus" else r_plus
            notes["sign"] = sign
        else:
            raise ValueError("sign must be 'minus', 'plus' or None")
        for d, r in zip(details, chosen):
            d["residual"] = r
        return CheckReport.from_residuals("reduced_hj_chaplygin", chosen, tol, spec, details, notes)
    if variant != "general":
        raise ValueError(f"unknown variant {variant!r}")
    quo = _require_quotient(red.action)
    X = reconstruct(red.action, cand, mode="general")
    sys = red.sys
    g = lambda x: energy_qv(sys, x, X(x))  # noqa: E731
    res, details = [], []
    full_count = 0
    for qb in pts:
        q = np.asarray(dc.real_part(quo.section(qb)), dtype=float)
        v = np.asarray(dc.real_part(X(q)), dtype=float)
        D = constraint_distribution(red.cs, State(q, v))
        V = Subspace.span(list(red.action.generator_matrix(q).T), q.size) if red.action.dim_g else Subspace.zero(q.size)
        span = D + V
        full_count += int(span.dim == q.size)
        dg = np.asarray(dc.real_part(dc.gradient(g, q)), dtype=float)
        r = float(np.max(np.abs(span.basis @ dg))) if span.dim else 0.0
        res.append(r)
        details.append({"qbar": qb.tolist(), "residual": r, "dim_D_plus_V": span.dim})
    notes = {"reduced_reactions_vanish_at": full_count, "points": len(pts)}
    return CheckReport.from_residuals("reduced_hj_general", res, tol, spec, details, notes)


def reconstruct(action: GroupActionSpec, cand_reduced: HJCandidate, mode: str = "chaplygin") -> HJCandidate:
    """G-invariant field on Q from a reduced candidate.

    chaplygin: X(q) = hlift(q, X̄(ρ(q))). general: X̄(q̄) is a velocity at
    θ(q̄) carried to q by ``transport`` (identity when absent).
    """
    quo = _require_quotient(action, need_hlift=(mode == "chaplygin"))
    if mode == "chaplygin":
        fn = lambda q: quo.hlift(q, cand_reduced(quo.project(q)))  # noqa: E731
    elif mode == "general":
        if quo.transport is None:
            fn = lambda q: cand_reduced(quo.project(q))  # noqa: E731
        else:
            fn = lambda q: quo.transport(q, cand_reduced(quo.project(q)))  # noqa: E731
    else:
        raise ValueError(f"unknown reconstruction mode {mode!r}")
    return HJCandidate("vector_field", fn, f"reconstructed({cand_reduced.label})")


def check_candidate_invariance(action: GroupActionSpec, cand: HJCandidate, grid: Any, tol: float = DEFAULT_TOL, generators: Sequence[VectorField] | None = None) -> CheckReport:
    """[ξ_Q, X] = 0 for every generator (the pushforward of X along the flow is X)."""
    pts, spec = _grid(grid)
    gens = list(action.generators if generators is None else generators)
    res, details = [], []
    for q in pts:
        worst = 0.0
        for gen in gens:
            br = dc.real_part(dc.lie_bracket(gen, cand.map, q))
            worst = max(worst, float(np.max(np.abs(br))))
        res.append(worst)
        details.append({"q": q.tolist(), "residual": worst})
    return CheckReport.from_residuals("candidate_invariance", res, tol, spec, details)


def isotropy_generators(action: GroupActionSpec, mu: Any, tol: float = 1e-10) -> list[VectorField]:
    """Generators spanning 𝔤_μ = {ξ : ad*_ξ μ = 0}; all of 𝔤 when abelian or unspecified."""
    if action.dim_g == 0:
        return []
    if action.structure_constants is None:
        return list(action.generators)
    c = np.asarray(action.structure_constants, dtype=float)
    mu = np.asarray(mu, dtype=float)
    # (ad*_ξ μ)_j = Σ_{i,k} ξ^i c^k_{ij} μ_k with c[i, j, k] = c^k_{ij}
    M = np.einsum("ijk,k->ji", c, mu)
    sub = Subspace.kernel(M, action.dim_g, tol)
    return [action.combination(b) for b in sub.basis]


def check_horizontal_mu(
    sys: LagrangianSystem,
    cs: ConstraintSet,
    action: GroupActionSpec,
    cand: HJCandidate,
    mu: Any,
    grid: Any,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Pre-quotient certificate of a μ-solution in the horizontal case."""
    pts, spec = _grid(grid)
    mu = np.asarray(mu, dtype=float).reshape(action.dim_g)
    if action.dim_g:
        for q in pts[: min(5, len(pts))]:
            v = np.asarray(dc.real_part(cand(q)), dtype=float)
            c = classify_case(sys, cs, action, State(q, v))
            if c.case != "horizontal" and c.dim_vertical > 0:
                raise ClassificationError(
                    f"horizontal-case check needs 𝒱_N ⊆ ℋ; found {c.case} "
                    f"(dim 𝒱_N∩ℋ = {c.dim_intersection}, dim 𝒱_N = {c.dim_vertical})"
                )
    inv = check_candidate_invariance(action, cand, (pts, spec), tol, isotropy_generators(action, mu))
    mom = []
    for q in pts:
        v = np.asarray(dc.real_part(cand(q)), dtype=float)
        p = np.asarray(dc.real_part(momentum_qv(sys, q, v)), dtype=float)
        J = action.generator_matrix(q).T @ p
        mom.append(float(np.max(np.abs(J - mu))) if action.dim_g else 0.0)
    in_n = check_in_N(cand, cs, (pts, spec), tol)
    closed = check_nonlinear_pullback(cand, sys, cs, (pts, spec), tol)
    hj = check_hj_condition(cand, sys, cs, (pts, spec), strong=False, tol=tol)
    parts = {
        "isotropy_invariance": inv.max_residual,
        "momentum_level": max(mom, default=0.0),
        "in_N": in_n.max_residual,
        "closedness": closed.max_residual,
        "hj_weak": hj.max_residual,
    }
    per_point = [[x["residual"] for x in r.details] for r in (inv, in_n, closed, hj)]
    res = [max(vals) for vals in zip(mom, *per_point)]
    return CheckReport.from_residuals("horizontal_mu", res, tol, spec, notes={"components": parts, "mu": mu.tolist()})


# ---------------------------------------------------------------------------
# Bracket-generating property before and after reduction


def projected_generators(action: GroupActionSpec, fields: Sequence[VectorField]) -> list[VectorField]:
    """Fields on Q̄: ξ̄(q̄) = Dρ(θ(q̄)) ξ(θ(q̄))."""
    quo = _require_quotient(action)

    def make(f: VectorField) -> VectorField:
        def projected(qb: Any) -> Any:
            q = quo.section(qb)
            return dc.jvp(quo.project, q, f(q))

        return projected

    return [make(f) for f in fields]


@dataclass(frozen=True)
class ChowTransfer:
    q_level: Any
    reduced_level: Any

    @property
    def agree(self) -> bool:
        return self.q_level.complete == self.reduced_level.complete


def chow_transfer(
    action: GroupActionSpec,
    fields: Sequence[VectorField],
    qbar: Any,
    max_depth: int | None = None,
    tol: float = dc.DEFAULT_RANK_TOL,
) -> ChowTransfer:
    """Completeness of the distribution on Q at θ(q̄) and of its projection on Q̄."""
    quo = _require_quotient(action)
    qbar = np.asarray(qbar, dtype=float)
    q = np.asarray(dc.real_part(quo.section(qbar)), dtype=float)
    upper = chow_flag(fields, q, max_depth, tol)
    lower = chow_flag(projected_generators(action, fields), qbar, max_depth, tol)
    return ChowTransfer(upper, lower)
