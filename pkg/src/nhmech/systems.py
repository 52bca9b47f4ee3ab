"""Registry of built-in example systems with parameters, fixtures and known candidates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from . import diffcalc as dc
from .constraints import ConstraintSet
from .errors import ConfigurationError
from .hamjac import HJCandidate
from .mechanics import LagrangianSystem, State
from .reduction import GroupActionSpec, QuotientData

ORIGINS = ("published", "derived", "direct")


@dataclass(frozen=True)
class Fixture:
    """Expected value with its tolerance and origin: published formula, independent derivation, or direct."""

    value: Any
    tolerance: float
    origin: str
    note: str = ""

    def __post_init__(self) -> None:
        if self.origin not in ORIGINS:
            raise ValueError(f"fixture origin must be one of {ORIGINS}")


@dataclass(frozen=True)
class SystemBundle:
    name: str
    params: dict[str, float]
    sys: LagrangianSystem
    cs: ConstraintSet
    action: GroupActionSpec | None = None
    candidates: dict[str, Callable[..., HJCandidate]] = field(default_factory=dict)
    reduced_candidates: dict[str, Callable[..., HJCandidate]] = field(default_factory=dict)
    fixtures: dict[str, Fixture] = field(default_factory=dict)
    distribution_fields: list[Callable[[Any], Any]] = field(default_factory=list)
    q_box: list[tuple[float, float]] = field(default_factory=list)
    default_state: State | None = None
    has_dynamics: bool = True
    qbar_box: list[tuple[float, float]] = field(default_factory=list)
    momentum_section: Callable[[Any], Any] | None = None

    @property
    def n(self) -> int:
        return self.sys.n


def _params(name: str, given: Mapping[str, Any] | None, defaults: dict[str, float]) -> dict[str, float]:
    out = dict(defaults)
    for key, val in (given or {}).items():
        if key not in defaults:
            raise ConfigurationError(f"system {name!r} has no parameter {key!r} (known: {', '.join(defaults)})")
        try:
            out[key] = float(val)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"parameter {key!r} must be a number, got {val!r}") from exc
    for key, val in out.items():
        if not math.isfinite(val) or val <= 0:
            raise ConfigurationError(f"parameter {key!r} must be positive, got {val}")
    return out


def _translation(axis: int, n: int) -> Callable[[Any], np.ndarray]:
    e = np.zeros(n)
    e[axis] = 1.0
    return lambda q: e


# ---------------------------------------------------------------------------
# Free particle in R³ with ż = y ẋ


def free_particle(params: Mapping[str, Any] | None = None) -> SystemBundle:
    p = _params("free_particle", params, {"m": 1.0})
    m = p["m"]
    sys = LagrangianSystem.mechanical(3, lambda q: m * np.eye(3), name="free_particle")
    z_row = np.array([[0.0, 0.0, 1.0]])
    y_row = np.array([[-1.0, 0.0, 0.0]])
    cs = ConstraintSet.from_coefficients(1, lambda q: z_row + q[1] * y_row, name="zdot_minus_y_xdot")
    quotient = QuotientData(
        dim_qbar=1,
        project=lambda q: dc.stack([q[1]]),
        section=lambda qb: dc.stack([0.0, qb[0], 0.0]),
    )
    action = GroupActionSpec(2, [_translation(0, 3), _translation(2, 3)], np.zeros((2, 2, 2)), quotient)

    def family(c1: float = 1.0, c2: float = 2.0) -> HJCandidate:
        def X(q: Any) -> Any:
            y = q[1]
            s = (1.0 + y * y) ** -0.5
            return dc.stack([c1 * s, c2 + 0.0 * y, c1 * y * s])

        return HJCandidate("vector_field", X, f"hj_family(c1={c1:g}, c2={c2:g})")

    def reduced_family(c1: float = 1.0, c2: float = 2.0) -> HJCandidate:
        """Reduced section: y ↦ velocity (Ā, B̄, yĀ) at the section point θ(y)."""
        full = family(c1, c2)
        return HJCandidate("vector_field", lambda qb: full(quotient.section(qb)), f"reduced_family(c1={c1:g}, c2={c2:g})")

    def energy_level(c1: float = 1.0, c2: float = 2.0) -> float:
        return 0.5 * m * (c1 * c1 + c2 * c2)

    fixtures = {
        "induced_dynamics": Fixture(
            lambda q, c1=1.0, c2=2.0: np.array([c1 / math.sqrt(1 + q[1] ** 2), c2, c1 * q[1] / math.sqrt(1 + q[1] ** 2)]),
            1e-10,
            "published",
            "dynamics generated by the reconstructed family",
        ),
        "reduced_energy": Fixture(
            lambda y, xdot, ydot: 0.5 * m * ((1 + y * y) * xdot * xdot + ydot * ydot), 1e-12, "published"
        ),
        "energy_level": Fixture(energy_level, 1e-12, "derived", "E on the family is constant: m(c1² + c2²)/2"),
        "chow_growth": Fixture([2, 3], 0, "published"),
        "classification": Fixture(("general", 1, 2), 0, "published", "(case, dim V_N ∩ H, dim V_N)"),
        "bracket": Fixture(np.array([0.0, 0.0, -1.0]), 1e-12, "published", "[ξ1, ξ2] = −∂z"),
    }
    fields = [lambda q: dc.stack([1.0, 0.0, q[1]]), _translation(1, 3)]
    return SystemBundle(
        "free_particle",
        p,
        sys,
        cs,
        action,
        {"hj_family": family},
        {"hj_family": reduced_family},
        fixtures,
        fields,
        [(-3.0, 3.0)] * 3,
        State([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
        qbar_box=[(-3.0, 3.0)],
        momentum_section=lambda q: dc.stack([1.0, q[1]]),
    )


# ---------------------------------------------------------------------------
# Free particle with ż = 0 and x-translation symmetry (horizontal case)


def horizontal_particle(params: Mapping[str, Any] | None = None) -> SystemBundle:
    p = _params("horizontal_particle", params, {"m": 1.0})
    m = p["m"]
    sys = LagrangianSystem.mechanical(3, lambda q: m * np.eye(3), name="horizontal_particle")
    coeff = np.array([[0.0, 0.0, 1.0]])
    cs = ConstraintSet.from_coefficients(1, lambda q: coeff, name="zdot")
    quotient = QuotientData(2, lambda q: dc.stack([q[1], q[2]]), lambda qb: dc.stack([0.0, qb[0], qb[1]]))
    action = GroupActionSpec(1, [_translation(0, 3)], None, quotient)

    def constant(vx: float = 1.0, vy: float = 0.5) -> HJCandidate:
        return HJCandidate("vector_field", lambda q: dc.stack([vx + 0.0 * q[0], vy + 0.0 * q[0], 0.0 * q[0]]), f"constant({vx:g}, {vy:g})")

    fixtures = {"momentum": Fixture(lambda vx=1.0: m * vx, 1e-12, "derived", "J = m ẋ for the x-translation")}
    return SystemBundle(
        "horizontal_particle",
        p,
        sys,
        cs,
        action,
        {"constant": constant},
        {},
        fixtures,
        [_translation(0, 3), _translation(1, 3)],
        [(-3.0, 3.0)] * 3,
        State([0.0, 0.0, 0.0], [1.0, 0.5, 0.0]),
        qbar_box=[(-3.0, 3.0)] * 2,
        momentum_section=lambda q: np.array([1.0]),
    )


# ---------------------------------------------------------------------------
# Two-wheeled carriage on SE(2) × T²: q = (x, y, φ, φ₁, φ₂)


def carriage(params: Mapping[str, Any] | None = None) -> SystemBundle:
    p = _params("carriage", params, {"m": 4.0, "m0": 1.0, "l": 1.0, "J": 1.0, "C": 1.0, "a": 1.0, "r": 1.0})
    m, m0, l, J, C, a, r = (p[k] for k in ("m", "m0", "l", "J", "C", "a", "r"))
    b = m0 * l
    if J * m <= b * b:
        raise ConfigurationError(f"carriage metric is not positive definite: need J·m > (m0·l)², got {J * m} <= {b * b}")

    base = np.diag([m, m, J, C, C])
    sin_part = np.zeros((5, 5))
    sin_part[0, 2] = sin_part[2, 0] = -b
    cos_part = np.zeros((5, 5))
    cos_part[1, 2] = cos_part[2, 1] = b

    def metric(q: Any) -> Any:
        return base + np.sin(q[2]) * sin_part + np.cos(q[2]) * cos_part

    sys = LagrangianSystem.mechanical(5, metric, name="carriage")

    c_const = np.array([[1.0, 0, 0, 0, 0], [0, 1.0, 0, 0, 0], [0, 0, 1.0, a / (2 * r), -a / (2 * r)]])
    c_cos = np.zeros((3, 5))
    c_cos[0, 3:] = a / 2
    c_sin = np.zeros((3, 5))
    c_sin[1, 3:] = a / 2

    def coeff(q: Any) -> Any:
        return c_const + np.cos(q[2]) * c_cos + np.sin(q[2]) * c_sin

    cs = ConstraintSet.from_coefficients(3, coeff, name="rolling_wheels")

    def hlift(q: Any, vb: Any) -> Any:
        s, d = vb[0] + vb[1], vb[0] - vb[1]
        phi = q[2]
        return dc.stack([-(a / 2) * np.cos(phi) * s, -(a / 2) * np.sin(phi) * s, -(a / (2 * r)) * d, vb[0], vb[1]])

    quotient = QuotientData(
        dim_qbar=2,
        project=lambda q: dc.stack([q[3], q[4]]),
        section=lambda qb: dc.stack([0.0, 0.0, 0.0, qb[0], qb[1]]),
        hlift=hlift,
    )
    rotation = lambda q: dc.stack([-q[1], q[0], 1.0, 0.0, 0.0])  # noqa: E731
    structure = np.zeros((3, 3, 3))
    # brackets of the generator fields: [e_x, rot] = e_y, [e_y, rot] = −e_x
    structure[0, 2, 1], structure[2, 0, 1] = 1.0, -1.0
    structure[1, 2, 0], structure[2, 1, 0] = -1.0, 1.0
    action = GroupActionSpec(3, [_translation(0, 5), _translation(1, 5), rotation], structure, quotient)

    K = m0 * l * a**3 / (4 * r**2)
    R = m * a**2 / 4 + J * a**2 / (4 * r**2) + C
    rate = K / R

    def xbar1() -> HJCandidate:
        return HJCandidate("vector_field", lambda qb: dc.stack([np.exp(rate * qb[1]), 0.0 * qb[0]]), "xbar1")

    def xbar2() -> HJCandidate:
        return HJCandidate("vector_field", lambda qb: dc.stack([0.0 * qb[0], np.exp(-rate * qb[0])]), "xbar2")

    def printed_lift(q: Any) -> Any:
        phi = q[2]
        return dc.stack([-a * np.cos(phi), -a * np.sin(phi), -(a / r) + 0.0 * phi, 1.0, 0.0])

    def x1_printed() -> HJCandidate:
        return HJCandidate("vector_field", lambda q: np.exp(rate * q[4]) * printed_lift(q), "x1_printed")

    def x2_printed() -> HJCandidate:
        return HJCandidate("vector_field", lambda q: np.exp(-rate * q[3]) * printed_lift(q), "x2_printed")

    def xi1(q: Any) -> Any:
        return hlift(q, np.array([1.0, 0.0]))

    def xi2(q: Any) -> Any:
        return hlift(q, np.array([0.0, 1.0]))

    def reduced_lagrangian(v1: float, v2: float) -> float:
        return m * a**2 / 8 * (v1 + v2) ** 2 + J * a**2 / (8 * r**2) * (v2 - v1) ** 2 + C / 2 * (v1 * v1 + v2 * v2)

    def alpha_printed(v1: float, v2: float) -> np.ndarray:
        return np.array([K * (v2 - v1) * v2, -K * (v1 - v2) * v1])

    def xi3_printed(q: Any) -> np.ndarray:
        phi = q[2]
        return np.array([-(a**2) * math.sin(phi) / (2 * r**2), a**2 * math.cos(phi) / (2 * r**2), 0, 0, 0])

    def xi3_derived(q: Any) -> np.ndarray:
        phi = q[2]
        return np.array([-(a**2) * math.sin(phi) / (2 * r), a**2 * math.cos(phi) / (2 * r), 0, 0, 0])

    def xi4_printed(q: Any) -> np.ndarray:
        phi = q[2]
        return np.array([a**3 * math.cos(phi) / (4 * r**2), a**3 * math.sin(phi) / (4 * r**2), 0, 0, 0])

    fixtures = {
        "K": Fixture(K, 1e-15, "published", "K = m0 l a³ / 4r²"),
        "R": Fixture(R, 1e-15, "published", "R = m a²/4 + J a²/4r² + C"),
        "reduced_lagrangian": Fixture(reduced_lagrangian, 1e-12, "published"),
        "alpha_closed_form": Fixture(alpha_printed, 1e-8, "published", "components (dφ₁, dφ₂)"),
        "alpha_at_1_0": Fixture(np.array([0.0, -K]), 1e-8, "derived", "closed form at (φ̇₁, φ̇₂) = (1, 0)"),
        "xi3": Fixture(xi3_printed, 1e-12, "published", "printed with 1/r²; equals the bracket only when r = 1"),
        "xi3_bracket": Fixture(xi3_derived, 1e-12, "derived", "[ξ1, ξ2] computed by hand: factor a²/2r"),
        "xi4": Fixture(xi4_printed, 1e-12, "published"),
        "xi1_xi4_factor": Fixture(-(a**2) / (4 * r), 1e-10, "published", "[ξ1, ξ4] = factor · ξ3"),
        "chow_growth": Fixture([2, 3, 4, 4], 0, "published"),
        "printed_lift": Fixture(printed_lift, 0.0, "published", "lift of ∂φ₁ as printed: coefficients a, a/r"),
        "derived_lift": Fixture(xi1, 0.0, "derived", "lift forced by ψ = 0: coefficients a/2, a/2r"),
    }
    return SystemBundle(
        "carriage",
        p,
        sys,
        cs,
        action,
        {"x1_printed": x1_printed, "x2_printed": x2_printed},
        {"xbar1": xbar1, "xbar2": xbar2},
        fixtures,
        [xi1, xi2],
        [(-2.0, 2.0), (-2.0, 2.0), (-math.pi, math.pi), (-1.0, 1.0), (-1.0, 1.0)],
        State([0, 0, 0, 0, 0], hlift(np.zeros(5), np.array([1.0, 0.5]))),
        qbar_box=[(-1.0, 1.0)] * 2,
    )


# ---------------------------------------------------------------------------
# Kinematic demos without a published Lagrangian (unit metric placeholder)


def rolling_disk(params: Mapping[str, Any] | None = None) -> SystemBundle:
    """q = (x, y, φ, ψ) with ẋ = Rψ̇ cosφ, ẏ = Rψ̇ sinφ."""
    p = _params("rolling_disk", params, {"R": 1.0})
    Rd = p["R"]
    sys = LagrangianSystem.mechanical(4, lambda q: np.eye(4), name="rolling_disk_unit_metric")

    def coeff(q: Any) -> Any:
        phi = q[2]
        return dc.stack([dc.stack([1.0, 0.0, 0.0, -Rd * np.cos(phi)]), dc.stack([0.0, 1.0, 0.0, -Rd * np.sin(phi)])])

    cs = ConstraintSet.from_coefficients(2, coeff, name="rolling_without_sliding")
    fields = [
        _translation(2, 4),
        lambda q: dc.stack([Rd * np.cos(q[2]), Rd * np.sin(q[2]), 0.0, 1.0]),
    ]
    return SystemBundle(
        "rolling_disk",
        p,
        sys,
        cs,
        None,
        {},
        {},
        {"chow_growth": Fixture([2, 3, 4], 0, "derived", "bracket-generating")},
        fields,
        [(-2.0, 2.0), (-2.0, 2.0), (-math.pi, math.pi), (-math.pi, math.pi)],
        State([0, 0, 0, 0], [Rd, 0.0, 0.5, 1.0]),
        has_dynamics=False,
    )


def appel_hamel(params: Mapping[str, Any] | None = None) -> SystemBundle:
    """q = (x, y, z) with ẋ² + ẏ² = (a/b)² ż², homogeneous of degree two in v."""
    p = _params("appel_hamel", params, {"a": 1.0, "b": 1.0})
    ratio = (p["a"] / p["b"]) ** 2
    sys = LagrangianSystem.mechanical(3, lambda q: np.eye(3), name="appel_hamel_unit_metric")
    cs = ConstraintSet(1, lambda q, v: dc.stack([v[0] * v[0] + v[1] * v[1] - ratio * v[2] * v[2]]), name="cone")
    k = math.sqrt(ratio)

    def cone(vx: float = 1.0, vy: float = 0.0) -> HJCandidate:
        speed = math.hypot(vx, vy) / k
        return HJCandidate("vector_field", lambda q: dc.stack([vx + 0.0 * q[0], vy + 0.0 * q[0], speed + 0.0 * q[0]]), f"cone({vx:g}, {vy:g})")

    return SystemBundle(
        "appel_hamel",
        p,
        sys,
        cs,
        None,
        {"cone": cone},
        {},
        {},
        [],
        [(-2.0, 2.0)] * 3,
        State([0, 0, 0], [k, 0.0, 1.0]),
        has_dynamics=False,
    )


REGISTRY: dict[str, Callable[[Mapping[str, Any] | None], SystemBundle]] = {
    "free_particle": free_particle,
    "carriage": carriage,
    "rolling_disk": rolling_disk,
    "appel_hamel": appel_hamel,
    "horizontal_particle": horizontal_particle,
}


def names() -> list[str]:
    return list(REGISTRY)


def get(name: str, params: Mapping[str, Any] | None = None) -> SystemBundle:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ConfigurationError(f"unknown system {name!r} (known: {', '.join(REGISTRY)})") from None
    return factory(params)
