import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fd_hessian, fd_jacobian, rel_err, states
from nhmech import diffcalc as dc
from nhmech import systems
from nhmech.errors import DegenerateFormError, DimensionError

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def test_jacobian_of_constraint_hand_value():
    # ψ = ż − y ẋ on the stacked state; d/d(q,v) at q=(0,2,0), v=(1,0,1)
    psi = lambda z: z[5] - z[1] * z[3]  # noqa: E731
    J = dc.jacobian(psi, np.array([0, 2, 0, 1, 0, 1.0]))
    np.testing.assert_allclose(J, [0, -1, 0, -2, 0, 1], atol=0)


def test_lie_bracket_hand_value():
    xi1 = lambda q: dc.stack([1.0, 0.0, q[1]])  # noqa: E731
    xi2 = lambda q: dc.stack([0.0, 1.0, 0.0])  # noqa: E731
    np.testing.assert_allclose(dc.lie_bracket(xi1, xi2, np.array([0.3, -1.2, 4.0])), [0, 0, -1], atol=0)


def test_hessian_matches_finite_differences():
    f = lambda x: np.sin(x[0]) * x[1] ** 2 + np.exp(x[2] * x[0]) / (1 + x[1] ** 2)  # noqa: E731
    x = np.array([0.3, -0.7, 0.4])
    assert rel_err(dc.hessian(f, x), fd_hessian(f, x)) < 1e-6
    g, H = dc.gradient_and_hessian(f, x)
    np.testing.assert_allclose(g, dc.gradient(f, x), atol=1e-14)
    np.testing.assert_allclose(H, dc.hessian(f, x), atol=1e-14)


def test_solve_and_inverse_derivatives():
    def f(x):
        A = dc.stack([dc.stack([2.0 + x[0], x[1]]), dc.stack([x[1], 3.0 + x[0] * x[1]])])
        return dc.solve(A, dc.stack([1.0, x[0]]))

    x = np.array([0.2, 0.5])
    assert rel_err(dc.jacobian(f, x), fd_jacobian(f, x)) < 1e-8

    def g(x):
        A = dc.stack([dc.stack([2.0 + x[0], x[1]]), dc.stack([x[1], 3.0])])
        return dc.reshape(dc.inv(A), (4,))

    assert rel_err(dc.jacobian(g, x), fd_jacobian(g, x)) < 1e-8


def test_jvp_matches_jacobian_product():
    f = lambda x: dc.stack([x[0] * x[1], np.cos(x[1]) + x[2] ** 3])  # noqa: E731
    x = np.array([0.1, 0.2, 0.3])
    d = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(dc.jvp(f, x, d), dc.jacobian(f, x) @ d, atol=1e-14)


@pytest.mark.parametrize("name", ["free_particle", "carriage", "rolling_disk", "appel_hamel", "horizontal_particle"])
def test_ad_matches_fd_on_builtin_systems(name):
    """Lagrangian gradient/Hessian and constraint Jacobians against central differences at 100 random points."""
    b = systems.get(name)
    n = b.n
    rng = np.random.default_rng(7)
    lo = np.array([x[0] for x in b.q_box])
    hi = np.array([x[1] for x in b.q_box])
    L = b.sys.L.fn
    psi = lambda z: b.cs.psi(z[:n], z[n:])  # noqa: E731
    worst = 0.0
    for _ in range(100):
        z = np.concatenate([lo + (hi - lo) * rng.random(n), rng.standard_normal(n)])
        worst = max(worst, rel_err(dc.gradient(L, z), fd_jacobian(L, z)))
        worst = max(worst, rel_err(dc.jacobian(psi, z), fd_jacobian(psi, z)))
        g = lambda w: np.asarray(dc.gradient(L, w), dtype=float)  # noqa: E731
        worst = max(worst, rel_err(dc.hessian(L, z), fd_jacobian(g, z)))
    assert worst < 1e-6


def test_vector_field_brackets_match_fd(carriage):
    f1, f2 = carriage.distribution_fields
    for s in states(carriage, 10, seed=3):
        q = s.q
        fd = fd_jacobian(lambda x: f2(x), q) @ f1(q) - fd_jacobian(lambda x: f1(x), q) @ f2(q)
        assert rel_err(dc.lie_bracket(f1, f2, q), fd) < 1e-6


def test_nested_tags_do_not_confuse():
    # d/dx [x * d/dy (x y)] = d/dx [x * x] = 2x
    outer = dc.gradient(lambda x: x[0] * dc.gradient(lambda y: x[0] * y[0], np.array([5.0]))[0], np.array([3.0]))
    assert outer[0] == pytest.approx(6.0, abs=1e-14)


def test_ellipsis_indexing_rejected():
    with pytest.raises(IndexError):
        dc.jacobian(lambda x: x[...], np.ones(2))


def test_smooth_map_checks_dimensions():
    m = dc.SmoothMap(2, 1, lambda x: x[0] * x[1], "product")
    assert m(np.array([2.0, 3.0])) == 6.0
    with pytest.raises(DimensionError):
        m(np.ones(3))
    bad = dc.SmoothMap(2, 2, lambda x: x[0], "bad")
    with pytest.raises(DimensionError):
        bad(np.ones(2))


def test_subspace_operations():
    a = dc.Subspace.span([[1, 0, 0], [0, 1, 0]])
    b = dc.Subspace.span([[0, 1, 0], [0, 0, 1]])
    assert a.intersect(b).dim == 1
    assert a.intersect(b).contains([0, 1, 0])
    assert (a + b).dim == 3
    assert dc.Subspace.kernel([[1.0, 1.0, 0.0]]).dim == 2
    assert dc.annihilator(a).equals(dc.Subspace.span([[0, 0, 1]]))
    assert dc.subspace_rank([[1, 2], [2, 4]]) == 1


def test_symplectic_orthogonal():
    omega = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
    S = dc.Subspace.span([[1, 0, 0, 0]])
    perp = dc.symplectic_orthogonal(omega, S)
    assert perp.dim == 3
    assert perp.contains([1, 0, 0, 0])
    assert not perp.contains([0, 0, 1, 0])
    with pytest.raises(DegenerateFormError):
        dc.symplectic_orthogonal(np.zeros((4, 4)), S)


@settings(max_examples=50, deadline=None)
@given(finite, finite, finite)
def test_product_rule_property(x, y, z):
    f = lambda v: v[0] * v[1]  # noqa: E731
    g = lambda v: np.sin(v[2]) + v[0]  # noqa: E731
    p = np.array([x, y, z])
    lhs = dc.gradient(lambda v: f(v) * g(v), p)
    rhs = dc.gradient(f, p) * g(p) + f(p) * dc.gradient(g, p)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(finite, finite, finite)
def test_bracket_antisymmetry_and_jacobi(x, y, z):
    X = lambda q: dc.stack([q[1], -q[0], q[2] * q[0]])  # noqa: E731
    Y = lambda q: dc.stack([np.sin(q[2]), q[0] * q[1], 1.0 + 0.0 * q[0]])  # noqa: E731
    Z = lambda q: dc.stack([q[2] ** 2, q[0], q[1]])  # noqa: E731
    q = np.array([x, y, z])
    np.testing.assert_allclose(dc.lie_bracket(X, Y, q), -dc.lie_bracket(Y, X, q), atol=1e-12)
    br = dc.bracket_field
    jac = br(X, br(Y, Z))(q) + br(Y, br(Z, X))(q) + br(Z, br(X, Y))(q)
    assert np.max(np.abs(jac)) < 1e-9
