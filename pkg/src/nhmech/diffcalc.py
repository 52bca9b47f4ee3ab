"""Forward-mode automatic differentiation and small dense linear algebra.

Derivatives are computed with tagged dual numbers. A :class:`Dual` holds a
real part ``re`` and a tangent block ``eps`` whose trailing axis enumerates
seed directions, so one evaluation of a map yields a whole Jacobian. Either
part may itself be a :class:`Dual` carrying an older (smaller) tag, which is
how second and higher derivatives are obtained. Every derivative call draws a
fresh tag, which keeps nested differentiations from confusing their
perturbations.

Coordinate expressions handed to this module must use the arithmetic
operators, numpy ufuncs (``np.sin``, ``np.sqrt``, ``@`` ...) and the helpers
exported here (:func:`stack`, :func:`concatenate`, :func:`solve`,
:func:`sum_`) instead of building arrays with ``np.array``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DegenerateFormError, DimensionError

DEFAULT_RANK_TOL = 1e-9

_TAGS = itertools.count(1)


def new_tag() -> int:
    return next(_TAGS)


class Dual:
    """Array-valued dual number with a trailing axis of seed directions."""

    __slots__ = ("tag", "re", "eps")
    __array_priority__ = 1000

    def __init__(self, tag: int, re: Any, eps: Any):
        self.tag = tag
        self.re = re if isinstance(re, Dual) else np.asarray(re, dtype=float)
        self.eps = eps if isinstance(eps, Dual) else np.asarray(eps, dtype=float)

    @property
    def shape(self) -> tuple[int, ...]:
        return shape_of(self.re)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def directions(self) -> int:
        return shape_of(self.eps)[-1]

    def __len__(self) -> int:
        return self.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, idx: Any) -> "Dual":
        if idx is Ellipsis or (isinstance(idx, tuple) and any(i is Ellipsis for i in idx)):
            raise IndexError("Ellipsis indexing is not supported on Dual values")
        return Dual(self.tag, self.re[idx], self.eps[idx])

    @property
    def T(self) -> "Dual":
        if self.ndim < 2:
            return self
        return moveaxis(self, 0, 1)

    def reshape(self, *shape: Any) -> "Dual":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def __add__(self, other: Any) -> Any:
        return add(self, other)

    def __radd__(self, other: Any) -> Any:
        return add(other, self)

    def __sub__(self, other: Any) -> Any:
        return subtract(self, other)

    def __rsub__(self, other: Any) -> Any:
        return subtract(other, self)

    def __mul__(self, other: Any) -> Any:
        return multiply(self, other)

    def __rmul__(self, other: Any) -> Any:
        return multiply(other, self)

    def __truediv__(self, other: Any) -> Any:
        return divide(self, other)

    def __rtruediv__(self, other: Any) -> Any:
        return divide(other, self)

    def __pow__(self, other: Any) -> Any:
        return power(self, other)

    def __rpow__(self, other: Any) -> Any:
        return power(other, self)

    def __neg__(self) -> "Dual":
        return negative(self)

    def __pos__(self) -> "Dual":
        return self

    def __matmul__(self, other: Any) -> Any:
        return matmul(self, other)

    def __rmatmul__(self, other: Any) -> Any:
        return matmul(other, self)

    def __array_ufunc__(self, ufunc: Any, method: str, *inputs: Any, **kwargs: Any) -> Any:
        if method != "__call__" or kwargs:
            return NotImplemented
        impl = _UFUNCS.get(ufunc)
        if impl is None:
            return NotImplemented
        return impl(*inputs)

    def __repr__(self) -> str:
        return f"Dual(tag={self.tag}, re={self.re!r}, eps={self.eps!r})"


def tag_of(x: Any) -> int:
    return x.tag if isinstance(x, Dual) else 0


def shape_of(x: Any) -> tuple[int, ...]:
    return x.shape if isinstance(x, Dual) else np.shape(x)


def real_part(x: Any) -> np.ndarray:
    """Strip every dual level and return the underlying float array."""
    while isinstance(x, Dual):
        x = x.re
    return np.asarray(x, dtype=float)


def _split(x: Any, tag: int) -> tuple[Any, Any]:
    if isinstance(x, Dual) and x.tag == tag:
        return x.re, x.eps
    return (x if isinstance(x, Dual) else np.asarray(x, dtype=float)), None


# ---------------------------------------------------------------------------
# Shape manipulation


def moveaxis(x: Any, source: int, destination: int) -> Any:
    if not isinstance(x, Dual):
        return np.moveaxis(np.asarray(x, dtype=float), source, destination)
    nd = x.ndim
    s, d = source % nd, destination % nd
    return Dual(x.tag, moveaxis(x.re, s, d), moveaxis(x.eps, s, d))


def expand_dims(x: Any, axis: int) -> Any:
    if not isinstance(x, Dual):
        arr = np.asarray(x, dtype=float)
        return arr[..., None] if axis == -1 else np.expand_dims(arr, axis)
    a = axis % (x.ndim + 1)
    return Dual(x.tag, expand_dims(x.re, a), expand_dims(x.eps, a))


def broadcast_to(x: Any, shape: tuple[int, ...]) -> Any:
    shape = tuple(shape)
    if not isinstance(x, Dual):
        arr = np.asarray(x, dtype=float)
        return arr if arr.shape == shape else np.broadcast_to(arr, shape)
    if x.shape == shape:
        return x
    return Dual(x.tag, broadcast_to(x.re, shape), broadcast_to(x.eps, shape + (x.directions,)))


def reshape(x: Any, shape: Sequence[int]) -> Any:
    shape = tuple(shape)
    if not isinstance(x, Dual):
        return np.reshape(np.asarray(x, dtype=float), shape)
    re = reshape(x.re, shape)
    return Dual(x.tag, re, reshape(x.eps, shape_of(re) + (x.directions,)))


def _max_tag(items: Sequence[Any]) -> int:
    return max((tag_of(i) for i in items), default=0)


def stack(items: Sequence[Any], axis: int = 0) -> Any:
    """Stack scalars or arrays that may be dual-valued."""
    items = list(items)
    t = _max_tag(items)
    if t == 0:
        if axis == 0:
            return np.array(items, dtype=float)
        return np.stack([np.asarray(i, dtype=float) for i in items], axis=axis)
    d = next(i.directions for i in items if tag_of(i) == t)
    res, eps = [], []
    for item in items:
        r, e = _split(item, t)
        res.append(r)
        eps.append(e if e is not None else np.zeros(shape_of(r) + (d,)))
    a = axis % (len(shape_of(res[0])) + 1)
    return Dual(t, stack(res, a), stack(eps, a))


def concatenate(items: Sequence[Any], axis: int = 0) -> Any:
    items = list(items)
    t = _max_tag(items)
    if t == 0:
        return np.concatenate([np.asarray(i, dtype=float) for i in items], axis=axis)
    d = next(i.directions for i in items if tag_of(i) == t)
    res, eps = [], []
    for item in items:
        r, e = _split(item, t)
        res.append(r)
        eps.append(e if e is not None else np.zeros(shape_of(r) + (d,)))
    a = axis % len(shape_of(res[0]))
    return Dual(t, concatenate(res, a), concatenate(eps, a))


def sum_(x: Any, axis: int | tuple[int, ...] | None = None) -> Any:
    if not isinstance(x, Dual):
        return np.sum(np.asarray(x, dtype=float), axis=axis)
    nd = x.ndim
    if axis is None:
        axes = tuple(range(nd))
    elif isinstance(axis, tuple):
        axes = tuple(a % nd for a in axis)
    else:
        axes = (axis % nd,)
    return Dual(x.tag, sum_(x.re, axes), sum_(x.eps, axes))


# ---------------------------------------------------------------------------
# Arithmetic


def add(a: Any, b: Any) -> Any:
    t = max(tag_of(a), tag_of(b))
    if t == 0:
        return np.add(a, b)
    ar, ae = _split(a, t)
    br, be = _split(b, t)
    re = add(ar, br)
    if ae is None:
        eps = broadcast_to(be, shape_of(re) + (shape_of(be)[-1],))
    elif be is None:
        eps = broadcast_to(ae, shape_of(re) + (shape_of(ae)[-1],))
    else:
        eps = add(ae, be)
    return Dual(t, re, eps)


def negative(a: Any) -> Any:
    if not isinstance(a, Dual):
        return np.negative(a)
    return Dual(a.tag, negative(a.re), negative(a.eps))


def subtract(a: Any, b: Any) -> Any:
    return add(a, negative(b))


def multiply(a: Any, b: Any) -> Any:
    t = max(tag_of(a), tag_of(b))
    if t == 0:
        return np.multiply(a, b)
    ar, ae = _split(a, t)
    br, be = _split(b, t)
    re = multiply(ar, br)
    eps = None
    if ae is not None:
        eps = multiply(ae, expand_dims(br, -1))
    if be is not None:
        term = multiply(expand_dims(ar, -1), be)
        eps = term if eps is None else add(eps, term)
    return Dual(t, re, eps)


def reciprocal(x: Any) -> Any:
    if not isinstance(x, Dual):
        return np.reciprocal(np.asarray(x, dtype=float))
    r = reciprocal(x.re)
    return Dual(x.tag, r, negative(multiply(expand_dims(multiply(r, r), -1), x.eps)))


def divide(a: Any, b: Any) -> Any:
    t = max(tag_of(a), tag_of(b))
    if t == 0:
        return np.divide(a, b)
    if tag_of(b) < t:
        ar, ae = _split(a, t)
        return Dual(t, divide(ar, b), divide(ae, expand_dims(b, -1)))
    return multiply(a, reciprocal(b))


def _elementwise(npf: Callable[[Any], Any], deriv: Callable[[Any, Any], Any]) -> Callable[[Any], Any]:
    def f(x: Any) -> Any:
        if not isinstance(x, Dual):
            return npf(np.asarray(x, dtype=float))
        val = f(x.re)
        return Dual(x.tag, val, multiply(expand_dims(deriv(x.re, val), -1), x.eps))

    f.__name__ = npf.__name__
    return f


sin = _elementwise(np.sin, lambda r, v: cos(r))
cos = _elementwise(np.cos, lambda r, v: negative(sin(r)))
exp = _elementwise(np.exp, lambda r, v: v)
log = _elementwise(np.log, lambda r, v: reciprocal(r))
sqrt = _elementwise(np.sqrt, lambda r, v: divide(0.5, v))
tan = _elementwise(np.tan, lambda r, v: add(1.0, multiply(v, v)))
arctan = _elementwise(np.arctan, lambda r, v: reciprocal(add(1.0, multiply(r, r))))
sinh = _elementwise(np.sinh, lambda r, v: cosh(r))
cosh = _elementwise(np.cosh, lambda r, v: sinh(r))
tanh = _elementwise(np.tanh, lambda r, v: subtract(1.0, multiply(v, v)))
absolute = _elementwise(np.absolute, lambda r, v: np.sign(real_part(r)))


def square(x: Any) -> Any:
    return multiply(x, x)


def power(x: Any, p: Any) -> Any:
    t = max(tag_of(x), tag_of(p))
    if t == 0:
        return np.power(x, p)
    if tag_of(p) < t:
        if np.ndim(real_part(p)) == 0 and not isinstance(p, Dual):
            pf = float(p)
            if pf == 2.0:
                return multiply(x, x)
            if pf == 0.5:
                return sqrt(x)
        xr, xe = _split(x, t)
        dv = multiply(p, power(xr, subtract(p, 1.0)))
        return Dual(t, power(xr, p), multiply(expand_dims(dv, -1), xe))
    return exp(multiply(p, log(x)))


def matmul(a: Any, b: Any) -> Any:
    t = max(tag_of(a), tag_of(b))
    if t == 0:
        return np.matmul(a, b)
    ar, ae = _split(a, t)
    br, be = _split(b, t)
    re = matmul(ar, br)
    eps = None
    if ae is not None:
        eps = moveaxis(matmul(moveaxis(ae, -1, 0), br), 0, -1)
    if be is not None:
        if len(shape_of(br)) == 1:
            term = matmul(ar, be)
        else:
            term = moveaxis(matmul(ar, moveaxis(be, -1, 0)), 0, -1)
        eps = term if eps is None else add(eps, term)
    return Dual(t, re, eps)


def dot(a: Any, b: Any) -> Any:
    return matmul(a, b)


def solve(A: Any, b: Any) -> Any:
    """Solve ``A x = b`` for dual-valued ``A`` and/or ``b``."""
    t = max(tag_of(A), tag_of(b))
    if t == 0:
        return np.linalg.solve(np.asarray(A, dtype=float), np.asarray(b, dtype=float))
    Ar, Ae = _split(A, t)
    br, be = _split(b, t)
    x = solve(Ar, br)
    rhs = be
    if Ae is not None:
        dAx = moveaxis(matmul(moveaxis(Ae, -1, 0), x), 0, -1)
        rhs = negative(dAx) if rhs is None else subtract(rhs, dAx)
    xshape = shape_of(x)
    d = shape_of(rhs)[-1]
    if len(xshape) == 1:
        dx = solve(Ar, rhs)
    else:
        n, k = xshape
        dx = reshape(solve(Ar, reshape(rhs, (n, k * d))), (n, k, d))
    return Dual(t, x, dx)


def inv(A: Any) -> Any:
    return solve(A, np.eye(shape_of(A)[0]))


_UFUNCS: dict[Any, Callable[..., Any]] = {
    np.add: add,
    np.subtract: subtract,
    np.multiply: multiply,
    np.true_divide: divide,
    np.negative: negative,
    np.positive: lambda x: x,
    np.power: power,
    np.reciprocal: reciprocal,
    np.sin: sin,
    np.cos: cos,
    np.tan: tan,
    np.arctan: arctan,
    np.exp: exp,
    np.log: log,
    np.sqrt: sqrt,
    np.square: square,
    np.sinh: sinh,
    np.cosh: cosh,
    np.tanh: tanh,
    np.absolute: absolute,
    np.matmul: matmul,
}


# ---------------------------------------------------------------------------
# Maps and derivatives


@dataclass(frozen=True)
class SmoothMap:
    """A coordinate map R^arity -> R^coarity that accepts dual-valued input."""

    arity: int
    coarity: int
    fn: Callable[[Any], Any]
    name: str = ""

    def __call__(self, x: Any) -> Any:
        if shape_of(x) != (self.arity,):
            raise DimensionError(
                f"{self.name or 'map'} expects input of dimension {self.arity}, got shape {shape_of(x)}"
            )
        y = self.fn(x)
        size = int(np.prod(shape_of(y), dtype=int))
        if size != self.coarity:
            raise DimensionError(
                f"{self.name or 'map'} declared coarity {self.coarity} but returned shape {shape_of(y)}"
            )
        return y


def _as_input(x: Any) -> Any:
    if isinstance(x, Dual):
        if x.ndim != 1:
            raise DimensionError(f"expected a vector input, got shape {x.shape}")
        return x
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DimensionError(f"expected a vector input, got shape {arr.shape}")
    return arr


def _tangent(y: Any, tag: int, directions: int) -> Any:
    if isinstance(y, Dual) and y.tag == tag:
        return y.eps
    return np.zeros(shape_of(y) + (directions,))


def jacobian(f: Callable[[Any], Any], x: Any) -> Any:
    """Jacobian of ``f`` at ``x``: output shape of ``f`` plus a trailing input axis."""
    x = _as_input(x)
    n = shape_of(x)[0]
    t = new_tag()
    return _tangent(f(Dual(t, x, np.eye(n))), t, n)


def value_and_jacobian(f: Callable[[Any], Any], x: Any) -> tuple[Any, Any]:
    x = _as_input(x)
    n = shape_of(x)[0]
    t = new_tag()
    y = f(Dual(t, x, np.eye(n)))
    if isinstance(y, Dual) and y.tag == t:
        return y.re, y.eps
    return y, np.zeros(shape_of(y) + (n,))


def gradient(f: Callable[[Any], Any], x: Any) -> Any:
    g = jacobian(f, x)
    if len(shape_of(g)) == 2 and shape_of(g)[0] == 1:
        g = g[0]
    if len(shape_of(g)) != 1:
        raise DimensionError("gradient requires a scalar-valued map")
    return g


def hessian(f: Callable[[Any], Any], x: Any) -> Any:
    """Matrix of second derivatives of a scalar map via nested duals."""
    return jacobian(lambda y: gradient(f, y), x)


def gradient_and_hessian(f: Callable[[Any], Any], x: Any) -> tuple[Any, Any]:
    """Gradient and Hessian from a single nested evaluation."""
    x = _as_input(x)
    n = shape_of(x)[0]
    t = new_tag()
    g = gradient(f, Dual(t, x, np.eye(n)))
    if isinstance(g, Dual) and g.tag == t:
        return g.re, g.eps
    return g, np.zeros((n, n))


def jvp(f: Callable[[Any], Any], x: Any, direction: Any) -> Any:
    """Directional derivative ``Df(x)·direction`` with a single seed."""
    x = _as_input(x)
    if shape_of(direction) != shape_of(x):
        raise DimensionError(f"direction shape {shape_of(direction)} does not match point {shape_of(x)}")
    t = new_tag()
    eps = expand_dims(direction, -1)
    y = f(Dual(t, x, eps))
    return moveaxis(_tangent(y, t, 1), -1, 0)[0]


def lie_bracket(X: Callable[[Any], Any], Y: Callable[[Any], Any], q: Any) -> Any:
    """Jacobi-Lie bracket ``[X, Y](q) = DY(q)·X(q) − DX(q)·Y(q)``."""
    q = _as_input(q)
    xq, yq = X(q), Y(q)
    if shape_of(xq) != shape_of(q) or shape_of(yq) != shape_of(q):
        raise DimensionError("vector fields must map the chart to itself")
    return subtract(jvp(Y, q, xq), jvp(X, q, yq))


def bracket_field(X: Callable[[Any], Any], Y: Callable[[Any], Any]) -> Callable[[Any], Any]:
    """The vector field ``[X, Y]`` as a differentiable callable."""
    return lambda q: lie_bracket(X, Y, q)


# ---------------------------------------------------------------------------
# Linear algebra on evaluated fibers


def subspace_rank(vectors: Sequence[Any], tol: float = DEFAULT_RANK_TOL) -> int:
    """Numerical rank: singular values above ``tol·σ_max``."""
    if len(vectors) == 0:
        return 0
    mat = np.atleast_2d(np.asarray([real_part(v) for v in vectors], dtype=float))
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


@dataclass(frozen=True)
class Subspace:
    """A linear subspace stored by an orthonormal row basis."""

    ambient: int
    basis: np.ndarray
    tol: float = DEFAULT_RANK_TOL

    def __post_init__(self) -> None:
        b = np.asarray(self.basis, dtype=float).reshape(-1, self.ambient)
        object.__setattr__(self, "basis", b)
        if b.shape[0] > self.ambient:
            raise DimensionError("basis larger than the ambient space")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def zero(cls, ambient: int, tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        return cls(ambient, np.zeros((0, ambient)), tol)

    @classmethod
    def full(cls, ambient: int, tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        return cls(ambient, np.eye(ambient), tol)

    @classmethod
    def span(cls, vectors: Sequence[Any], ambient: int | None = None, tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        vecs = [real_part(v).ravel() for v in vectors]
        if ambient is None:
            if not vecs:
                raise DimensionError("ambient dimension required for an empty span")
            ambient = vecs[0].size
        if not vecs:
            return cls.zero(ambient, tol)
        mat = np.asarray(vecs, dtype=float)
        if mat.shape[1] != ambient:
            raise DimensionError("vectors do not match the ambient dimension")
        _, s, vt = np.linalg.svd(mat, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            return cls.zero(ambient, tol)
        r = int(np.sum(s > tol * s[0]))
        return cls(ambient, vt[:r], tol)

    @classmethod
    def kernel(cls, matrix: Any, ambient: int | None = None, tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        """Null space of ``matrix`` (rows are linear conditions)."""
        mat = np.asarray(real_part(matrix), dtype=float)
        if ambient is None:
            ambient = mat.shape[-1]
        mat = mat.reshape(-1, ambient)
        if mat.shape[0] == 0:
            return cls.full(ambient, tol)
        _, s, vt = np.linalg.svd(mat, full_matrices=True)
        r = 0 if s[0] == 0.0 else int(np.sum(s > tol * s[0]))
        return cls(ambient, vt[r:], tol)

    def project(self, vec: Any) -> np.ndarray:
        v = np.asarray(vec, dtype=float)
        return self.basis.T @ (self.basis @ v)

    def contains(self, vec: Any, tol: float | None = None) -> bool:
        v = np.asarray(vec, dtype=float)
        tol = self.tol if tol is None else tol
        return float(np.linalg.norm(v - self.project(v))) <= tol * max(1.0, float(np.linalg.norm(v)))

    def intersect(self, other: "Subspace") -> "Subspace":
        if self.ambient != other.ambient:
            raise DimensionError("ambient dimensions differ")
        tol = max(self.tol, other.tol)
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.ambient, tol)
        outside = self.basis - (self.basis @ other.basis.T) @ other.basis
        _, s, vt = np.linalg.svd(outside.T, full_matrices=True)
        r = int(np.sum(s > tol))
        coeffs = vt[r:]
        return Subspace.span(list(coeffs @ self.basis), self.ambient, tol)

    def __add__(self, other: "Subspace") -> "Subspace":
        if self.ambient != other.ambient:
            raise DimensionError("ambient dimensions differ")
        return Subspace.span(list(self.basis) + list(other.basis), self.ambient, max(self.tol, other.tol))

    def equals(self, other: "Subspace", tol: float = 1e-10) -> bool:
        if self.ambient != other.ambient or self.dim != other.dim:
            return False
        return all(self.contains(v, tol) for v in other.basis)


def annihilator(S: Subspace) -> Subspace:
    """Covectors vanishing on ``S``, as a subspace of the dual space."""
    if S.dim == 0:
        return Subspace.full(S.ambient, S.tol)
    return Subspace.kernel(S.basis, S.ambient, S.tol)


def symplectic_orthogonal(omega: Any, S: Subspace, tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """``{u : omega(u, s) = 0 for all s in S}`` for a nondegenerate two-form matrix."""
    om = np.asarray(omega, dtype=float)
    if om.ndim != 2 or om.shape[0] != om.shape[1] or om.shape[0] != S.ambient:
        raise DimensionError("omega must be square and match the subspace ambient dimension")
    scale = max(1.0, float(np.max(np.abs(om))))
    if float(np.max(np.abs(om + om.T))) > 1e-10 * scale:
        raise ValueError("omega is not antisymmetric")
    s = np.linalg.svd(om, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= tol * s[0]:
        raise DegenerateFormError("two-form is degenerate", float(s[-1]))
    if S.dim == 0:
        return Subspace.full(S.ambient, S.tol)
    return Subspace.kernel(S.basis @ om, S.ambient, S.tol)
