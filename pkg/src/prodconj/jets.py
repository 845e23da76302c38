"""Truncated Taylor data (order <= 2) and its arithmetic.

A Jet carries value / gradient / Hessian arrays for a scalar quantity,
batched over an arbitrary leading shape (the sample batch).  The Hessian
is stored packed as the upper triangle, so symmetry is structural.
Binary operations truncate to the minimum order of their operands;
consuming a derivative (shift) lowers the order by one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EvaluationError, OrderError
from .expr import (Const, Coord, Cos, Exp, Expr, Neg, Power, Product,
                   Quotient, Sin, Sum, format_expr)

_TRI_CACHE: dict[int, tuple[np.ndarray, np.ndarray, tuple[np.ndarray, ...]]] = {}


def _tri(dim: int):
    """Packed-triangle index arrays: (I, J) with I[k] <= J[k], and per-row maps."""
    cached = _TRI_CACHE.get(dim)
    if cached is not None:
        return cached
    I, J = np.triu_indices(dim)
    pos = {(int(I[k]), int(J[k])): k for k in range(len(I))}
    rows = tuple(
        np.array([pos[(min(i, j), max(i, j))] for j in range(dim)], dtype=np.intp)
        for i in range(dim)
    )
    _TRI_CACHE[dim] = (I, J, rows)
    return _TRI_CACHE[dim]


def tri_size(dim: int) -> int:
    return dim * (dim + 1) // 2


@dataclass(eq=False)
class Jet:
    """Order-k truncated Taylor data of one scalar, k in {0, 1, 2}.

    value has the batch shape S; grad has S+(dim,) when order >= 1; hess
    holds the packed upper triangle, S+(dim*(dim+1)//2,), when order == 2.
    Arrays are never mutated after construction.
    """

    dim: int
    order: int
    value: np.ndarray
    grad: np.ndarray | None = None
    hess: np.ndarray | None = None

    def __post_init__(self):
        if self.order not in (0, 1, 2):
            raise OrderError(f"jet order must be 0, 1, or 2, got {self.order}")
        if self.order >= 1 and self.grad is None:
            raise OrderError("order >= 1 jet needs a gradient")
        if self.order >= 2 and self.hess is None:
            raise OrderError("order 2 jet needs a Hessian")

    # ---- constructors -------------------------------------------------

    @staticmethod
    def constant(c: float, dim: int, order: int, batch_shape: tuple[int, ...]) -> "Jet":
        value = np.full(batch_shape, float(c))
        grad = np.zeros(batch_shape + (dim,)) if order >= 1 else None
        hess = np.zeros(batch_shape + (tri_size(dim),)) if order >= 2 else None
        return Jet(dim, order, value, grad, hess)

    def like_constant(self, c: float) -> "Jet":
        return Jet.constant(c, self.dim, self.order, self.value.shape)

    # ---- ring operations ---------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.dim, self.order, self.value + other, self.grad, self.hess)
        k = min(self.order, other.order)
        return Jet(
            self.dim, k, self.value + other.value,
            self.grad + other.grad if k >= 1 else None,
            self.hess + other.hess if k >= 2 else None,
        )

    __radd__ = __add__

    def __neg__(self):
        return Jet(
            self.dim, self.order, -self.value,
            None if self.grad is None else -self.grad,
            None if self.hess is None else -self.hess,
        )

    def __sub__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.dim, self.order, self.value - other, self.grad, self.hess)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = float(other)
            return Jet(
                self.dim, self.order, self.value * c,
                None if self.grad is None else self.grad * c,
                None if self.hess is None else self.hess * c,
            )
        k = min(self.order, other.order)
        f0, g0 = self.value, other.value
        grad = hess = None
        if k >= 1:
            grad = f0[..., None] * other.grad + g0[..., None] * self.grad
            if k >= 2:
                I, J, _ = _tri(self.dim)
                cross = (self.grad[..., I] * other.grad[..., J]
                         + self.grad[..., J] * other.grad[..., I])
                hess = f0[..., None] * other.hess + g0[..., None] * self.hess + cross
        return Jet(self.dim, k, f0 * g0, grad, hess)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / float(other))
        if np.any(other.value == 0.0):
            raise EvaluationError("division by zero")
        k = min(self.order, other.order)
        q = self.value / other.value
        grad = hess = None
        if k >= 1:
            grad = (self.grad - q[..., None] * other.grad) / other.value[..., None]
            if k >= 2:
                I, J, _ = _tri(self.dim)
                cross = (grad[..., I] * other.grad[..., J]
                         + grad[..., J] * other.grad[..., I])
                hess = (self.hess - q[..., None] * other.hess - cross) / other.value[..., None]
        return Jet(self.dim, k, q, grad, hess)

    def __rtruediv__(self, other):
        return self.like_constant(float(other)) / self

    # ---- views --------------------------------------------------------

    def hess_matrix(self) -> np.ndarray:
        """Unpack the Hessian triangle into a full symmetric matrix."""
        if self.hess is None:
            raise OrderError("jet carries no Hessian")
        I, J, _ = _tri(self.dim)
        full = np.zeros(self.value.shape + (self.dim, self.dim))
        full[..., I, J] = self.hess
        full[..., J, I] = self.hess
        return full


def _chain(f: Jet, u0: np.ndarray, u1, u2) -> Jet:
    grad = hess = None
    if f.order >= 1:
        grad = u1[..., None] * f.grad
        if f.order >= 2:
            I, J, _ = _tri(f.dim)
            outer = f.grad[..., I] * f.grad[..., J]
            hess = u1[..., None] * f.hess + u2[..., None] * outer
    return Jet(f.dim, f.order, u0, grad, hess)


def jsin(f: Jet) -> Jet:
    s = np.sin(f.value)
    return _chain(f, s,
                  np.cos(f.value) if f.order >= 1 else None,
                  -s if f.order >= 2 else None)


def jcos(f: Jet) -> Jet:
    c = np.cos(f.value)
    return _chain(f, c,
                  -np.sin(f.value) if f.order >= 1 else None,
                  -c if f.order >= 2 else None)


def jexp(f: Jet) -> Jet:
    e = np.exp(f.value)
    return _chain(f, e, e if f.order >= 1 else None, e if f.order >= 2 else None)


def jpow(f: Jet, n: int) -> Jet:
    if not isinstance(n, int) or n < 0:
        raise ConfigError(f"jet power needs a nonnegative integer exponent, got {n!r}")
    if n == 0:
        return f.like_constant(1.0)
    if n == 1:
        return f
    v = f.value
    return _chain(f, v ** n,
                  n * v ** (n - 1) if f.order >= 1 else None,
                  n * (n - 1) * v ** (n - 2) if f.order >= 2 else None)


def shift(f: Jet, i: int) -> Jet:
    """The jet of the i-th partial derivative, one order lower."""
    if f.order < 1:
        raise OrderError("cannot take a partial of an order-0 jet")
    if not 0 <= i < f.dim:
        raise ConfigError(f"partial index {i} out of range for dimension {f.dim}")
    grad = None
    if f.order >= 2:
        _, _, rows = _tri(f.dim)
        grad = f.hess[..., rows[i]]
    return Jet(f.dim, f.order - 1, f.grad[..., i], grad, None)


def eval_jet(e: Expr, point, order: int, memo: dict | None = None) -> Jet:
    """Exact truncated Taylor data of `e` at `point`.

    `point` is one chart point (dim,) or a batch (m, dim); the jet's batch
    shape follows.  `memo` caches subexpression jets by identity and is
    shared across calls within one evaluation context.
    """
    if order not in (0, 1, 2):
        raise OrderError(f"jet order must be 0, 1, or 2, got {order}")
    P = np.asarray(point, dtype=float)
    if P.ndim not in (1, 2):
        raise ConfigError(f"point must have shape (dim,) or (m, dim), got {P.shape}")
    if memo is None:
        memo = {}
    return _eval(e, P, order, memo)


def _eval(e: Expr, P: np.ndarray, order: int, memo: dict) -> Jet:
    key = (e, order)
    hit = memo.get(key)
    if hit is not None:
        return hit
    dim = P.shape[-1]
    batch = P.shape[:-1]
    match e:
        case Coord(index=i):
            if i >= dim:
                raise ConfigError(f"coordinate index {i} out of range for dimension {dim}")
            grad = hess = None
            if order >= 1:
                grad = np.zeros(batch + (dim,))
                grad[..., i] = 1.0
                if order >= 2:
                    hess = np.zeros(batch + (tri_size(dim),))
            out = Jet(dim, order, P[..., i] + 0.0, grad, hess)
        case Const(value=v):
            out = Jet.constant(float(v), dim, order, batch)
        case Sum(terms=ts):
            out = _eval(ts[0], P, order, memo)
            for t in ts[1:]:
                out = out + _eval(t, P, order, memo)
        case Product(factors=fs):
            out = _eval(fs[0], P, order, memo)
            for f in fs[1:]:
                out = out * _eval(f, P, order, memo)
        case Neg(arg=a):
            out = -_eval(a, P, order, memo)
        case Power(base=b, exponent=n):
            out = jpow(_eval(b, P, order, memo), n)
        case Quotient(numer=p, denom=q):
            den = _eval(q, P, order, memo)
            bad = den.value == 0.0
            if np.any(bad):
                where = P if P.ndim == 1 else P[np.argmax(bad)]
                raise EvaluationError("division by zero", point=where,
                                      expr_text=format_expr(q))
            out = _eval(p, P, order, memo) / den
        case Sin(arg=a):
            out = jsin(_eval(a, P, order, memo))
        case Cos(arg=a):
            out = jcos(_eval(a, P, order, memo))
        case Exp(arg=a):
            out = jexp(_eval(a, P, order, memo))
        case _:
            raise TypeError(f"not an expression: {e!r}")
    memo[key] = out
    return out
