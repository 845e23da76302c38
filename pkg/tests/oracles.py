"""Slow second-route evaluators the tests compare the library against.

Scalars are evaluated by direct recursion over the expression tree in
extended precision, derivatives come from central difference quotients,
Christoffel symbols from the metric formula with those quotients, and
curvature from difference quotients of Christoffel values.  The
recurrence equations are assembled as a dense pointwise linear system
and handed to a least-squares solver.  None of this touches the jet
machinery, the connection operators, or the sampling code.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from prodconj.expr import (
    Coord,
    Const,
    Cos,
    Exp,
    Neg,
    Power,
    Product,
    Quotient,
    Sin,
    Sum,
)


def eval_scalar(e, point):
    p = np.asarray(point, dtype=np.longdouble)
    if isinstance(e, Coord):
        return p[e.index]
    if isinstance(e, Const):
        return np.longdouble(e.value.numerator) / np.longdouble(e.value.denominator)
    if isinstance(e, Sum):
        return sum((eval_scalar(t, p) for t in e.terms), np.longdouble(0))
    if isinstance(e, Product):
        out = np.longdouble(1)
        for t in e.factors:
            out = out * eval_scalar(t, p)
        return out
    if isinstance(e, Neg):
        return -eval_scalar(e.arg, p)
    if isinstance(e, Power):
        return eval_scalar(e.base, p) ** e.exponent
    if isinstance(e, Quotient):
        return eval_scalar(e.numer, p) / eval_scalar(e.denom, p)
    if isinstance(e, Sin):
        return np.sin(eval_scalar(e.arg, p))
    if isinstance(e, Cos):
        return np.cos(eval_scalar(e.arg, p))
    if isinstance(e, Exp):
        return np.exp(eval_scalar(e.arg, p))
    raise TypeError(f"not an expression: {e!r}")


def fd_grad(e, point, h=1e-5):
    point = np.asarray(point, dtype=float)
    out = np.empty(point.size)
    for i in range(point.size):
        hi = np.zeros_like(point)
        hi[i] = h
        out[i] = (eval_scalar(e, point + hi) - eval_scalar(e, point - hi)) / (2 * h)
    return out


def fd_hess(e, point, h=1e-5):
    point = np.asarray(point, dtype=float)
    n = point.size
    out = np.empty((n, n))
    f0 = eval_scalar(e, point)
    for i in range(n):
        hi = np.zeros_like(point)
        hi[i] = h
        out[i, i] = (eval_scalar(e, point + hi) - 2 * f0
                     + eval_scalar(e, point - hi)) / (h * h)
        for j in range(i + 1, n):
            hj = np.zeros_like(point)
            hj[j] = h
            out[i, j] = out[j, i] = (
                eval_scalar(e, point + hi + hj) - eval_scalar(e, point + hi - hj)
                - eval_scalar(e, point - hi + hj) + eval_scalar(e, point - hi - hj)
            ) / (4 * h * h)
    return out


def metric_values(metric, point):
    n = metric.chart.dim
    g = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            g[i, j] = float(eval_scalar(metric.entry(i, j), point))
    return g


def christoffel_fd(metric, point, h=1e-6):
    """Gamma^k_ij from the metric formula with difference-quotient derivatives."""
    point = np.asarray(point, dtype=float)
    n = point.size
    g = metric_values(metric, point)
    ginv = np.linalg.inv(g)
    dg = np.empty((n, n, n))  # dg[l, i, j] = d_l g_ij
    for l in range(n):
        hl = np.zeros_like(point)
        hl[l] = h
        dg[l] = (metric_values(metric, point + hl)
                 - metric_values(metric, point - hl)) / (2 * h)
    gamma = np.empty((n, n, n))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc += ginv[k, l] * (dg[i, j, l] + dg[j, i, l] - dg[l, i, j])
                gamma[k, i, j] = 0.5 * acc
    return gamma


def riemann_fd(gamma_at, point, h=1e-5):
    """R[l, i, j, k] with R(e_i, e_j)e_k = R^l e_l, from Gamma difference quotients."""
    point = np.asarray(point, dtype=float)
    n = point.size
    G = gamma_at(point)
    dG = np.empty((n, n, n, n))  # dG[m, k, i, j] = d_m Gamma^k_ij
    for m in range(n):
        hm = np.zeros_like(point)
        hm[m] = h
        dG[m] = (gamma_at(point + hm) - gamma_at(point - hm)) / (2 * h)
    R = np.zeros((n, n, n, n))
    for l in range(n):
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    val = dG[i, l, j, k] - dG[j, l, i, k]
                    for m in range(n):
                        val += G[l, i, m] * G[m, j, k] - G[l, j, m] * G[m, i, k]
                    R[l, i, j, k] = val
    return R


def conjugate_gamma(gamma, E, dE):
    """Christoffels of the reflected connection from the pointwise expansion.

    gamma[k, i, j], E[k, j] and dE[i][k, j] are plain arrays at one point;
    the result is E(d_i(E e_j) + Gamma contraction) written back in the
    same index layout.
    """
    n = E.shape[0]
    out = np.zeros((n, n, n))
    for i in range(n):
        inner = dE[i] + np.einsum("km,mj->kj", gamma[:, i, :], E)
        out[:, i, :] = E @ inner
    return out


def recurrence_residual(E_at, dE_at, eta, point):
    """Least-squares defect of the symmetric-difference-tensor equations.

    Unknowns are the n^3 components S^k_ij of a difference tensor added
    to the flat base.  Equations: for each direction i the commutator
    [S_i, E] must equal eta_i E - d_i E, and S must be symmetric in its
    lower pair.  A vanishing defect certifies a torsion-free base keeping
    the structure recurrent with that form; a large defect certifies no
    such base exists.
    """
    point = np.asarray(point, dtype=float)
    n = point.size
    E = E_at(point)
    dE = dE_at(point)
    index = {(k, i, j): (k * n + i) * n + j
             for k in range(n) for i in range(n) for j in range(n)}
    rows, rhs = [], []
    for i in range(n):
        for k in range(n):
            for j in range(n):
                r = np.zeros(n ** 3)
                for m in range(n):
                    r[index[(k, i, m)]] += E[m, j]
                    r[index[(m, i, j)]] -= E[k, m]
                rows.append(r)
                rhs.append(eta[i] * E[k, j] - dE[i][k, j])
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                r = np.zeros(n ** 3)
                r[index[(k, i, j)]] += 1.0
                r[index[(k, j, i)]] -= 1.0
                rows.append(r)
                rhs.append(0.0)
    A = np.array(rows)
    b = np.array(rhs)
    s = np.linalg.lstsq(A, b, rcond=None)[0]
    return float(np.linalg.norm(A @ s - b)), s.reshape(n, n, n)
