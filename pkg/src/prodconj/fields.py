"""Charts, coordinate fields, and batched evaluation contexts.

Fields hold expression trees per component.  An EvalContext binds a chart
to a concrete batch of sample points and evaluates every expression there
at order 2 exactly once; operators downstream consume jet orders from that
shared pool.  Vector quantities are plain lists of Jets, one per component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EvaluationError
from .expr import Expr, Neg, Sum, validate_expr, ZERO, ONE
from .jets import Jet, eval_jet, shift
from .reporting import Residual, ResidualMax
from .sampling import SamplePlan, sample_points

Vec = list  # list[Jet], one entry per chart coordinate


@dataclass(frozen=True, eq=False)
class Chart:
    dim: int
    names: tuple[str, ...]
    box: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"chart dimension must be positive, got {self.dim}")
        if len(self.names) != self.dim or len(set(self.names)) != self.dim:
            raise ConfigError(f"chart needs {self.dim} distinct coordinate names, got {self.names!r}")
        if len(self.box) != self.dim:
            raise ConfigError(f"chart box needs {self.dim} intervals, got {len(self.box)}")

    def frame_label(self, *indices: int) -> str:
        return "(" + ",".join("d" + self.names[i] for i in indices) + ")"


def _validated(chart: Chart, exprs) -> None:
    for e in exprs:
        validate_expr(e, chart.dim)


@dataclass(frozen=True, eq=False)
class VectorField:
    chart: Chart
    components: tuple[Expr, ...]
    label: str = "X"

    def __post_init__(self):
        if len(self.components) != self.chart.dim:
            raise ConfigError(f"vector field {self.label!r} needs {self.chart.dim} components")
        _validated(self.chart, self.components)


@dataclass(frozen=True, eq=False)
class OneFormField:
    chart: Chart
    components: tuple[Expr, ...]
    label: str = "w"

    def __post_init__(self):
        if len(self.components) != self.chart.dim:
            raise ConfigError(f"one-form {self.label!r} needs {self.chart.dim} components")
        _validated(self.chart, self.components)


@dataclass(frozen=True, eq=False)
class EndoField:
    """A (1,1)-tensor field; entries[k][j] multiplies input component j into output k."""

    chart: Chart
    entries: tuple[tuple[Expr, ...], ...]
    label: str = "E"

    def __post_init__(self):
        n = self.chart.dim
        if len(self.entries) != n or any(len(row) != n for row in self.entries):
            raise ConfigError(f"endomorphism field {self.label!r} needs a {n}x{n} entry grid")
        for row in self.entries:
            _validated(self.chart, row)


@dataclass(frozen=True, eq=False)
class MetricField:
    """Symmetric (0,2)-tensor field; only the upper triangle is stored."""

    chart: Chart
    upper: tuple[tuple[Expr, ...], ...]
    label: str = "g"

    def __post_init__(self):
        n = self.chart.dim
        if len(self.upper) != n or any(len(self.upper[i]) != n - i for i in range(n)):
            raise ConfigError(f"metric {self.label!r} needs upper-triangle rows of lengths {n}..1")
        for row in self.upper:
            _validated(self.chart, row)

    def entry(self, i: int, j: int) -> Expr:
        if i > j:
            i, j = j, i
        return self.upper[i][j - i]


@dataclass(frozen=True, eq=False)
class Tensor12Field:
    """A (1,2)-tensor, either by components T^k_ij or as a closure.

    The closure form promises bilinearity over point functions; nothing
    enforces it structurally, so property tests spot-check closures.
    """

    chart: Chart
    label: str = "T"
    components: tuple[tuple[tuple[Expr, ...], ...], ...] | None = None
    operator: object = None

    @staticmethod
    def from_components(chart: Chart, components, label: str = "T") -> "Tensor12Field":
        n = chart.dim
        if len(components) != n or any(
                len(plane) != n or any(len(row) != n for row in plane) for plane in components):
            raise ConfigError(f"tensor {label!r} needs a {n}x{n}x{n} component grid")
        for plane in components:
            for row in plane:
                _validated(chart, row)
        return Tensor12Field(chart, label, components=tuple(tuple(tuple(r) for r in p) for p in components))

    @staticmethod
    def from_operator(chart: Chart, operator, label: str = "T") -> "Tensor12Field":
        return Tensor12Field(chart, label, operator=operator)

    def apply(self, ctx: "EvalContext", x: Vec, y: Vec) -> Vec:
        if self.operator is not None:
            return self.operator(ctx, x, y)
        comp = ctx.tensor_components(self)
        n = self.chart.dim
        out = []
        for k in range(n):
            acc = None
            for i in range(n):
                for j in range(n):
                    c = comp[k][i][j]
                    if c is None:
                        continue
                    term = c * x[i] * y[j]
                    acc = term if acc is None else acc + term
            out.append(acc if acc is not None else x[0].like_constant(0.0))
        return out


def is_zero_expr(e: Expr) -> bool:
    from .expr import Const
    return isinstance(e, Const) and e.value == 0


class EvalContext:
    """A chart bound to a point batch; every expression evaluates at order 2."""

    def __init__(self, chart: Chart, points: np.ndarray):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != chart.dim:
            raise ConfigError(f"points must have shape (m, {chart.dim}), got {points.shape}")
        self.chart = chart
        self.points = points
        self._expr_memo: dict = {}
        self._memo: dict = {}

    @property
    def count(self) -> int:
        return self.points.shape[0]

    # ---- expression-level --------------------------------------------

    def scalar(self, e: Expr) -> Jet:
        return eval_jet(e, self.points, 2, self._expr_memo)

    def cached(self, key, build):
        hit = self._memo.get(key)
        if hit is None:
            hit = build()
            self._memo[key] = hit
        return hit

    # ---- field-level --------------------------------------------------

    def vector(self, f: VectorField) -> Vec:
        return self.cached((f, "vec"), lambda: [self.scalar(c) for c in f.components])

    def oneform(self, f: OneFormField) -> Vec:
        return self.cached((f, "form"), lambda: [self.scalar(c) for c in f.components])

    def endo(self, f: EndoField) -> list[list[Jet]]:
        return self.cached(
            (f, "endo"),
            lambda: [[self.scalar(e) for e in row] for row in f.entries])

    def metric(self, f: MetricField) -> list[list[Jet]]:
        def build():
            n = self.chart.dim
            jets = [[None] * n for _ in range(n)]
            for i in range(n):
                for j in range(i, n):
                    jets[i][j] = jets[j][i] = self.scalar(f.entry(i, j))
            return jets
        return self.cached((f, "metric"), build)

    def metric_values(self, f: MetricField) -> np.ndarray:
        """(m, n, n) value matrix, checked nondegenerate at every point."""
        def build():
            G = jets_matrix_values(self.metric(f))
            sv = np.linalg.svd(G, compute_uv=False)
            bad = sv[:, -1] <= 1e-12 * np.maximum(sv[:, 0], 1.0)
            if np.any(bad):
                raise EvaluationError(f"metric {f.label!r} is degenerate",
                                      point=self.points[int(np.argmax(bad))])
            return G
        return self.cached((f, "metric_values"), build)

    def tensor_components(self, f: Tensor12Field):
        """Component jets with zero entries dropped (None)."""
        def build():
            return [[[None if is_zero_expr(e) else self.scalar(e) for e in row]
                     for row in plane] for plane in f.components]
        return self.cached((f, "tensor"), build)

    def frame(self) -> list[Vec]:
        def build():
            n = self.chart.dim
            shape = (self.count,)
            basis = []
            for i in range(n):
                basis.append([Jet.constant(1.0 if k == i else 0.0, n, 2, shape)
                              for k in range(n)])
            return basis
        return self.cached(("frame",), build)

    def zero_scalar(self) -> Jet:
        return Jet.constant(0.0, self.chart.dim, 2, (self.count,))

    def zero_vector(self) -> Vec:
        z = self.zero_scalar()
        return [z for _ in range(self.chart.dim)]

    def residuals(self) -> ResidualMax:
        return ResidualMax(self.points)


def context_for(chart: Chart, plan: SamplePlan) -> EvalContext:
    if plan.box != chart.box:
        # The plan may tighten the chart box but must stay inside it.
        for (plo, phi), (clo, chi_) in zip(plan.box, chart.box):
            if plo < clo or phi > chi_:
                raise ConfigError("sample box exceeds the chart box")
    return EvalContext(chart, sample_points(plan))


# ---- vector-jet algebra ----------------------------------------------


def vadd(a: Vec, b: Vec) -> Vec:
    return [x + y for x, y in zip(a, b)]


def vsub(a: Vec, b: Vec) -> Vec:
    return [x - y for x, y in zip(a, b)]


def vneg(a: Vec) -> Vec:
    return [-x for x in a]


def vscale(c, a: Vec) -> Vec:
    return [c * x for x in a] if isinstance(c, Jet) else [x * c for x in a]


def endo_apply(E: list[list[Jet]], v: Vec) -> Vec:
    n = len(v)
    out = []
    for k in range(n):
        acc = E[k][0] * v[0]
        for j in range(1, n):
            acc = acc + E[k][j] * v[j]
        out.append(acc)
    return out


def metric_pair(G: list[list[Jet]], v: Vec, w: Vec) -> Jet:
    n = len(v)
    acc = None
    for i in range(n):
        for j in range(n):
            term = G[i][j] * v[i] * w[j]
            acc = term if acc is None else acc + term
    return acc


def oneform_apply(w: Vec, v: Vec) -> Jet:
    acc = w[0] * v[0]
    for i in range(1, len(v)):
        acc = acc + w[i] * v[i]
    return acc


def dirderiv(x: Vec, s: Jet) -> Jet:
    """Derivative of the scalar s along x, as a jet one order lower."""
    acc = x[0] * shift(s, 0)
    for i in range(1, len(x)):
        acc = acc + x[i] * shift(s, i)
    return acc


def bracket(x: Vec, y: Vec) -> Vec:
    """Commutator [x, y]; consumes one jet order."""
    n = len(x)
    out = []
    for k in range(n):
        acc = x[0] * shift(y[k], 0) - y[0] * shift(x[k], 0)
        for i in range(1, n):
            acc = acc + x[i] * shift(y[k], i) - y[i] * shift(x[k], i)
        out.append(acc)
    return out


def vvalues(v: Vec) -> np.ndarray:
    return np.stack([j.value for j in v], axis=-1)


def vmax_abs(v: Vec) -> np.ndarray:
    return np.max(np.abs(vvalues(v)), axis=-1)


def jets_matrix_values(M: list[list[Jet]]) -> np.ndarray:
    return np.stack([np.stack([e.value for e in row], axis=-1) for row in M], axis=-2)


def lie_bracket(ctx: EvalContext, X: VectorField, Y: VectorField) -> Vec:
    return bracket(ctx.vector(X), ctx.vector(Y))


# ---- structure-level residuals ---------------------------------------


def frame_pair_residual(ctx: EvalContext, fn) -> Residual:
    """Max |fn(X, Y)| over coordinate frame pairs; fn returns a Vec."""
    acc = ctx.residuals()
    frame = ctx.frame()
    for i, X in enumerate(frame):
        for j, Y in enumerate(frame):
            acc.update(vmax_abs(fn(X, Y)), frame=ctx.chart.frame_label(i, j))
    return acc.result()


def frame_triple_residual(ctx: EvalContext, fn) -> Residual:
    acc = ctx.residuals()
    frame = ctx.frame()
    for i, X in enumerate(frame):
        for j, Y in enumerate(frame):
            for k, Z in enumerate(frame):
                acc.update(vmax_abs(fn(X, Y, Z)), frame=ctx.chart.frame_label(i, j, k))
    return acc.result()


def frame_triple_scalar_residual(ctx: EvalContext, fn) -> Residual:
    """Like frame_triple_residual but fn returns a single Jet."""
    acc = ctx.residuals()
    frame = ctx.frame()
    for i, X in enumerate(frame):
        for j, Y in enumerate(frame):
            for k, Z in enumerate(frame):
                acc.update(np.abs(fn(X, Y, Z).value), frame=ctx.chart.frame_label(i, j, k))
    return acc.result()


def almost_product_residual(ctx: EvalContext, E: EndoField) -> Residual:
    A = jets_matrix_values(ctx.endo(E))
    eye = np.eye(ctx.chart.dim)
    res = np.max(np.abs(A @ A - eye), axis=(-2, -1))
    acc = ctx.residuals()
    acc.update(res)
    return acc.result()


def check_almost_product(E: EndoField, plan: SamplePlan, tol: float) -> Residual:
    res = almost_product_residual(context_for(E.chart, plan), E)
    if res.value > tol:
        res.frame = "not an involution"
    return res


def metric_compat_residual(ctx: EvalContext, g: MetricField, E: EndoField) -> Residual:
    G = ctx.metric_values(g)
    A = jets_matrix_values(ctx.endo(E))
    res = np.max(np.abs(np.swapaxes(A, -1, -2) @ G @ A - G), axis=(-2, -1))
    acc = ctx.residuals()
    acc.update(res)
    return acc.result()


def endo_from_difference(h: EndoField, v: EndoField, label: str = "E") -> EndoField:
    """Entrywise h - v at the expression level."""
    n = h.chart.dim
    rows = tuple(
        tuple(Sum((h.entries[k][j], Neg(v.entries[k][j]))) for j in range(n))
        for k in range(n))
    return EndoField(h.chart, rows, label=label)


def complement_endo(h: EndoField, label: str = "v") -> EndoField:
    """I - h at the expression level."""
    n = h.chart.dim
    rows = []
    for k in range(n):
        row = []
        for j in range(n):
            diag = ONE if k == j else ZERO
            row.append(Sum((diag, Neg(h.entries[k][j]))))
        rows.append(tuple(row))
    return EndoField(h.chart, tuple(rows), label=label)
