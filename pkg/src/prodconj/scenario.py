"""Scenario files: a line-oriented description of one verification setup.

Grammar.  Lines are either blank, comments (# or ;), section headers
`[type]` / `[type name]`, or `key = value` entries belonging to the open
section.  Values embed scalar expressions as prefix s-expressions; keys
that address components carry 0-based indices in the key itself, e.g.
`gamma 1 0 0 = (const 1)` or `row 0 = 1 (coord 0)`.

Section types:
  chart                dim, names (comma list, optional), box (lo:hi list)
  samples              seed, count
  tolerance            identity (default judging tolerance)
  vector NAME          components = expr expr ...
  oneform NAME         components = expr expr ...
  endo NAME            row K = expr ...            (output component K)
  metric NAME          upper K = expr ...          (entries (K,K)..(K,n-1))
  tensor NAME          comp K I J = expr, or kind = structure_derivative
                       (with connection = and structure =), or kind =
                       derivative_mix (adds lam = and mu = weights)
  connection NAME      kind = flat | christoffel | levi_civita | sum
  pair NAME            h = endo name (v derived), optionally v = endo name
  pencil NAME          first, second (endo names), alpha, beta (rationals)
  distribution NAME    span = vector names, or pair = name + side =
  check NAME           kind = registry kind, its parameters, and the
                       judging controls expect / floor / tol

Loading never evaluates a check; it does probe structural invariants
(involutivity of endos used as structures, metric symmetry implicitly by
storage, pencil skew commutation) on a small deterministic point batch so
misconfigured inputs fail before any residual is computed.  All errors are
collected and raised together, each with its source line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .checks import EXPECTATIONS, DEFAULT_FLOOR, CheckKind, kind_for
from .conjugation import Pencil, skew_commutation_residual
from .connections import (
    ChristoffelConnection,
    ConnectionOp,
    LeviCivitaConnection,
    SumConnection,
    flat_connection,
)
from .distributions import DistributionSpec, ProjectorPair, pair_from_h
from .errors import ConfigError, ScenarioError
from .expr import ZERO, Expr, parse_expr, validate_expr
from .fields import (
    Chart,
    EndoField,
    EvalContext,
    MetricField,
    OneFormField,
    Tensor12Field,
    VectorField,
    almost_product_residual,
    context_for,
)
from .generalized import mixed_derivative_twist, structure_derivative_twist
from .sampling import SamplePlan

_HEADER = re.compile(r"\[\s*([a-z_]+)(?:\s+([A-Za-z_][\w.-]*))?\s*\]$")
_NAMED_SECTIONS = ("vector", "oneform", "endo", "metric", "tensor",
                   "connection", "pair", "pencil", "distribution", "check")
_BARE_SECTIONS = ("chart", "samples", "tolerance")
_DEFAULT_TOL = 1e-9
_PROBE_COUNT = 8
_PROBE_TOL = 1e-9


@dataclass
class CheckSpec:
    name: str
    kind: CheckKind
    params: dict
    expect: str
    floor: float
    tol: float | None
    line: int


@dataclass
class Scenario:
    name: str
    chart: Chart
    plan: SamplePlan
    tol: float
    connections: dict[str, ConnectionOp] = field(default_factory=dict)
    endos: dict[str, EndoField] = field(default_factory=dict)
    metrics: dict[str, MetricField] = field(default_factory=dict)
    oneforms: dict[str, OneFormField] = field(default_factory=dict)
    vectors: dict[str, VectorField] = field(default_factory=dict)
    tensors: dict[str, Tensor12Field] = field(default_factory=dict)
    pairs: dict[str, ProjectorPair] = field(default_factory=dict)
    pencils: dict[str, Pencil] = field(default_factory=dict)
    distributions: dict[str, DistributionSpec] = field(default_factory=dict)
    checks: list[CheckSpec] = field(default_factory=list)


@dataclass
class _Section:
    type: str
    name: str | None
    line: int
    entries: list  # (key, value, line)


def _split_sexprs(text: str, line: int, errors: list) -> list[str]:
    """Split a value into top-level s-expressions / bare atoms."""
    parts, depth, start = [], 0, None
    for i, ch in enumerate(text):
        if ch == "(":
            if depth == 0 and start is not None:
                parts.append(text[start:i])
                start = None
            if depth == 0:
                start = i
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                errors.append(f"line {line}: unbalanced ')'")
                return []
            if depth == 0:
                parts.append(text[start:i + 1])
                start = None
        elif depth == 0:
            if ch.isspace():
                if start is not None:
                    parts.append(text[start:i])
                    start = None
            elif start is None:
                start = i
    if depth != 0:
        errors.append(f"line {line}: unbalanced '('")
        return []
    if start is not None:
        parts.append(text[start:])
    return parts


def _sections(text: str, errors: list) -> list[_Section]:
    out: list[_Section] = []
    current: _Section | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("["):
            m = _HEADER.match(line)
            if not m:
                errors.append(f"line {lineno}: malformed section header {line!r}")
                current = None
                continue
            stype, name = m.group(1), m.group(2)
            if stype in _BARE_SECTIONS:
                if name is not None:
                    errors.append(f"line {lineno}: section [{stype}] takes no name")
            elif stype in _NAMED_SECTIONS:
                if name is None:
                    errors.append(f"line {lineno}: section [{stype}] needs a name")
                    current = None
                    continue
            else:
                errors.append(f"line {lineno}: unknown section type {stype!r}")
                current = None
                continue
            current = _Section(stype, name, lineno, [])
            out.append(current)
        else:
            if "=" not in line:
                errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
                continue
            if current is None:
                errors.append(f"line {lineno}: entry outside any section")
                continue
            key, _, value = line.partition("=")
            current.entries.append((key.strip(), value.strip(), lineno))
    return out


class _Loader:
    def __init__(self, text: str, name: str):
        self.errors: list[str] = []
        self.name = name
        self.sections = _sections(text, self.errors)
        self.chart: Chart | None = None
        self.scn: Scenario | None = None

    def fail(self, line: int, message: str) -> None:
        self.errors.append(f"line {line}: {message}")

    def expr(self, text: str, line: int) -> Expr | None:
        try:
            e = parse_expr(text, self.chart.names if self.chart else None)
            if self.chart is not None:
                validate_expr(e, self.chart.dim)
            return e
        except ConfigError as exc:
            self.fail(line, str(exc))
            return None

    def exprs(self, value: str, line: int, want: int | None = None) -> list[Expr] | None:
        parts = _split_sexprs(value, line, self.errors)
        out = [self.expr(p, line) for p in parts]
        if any(e is None for e in out):
            return None
        if want is not None and len(out) != want:
            self.fail(line, f"expected {want} expressions, got {len(out)}")
            return None
        return out

    def entries_map(self, sec: _Section, allowed: tuple[str, ...]) -> dict:
        seen = {}
        for key, value, line in sec.entries:
            base = key.split()[0]
            if base not in allowed:
                self.fail(line, f"unknown key {key!r} in [{sec.type}]")
                continue
            if key in seen:
                self.fail(line, f"duplicate key {key!r}")
                continue
            seen[key] = (value, line)
        return seen

    # -- per-section builders -------------------------------------------

    def build_chart(self, sec: _Section) -> None:
        got = self.entries_map(sec, ("dim", "names", "box"))
        if "dim" not in got:
            self.fail(sec.line, "[chart] needs dim")
            return
        try:
            dim = int(got["dim"][0])
        except ValueError:
            self.fail(got["dim"][1], f"bad dim {got['dim'][0]!r}")
            return
        if "names" in got:
            names = tuple(n.strip() for n in got["names"][0].split(","))
        else:
            names = tuple(f"x{i}" for i in range(dim))
        box = tuple((-1.0, 1.0) for _ in range(dim))
        if "box" in got:
            value, line = got["box"]
            intervals = []
            for part in value.split(","):
                lo, sep, hi = part.strip().partition(":")
                try:
                    if not sep:
                        raise ValueError
                    intervals.append((float(lo), float(hi)))
                except ValueError:
                    self.fail(line, f"bad interval {part.strip()!r}, want lo:hi")
                    return
            box = tuple(intervals)
        try:
            self.chart = Chart(dim, names, box)
        except ConfigError as exc:
            self.fail(sec.line, str(exc))

    def build_fields(self) -> None:
        scn = self.scn
        for sec in self.sections:
            if sec.type == "vector" or sec.type == "oneform":
                got = self.entries_map(sec, ("components",))
                if "components" not in got:
                    self.fail(sec.line, f"[{sec.type} {sec.name}] needs components")
                    continue
                value, line = got["components"]
                comps = self.exprs(value, line, want=self.chart.dim)
                if comps is None:
                    continue
                cls = VectorField if sec.type == "vector" else OneFormField
                table = scn.vectors if sec.type == "vector" else scn.oneforms
                table[sec.name] = cls(self.chart, tuple(comps), label=sec.name)
            elif sec.type == "endo":
                rows: dict[int, list[Expr]] = {}
                ok = True
                for key, value, line in sec.entries:
                    parts = key.split()
                    if len(parts) != 2 or parts[0] != "row":
                        self.fail(line, f"[endo] keys look like 'row K', got {key!r}")
                        ok = False
                        continue
                    try:
                        k = int(parts[1])
                    except ValueError:
                        self.fail(line, f"bad row index {parts[1]!r}")
                        ok = False
                        continue
                    comps = self.exprs(value, line, want=self.chart.dim)
                    if comps is None:
                        ok = False
                        continue
                    rows[k] = comps
                if ok and sorted(rows) != list(range(self.chart.dim)):
                    self.fail(sec.line,
                              f"[endo {sec.name}] needs rows 0..{self.chart.dim - 1}")
                    ok = False
                if ok:
                    scn.endos[sec.name] = EndoField(
                        self.chart,
                        tuple(tuple(rows[k]) for k in range(self.chart.dim)),
                        label=sec.name)
            elif sec.type == "metric":
                n = self.chart.dim
                rows: dict[int, list[Expr]] = {}
                ok = True
                for key, value, line in sec.entries:
                    parts = key.split()
                    if len(parts) != 2 or parts[0] != "upper":
                        self.fail(line, f"[metric] keys look like 'upper K', got {key!r}")
                        ok = False
                        continue
                    try:
                        k = int(parts[1])
                    except ValueError:
                        self.fail(line, f"bad row index {parts[1]!r}")
                        ok = False
                        continue
                    if not 0 <= k < n:
                        self.fail(line, f"row index {k} outside 0..{n - 1}")
                        ok = False
                        continue
                    comps = self.exprs(value, line, want=n - k)
                    if comps is None:
                        ok = False
                        continue
                    rows[k] = comps
                if ok and sorted(rows) != list(range(n)):
                    self.fail(sec.line, f"[metric {sec.name}] needs upper rows 0..{n - 1}")
                    ok = False
                if ok:
                    scn.metrics[sec.name] = MetricField(
                        self.chart, tuple(tuple(rows[k]) for k in range(n)),
                        label=sec.name)
            elif sec.type == "tensor":
                self.build_component_tensor(sec)

    def build_component_tensor(self, sec: _Section) -> None:
        # derived tensors (kind = ...) wait until connections exist
        if any(k.split()[0] == "kind" for k, _, _ in sec.entries):
            return
        n = self.chart.dim
        comp = [[[ZERO for _ in range(n)] for _ in range(n)] for _ in range(n)]
        ok, seen = True, set()
        for key, value, line in sec.entries:
            parts = key.split()
            if len(parts) != 4 or parts[0] != "comp":
                self.fail(line, f"[tensor] keys look like 'comp K I J', got {key!r}")
                ok = False
                continue
            try:
                k, i, j = (int(p) for p in parts[1:])
            except ValueError:
                self.fail(line, f"bad indices in {key!r}")
                ok = False
                continue
            if not all(0 <= t < n for t in (k, i, j)):
                self.fail(line, f"indices in {key!r} outside 0..{n - 1}")
                ok = False
                continue
            if (k, i, j) in seen:
                self.fail(line, f"duplicate component {key!r}")
                ok = False
                continue
            seen.add((k, i, j))
            exprs = self.exprs(value, line, want=1)
            if exprs is None:
                ok = False
                continue
            comp[k][i][j] = exprs[0]
        if ok:
            self.scn.tensors[sec.name] = Tensor12Field.from_components(
                self.chart, comp, label=sec.name)

    def build_connections(self) -> None:
        scn = self.scn
        for sec in self.sections:
            if sec.type != "connection":
                continue
            got = {k: (v, ln) for k, v, ln in sec.entries
                   if " " not in k.strip()}
            kind = got.get("kind", ("christoffel", sec.line))[0]
            if kind == "flat":
                scn.connections[sec.name] = flat_connection(self.chart, label=sec.name)
            elif kind == "christoffel":
                n = self.chart.dim
                gamma = [[[ZERO for _ in range(n)] for _ in range(n)] for _ in range(n)]
                ok, seen = True, set()
                for key, value, line in sec.entries:
                    parts = key.split()
                    if parts[0] == "kind":
                        continue
                    if len(parts) != 4 or parts[0] != "gamma":
                        self.fail(line, f"[connection] keys look like 'gamma K I J', got {key!r}")
                        ok = False
                        continue
                    try:
                        k, i, j = (int(p) for p in parts[1:])
                    except ValueError:
                        self.fail(line, f"bad indices in {key!r}")
                        ok = False
                        continue
                    if not all(0 <= t < n for t in (k, i, j)):
                        self.fail(line, f"indices in {key!r} outside 0..{n - 1}")
                        ok = False
                        continue
                    if (k, i, j) in seen:
                        self.fail(line, f"duplicate coefficient {key!r}")
                        ok = False
                        continue
                    seen.add((k, i, j))
                    exprs = self.exprs(value, line, want=1)
                    if exprs is None:
                        ok = False
                        continue
                    gamma[k][i][j] = exprs[0]
                if ok:
                    scn.connections[sec.name] = ChristoffelConnection(
                        self.chart, gamma, label=sec.name)
            elif kind == "levi_civita":
                if "metric" not in got:
                    self.fail(sec.line, f"[connection {sec.name}] kind levi_civita needs metric")
                    continue
                mname, line = got["metric"]
                if mname not in scn.metrics:
                    self.fail(line, f"unknown metric {mname!r}")
                    continue
                scn.connections[sec.name] = LeviCivitaConnection(
                    scn.metrics[mname], label=sec.name)
            elif kind == "sum":
                missing = [k for k in ("base", "tensor") if k not in got]
                if missing:
                    self.fail(sec.line,
                              f"[connection {sec.name}] kind sum needs {missing[0]}")
                    continue
                bname, bline = got["base"]
                tname, tline = got["tensor"]
                if bname not in scn.connections:
                    self.fail(bline, f"unknown connection {bname!r} "
                                     "(sum bases must be defined earlier in the file)")
                    continue
                if tname not in scn.tensors:
                    self.fail(tline, f"unknown tensor {tname!r}")
                    continue
                scn.connections[sec.name] = SumConnection(
                    scn.connections[bname], scn.tensors[tname], label=sec.name)
            else:
                self.fail(sec.line, f"unknown connection kind {kind!r}")

    def build_derived_tensors(self) -> None:
        scn = self.scn
        for sec in self.sections:
            if sec.type != "tensor":
                continue
            got = {k: (v, ln) for k, v, ln in sec.entries if " " not in k.strip()}
            if "kind" not in got:
                continue
            kind, kline = got["kind"]
            if kind not in ("structure_derivative", "derivative_mix"):
                self.fail(kline, f"unknown tensor kind {kind!r}")
                continue
            missing = [k for k in ("connection", "structure") if k not in got]
            if missing:
                self.fail(sec.line, f"[tensor {sec.name}] kind "
                                    f"{kind} needs {missing[0]}")
                continue
            cname, cline = got["connection"]
            ename, eline = got["structure"]
            if cname not in scn.connections:
                self.fail(cline, f"unknown connection {cname!r}")
                continue
            if ename not in scn.endos:
                self.fail(eline, f"unknown endo {ename!r}")
                continue
            nabla = scn.connections[cname]
            endo = scn.endos[ename]
            if kind == "structure_derivative":
                scn.tensors[sec.name] = structure_derivative_twist(
                    nabla, endo, label=sec.name)
                continue
            weights = {}
            ok = True
            for key in ("lam", "mu"):
                if key not in got:
                    self.fail(sec.line, f"[tensor {sec.name}] kind "
                                        f"derivative_mix needs {key}")
                    ok = False
                    continue
                text, tline = got[key]
                try:
                    weights[key] = float(Fraction(text))
                except (ValueError, ZeroDivisionError):
                    self.fail(tline, f"bad number {text!r}")
                    ok = False
            if ok:
                scn.tensors[sec.name] = mixed_derivative_twist(
                    nabla, endo, weights["lam"], weights["mu"], label=sec.name)

    def build_pairs_pencils_distributions(self) -> None:
        scn = self.scn
        for sec in self.sections:
            if sec.type == "pair":
                got = self.entries_map(sec, ("h", "v"))
                if "h" not in got:
                    self.fail(sec.line, f"[pair {sec.name}] needs h")
                    continue
                hname, hline = got["h"]
                if hname not in scn.endos:
                    self.fail(hline, f"unknown endo {hname!r}")
                    continue
                try:
                    if "v" in got:
                        vname, vline = got["v"]
                        if vname not in scn.endos:
                            self.fail(vline, f"unknown endo {vname!r}")
                            continue
                        scn.pairs[sec.name] = ProjectorPair(
                            scn.endos[hname], scn.endos[vname])
                    else:
                        scn.pairs[sec.name] = pair_from_h(scn.endos[hname])
                except ConfigError as exc:
                    self.fail(sec.line, str(exc))
            elif sec.type == "pencil":
                got = self.entries_map(sec, ("first", "second", "alpha", "beta"))
                missing = [k for k in ("first", "second", "alpha", "beta")
                           if k not in got]
                if missing:
                    self.fail(sec.line, f"[pencil {sec.name}] needs {missing[0]}")
                    continue
                fname, fline = got["first"]
                sname, sline = got["second"]
                if fname not in scn.endos:
                    self.fail(fline, f"unknown endo {fname!r}")
                    continue
                if sname not in scn.endos:
                    self.fail(sline, f"unknown endo {sname!r}")
                    continue
                try:
                    alpha = Fraction(got["alpha"][0])
                    beta = Fraction(got["beta"][0])
                except ValueError:
                    self.fail(sec.line, "pencil weights must be rationals like 3/5")
                    continue
                try:
                    scn.pencils[sec.name] = Pencil(
                        scn.endos[fname], scn.endos[sname], alpha, beta)
                except ConfigError as exc:
                    self.fail(sec.line, str(exc))
            elif sec.type == "distribution":
                got = self.entries_map(sec, ("span", "pair", "side"))
                if "span" in got and "pair" not in got and "side" not in got:
                    value, line = got["span"]
                    names = [n.strip() for n in value.split(",")]
                    missing = [n for n in names if n not in scn.vectors]
                    if missing:
                        self.fail(line, f"unknown vector {missing[0]!r}")
                        continue
                    try:
                        scn.distributions[sec.name] = DistributionSpec.from_span(
                            [scn.vectors[n] for n in names], label=sec.name)
                    except ConfigError as exc:
                        self.fail(sec.line, str(exc))
                elif "pair" in got and "side" in got and "span" not in got:
                    pname, pline = got["pair"]
                    side, sline = got["side"]
                    if pname not in scn.pairs:
                        self.fail(pline, f"unknown pair {pname!r}")
                        continue
                    try:
                        scn.distributions[sec.name] = DistributionSpec.from_pair(
                            scn.pairs[pname], side, label=sec.name)
                    except ConfigError as exc:
                        self.fail(sline, str(exc))
                else:
                    self.fail(sec.line,
                              f"[distribution {sec.name}] needs either span "
                              "or pair + side")

    _ROLE_TABLES = {
        "connection": "connections",
        "structure": "endos",
        "metric": "metrics",
        "oneform": "oneforms",
        "tensor": "tensors",
        "pair": "pairs",
        "pencil": "pencils",
        "distribution": "distributions",
    }

    def resolve_param(self, spec, value: str, line: int):
        scn = self.scn
        role = spec.role
        if role in self._ROLE_TABLES:
            table = getattr(scn, self._ROLE_TABLES[role])
            if value not in table:
                self.fail(line, f"unknown {role} {value!r}")
                return None
            return table[value]
        if role == "vectors":
            names = [n.strip() for n in value.split(",")]
            missing = [n for n in names if n not in scn.vectors]
            if missing:
                self.fail(line, f"unknown vector {missing[0]!r}")
                return None
            return [scn.vectors[n] for n in names]
        if role == "expr":
            return self.expr(value, line)
        if role == "float":
            try:
                return float(Fraction(value))
            except (ValueError, ZeroDivisionError):
                self.fail(line, f"bad number {value!r}")
                return None
        if role == "grid":
            pairs = []
            for part in value.split(";"):
                bits = part.split(",")
                try:
                    if len(bits) != 2:
                        raise ValueError
                    pairs.append((float(bits[0]), float(bits[1])))
                except ValueError:
                    self.fail(line, f"bad grid entry {part.strip()!r}, want lam,mu")
                    return None
            return pairs
        if role == "str":
            if spec.choices is not None and value not in spec.choices:
                self.fail(line, f"value {value!r} not one of {spec.choices}")
                return None
            return value
        self.fail(line, f"unhandled parameter role {role!r}")
        return None

    def build_checks(self) -> None:
        scn = self.scn
        for sec in self.sections:
            if sec.type != "check":
                continue
            got = {k: (v, ln) for k, v, ln in sec.entries}
            if any(" " in k for k in got):
                bad = next(k for k in got if " " in k)
                self.fail(sec.line, f"[check] keys are single words, got {bad!r}")
                continue
            if "kind" not in got:
                self.fail(sec.line, f"[check {sec.name}] needs kind")
                continue
            try:
                kind = kind_for(got["kind"][0])
            except ConfigError as exc:
                self.fail(got["kind"][1], str(exc))
                continue
            expect = got.get("expect", ("pass", sec.line))[0]
            if expect not in EXPECTATIONS:
                self.fail(got["expect"][1],
                          f"expect must be one of {EXPECTATIONS}, got {expect!r}")
                continue
            floor = DEFAULT_FLOOR
            if "floor" in got:
                try:
                    floor = float(got["floor"][0])
                except ValueError:
                    self.fail(got["floor"][1], f"bad floor {got['floor'][0]!r}")
                    continue
            tol = None
            if "tol" in got:
                try:
                    tol = float(got["tol"][0])
                except ValueError:
                    self.fail(got["tol"][1], f"bad tol {got['tol'][0]!r}")
                    continue
            reserved = {"kind", "expect", "floor", "tol"}
            unknown = [k for k in got
                       if k not in reserved and k not in kind.params]
            if unknown:
                self.fail(got[unknown[0]][1],
                          f"check kind {kind.name!r} takes no parameter {unknown[0]!r}")
                continue
            params, ok = {}, True
            for pname, spec in kind.params.items():
                if pname in got:
                    value, line = got[pname]
                    resolved = self.resolve_param(spec, value, line)
                    params[pname] = resolved
                    if resolved is None:
                        ok = False
                elif spec.required:
                    self.fail(sec.line,
                              f"check kind {kind.name!r} needs parameter {pname!r}")
                    ok = False
                else:
                    params[pname] = spec.default
            if ok:
                scn.checks.append(CheckSpec(sec.name, kind, params,
                                            expect, floor, tol, sec.line))

    def probe_structures(self) -> None:
        """Cheap load-time screens on a tiny point batch.

        Structures used by checks must square to the identity and pencil
        members must skew-commute; a scenario violating either is refused
        before any residual work starts.  Endos that only serve as raw
        projectors (pair members, skew probes) are exempt.
        """
        if self.errors or self.scn is None:
            return
        scn = self.scn
        used_as_structure: set[str] = set()
        for check in scn.checks:
            for pname, spec in check.kind.params.items():
                if spec.role == "structure" and check.params.get(pname) is not None:
                    used_as_structure.add(check.params[pname].label)
        plan = SamplePlan(seed=scn.plan.seed, count=_PROBE_COUNT, box=scn.chart.box)
        try:
            ctx = context_for(scn.chart, plan)
        except ConfigError as exc:
            self.errors.append(f"probe sampling failed: {exc}")
            return
        skip = {check.params["structure"].label
                for check in scn.checks
                if check.kind.name == "almost_product" and check.expect == "fail"}
        for name in sorted(used_as_structure - skip):
            if name not in scn.endos:
                continue  # pencil-built structures are validated via the pencil
            try:
                res = almost_product_residual(ctx, scn.endos[name])
            except Exception as exc:  # noqa: BLE001 - surface as config error
                self.errors.append(f"endo {name!r}: probe evaluation failed: {exc}")
                continue
            if res.value > _PROBE_TOL:
                self.errors.append(
                    f"endo {name!r} is not involutive (residual {res.value:.3e} "
                    f"at probe points); refusing to conjugate by it")
        for name in sorted(scn.pencils):
            pencil = scn.pencils[name]
            res = skew_commutation_residual(ctx, pencil.first, pencil.second)
            if res.value > _PROBE_TOL:
                self.errors.append(
                    f"pencil {name!r}: members do not skew-commute "
                    f"(residual {res.value:.3e} at probe points)")

    def load(self) -> Scenario:
        chart_secs = [s for s in self.sections if s.type == "chart"]
        if len(chart_secs) != 1:
            self.errors.append(f"need exactly one [chart] section, found {len(chart_secs)}")
        else:
            self.build_chart(chart_secs[0])
        if self.chart is None:
            raise ScenarioError(self.errors or ["chart section failed to load"])

        seed, count = 7, 200
        for sec in self.sections:
            if sec.type == "samples":
                got = self.entries_map(sec, ("seed", "count"))
                try:
                    if "seed" in got:
                        seed = int(got["seed"][0])
                    if "count" in got:
                        count = int(got["count"][0])
                except ValueError:
                    self.fail(sec.line, "seed and count must be integers")
        tol = _DEFAULT_TOL
        for sec in self.sections:
            if sec.type == "tolerance":
                got = self.entries_map(sec, ("identity",))
                if "identity" in got:
                    try:
                        tol = float(got["identity"][0])
                    except ValueError:
                        self.fail(got["identity"][1],
                                  f"bad tolerance {got['identity'][0]!r}")

        names = set()
        for sec in self.sections:
            if sec.name is not None:
                key = (sec.type, sec.name)
                if key in names:
                    self.fail(sec.line, f"duplicate [{sec.type} {sec.name}]")
                names.add(key)

        self.scn = Scenario(self.name, self.chart,
                            SamplePlan(seed=seed, count=count, box=self.chart.box),
                            tol)
        self.build_fields()
        self.build_connections()
        self.build_derived_tensors()
        self.build_pairs_pencils_distributions()
        self.build_checks()
        self.probe_structures()
        if self.errors:
            raise ScenarioError(self.errors)
        return self.scn


def load_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse and validate; raises ScenarioError carrying every problem found."""
    return _Loader(text, name).load()


def make_context(scenario: Scenario, seed: int | None = None,
                 count: int | None = None) -> EvalContext:
    plan = scenario.plan
    if seed is not None or count is not None:
        plan = SamplePlan(seed=plan.seed if seed is None else seed,
                          count=plan.count if count is None else count,
                          box=plan.box)
    return context_for(scenario.chart, plan)
