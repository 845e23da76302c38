"""Check registry: every runnable identity check, with anchors and judging.

A check kind bundles a runner over resolved scenario objects, a parameter
schema the loader validates against, an anchor for each row it can emit,
and the set of rows whose judgment flips under a failure expectation.
Anchors are the harness's own catalog labels tying rows to the source
material's numbered statements; infrastructure rows carry "plumbing".

Expectation semantics, per check:
  pass             every row's residual must sit within tolerance.
  fail             rows listed as invertible must EXCEED the floor (the
                   instance is a deliberate counterexample); other rows
                   are judged normally.
  hypothesis_fail  at least one hypothesis_* row must exceed the floor
                   and the rows it gates must come back skipped; a check
                   whose hypotheses all hold under this expectation fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .conjugation import (
    conjugate_suite,
    mean_decomposition_suite,
    membership_suite,
    metric_consequence_suite,
    pencil_suite,
    projective_suite,
    projector_suite,
    psi_connection,
    recurrent_suite,
    skew_commutation_residual,
    splitting_suite,
)
from .connections import connection_laws_residual, torsion_residual
from .expr import parse_expr
from .distributions import (
    conjugate_geodesic_rows,
    conjugate_restriction_rows,
    conjugate_torsion_magnitude,
    geodesic_residual,
    hv_form_rows,
    invariance_residual,
    involutivity_rows,
    pair_axiom_rows,
    restriction_collapse_rows,
    restriction_residual,
    schouten_rows,
    skew_pair_rows,
    splitting_block_rows,
    structure_rows,
)
from .errors import ConfigError
from .fields import almost_product_residual, metric_compat_residual
from .generalized import (
    curvature_transcription_residual,
    degeneration_rows,
    duality_rows,
    family_rows,
    generalized_identity_rows,
    sweep_rows,
)
from .reporting import ERROR, FAIL, PASS, SKIP, CheckRow

EXPECTATIONS = ("pass", "fail", "hypothesis_fail")
DEFAULT_FLOOR = 1e-3

# product-rule probes default to a weight with a nonconstant gradient
_DEFAULT_WEIGHT = parse_expr("(* (coord 0) (coord 0))")

# the sweep grid shipped when a scenario does not spell its own out:
# the four closing pairs plus twelve probes that must visibly fail
DEFAULT_GRID = (
    (0.0, 0.0), (0.0, -2.0), (1.0, -1.0), (-1.0, -1.0),
    (0.5, 0.0), (0.0, -1.0), (1.0, 0.0), (-1.0, 0.0),
    (0.0, 1.0), (1.0, 1.0), (2.0, 0.0), (0.0, 0.5),
    (-0.5, -1.0), (1.0, -2.0), (-1.0, 1.0), (0.25, -0.5),
)


@dataclass(frozen=True)
class ParamSpec:
    """One check parameter: its resolution role and default.

    Roles name object tables of the scenario (connection, structure,
    metric, oneform, tensor, pair, pencil, distribution), plain values
    (float, str), or composites (vectors = comma-joined vector-field
    names, grid = semicolon-joined coefficient pairs, expr = scalar
    expression text).
    """

    role: str
    required: bool = False
    default: object = None
    choices: tuple[str, ...] | None = None


@dataclass(frozen=True)
class CheckKind:
    name: str
    summary: str
    runner: Callable
    params: dict[str, ParamSpec] = field(default_factory=dict)
    anchors: dict[str, str] = field(default_factory=dict)
    default_anchor: str = "plumbing"
    invertible: frozenset = frozenset()

    def anchor_for(self, row_name: str, params: dict) -> str:
        override = _ANCHOR_HOOKS.get(self.name)
        if override is not None:
            got = override(row_name, params)
            if got is not None:
                return got
        return self.anchors.get(row_name, self.default_anchor)


def _recurrent_anchor(row_name: str, params: dict) -> str | None:
    if row_name == "torsion_shape":
        return "P1.2.i" if params.get("mode") == "structure" else "P1.2.ii"
    return None


_ANCHOR_HOOKS: dict[str, Callable] = {"recurrent": _recurrent_anchor}


# ---- runners -----------------------------------------------------------
# Each runner takes (ctx, params, tol) and returns rows as
# (name, residual_or_None, note) triples, the shared suite convention.


def _run_almost_product(ctx, p, tol):
    return [("involution", almost_product_residual(ctx, p["structure"]), "")]


def _run_metric_compat(ctx, p, tol):
    return [("compatibility",
             metric_compat_residual(ctx, p["metric"], p["structure"]), "")]


def _run_connection_laws(ctx, p, tol):
    frame = ctx.frame()
    res = connection_laws_residual(ctx, p["connection"], p["weight"],
                                   frame[0], frame[-1])
    return [("laws", res, "tensoriality and the product rule")]


def _run_torsion_free(ctx, p, tol):
    return [("torsion", torsion_residual(ctx, p["connection"]), "")]


def _run_prop11(ctx, p, tol):
    return conjugate_suite(ctx, p["connection"], p["structure"],
                           metric=p.get("metric"), compat_tol=tol)


def _run_psi_chi(ctx, p, tol):
    return projector_suite(ctx, p["connection"], p["structure"], p["tau"])


def _run_mean_decomposition(ctx, p, tol):
    return mean_decomposition_suite(ctx, p["connection"], p["structure"])


def _run_membership(ctx, p, tol):
    return membership_suite(ctx, p["connection"], p["structure"])


def _run_levi_civita_props(ctx, p, tol):
    return metric_consequence_suite(ctx, p["connection"], p["structure"],
                                    p["metric"], tol)


def _run_recurrent(ctx, p, tol):
    return recurrent_suite(ctx, p["connection"], p["structure"],
                           p["eta"], p["mode"], tol)


def _run_pencil(ctx, p, tol):
    return pencil_suite(ctx, p["connection"], p["pencil"],
                        eta=p.get("eta"), case=p.get("case"), tol=tol)


def _run_kirichenko(ctx, p, tol):
    return splitting_suite(ctx, p["connection"], p["structure"])


def _run_projective(ctx, p, tol):
    return projective_suite(ctx, p["connection"], p["structure"], p["tau"])


def _run_pair_axioms(ctx, p, tol):
    return pair_axiom_rows(ctx, p["pair"])


def _run_structure_from_pair(ctx, p, tol):
    return structure_rows(ctx, p["pair"])


def _run_invariant_distribution(ctx, p, tol):
    return [("invariance",
             invariance_residual(ctx, p["distribution"], p["structure"]), "")]


def _run_restricts(ctx, p, tol):
    return [("restriction",
             restriction_residual(ctx, p["connection"], p["distribution"]), "")]


def _run_geodesic_invariant(ctx, p, tol):
    return [("geodesic",
             geodesic_residual(ctx, p["connection"], p["distribution"]), "")]


def _run_prop22(ctx, p, tol):
    return conjugate_restriction_rows(ctx, p["connection"], p["distribution"],
                                      p["structure"], tol)


def _run_prop23(ctx, p, tol):
    return conjugate_geodesic_rows(ctx, p["connection"], p["distribution"],
                                   p["structure"], tol)


def _run_conjugate_hv(ctx, p, tol):
    return hv_form_rows(ctx, p["connection"], p["pair"])


def _run_restriction_collapse(ctx, p, tol):
    return restriction_collapse_rows(ctx, p["connection"], p["pair"], tol)


def _run_schouten(ctx, p, tol):
    return schouten_rows(ctx, p["connection"], p["pair"], tol)


def _run_prop25(ctx, p, tol):
    return involutivity_rows(ctx, p["connection"], p["pair"], tol)


def _run_nonzero_torsion(ctx, p, tol):
    res = conjugate_torsion_magnitude(ctx, p["connection"], p["pair"])
    return [("conjugate_torsion", res,
             "conjugate torsion magnitude; a counterexample must keep it large")]


def _run_prop27(ctx, p, tol):
    return splitting_block_rows(ctx, p["connection"], p["pair"])


def _run_skew_pairs(ctx, p, tol):
    rows = skew_pair_rows(ctx, p["pair"], p["other"])
    return [r for r in rows if r[0] in ("structure_skew", "projector_skew")]


def _run_skew_bridge(ctx, p, tol):
    rows = skew_pair_rows(ctx, p["pair"], p["other"])
    return [r for r in rows if r[0] == "defect_bridge"]


def _run_duality(ctx, p, tol):
    return duality_rows(ctx, p["connection"], p["structure"], p["twist"])


def _run_family(ctx, p, tol):
    return family_rows(ctx, p["connection"], p["structure"],
                       p["lam"], p["mu"], p["weight"])


def _vecs(ctx, fields):
    return None if fields is None else [ctx.vector(f) for f in fields]


def _run_prop32_sweep(ctx, p, tol):
    return sweep_rows(ctx, p["connection"], p["structure"], p["grid"],
                      _vecs(ctx, p["probes"]), tol, p["floor"])


def _run_generalized_identities(ctx, p, tol):
    return generalized_identity_rows(ctx, p["connection"], p["structure"],
                                     p["twist"], tol,
                                     probes=_vecs(ctx, p.get("probes")))


def _run_curvature_transcription(ctx, p, tol):
    res = curvature_transcription_residual(ctx, p["connection"], p["structure"],
                                           p["twist"],
                                           probes=_vecs(ctx, p.get("probes")))
    return [("transcription", res,
             "shortened curvature form; only a vanishing twist satisfies it")]


def _run_degeneration(ctx, p, tol):
    return degeneration_rows(ctx, p["connection"], p["structure"])


def _run_pencil_precondition(ctx, p, tol):
    return [("skew_commutation",
             skew_commutation_residual(ctx, p["first"], p["second"]), "")]


def _run_psi_laws(ctx, p, tol):
    psi = psi_connection(p["connection"], p["structure"])
    frame = ctx.frame()
    res = connection_laws_residual(ctx, psi, p["weight"], frame[0], frame[-1])
    return [("laws", res, "the averaged operator is a connection")]


# ---- the registry ------------------------------------------------------


def _kinds() -> dict[str, CheckKind]:
    conn = {"connection": ParamSpec("connection", required=True)}
    conn_struct = dict(conn, structure=ParamSpec("structure", required=True))
    table = [
        CheckKind(
            "almost_product",
            "squared structure against the identity",
            _run_almost_product,
            params={"structure": ParamSpec("structure", required=True)},
            anchors={"involution": "0.0"},
            invertible=frozenset({"involution"})),
        CheckKind(
            "metric_compat",
            "metric against structure compatibility",
            _run_metric_compat,
            params={"metric": ParamSpec("metric", required=True),
                    "structure": ParamSpec("structure", required=True)},
            anchors={"compatibility": "1.7"},
            invertible=frozenset({"compatibility"})),
        CheckKind(
            "connection_laws",
            "tensoriality in the direction, product rule in the argument",
            _run_connection_laws,
            params=dict(conn, weight=ParamSpec("expr", default=_DEFAULT_WEIGHT))),
        CheckKind(
            "torsion_free",
            "torsion of a connection on the coordinate frame",
            _run_torsion_free,
            params=dict(conn),
            invertible=frozenset({"torsion"})),
        CheckKind(
            "prop11",
            "conjugate basics: derivative flip, transport, involution, torsion, curvature, metric",
            _run_prop11,
            params=dict(conn_struct, metric=ParamSpec("metric")),
            anchors={
                "structure_flip": "P1.1.1,1.4",
                "argument_transport": "1.3",
                "involution": "P1.1.2,0.6",
                "torsion_shift": "P1.1.3,1.5",
                "curvature_transport": "P1.1.4,1.6",
                "metric_transport": "P1.1.5,1.7",
            }),
        CheckKind(
            "psi_chi",
            "projector algebra of the averaging pair",
            _run_psi_chi,
            params=dict(conn_struct, tau=ParamSpec("tensor", required=True)),
            anchors={
                "psi_idempotent": "0.4,0.2",
                "chi_idempotent": "0.4,0.3",
                "affinity": "0.4,0.1",
                "image_parallel": "D0.1",
            }),
        CheckKind(
            "psi_laws",
            "the averaged operator obeys the connection axioms",
            _run_psi_laws,
            params=dict(conn_struct, weight=ParamSpec("expr", default=_DEFAULT_WEIGHT))),
        CheckKind(
            "mean_decomposition",
            "average of base and conjugate, against both presentations",
            _run_mean_decomposition,
            params=dict(conn_struct),
            anchors={"halving": "0.5", "forms_agreement": "1.1,1.2"}),
        CheckKind(
            "membership",
            "parallel structure and the fixed-point characterization",
            _run_membership,
            params=dict(conn_struct),
            anchors={"parallel_structure": "D0.1", "fixed_point": "D0.1"},
            invertible=frozenset({"parallel_structure", "fixed_point"})),
        CheckKind(
            "levi_civita_props",
            "metric-born connection: conjugate metricity and the parallel collapse",
            _run_levi_civita_props,
            params=dict(conn_struct, metric=ParamSpec("metric", required=True)),
            anchors={
                "compatibility": "1.7",
                "conjugate_metricity": "C1.i",
                "parallel_collapse": "C1.ii",
            }),
        CheckKind(
            "recurrent",
            "torsion shape of the conjugate under a recurrence hypothesis",
            _run_recurrent,
            params=dict(conn_struct,
                        eta=ParamSpec("oneform", required=True),
                        mode=ParamSpec("str", required=True,
                                       choices=("structure", "identity"))),
            anchors={
                "hypothesis_recurrence": "P1.2",
                "hypothesis_symmetry": "P1.2",
            },
            default_anchor="P1.2"),
        CheckKind(
            "pencil_precondition",
            "skew commutation of two structures",
            _run_pencil_precondition,
            params={"first": ParamSpec("structure", required=True),
                    "second": ParamSpec("structure", required=True)},
            anchors={"skew_commutation": "1.8"},
            invertible=frozenset({"skew_commutation"})),
        CheckKind(
            "pencil",
            "mixing rule of a structure pencil, axis reductions, special cases",
            _run_pencil,
            params=dict(conn,
                        pencil=ParamSpec("pencil", required=True),
                        eta=ParamSpec("oneform"),
                        case=ParamSpec("str", choices=("recurrent", "mixed")),
                        reduction_tol=ParamSpec("float", default=1e-12)),
            anchors={
                "skew_commutation": "1.8",
                "mixing_rule": "1.8",
                "axis_reduction_first": "1.8",
                "axis_reduction_second": "1.8",
                "hypothesis_recurrence": "1.9",
                "conjugates_coincide": "1.9",
                "pencil_invariance": "1.9",
                "hypothesis_mixed": "1.10",
                "average": "1.10",
                "pencil_shift": "1.10",
            }),
        CheckKind(
            "kirichenko",
            "structural and virtual tensors: flips, rotations, decomposition",
            _run_kirichenko,
            params=dict(conn_struct),
            anchors={
                "structural_flip": "1.13,1.11",
                "virtual_flip": "1.13,1.12",
                "structural_rotation": "1.14",
                "virtual_rotation": "1.14",
                "decomposition": "1.15",
            }),
        CheckKind(
            "projective_change",
            "projective shift: structural invariance, virtual difference",
            _run_projective,
            params=dict(conn_struct, tau=ParamSpec("oneform", required=True)),
            anchors={
                "structural_invariance": "1.16",
                "virtual_difference": "1.17",
            }),
        CheckKind(
            "pair_axioms",
            "complementary projector algebra",
            _run_pair_axioms,
            params={"pair": ParamSpec("pair", required=True)},
            default_anchor="D2.1"),
        CheckKind(
            "structure_from_pair",
            "difference structure and the half-sum/half-difference inverses",
            _run_structure_from_pair,
            params={"pair": ParamSpec("pair", required=True)},
            default_anchor="2.1"),
        CheckKind(
            "invariant_distribution",
            "distribution invariance under the structure",
            _run_invariant_distribution,
            params={"distribution": ParamSpec("distribution", required=True),
                    "structure": ParamSpec("structure", required=True)},
            anchors={"invariance": "P2.2"},
            invertible=frozenset({"invariance"})),
        CheckKind(
            "restricts",
            "covariant derivative stays inside the distribution",
            _run_restricts,
            params=dict(conn, distribution=ParamSpec("distribution", required=True)),
            anchors={"restriction": "D2.1.i"},
            invertible=frozenset({"restriction"})),
        CheckKind(
            "geodesic_invariant",
            "symmetrized covariant derivative stays inside the distribution",
            _run_geodesic_invariant,
            params=dict(conn, distribution=ParamSpec("distribution", required=True)),
            anchors={"geodesic": "D2.1.ii"},
            invertible=frozenset({"geodesic"})),
        CheckKind(
            "prop22",
            "invariance plus restriction carries over to the conjugate",
            _run_prop22,
            params=dict(conn,
                        distribution=ParamSpec("distribution", required=True),
                        structure=ParamSpec("structure", required=True)),
            anchors={
                "hypothesis_invariance": "P2.2",
                "hypothesis_restriction": "D2.1.i",
                "conjugate_restricts": "P2.2",
            }),
        CheckKind(
            "prop23",
            "invariance plus restriction makes the conjugate geodesically invariant",
            _run_prop23,
            params=dict(conn,
                        distribution=ParamSpec("distribution", required=True),
                        structure=ParamSpec("structure", required=True)),
            anchors={
                "hypothesis_invariance": "P2.3",
                "hypothesis_restriction": "D2.1.i",
                "conjugate_geodesic": "P2.3",
            }),
        CheckKind(
            "conjugate_hv",
            "conjugate by the difference structure in projected form",
            _run_conjugate_hv,
            params=dict(conn, pair=ParamSpec("pair", required=True)),
            anchors={"four_term_form": "2.2"}),
        CheckKind(
            "restriction_collapse",
            "a connection restricting to both sides is its own conjugate",
            _run_restriction_collapse,
            params=dict(conn, pair=ParamSpec("pair", required=True)),
            default_anchor="2.3"),
        CheckKind(
            "schouten",
            "projected-sum connection: restriction, parallelism, self-conjugacy",
            _run_schouten,
            params=dict(conn, pair=ParamSpec("pair", required=True)),
            default_anchor="2.4"),
        CheckKind(
            "prop25",
            "torsion-free conjugate forces both distributions involutive",
            _run_prop25,
            params=dict(conn, pair=ParamSpec("pair", required=True)),
            default_anchor="P2.5"),
        CheckKind(
            "nonzero_torsion",
            "conjugate torsion magnitude on a non-involutive pair",
            _run_nonzero_torsion,
            params=dict(conn, pair=ParamSpec("pair", required=True)),
            anchors={"conjugate_torsion": "X2.4"},
            invertible=frozenset({"conjugate_torsion"})),
        CheckKind(
            "prop27",
            "block structure of the splitting tensors over the two distributions",
            _run_prop27,
            params=dict(conn, pair=ParamSpec("pair", required=True)),
            anchors={
                "structural_formula": "P2.7,2.5",
                "virtual_formula": "P2.7,2.5",
                "cross_antisymmetry": "2.6",
                "diagonal_antisymmetry": "2.6",
                "cross_vanishing": "2.7",
                "diagonal_vanishing": "2.7",
                "structural_split": "2.8",
                "virtual_split": "2.8",
                "structural_blocks": "2.9",
                "virtual_blocks": "2.10",
                "fundamental_structural": "2.12,2.11",
                "fundamental_virtual": "2.12,2.11",
            }),
        CheckKind(
            "skew_pairs",
            "skew commutation of two pair structures and their projectors",
            _run_skew_pairs,
            params={"pair": ParamSpec("pair", required=True),
                    "other": ParamSpec("pair", required=True)},
            default_anchor="X2.5",
            invertible=frozenset({"structure_skew", "projector_skew"})),
        CheckKind(
            "skew_bridge",
            "structure anticommutator rewritten through the projectors",
            _run_skew_bridge,
            params={"pair": ParamSpec("pair", required=True),
                    "other": ParamSpec("pair", required=True)},
            default_anchor="X2.5"),
        CheckKind(
            "duality",
            "twist kernel condition and the double application",
            _run_duality,
            params=dict(conn_struct, twist=ParamSpec("tensor", required=True)),
            anchors={
                "defect": "3.3",
                "double_application": "3.2",
                "expansion": "D3.1,3.1,3.2",
                "canonical_solution": "3.3",
                "rotation_closure": "3.3",
            },
            invertible=frozenset({"defect", "double_application"})),
        CheckKind(
            "family",
            "one coefficient pair of the scaled family",
            _run_family,
            params=dict(conn_struct,
                        lam=ParamSpec("float", required=True),
                        mu=ParamSpec("float", required=True),
                        weight=ParamSpec("expr", default=_DEFAULT_WEIGHT)),
            anchors={
                "route_agreement": "3.4",
                "leibniz_scaling": "3.4",
                "reduction": "3.4,P3.2",
            }),
        CheckKind(
            "prop32_sweep",
            "grid sweep of the family: closure set and coefficient extraction",
            _run_prop32_sweep,
            params=dict(conn_struct,
                        probes=ParamSpec("vectors", required=True),
                        grid=ParamSpec("grid", default=DEFAULT_GRID),
                        floor=ParamSpec("float", default=DEFAULT_FLOOR)),
            default_anchor="P3.2"),
        CheckKind(
            "generalized_identities",
            "twisted operator: structure derivative, torsion, curvature",
            _run_generalized_identities,
            params=dict(conn_struct,
                        twist=ParamSpec("tensor", required=True),
                        probes=ParamSpec("vectors")),
            anchors={
                "structure_derivative": "G.1",
                "torsion_form": "G.3",
                "torsion_collapse": "G.3",
                "curvature_form": "G.4",
            }),
        CheckKind(
            "curvature_transcription",
            "shortened curvature form that only a vanishing twist satisfies",
            _run_curvature_transcription,
            params=dict(conn_struct,
                        twist=ParamSpec("tensor", required=True),
                        probes=ParamSpec("vectors")),
            anchors={"transcription": "G.4"},
            invertible=frozenset({"transcription"})),
        CheckKind(
            "degeneration",
            "zero twist recovers the plain conjugate",
            _run_degeneration,
            params=dict(conn_struct),
            anchors={"zero_twist": "D3.1"}),
    ]
    return {k.name: k for k in table}


REGISTRY: dict[str, CheckKind] = _kinds()

# per-kind tolerance overrides for individual rows: row name -> param name
_ROW_TOL_PARAMS: dict[str, dict[str, str]] = {
    "pencil": {"axis_reduction_first": "reduction_tol",
               "axis_reduction_second": "reduction_tol"},
}


def kind_for(name: str) -> CheckKind:
    try:
        return REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise ConfigError(f"unknown check kind {name!r}; known kinds: {known}")


def judge(check_id: str, kind: CheckKind, rows, params: dict,
          tol: float, floor: float, expect: str) -> list[CheckRow]:
    """Turn suite rows into judged report rows under the expectation."""
    out: list[CheckRow] = []
    row_tols = _ROW_TOL_PARAMS.get(kind.name, {})
    hypothesis_violated = False
    for name, res, note in rows:
        row_id = f"{check_id}.{name}"
        anchor = kind.anchor_for(name, params)
        if res is None:
            status = SKIP
            if expect == "hypothesis_fail":
                note = (note + "; " if note else "") + "skip expected here"
            out.append(CheckRow(row_id, anchor, math.nan, status, note=note))
            continue
        row_tol = tol
        if name in row_tols:
            row_tol = float(params[row_tols[name]])
        inverted = expect == "fail" and name in kind.invertible
        if expect == "hypothesis_fail" and name.startswith("hypothesis_") \
                and res.value > floor:
            hypothesis_violated = True
            out.append(CheckRow(row_id, anchor, res.value, PASS,
                                res.worst_point, res.frame,
                                (note + "; " if note else "") + "hypothesis violated as expected"))
            continue
        if inverted:
            status = PASS if res.value > floor else FAIL
            out.append(CheckRow(row_id, anchor, res.value, status,
                                res.worst_point, res.frame,
                                (note + "; " if note else "")
                                + f"expected violation, floor {floor:g}"))
        else:
            out.append(CheckRow.judged(row_id, anchor, res, row_tol, note))
    if expect == "hypothesis_fail" and not hypothesis_violated:
        out.append(CheckRow(f"{check_id}.expectation", kind.default_anchor,
                            math.inf, FAIL,
                            note="expected a hypothesis violation; every hypothesis held"))
    return out


def error_row(check_id: str, kind: CheckKind, exc: Exception) -> CheckRow:
    return CheckRow(f"{check_id}.error", kind.default_anchor, math.inf, ERROR,
                    note=f"{type(exc).__name__}: {exc}")


def catalog_lines() -> list[str]:
    """Stable catalog listing: kind, anchors, one-line summary."""
    lines = []
    for name in sorted(REGISTRY):
        kind = REGISTRY[name]
        anchors = set()
        for value in kind.anchors.values():
            anchors.update(value.split(","))
        if kind.name in _ANCHOR_HOOKS or not kind.anchors:
            anchors.add(kind.default_anchor)
        if kind.name == "recurrent":
            anchors.update({"P1.2.i", "P1.2.ii"})
        label = ",".join(sorted(anchors))
        lines.append(f"{name}\t{label}\t{kind.summary}")
    return lines
