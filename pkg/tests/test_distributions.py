"""Projector pairs, distribution membership, and splitting invariants."""

import numpy as np
import pytest

from prodconj.errors import ConfigError, EvaluationError
from prodconj.expr import ZERO, parse_expr
from prodconj.fields import (
    Chart,
    EndoField,
    EvalContext,
    MetricField,
    VectorField,
    context_for,
    vvalues,
)
from prodconj.connections import ChristoffelConnection, LeviCivitaConnection, flat_connection
from prodconj.distributions import (
    DistributionSpec,
    ProjectorPair,
    SchoutenConnection,
    conjugate_geodesic_rows,
    conjugate_restriction_rows,
    conjugate_torsion_magnitude,
    fundamental_tensors,
    geodesic_residual,
    hv_form_rows,
    invariance_residual,
    involutivity_rows,
    pair_axiom_rows,
    pair_from_h,
    restriction_collapse_rows,
    restriction_residual,
    schouten_rows,
    skew_pair_rows,
    splitting_block_rows,
    structure_rows,
)
from prodconj.sampling import SamplePlan

BOX = ((-1.0, 1.0), (-1.0, 1.0))
CHART = Chart(2, ("x", "y"), BOX)


def _p(text):
    return parse_expr(text, names=("x", "y"))


def _endo(rows, label="E"):
    return EndoField(CHART, tuple(tuple(_p(t) for t in row) for row in rows), label=label)


HX = _endo([("1", "0"), ("x", "0")], "hx")          # x-dependent projector
HPROJ = _endo([("1", "0"), ("0", "0")], "h")
SWAP = _endo([("0", "1"), ("1", "0")], "swap")
REFL = _endo([("1", "0"), ("0", "-1")], "refl")
SLANTED = pair_from_h(HX)
COORDS = pair_from_h(HPROJ)
FLAT = flat_connection(CHART)


def _framed():
    gamma = [[[ZERO, ZERO], [ZERO, ZERO]],
             [[_p("-1"), ZERO], [ZERO, ZERO]]]
    return ChristoffelConnection(CHART, gamma, label="framed")


def _rolled():
    gamma = [[[ZERO, _p("y")], [ZERO, ZERO]],
             [[ZERO, ZERO], [_p("x"), ZERO]]]
    return ChristoffelConnection(CHART, gamma, label="rolled")


def _ctx(seed=7, count=40):
    return context_for(CHART, SamplePlan(seed, count, BOX))


def _assert_rows(rows, bound=1e-9, absent=()):
    for name, res, note in rows:
        if name in absent:
            assert res is None, f"{name} should have been gated off ({note})"
            continue
        assert res is not None, f"{name} unexpectedly skipped: {note}"
        assert res.value <= bound, f"{name}: {res.value:.3e} ({note})"


# ---- pair algebra -----------------------------------------------------


def test_pair_axioms_hold_for_projectors():
    ctx = _ctx()
    _assert_rows(pair_axiom_rows(ctx, SLANTED), bound=1e-14)
    _assert_rows(structure_rows(ctx, SLANTED), bound=1e-14)


def test_pair_axioms_fail_for_non_idempotent():
    bad = ProjectorPair(SWAP, _endo([("1", "-1"), ("-1", "1")], "c"))
    ctx = _ctx()
    rows = {name: res for name, res, _ in pair_axiom_rows(ctx, bad)}
    assert rows["partition"].value <= 1e-14
    assert rows["h_idempotent"].value > 1e-3


def test_slanted_structure_matrix():
    ctx = _ctx(count=10)
    E = SLANTED.structure()
    A = np.stack([np.stack([j.value for j in row], -1) for row in ctx.endo(E)], -2)
    x = ctx.points[:, 0]
    assert np.allclose(A[:, 0, 0], 1.0) and np.allclose(A[:, 1, 1], -1.0)
    assert np.allclose(A[:, 1, 0], 2 * x) and np.allclose(A[:, 0, 1], 0.0)


# ---- membership -------------------------------------------------------


def test_distribution_spec_validation():
    f = VectorField(CHART, (_p("1"), _p("x")))
    with pytest.raises(ConfigError):
        DistributionSpec("both", span=(f,), pair=SLANTED, side="horizontal")
    with pytest.raises(ConfigError):
        DistributionSpec.from_pair(SLANTED, "sideways")
    with pytest.raises(ConfigError):
        DistributionSpec.from_span(())


def test_span_rank_drop_raises():
    a = VectorField(CHART, (_p("1"), _p("0")))
    b = VectorField(CHART, (_p("2"), _p("0")))
    D = DistributionSpec.from_span((a, b), label="thin")
    with pytest.raises(EvaluationError):
        D.certify(_ctx())


def test_complement_values_separate_members_from_outsiders():
    ctx = _ctx()
    tilt = DistributionSpec.from_span((VectorField(CHART, (_p("1"), _p("x"))),), label="tilt")
    inside = ctx.vector(VectorField(CHART, (_p("y"), _p("(* x y)"))))  # y * (1, x)
    outside = ctx.vector(VectorField(CHART, (_p("0"), _p("1"))))
    assert np.max(tilt.complement_values(ctx, inside)) < 1e-12
    assert np.min(tilt.complement_values(ctx, outside)) > 1e-3


def test_pair_route_membership_matches_span_route():
    ctx = _ctx()
    Dh_pair = DistributionSpec.from_pair(SLANTED, "horizontal", label="Dh")
    Dh_span = DistributionSpec.from_span((VectorField(CHART, (_p("1"), _p("x"))),))
    w = ctx.vector(VectorField(CHART, (_p("(sin y)"), _p("1"))))
    a = Dh_pair.complement_values(ctx, w)
    b = Dh_span.complement_values(ctx, w)
    # same kernel, different projectors; zeros must agree, here both nonzero
    assert np.all((a > 1e-6) == (b > 1e-6))
    member = ctx.vector(VectorField(CHART, (_p("y"), _p("(* x y)"))))
    assert np.max(Dh_pair.complement_values(ctx, member)) < 1e-12
    assert np.max(Dh_span.complement_values(ctx, member)) < 1e-12


def test_invariance_under_structure():
    ctx = _ctx()
    Dh = DistributionSpec.from_pair(SLANTED, "horizontal", label="Dh")
    assert invariance_residual(ctx, Dh, SLANTED.structure()).value < 1e-12
    Dc = DistributionSpec.from_pair(COORDS, "horizontal", label="Dc")
    assert invariance_residual(ctx, Dc, SWAP).value == pytest.approx(1.0)


def test_restriction_residual_two_sided():
    ctx = _ctx()
    tilt = DistributionSpec.from_span((VectorField(CHART, (_p("1"), _p("x"))),), label="tilt")
    assert restriction_residual(ctx, _framed(), tilt).value < 1e-12
    assert restriction_residual(ctx, FLAT, tilt).value > 1e-3


def test_geodesic_residual_weaker_than_restriction():
    ctx = _ctx()
    tilt = DistributionSpec.from_span((VectorField(CHART, (_p("1"), _p("x"))),), label="tilt")
    assert geodesic_residual(ctx, _framed(), tilt).value < 1e-12


def test_conjugate_restriction_rows_positive_and_gated():
    ctx = _ctx()
    Dh = DistributionSpec.from_pair(SLANTED, "horizontal", label="Dh")
    rows = conjugate_restriction_rows(ctx, _framed(), Dh, SLANTED.structure(), 1e-9)
    _assert_rows(rows, bound=1e-11)
    tilt = DistributionSpec.from_span((VectorField(CHART, (_p("(- 0 x)"), _p("1"))),))
    gated = conjugate_restriction_rows(ctx, FLAT, tilt, REFL, 1e-9)
    assert dict((n, r) for n, r, _ in gated)["conjugate_restricts"] is None


def test_conjugate_geodesic_rows_gate_on_restriction():
    ctx = _ctx()
    Dh = DistributionSpec.from_pair(SLANTED, "horizontal", label="Dh")
    rows = conjugate_geodesic_rows(ctx, _framed(), Dh, SLANTED.structure(), 1e-9)
    assert [n for n, _, _ in rows] == \
        ["hypothesis_invariance", "hypothesis_restriction", "conjugate_geodesic"]
    _assert_rows(rows, bound=1e-11)
    # geodesic invariance of the base alone must not open the gate
    axis = DistributionSpec.from_span((VectorField(CHART, (_p("1"), ZERO)),), label="axis")
    assert geodesic_residual(ctx, _rolled(), axis).value < 1e-12
    assert restriction_residual(ctx, _rolled(), axis).value > 1e-3
    gated = conjugate_geodesic_rows(ctx, _rolled(), axis, REFL, 1e-9)
    named = dict((n, r) for n, r, _ in gated)
    assert named["conjugate_geodesic"] is None


# ---- splittings of the conjugate --------------------------------------


def test_four_term_form_is_universal():
    ctx = _ctx()
    _assert_rows(hv_form_rows(ctx, _rolled(), SLANTED), bound=1e-12)


def test_restriction_collapse_rows():
    ctx = _ctx()
    _assert_rows(restriction_collapse_rows(ctx, _framed(), SLANTED, 1e-9), bound=1e-11)
    gated = restriction_collapse_rows(ctx, FLAT, SLANTED, 1e-9)
    by_name = dict((n, r) for n, r, _ in gated)
    assert by_name["conjugate_collapse"] is None and by_name["split_form"] is None


def test_schouten_rows():
    ctx = _ctx()
    rows = schouten_rows(ctx, FLAT, SLANTED, 1e-9)
    _assert_rows(rows, bound=1e-11, absent=("reduces_to_base",))
    rows = schouten_rows(ctx, _framed(), SLANTED, 1e-9)
    _assert_rows(rows, bound=1e-11)


def test_schouten_is_a_projection_of_the_base():
    # applying the splitting twice changes nothing
    ctx = _ctx()
    s1 = SchoutenConnection(_rolled(), SLANTED)
    s2 = SchoutenConnection(s1, SLANTED)
    x = ctx.vector(VectorField(CHART, (_p("1"), _p("y"))))
    y = ctx.vector(VectorField(CHART, (_p("x"), _p("1"))))
    assert np.allclose(vvalues(s1.apply(ctx, x, y)), vvalues(s2.apply(ctx, x, y)),
                       atol=1e-13)


def test_involutivity_rows_gate_and_conclusion():
    ctx = _ctx()
    rows = involutivity_rows(ctx, FLAT, SLANTED, 1e-9)
    _assert_rows(rows, bound=1e-12)
    assert conjugate_torsion_magnitude(ctx, FLAT, SLANTED).value < 1e-12
    gated = involutivity_rows(ctx, _rolled(), SLANTED, 1e-9)
    by_name = dict((n, r) for n, r, _ in gated)
    assert by_name["vertical_involutive"] is None


# ---- fundamental tensors ---------------------------------------------


def test_fundamental_tensors_frozen_on_round_metric():
    box = ((0.3, 1.2), (-1.0, 1.0))
    chart = Chart(2, ("x", "y"), box)
    names = ("x", "y")
    g = MetricField(chart, ((parse_expr("1", names=names), parse_expr("0", names=names)),
                            (parse_expr("(pow (sin x) 2)", names=names),)))
    hproj = EndoField(chart, ((parse_expr("1", names=names), parse_expr("0", names=names)),
                              (parse_expr("0", names=names), parse_expr("0", names=names))))
    pair = pair_from_h(hproj)
    lc = LeviCivitaConnection(g)
    ctx = EvalContext(chart, np.array([[0.7, 0.2]]))
    T, A = fundamental_tensors(lc, pair)
    frame = ctx.frame()
    t11 = vvalues(T.apply(ctx, frame[1], frame[1]))[0]
    t10 = vvalues(T.apply(ctx, frame[1], frame[0]))[0]
    assert t11[0] == pytest.approx(-np.sin(0.7) * np.cos(0.7), abs=1e-12)
    assert abs(t11[1]) < 1e-14
    assert t10[1] == pytest.approx(1.0 / np.tan(0.7), abs=1e-12)
    for i in range(2):
        for j in range(2):
            assert np.max(np.abs(vvalues(A.apply(ctx, frame[i], frame[j])))) < 1e-14
    t0 = vvalues(T.apply(ctx, frame[0], frame[1]))
    assert np.max(np.abs(t0)) < 1e-14  # first slot is projected to the vertical side


@pytest.mark.parametrize("nabla,pair", [(FLAT, COORDS), (FLAT, SLANTED)])
def test_splitting_block_rows_pass(nabla, pair):
    ctx = _ctx()
    _assert_rows(splitting_block_rows(ctx, nabla, pair), bound=1e-11)


def test_splitting_block_rows_curved():
    ctx = _ctx()
    g = MetricField(CHART, ((_p("1"), _p("0")), (_p("(+ 1 (* x x))"),)))
    _assert_rows(splitting_block_rows(ctx, LeviCivitaConnection(g), SLANTED), bound=1e-10)


# ---- two splittings at once ------------------------------------------


def test_skew_pair_rows_bridge_is_exact():
    ctx = _ctx()
    straight = pair_from_h(HPROJ)
    rows = dict((n, r) for n, r, _ in skew_pair_rows(ctx, SLANTED, straight))
    assert rows["structure_skew"].value > 1e-3
    assert rows["projector_skew"].value > 1e-3
    assert rows["defect_bridge"].value < 1e-12


def test_skew_pair_rows_anticommuting_structures():
    ctx = _ctx()
    p1 = pair_from_h(_endo([("1/2", "1/2"), ("1/2", "1/2")], "havg"))
    p2 = pair_from_h(HPROJ)
    rows = dict((n, r) for n, r, _ in skew_pair_rows(ctx, p2, p1))
    # structures refl and swap anticommute exactly; projectors never do
    assert rows["structure_skew"].value < 1e-15
    assert rows["projector_skew"].value > 1e-3
    assert rows["defect_bridge"].value < 1e-14
