import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pocalc import (
    RULES,
    PathQuery,
    PathSet,
    all_proper_paths,
    docalc_equivalent,
    eval_functional,
    extend,
    hedge_gap,
    identify_query,
    latent_project,
    loads,
    maximal_rule2_set,
    observed_joint,
    parity_counterexample,
    path_specific,
    ps_id,
    ps_idc,
    random_scm,
    rule_applies,
)
from pocalc.errors import EdgeInconsistent, MalformedQuery, NotIdentified
from pocalc.generate import random_admg

from _shared import (
    BOW,
    MEDIATION_CONFOUNDED,
    MEDIATION_DISPLAY,
    MEDIATION_SIDE,
    SIDE_DISPLAY,
    TRIANGLE,
    TRIANGLE_DISPLAY,
    graph,
    mediation_query,
    numeric,
    random_path_query,
    random_sets,
    rule_gap,
    states,
    widen,
)


def _extended(name, conditioners=()):
    g = latent_project(graph(name))
    q = mediation_query(conditioners)
    return extend(g, ["A"]), q.assignment(g), q


# -- rules ----------------------------------------------------------------------------


def test_rule_examples():
    g = graph(TRIANGLE)
    r2 = rule_applies(g, "2", ["Y"], ["A"], [], ["C", "M"])
    assert r2.verdict and len(r2.certificates) == 1
    assert "G(a)" in r2.certificates[0].statement
    assert not rule_applies(g, "3", ["Y"], ["A"], [], []).verdict
    assert rule_applies(g, "3star", ["C"], ["A"]).verdict
    bow = graph(BOW)
    failed = rule_applies(bow, "2", ["Y"], ["A"])
    assert not failed.verdict and str(failed.certificates[0].witness) == "Y <-> A"
    r3 = rule_applies(g, "3", ["Y"], ["M"], ["A"], ["C"])
    assert len(r3.certificates) == 2 and set(r3.to_dict()) >= {"z1", "z2"}
    with pytest.raises(MalformedQuery):
        rule_applies(g, "4", ["Y"], ["A"])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_rules_agree_with_do_calculus(seed):
    rng = random.Random(seed)
    g = random_admg(rng, max_n=6)
    sets = random_sets(rng, g)
    for rule in RULES:
        rc = rule_applies(g, rule, sets["y"], sets["z"], sets["x"], sets["w"])
        assert rc.verdict == docalc_equivalent(g, rule, sets["y"], sets["z"], sets["x"], sets["w"])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_rules_are_sound(seed):
    rng = random.Random(seed)
    g = random_admg(rng, max_n=5)
    sets = random_sets(rng, g)
    scm = random_scm(g, 2, seed=seed)
    for rule in RULES:
        args = [list(sets[k]) for k in "yzxw"]
        if rule_applies(g, rule, *args).verdict:
            assert rule_gap(scm, rule, *args, rng) < 1e-9


# -- PS-ID and PS-IDC -----------------------------------------------------------------------


def test_ps_id_on_confounded_mediation():
    g_ext, apx, q = _extended(MEDIATION_CONFOUNDED)
    f = ps_id(g_ext, ["Y"], apx)
    assert f.text() == MEDIATION_DISPLAY
    # C reaches Y only through the treatment, so the districts are {Y} and {M}
    assert {frozenset(x.district) for x in f.factors} == {frozenset("Y"), frozenset("M")}
    assert f.sum_over == ("M",)


def test_ps_idc_examples():
    g_ext, apx, q = _extended(MEDIATION_SIDE, ["C"])
    f = ps_idc(g_ext, ["Y"], ["C"], apx)
    assert f.text() == SIDE_DISPLAY and f.conditioners == ("C",) and not f.promoted
    tri = graph(TRIANGLE)
    f = identify_query(tri, mediation_query())
    assert f.text() == TRIANGLE_DISPLAY


def test_maximal_rule2_set_examples():
    g_ext, apx, _ = _extended(MEDIATION_SIDE, ["C"])
    assert maximal_rule2_set(g_ext, ["Y"], ["C"], apx) == frozenset()
    assert maximal_rule2_set(g_ext, ["Y"], [], apx) == frozenset()
    tri = graph(TRIANGLE)
    q = PathQuery(("Y",), ("M",), ("A",), PathSet.of(("A", "Y")), {"A": "a"}, {"A": "a'"})
    assert maximal_rule2_set(extend(tri, ["A"]), ["Y"], ["M"], q.assignment(tri)) == frozenset()
    with pytest.raises(MalformedQuery):
        maximal_rule2_set(g_ext, ["Y"], ["C"], apx, order=["M"])


def test_rule2_promotion_of_a_pretreatment_cause():
    # C -> M only: Y(a, M(a')) given C; C has no back-door route to Y so it moves into the intervention
    g = loads("var C\nvar A\nvar M\nvar Y\nedge C -> M\nedge A -> M\nedge A -> Y\nedge M -> Y\n")
    q = mediation_query(["C"])
    f = identify_query(g, q)
    assert f.promoted == ("C",) and not f.conditioners
    scm = random_scm(g, 2, seed=3)
    a, ap = numeric(q)
    truth = path_specific(scm, q.pi, a, ap, ["Y"], given=["C"])
    est = eval_functional(f, observed_joint(scm), states(q))
    assert widen(est, truth).max_abs_diff(truth) < 1e-12


def test_non_identification_witnesses():
    with pytest.raises(NotIdentified) as e:
        identify_query(graph(MEDIATION_CONFOUNDED), mediation_query(["C"]))
    w = e.value.witness
    assert w.kind == "recanting-district" and w.district == frozenset("CMY") and w.treatment == "A"
    bow = graph(BOW)
    q = PathQuery(("Y",), (), ("A",), all_proper_paths(bow, ["A"]), {"A": "a"}, {"A": "a'"})
    with pytest.raises(NotIdentified) as e:
        identify_query(bow, q)
    w = e.value.witness
    assert w.kind == "hedge" and w.district == frozenset("Y") and w.superset == frozenset("AY")
    m1, m2 = parity_counterexample(bow, w)
    assert observed_joint(m1).max_abs_diff(observed_joint(m2)) < 1e-12
    assert hedge_gap(bow, w, m1, m2) >= 0.05


def test_edge_inconsistency_names_the_vertex():
    g = graph(TRIANGLE)
    q = PathQuery(("Y",), (), ("C",), PathSet.of(("C", "A", "Y")), {"C": "c"}, {"C": "c'"})
    with pytest.raises(EdgeInconsistent) as e:
        identify_query(g, q)
    assert e.value.witness == "A"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_soundness_against_ground_truth(seed):
    rng = random.Random(seed)
    g = random_admg(rng, max_n=6, p_bi=0.25)
    q = random_path_query(rng, g)
    if q is None:
        return
    try:
        f = identify_query(g, q)
    except (EdgeInconsistent, NotIdentified):
        return
    a, ap = numeric(q)
    for s in range(2):
        scm = random_scm(g, 2, seed=seed * 7 + s)
        est = eval_functional(f, observed_joint(scm), states(q))
        truth = path_specific(scm, q.pi, a, ap, q.outcomes, given=q.conditioners or None)
        assert widen(est, truth).max_abs_diff(truth) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_hedge_witnesses_are_valid(seed):
    rng = random.Random(seed)
    g = random_admg(rng, max_n=5, p_bi=0.4)
    a = [rng.choice(g.random)]
    y = [v for v in g.random if v not in a][:1]
    if not y:
        return
    q = PathQuery(tuple(y), (), tuple(a), all_proper_paths(g, a), {a[0]: "a"}, {a[0]: "a'"})
    try:
        identify_query(g, q)
        return
    except NotIdentified as e:
        w = e.witness
    assert w.kind == "hedge" and w.district < w.superset
    m1, m2 = parity_counterexample(g, w)
    assert observed_joint(m1).max_abs_diff(observed_joint(m2)) < 1e-12
    assert hedge_gap(g, w, m1, m2) >= 0.05


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_more_confounding_never_helps(seed):
    rng = random.Random(seed)
    g = random_admg(rng, max_n=6, p_bi=0.2)
    q = random_path_query(rng, g)
    if q is None:
        return
    pairs = [(u, v) for i, u in enumerate(g.random) for v in g.random[i + 1 :] if (u, v) not in g.bidirected and (v, u) not in g.bidirected]
    if not pairs:
        return
    u, v = rng.choice(pairs)
    denser = loads(_dumps_with(g, (u, v)))
    try:
        identify_query(g, q)
        sparse_ok = True
    except (NotIdentified, EdgeInconsistent):
        sparse_ok = False
    try:
        identify_query(denser, q)
        dense_ok = True
    except (NotIdentified, EdgeInconsistent):
        dense_ok = False
    assert sparse_ok or not dense_ok


def _dumps_with(g, edge):
    from pocalc import dumps

    return dumps(g) + f"edge {edge[0]} <-> {edge[1]}\n"


def test_recanting_queries_fail_before_hedge_checks():
    # the recanting district is reported even though C alone would be identifiable
    with pytest.raises(NotIdentified) as e:
        identify_query(graph(MEDIATION_CONFOUNDED), mediation_query(["C"]))
    assert "recanting" in e.value.witness.narrative


def test_order_must_permute_conditioners():
    g_ext, apx, _ = _extended(MEDIATION_SIDE, ["C"])
    with pytest.raises(MalformedQuery):
        ps_idc(g_ext, ["Y"], ["C"], apx, order=["C", "C"])
