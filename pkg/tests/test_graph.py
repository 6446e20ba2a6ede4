import itertools

import networkx as nx
import pytest
from conftest import rng_for
from hypothesis import given
from hypothesis import strategies as st

from scmaudit import ScmError, joint_distribution, make_scm
from scmaudit.graph import (
    CiStatement,
    Dag,
    ancestrally_closed,
    ci_deviation,
    d_separated,
    dag_from_scm,
    enumerate_cis,
    faithfulness_report,
    iter_triples,
    latent_pairs,
    parse_edge_list,
    parse_graph_text,
)
from scmaudit.random_models import random_generic_scm, random_markov_scm
from scmaudit.scm import bundled_path

BIN = (0, 1)


def law_dag():
    return parse_edge_list(bundled_path("law_school.txt").read_text())


def to_nx(g: Dag) -> nx.DiGraph:
    d = nx.DiGraph()
    d.add_nodes_from(g.nodes)
    d.add_edges_from(g.edges)
    return d


@st.composite
def dags(draw, max_nodes=7):
    n = draw(st.integers(2, max_nodes))
    nodes = [f"N{i}" for i in range(n)]
    edges = [(nodes[i], nodes[j]) for i, j in itertools.combinations(range(n), 2) if draw(st.booleans())]
    perm = draw(st.permutations(nodes))
    rename = dict(zip(nodes, perm))
    return Dag(tuple(perm), tuple((rename[a], rename[b]) for a, b in edges))


@st.composite
def dag_and_sets(draw):
    g = draw(dags())
    labels = draw(st.lists(st.sampled_from("xyzn"), min_size=len(g.nodes), max_size=len(g.nodes)))
    xs = {v for v, l in zip(g.nodes, labels) if l == "x"}
    ys = {v for v, l in zip(g.nodes, labels) if l == "y"}
    zs = {v for v, l in zip(g.nodes, labels) if l == "z"}
    if not xs:
        xs = {g.nodes[0]}
        ys.discard(g.nodes[0])
        zs.discard(g.nodes[0])
    if not ys:
        rest = [v for v in g.nodes if v not in xs]
        if not rest:
            xs = {g.nodes[0]}
            rest = list(g.nodes[1:])
        ys = {rest[0]}
        zs.discard(rest[0])
    return g, xs, ys, zs


# -- d-separation ----------------------------------------------------------------------------


def test_law_school_roots_independent():
    assert d_separated(law_dag(), {"Race"}, {"Gender"}, set())
    assert not d_separated(law_dag(), {"Race"}, {"Gender"}, {"FYA"})


def test_chain_blocked():
    g = Dag(("A", "X", "S"), (("A", "X"), ("X", "S")))
    assert d_separated(g, {"A"}, {"S"}, {"X"})
    assert not d_separated(g, {"A"}, {"S"}, set())


def test_collider_opened_by_conditioning():
    g = Dag(("A", "X", "S"), (("A", "S"), ("X", "S")))
    assert d_separated(g, {"A"}, {"X"}, set())
    assert not d_separated(g, {"A"}, {"X"}, {"S"})


def test_collider_opened_by_descendant():
    g = Dag(("A", "X", "S", "D"), (("A", "S"), ("X", "S"), ("S", "D")))
    assert not d_separated(g, {"A"}, {"X"}, {"D"})


def test_xor_triplet_selection_opens_path(xor_sel):
    from scmaudit import twin_network

    twin = twin_network(xor_sel, [("1", {"A": 1})])
    g = dag_from_scm(twin)
    assert d_separated(g, {"A"}, {"X(1)"}, set())
    assert not d_separated(g, {"A"}, {"X(1)"}, {"S"})


def test_overlap_and_unknown_errors():
    g = law_dag()
    with pytest.raises(ScmError, match="overlap"):
        d_separated(g, {"Race"}, {"Race"}, set())
    with pytest.raises(ScmError, match="unknown"):
        d_separated(g, {"Race"}, {"Nope"}, set())


@given(dag_and_sets())
def test_d_separation_matches_networkx(case):
    g, xs, ys, zs = case
    assert d_separated(g, xs, ys, zs) == nx.is_d_separator(to_nx(g), xs, ys, zs)


@given(dag_and_sets())
def test_d_separation_symmetric(case):
    g, xs, ys, zs = case
    assert d_separated(g, xs, ys, zs) == d_separated(g, ys, xs, zs)


@given(dag_and_sets(), st.data())
def test_removing_edges_preserves_separation(case, data):
    g, xs, ys, zs = case
    if not g.edges or not d_separated(g, xs, ys, zs):
        return
    edge = data.draw(st.sampled_from(g.edges))
    assert d_separated(g.without_edge(*edge), xs, ys, zs)


def test_cycle_rejected():
    with pytest.raises(ScmError, match="cycle"):
        Dag(("A", "B"), (("A", "B"), ("B", "A")))


def test_edge_list_parsing():
    g, latent = parse_graph_text("# comment\nA B\nC\nA <-> C\n")
    assert g.nodes == ("A", "B", "C")
    assert g.edges == (("A", "B"),)
    assert latent == [frozenset({"A", "C"})]
    with pytest.raises(ScmError):
        parse_edge_list("A B C\n")


# -- ancestral closure ---------------------------------------------------------------------------


def test_law_school_closed():
    assert ancestrally_closed(law_dag(), {"Race", "Gender"})


def test_mother_race_breaks_closure():
    g = Dag(("MotherRace", "Race", "Y"), (("MotherRace", "Race"), ("Race", "Y")))
    assert not ancestrally_closed(g, {"Race"})
    assert ancestrally_closed(g, {"Race", "MotherRace"})


def test_latent_confounder_breaks_closure():
    g = law_dag()
    assert not ancestrally_closed(g, {"Race"}, [("Race", "GPA")])
    with pytest.raises(ScmError):
        ancestrally_closed(g, {"Nope"})


@given(dags())
def test_roots_always_closed(g):
    roots = {v for v in g.nodes if not g.parents(v)}
    assert ancestrally_closed(g, roots)


def test_latent_pairs_from_shared_noise():
    scm = make_scm(
        {"U": (BIN, (0.5, 0.5)), "V": (BIN, (0.5, 0.5))},
        {"A": (BIN, ["U"], lambda u: u), "X": (BIN, ["A", "U", "V"], lambda a, u, v: a ^ u ^ v)},
    )
    assert latent_pairs(scm) == {frozenset({"A", "X"})}


# -- conditional independence ------------------------------------------------------------------


def brute_deviation(joint, x, y, zs):
    """Independent oracle over explicit cells."""
    scope = [x, y, *zs]
    m = joint.marginal(scope)
    worst = 0.0
    for zv in itertools.product(*(m.domain(z) for z in zs)):
        ctx = dict(zip(zs, zv))
        pz = m.prob(ctx)
        if pz <= 0:
            continue
        for xv in m.domain(x):
            for yv in m.domain(y):
                pxy = m.prob({**ctx, x: xv, y: yv}) / pz
                px = m.prob({**ctx, x: xv}) / pz
                py = m.prob({**ctx, y: yv}) / pz
                worst = max(worst, abs(pxy - px * py))
    return worst


def test_xor_noise_cis(xor_sel):
    j = joint_distribution(xor_sel, ["A", "U_X", "X"])
    assert ci_deviation(j, "A", "U_X") == 0
    assert ci_deviation(j, "A", "X") < 1e-12
    # P(A=0,U_X=1|X=1)=1/2 while P(A=0|X=1)P(U_X=1|X=1)=1/4
    assert ci_deviation(j, "A", "U_X", ["X"]) == pytest.approx(0.25, abs=1e-12)
    assert not any(ci.key() == CiStatement(frozenset({"A"}), frozenset({"U_X"}), frozenset({"X"}), 0).key()
                   for ci in enumerate_cis(j))
    # the conditional-gap view of the same failure
    cond = j.condition({"X": 1})
    gap = abs(cond.condition({"A": 0}).prob({"U_X": 1}) - cond.prob({"U_X": 1}))
    assert gap == pytest.approx(0.5)


@given(st.integers(0, 10_000))
def test_ci_deviation_matches_brute_force(seed):
    scm = random_markov_scm(rng_for(seed), max_observed=4)
    j = joint_distribution(scm, scm.observed)
    for x, y, zs in iter_triples(scm.observed):
        assert ci_deviation(j, x, y, zs) == pytest.approx(brute_deviation(j, x, y, zs), abs=1e-12)


def test_enumerate_requires_positive_tol(xor_sel):
    with pytest.raises(ScmError):
        enumerate_cis(joint_distribution(xor_sel, ["A"]), 0)


def test_ci_statement_invariants():
    with pytest.raises(ScmError):
        CiStatement(frozenset({"A"}), frozenset({"A"}), frozenset(), 0.0)
    with pytest.raises(ScmError):
        CiStatement(frozenset({"A"}), frozenset({"B"}), frozenset(), -1.0)


# -- faithfulness ---------------------------------------------------------------------------------


def brute_faithfulness(scm, tol=1e-9):
    g = to_nx(dag_from_scm(scm, include_noise=True))
    j = joint_distribution(scm, scm.observed)
    out = set()
    for x, y, zs in iter_triples(scm.observed):
        if brute_deviation(j, x, y, zs) < tol and not nx.is_d_separator(g, {x}, {y}, set(zs)):
            out.add((x, y, frozenset(zs)))
    return out


def report_set(report):
    return {(min(ci.left | ci.right), max(ci.left | ci.right), ci.given) for ci in report}


def test_xor_faithfulness_violation(xor_sel):
    rep = report_set(faithfulness_report(xor_sel))
    assert ("A", "X", frozenset()) in rep


def test_or_sel_report(or_sel):
    # S copies X exactly, so A ⊥ X | S holds although A -> X
    assert report_set(faithfulness_report(or_sel)) == {("A", "X", frozenset({"S"}))}
    without_s = make_scm(
        {"U_A": (BIN, (0.5, 0.5)), "U_X": (BIN, (0.5, 0.5))},
        {"A": (BIN, ["U_A"], lambda u: u), "X": (BIN, ["A", "U_X"], lambda a, u: a | u)},
    )
    assert faithfulness_report(without_s) == []


def test_dependent_noise_report_unavailable(xor_dependent):
    with pytest.raises(ScmError, match="dependent"):
        faithfulness_report(xor_dependent)


@given(st.integers(0, 10_000))
def test_faithfulness_is_set_difference(seed):
    scm = random_markov_scm(rng_for(seed), max_observed=4)
    assert report_set(faithfulness_report(scm)) == {
        (min(x, y), max(x, y), z) for x, y, z in brute_faithfulness(scm)
    }


@given(st.integers(0, 10_000))
def test_generic_models_are_faithful(seed):
    scm = random_generic_scm(rng_for(seed))
    assert faithfulness_report(scm) == []


@given(st.integers(0, 10_000))
def test_markov_property(seed):
    scm = random_markov_scm(rng_for(seed))
    g = dag_from_scm(scm)
    j = joint_distribution(scm, scm.observed)
    for x, y, zs in iter_triples(scm.observed):
        if d_separated(g, {x}, {y}, zs):
            assert ci_deviation(j, x, y, zs) < 1e-9
