import itertools
import json

import numpy as np
import pytest
from conftest import rng_for
from hypothesis import given
from hypothesis import strategies as st

from scmaudit import (
    ModelParseError,
    ModelSizeError,
    ModelValidationError,
    ScmError,
    ZeroProbabilityError,
    abduct,
    counterfactual_distribution,
    intervene,
    joint_distribution,
    make_scm,
    parse_model,
    path_specific_counterfactual,
    sample,
    twin_network,
)
from scmaudit.random_models import random_markov_scm
from scmaudit.scm import bundled_path, dump_model, format_value, world_name

BIN = (0, 1)


def brute_joint(scm, scope):
    """Independent oracle: product over noise values, solving by repeated sweeps."""
    out = {}
    noise = scm.noise_names
    for values in itertools.product(*(scm.domain(n) for n in noise)):
        if scm.joint_noise is not None:
            p = scm.joint_noise.get(values, 0.0)
        else:
            p = float(np.prod([scm.noise[n][scm.domain(n).index(v)] for n, v in zip(noise, values)]))
        world = dict(zip(noise, values))
        while len(world) < len(scm.names):
            for v in scm.observed:
                if v not in world and all(q in world for q in scm.parents[v]):
                    world[v] = scm.equations[v][tuple(world[q] for q in scm.parents[v])]
        key = tuple(world[v] for v in scope)
        out[key] = out.get(key, 0.0) + p
    return out


def model_text(**overrides):
    doc = json.loads(bundled_path("xor_sel.json").read_text())
    doc.update(overrides)
    return json.dumps(doc)


# -- parsing and validation --------------------------------------------------------------


def test_xor_sel_fixture_parses(xor_sel):
    assert len(xor_sel.noise_names) == 2
    assert xor_sel.observed == ("A", "X", "S")
    assert xor_sel.independent_noise
    assert float(joint_distribution(xor_sel, xor_sel.names).array.sum()) == pytest.approx(1, abs=1e-12)


def test_cycle_is_rejected_naming_both_variables():
    text = model_text(
        parents={"A": ["X", "U_A"], "X": ["A", "U_X"], "S": ["X"]},
        equations={
            "A": [[x, u, u] for x in BIN for u in BIN],
            "X": [[a, u, a ^ u] for a in BIN for u in BIN],
            "S": [[0, 0], [1, 1]],
        },
    )
    with pytest.raises(ModelValidationError, match="A, X"):
        parse_model(text)


def test_unnormalized_noise_is_rejected():
    with pytest.raises(ModelValidationError, match="U_X"):
        parse_model(model_text(noise={"U_A": [0.5, 0.5], "U_X": [0.5, 0.6]}))


def test_non_total_equation_is_rejected():
    eq = json.loads(model_text())["equations"]
    eq["X"] = eq["X"][:3]
    with pytest.raises(ModelValidationError, match="X"):
        parse_model(model_text(equations=eq))


def test_equation_value_outside_domain_is_rejected():
    eq = json.loads(model_text())["equations"]
    eq["S"] = [[0, 0], [1, 2]]
    with pytest.raises(ModelValidationError, match="S"):
        parse_model(model_text(equations=eq))


def test_malformed_json_is_a_parse_error():
    with pytest.raises(ModelParseError):
        parse_model("{not json")
    with pytest.raises(ModelParseError):
        parse_model(json.dumps({"variables": []}))


def test_duplicate_domain_values_rejected():
    with pytest.raises(ScmError):
        make_scm({"U": ((0, 0), (0.5, 0.5))}, {"X": (BIN, ["U"], lambda u: u)})


def test_roundtrip_through_model_file(xor_sel, xor_dependent):
    for scm in (xor_sel, xor_dependent):
        again = parse_model(dump_model(scm))
        assert joint_distribution(again, again.names).allclose(joint_distribution(scm, scm.names), atol=0)


def test_absent_value_is_an_ordinary_category():
    scm = make_scm(
        {"U": ((0, 1), (0.3, 0.7))},
        {
            "E": (BIN, ["U"], lambda u: u),
            "X": ((None, 0, 1), ["E", "U"], lambda e, u: None if e == 0 else u),
        },
    )
    j = joint_distribution(scm, ["X"])
    assert j.prob({"X": None}) == pytest.approx(0.3)
    assert format_value(None) == "∅"
    again = parse_model(dump_model(scm))
    assert joint_distribution(again, ["X"]).allclose(j)


def test_enumeration_cap():
    noise = {f"U{i}": (BIN, (0.5, 0.5)) for i in range(25)}
    scm = make_scm(noise, {"X": (BIN, ["U0"], lambda u: u)})
    with pytest.raises(ModelSizeError, match="cap"):
        joint_distribution(scm, ["X"])
    small = make_scm({"U": (BIN, (0.5, 0.5))}, {"X": (BIN, ["U"], lambda u: u)}, max_assignments=1)
    with pytest.raises(ModelSizeError):
        joint_distribution(small, ["X"])


# -- joint distributions ---------------------------------------------------------------


def test_xor_marginals(xor_sel):
    assert joint_distribution(xor_sel, ["X"]).prob({"X": 1}) == pytest.approx(0.5, abs=1e-12)
    ax = joint_distribution(xor_sel, ["A", "X"])
    assert np.allclose(ax.array, 0.25, atol=1e-12)


def test_empty_scope(xor_sel):
    j = joint_distribution(xor_sel, [])
    assert j.prob({}) == pytest.approx(1.0)


def test_unknown_scope_variable(xor_sel):
    with pytest.raises(ScmError):
        joint_distribution(xor_sel, ["Q"])


@given(st.integers(0, 10_000))
def test_joint_matches_brute_force(seed):
    scm = random_markov_scm(rng_for(seed), max_observed=4)
    scope = list(scm.observed)
    oracle = brute_joint(scm, scope)
    j = joint_distribution(scm, scope)
    assert float(j.array.sum()) == pytest.approx(1.0, abs=1e-12)
    for key, p in oracle.items():
        assert j.prob(dict(zip(scope, key))) == pytest.approx(p, abs=1e-12)


# -- interventions -------------------------------------------------------------------------


def test_do_a_mutilates_equation(xor_sel):
    m = intervene(xor_sel, {"A": 1})
    j = joint_distribution(m, ["A", "X"])
    assert j.prob({"A": 1}) == 1.0
    assert j.prob({"X": 1}) == pytest.approx(0.5)
    assert m.observed_parents("A") == ()


def test_empty_do_is_identity(xor_sel):
    assert joint_distribution(intervene(xor_sel, {}), xor_sel.names).allclose(
        joint_distribution(xor_sel, xor_sel.names), atol=0
    )


def test_do_on_noise_is_rejected(xor_sel):
    with pytest.raises(ScmError):
        intervene(xor_sel, {"U_X": 1})


def test_do_value_outside_domain(xor_sel):
    with pytest.raises(ScmError):
        intervene(xor_sel, {"A": 7})


@given(st.integers(0, 10_000), st.data())
def test_intervention_idempotent(seed, data):
    scm = random_markov_scm(rng_for(seed), max_observed=4)
    v = data.draw(st.sampled_from(scm.observed))
    do = {v: data.draw(st.sampled_from(BIN))}
    once = joint_distribution(intervene(scm, do), scm.names)
    twice = joint_distribution(intervene(intervene(scm, do), do), scm.names)
    assert np.array_equal(once.array, twice.array)


# -- abduction and counterfactuals --------------------------------------------------------


def test_abduction_forced(xor_sel):
    post = abduct(xor_sel, {"A": 0, "X": 1})
    assert post.marginal(["U_X"]).prob({"U_X": 1}) == pytest.approx(1.0)


def test_abduction_split(xor_sel):
    post = abduct(xor_sel, {"X": 1})
    assert post.prob({"U_A": 0, "U_X": 1}) == pytest.approx(0.5)
    assert post.prob({"U_A": 1, "U_X": 0}) == pytest.approx(0.5)
    assert float(post.array.sum()) == pytest.approx(1.0, abs=1e-12)


def test_abduction_zero_probability(or_sel):
    with pytest.raises(ZeroProbabilityError):
        abduct(or_sel, {"A": 1, "X": 0})


def test_xor_counterfactual(xor_sel):
    cf = counterfactual_distribution(xor_sel, {"A": 0, "X": 1}, {"A": 1}, ["X"])
    assert cf.prob({"X": 0}) == pytest.approx(1.0)


def test_or_counterfactual(or_sel):
    cf = counterfactual_distribution(or_sel, {"A": 1, "X": 1}, {"A": 0}, ["X"])
    assert cf.prob({"X": 1}) == pytest.approx(0.5, abs=1e-12)


@given(st.integers(0, 10_000))
def test_consistency(seed):
    scm = random_markov_scm(rng_for(seed), max_observed=4)
    joint = joint_distribution(scm, scm.observed)
    for a_var, x_var in itertools.permutations(scm.observed, 2):
        for a, x in itertools.product(BIN, BIN):
            if joint.prob({a_var: a, x_var: x}) > 0:
                cf = counterfactual_distribution(scm, {a_var: a, x_var: x}, {a_var: a}, [x_var])
                assert cf.prob({x_var: x}) == pytest.approx(1.0, abs=1e-12)


# -- twin networks -----------------------------------------------------------------------------


def test_triplet_shape(xor_sel):
    twin = twin_network(xor_sel, [("a0", {"A": 0}), ("a1", {"A": 1})])
    feeds = [v for v in twin.observed if "U_X" in twin.parents[v]]
    assert sorted(feeds) == sorted(["X", world_name("X", "a0"), world_name("X", "a1")])
    assert twin.parents[world_name("A", "a1")] == ()


def test_empty_worlds_identity(xor_sel):
    twin = twin_network(xor_sel, [])
    assert joint_distribution(twin, xor_sel.names).allclose(joint_distribution(xor_sel, xor_sel.names), atol=0)


def test_duplicate_labels(xor_sel):
    with pytest.raises(ScmError):
        twin_network(xor_sel, [("w", {"A": 0}), ("w", {"A": 1})])


def test_twin_marginal_matches_counterfactual(xor_sel):
    twin = twin_network(xor_sel, [("a1", {"A": 1})])
    j = joint_distribution(twin, ["A", "X", "X(a1)"]).condition({"A": 0, "X": 1})
    cf = counterfactual_distribution(xor_sel, {"A": 0, "X": 1}, {"A": 1}, ["X"])
    assert np.allclose(j.marginal(["X(a1)"]).array, cf.array, atol=0)


@given(st.integers(0, 10_000), st.data())
def test_twin_equivalence(seed, data):
    scm = random_markov_scm(rng_for(seed), max_observed=4)
    obs = list(scm.observed)
    joint = joint_distribution(scm, obs)
    ev_vars = data.draw(st.lists(st.sampled_from(obs), min_size=1, unique=True))
    contexts = [
        dict(zip(ev_vars, vals))
        for vals in itertools.product(BIN, repeat=len(ev_vars))
        if joint.prob(dict(zip(ev_vars, vals))) > 0
    ]
    evidence = data.draw(st.sampled_from(contexts))
    do_var = data.draw(st.sampled_from(obs))
    do = {do_var: data.draw(st.sampled_from(BIN))}
    cf = counterfactual_distribution(scm, evidence, do, obs)
    twin = twin_network(scm, [("w", do)])
    tj = joint_distribution(twin, [*evidence, *(world_name(v, "w") for v in obs)]).condition(evidence)
    assert np.allclose(tj.marginal([world_name(v, "w") for v in obs]).array, cf.array, atol=1e-12, rtol=0)


# -- nested counterfactuals ------------------------------------------------------------------


@pytest.fixture
def mediator_toy():
    return make_scm(
        {"U_A": (BIN, (0.5, 0.5)), "U_D": (BIN, (0.3, 0.7))},
        {
            "A": (BIN, ["U_A"], lambda u: u),
            "D": (BIN, ["A", "U_D"], lambda a, u: a ^ u),
            "Y": (BIN, ["A", "D"], lambda a, d: a & d),
        },
    )


def test_nested_collapses_when_arms_agree(mediator_toy):
    for a in BIN:
        nested = path_specific_counterfactual(mediator_toy, "A", a, a, {("A", "D"): "indirect", "A->Y": "direct"}, "Y")
        plain = joint_distribution(intervene(mediator_toy, {"A": a}), ["Y"])
        assert nested.allclose(plain)


def test_nested_direct_arm_zero(mediator_toy):
    nested = path_specific_counterfactual(mediator_toy, "A", 1, 0, {"A->D": "indirect", "A->Y": "direct"}, "Y")
    assert nested.prob({"Y": 0}) == pytest.approx(1.0)


def test_nested_indirect_arm_distribution(mediator_toy):
    # Y(D(0), 1) = D(0) = U_D
    nested = path_specific_counterfactual(mediator_toy, "A", 0, 1, {"A->D": "indirect", "A->Y": "direct"}, "Y")
    assert nested.prob({"Y": 1}) == pytest.approx(0.7, abs=1e-12)


def test_nested_bad_edge(mediator_toy):
    with pytest.raises(ScmError, match="A->Q"):
        path_specific_counterfactual(mediator_toy, "A", 1, 0, {"A->Q": "direct"}, "Y")
    with pytest.raises(ScmError, match="not labeled"):
        path_specific_counterfactual(mediator_toy, "A", 1, 0, {"A->D": "direct"}, "Y")


# -- sampling -----------------------------------------------------------------------------------


def test_sample_empty(xor_sel):
    assert sample(xor_sel, 0, seed=1) == []


def test_sample_deterministic(xor_dependent):
    assert sample(xor_dependent, 500, seed=3) == sample(xor_dependent, 500, seed=3)


def test_sample_frequencies_converge(xor_dependent):
    n = 100_000
    rows = sample(xor_dependent, n, seed=11)
    exact = joint_distribution(xor_dependent, xor_dependent.observed)
    counts = {}
    for r in rows:
        key = tuple(r[v] for v in xor_dependent.observed)
        counts[key] = counts.get(key, 0) + 1
    for cell, p in exact.items():
        key = tuple(cell[v] for v in xor_dependent.observed)
        assert abs(counts.get(key, 0) / n - p) < 0.01


def test_exact_operations_are_bitwise_deterministic(or_sel):
    a = counterfactual_distribution(or_sel, {"X": 1}, {"A": 0}, ["X", "S"]).array
    b = counterfactual_distribution(or_sel, {"X": 1}, {"A": 0}, ["X", "S"]).array
    assert a.tobytes() == b.tobytes()
