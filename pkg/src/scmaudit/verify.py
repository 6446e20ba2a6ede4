"""Randomized verification suites for the selection and fairness results.

Each suite draws models from ``random_models`` with a seeded generator and
checks an exact identity on every trial. Suites that concern the same
selection models draw them from the same stream, so ``prop1``, ``prop2``,
``cor3`` and ``cor5`` see identical models for equal seeds.
"""

from __future__ import annotations

import itertools
import time
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from . import random_models as rm
from .fairness import (
    Predictor,
    admissible_inputs,
    build_cf_fair_predictor,
    check_counterfactual_fairness,
    check_demographic_parity,
    posterior_draw_predictor,
)
from .graph import (
    ci_deviation,
    d_separated,
    dag_from_scm,
    faithfulness_report,
    iter_triples,
)
from .scm import (
    Scm,
    abduct,
    counterfactual_distribution,
    intervene,
    joint_distribution,
    load_model,
    twin_network,
    world_name,
)
from .selection import (
    _conditional_gap,
    audit_dataset,
    audit_input_from_scm,
    check_ignorability_under_selection,
    construction_error,
    corollary_bound,
    exists_independent_model,
    potential_outcome_table,
    scaled_selection_check,
)

INDEPENDENCE_TOL = 1e-9
STRUCTURAL_TOL = 1e-12

# stream ids keep suites independent of each other's consumption
_SELECTION_STREAM = 1
_FAIRNESS_STREAM = 2
_MARKOV_STREAM = 3
_SCM_STREAM = 4


@dataclass
class SuiteResult:
    name: str
    trials: int
    failures: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "suite": self.name,
            "trials": self.trials,
            "passed": self.passed,
            "failures": list(self.failures),
            "stats": dict(self.stats),
        }


def _selection_models(trials: int, seed: int):
    rng = np.random.default_rng([seed, _SELECTION_STREAM])
    for _ in range(trials):
        yield rm.random_selection_scm(rng)


def suite_prop1(trials: int, seed: int) -> SuiteResult:
    """A construction exists iff ignorability under selection holds, and it reproduces the selected population."""
    res = SuiteResult("prop1", trials)
    built = 0
    worst = 0.0
    for t, scm in enumerate(_selection_models(trials, seed)):
        pot = potential_outcome_table(scm, "A", "S")
        ign = check_ignorability_under_selection(pot)
        verdict = exists_independent_model(pot)
        if verdict.exists != ign.holds:
            res.failures.append(f"trial {t}: construction exists={verdict.exists} but ignorability={ign.holds}")
            continue
        if verdict.exists:
            built += 1
            model = verdict.model
            if not model.independent_noise:
                res.failures.append(f"trial {t}: constructed model has dependent noise")
            if dag_from_scm(model, include_noise=False).parents("A"):
                res.failures.append(f"trial {t}: constructed A has observed parents")
            err = construction_error(pot, model)
            worst = max(worst, err)
            if err > STRUCTURAL_TOL:
                res.failures.append(f"trial {t}: construction error {err:.3g}")
    res.stats = {"constructions": built, "rejections": trials - built, "max_construction_error": worst}
    return res


def suite_prop2(trials: int, seed: int) -> SuiteResult:
    """Scaled-selection check agrees with ignorability under selection."""
    res = SuiteResult("prop2", trials)
    holds = 0
    for t, scm in enumerate(_selection_models(trials, seed)):
        pot = potential_outcome_table(scm, "A", "S")
        ign = check_ignorability_under_selection(pot).holds
        scaled = scaled_selection_check(pot).holds
        holds += ign
        if ign != scaled:
            res.failures.append(f"trial {t}: scaled check {scaled} vs ignorability {ign}")
    res.stats = {"ignorable": holds, "not_ignorable": trials - holds}
    return res


def _xor_inconclusive_demo(res: SuiteResult):
    scm = load_model("xor_sel")
    report = audit_dataset(audit_input_from_scm(scm, "A", "S"))
    ign = check_ignorability_under_selection(potential_outcome_table(scm, "A", "S"))
    res.stats["xor_sel_verdict"] = report.verdict
    res.stats["xor_sel_ignorable"] = ign.holds
    if report.violated or ign.holds:
        res.failures.append("xor_sel: expected an inconclusive audit with ignorability failing")


def suite_cor3(trials: int, seed: int) -> SuiteResult:
    """An exact-quantity audit violation implies ignorability under selection fails."""
    res = SuiteResult("cor3", trials)
    violations = 0
    for t, scm in enumerate(_selection_models(trials, seed)):
        audit = audit_input_from_scm(scm, "A", "S")
        report = audit_dataset(audit)
        pot = potential_outcome_table(scm, "A", "S")
        ign = check_ignorability_under_selection(pot)
        if report.violated:
            violations += 1
            if ign.holds:
                res.failures.append(f"trial {t}: audit violated but ignorability under selection holds")
        # the bound equals the ratio of selection rates
        joint = joint_distribution(scm, ["A", "S"])
        rate = {a: joint.prob({"A": a, "S": 1}) / joint.prob({"A": a}) for a in (0, 1)}
        for a, b in itertools.permutations((0, 1)):
            bound = corollary_bound(
                audit.selected_freq[a], audit.selected_freq[b], audit.population_freq[a], audit.population_freq[b]
            )
            if abs(bound - rate[a] / rate[b]) > STRUCTURAL_TOL * max(1.0, bound):
                res.failures.append(f"trial {t}: bound {bound} differs from rate ratio {rate[a] / rate[b]}")
    res.stats["violations"] = violations
    _xor_inconclusive_demo(res)
    return res


def _random_admissible_predictor(scm: Scm, rng: np.random.Generator, target: str) -> Predictor:
    inputs = admissible_inputs(scm, "A", target)
    outputs = scm.domain(target)
    domains = [scm.domain(v) for v in inputs]
    rows = {key: rm._probs(rng, len(outputs)) for key in itertools.product(*domains)}
    return Predictor(tuple(inputs), domains, outputs, rows, "stochastic")


def _prop4_case(res: SuiteResult, tag: str, scm: Scm, target: str, rng: np.random.Generator) -> float:
    worst = 0.0
    preds = [("built", build_cf_fair_predictor(scm, "A", target))]
    if admissible_inputs(scm, "A", target):
        preds.append(("random", _random_admissible_predictor(scm, rng, target)))
    for kind, pred in preds:
        cf = check_counterfactual_fairness(scm, pred, "A")
        if not cf.holds:
            res.failures.append(f"{tag}: {kind} predictor for {target} not counterfactually fair ({cf.deviation:.3g})")
            continue
        dp = check_demographic_parity(scm, pred, "A")
        worst = max(worst, dp.gap)
        if dp.gap >= INDEPENDENCE_TOL:
            res.failures.append(f"{tag}: {kind} predictor for {target} has parity gap {dp.gap:.3g}")
    return worst


def suite_prop4(trials: int, seed: int) -> SuiteResult:
    """Counterfactually fair predictors satisfy demographic parity on the data their model fits."""
    res = SuiteResult("prop4", trials)
    rng = np.random.default_rng([seed, _FAIRNESS_STREAM])
    worst = 0.0
    fitted = 0
    for t in range(trials):
        scm = rm.random_ancestral_scm(rng)
        covs = [v for v in scm.observed if v != "A"]
        target = covs[int(rng.integers(len(covs)))]
        worst = max(worst, _prop4_case(res, f"trial {t}", scm, target, rng))
    # models fit on selected data: the constructed independent-noise models
    for t, scm in enumerate(_selection_models(trials, seed)):
        verdict = exists_independent_model(potential_outcome_table(scm, "A", "S"))
        if not verdict.exists:
            continue
        model = verdict.model
        covs = [v for v in model.observed if v != "A"]
        if not covs:
            continue
        fitted += 1
        target = covs[int(rng.integers(len(covs)))]
        worst = max(worst, _prop4_case(res, f"fitted model {t}", model, target, rng))
    res.stats = {"fitted_models": fitted, "max_parity_gap": worst}
    return res


def suite_cor5(trials: int, seed: int) -> SuiteResult:
    """Posterior-draw predictors satisfy parity given selection iff the coordinate is ignorable under selection."""
    res = SuiteResult("cor5", trials)
    forward = converse = 0
    for t, scm in enumerate(_selection_models(trials, seed)):
        pot = potential_outcome_table(scm, "A", "S")
        ign = check_ignorability_under_selection(pot).holds
        selected = pot.joint.condition({"S": 1})
        if ign:
            forward += 1
        for x in pot.covariates:
            coord_gaps = {a: _conditional_gap(selected, "A", [pot.cf(x, a)])[0] for a in pot.sensitive_values}
            coord_fails = any(g >= INDEPENDENCE_TOL for g in coord_gaps.values())
            if coord_fails:
                converse += 1
            dp_gaps = {}
            for a in pot.sensitive_values:
                pred = posterior_draw_predictor(scm, "A", a, x, "S")
                dp_gaps[a] = check_demographic_parity(scm, pred, "A", "S").gap
            if ign and max(dp_gaps.values()) >= INDEPENDENCE_TOL:
                res.failures.append(f"trial {t}: ignorable but predictor for {x} has gap {max(dp_gaps.values()):.3g}")
            if coord_fails and not any(g > INDEPENDENCE_TOL for g in dp_gaps.values()):
                res.failures.append(f"trial {t}: {x} not ignorable under selection yet every predictor has parity")
    res.stats = {"forward_cases": forward, "converse_cases": converse}
    scm = load_model("xor_sel")
    pred = posterior_draw_predictor(scm, "A", 1, "X", "S")
    cf = check_counterfactual_fairness(scm, pred, "A")
    dp = check_demographic_parity(scm, pred, "A", "S")
    res.stats["xor_sel_cf_deviation"] = cf.deviation
    res.stats["xor_sel_parity_gap"] = dp.gap
    if not (cf.deviation < INDEPENDENCE_TOL and abs(dp.gap - 1.0) <= INDEPENDENCE_TOL):
        res.failures.append("xor_sel: expected a counterfactually fair predictor with parity gap 1")
    return res


def suite_markov(trials: int, seed: int) -> SuiteResult:
    """Every d-separation in the noise-augmented graph is an exact independence."""
    res = SuiteResult("markov", trials)
    rng = np.random.default_rng([seed, _MARKOV_STREAM])
    checked = 0
    for t in range(trials):
        scm = rm.random_markov_scm(rng)
        g = dag_from_scm(scm, include_noise=True)
        joint = joint_distribution(scm, scm.observed)
        for x, y, zs in iter_triples(scm.observed):
            if d_separated(g, [x], [y], zs):
                checked += 1
                dev = ci_deviation(joint, x, y, zs)
                if dev >= INDEPENDENCE_TOL:
                    res.failures.append(f"trial {t}: {x} ⊥ {y} | {set(zs)} d-separated but deviation {dev:.3g}")
    res.stats["d_separated_triples"] = checked
    found = any(
        ci.left == {"A"} and ci.right == {"X"} and not ci.given
        for ci in faithfulness_report(load_model("xor_sel"))
    )
    res.stats["xor_sel_unfaithful_A_X"] = found
    if not found:
        res.failures.append("xor_sel: faithfulness report lacks A ⊥ X")
    return res


def _positive_assignments(joint, names):
    for vals in itertools.product(*(joint.domain(n) for n in names)):
        ev = dict(zip(names, vals))
        if joint.prob(ev) > 0:
            yield ev


def suite_scm(trials: int, seed: int) -> SuiteResult:
    """Consistency, twin-network equivalence and intervention idempotence."""
    res = SuiteResult("scm", trials)
    rng = np.random.default_rng([seed, _SCM_STREAM])
    for t in range(trials):
        scm = rm.random_markov_scm(rng, max_observed=4)
        obs = list(scm.observed)
        joint = joint_distribution(scm, obs)
        for a_var, x_var in itertools.permutations(obs, 2):
            for ev in _positive_assignments(joint, [a_var, x_var]):
                cf = counterfactual_distribution(scm, ev, {a_var: ev[a_var]}, [x_var])
                if abs(cf.prob({x_var: ev[x_var]}) - 1.0) > STRUCTURAL_TOL:
                    res.failures.append(f"trial {t}: consistency fails for {ev}")
        size = int(rng.integers(1, len(obs) + 1))
        ev_names = sorted(rng.choice(obs, size=size, replace=False).tolist(), key=obs.index)
        evidences = list(_positive_assignments(joint, ev_names))
        evidence = evidences[int(rng.integers(len(evidences)))]
        do_var = obs[int(rng.integers(len(obs)))]
        do = {do_var: int(rng.integers(2))}
        cf = counterfactual_distribution(scm, evidence, do, obs)
        twin = twin_network(scm, [("f", {}), ("cf", do)])
        tj = joint_distribution(twin, [world_name(v, "f") for v in evidence] + [world_name(v, "cf") for v in obs])
        tj = tj.condition({world_name(v, "f"): val for v, val in evidence.items()})
        twin_marg = tj.marginal([world_name(v, "cf") for v in obs]).array
        if not np.allclose(cf.array, twin_marg, atol=STRUCTURAL_TOL, rtol=0):
            res.failures.append(f"trial {t}: twin network disagrees with abduction for {evidence} do {do}")
        once = joint_distribution(intervene(scm, do), obs)
        twice = joint_distribution(intervene(intervene(scm, do), do), obs)
        if not np.array_equal(once.array, twice.array):
            res.failures.append(f"trial {t}: intervention is not idempotent")
        post = abduct(scm, evidence)
        if abs(float(post.array.sum()) - 1.0) > STRUCTURAL_TOL:
            res.failures.append(f"trial {t}: posterior not normalized")
    return res


SUITES: dict[str, Callable[[int, int], SuiteResult]] = {
    "prop1": suite_prop1,
    "prop2": suite_prop2,
    "cor3": suite_cor3,
    "prop4": suite_prop4,
    "cor5": suite_cor5,
    "markov": suite_markov,
    "scm": suite_scm,
}

ALL_SUITES = ("prop1", "prop2", "cor3", "prop4", "cor5", "markov")


def run_suite(name: str, trials: int, seed: int) -> list[SuiteResult]:
    if trials < 1:
        raise ValueError("trials must be positive")
    names = ALL_SUITES if name == "all" else (name,)
    out = []
    for n in names:
        if n not in SUITES:
            raise ValueError(f"unknown suite {n!r}")
        start = time.perf_counter()
        result = SUITES[n](trials, seed)
        result.seconds = time.perf_counter() - start
        out.append(result)
    return out
