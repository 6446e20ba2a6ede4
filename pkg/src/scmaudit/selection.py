"""Ignorability under selection and the dataset-level selection constraint.

The central objects are the potential-outcome table (factual variables plus
one counterfactual copy of every covariate and the selection indicator per
sensitive value, all sharing noise) and :func:`audit_dataset`, which applies
the bound ``P(A=a|S=1)P(A=a') / (P(A=a'|S=1)P(A=a))`` to witness selection
probabilities.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import operator
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import (
    ModelParseError,
    NotAncestrallyClosedError,
    ScmError,
    ZeroProbabilityError,
)
from .graph import ancestrally_closed, dag_from_scm, latent_pairs
from .scm import (
    OBSERVED,
    JointTable,
    Scm,
    VariableSpec,
    format_value,
    joint_distribution,
    twin_network,
    world_name,
)

FREQ_TOL = 1e-9
TIE_TOL = 1e-9
NO_MODEL_FITS = "no model in M_{S=1} fits"
INCONCLUSIVE = "inconclusive"

JUSTIFICATION_CONDITIONS = {
    1: "no selection from the general population (e.g. the data is a full census)",
    2: "selection exists but neither A -> S <- X nor A -> X -> S is present (e.g. uniform random sampling)",
    3: "selection paths exist but the distribution is unfaithful, i.e. selection satisfies the scaled-selection equality",
}


@dataclass(frozen=True)
class SelectionSpec:
    variable: str

    def validate(self, scm: Scm):
        spec = scm.spec(self.variable)
        if spec.kind != OBSERVED:
            raise ScmError(f"selection variable {self.variable} must be observed")
        if len(spec.domain) != 2 or 1 not in spec.domain:
            raise ScmError(f"selection variable {self.variable} must be binary with 1 meaning selected")
        if scm.children(self.variable):
            raise ScmError(f"selection variable {self.variable} must have no children")


@dataclass(frozen=True)
class PotentialOutcomeTable:
    joint: JointTable
    sensitive: str
    selection: str
    covariates: tuple[str, ...]
    labels: tuple[tuple[Any, str], ...]

    @property
    def sensitive_values(self) -> tuple:
        return tuple(a for a, _ in self.labels)

    def cf(self, var: str, a: Any) -> str:
        """Name of the counterfactual copy of ``var`` under do(sensitive = a)."""
        for value, label in self.labels:
            if value == a:
                return world_name(var, label)
        raise ScmError(f"{format_value(a)} is not a value of {self.sensitive}")

    def counterfactual_covariates(self, a: Any) -> list[str]:
        return [self.cf(x, a) for x in self.covariates]


def potential_outcome_table(scm: Scm, sensitive: str, selection: SelectionSpec | str) -> PotentialOutcomeTable:
    if isinstance(selection, str):
        selection = SelectionSpec(selection)
    if scm.spec(sensitive).kind != OBSERVED:
        raise ScmError(f"sensitive attribute {sensitive} must be observed")
    if sensitive == selection.variable:
        raise ScmError("sensitive attribute and selection variable must differ")
    selection.validate(scm)
    g = dag_from_scm(scm, include_noise=False)
    if not ancestrally_closed(g, {sensitive}, latent_pairs(scm)):
        raise NotAncestrallyClosedError(
            f"{sensitive} is not ancestrally closed: it has an observed parent or shares a noise input"
        )
    covariates = tuple(v for v in scm.observed if v not in (sensitive, selection.variable))
    labels = tuple((a, format_value(a)) for a in scm.domain(sensitive))
    twin = twin_network(scm, [(label, {sensitive: a}) for a, label in labels])
    scope = [sensitive, *covariates, selection.variable]
    for _, label in labels:
        scope += [world_name(x, label) for x in covariates] + [world_name(selection.variable, label)]
    return PotentialOutcomeTable(
        joint_distribution(twin, scope), sensitive, selection.variable, covariates, labels
    )


@dataclass(frozen=True)
class IndependenceResult:
    """Outcome of an X(a) ⊥ A test; ``max_deviation`` is the largest gap
    |P(X(a)=x | A=a1) - P(X(a)=x | A=a2)| and ``witness`` names that cell."""

    holds: bool
    max_deviation: float
    witness: dict | None = None

    def __bool__(self):
        return self.holds


def _conditional_gap(table: JointTable, given: str, targets: Sequence[str]):
    """Largest |P(targets | given=g1) - P(targets | given=g2)| over positive-probability g1, g2."""
    m = table.marginal([given, *targets])
    arr = m.array.reshape(len(m.domains[0]), -1)
    pg = arr.sum(axis=1)
    values = [g for g, p in zip(m.domains[0], pg) if p > 0]
    conds = {g: arr[i] / pg[i] for i, g in enumerate(m.domains[0]) if pg[i] > 0}
    cells = list(itertools.product(*m.domains[1:]))
    best, witness = 0.0, None
    for g1, g2 in itertools.combinations(values, 2):
        diff = np.abs(conds[g1] - conds[g2])
        k = int(diff.argmax())
        if witness is None or diff[k] > best:
            best = float(diff[k])
            witness = {
                "cell": dict(zip(targets, cells[k])),
                given: (g1, g2),
                "probabilities": (float(conds[g1][k]), float(conds[g2][k])),
            }
    return best, witness


def _ignorability(pot: PotentialOutcomeTable, tol: float, selected: bool) -> IndependenceResult:
    joint = pot.joint
    if selected:
        for a in pot.sensitive_values:
            if joint.prob({pot.sensitive: a, pot.selection: 1}) <= 0:
                raise ZeroProbabilityError(
                    f"{pot.sensitive}={format_value(a)} is never selected; P(S=1 | A=a) must be positive"
                )
        joint = joint.condition({pot.selection: 1})
    worst, witness = 0.0, None
    for a in pot.sensitive_values:
        names = pot.counterfactual_covariates(a)
        if not names:
            continue
        gap, cell = _conditional_gap(joint, pot.sensitive, names)
        if witness is None or gap > worst:
            worst, witness = gap, dict(cell or {}, world=a)
    holds = worst < tol
    return IndependenceResult(holds, worst, None if holds else witness)


def check_ignorability(pot: PotentialOutcomeTable, tol: float = 1e-9) -> IndependenceResult:
    """X*(a) ⊥ A for every a, in the whole population."""
    return _ignorability(pot, tol, selected=False)


def check_ignorability_under_selection(pot: PotentialOutcomeTable, tol: float = 1e-9) -> IndependenceResult:
    """X*(a) ⊥ A | S=1 for every a."""
    return _ignorability(pot, tol, selected=True)


@dataclass(frozen=True)
class ModelVerdict:
    exists: bool
    result: IndependenceResult
    model: Scm | None = None
    #: for the constructed model, value k of the shared noise variable maps to these potential outcomes
    support: tuple[dict, ...] = ()

    def __bool__(self):
        return self.exists


def exists_independent_model(pot: PotentialOutcomeTable, tol: float = 1e-9) -> ModelVerdict:
    """Build an independent-noise model with the true counterfactuals, if one exists.

    The construction uses the vector of potential covariates as its noise:
    ``U_cf ~ P((X*(a))_a | S=1)``, ``A ~ P(A | S=1)`` and each covariate
    reads the component of ``U_cf`` belonging to the realized world.
    """
    result = check_ignorability_under_selection(pot, tol)
    if not result.holds:
        return ModelVerdict(False, result)
    A = pot.sensitive
    selected = pot.joint.condition({pot.selection: 1})
    a_values = pot.sensitive_values
    pa = selected.marginal([A]).array
    cf_names = [name for a in a_values for name in pot.counterfactual_covariates(a)]
    u_a = f"U_{A}"
    variables = [VariableSpec(u_a, a_values, "noise")]
    noise = {u_a: tuple(float(p) for p in pa)}
    observed = [VariableSpec(A, a_values, OBSERVED)]
    parents: dict[str, tuple[str, ...]] = {A: (u_a,)}
    equations: dict[str, dict] = {A: {(a,): a for a in a_values}}
    support: list[dict] = []
    if pot.covariates:
        cf_joint = selected.marginal(cf_names)
        rows = [(vals, p) for vals, p in cf_joint.probabilities.items() if p > 0]
        support = [dict(zip(cf_names, vals)) for vals, _ in rows]
        u_cf = "U_cf"
        variables.append(VariableSpec(u_cf, tuple(range(len(rows))), "noise"))
        noise[u_cf] = tuple(p for _, p in rows)
        for x in pot.covariates:
            observed.append(VariableSpec(x, pot.joint.domain(x), OBSERVED))
            parents[x] = (A, u_cf)
            equations[x] = {(a, k): support[k][pot.cf(x, a)] for a in a_values for k in range(len(rows))}
    model = Scm(tuple(variables + observed), parents, equations, noise)
    return ModelVerdict(True, result, model, tuple(support))


def construction_error(pot: PotentialOutcomeTable, model: Scm) -> float:
    """Largest absolute mismatch between ``model`` and the selected population.

    Compares P(X | A) of the model against P(X | A, S=1) and, for every pair
    of sensitive values, P(X(a) | A=a') of the model against
    P(X*(a) | A=a', S=1).
    """
    A = pot.sensitive
    selected = pot.joint.condition({pot.selection: 1})
    twin = twin_network(model, [(label, {A: a}) for a, label in pot.labels])
    model_names = [A, *pot.covariates] + [world_name(x, label) for _, label in pot.labels for x in pot.covariates]
    mj = joint_distribution(twin, model_names)
    worst = 0.0
    for a_obs in pot.sensitive_values:
        model_cond = mj.condition({A: a_obs})
        true_cond = selected.condition({A: a_obs})
        groups = [list(pot.covariates)] + [pot.counterfactual_covariates(a) for a in pot.sensitive_values]
        model_groups = [list(pot.covariates)] + [
            [world_name(x, label) for x in pot.covariates] for _, label in pot.labels
        ]
        for true_names, m_names in zip(groups, model_groups):
            if not true_names:
                continue
            t = true_cond.marginal(true_names).array
            m = model_cond.marginal(m_names).array
            worst = max(worst, float(np.abs(t - m).max()))
    worst = max(worst, float(np.abs(mj.marginal([A]).array - selected.marginal([A]).array).max()))
    return worst


@dataclass(frozen=True)
class ScaledSelectionResult:
    holds: bool
    max_deviation: float
    failures: tuple[dict, ...] = ()

    def __bool__(self):
        return self.holds


def scaled_selection_check(pot: PotentialOutcomeTable, tol: float = 1e-9) -> ScaledSelectionResult:
    """Compare P(S(a)=1|X=x,A=a)/P(S=1|A=a) with P(S(a')=1|X=x,A=a)/P(S=1|A=a')."""
    A, S = pot.sensitive, pot.selection
    joint = pot.joint
    p_sel = {}
    for a in pot.sensitive_values:
        pa = joint.prob({A: a})
        p_sa = joint.prob({A: a, S: 1})
        if p_sa <= 0:
            raise ZeroProbabilityError(f"{A}={format_value(a)} is never selected; P(S=1 | A=a) must be positive")
        p_sel[a] = p_sa / pa
    x_names = list(pot.covariates)
    s_names = [pot.cf(S, a) for a in pot.sensitive_values]
    table = joint.marginal([A, *x_names, *s_names])
    failures = []
    worst = 0.0
    x_domains = [table.domain(x) for x in x_names]
    for a in pot.sensitive_values:
        for x in itertools.product(*x_domains):
            context = {A: a, **dict(zip(x_names, x))}
            mass = table.prob(context)
            if mass <= 0:
                continue
            lhs = table.prob({**context, pot.cf(S, a): 1}) / mass / p_sel[a]
            for a2 in pot.sensitive_values:
                if a2 == a:
                    continue
                rhs = table.prob({**context, pot.cf(S, a2): 1}) / mass / p_sel[a2]
                dev = abs(lhs - rhs)
                worst = max(worst, dev)
                if dev >= tol:
                    failures.append({"x": dict(zip(x_names, x)), "a": a, "a_prime": a2, "lhs": lhs, "rhs": rhs})
    return ScaledSelectionResult(not failures, worst, tuple(failures))


def corollary_bound(p_a_sel: float, p_aprime_sel: float, p_a: float, p_aprime: float) -> float:
    """P(A=a|S=1) P(A=a') / (P(A=a'|S=1) P(A=a)).

    Any covariate pattern x with P(S=1 | X=x, A=a) above this value rules
    out every independent-noise model with an ancestrally closed sensitive
    attribute.
    """
    for name, p in (("p_a_sel", p_a_sel), ("p_aprime_sel", p_aprime_sel), ("p_a", p_a), ("p_aprime", p_aprime)):
        if not 0 <= p <= 1:
            raise ScmError(f"{name}={p} is not a probability")
    denominator = p_aprime_sel * p_a
    if denominator == 0:
        raise ZeroProbabilityError("zero denominator: P(A=a'|S=1) and P(A=a) must be positive")
    return p_a_sel * p_aprime / denominator


# -- dataset audits -------------------------------------------------------------------


@dataclass(frozen=True)
class PopulationPreset:
    name: str
    population_freq: Mapping[str, float]
    citation: str
    dataset: str
    dataset_freq: Mapping[str, float]
    published_bounds: Mapping[str, float]
    reference_pair: tuple[str, str] = ("Female", "Male")


PRESETS: dict[str, PopulationPreset] = {
    "us1994": PopulationPreset(
        "us1994",
        {"Female": 0.509, "Male": 0.491},
        "World Bank population estimates: United States, 1994 (50.9% female, 49.1% male)",
        "Adult",
        {"Female": 0.33, "Male": 0.67},
        {"summary table": 0.475, "worked derivation": 0.475, "discussion text": 0.477},
    ),
    "de1994": PopulationPreset(
        "de1994",
        {"Female": 0.516, "Male": 0.484},
        "World Bank population estimates: Germany, 1994 (quoted as 51.5% female, 48.4% male; "
        "the worked derivation uses 0.516 female, which also makes the vector sum to 1)",
        "German Credit",
        {"Female": 0.31, "Male": 0.69},
        {"summary table": 0.421, "worked derivation": 0.421},
    ),
    "us1998": PopulationPreset(
        "us1998",
        {"Female": 0.497, "Male": 0.503},
        "World Bank population estimates: United States, 1998 (49.7% female, 50.3% male)",
        "Law School",
        {"Female": 0.438, "Male": 0.562},
        {"summary table": 0.753, "worked derivation": 0.789},
    ),
}


@dataclass(frozen=True)
class Witness:
    """A covariate pattern with a known selection probability P(S=1 | X=x, A=a)."""

    pattern: Mapping[str, Any]
    sensitive_value: Any
    probability: float

    def to_dict(self):
        return {"pattern": dict(self.pattern), "sensitive_value": self.sensitive_value, "probability": self.probability}


def _check_freq(name: str, freq: Mapping[Any, float]):
    if not freq:
        raise ScmError(f"{name} is empty")
    for k, p in freq.items():
        if not 0 <= p <= 1:
            raise ScmError(f"{name}[{k}]={p} is outside [0, 1]")
    total = sum(freq.values())
    if abs(total - 1) > FREQ_TOL:
        raise ScmError(f"{name} sums to {total:.12g}, not 1")


@dataclass(frozen=True)
class AuditInput:
    selected_freq: Mapping[Any, float]
    population_freq: Mapping[Any, float]
    witnesses: tuple[Witness, ...] = ()
    #: user assertions for the justification checklist; None = not asserted
    conditions: Mapping[int, bool | None] = field(default_factory=dict)
    dataset: str | None = None
    preset: PopulationPreset | None = None

    def __post_init__(self):
        _check_freq("selected_freq", self.selected_freq)
        _check_freq("population_freq", self.population_freq)
        if set(self.selected_freq) != set(self.population_freq):
            raise ScmError("selected_freq and population_freq must cover the same sensitive values")
        object.__setattr__(self, "witnesses", tuple(self.witnesses))
        for w in self.witnesses:
            if w.sensitive_value not in self.selected_freq:
                raise ScmError(f"witness refers to unknown sensitive value {w.sensitive_value!r}")
            if not 0 <= w.probability <= 1:
                raise ScmError(f"witness probability {w.probability} is outside [0, 1]")
        for k in self.conditions:
            if k not in JUSTIFICATION_CONDITIONS:
                raise ScmError(f"unknown justification condition {k}")


@dataclass(frozen=True)
class WitnessVerdict:
    witness: Witness
    status: str  # "violated" | "boundary" | "not violated"
    against: Any  # the a' achieving the smallest bound
    bound: float


@dataclass(frozen=True)
class AuditReport:
    bounds: Mapping[tuple[Any, Any], float]
    witnesses: tuple[WitnessVerdict, ...]
    conditions: Mapping[int, bool | None]
    verdict: str
    notes: tuple[str, ...] = ()
    dataset: str | None = None

    @property
    def violated(self) -> bool:
        return self.verdict == NO_MODEL_FITS

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "verdict": self.verdict,
            "bounds": [
                {"a": format_value(a), "a_prime": format_value(b), "bound": v} for (a, b), v in self.bounds.items()
            ],
            "witnesses": [
                {
                    "pattern": {k: format_value(v) for k, v in wv.witness.pattern.items()},
                    "sensitive_value": format_value(wv.witness.sensitive_value),
                    "probability": wv.witness.probability,
                    "status": wv.status,
                    "against": None if wv.against is None else format_value(wv.against),
                    "bound": wv.bound,
                }
                for wv in self.witnesses
            ],
            "conditions": [
                {"id": k, "description": JUSTIFICATION_CONDITIONS[k], "asserted": self.conditions.get(k)}
                for k in sorted(JUSTIFICATION_CONDITIONS)
            ],
            "notes": list(self.notes),
        }


def audit_dataset(audit: AuditInput, tol: float = TIE_TOL) -> AuditReport:
    """Apply the dataset-level bound to every witness; ties within ``tol`` count as inconclusive."""
    if tol < 0:
        raise ScmError("tolerance must be non-negative")
    sel, pop = audit.selected_freq, audit.population_freq
    values = list(sel)
    bounds: dict[tuple[Any, Any], float] = {}
    notes: list[str] = []
    for a, b in itertools.permutations(values, 2):
        if sel[b] > 0 and pop[a] > 0:
            bounds[(a, b)] = corollary_bound(sel[a], sel[b], pop[a], pop[b])
        else:
            notes.append(f"bound for ({format_value(a)}, {format_value(b)}) undefined: zero frequency")
    verdicts = []
    for w in audit.witnesses:
        candidates = [(bounds[(w.sensitive_value, b)], b) for b in values if (w.sensitive_value, b) in bounds]
        if not candidates:
            verdicts.append(WitnessVerdict(w, "not violated", None, float("nan")))
            continue
        bound, against = min(candidates, key=lambda t: t[0])
        if w.probability > bound + tol:
            status = "violated"
        elif abs(w.probability - bound) <= tol:
            status = "boundary"
        else:
            status = "not violated"
        verdicts.append(WitnessVerdict(w, status, against, bound))
    violated = any(v.status == "violated" for v in verdicts)
    if not audit.witnesses:
        notes.append("no witness supplied: the bound alone cannot reject any model")
    if any(v.status == "boundary" for v in verdicts):
        notes.append(f"a witness ties its bound within {tol:g}; ties are treated as inconclusive")
    if not violated:
        notes.append(
            "no violation found; this is not evidence that an independent-noise model fits. "
            "Justify one of the listed conditions instead."
        )
    if audit.preset is not None:
        preset = audit.preset
        notes.append(f"population frequencies: {preset.citation}")
        pair = preset.reference_pair
        if pair in bounds:
            computed = bounds[pair]
            for source, published in preset.published_bounds.items():
                diff = computed - published
                flag = "agrees" if abs(diff) <= 0.001 else f"DIFFERS by {diff:+.3f}"
                notes.append(
                    f"{preset.dataset}: computed bound {computed:.3f} vs published {source} {published:.3f} ({flag})"
                )
    return AuditReport(
        bounds,
        tuple(verdicts),
        dict(audit.conditions),
        NO_MODEL_FITS if violated else INCONCLUSIVE,
        tuple(notes),
        audit.dataset,
    )


def parse_audit_input(text: str, preset: str | None = None) -> AuditInput:
    """Parse an audit input file (JSON).

    Keys: ``selected_freq`` and ``population_freq`` (sensitive value ->
    frequency), optional ``witnesses`` (list of ``{"pattern": {...},
    "sensitive_value": ..., "probability": ...}``), ``conditions``
    (``{"1": true, ...}``) and ``dataset``. With ``preset``, the preset's
    population frequencies replace ``population_freq``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"malformed audit input: {exc}") from None
    if not isinstance(doc, dict) or "selected_freq" not in doc:
        raise ModelParseError("audit input must be an object with 'selected_freq'")
    chosen = None
    if preset is not None:
        if preset not in PRESETS:
            raise ScmError(f"unknown preset {preset!r}; choose from {', '.join(sorted(PRESETS))}")
        chosen = PRESETS[preset]
        population = dict(chosen.population_freq)
    elif "population_freq" in doc:
        population = doc["population_freq"]
    else:
        raise ModelParseError("audit input needs 'population_freq' or a preset")
    try:
        witnesses = tuple(
            Witness(dict(w.get("pattern", {})), w["sensitive_value"], float(w["probability"]))
            for w in doc.get("witnesses", [])
        )
        conditions = {int(k): v for k, v in doc.get("conditions", {}).items()}
        return AuditInput(
            {k: float(v) for k, v in doc["selected_freq"].items()},
            {k: float(v) for k, v in population.items()},
            witnesses,
            conditions,
            doc.get("dataset", chosen.dataset if chosen else None),
            chosen,
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise ModelParseError(f"malformed audit input: {exc!r}") from None


def audit_input_from_scm(scm: Scm, sensitive: str, selection: str) -> AuditInput:
    """Exact audit quantities from a known model; every positive pattern becomes a witness."""
    covariates = [v for v in scm.observed if v not in (sensitive, selection)]
    joint = joint_distribution(scm, [sensitive, *covariates, selection])
    selected = joint.condition({selection: 1})
    sel = {a: selected.prob({sensitive: a}) for a in scm.domain(sensitive)}
    pop = {a: joint.prob({sensitive: a}) for a in scm.domain(sensitive)}
    witnesses = []
    for x in itertools.product(*(scm.domain(c) for c in covariates)):
        for a in scm.domain(sensitive):
            ctx = {sensitive: a, **dict(zip(covariates, x))}
            mass = joint.prob(ctx)
            if mass > 0:
                witnesses.append(Witness(dict(zip(covariates, x)), a, joint.prob({**ctx, selection: 1}) / mass))
    return AuditInput(sel, pop, tuple(witnesses))


# -- deterministic selection rules ------------------------------------------------------


@dataclass(frozen=True)
class CovariateTable:
    columns: tuple[str, ...]
    rows: tuple[Mapping[str, str], ...]

    @classmethod
    def from_csv(cls, text: str) -> CovariateTable:
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None:
            raise ModelParseError("CSV has no header row")
        return cls(tuple(reader.fieldnames), tuple(dict(r) for r in reader))


_OPS = {
    ">=": operator.ge,
    "≥": operator.ge,
    "<=": operator.le,
    "≤": operator.le,
    "==": operator.eq,
    "=": operator.eq,
    "!=": operator.ne,
    "≠": operator.ne,
    ">": operator.gt,
    "<": operator.lt,
}
_CLAUSE = re.compile(r"^\s*([A-Za-z_][\w.-]*)\s*(>=|<=|==|!=|≥|≤|≠|=|>|<)\s*(.+?)\s*$")
_AND = re.compile(r"\s+and\s+|\s*(?:∧|&&|&)\s*", re.IGNORECASE)


def _as_number(text: str):
    try:
        return float(text)
    except (TypeError, ValueError):
        return None


def parse_rule(rule: str) -> list[tuple[str, str, str]]:
    """Split ``"hours>0 and income>=100"`` into (column, op, value) clauses."""
    clauses = []
    for part in _AND.split(rule.strip()):
        if not part:
            continue
        m = _CLAUSE.match(part)
        if not m:
            raise ModelParseError(f"cannot parse rule clause {part!r}")
        clauses.append((m.group(1), m.group(2), m.group(3).strip("'\"")))
    if not clauses:
        raise ModelParseError("empty rule")
    return clauses


def _clause_holds(cell: str, op: str, value: str) -> bool:
    left, right = _as_number(cell), _as_number(value)
    if left is not None and right is not None:
        return _OPS[op](left, right)
    if op in ("=", "==", "!=", "≠"):
        return _OPS[op](cell.strip(), value)
    raise ScmError(f"ordering comparison {op} needs numeric values, got {cell!r} and {value!r}")


def deterministic_rule_witness(dataset: CovariateTable, rule: str, sensitive: str) -> list[Witness]:
    """Probability-one witnesses for every distinct row satisfying a deterministic inclusion rule."""
    clauses = parse_rule(rule)
    for column, _, _ in clauses:
        if column not in dataset.columns:
            raise ScmError(f"rule references unknown column {column!r}")
    if sensitive not in dataset.columns:
        raise ScmError(f"unknown sensitive column {sensitive!r}")
    seen = set()
    out = []
    for row in dataset.rows:
        if all(_clause_holds(row[c], op, v) for c, op, v in clauses):
            pattern = {k: v for k, v in row.items() if k != sensitive}
            key = (tuple(sorted(pattern.items())), row[sensitive])
            if key not in seen:
                seen.add(key)
                out.append(Witness(pattern, row[sensitive], 1.0))
    return out
