"""Counterfactual fairness, demographic parity and fair predictor construction."""

from __future__ import annotations

import csv
import io
import itertools
import warnings
from collections import defaultdict
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ModelParseError, ScmError, ZeroProbabilityError
from .scm import (
    OBSERVED,
    Scm,
    format_value,
    joint_distribution,
    parse_value,
    twin_network,
    world_name,
)
from .selection import SelectionSpec

DETERMINISTIC = "deterministic"
STOCHASTIC = "stochastic"
ROW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Predictor:
    """A table from input assignments to a distribution over ``outputs``.

    Deterministic predictors are stored as one-hot rows. Rows listed in
    ``undefined`` correspond to zero-probability contexts; evaluating them
    raises :class:`ZeroProbabilityError`.
    """

    inputs: tuple[str, ...]
    input_domains: tuple[tuple, ...]
    outputs: tuple
    rows: Mapping[tuple, tuple[float, ...]]
    kind: str = DETERMINISTIC
    undefined: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "input_domains", tuple(tuple(d) for d in self.input_domains))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if len(self.inputs) != len(self.input_domains):
            raise ScmError("one domain per predictor input is required")
        if self.kind not in (DETERMINISTIC, STOCHASTIC):
            raise ScmError(f"unknown predictor kind {self.kind!r}")
        rows = {tuple(k): tuple(float(p) for p in v) for k, v in self.rows.items()}
        expected = set(itertools.product(*self.input_domains))
        missing = expected - set(rows)
        if missing:
            raise ScmError(f"predictor is not total: no row for {min(missing, key=repr)}")
        for key, vec in rows.items():
            if key not in expected:
                raise ScmError(f"predictor row {key} is outside the input domains")
            if len(vec) != len(self.outputs) or any(p < 0 for p in vec):
                raise ScmError(f"predictor row {key} is not a probability vector over {len(self.outputs)} outputs")
            if abs(sum(vec) - 1) > ROW_TOL:
                raise ScmError(f"predictor row {key} sums to {sum(vec):.15g}")
            if self.kind == DETERMINISTIC and sorted(vec) != [0.0] * (len(vec) - 1) + [1.0]:
                raise ScmError(f"deterministic predictor row {key} is not one-hot")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "undefined", frozenset(self.undefined))

    @classmethod
    def deterministic(cls, scm: Scm, inputs: Sequence[str], outputs: Sequence, fn: Callable | Mapping) -> Predictor:
        """Predictor ``fn(*input_values) -> output`` over model variables."""
        inputs = tuple(inputs)
        outputs = tuple(outputs)
        domains = [scm.domain(v) for v in inputs]
        rows = {}
        for key in itertools.product(*domains):
            value = fn[key] if isinstance(fn, Mapping) else fn(*key)
            if value not in outputs:
                raise ScmError(f"predictor output {format_value(value)} not among {outputs}")
            rows[key] = tuple(1.0 if o == value else 0.0 for o in outputs)
        return cls(inputs, domains, outputs, rows, DETERMINISTIC)

    @classmethod
    def stochastic(cls, scm: Scm, inputs: Sequence[str], outputs: Sequence, fn: Callable | Mapping) -> Predictor:
        """Predictor ``fn(*input_values) -> probability vector over outputs``."""
        inputs = tuple(inputs)
        domains = [scm.domain(v) for v in inputs]
        rows = {
            key: tuple(fn[key] if isinstance(fn, Mapping) else fn(*key)) for key in itertools.product(*domains)
        }
        return cls(inputs, domains, tuple(outputs), rows, STOCHASTIC)

    @classmethod
    def constant(cls, value: Any, outputs: Sequence) -> Predictor:
        outputs = tuple(outputs)
        return cls((), (), outputs, {(): tuple(1.0 if o == value else 0.0 for o in outputs)}, DETERMINISTIC)

    def distribution(self, values: Sequence) -> np.ndarray:
        key = tuple(values)
        if key in self.undefined:
            raise ZeroProbabilityError(
                "predictor evaluated at a zero-probability context: "
                + ", ".join(f"{n}={format_value(v)}" for n, v in zip(self.inputs, key))
            )
        try:
            return np.asarray(self.rows[key])
        except KeyError:
            raise ScmError(f"predictor has no row for {key}") from None

    def predict(self, values: Sequence) -> Any:
        if self.kind != DETERMINISTIC:
            raise ScmError("predict() needs a deterministic predictor; use distribution()")
        return self.outputs[int(np.argmax(self.distribution(values)))]

    def check_inputs(self, scm: Scm):
        for name, dom in zip(self.inputs, self.input_domains):
            if name not in scm.names:
                raise ScmError(f"predictor input {name} is not a variable of the model")
            if tuple(scm.domain(name)) != dom:
                raise ScmError(f"predictor input {name} has a different domain from the model")


@dataclass(frozen=True)
class FairnessVerdict:
    holds: bool
    deviation: float
    worst_context: dict | None
    contexts_checked: int
    contexts_skipped: int
    tol: float

    def __bool__(self):
        return self.holds


def _world_inputs(scm: Scm, pred: Predictor, label: str) -> list[str]:
    return [v if scm.is_noise(v) else world_name(v, label) for v in pred.inputs]


def check_counterfactual_fairness(scm: Scm, pred: Predictor, sensitive: str, tol: float = 1e-9) -> FairnessVerdict:
    """Compare P(Ŷ(a)=y | X=x, A=a) with P(Ŷ(a')=y | X=x, A=a) in every positive context."""
    pred.check_inputs(scm)
    if scm.spec(sensitive).kind != OBSERVED:
        raise ScmError(f"sensitive attribute {sensitive} must be observed")
    a_values = scm.domain(sensitive)
    labels = [f"cf={format_value(a)}" for a in a_values]
    twin = twin_network(scm, [(label, {sensitive: a}) for a, label in zip(a_values, labels)])
    context = list(scm.observed)
    world_inputs = [_world_inputs(scm, pred, label) for label in labels]
    extra = [n for names in world_inputs for n in names if n not in context]
    scope = context + list(dict.fromkeys(extra))
    joint = joint_distribution(twin, scope)

    mass: dict[tuple, float] = defaultdict(float)
    acc: dict[tuple, np.ndarray] = {}
    for cell, p in joint.support():
        key = tuple(cell[v] for v in context)
        mass[key] += p
        vecs = np.stack([p * pred.distribution([cell[n] for n in names]) for names in world_inputs])
        acc[key] = acc[key] + vecs if key in acc else vecs

    a_index = context.index(sensitive)
    worst, worst_ctx = 0.0, None
    for key, m in mass.items():
        dists = acc[key] / m
        i = a_values.index(key[a_index])
        for j, a2 in enumerate(a_values):
            diff = np.abs(dists[i] - dists[j])
            k = int(diff.argmax())
            if worst_ctx is None or diff[k] > worst:
                worst = float(diff[k])
                worst_ctx = {
                    "context": dict(zip(context, key)),
                    "a": key[a_index],
                    "a_prime": a2,
                    "y": pred.outputs[k],
                }
    total = 1
    for v in context:
        total *= len(scm.domain(v))
    return FairnessVerdict(worst < tol, worst, worst_ctx, len(mass), total - len(mass), tol)


def _argmax_low(vec: np.ndarray) -> int:
    """Index of the maximum, ties (within 1e-12) going to the lowest index."""
    top = vec.max()
    return int(np.flatnonzero(vec >= top - 1e-12)[0])


def admissible_inputs(scm: Scm, sensitive: str, target: str) -> list[str]:
    """Noise not feeding the sensitive attribute, plus observed non-descendants of it."""
    descendants = scm.descendants(sensitive)
    banned = set(scm.noise_inputs(sensitive))
    noise = [n for n in scm.noise_names if n not in banned]
    observed = [v for v in scm.observed if v not in descendants and v not in (sensitive, target)]
    return [v for v in scm.names if v in noise or v in observed]


def build_cf_fair_predictor(scm: Scm, sensitive: str, target: str, loss: str = "accuracy") -> Predictor:
    """Bayes-optimal deterministic predictor of ``target`` from admissible inputs.

    Inputs are the noise variables (except the sensitive attribute's own)
    and the observed non-descendants of ``sensitive``. Such inputs are
    unchanged by any intervention on ``sensitive``, so the predictor is
    counterfactually fair by construction.
    """
    if loss != "accuracy":
        raise ScmError(f"unsupported loss {loss!r}; only 'accuracy' is implemented")
    if scm.spec(target).kind != OBSERVED or target == sensitive:
        raise ScmError("target must be an observed variable other than the sensitive attribute")
    if not scm.independent_noise:
        raise ScmError("fair predictor construction needs an independent-noise model")
    outputs = scm.domain(target)
    inputs = admissible_inputs(scm, sensitive, target)
    joint = joint_distribution(scm, [*inputs, target])
    population = joint.marginal([target]).array
    if not inputs:
        warnings.warn(
            f"no admissible inputs for {target}; returning the constant population argmax", stacklevel=2
        )
        return Predictor.constant(outputs[_argmax_low(population)], outputs)
    arr = joint.array.reshape(-1, len(outputs))
    rows = {}
    for idx, key in enumerate(itertools.product(*(scm.domain(v) for v in inputs))):
        row = arr[idx]
        best = _argmax_low(row) if row.sum() > 0 else _argmax_low(population)
        rows[key] = tuple(1.0 if k == best else 0.0 for k in range(len(outputs)))
    return Predictor(tuple(inputs), [scm.domain(v) for v in inputs], outputs, rows, DETERMINISTIC)


def predictor_accuracy(scm: Scm, pred: Predictor, target: str) -> float:
    """Exact P(Ŷ = target)."""
    pred.check_inputs(scm)
    scope = list(dict.fromkeys([*pred.inputs, target]))
    joint = joint_distribution(scm, scope)
    out = 0.0
    for cell, p in joint.support():
        dist = pred.distribution([cell[v] for v in pred.inputs])
        out += p * dist[pred.outputs.index(cell[target])] if cell[target] in pred.outputs else 0.0
    return out


@dataclass(frozen=True)
class ParityVerdict:
    holds: bool
    gap: float
    rates: Mapping[Any, tuple[float, ...]]
    worst: tuple | None

    def __bool__(self):
        return self.holds


def check_demographic_parity(
    scm: Scm,
    pred: Predictor,
    sensitive: str,
    selection: SelectionSpec | str | None = None,
    tol: float = 1e-9,
) -> ParityVerdict:
    """Largest |P(Ŷ=y | A=a[, S=1]) - P(Ŷ=y | A=a'[, S=1])|."""
    pred.check_inputs(scm)
    if isinstance(selection, str):
        selection = SelectionSpec(selection)
    scope = [sensitive]
    if selection is not None:
        selection.validate(scm)
        scope.append(selection.variable)
    scope = list(dict.fromkeys(scope + list(pred.inputs)))
    joint = joint_distribution(scm, scope)
    if selection is not None:
        for a in scm.domain(sensitive):
            if joint.prob({sensitive: a, selection.variable: 1}) <= 0:
                raise ZeroProbabilityError(
                    f"{sensitive}={format_value(a)} is never selected; P(S=1 | A=a) must be positive"
                )
        joint = joint.condition({selection.variable: 1})
    rates: dict[Any, np.ndarray] = {}
    for a in scm.domain(sensitive):
        pa = joint.prob({sensitive: a})
        if pa <= 0:
            continue
        vec = np.zeros(len(pred.outputs))
        for cell, p in joint.support():
            if cell[sensitive] == a:
                vec += p * pred.distribution([cell[v] for v in pred.inputs])
        rates[a] = vec / pa
    gap, worst = 0.0, None
    for a1, a2 in itertools.combinations(rates, 2):
        diff = np.abs(rates[a1] - rates[a2])
        k = int(diff.argmax())
        if worst is None or diff[k] > gap:
            gap, worst = float(diff[k]), (pred.outputs[k], a1, a2)
    return ParityVerdict(gap < tol, gap, {a: tuple(map(float, v)) for a, v in rates.items()}, worst)


def posterior_draw_predictor(
    true_scm: Scm,
    sensitive: str,
    a: Any,
    coordinate: str,
    selection: SelectionSpec | str | None = None,
) -> Predictor:
    """Stochastic predictor f(x, a') ~ P(coordinate(a) | X=x, A=a') under ``true_scm``.

    Inputs are the covariates (observed variables other than the sensitive
    attribute and the selection indicator) followed by the sensitive
    attribute. Zero-probability contexts are marked undefined.
    """
    if isinstance(selection, str):
        selection = SelectionSpec(selection)
    true_scm.spec(sensitive).index(a)
    if true_scm.spec(coordinate).kind != OBSERVED or coordinate == sensitive:
        raise ScmError("coordinate must be an observed covariate")
    skip = {sensitive} | ({selection.variable} if selection else set())
    covariates = [v for v in true_scm.observed if v not in skip]
    if coordinate not in covariates:
        raise ScmError(f"{coordinate} is not a covariate")
    label = f"cf={format_value(a)}"
    twin = twin_network(true_scm, [(label, {sensitive: a})])
    cf_name = world_name(coordinate, label)
    inputs = [*covariates, sensitive]
    joint = joint_distribution(twin, [*inputs, cf_name])
    outputs = true_scm.domain(coordinate)
    fallback = joint.marginal([cf_name]).array
    arr = joint.array.reshape(-1, len(outputs))
    rows, undefined = {}, set()
    for idx, key in enumerate(itertools.product(*(true_scm.domain(v) for v in inputs))):
        mass = arr[idx].sum()
        if mass > 0:
            rows[key] = tuple(arr[idx] / mass)
        else:
            rows[key] = tuple(fallback)
            undefined.add(key)
    return Predictor(tuple(inputs), [true_scm.domain(v) for v in inputs], outputs, rows, STOCHASTIC, frozenset(undefined))


# -- predictor exchange format -------------------------------------------------------------


def write_predictor(pred: Predictor) -> str:
    """CSV: input columns, then ``output`` (deterministic) or one ``p[value]`` column per output."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if pred.kind == DETERMINISTIC:
        writer.writerow([*pred.inputs, "output"])
        for key, vec in pred.rows.items():
            writer.writerow([*map(format_value, key), format_value(pred.outputs[int(np.argmax(vec))])])
    else:
        writer.writerow([*pred.inputs, *(f"p[{format_value(o)}]" for o in pred.outputs)])
        for key, vec in pred.rows.items():
            writer.writerow([*map(format_value, key), *(repr(p) for p in vec)])
    return buf.getvalue()


def read_predictor(text: str, scm: Scm, target: str) -> Predictor:
    """Parse :func:`write_predictor` output; domains come from ``scm`` and the output domain from ``target``."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ModelParseError("empty predictor file") from None
    outputs = scm.domain(target)
    if header and header[-1] == "output":
        inputs = header[:-1]
        kind = DETERMINISTIC
    else:
        inputs = [h for h in header if not h.startswith("p[")]
        kind = STOCHASTIC
        out_cols = [h[2:-1] for h in header[len(inputs):]]
        outputs = tuple(parse_value(c, outputs) for c in out_cols)
    domains = [scm.domain(v) for v in inputs]
    rows = {}
    for line in reader:
        if not line:
            continue
        if len(line) != len(header):
            raise ModelParseError(f"predictor row has {len(line)} fields, expected {len(header)}")
        key = tuple(parse_value(tok, dom) for tok, dom in zip(line, domains))
        rest = line[len(inputs):]
        if kind == DETERMINISTIC:
            value = parse_value(rest[0], outputs)
            rows[key] = tuple(1.0 if o == value else 0.0 for o in outputs)
        else:
            rows[key] = tuple(float(x) for x in rest)
    return Predictor(tuple(inputs), domains, tuple(outputs), rows, kind)
