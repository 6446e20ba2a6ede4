"""Finite discrete structural causal models with exact inference.

Every query is answered by enumerating noise assignments, solving the
structural equations in topological order and summing probabilities. The
models are small by design, so this is exact and fast enough.
"""

from __future__ import annotations

import itertools
import json
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Any

import numpy as np

from .errors import (
    ModelParseError,
    ModelSizeError,
    ModelValidationError,
    ScmError,
    ZeroProbabilityError,
)

Assignment = Mapping[str, Any]

OBSERVED = "observed"
NOISE = "noise"

#: noise assignments allowed before enumeration refuses to run
DEFAULT_MAX_ASSIGNMENTS = 2**24
NORMALIZATION_TOL = 1e-12


def format_value(value: Any) -> str:
    return "∅" if value is None else str(value)


def parse_value(token: str, domain: Sequence) -> Any:
    """Match a textual token against a domain by its printed form."""
    token = token.strip()
    for v in domain:
        if format_value(v) == token or (v is None and token in ("null", "None")):
            return v
    raise ScmError(f"value {token!r} not in domain ({', '.join(map(format_value, domain))})")


@dataclass(frozen=True)
class VariableSpec:
    name: str
    domain: tuple
    kind: str = OBSERVED

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))
        if not isinstance(self.name, str) or not self.name:
            raise ModelValidationError(f"variable name must be a non-empty string, got {self.name!r}")
        if self.kind not in (OBSERVED, NOISE):
            raise ModelValidationError(f"variable {self.name}: kind must be 'observed' or 'noise'")
        if not self.domain:
            raise ModelValidationError(f"variable {self.name}: empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise ModelValidationError(f"variable {self.name}: duplicate domain values")

    def index(self, value: Any) -> int:
        try:
            return self.domain.index(value)
        except ValueError:
            raise ScmError(
                f"value {format_value(value)} not in domain of {self.name} "
                f"({', '.join(map(format_value, self.domain))})"
            ) from None


def _freeze_table(table: Mapping) -> Mapping:
    return MappingProxyType({tuple(k): v for k, v in table.items()})


@dataclass(frozen=True, eq=False)
class Scm:
    """A finite SCM.

    ``parents[v]`` lists the inputs of observed variable ``v`` (observed
    parents and noise variables alike) and ``equations[v]`` maps each tuple
    of input values, in that order, to the value of ``v``. Noise is either
    independent (``noise``: one probability vector per noise variable) or
    a single ``joint_noise`` table keyed by tuples over :attr:`noise_names`.
    """

    variables: tuple[VariableSpec, ...]
    parents: Mapping[str, tuple[str, ...]]
    equations: Mapping[str, Mapping[tuple, Any]]
    noise: Mapping[str, tuple[float, ...]] | None = None
    joint_noise: Mapping[tuple, float] | None = None
    max_assignments: int = DEFAULT_MAX_ASSIGNMENTS
    _order: tuple[str, ...] = field(init=False, repr=False)
    _specs: Mapping[str, VariableSpec] = field(init=False, repr=False)

    def __post_init__(self):
        variables = tuple(self.variables)
        object.__setattr__(self, "variables", variables)
        specs: dict[str, VariableSpec] = {}
        for spec in variables:
            if spec.name in specs:
                raise ModelValidationError(f"duplicate variable {spec.name}")
            specs[spec.name] = spec
        object.__setattr__(self, "_specs", MappingProxyType(specs))

        parents = {name: tuple(ps) for name, ps in self.parents.items()}
        for name in parents:
            if name not in specs:
                raise ModelValidationError(f"parents given for unknown variable {name}")
            if specs[name].kind == NOISE and parents[name]:
                raise ModelValidationError(f"noise variable {name} cannot have parents")
        for spec in variables:
            if spec.kind == OBSERVED:
                parents.setdefault(spec.name, ())
        parents = {k: v for k, v in parents.items() if specs[k].kind == OBSERVED}
        object.__setattr__(self, "parents", MappingProxyType(parents))

        self._validate_equations()
        object.__setattr__(self, "_order", self._topological_order())
        self._validate_noise()

    # -- validation ---------------------------------------------------------

    def _validate_equations(self):
        equations = {}
        for name, inputs in self.parents.items():
            for p in inputs:
                if p not in self._specs:
                    raise ModelValidationError(f"{name}: unknown parent {p}")
                if p == name:
                    raise ModelValidationError(f"{name} lists itself as a parent")
            if len(set(inputs)) != len(inputs):
                raise ModelValidationError(f"{name}: duplicate parents")
            if name not in self.equations:
                raise ModelValidationError(f"no equation for observed variable {name}")
            table = _freeze_table(self.equations[name])
            domains = [self._specs[p].domain for p in inputs]
            expected = set(itertools.product(*domains))
            missing = expected - set(table)
            if missing:
                row = min(missing, key=repr)
                raise ModelValidationError(
                    f"equation for {name} is not total: no row for "
                    f"({', '.join(f'{p}={format_value(v)}' for p, v in zip(inputs, row))})"
                )
            extra = set(table) - expected
            if extra:
                raise ModelValidationError(f"equation for {name} has rows outside its parent domains: {min(extra, key=repr)}")
            for row, value in table.items():
                if value not in self._specs[name].domain:
                    raise ModelValidationError(
                        f"equation for {name} maps {row} to {format_value(value)}, outside its domain"
                    )
            equations[name] = table
        for name in self.equations:
            if name not in self.parents:
                raise ModelValidationError(f"equation given for {name}, which is not an observed variable")
        object.__setattr__(self, "equations", MappingProxyType(equations))

    def _topological_order(self) -> tuple[str, ...]:
        observed = [s.name for s in self.variables if s.kind == OBSERVED]
        state: dict[str, int] = {}
        order: list[str] = []
        stack_path: list[str] = []

        def visit(v: str):
            state[v] = 1
            stack_path.append(v)
            for p in self.parents[v]:
                if self._specs[p].kind != OBSERVED:
                    continue
                if state.get(p) == 1:
                    cycle = stack_path[stack_path.index(p):]
                    raise ModelValidationError(f"cycle among {', '.join(sorted(cycle))}")
                if p not in state:
                    visit(p)
            stack_path.pop()
            state[v] = 2
            order.append(v)

        for v in observed:
            if v not in state:
                visit(v)
        return tuple(order)

    def _validate_noise(self):
        names = self.noise_names
        if self.joint_noise is not None and self.noise is not None:
            raise ModelValidationError("give either independent noise vectors or a joint noise table, not both")
        if self.joint_noise is None:
            given = dict(self.noise or {})
            vectors = {}
            for name in names:
                if name not in given:
                    raise ModelValidationError(f"no distribution for noise variable {name}")
                vec = tuple(float(p) for p in given.pop(name))
                dom = self._specs[name].domain
                if len(vec) != len(dom):
                    raise ModelValidationError(
                        f"noise {name}: {len(vec)} probabilities for a domain of size {len(dom)}"
                    )
                if any(p < 0 for p in vec):
                    raise ModelValidationError(f"noise {name}: negative probability")
                if abs(sum(vec) - 1.0) > NORMALIZATION_TOL:
                    raise ModelValidationError(f"noise {name}: probabilities sum to {sum(vec):.12g}, not 1")
                vectors[name] = vec
            if given:
                raise ModelValidationError(f"distribution given for unknown noise variable {min(given)}")
            object.__setattr__(self, "noise", MappingProxyType(vectors))
        else:
            table = {}
            domains = [self._specs[n].domain for n in names]
            for key, p in self.joint_noise.items():
                key = tuple(key)
                if len(key) != len(names) or any(v not in d for v, d in zip(key, domains)):
                    raise ModelValidationError(f"joint noise row {key} does not match noise variables {names}")
                if p < 0:
                    raise ModelValidationError(f"joint noise row {key}: negative probability")
                table[key] = table.get(key, 0.0) + float(p)
            total = sum(table.values())
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise ModelValidationError(f"joint noise table sums to {total:.12g}, not 1")
            object.__setattr__(self, "joint_noise", MappingProxyType(table))

    # -- accessors ------------------------------------------------------------

    @property
    def independent_noise(self) -> bool:
        return self.joint_noise is None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.variables)

    @property
    def observed(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.variables if s.kind == OBSERVED)

    @property
    def noise_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.variables if s.kind == NOISE)

    @property
    def order(self) -> tuple[str, ...]:
        """Observed variables in topological order."""
        return self._order

    def spec(self, name: str) -> VariableSpec:
        try:
            return self._specs[name]
        except KeyError:
            raise ScmError(f"unknown variable {name}") from None

    def domain(self, name: str) -> tuple:
        return self.spec(name).domain

    def is_noise(self, name: str) -> bool:
        return self.spec(name).kind == NOISE

    def observed_parents(self, name: str) -> tuple[str, ...]:
        return tuple(p for p in self.parents.get(name, ()) if not self.is_noise(p))

    def noise_inputs(self, name: str) -> tuple[str, ...]:
        return tuple(p for p in self.parents.get(name, ()) if self.is_noise(p))

    def children(self, name: str) -> tuple[str, ...]:
        return tuple(v for v in self.order if name in self.parents[v])

    def descendants(self, name: str) -> set[str]:
        """Observed variables reachable from ``name`` (excluding itself)."""
        out: set[str] = set()
        frontier = [name]
        while frontier:
            v = frontier.pop()
            for c in self.children(v):
                if c not in out:
                    out.add(c)
                    frontier.append(c)
        return out

    def noise_assignment_count(self) -> int:
        if self.joint_noise is not None:
            return len(self.joint_noise)
        count = 1
        for n in self.noise_names:
            count *= len(self.domain(n))
        return count

    def check_assignment(self, assignment: Assignment, *, observed_only: bool = False):
        for name, value in assignment.items():
            spec = self.spec(name)
            if observed_only and spec.kind == NOISE:
                raise ScmError(f"{name} is a noise variable; only observed variables are allowed here")
            spec.index(value)

    # -- evaluation -------------------------------------------------------------

    def noise_assignments(self) -> list[tuple[tuple, float]]:
        """Positive-probability noise tuples (over :attr:`noise_names`) with their probabilities."""
        count = self.noise_assignment_count()
        if count > self.max_assignments:
            raise ModelSizeError(
                f"model has {count} noise assignments, above the enumeration cap of {self.max_assignments}"
            )
        if self.joint_noise is not None:
            return [(k, p) for k, p in self.joint_noise.items() if p > 0]
        names = self.noise_names
        vectors = [[(v, p) for v, p in zip(self.domain(n), self.noise[n]) if p > 0] for n in names]
        out = []
        for combo in itertools.product(*vectors):
            prob = 1.0
            for _, p in combo:
                prob *= p
            out.append((tuple(v for v, _ in combo), prob))
        return out

    def solve(self, noise_values: Assignment) -> dict[str, Any]:
        """Values of every variable given a full noise assignment."""
        world = dict(noise_values)
        for v in self._order:
            key = tuple(world[p] for p in self.parents[v])
            world[v] = self.equations[v][key]
        return world

    def worlds(self) -> Iterator[tuple[dict[str, Any], float]]:
        names = self.noise_names
        for values, prob in self.noise_assignments():
            yield self.solve(dict(zip(names, values))), prob


class JointTable:
    """Exact joint distribution over a named, ordered scope."""

    __slots__ = ("array", "domains", "scope")

    def __init__(self, scope: Sequence[str], domains: Sequence[Sequence], array: np.ndarray):
        self.scope = tuple(scope)
        self.domains = tuple(tuple(d) for d in domains)
        arr = np.array(array, dtype=float).reshape([len(d) for d in self.domains])
        if (arr < 0).any():
            raise ScmError("joint table with negative entries")
        total = arr.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ScmError(f"joint table sums to {total:.15g}")
        arr.flags.writeable = False
        self.array = arr

    @classmethod
    def from_rows(cls, scope, domains, rows: Iterable[tuple[tuple, float]]) -> JointTable:
        domains = [tuple(d) for d in domains]
        index = [{v: i for i, v in enumerate(d)} for d in domains]
        arr = np.zeros([len(d) for d in domains])
        for values, p in rows:
            arr[tuple(ix[v] for ix, v in zip(index, values))] += p
        return cls(scope, domains, arr)

    def __repr__(self):
        cells = ", ".join(
            f"({', '.join(map(format_value, k))}): {p:.6g}" for k, p in self.probabilities.items() if p > 0
        )
        return f"JointTable[{', '.join(self.scope)}]{{{cells}}}"

    def axis(self, name: str) -> int:
        try:
            return self.scope.index(name)
        except ValueError:
            raise ScmError(f"{name} is not in scope {self.scope}") from None

    def domain(self, name: str) -> tuple:
        return self.domains[self.axis(name)]

    @property
    def probabilities(self) -> dict[tuple, float]:
        return {
            values: float(self.array[idx])
            for idx, values in zip(
                itertools.product(*(range(len(d)) for d in self.domains)),
                itertools.product(*self.domains),
            )
        }

    def items(self) -> Iterator[tuple[dict[str, Any], float]]:
        for values, p in self.probabilities.items():
            yield dict(zip(self.scope, values)), p

    def support(self) -> list[tuple[dict[str, Any], float]]:
        return [(a, p) for a, p in self.items() if p > 0]

    def marginal(self, names: Sequence[str]) -> JointTable:
        names = tuple(names)
        axes = [self.axis(n) for n in names]
        if len(set(axes)) != len(axes):
            raise ScmError("duplicate variable in marginal scope")
        drop = tuple(i for i in range(len(self.scope)) if i not in axes)
        arr = self.array.sum(axis=drop) if drop else self.array
        # remaining axes come out in scope order; permute to requested order
        kept = [i for i in range(len(self.scope)) if i in axes]
        arr = np.transpose(arr, [kept.index(a) for a in axes]) if axes else arr
        return JointTable(names, [self.domains[a] for a in axes], arr)

    def _mask_index(self, evidence: Assignment) -> tuple:
        index: list[Any] = [slice(None)] * len(self.scope)
        for name, value in evidence.items():
            ax = self.axis(name)
            try:
                index[ax] = self.domains[ax].index(value)
            except ValueError:
                raise ScmError(f"value {format_value(value)} not in domain of {name}") from None
        return tuple(index)

    def prob(self, assignment: Assignment | None = None, **kwargs) -> float:
        """Probability of a (partial) assignment."""
        evidence = dict(assignment or {}, **kwargs)
        return float(self.array[self._mask_index(evidence)].sum())

    def condition(self, evidence: Assignment) -> JointTable:
        """Restrict to ``evidence`` and renormalize; conditioned variables stay in scope."""
        index = self._mask_index(evidence)
        mass = float(self.array[index].sum())
        if mass <= 0:
            raise ZeroProbabilityError(
                "evidence has probability zero: "
                + ", ".join(f"{k}={format_value(v)}" for k, v in evidence.items())
            )
        arr = np.zeros_like(self.array)
        arr[index] = self.array[index] / mass
        return JointTable(self.scope, self.domains, arr)

    def allclose(self, other: JointTable, atol: float = NORMALIZATION_TOL) -> bool:
        if set(self.scope) != set(other.scope):
            return False
        other = other.marginal(self.scope)
        if other.domains != self.domains:
            return False
        return bool(np.allclose(self.array, other.array, rtol=0, atol=atol))


# -- construction helpers -------------------------------------------------------


def make_scm(
    noise: Mapping[str, tuple[Sequence, Sequence[float]]],
    observed: Mapping[str, tuple[Sequence, Sequence[str], Callable[..., Any] | Mapping]],
    joint_noise: Mapping[tuple, float] | None = None,
    max_assignments: int = DEFAULT_MAX_ASSIGNMENTS,
) -> Scm:
    """Build an Scm from Python callables.

    ``noise`` maps name -> (domain, probabilities); pass ``None`` as the
    probabilities together with ``joint_noise`` for dependent noise.
    ``observed`` maps name -> (domain, inputs, f) where ``f`` is called with
    the input values positionally or is already a lookup table. Insertion
    order of ``observed`` is kept as declaration order.
    """
    specs = [VariableSpec(n, d, NOISE) for n, (d, _) in noise.items()]
    specs += [VariableSpec(n, d, OBSERVED) for n, (d, _, _) in observed.items()]
    domain_of = {s.name: s.domain for s in specs}
    parents, equations = {}, {}
    for name, (_, inputs, f) in observed.items():
        inputs = tuple(inputs)
        parents[name] = inputs
        if isinstance(f, Mapping):
            equations[name] = dict(f)
        else:
            try:
                rows = itertools.product(*(domain_of[p] for p in inputs))
                equations[name] = {row: f(*row) for row in rows}
            except KeyError as exc:
                raise ModelValidationError(f"{name}: unknown parent {exc.args[0]}") from None
    vectors = None if joint_noise is not None else {n: tuple(p) for n, (_, p) in noise.items()}
    return Scm(tuple(specs), parents, equations, vectors, joint_noise, max_assignments)


def _replace(scm: Scm, **changes) -> Scm:
    fields = {
        "variables": scm.variables,
        "parents": dict(scm.parents),
        "equations": dict(scm.equations),
        "noise": None if scm.joint_noise is not None else dict(scm.noise),
        "joint_noise": None if scm.joint_noise is None else dict(scm.joint_noise),
        "max_assignments": scm.max_assignments,
    }
    fields.update(changes)
    return Scm(**fields)


# -- inference ------------------------------------------------------------------------


def joint_distribution(scm: Scm, scope: Sequence[str]) -> JointTable:
    """Exact marginal over ``scope`` (observed and/or noise variables)."""
    scope = tuple(scope)
    for name in scope:
        scm.spec(name)
    rows = ((tuple(w[v] for v in scope), p) for w, p in scm.worlds())
    return JointTable.from_rows(scope, [scm.domain(v) for v in scope], rows)


def intervene(scm: Scm, do: Assignment) -> Scm:
    """Replace the equation of each targeted variable by a constant."""
    scm.check_assignment(do, observed_only=True)
    if not do:
        return scm
    parents = dict(scm.parents)
    equations = dict(scm.equations)
    for name, value in do.items():
        parents[name] = ()
        equations[name] = {(): value}
    return _replace(scm, parents=parents, equations=equations)


def _matches(world: Assignment, evidence: Assignment) -> bool:
    return all(world[k] == v for k, v in evidence.items())


def abduct(scm: Scm, evidence: Assignment) -> JointTable:
    """Posterior over the noise variables given observed evidence."""
    scm.check_assignment(evidence)
    names = scm.noise_names
    rows = []
    mass = 0.0
    for values, p in scm.noise_assignments():
        world = scm.solve(dict(zip(names, values)))
        if _matches(world, evidence):
            rows.append((values, p))
            mass += p
    if mass <= 0:
        raise ZeroProbabilityError(
            "evidence has probability zero: " + ", ".join(f"{k}={format_value(v)}" for k, v in evidence.items())
        )
    return JointTable.from_rows(names, [scm.domain(n) for n in names], ((v, p / mass) for v, p in rows))


def counterfactual_distribution(
    scm: Scm, evidence: Assignment, do: Assignment, targets: Sequence[str]
) -> JointTable:
    """P(targets(do) | evidence) by abduction, action and prediction."""
    targets = tuple(targets)
    for t in targets:
        scm.spec(t)
    posterior = abduct(scm, evidence)
    acted = intervene(scm, do)
    rows = []
    for noise_values, p in posterior.support():
        world = acted.solve(noise_values)
        rows.append((tuple(world[t] for t in targets), p))
    return JointTable.from_rows(targets, [scm.domain(t) for t in targets], rows)


def world_name(name: str, label: str) -> str:
    """Name of the copy of ``name`` living in the world called ``label``."""
    return f"{name}({label})"


def twin_network(scm: Scm, worlds: Sequence[tuple[str, Assignment]]) -> Scm:
    """Factual model plus one relabeled, intervened copy per world, all sharing noise."""
    labels = [label for label, _ in worlds]
    if len(set(labels)) != len(labels):
        raise ScmError("duplicate world labels")
    variables = list(scm.variables)
    parents = dict(scm.parents)
    equations = dict(scm.equations)
    taken = set(scm.names)
    for label, do in worlds:
        scm.check_assignment(do, observed_only=True)
        for v in scm.observed:
            copy = world_name(v, label)
            if copy in taken:
                raise ScmError(f"twin variable name {copy} clashes with an existing variable")
            taken.add(copy)
            variables.append(VariableSpec(copy, scm.domain(v), OBSERVED))
            if v in do:
                parents[copy] = ()
                equations[copy] = {(): do[v]}
            else:
                parents[copy] = tuple(p if scm.is_noise(p) else world_name(p, label) for p in scm.parents[v])
                equations[copy] = scm.equations[v]
    return _replace(scm, variables=tuple(variables), parents=parents, equations=equations)


def path_specific_counterfactual(
    scm: Scm,
    sensitive: str,
    a: Any,
    a_prime: Any,
    edge_labels: Mapping[Any, str],
    target: str,
) -> JointTable:
    """Distribution of the nested counterfactual where ``sensitive`` is ``a``
    along edges labeled ``"indirect"`` and ``a_prime`` along edges labeled
    ``"direct"``.

    ``edge_labels`` is keyed by ``(sensitive, child)`` pairs or ``"A->child"``
    strings and must label every outgoing edge of ``sensitive``.
    """
    spec = scm.spec(sensitive)
    spec.index(a)
    spec.index(a_prime)
    scm.spec(target)
    if scm.observed_parents(sensitive):
        raise ScmError(f"{sensitive} has observed parents; nested counterfactuals need a root")
    children = set(scm.children(sensitive))
    labels: dict[str, str] = {}
    for edge, label in edge_labels.items():
        if isinstance(edge, str):
            parent, _, child = edge.partition("->")
            parent, child = parent.strip(), child.strip()
        else:
            parent, child = edge
        if parent != sensitive or child not in children:
            raise ScmError(f"edge {parent}->{child} does not exist in the model")
        if label not in ("direct", "indirect"):
            raise ScmError(f"edge {parent}->{child}: label must be 'direct' or 'indirect', got {label!r}")
        labels[child] = label
    unlabeled = children - set(labels)
    if unlabeled:
        raise ScmError(f"edges {', '.join(f'{sensitive}->{c}' for c in sorted(unlabeled))} are not labeled")

    variables = list(scm.variables)
    parents = dict(scm.parents)
    equations = dict(scm.equations)
    for child, label in labels.items():
        copy = f"{sensitive}->{child}"
        variables.append(VariableSpec(copy, spec.domain, OBSERVED))
        parents[copy] = ()
        equations[copy] = {(): a if label == "indirect" else a_prime}
        parents[child] = tuple(copy if p == sensitive else p for p in scm.parents[child])
    split = _replace(scm, variables=tuple(variables), parents=parents, equations=equations)
    return joint_distribution(split, [target])


def sample(scm: Scm, n: int, seed: int) -> list[dict[str, Any]]:
    """``n`` i.i.d. ancestral samples of the observed variables."""
    if n < 0:
        raise ScmError("sample size must be non-negative")
    if n == 0:
        return []
    rng = np.random.default_rng(seed)
    names = scm.noise_names
    if scm.joint_noise is not None:
        keys = list(scm.joint_noise)
        probs = np.array([scm.joint_noise[k] for k in keys])
        draws = rng.choice(len(keys), size=n, p=probs / probs.sum())
        noise_rows = [keys[i] for i in draws]
    else:
        columns = []
        for name in names:
            probs = np.array(scm.noise[name])
            idx = rng.choice(len(probs), size=n, p=probs / probs.sum())
            dom = scm.domain(name)
            columns.append([dom[i] for i in idx])
        noise_rows = list(zip(*columns)) if columns else [()] * n
    observed = scm.observed
    cache: dict[tuple, dict[str, Any]] = {}
    out = []
    for row in noise_rows:
        if row not in cache:
            world = scm.solve(dict(zip(names, row)))
            cache[row] = {v: world[v] for v in observed}
        out.append(dict(cache[row]))
    return out


# -- model files ----------------------------------------------------------------------


def _value_from_json(value):
    if isinstance(value, list):
        return tuple(_value_from_json(v) for v in value)
    return value


def _value_to_json(value):
    if isinstance(value, tuple):
        return [_value_to_json(v) for v in value]
    return value


def parse_model(text: str) -> Scm:
    """Parse a JSON model file.

    Format::

        {"variables": [{"name": "U_X", "domain": [0, 1], "kind": "noise"},
                       {"name": "X", "domain": [0, 1]}],
         "parents": {"X": ["U_X"]},
         "equations": {"X": [[0, 0], [1, 1]]},
         "noise": {"U_X": [0.5, 0.5]}}

    Each equation row lists the input values in ``parents`` order followed
    by the output. ``noise`` may instead be
    ``{"joint": {"scope": [...], "rows": [[u1, u2, ..., p], ...]}}``.
    A JSON ``null`` domain value stands for the absent value ∅.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"malformed model file: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelParseError("model file must contain a JSON object")
    for key in ("variables", "equations", "noise"):
        if key not in doc:
            raise ModelParseError(f"model file is missing '{key}'")
    try:
        specs = []
        for entry in doc["variables"]:
            if not isinstance(entry, dict) or "name" not in entry or "domain" not in entry:
                raise ModelParseError(f"variable entry needs 'name' and 'domain': {entry!r}")
            specs.append(
                VariableSpec(entry["name"], [_value_from_json(v) for v in entry["domain"]], entry.get("kind", OBSERVED))
            )
        parents = {k: tuple(v) for k, v in doc.get("parents", {}).items()}
        equations = {}
        for name, rows in doc["equations"].items():
            if not isinstance(rows, list):
                raise ModelParseError(f"equation for {name} must be a list of rows")
            n_inputs = len(parents.get(name, ()))
            table = {}
            for row in rows:
                if not isinstance(row, list) or len(row) != n_inputs + 1:
                    raise ModelParseError(
                        f"equation row for {name} must have {n_inputs} inputs and one output: {row!r}"
                    )
                key = tuple(_value_from_json(v) for v in row[:-1])
                if key in table:
                    raise ModelValidationError(f"equation for {name} has duplicate row {row[:-1]!r}")
                table[key] = _value_from_json(row[-1])
            equations[name] = table
        noise_doc = doc["noise"]
        noise_names = [s.name for s in specs if s.kind == NOISE]
        if isinstance(noise_doc, dict) and "joint" in noise_doc:
            joint = noise_doc["joint"]
            scope = list(joint["scope"])
            if sorted(scope) != sorted(noise_names):
                raise ModelValidationError(f"joint noise scope {scope} must list exactly the noise variables")
            perm = [scope.index(n) for n in noise_names]
            table = {}
            for row in joint["rows"]:
                if len(row) != len(scope) + 1:
                    raise ModelParseError(f"joint noise row must have {len(scope)} values and a probability: {row!r}")
                values = [_value_from_json(v) for v in row[:-1]]
                key = tuple(values[i] for i in perm)
                table[key] = table.get(key, 0.0) + float(row[-1])
            return Scm(tuple(specs), parents, equations, None, table)
        if not isinstance(noise_doc, dict):
            raise ModelParseError("'noise' must be an object")
        vectors = {k: tuple(float(p) for p in v) for k, v in noise_doc.items()}
        return Scm(tuple(specs), parents, equations, vectors, None)
    except (TypeError, KeyError) as exc:
        raise ModelParseError(f"malformed model file: {exc!r}") from None


def model_to_dict(scm: Scm) -> dict:
    doc: dict[str, Any] = {
        "variables": [
            {"name": s.name, "domain": [_value_to_json(v) for v in s.domain], "kind": s.kind} for s in scm.variables
        ],
        "parents": {v: list(scm.parents[v]) for v in scm.observed},
        "equations": {
            v: [[_value_to_json(x) for x in row] + [_value_to_json(out)] for row, out in scm.equations[v].items()]
            for v in scm.observed
        },
    }
    if scm.joint_noise is None:
        doc["noise"] = {n: list(scm.noise[n]) for n in scm.noise_names}
    else:
        doc["noise"] = {
            "joint": {
                "scope": list(scm.noise_names),
                "rows": [[_value_to_json(x) for x in k] + [p] for k, p in scm.joint_noise.items()],
            }
        }
    return doc


def dump_model(scm: Scm) -> str:
    return json.dumps(model_to_dict(scm), indent=2)


def bundled_path(name: str) -> Path:
    """Path of a fixture shipped in ``scmaudit/data``."""
    return Path(str(resources.files("scmaudit").joinpath("data").joinpath(name)))


def load_model(ref: str | Path) -> Scm:
    """Load a model from a path, or by bundled name such as ``xor_sel``."""
    path = Path(ref)
    if not path.exists():
        bundled = bundled_path(f"{ref}.json")
        if not bundled.exists():
            raise ModelParseError(f"no model file {ref}")
        path = bundled
    return parse_model(path.read_text(encoding="utf-8"))
