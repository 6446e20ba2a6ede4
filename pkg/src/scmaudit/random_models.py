"""Random small SCMs for the property and verification suites."""

from __future__ import annotations

import itertools

import numpy as np

from .scm import NOISE, OBSERVED, Scm, VariableSpec

BINARY = (0, 1)


def _probs(rng: np.random.Generator, k: int, alpha: float = 1.0) -> tuple[float, ...]:
    p = rng.dirichlet(np.full(k, alpha))
    p = p / p.sum()
    return tuple(float(x) for x in p)


class _Builder:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.variables: list[VariableSpec] = []
        self.parents: dict[str, tuple[str, ...]] = {}
        self.equations: dict[str, dict] = {}
        self.noise: dict[str, tuple[float, ...]] = {}
        self.domains: dict[str, tuple] = {}

    def add_noise(self, name: str, size: int, probs=None):
        domain = tuple(range(size))
        self.variables.append(VariableSpec(name, domain, NOISE))
        self.noise[name] = tuple(probs) if probs is not None else _probs(self.rng, size)
        self.domains[name] = domain

    def add_observed(self, name: str, inputs, table=None, domain=BINARY):
        inputs = tuple(inputs)
        self.variables.append(VariableSpec(name, domain, OBSERVED))
        self.parents[name] = inputs
        self.domains[name] = domain
        rows = itertools.product(*(self.domains[p] for p in inputs))
        if table is None:
            table = {row: domain[int(self.rng.integers(len(domain)))] for row in rows}
        elif callable(table):
            table = {row: table(*row) for row in rows}
        self.equations[name] = table

    def build(self) -> Scm:
        return Scm(tuple(self.variables), self.parents, self.equations, self.noise)


def _ancestral_builder(rng: np.random.Generator, n_covariates: int) -> tuple[_Builder, list[str]]:
    """Binary root ``A`` with private noise plus ``n_covariates`` binary covariates."""
    b = _Builder(rng)
    p_a = float(rng.uniform(0.2, 0.8))
    b.add_noise("U_A", 2, (1 - p_a, p_a))
    b.add_observed("A", ["U_A"], lambda u: u)
    names = [f"X{j + 1}" for j in range(n_covariates)]
    shared = n_covariates >= 2 and rng.random() < 0.25
    if shared:
        b.add_noise("U_shared", 2)
    for j, x in enumerate(names):
        b.add_noise(f"U_{x}", int(rng.integers(2, 4)))
        inputs = []
        if rng.random() < 0.75:
            inputs.append("A")
        inputs += [p for p in names[:j] if rng.random() < 0.4]
        inputs.append(f"U_{x}")
        if shared and j < 2:
            inputs.append("U_shared")
        b.add_observed(x, inputs)
    return b, names


def random_ancestral_scm(rng: np.random.Generator, max_covariates: int = 3) -> Scm:
    b, _ = _ancestral_builder(rng, int(rng.integers(1, max_covariates + 1)))
    return b.build()


SELECTION_MODES = ("full", "full", "full", "coin", "always", "sensitive_only", "covariate_only")


def random_selection_scm(rng: np.random.Generator, max_covariates: int = 3) -> Scm:
    """Ancestral model plus a childless binary selection indicator ``S`` with private noise ``U_S``.

    Retries until every sensitive value is selected with positive probability.
    """
    from .scm import joint_distribution

    while True:
        b, names = _ancestral_builder(rng, int(rng.integers(1, max_covariates + 1)))
        mode = SELECTION_MODES[int(rng.integers(len(SELECTION_MODES)))]
        b.add_noise("U_S", 2)
        if mode == "always":
            b.add_observed("S", [], {(): 1})
        elif mode == "coin":
            b.add_observed("S", ["U_S"], lambda u: u)
        elif mode == "sensitive_only":
            b.add_observed("S", ["A", "U_S"])
        else:
            chosen = [x for x in names if rng.random() < 0.6] or [names[int(rng.integers(len(names)))]]
            inputs = (["A"] if mode == "full" and rng.random() < 0.7 else []) + chosen + ["U_S"]
            b.add_observed("S", inputs)
        scm = b.build()
        joint = joint_distribution(scm, ["A", "S"])
        if all(joint.prob({"A": a, "S": 1}) > 0 for a in BINARY):
            return scm


def random_markov_scm(rng: np.random.Generator, max_observed: int = 5) -> Scm:
    """Random DAG over binary V1..Vn; private noise per variable and sometimes one shared noise."""
    n = int(rng.integers(2, max_observed + 1))
    b = _Builder(rng)
    names = [f"V{i + 1}" for i in range(n)]
    shared_targets: set[str] = set()
    if n >= 2 and rng.random() < 0.3:
        b.add_noise("U_shared", 2)
        shared_targets = set(rng.choice(names, size=2, replace=False).tolist())
    for i, v in enumerate(names):
        b.add_noise(f"U_{v}", int(rng.integers(2, 4)))
        inputs = [p for p in names[:i] if rng.random() < 0.45] + [f"U_{v}"]
        if v in shared_targets:
            inputs.append("U_shared")
        b.add_observed(v, inputs)
    return b.build()


def random_generic_scm(rng: np.random.Generator, max_observed: int = 4, margin: float = 0.02) -> Scm:
    """Random binary model with continuous, independently drawn conditional tables.

    Each variable's noise indexes a response function from parent
    configurations to {0, 1}; with P(U=f) = prod theta_pa^f(pa) (1-theta_pa)^(1-f(pa))
    this gives P(V=1 | pa) = theta_pa. Tables are kept inside (margin, 1-margin)
    and every parent shifts every entry by at least ``margin``, so such
    models are faithful except on a measure-zero parameter set.
    """
    n = int(rng.integers(2, max_observed + 1))
    names = [f"V{i + 1}" for i in range(n)]
    b = _Builder(rng)
    for i, v in enumerate(names):
        obs = [p for p in names[:i] if rng.random() < 0.5]
        configs = list(itertools.product(BINARY, repeat=len(obs)))
        while True:
            theta = dict(zip(configs, rng.uniform(margin, 1 - margin, size=len(configs))))
            if all(
                abs(theta[pa] - theta[pa[:k] + (1 - pa[k],) + pa[k + 1:]]) >= margin
                for k in range(len(obs))
                for pa in configs
            ):
                break
        functions = list(itertools.product(BINARY, repeat=len(configs)))
        probs = [
            float(np.prod([theta[pa] if bit else 1 - theta[pa] for pa, bit in zip(configs, f)]))
            for f in functions
        ]
        b.add_noise(f"U_{v}", len(functions), np.asarray(probs) / sum(probs))
        index = {pa: j for j, pa in enumerate(configs)}
        b.add_observed(v, [*obs, f"U_{v}"], lambda *row, _i=index, _f=functions: _f[row[-1]][_i[tuple(row[:-1])]])
    return b.build()
