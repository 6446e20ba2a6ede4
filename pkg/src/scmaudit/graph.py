"""DAG reasoning: d-separation, ancestral closure and conditional independences."""

from __future__ import annotations

import itertools
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import ModelParseError, ScmError
from .scm import JointTable, Scm, joint_distribution

DEFAULT_CI_TOL = 1e-9


@dataclass(frozen=True)
class Dag:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self):
        nodes = tuple(dict.fromkeys(self.nodes))
        edges = tuple(dict.fromkeys((str(p), str(c)) for p, c in self.edges))
        known = set(nodes)
        for p, c in edges:
            if p not in known or c not in known:
                raise ScmError(f"edge {p}->{c} references an unknown node")
            if p == c:
                raise ScmError(f"self-loop on {p}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        self._check_acyclic()

    def _check_acyclic(self):
        indegree = {v: 0 for v in self.nodes}
        for _, c in self.edges:
            indegree[c] += 1
        queue = deque(v for v, d in indegree.items() if d == 0)
        seen = 0
        while queue:
            v = queue.popleft()
            seen += 1
            for c in self.children(v):
                indegree[c] -= 1
                if indegree[c] == 0:
                    queue.append(c)
        if seen != len(self.nodes):
            stuck = sorted(v for v, d in indegree.items() if d > 0)
            raise ScmError(f"graph has a cycle through {', '.join(stuck)}")

    def parents(self, v: str) -> list[str]:
        return [p for p, c in self.edges if c == v]

    def children(self, v: str) -> list[str]:
        return [c for p, c in self.edges if p == v]

    def ancestors(self, vs: Iterable[str]) -> set[str]:
        """``vs`` together with all their ancestors."""
        out = set(vs)
        frontier = list(out)
        while frontier:
            v = frontier.pop()
            for p in self.parents(v):
                if p not in out:
                    out.add(p)
                    frontier.append(p)
        return out

    def without_edge(self, parent: str, child: str) -> Dag:
        return Dag(self.nodes, tuple(e for e in self.edges if e != (parent, child)))


def parse_graph_text(text: str) -> tuple[Dag, list[frozenset[str]]]:
    """Edge list with optional latent confounders.

    One ``parent child`` pair per line; ``a <-> b`` declares a latent
    confounder; a lone name declares an isolated node; ``#`` starts a comment.
    """
    nodes: list[str] = []
    edges: list[tuple[str, str]] = []
    latent: list[frozenset[str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace("<->", " <-> ").split()
        if len(parts) == 1:
            nodes.append(parts[0])
        elif len(parts) == 2 and "<->" not in parts:
            nodes.extend(parts)
            edges.append((parts[0], parts[1]))
        elif len(parts) == 3 and parts[1] == "<->":
            nodes.extend((parts[0], parts[2]))
            latent.append(frozenset((parts[0], parts[2])))
        else:
            raise ModelParseError(f"line {lineno}: expected 'parent child' or 'a <-> b', got {raw!r}")
    return Dag(tuple(nodes), tuple(edges)), latent


def parse_edge_list(text: str) -> Dag:
    return parse_graph_text(text)[0]


def dag_from_scm(scm: Scm, include_noise: bool = True) -> Dag:
    nodes = scm.names if include_noise else scm.observed
    edges = [
        (p, v)
        for v in scm.observed
        for p in scm.parents[v]
        if include_noise or not scm.is_noise(p)
    ]
    return Dag(tuple(nodes), tuple(edges))


def latent_pairs(scm: Scm) -> set[frozenset[str]]:
    """Pairs of observed variables that share a noise input."""
    pairs = set()
    for n in scm.noise_names:
        children = [v for v in scm.observed if n in scm.parents[v]]
        for a, b in itertools.combinations(children, 2):
            pairs.add(frozenset((a, b)))
    return pairs


def _check_sets(g: Dag, *sets: set[str]):
    known = set(g.nodes)
    for s in sets:
        unknown = set(s) - known
        if unknown:
            raise ScmError(f"unknown node {min(unknown)}")
    for s, t in itertools.combinations(sets, 2):
        if set(s) & set(t):
            raise ScmError(f"sets overlap on {min(set(s) & set(t))}")


def d_separated(g: Dag, xs: Iterable[str], ys: Iterable[str], zs: Iterable[str] = ()) -> bool:
    """True iff every path between ``xs`` and ``ys`` is blocked by ``zs``."""
    xs, ys, zs = set(xs), set(ys), set(zs)
    _check_sets(g, xs, ys, zs)
    if not xs or not ys:
        return True
    evidence_ancestors = g.ancestors(zs)
    # Bayes-ball: "up" = entered from a child, "down" = entered from a parent
    queue = deque((x, "up") for x in xs)
    visited: set[tuple[str, str]] = set()
    while queue:
        v, direction = queue.popleft()
        if (v, direction) in visited:
            continue
        visited.add((v, direction))
        if v in ys and v not in zs:
            return False
        if direction == "up" and v not in zs:
            queue.extend((p, "up") for p in g.parents(v))
            queue.extend((c, "down") for c in g.children(v))
        elif direction == "down":
            if v not in zs:
                queue.extend((c, "down") for c in g.children(v))
            if v in evidence_ancestors:
                queue.extend((p, "up") for p in g.parents(v))
    return True


def ancestrally_closed(
    g: Dag, sensitive: Iterable[str], latent_confounders: Iterable[Iterable[str]] = ()
) -> bool:
    """No sensitive node has a parent outside the set or a declared latent confounder."""
    sensitive = set(sensitive)
    known = set(g.nodes)
    for v in sensitive:
        if v not in known:
            raise ScmError(f"unknown node {v}")
    for pair in latent_confounders:
        pair = tuple(pair)
        for v in pair:
            if v not in known:
                raise ScmError(f"unknown node {v} in latent confounder {pair}")
        if len(pair) == 2 and pair[0] != pair[1] and sensitive & set(pair):
            return False
    return all(set(g.parents(v)) <= sensitive for v in sensitive)


@dataclass(frozen=True)
class CiStatement:
    """``left`` ⊥ ``right`` | ``given`` with the sup-norm deviation
    max |P(x,y|z) - P(x|z)P(y|z)| over cells with P(z) > 0."""

    left: frozenset[str]
    right: frozenset[str]
    given: frozenset[str]
    max_deviation: float

    def __post_init__(self):
        if self.left & self.right or self.left & self.given or self.right & self.given:
            raise ScmError("CI statement sets must be disjoint")
        if self.max_deviation < 0:
            raise ScmError("max_deviation must be non-negative")

    def key(self) -> tuple[frozenset, frozenset, frozenset]:
        """Order-free identity of the statement (left and right are interchangeable)."""
        return (min(self.left, self.right, key=sorted), max(self.left, self.right, key=sorted), self.given)

    def __str__(self):
        def fmt(s):
            return ", ".join(sorted(s))

        return f"{fmt(self.left)} ⊥ {fmt(self.right)} | {{{fmt(self.given)}}} (deviation {self.max_deviation:.3g})"


def ci_deviation(joint: JointTable, x: str, y: str, zs: Sequence[str] = ()) -> float:
    arr = joint.marginal([x, y, *zs]).array
    pz = arr.sum(axis=(0, 1))
    pxz = arr.sum(axis=1)
    pyz = arr.sum(axis=0)
    mask = pz > 0
    if not mask.any():
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        cond_xy = arr / pz
        product = pxz[:, None] * pyz[None, :] / (pz * pz)
    diff = np.abs(cond_xy - product)[:, :, mask] if arr.ndim > 2 else np.abs(cond_xy - product)
    return float(diff.max())


def iter_triples(scope: Sequence[str]):
    """Every (x, y, Z) with x before y in ``scope`` and Z a subset of the rest."""
    for i, j in itertools.combinations(range(len(scope)), 2):
        x, y = scope[i], scope[j]
        rest = [v for v in scope if v not in (x, y)]
        for size in range(len(rest) + 1):
            for zs in itertools.combinations(rest, size):
                yield x, y, zs


def enumerate_cis(joint: JointTable, tol: float = DEFAULT_CI_TOL) -> list[CiStatement]:
    """All singleton-vs-singleton CI statements holding in ``joint`` within ``tol``."""
    if tol <= 0:
        raise ScmError("tolerance must be positive")
    out = []
    for x, y, zs in iter_triples(joint.scope):
        dev = ci_deviation(joint, x, y, zs)
        if dev < tol:
            out.append(CiStatement(frozenset([x]), frozenset([y]), frozenset(zs), dev))
    return out


def faithfulness_report(scm: Scm, tol: float = DEFAULT_CI_TOL) -> list[CiStatement]:
    """CI statements among observed variables that hold but are not implied by d-separation."""
    if not scm.independent_noise:
        raise ScmError(
            "faithfulness report unavailable for dependent-noise models: "
            "d-separation does not imply independence there"
        )
    g = dag_from_scm(scm, include_noise=True)
    joint = joint_distribution(scm, scm.observed)
    return [
        ci
        for ci in enumerate_cis(joint, tol)
        if not d_separated(g, ci.left, ci.right, ci.given)
    ]
