"""Bayesian network structure learning, CPT fitting, orderings, and sampling.

Structure search is score-based hill climbing over single-edge moves with the
K2 family score; the in-degree cap keeps the learned graph chain-like so it
admits orderings compatible with left-to-right autoregressive generation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .dataset import AttributeSchema, Dataset, derive_seed

__all__ = [
    "BayesNet",
    "Cpt",
    "CyclicGraph",
    "Dag",
    "Ordering",
    "bn_ancestral_sample",
    "fit_cpts",
    "hill_climb",
    "k2_log_score",
    "sample_topological_order",
]


class CyclicGraph(ValueError):
    """Edge set contains a directed cycle (or a self-loop)."""


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over attribute indices with an in-degree cap."""

    node_count: int
    edges: frozenset[tuple[int, int]]
    max_in_degree: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", frozenset((int(a), int(b)) for a, b in self.edges))
        for a, b in self.edges:
            if a == b:
                raise CyclicGraph(f"self-loop on node {a}")
            if not (0 <= a < self.node_count and 0 <= b < self.node_count):
                raise ValueError(f"edge ({a}, {b}) outside node range")
        for i in range(self.node_count):
            if self.in_degree(i) > self.max_in_degree:
                raise ValueError(f"node {i} exceeds in-degree cap {self.max_in_degree}")
        if self._has_cycle():
            raise CyclicGraph("edge set contains a directed cycle")

    def _has_cycle(self) -> bool:
        state = [0] * self.node_count  # 0 unseen, 1 on stack, 2 done
        children = self.children_map

        def visit(v: int) -> bool:
            state[v] = 1
            for c in children[v]:
                if state[c] == 1 or (state[c] == 0 and visit(c)):
                    return True
            state[v] = 2
            return False

        return any(state[v] == 0 and visit(v) for v in range(self.node_count))

    @cached_property
    def parents_map(self) -> tuple[tuple[int, ...], ...]:
        acc: list[list[int]] = [[] for _ in range(self.node_count)]
        for a, b in self.edges:
            acc[b].append(a)
        return tuple(tuple(sorted(p)) for p in acc)

    @cached_property
    def children_map(self) -> tuple[tuple[int, ...], ...]:
        acc: list[list[int]] = [[] for _ in range(self.node_count)]
        for a, b in self.edges:
            acc[a].append(b)
        return tuple(tuple(sorted(c)) for c in acc)

    def parents(self, node: int) -> tuple[int, ...]:
        return self.parents_map[node]

    def children(self, node: int) -> tuple[int, ...]:
        return self.children_map[node]

    def in_degree(self, node: int) -> int:
        return sum(1 for a, b in self.edges if b == node)

    @cached_property
    def roots(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.node_count) if not self.parents_map[i])

    def skeleton(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(e) for e in self.edges)

    def to_json(self, names: Sequence[str]) -> dict:
        return {
            "nodes": list(names),
            "edges": sorted([names[a], names[b]] for a, b in self.edges),
            "max_in_degree": self.max_in_degree,
        }

    @classmethod
    def from_json(cls, obj: dict) -> tuple["Dag", tuple[str, ...]]:
        names = tuple(obj["nodes"])
        index = {n: i for i, n in enumerate(names)}
        edges = frozenset((index[a], index[b]) for a, b in obj["edges"])
        return cls(len(names), edges, int(obj.get("max_in_degree", 1))), names

    def save(self, path: str | Path, names: Sequence[str]) -> None:
        Path(path).write_text(json.dumps(self.to_json(names), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> tuple["Dag", tuple[str, ...]]:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class Ordering:
    """Permutation of attribute indices used to sequence autoregressive steps."""

    permutation: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "permutation", tuple(int(i) for i in self.permutation))
        if sorted(self.permutation) != list(range(len(self.permutation))):
            raise ValueError("not a permutation of 0..d-1")

    def position(self, node: int) -> int:
        return self.permutation.index(node)

    def respects(self, dag: Dag) -> bool:
        pos = {n: i for i, n in enumerate(self.permutation)}
        return all(pos[a] < pos[b] for a, b in dag.edges)


@dataclass(frozen=True)
class Cpt:
    """Conditional table of one node: parent configuration -> category distribution.

    Parent configurations are indexed in mixed radix over ``parents`` (ascending
    attribute order); rows cover every configuration, including unseen ones.
    """

    node: int
    parents: tuple[int, ...]
    parent_dims: tuple[int, ...]
    table: np.ndarray  # (n_configs, r_node)
    alpha: float

    def __post_init__(self) -> None:
        table = np.ascontiguousarray(self.table, dtype=np.float64)
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        if not np.allclose(table.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError(f"CPT rows of node {self.node} do not sum to 1")
        if (table < 0).any():
            raise ValueError(f"CPT of node {self.node} has negative entries")
        if self.alpha > 0 and not (table > 0).all():
            raise ValueError(f"smoothed CPT of node {self.node} has zero entries")

    @property
    def n_configs(self) -> int:
        return self.table.shape[0]

    def config_index(self, parent_values: Sequence[int]) -> int:
        if not self.parents:
            return 0
        return int(np.ravel_multi_index(tuple(parent_values), self.parent_dims))

    def row(self, parent_values: Sequence[int]) -> np.ndarray:
        return self.table[self.config_index(parent_values)]


@dataclass(frozen=True)
class BayesNet:
    """A DAG plus one CPT per node, over a shared schema."""

    dag: Dag
    cpts: tuple[Cpt, ...]
    schema: AttributeSchema

    def __post_init__(self) -> None:
        if len(self.cpts) != self.dag.node_count or self.dag.node_count != self.schema.d:
            raise ValueError("DAG, CPTs, and schema disagree on node count")
        for i, cpt in enumerate(self.cpts):
            if cpt.node != i:
                raise ValueError("CPTs must be indexed by node")
            if cpt.parents != self.dag.parents(i):
                raise ValueError(f"CPT parents of node {i} do not match the DAG")

    def to_json(self) -> dict:
        nodes = []
        for cpt in self.cpts:
            attr = self.schema.attributes[cpt.node]
            rows = {}
            for j in range(cpt.n_configs):
                if cpt.parents:
                    pv = np.unravel_index(j, cpt.parent_dims)
                    key = json.dumps(
                        [
                            self.schema.attributes[p].categories[int(v)].label
                            for p, v in zip(cpt.parents, pv)
                        ]
                    )
                else:
                    key = "[]"
                rows[key] = [float(x) for x in cpt.table[j]]
            nodes.append(
                {
                    "name": attr.name,
                    "parents": [self.schema.names[p] for p in cpt.parents],
                    "alpha": cpt.alpha,
                    "rows": rows,
                }
            )
        return {"dag": self.dag.to_json(self.schema.names), "nodes": nodes}

    @classmethod
    def from_json(cls, obj: dict, schema: AttributeSchema) -> "BayesNet":
        dag, names = Dag.from_json(obj["dag"])
        if names != schema.names:
            raise ValueError("DAG node names do not match the schema")
        cpts = []
        by_name = {n["name"]: n for n in obj["nodes"]}
        for i, name in enumerate(schema.names):
            node = by_name[name]
            parents = tuple(sorted(schema.name_to_index[p] for p in node["parents"]))
            parent_dims = tuple(schema.dims[p] for p in parents)
            n_configs = int(np.prod(parent_dims)) if parents else 1
            table = np.zeros((n_configs, schema.dims[i]))
            for key, row in node["rows"].items():
                labels = json.loads(key)
                pv = tuple(
                    schema.attributes[p].label_to_id[lab] for p, lab in zip(parents, labels)
                )
                j = int(np.ravel_multi_index(pv, parent_dims)) if parents else 0
                table[j] = row
            cpts.append(Cpt(i, parents, parent_dims, table, float(node.get("alpha", 0.0))))
        return cls(dag, tuple(cpts), schema)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, schema: AttributeSchema) -> "BayesNet":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")), schema)


def _family_counts(
    values: np.ndarray, dims: Sequence[int], node: int, parents: Sequence[int]
) -> np.ndarray:
    """Occurrence counts of (parent configuration, node category) as a (J, r) array."""
    r = dims[node]
    parents = tuple(sorted(parents))
    if not parents:
        return np.bincount(values[:, node], minlength=r).reshape(1, r).astype(np.float64)
    parent_dims = tuple(dims[p] for p in parents)
    config = np.ravel_multi_index(tuple(values[:, p] for p in parents), parent_dims)
    joint = config * r + values[:, node]
    n_configs = int(np.prod(parent_dims))
    counts = np.bincount(joint, minlength=n_configs * r)
    return counts.reshape(n_configs, r).astype(np.float64)


def k2_log_score(dataset: Dataset, node: int, parents: Iterable[int]) -> float:
    """Log K2 family score of ``node`` given ``parents``.

    Sum over parent configurations j of
    ``lgamma(r) - lgamma(N_ij + r) + sum_k lgamma(N_ijk + 1)``;
    configurations with no observations contribute exactly zero.
    """
    parents = tuple(sorted(parents))
    if node in parents:
        raise ValueError("node cannot be its own parent")
    counts = _family_counts(dataset.values, dataset.schema.dims, node, parents)
    r = dataset.schema.dims[node]
    n_ij = counts.sum(axis=1)
    score = gammaln(r) * counts.shape[0] - gammaln(n_ij + r).sum() + gammaln(counts + 1.0).sum()
    return float(score)


class _Climber:
    """One hill-climbing run over add/delete/reverse moves with a score cache."""

    def __init__(self, dataset: Dataset, max_in_degree: int, cache: dict):
        self.dataset = dataset
        self.d = dataset.schema.d
        self.cap = max_in_degree
        self.cache = cache
        self.parents: list[frozenset[int]] = [frozenset() for _ in range(self.d)]

    def family_score(self, node: int, parents: frozenset[int]) -> float:
        key = (node, parents)
        score = self.cache.get(key)
        if score is None:
            score = k2_log_score(self.dataset, node, parents)
            self.cache[key] = score
        return score

    def total_score(self) -> float:
        return sum(self.family_score(i, self.parents[i]) for i in range(self.d))

    def _reachable(self, start: int, goal: int) -> bool:
        # directed path start -> goal under the current parent sets
        stack, seen = [start], {start}
        children = [[] for _ in range(self.d)]
        for c in range(self.d):
            for p in self.parents[c]:
                children[p].append(c)
        while stack:
            v = stack.pop()
            if v == goal:
                return True
            for c in children[v]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return False

    def move_delta(self, kind: str, u: int, v: int) -> float | None:
        """Score change of a move, or None if the move is not applicable."""
        pv = self.parents[v]
        if kind == "add":
            if u in pv or len(pv) + 1 > self.cap or self._reachable(v, u):
                return None
            return self.family_score(v, pv | {u}) - self.family_score(v, pv)
        if kind == "delete":
            if u not in pv:
                return None
            return self.family_score(v, pv - {u}) - self.family_score(v, pv)
        if kind == "reverse":
            if u not in pv:
                return None
            pu = self.parents[u]
            if len(pu) + 1 > self.cap:
                return None
            # removing u->v then adding v->u: cycle iff another path u ~> v remains
            saved = self.parents[v]
            self.parents[v] = pv - {u}
            cyclic = self._reachable(u, v)
            self.parents[v] = saved
            if cyclic:
                return None
            return (
                self.family_score(v, pv - {u})
                - self.family_score(v, pv)
                + self.family_score(u, pu | {v})
                - self.family_score(u, pu)
            )
        raise ValueError(kind)

    def apply(self, kind: str, u: int, v: int) -> None:
        if kind == "add":
            self.parents[v] = self.parents[v] | {u}
        elif kind == "delete":
            self.parents[v] = self.parents[v] - {u}
        else:
            self.parents[v] = self.parents[v] - {u}
            self.parents[u] = self.parents[u] | {v}

    def climb(
        self,
        move_order: list[tuple[str, int, int]],
        rng: np.random.Generator | None = None,
        rcl_width: float = 0.0,
    ) -> float:
        """Best-improvement ascent from the empty graph; returns the final score.

        With ``rcl_width > 0`` the step picks uniformly among moves whose gain
        is within that relative band of the best one (GRASP-style restricted
        candidate list). Near-tied moves, such as the two orientations of a
        strong edge, are where greedy search commits to in-degree-cap
        collisions; randomizing only those choices lets restarts escape them
        without ever overriding a clearly better move.
        """
        running = self.total_score()
        while True:
            gains: list[tuple[float, tuple[str, int, int]]] = []
            for move in move_order:
                delta = self.move_delta(*move)
                if delta is not None and delta > 1e-10:
                    gains.append((delta, move))
            if not gains:
                break
            best_delta = max(g[0] for g in gains)
            if rcl_width > 0.0 and rng is not None:
                shortlist = [g for g in gains if g[0] >= best_delta * (1.0 - rcl_width)]
                chosen = shortlist[rng.integers(len(shortlist))]
            else:
                chosen = next(g for g in gains if g[0] == best_delta)
            running += chosen[0]
            self.apply(*chosen[1])
        # decomposability bookkeeping: the incremental total must equal a fresh sum
        fresh = self.total_score()
        assert abs(running - fresh) < 1e-6, "incremental score drifted from family sum"
        return fresh


def hill_climb(dataset: Dataset, max_in_degree: int = 1, restarts: int = 4, seed: int = 0) -> Dag:
    """Score-based structure search from the empty graph.

    The first restart is pure best-improvement with a shuffled move-evaluation
    order (a deterministic baseline; the shuffle settles exact ties). Further
    restarts randomize among near-tied moves so they can reach different local
    optima; the best-scoring structure across restarts wins, so the result is
    never worse than the greedy baseline.
    """
    if max_in_degree < 1:
        raise ValueError("max_in_degree must be >= 1")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    d = dataset.schema.d
    base_moves = [
        (kind, u, v)
        for kind in ("add", "delete", "reverse")
        for u in range(d)
        for v in range(d)
        if u != v
    ]
    cache: dict = {}
    best_score = -np.inf
    best_parents: list[frozenset[int]] | None = None
    for k in range(restarts):
        rng = np.random.default_rng(derive_seed(seed, k))
        order = list(base_moves)
        rng.shuffle(order)
        climber = _Climber(dataset, max_in_degree, cache)
        score = climber.climb(order, rng=rng, rcl_width=0.0 if k == 0 else 0.02)
        if score > best_score:
            best_score = score
            best_parents = [frozenset(p) for p in climber.parents]
    assert best_parents is not None
    edges = frozenset((p, v) for v in range(d) for p in best_parents[v])
    return Dag(d, edges, max_in_degree)


def fit_cpts(dataset: Dataset, dag: Dag, alpha: float = 0.0) -> BayesNet:
    """Fit conditional tables: (N_ijk + alpha) / (N_ij + alpha * r).

    With ``alpha == 0``, parent configurations never observed fall back to the
    uniform vector.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if dag.node_count != dataset.schema.d:
        raise ValueError("DAG node count does not match the schema")
    dims = dataset.schema.dims
    cpts = []
    for i in range(dag.node_count):
        parents = dag.parents(i)
        parent_dims = tuple(dims[p] for p in parents)
        counts = _family_counts(dataset.values, dims, i, parents)
        r = dims[i]
        denom = counts.sum(axis=1, keepdims=True) + alpha * r
        table = np.where(denom > 0, (counts + alpha) / np.where(denom > 0, denom, 1.0), 1.0 / r)
        cpts.append(Cpt(i, parents, parent_dims, table, alpha))
    return BayesNet(dag, tuple(cpts), dataset.schema)


def _longest_chain(dag: Dag) -> list[int]:
    """Longest directed path length (in edges) starting at each node."""
    memo = [-1] * dag.node_count

    def depth(v: int) -> int:
        if memo[v] < 0:
            memo[v] = max((depth(c) + 1 for c in dag.children(v)), default=0)
        return memo[v]

    return [depth(v) for v in range(dag.node_count)]


def sample_topological_order(
    dag: Dag, policy: str = "randomized", seed: int | np.random.Generator = 0
) -> Ordering:
    """Root-to-leaf traversal ordering compatible with the DAG.

    Repeatedly start at an unvisited root and follow one eligible child at a
    time (an unvisited child whose parents are all visited) until the path dead
    ends; once no unvisited roots remain, the leftover nodes are appended in a
    topological order of the remaining subgraph. ``randomized`` picks roots and
    children uniformly at random; ``deterministic`` starts at the root heading
    the longest descendant chain and always follows the lowest attribute index.
    """
    if policy not in ("randomized", "deterministic"):
        raise ValueError(f"unknown policy {policy!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    d = dag.node_count
    visited: list[int] = []
    unvisited = set(range(d))
    chain_len = _longest_chain(dag) if policy == "deterministic" else None

    def pick(candidates: list[int], by_chain: bool) -> int:
        if policy == "randomized":
            return int(candidates[rng.integers(len(candidates))])
        if by_chain:
            return max(candidates, key=lambda v: (chain_len[v], -v))
        return min(candidates)

    def eligible_children(v: int) -> list[int]:
        return [
            c
            for c in dag.children(v)
            if c in unvisited and all(p not in unvisited for p in dag.parents(c))
        ]

    while True:
        open_roots = sorted(r for r in dag.roots if r in unvisited)
        if not open_roots:
            break
        cur = pick(open_roots, by_chain=True)
        visited.append(cur)
        unvisited.remove(cur)
        while True:
            nxt = eligible_children(cur)
            if not nxt:
                break
            cur = pick(sorted(nxt), by_chain=False)
            visited.append(cur)
            unvisited.remove(cur)

    # leftover phase: topological order of the remaining subgraph
    while unvisited:
        ready = sorted(
            v for v in unvisited if all(p not in unvisited for p in dag.parents(v))
        )
        if not ready:
            raise CyclicGraph("remaining subgraph has no source node")
        cur = pick(ready, by_chain=False)
        visited.append(cur)
        unvisited.remove(cur)
    return Ordering(tuple(visited))


def _inverse_cdf_draw(rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized categorical draw: one uniform per row of probabilities."""
    cdf = np.cumsum(rows, axis=1)
    picks = (u[:, None] > cdf).sum(axis=1)
    return np.minimum(picks, rows.shape[1] - 1)


def bn_ancestral_sample(bn: BayesNet, count: int, seed: int = 0) -> Dataset:
    """Draw records by sampling each node from its CPT along a fixed topological order."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    order = sample_topological_order(bn.dag, "deterministic").permutation
    out = np.zeros((count, bn.schema.d), dtype=np.int64)
    for node in order:
        cpt = bn.cpts[node]
        if cpt.parents:
            config = np.ravel_multi_index(
                tuple(out[:, p] for p in cpt.parents), cpt.parent_dims
            )
            rows = cpt.table[config]
        else:
            rows = np.broadcast_to(cpt.table[0], (count, cpt.table.shape[1]))
        out[:, node] = _inverse_cdf_draw(rows, rng.random(count))
    return Dataset(bn.schema, out, "generated")
