"""Chimera hardware graphs and minor embedding of logical Ising problems.

A logical variable is represented by a *chain*: a connected set of
physical qubits held together by strong ferromagnetic couplers. Physical
samples map back to logical ones by majority vote over each chain.
"""
from __future__ import annotations

import json
import os
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .errors import CapacityError, EmbeddingNotFound, ProblemFormatError, ValidationError
from .ising import IsingModel, energy
from .state import SampleSet, make_rng

__all__ = [
    "HardwareGraph",
    "chimera_graph",
    "load_edge_list",
    "Embedding",
    "Violation",
    "validate_embedding",
    "find_embedding",
    "embed_model",
    "unembed",
    "unembed_sampleset",
    "problem_edges",
    "MAX_LOGICAL_VARIABLES",
]

MAX_LOGICAL_VARIABLES = 16

Edge = tuple[int, int]


def _edge(u: int, v: int) -> Edge:
    u, v = int(u), int(v)
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class HardwareGraph:
    num_nodes: int
    edges: frozenset[Edge]
    layout: str = "file"

    def __post_init__(self):
        edges = set()
        for u, v in self.edges:
            if u == v:
                raise ValidationError(f"self-loop on node {u}")
            e = _edge(u, v)
            if not (0 <= e[0] and e[1] < self.num_nodes):
                raise ValidationError(f"edge {e} out of range for {self.num_nodes} nodes")
            edges.add(e)
        object.__setattr__(self, "edges", frozenset(edges))
        adj: list[set[int]] = [set() for _ in range(self.num_nodes)]
        for u, v in edges:
            adj[u].add(v)
            adj[v].add(u)
        object.__setattr__(self, "_adj", tuple(frozenset(a) for a in adj))

    def neighbors(self, node: int) -> frozenset[int]:
        return self._adj[node]

    def has_edge(self, u: int, v: int) -> bool:
        return _edge(u, v) in self.edges

    def to_edge_list(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for u, v in sorted(self.edges):
                fh.write(f"{u} {v}\n")


def chimera_graph(m: int, n: int | None = None, t: int = 4) -> HardwareGraph:
    """``m x n`` grid of ``K_{t,t}`` cells.

    Node ``(row * n + col) * 2t + k``: ``k < t`` is the first shore, coupled
    to the same ``k`` in the cell below; ``k >= t`` is the second shore,
    coupled to the same ``k`` in the cell to the right.
    """
    n = m if n is None else n
    if m < 1 or n < 1 or t < 1:
        raise ValidationError("chimera parameters must be >= 1")
    edges = set()

    def node(row, col, k):
        return (row * n + col) * 2 * t + k

    for row in range(m):
        for col in range(n):
            for a in range(t):
                for b in range(t, 2 * t):
                    edges.add((node(row, col, a), node(row, col, b)))
            if row + 1 < m:
                for k in range(t):
                    edges.add((node(row, col, k), node(row + 1, col, k)))
            if col + 1 < n:
                for k in range(t, 2 * t):
                    edges.add((node(row, col, k), node(row, col + 1, k)))
    return HardwareGraph(2 * t * m * n, frozenset(edges), f"chimera({m},{n},{t})")


def load_edge_list(path: str | os.PathLike, num_nodes: int | None = None) -> HardwareGraph:
    """Read one ``u v`` pair per line; ``#`` comments and blank lines are skipped."""
    edges = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                u, v = (int(p) for p in parts)
            except ValueError:
                raise ProblemFormatError(f"line {lineno}: expected two integers 'u v'") from None
            if u < 0 or v < 0:
                raise ProblemFormatError(f"line {lineno}: negative node index")
            edges.add(_edge(u, v))
    count = num_nodes if num_nodes is not None else (max((max(e) for e in edges), default=-1) + 1)
    try:
        return HardwareGraph(count, frozenset(edges), "file")
    except ValidationError as exc:
        raise ProblemFormatError(str(exc)) from None


@dataclass(frozen=True)
class Embedding:
    """Logical variable -> chain of physical nodes."""

    chains: Mapping[int, frozenset[int]]

    def __post_init__(self):
        chains = {int(k): frozenset(int(q) for q in v) for k, v in dict(self.chains).items()}
        object.__setattr__(self, "chains", dict(sorted(chains.items())))

    def __eq__(self, other):
        return isinstance(other, Embedding) and self.chains == other.chains

    def __hash__(self):
        return hash(tuple((k, tuple(sorted(v))) for k, v in self.chains.items()))

    def chain_lengths(self) -> dict[int, int]:
        return {k: len(v) for k, v in self.chains.items()}

    def to_dict(self) -> dict:
        return {"chains": {str(k): sorted(v) for k, v in self.chains.items()}}

    @classmethod
    def from_dict(cls, data: Mapping) -> Embedding:
        try:
            raw = data["chains"]
            return cls({int(k): [int(q) for q in v] for k, v in dict(raw).items()})
        except (KeyError, TypeError, ValueError) as exc:
            raise ProblemFormatError(f"malformed embedding: {exc}") from None

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> Embedding:
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ProblemFormatError(f"invalid JSON: {exc}") from None


@dataclass(frozen=True)
class Violation:
    kind: str
    items: tuple

    def __str__(self):
        return f"{self.kind}: {self.items}"


def _connected(nodes: frozenset[int], hw: HardwareGraph) -> bool:
    if not nodes:
        return False
    start = next(iter(nodes))
    seen = {start}
    todo = [start]
    while todo:
        u = todo.pop()
        for w in hw.neighbors(u):
            if w in nodes and w not in seen:
                seen.add(w)
                todo.append(w)
    return len(seen) == len(nodes)


def _chains_adjacent(a: frozenset[int], b: frozenset[int], hw: HardwareGraph) -> bool:
    return any(hw.neighbors(u) & b for u in a)


def problem_edges(model: IsingModel) -> set[Edge]:
    return {_edge(i, j) for (i, j) in model.J}


def validate_embedding(edges: Iterable[Edge], hw: HardwareGraph, emb: Embedding,
                       variables: Iterable[int] = ()) -> list[Violation]:
    """All problems with ``emb``; an empty list means it is valid.

    ``variables`` lists logical variables that need a chain even if they
    appear in no edge.
    """
    edges = {_edge(u, v) for u, v in edges}
    out: list[Violation] = []
    needed = set(variables) | {v for e in edges for v in e}
    for v in sorted(needed - set(emb.chains)):
        out.append(Violation("missing_chain", (v,)))
    owner: dict[int, int] = {}
    for var, chain in emb.chains.items():
        if not chain:
            out.append(Violation("empty_chain", (var,)))
            continue
        bad = sorted(q for q in chain if not 0 <= q < hw.num_nodes)
        if bad:
            out.append(Violation("unknown_node", (var, tuple(bad))))
            continue
        for q in sorted(chain):
            if q in owner:
                out.append(Violation("overlap", (owner[q], var, q)))
            else:
                owner[q] = var
        if not _connected(chain, hw):
            out.append(Violation("disconnected_chain", (var, tuple(sorted(chain)))))
    for u, v in sorted(edges):
        cu, cv = emb.chains.get(u), emb.chains.get(v)
        if cu and cv and not _chains_adjacent(cu, cv, hw):
            out.append(Violation("missing_edge", (u, v)))
    return out


class _Router:
    """Chain placement with overlap penalties.

    Chains may temporarily share nodes. A node already used by ``k`` other
    chains costs ``penalty**k``; the penalty grows from round to round, so
    repeated re-routing pushes chains apart.
    """

    def __init__(self, adj: dict[int, set[int]], hw: HardwareGraph, rng: random.Random):
        self.adj = adj
        self.hw = hw
        self.rng = rng
        self.penalty = 1.5
        self.max_penalty = float(max(2, hw.num_nodes))
        self.chains: dict[int, set[int]] = {}
        self.usage = np.zeros(hw.num_nodes, dtype=int)
        rows, cols = [], []
        for u, v in hw.edges:
            rows += [u, v]
            cols += [v, u]
        self.graph = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(hw.num_nodes,) * 2)

    def weights(self) -> np.ndarray:
        return np.power(float(self.penalty), self.usage)

    def raise_penalty(self) -> None:
        self.penalty = min(self.penalty * 1.3, self.max_penalty)

    def place(self, var: int) -> None:
        placed = [v for v in sorted(self.adj[var]) if v in self.chains]
        w = self.weights()
        cost = w.copy()
        preds = []
        if placed:
            # entering node j costs w[j]
            graph = self.graph
            graph.data = w[graph.indices]
            for v in placed:
                dist, pred, _ = dijkstra(graph, directed=True, indices=sorted(self.chains[v]),
                                         return_predecessors=True, min_only=True)
                dist = dist.astype(float)
                dist[sorted(self.chains[v])] = np.inf
                cost += dist - w
                preds.append((pred, self.chains[v]))
        finite = np.flatnonzero(np.isfinite(cost))
        if finite.size == 0:
            finite = np.arange(self.hw.num_nodes)
            cost = w.copy()
            preds = []
        low = cost[finite].min()
        root = int(self.rng.choice([int(q) for q in finite if cost[q] <= low * (1 + 1e-12)]))
        chain = {root}
        for pred, source in preds:
            q = root
            while q >= 0 and q not in source:
                chain.add(q)
                q = int(pred[q])
        self._claim(var, chain)

    def _claim(self, var: int, chain: set[int]) -> None:
        self.chains[var] = chain
        self.usage[list(chain)] += 1

    def release(self, var: int) -> set[int]:
        chain = self.chains.pop(var)
        self.usage[list(chain)] -= 1
        return chain

    def overlapping(self) -> bool:
        return bool((self.usage > 1).any())

    def prune(self) -> None:
        """Drop leaf nodes that no logical adjacency depends on."""
        for var in sorted(self.chains):
            chain = self.chains[var]
            changed = True
            while changed and len(chain) > 1:
                changed = False
                for q in sorted(chain):
                    if len(self.hw.neighbors(q) & chain) > 1:
                        continue
                    rest = frozenset(chain - {q})
                    if all(_chains_adjacent(rest, frozenset(self.chains[v]), self.hw) for v in self.adj[var]):
                        chain.discard(q)
                        self.usage[q] -= 1
                        changed = True
                        break


def find_embedding(
    edges: Iterable[Edge],
    hw: HardwareGraph,
    seed: int | None = None,
    tries: int = 10,
    variables: Iterable[int] = (),
    max_rounds: int = 30,
    refine_rounds: int = 2,
) -> Embedding:
    """Randomized heuristic minor embedding.

    Variables are placed in a randomized breadth-first order. Each chain is
    rooted at the node with the cheapest summed path cost to its placed
    neighbors and grown along those paths. Chains may share nodes at a cost
    that grows exponentially with the number of sharers; every round rips
    up and re-routes each chain in turn until no node is shared (at most
    ``max_rounds`` rounds). A few more rounds then keep any re-route that
    shortens a chain, and finally unneeded leaves are pruned.

    Restart ``k`` draws from its own generator derived from ``seed``, so the
    first success by restart index is reproducible. Raises
    :class:`EmbeddingNotFound` after ``tries`` failed restarts.
    """
    edges = {_edge(u, v) for u, v in edges}
    if any(u == v for u, v in edges):
        raise ValidationError("problem graph has a self-loop")
    nodes = sorted(set(variables) | {v for e in edges for v in e})
    if len(nodes) > MAX_LOGICAL_VARIABLES:
        raise CapacityError(f"find_embedding is capped at {MAX_LOGICAL_VARIABLES} logical variables, got {len(nodes)}")
    if len(nodes) > hw.num_nodes:
        raise EmbeddingNotFound(f"{len(nodes)} variables cannot fit on {hw.num_nodes} nodes")
    adj: dict[int, set[int]] = {v: set() for v in nodes}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    base = random.Random(seed).getrandbits(64) if seed is not None else random.getrandbits(64)
    for attempt in range(tries):
        rng = random.Random(base + attempt)
        emb = _attempt(nodes, adj, hw, rng, max_rounds, refine_rounds)
        if emb is not None and not validate_embedding(edges, hw, emb, nodes):
            return emb
    raise EmbeddingNotFound(f"no embedding found after {tries} tries")


def _bfs_order(nodes: list[int], adj: dict[int, set[int]], rng: random.Random) -> list[int]:
    order, seen = [], set()
    remaining = nodes[:]
    rng.shuffle(remaining)
    remaining.sort(key=lambda v: -len(adj[v]))
    for start in remaining:
        if start in seen:
            continue
        seen.add(start)
        queue = deque([start])
        while queue:
            u = queue.popleft()
            order.append(u)
            nbrs = sorted(adj[u] - seen)
            rng.shuffle(nbrs)
            for w in nbrs:
                seen.add(w)
                queue.append(w)
    return order


def _attempt(nodes, adj, hw, rng, max_rounds, refine_rounds) -> Embedding | None:
    router = _Router(adj, hw, rng)
    for var in _bfs_order(nodes, adj, rng):
        router.place(var)
    rounds = 0
    while router.overlapping():
        if rounds >= max_rounds:
            return None
        rounds += 1
        router.raise_penalty()
        for var in rng.sample(nodes, len(nodes)):
            router.release(var)
            router.place(var)
    for _ in range(refine_rounds):
        for var in rng.sample(nodes, len(nodes)):
            old = router.release(var)
            router.place(var)
            if router.overlapping() or len(router.chains[var]) > len(old):
                router.release(var)
                router._claim(var, old)
    router.prune()
    return Embedding({v: frozenset(c) for v, c in router.chains.items()})


def embed_model(model: IsingModel, emb: Embedding, hw: HardwareGraph, chain_strength: float) -> IsingModel:
    """Physical Ising model on ``hw`` that realizes ``model`` through ``emb``.

    ``h_i`` is split evenly over chain ``i``; ``J_ij`` sits on the
    lowest-index hardware edge between the two chains; every hardware edge
    inside a chain gets ``-chain_strength``. The offset is raised by
    ``chain_strength`` per intra-chain edge, so an unbroken physical
    configuration has exactly the logical energy.
    """
    if chain_strength <= 0:
        raise ValidationError("chain_strength must be positive")
    violations = validate_embedding(problem_edges(model), hw, emb, range(model.num_variables))
    if violations:
        raise ValidationError("invalid embedding: " + "; ".join(map(str, violations)))
    h: dict[int, float] = {}
    J: dict[Edge, float] = {}
    for i, hi in model.h.items():
        chain = emb.chains[i]
        for q in chain:
            h[q] = h.get(q, 0.0) + hi / len(chain)
    for (i, j), jij in model.J.items():
        links = sorted(_edge(u, w) for u in emb.chains[i] for w in hw.neighbors(u) & emb.chains[j])
        J[links[0]] = J.get(links[0], 0.0) + jij
    intra = 0
    for chain in emb.chains.values():
        for u, v in hw.edges:
            if u in chain and v in chain:
                J[(u, v)] = J.get((u, v), 0.0) - chain_strength
                intra += 1
    return IsingModel(hw.num_nodes, h, J, model.offset + chain_strength * intra)


def unembed(sample: Sequence[int] | Mapping[int, int], emb: Embedding,
            rng: np.random.Generator | int | None = None) -> tuple[tuple[int, ...], float]:
    """Majority vote per chain; an exact tie is broken by a seeded coin flip.

    Returns the logical spins ordered by variable index and the fraction of
    chains whose nodes disagree.
    """
    if not isinstance(rng, np.random.Generator):
        rng = make_rng(rng)
    values = []
    broken = 0
    for var, chain in emb.chains.items():
        try:
            spins = [int(sample[q]) for q in sorted(chain)]
        except (KeyError, IndexError):
            raise ValidationError(f"sample does not cover chain of variable {var}") from None
        total = sum(spins)
        if len(set(spins)) > 1:
            broken += 1
        if total > 0:
            values.append(1)
        elif total < 0:
            values.append(-1)
        else:
            values.append(int(rng.choice([-1, 1])))
    return tuple(values), broken / len(emb.chains) if emb.chains else 0.0


def unembed_sampleset(physical: SampleSet, emb: Embedding, logical: IsingModel, seed: int | None = None) -> SampleSet:
    """Unembed every physical sample (SPIN) and re-score with the logical model."""
    if physical.vartype != "SPIN":
        raise ValidationError("unembedding expects SPIN samples")
    if sorted(emb.chains) != list(range(logical.num_variables)):
        raise ValidationError("embedding must cover logical variables 0..n-1")
    rng = make_rng(seed)
    samples, fractions = [], []
    for row in physical.rows:
        for _ in range(row.num_occurrences):
            values, frac = unembed(row.sample, emb, rng)
            samples.append(values)
            fractions.append(frac)
    info = dict(physical.info)
    info["unembed_seed"] = seed
    return SampleSet.from_samples(samples, logical.num_variables, "SPIN",
                                  lambda s: energy(logical, s), fractions, info)
