"""Steiner-tree solving on the schema graph.

The planner follows the classic four-step 2-approximation (metric closure,
MST over the terminals, expansion back to original paths, pruning) plus an
exhaustive oracle for verification and two simpler baseline planners for
benchmarking.

Determinism contract: every tie anywhere in the solve is broken the same way.
Shortest paths order by (distance, hop count, vertex sequence); MST and
pruning order candidate edges by (cost, endpoint, endpoint). Given the same
graph, outputs are byte-identical across runs and vertex insertion orders.

Scaffold totals are accumulated exactly over the decimal value of each edge
cost (rather than binary-float summation) so exported totals are stable,
order-independent, and diff-friendly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .canonical import canonical_json
from .costs import EdgeKey, SchemaGraph, edge_key

# Shortest-path key: (distance, hops, vertex sequence). Tuple comparison
# implements the tie-break rule directly.
PathKey = tuple[float, int, tuple[str, ...]]


class SteinerError(ValueError):
    """Domain failure in the solver (bad terminals, unsolvable instance)."""


class DisconnectedTerminalsError(SteinerError):
    def __init__(self, groups: Sequence[Sequence[str]]):
        self.groups = tuple(tuple(g) for g in groups)
        rendered = " | ".join(",".join(g) for g in self.groups)
        super().__init__(f"disconnected terminals: {rendered}")


class GraphTooLargeError(SteinerError):
    pass


def exact_total(costs: Iterable[float]) -> float:
    """Sum edge costs exactly over their decimal representations."""
    return float(sum((Fraction(repr(c)) for c in costs), start=Fraction(0)))


@dataclass(frozen=True)
class MetricClosure:
    """All-pairs shortest distances plus the reconstructed path per pair."""

    graph: SchemaGraph
    keys: dict[str, dict[str, PathKey]]

    @property
    def vertices(self) -> tuple[str, ...]:
        return self.graph.vertices

    def reachable(self, u: str, v: str) -> bool:
        return v in self.keys[u]

    def distance(self, u: str, v: str) -> float:
        key = self.keys[u].get(v)
        return key[0] if key is not None else float("inf")

    def path(self, u: str, v: str) -> Optional[tuple[str, ...]]:
        key = self.keys[u].get(v)
        return key[2] if key is not None else None


def metric_closure(graph: SchemaGraph) -> MetricClosure:
    """Floyd–Warshall over (distance, hops, path) keys.

    Running the relaxation on the composite key yields, for every pair, the
    shortest distance, then the fewest-hop path among shortest, then the
    lexicographically smallest vertex sequence. One pass of the classic
    O(|V|^3) triple loop suffices because the key combination is monotone;
    comparing the path component adds cost only on exact ties.
    """
    vertices = graph.vertices
    keys: dict[str, dict[str, PathKey]] = {u: {} for u in vertices}
    for u in vertices:
        keys[u][u] = (0.0, 0, (u,))
    for (a, b), cost in graph.edges.items():
        w = cost.total
        keys[a][b] = (w, 1, (a, b))
        keys[b][a] = (w, 1, (b, a))
    for k in vertices:
        row_k = keys[k]
        for i in vertices:
            via = keys[i].get(k)
            if via is None or i == k:
                continue
            row_i = keys[i]
            for j, tail in row_k.items():
                if j == i or j == k:
                    continue
                candidate = (via[0] + tail[0], via[1] + tail[1], via[2] + tail[2][1:])
                current = row_i.get(j)
                if current is None or candidate < current:
                    row_i[j] = candidate
    return MetricClosure(graph, keys)


class _UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {x: x for x in items}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def _kruskal(
    vertices: Sequence[str], weighted_edges: Mapping[EdgeKey, float]
) -> list[EdgeKey]:
    """MST edges, candidates ordered by (weight, endpoint, endpoint)."""
    uf = _UnionFind(vertices)
    chosen = []
    for (a, b), w in sorted(weighted_edges.items(), key=lambda kv: (kv[1], kv[0])):
        if uf.union(a, b):
            chosen.append((a, b))
    return chosen


def _connected_groups(adjacency: Mapping[str, Iterable[str]], among: Sequence[str]) -> list[list[str]]:
    """Partition ``among`` into connectivity groups, each sorted, groups sorted."""
    remaining = set(among)
    groups = []
    while remaining:
        start = min(remaining)
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for n in adjacency.get(v, ()):
                if n not in seen:
                    seen.add(n)
                    stack.append(n)
        group = sorted(seen & remaining)
        remaining -= seen
        groups.append(group)
    return sorted(groups)


@dataclass(frozen=True)
class SteinerScaffold:
    """Connected acyclic subgraph spanning the terminal set."""

    terminals: tuple[str, ...]
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]
    total_cost: float = field(default=0.0)

    def __post_init__(self) -> None:
        vset = set(self.vertices)
        if not set(self.terminals) <= vset:
            raise SteinerError("scaffold does not span its terminals")
        if len(self.edges) != len(vset) - 1:
            raise SteinerError("scaffold is not a tree (|E| != |V|-1)")
        adjacency: dict[str, list[str]] = {v: [] for v in self.vertices}
        for a, b, _w in self.edges:
            adjacency[a].append(b)
            adjacency[b].append(a)
        groups = _connected_groups(adjacency, self.vertices)
        if len(groups) > 1:
            raise SteinerError("scaffold is not connected")

    @classmethod
    def build(
        cls, terminals: Sequence[str], edge_costs: Mapping[EdgeKey, float]
    ) -> "SteinerScaffold":
        terminals = tuple(sorted(set(terminals)))
        vertices = set(terminals)
        for a, b in edge_costs:
            vertices.add(a)
            vertices.add(b)
        edges = tuple((a, b, w) for (a, b), w in sorted(edge_costs.items()))
        return cls(
            terminals=terminals,
            vertices=tuple(sorted(vertices)),
            edges=edges,
            total_cost=exact_total(w for _a, _b, w in edges),
        )

    @property
    def steiner_vertices(self) -> tuple[str, ...]:
        terminal_set = set(self.terminals)
        return tuple(v for v in self.vertices if v not in terminal_set)

    def edge_pairs(self) -> set[EdgeKey]:
        return {(a, b) for a, b, _w in self.edges}


def _check_terminals(graph: SchemaGraph, terminals: Sequence[str]) -> tuple[str, ...]:
    if not terminals:
        raise SteinerError("terminal set must be non-empty")
    unknown = sorted(set(terminals) - set(graph.vertices))
    if unknown:
        raise SteinerError(f"unknown terminals: {', '.join(unknown)}")
    return tuple(sorted(set(terminals)))


def _require_mutually_reachable(closure: MetricClosure, terminals: Sequence[str]) -> None:
    adjacency = {
        t: [u for u in terminals if u != t and closure.reachable(t, u)] for t in terminals
    }
    groups = _connected_groups(adjacency, terminals)
    if len(groups) > 1:
        raise DisconnectedTerminalsError(groups)


def mst_on_terminals(
    closure: MetricClosure, terminals: Sequence[str]
) -> list[EdgeKey]:
    """MST of the terminal-induced complete subgraph of the closure."""
    terminals = tuple(sorted(set(terminals)))
    if len(terminals) <= 1:
        return []
    _require_mutually_reachable(closure, terminals)
    candidates = {
        (a, b): closure.distance(a, b)
        for i, a in enumerate(terminals)
        for b in terminals[i + 1 :]
    }
    return _kruskal(terminals, candidates)


def expand_to_paths(
    mst_edges: Sequence[EdgeKey], closure: MetricClosure
) -> dict[EdgeKey, float]:
    """Union of the original-graph paths behind each closure edge (may contain cycles)."""
    subgraph: dict[EdgeKey, float] = {}
    for a, b in mst_edges:
        path = closure.path(a, b)
        if path is None:
            raise SteinerError(f"no path between terminals {a!r} and {b!r}")
        for u, v in zip(path, path[1:]):
            subgraph[edge_key(u, v)] = closure.graph.weight(u, v)
    return subgraph


def prune_to_tree(
    subgraph: Mapping[EdgeKey, float], terminals: Sequence[str]
) -> SteinerScaffold:
    """Cycle removal (via MST of the subgraph) plus iterative leaf pruning.

    Cheapest edges win; within equal cost the lexicographically later edge is
    the one dropped from a cycle. Non-terminal degree-1 vertices are removed
    until none remain.
    """
    terminals = tuple(sorted(set(terminals)))
    vertices = set(terminals)
    for a, b in subgraph:
        vertices.add(a)
        vertices.add(b)
    adjacency: dict[str, set[str]] = {v: set() for v in vertices}
    for a, b in subgraph:
        adjacency[a].add(b)
        adjacency[b].add(a)
    groups = _connected_groups(adjacency, sorted(vertices))
    if len(groups) > 1:
        raise SteinerError("input subgraph does not span the terminals")

    tree = {e: subgraph[e] for e in _kruskal(sorted(vertices), subgraph)}

    # Iterative removal of non-terminal leaves, in sorted vertex order.
    terminal_set = set(terminals)
    while True:
        degree: dict[str, int] = {}
        for a, b in tree:
            degree[a] = degree.get(a, 0) + 1
            degree[b] = degree.get(b, 0) + 1
        leaves = sorted(
            v for v, d in degree.items() if d == 1 and v not in terminal_set
        )
        if not leaves:
            break
        doomed = set(leaves)
        tree = {
            (a, b): w for (a, b), w in tree.items() if a not in doomed and b not in doomed
        }
    return SteinerScaffold.build(terminals, tree)


def solve_steiner(graph: SchemaGraph, terminals: Sequence[str]) -> SteinerScaffold:
    """KMB 2-approximation: closure, terminal MST, path expansion, pruning."""
    terminals = _check_terminals(graph, terminals)
    if len(terminals) == 1:
        return SteinerScaffold.build(terminals, {})
    closure = metric_closure(graph)
    mst = mst_on_terminals(closure, terminals)
    subgraph = expand_to_paths(mst, closure)
    return prune_to_tree(subgraph, terminals)


MAX_ORACLE_VERTICES = 14


def exact_steiner_oracle(graph: SchemaGraph, terminals: Sequence[str]) -> SteinerScaffold:
    """Exact minimum Steiner tree by enumerating Steiner-vertex subsets.

    For every subset S of non-terminals, take the MST of the subgraph induced
    by terminals ∪ S when it spans that vertex set; return the global minimum
    (exact rational totals; ties broken by the lexicographic edge list).
    Guarded to |V| <= 14.
    """
    if len(graph.vertices) > MAX_ORACLE_VERTICES:
        raise GraphTooLargeError(
            f"oracle limited to {MAX_ORACLE_VERTICES} vertices, got {len(graph.vertices)}"
        )
    terminals = _check_terminals(graph, terminals)
    if len(terminals) == 1:
        return SteinerScaffold.build(terminals, {})
    _require_mutually_reachable(metric_closure(graph), terminals)

    non_terminals = [v for v in graph.vertices if v not in set(terminals)]
    best: Optional[tuple[Fraction, tuple, dict]] = None
    for r in range(len(non_terminals) + 1):
        for subset in itertools.combinations(non_terminals, r):
            nodes = sorted(set(terminals) | set(subset))
            node_set = set(nodes)
            induced = {
                (a, b): c.total
                for (a, b), c in graph.edges.items()
                if a in node_set and b in node_set
            }
            chosen = _kruskal(nodes, induced)
            if len(chosen) != len(nodes) - 1:
                continue  # induced subgraph does not span terminals ∪ subset
            tree = {e: induced[e] for e in chosen}
            total = sum((Fraction(repr(w)) for w in tree.values()), start=Fraction(0))
            candidate = (total, tuple(sorted(tree)), tree)
            if best is None or candidate[:2] < best[:2]:
                best = candidate
    assert best is not None  # reachability was checked above
    return SteinerScaffold.build(terminals, best[2])


def baseline_shortest_path_combination(
    graph: SchemaGraph, terminals: Sequence[str]
) -> SteinerScaffold:
    """Union of shortest paths from the first terminal to each other, pruned."""
    terminals = _check_terminals(graph, terminals)
    if len(terminals) == 1:
        return SteinerScaffold.build(terminals, {})
    closure = metric_closure(graph)
    _require_mutually_reachable(closure, terminals)
    first = terminals[0]
    subgraph: dict[EdgeKey, float] = {}
    for other in terminals[1:]:
        path = closure.path(first, other)
        assert path is not None
        for u, v in zip(path, path[1:]):
            subgraph[edge_key(u, v)] = graph.weight(u, v)
    return prune_to_tree(subgraph, terminals)


def baseline_mst_on_terminal_subgraph(
    graph: SchemaGraph, terminals: Sequence[str]
) -> SteinerScaffold:
    """MST restricted to edges with both endpoints terminal; errors if disconnected."""
    terminals = _check_terminals(graph, terminals)
    if len(terminals) == 1:
        return SteinerScaffold.build(terminals, {})
    terminal_set = set(terminals)
    induced = {
        (a, b): c.total
        for (a, b), c in graph.edges.items()
        if a in terminal_set and b in terminal_set
    }
    chosen = _kruskal(terminals, induced)
    if len(chosen) != len(terminals) - 1:
        adjacency: dict[str, list[str]] = {t: [] for t in terminals}
        for a, b in induced:
            adjacency[a].append(b)
            adjacency[b].append(a)
        raise DisconnectedTerminalsError(_connected_groups(adjacency, terminals))
    return SteinerScaffold.build(terminals, {e: induced[e] for e in chosen})


def scaffold_document(scaffold: SteinerScaffold) -> str:
    """Canonical JSON export consumed by the prompt builder and the CLI."""
    doc = {
        "terminals": list(scaffold.terminals),
        "vertices": list(scaffold.vertices),
        "edges": [{"a": a, "b": b, "cost": w} for a, b, w in scaffold.edges],
        "total_cost": scaffold.total_cost,
    }
    return canonical_json(doc)


def load_scaffold_document(text: str) -> SteinerScaffold:
    import json

    doc = json.loads(text)
    return SteinerScaffold(
        terminals=tuple(doc["terminals"]),
        vertices=tuple(doc["vertices"]),
        edges=tuple((e["a"], e["b"], e["cost"]) for e in doc["edges"]),
        total_cost=doc["total_cost"],
    )
