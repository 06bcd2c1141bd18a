"""Edge costs and the weighted schema graph.

Every pair of tables gets an edge iff a foreign key links them or their best
column-pair similarity reaches the admission threshold ``tau``. Each admitted
edge carries three [0, 1] cost components blended into a total:

    total = alpha * connect + beta * semantic + gamma * statistical

* connect — FK indicator plus name and type dissimilarity of the closest
  column pair, each internal term weighted equally;
* semantic — one minus the cosine of the two tables' mean name embeddings
  (table name averaged with all column names);
* statistical — one minus join selectivity and one minus correlation
  strength, equally weighted, neutral 0.5 when unprofiled.

Column-pair similarity is ``sim_alpha * cos + (1 - sim_alpha) * type_match``
with the cosine clamped to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np

from .canonical import canonical_json
from .embedding import EmbeddingProvider, cosine01, default_provider
from .profiling import NEUTRAL, JoinPair, StatsProfile
from .schema import ColumnDef, Schema, TableDef

EdgeKey = tuple[str, str]


def edge_key(a: str, b: str) -> EdgeKey:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class CostWeights:
    """Blend weights plus similarity and admission parameters."""

    alpha: float = 0.4
    beta: float = 0.4
    gamma: float = 0.2
    w1: float = 1.0 / 3.0
    w2: float = 1.0 / 3.0
    w3: float = 1.0 / 3.0
    w4: float = 0.5
    w5: float = 0.5
    sim_alpha: float = 0.85
    tau: float = 0.75

    def __post_init__(self) -> None:
        weights = (
            self.alpha, self.beta, self.gamma,
            self.w1, self.w2, self.w3, self.w4, self.w5,
            self.sim_alpha, self.tau,
        )
        if any(not 0.0 <= w <= 1.0 for w in weights):
            raise ValueError("all weights must lie in [0,1]")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-9:
            raise ValueError("alpha+beta+gamma must equal 1")
        if abs(self.w1 + self.w2 + self.w3 - 1.0) > 1e-9:
            raise ValueError("w1+w2+w3 must equal 1")
        if abs(self.w4 + self.w5 - 1.0) > 1e-9:
            raise ValueError("w4+w5 must equal 1")


DEFAULT_WEIGHTS = CostWeights()


@dataclass(frozen=True)
class EdgeCost:
    connect: float
    semantic: float
    statistical: float
    total: float
    has_fk: bool
    best_column_pair: tuple[str, str]

    def __post_init__(self) -> None:
        # Solver contract is non-negative weights; engine-built edges also
        # stay within [0,1] because every component is a convex combination.
        for v in (self.connect, self.semantic, self.statistical, self.total):
            if not (math.isfinite(v) and v >= -1e-12):
                raise ValueError(f"cost component {v} must be finite and non-negative")


def type_match(ci: ColumnDef, cj: ColumnDef) -> float:
    return 1.0 if ci.declared_type == cj.declared_type else 0.0


def column_pair_similarity(
    ci: ColumnDef,
    cj: ColumnDef,
    weights: CostWeights = DEFAULT_WEIGHTS,
    provider: Optional[EmbeddingProvider] = None,
) -> float:
    provider = provider or default_provider()
    cos = cosine01(provider.embed(ci.name), provider.embed(cj.name))
    return weights.sim_alpha * cos + (1.0 - weights.sim_alpha) * type_match(ci, cj)


def table_similarity(
    ti: TableDef,
    tj: TableDef,
    weights: CostWeights = DEFAULT_WEIGHTS,
    provider: Optional[EmbeddingProvider] = None,
) -> tuple[float, tuple[str, str]]:
    """Max column-pair similarity; ties go to the lexicographically first pair."""
    provider = provider or default_provider()
    best = -1.0
    best_pair = ("", "")
    for ci in sorted(ti.columns, key=lambda c: c.name):
        for cj in sorted(tj.columns, key=lambda c: c.name):
            s = column_pair_similarity(ci, cj, weights, provider)
            if s > best:
                best = s
                best_pair = (ci.name, cj.name)
    return best, best_pair


def _best_name_pair(
    ti: TableDef, tj: TableDef, provider: EmbeddingProvider
) -> tuple[float, ColumnDef, ColumnDef]:
    """Max name-cosine column pair (type term dropped), lexicographic ties."""
    best = -1.0
    pair: tuple[ColumnDef, ColumnDef] | None = None
    for ci in sorted(ti.columns, key=lambda c: c.name):
        for cj in sorted(tj.columns, key=lambda c: c.name):
            cos = cosine01(provider.embed(ci.name), provider.embed(cj.name))
            if cos > best:
                best = cos
                pair = (ci, cj)
    assert pair is not None
    return best, pair[0], pair[1]


def connection_cost(
    ti: TableDef,
    tj: TableDef,
    schema: Schema,
    weights: CostWeights = DEFAULT_WEIGHTS,
    provider: Optional[EmbeddingProvider] = None,
) -> float:
    provider = provider or default_provider()
    not_fk = 0.0 if schema.has_fk(ti.name, tj.name) else 1.0
    sim_name, ci, cj = _best_name_pair(ti, tj, provider)
    if type_match(ci, cj) == 1.0:
        sim_type = 1.0
    else:
        sim_type = (
            1.0
            if any(
                type_match(a, b) == 1.0
                for a in ti.columns
                for b in tj.columns
            )
            else 0.0
        )
    return weights.w1 * not_fk + weights.w2 * (1.0 - sim_name) + weights.w3 * (1.0 - sim_type)


def table_embedding(t: TableDef, provider: Optional[EmbeddingProvider] = None) -> np.ndarray:
    """Mean of the table-name embedding and every column-name embedding."""
    provider = provider or default_provider()
    vectors = [provider.embed(t.name)] + [provider.embed(c.name) for c in t.columns]
    return np.mean(np.stack(vectors), axis=0)


def semantic_cost(
    ti: TableDef,
    tj: TableDef,
    provider: Optional[EmbeddingProvider] = None,
) -> float:
    provider = provider or default_provider()
    return 1.0 - cosine01(table_embedding(ti, provider), table_embedding(tj, provider))


def statistical_cost(
    ti: TableDef,
    tj: TableDef,
    stats: Optional[StatsProfile],
    weights: CostWeights = DEFAULT_WEIGHTS,
) -> float:
    pair = stats.table_pair_stats(ti.name, tj.name) if stats is not None else None
    sel = pair.selectivity if pair is not None else NEUTRAL
    corr = pair.correlation if pair is not None else NEUTRAL
    return weights.w4 * (1.0 - sel) + weights.w5 * (1.0 - corr)


@dataclass(frozen=True)
class SchemaGraph:
    """Weighted undirected graph over table names. No self-loops, no parallels."""

    vertices: tuple[str, ...]
    edges: dict[EdgeKey, EdgeCost]
    _adjacency: dict[str, tuple[str, ...]] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        vset = set(self.vertices)
        adj: dict[str, list[str]] = {v: [] for v in self.vertices}
        for (a, b), cost in self.edges.items():
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if (a, b) != edge_key(a, b):
                raise ValueError(f"edge key {(a, b)} not in canonical order")
            if a not in vset or b not in vset:
                raise ValueError(f"edge {(a, b)} references unknown vertex")
            if not math.isfinite(cost.total) or cost.total < 0.0:
                raise ValueError(f"edge {(a, b)} has invalid weight {cost.total}")
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(
            self, "_adjacency", {v: tuple(sorted(ns)) for v, ns in adj.items()}
        )

    @classmethod
    def from_weights(
        cls, vertices: Iterable[str], weights: Mapping[tuple[str, str], float]
    ) -> "SchemaGraph":
        """Build a synthetic graph where every component equals the edge weight."""
        edges = {}
        for (a, b), w in weights.items():
            edges[edge_key(a, b)] = EdgeCost(
                connect=w, semantic=w, statistical=w, total=w,
                has_fk=False, best_column_pair=("", ""),
            )
        return cls(tuple(sorted(set(vertices))), edges)

    def has_edge(self, a: str, b: str) -> bool:
        return edge_key(a, b) in self.edges

    def edge(self, a: str, b: str) -> EdgeCost:
        return self.edges[edge_key(a, b)]

    def weight(self, a: str, b: str) -> float:
        return self.edges[edge_key(a, b)].total

    def neighbors(self, v: str) -> tuple[str, ...]:
        return self._adjacency[v]

    def sorted_edges(self) -> list[tuple[str, str, EdgeCost]]:
        return [(a, b, c) for (a, b), c in sorted(self.edges.items())]


def candidate_join_pairs(
    schema: Schema,
    weights: CostWeights = DEFAULT_WEIGHTS,
    provider: Optional[EmbeddingProvider] = None,
) -> list[JoinPair]:
    """Join-column pairs the edge rule admits: FK columns, else best column pair."""
    provider = provider or default_provider()
    pairs: list[JoinPair] = []
    seen: set[JoinPair] = set()
    names = sorted(schema.table_names)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            fks = schema.fk_between(a, b)
            if fks:
                for fk in fks:
                    key = (
                        (fk.from_table, fk.from_column, fk.to_table, fk.to_column)
                        if (fk.from_table, fk.from_column) <= (fk.to_table, fk.to_column)
                        else (fk.to_table, fk.to_column, fk.from_table, fk.from_column)
                    )
                    if key not in seen:
                        seen.add(key)
                        pairs.append(key)
                continue
            s, (ca, cb) = table_similarity(schema.table(a), schema.table(b), weights, provider)
            if s >= weights.tau:
                key = (a, ca, b, cb) if (a, ca) <= (b, cb) else (b, cb, a, ca)
                if key not in seen:
                    seen.add(key)
                    pairs.append(key)
    return pairs


def build_schema_graph(
    schema: Schema,
    stats: Optional[StatsProfile] = None,
    weights: CostWeights = DEFAULT_WEIGHTS,
    provider: Optional[EmbeddingProvider] = None,
    cost_overrides: Optional[Mapping[tuple[str, str], float]] = None,
    excluded_edges: Iterable[tuple[str, str]] = (),
) -> SchemaGraph:
    """Assemble the weighted schema graph.

    ``cost_overrides`` maps table pairs to pinned total costs (every component
    is set to the pinned value, which keeps the blend identity intact); pairs
    listed there are always admitted. ``excluded_edges`` drops pairs from the
    result regardless of admission — the re-planning loop's constraint channel.
    """
    provider = provider or default_provider()
    overrides = {edge_key(a, b): c for (a, b), c in (cost_overrides or {}).items()}
    excluded = {edge_key(a, b) for a, b in excluded_edges}
    vertices = tuple(sorted(schema.table_names))
    edges: dict[EdgeKey, EdgeCost] = {}
    for i, a in enumerate(vertices):
        for b in vertices[i + 1 :]:
            key = (a, b)
            if key in excluded:
                continue
            ti, tj = schema.table(a), schema.table(b)
            has_fk = schema.has_fk(a, b)
            s, best_pair = table_similarity(ti, tj, weights, provider)
            admitted = has_fk or s >= weights.tau or key in overrides
            if not admitted:
                continue
            if key in overrides:
                c = overrides[key]
                edges[key] = EdgeCost(
                    connect=c, semantic=c, statistical=c, total=c,
                    has_fk=has_fk, best_column_pair=best_pair,
                )
                continue
            connect = connection_cost(ti, tj, schema, weights, provider)
            sem = semantic_cost(ti, tj, provider)
            stat = statistical_cost(ti, tj, stats, weights)
            total = weights.alpha * connect + weights.beta * sem + weights.gamma * stat
            edges[key] = EdgeCost(
                connect=connect, semantic=sem, statistical=stat, total=total,
                has_fk=has_fk, best_column_pair=best_pair,
            )
    return SchemaGraph(vertices, edges)


def graph_document(graph: SchemaGraph) -> str:
    """Canonical, diffable JSON export of vertices and per-edge cost breakdown."""
    doc = {
        "vertices": list(graph.vertices),
        "edges": [
            {
                "a": a,
                "b": b,
                "connect": cost.connect,
                "semantic": cost.semantic,
                "statistical": cost.statistical,
                "total": cost.total,
                "has_fk": cost.has_fk,
            }
            for a, b, cost in graph.sorted_edges()
        ],
    }
    return canonical_json(doc)


def load_graph_document(text: str) -> SchemaGraph:
    """Parse a graph document back into a SchemaGraph."""
    import json

    doc = json.loads(text)
    edges = {}
    for e in doc["edges"]:
        edges[edge_key(e["a"], e["b"])] = EdgeCost(
            connect=e["connect"],
            semantic=e["semantic"],
            statistical=e["statistical"],
            total=e["total"],
            has_fk=bool(e.get("has_fk", False)),
            best_column_pair=("", ""),
        )
    return SchemaGraph(tuple(sorted(doc["vertices"])), edges)
