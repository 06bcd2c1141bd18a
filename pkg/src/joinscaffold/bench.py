"""Benchmark harness: random graphs, planner comparison, reproducible seeds.

Graphs come from a SplitMix-style 64-bit generator so runs reproduce exactly
from a printed seed without any external RNG dependency. Each seeded instance
is solved by the 2-approximation, the exact oracle, and the two baseline
planners; the harness reports per-planner mean cost, optimality ratio against
the oracle, and failure rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .canonical import canonical_json
from .costs import SchemaGraph
from .steiner import (
    SteinerError,
    baseline_mst_on_terminal_subgraph,
    baseline_shortest_path_combination,
    exact_steiner_oracle,
    solve_steiner,
)

_MASK = (1 << 64) - 1


class SplitMix64:
    """Deterministic 64-bit generator (SplitMix64 finalizer)."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] (modulo bias is irrelevant here)."""
        return lo + self.next_u64() % (hi - lo + 1)

    def sample(self, items: Sequence, k: int) -> list:
        pool = list(items)
        out = []
        for _ in range(k):
            out.append(pool.pop(self.randint(0, len(pool) - 1)))
        return out


def random_connected_graph(
    n: int, rng: SplitMix64, extra_edge_prob: float = 0.4
) -> SchemaGraph:
    """Random spanning tree plus extra edges, weights uniform in [0, 1].

    Weights are rounded to 6 decimals so exported documents stay short and the
    exact-total accumulation works over tidy decimal values.
    """
    names = [f"v{i:02d}" for i in range(n)]
    weights: dict[tuple[str, str], float] = {}
    for i in range(1, n):
        j = rng.randint(0, i - 1)
        weights[(names[j], names[i])] = round(rng.next_float(), 6)
    for i in range(n):
        for j in range(i + 1, n):
            key = (names[i], names[j])
            if key not in weights and rng.next_float() < extra_edge_prob:
                weights[key] = round(rng.next_float(), 6)
    return SchemaGraph.from_weights(names, weights)


def random_terminals(graph: SchemaGraph, rng: SplitMix64, max_terminals: int = 5) -> list[str]:
    k = rng.randint(1, min(max_terminals, len(graph.vertices)))
    return sorted(rng.sample(graph.vertices, k))


def hub_family_graph(rng: SplitMix64) -> tuple[SchemaGraph, list[str]]:
    """4-node family: three terminals around a cheap hub, expensive direct edges.

    Hub edges draw from [0.05, 0.3] and direct terminal-terminal edges from
    [0.6, 1.0], so routing through the hub is always strictly cheaper than any
    terminal-only tree. Direct edges are dropped with probability 1/4, which
    exercises the disconnected-baseline failure path.
    """
    terminals = ["ta", "tb", "tc"]
    weights: dict[tuple[str, str], float] = {}
    for t in terminals:
        weights[("hub", t)] = round(0.05 + 0.25 * rng.next_float(), 6)
    for i, a in enumerate(terminals):
        for b in terminals[i + 1 :]:
            if rng.next_float() < 0.75:
                weights[(a, b)] = round(0.6 + 0.4 * rng.next_float(), 6)
    return SchemaGraph.from_weights(["hub"] + terminals, weights), terminals


PLANNERS = ("kmb", "oracle", "shortest_path_combination", "mst_on_terminals")


@dataclass(frozen=True)
class BenchRow:
    seed: int
    nodes: int
    terminals: tuple[str, ...]
    costs: dict[str, Optional[float]]  # planner -> cost (None on failure)

    @property
    def ratio(self) -> Optional[float]:
        kmb, oracle = self.costs.get("kmb"), self.costs.get("oracle")
        if kmb is None or oracle is None:
            return None
        if oracle == 0.0:
            # both planners found a zero-cost tree (e.g. single terminal)
            return 1.0 if kmb == 0.0 else None
        return kmb / oracle


def run_bench(
    seeds: int,
    nodes: int,
    max_terminals: int = 5,
    hub_family: bool = False,
    base_seed: int = 0,
) -> list[BenchRow]:
    rows = []
    for s in range(seeds):
        rng = SplitMix64(base_seed + s)
        if hub_family:
            graph, terminals = hub_family_graph(rng)
        else:
            graph = random_connected_graph(nodes, rng)
            terminals = random_terminals(graph, rng, max_terminals)
        costs: dict[str, Optional[float]] = {}
        for name, planner in (
            ("kmb", solve_steiner),
            ("oracle", exact_steiner_oracle),
            ("shortest_path_combination", baseline_shortest_path_combination),
            ("mst_on_terminals", baseline_mst_on_terminal_subgraph),
        ):
            try:
                costs[name] = planner(graph, terminals).total_cost
            except SteinerError:
                costs[name] = None
        rows.append(BenchRow(base_seed + s, len(graph.vertices), tuple(terminals), costs))
    return rows


def summarize(rows: Sequence[BenchRow]) -> dict:
    summary: dict = {"instances": len(rows), "planners": {}}
    for planner in PLANNERS:
        values = [r.costs[planner] for r in rows if r.costs.get(planner) is not None]
        failures = sum(1 for r in rows if r.costs.get(planner) is None)
        entry = {
            "mean_cost": round(sum(values) / len(values), 6) if values else None,
            "failure_rate": round(failures / len(rows), 6) if rows else 0.0,
        }
        if planner == "kmb":
            ratios = [r.ratio for r in rows if r.ratio is not None]
            entry["mean_optimality_ratio"] = (
                round(sum(ratios) / len(ratios), 6) if ratios else None
            )
            entry["max_optimality_ratio"] = round(max(ratios), 6) if ratios else None
        summary["planners"][planner] = entry
    return summary


def bench_document(rows: Sequence[BenchRow]) -> str:
    doc = {
        "summary": summarize(rows),
        "rows": [
            {
                "seed": r.seed,
                "nodes": r.nodes,
                "terminals": list(r.terminals),
                "costs": {k: r.costs[k] for k in PLANNERS},
                "ratio": r.ratio,
            }
            for r in rows
        ],
    }
    return canonical_json(doc)
