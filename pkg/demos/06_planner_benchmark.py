"""Compare the scaffold planner against the exact oracle and two baselines.

Random graphs come from a seeded SplitMix generator, so every run of this
script prints identical numbers. The ratio column is KMB cost over the exact
optimum; the guarantee is that it never exceeds 2.
"""

from joinscaffold.bench import run_bench, summarize

rows = run_bench(seeds=30, nodes=8, max_terminals=5, base_seed=0)
summary = summarize(rows)

print(f"{'seed':>4s} {'kmb':>9s} {'oracle':>9s} {'ratio':>7s}")
for row in rows[:10]:
    print(
        f"{row.seed:4d} {row.costs['kmb']:9.4f} {row.costs['oracle']:9.4f} "
        f"{row.ratio:7.4f}"
    )
print("  ... (first 10 of 30 seeds)")

print("\nper-planner summary over all seeds:")
for planner, stats in summary["planners"].items():
    line = f"  {planner:28s} mean cost {stats['mean_cost']}"
    if "mean_optimality_ratio" in stats:
        line += (
            f", mean ratio {stats['mean_optimality_ratio']}"
            f", max ratio {stats['max_optimality_ratio']}"
        )
    if stats["failure_rate"]:
        line += f", failure rate {stats['failure_rate']}"
    print(line)

# The hub family is the adversarial fixture for the terminal-only baseline:
# the cheap route always runs through a bridge vertex it cannot use.
hub_rows = run_bench(seeds=20, nodes=4, hub_family=True)
hub_summary = summarize(hub_rows)
print("\nhub family (terminal-only MST must lose or fail):")
print("  kmb mean cost:", hub_summary["planners"]["kmb"]["mean_cost"])
print("  mst_on_terminals mean cost:", hub_summary["planners"]["mst_on_terminals"]["mean_cost"])
print("  mst_on_terminals failure rate:", hub_summary["planners"]["mst_on_terminals"]["failure_rate"])
