"""Explore a planted overlapping-community graph and watch recovery improve with budget.

    python demos/planted_run.py [seed]
"""
import sys

from explorecd import AgmSpec, RunConfig, exploration_curve, generate_agm, run_metacode

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
bundle = generate_agm(AgmSpec(n_nodes=200, n_communities=4, p=0.1, seed=seed))
print(f"hidden graph: {bundle.n_nodes} nodes, {bundle.hidden.n_edges} edges, {bundle.truth.K} communities")

report = run_metacode(bundle, RunConfig(budget_pct=0.4), seed=seed)
rs = exploration_curve(bundle.hidden.fresh(), "random", report.budget, seed)

print(f"{'budget':>7} {'NMI':>6} {'AvgF1':>6} {'AUC':>6} {'explored':>9} {'random':>7}")
for c in report.checkpoints:
    if c["t"] == 0:
        continue
    print(f"{c['pct']:>7.0%} {c['nmi']:6.3f} {c['avg_f1']:6.3f} {c['auc']:6.3f} {c['n_ex']:>9} {rs[c['t'] - 1]:>7}")
print(f"oracle queries: {report.notes['oracle_queries']}, truth reads: {report.notes['truth_accesses']}")
