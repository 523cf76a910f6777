"""Overlapping community detection on networks whose edges are revealed by node queries."""
from .data import CommunityCover, DatasetBundle, load_bundle, load_ego_snap, save_bundle
from .generators import AgmSpec, generate_agm, generate_er
from .graph import ExploredState, HiddenNetwork, WorkingGraph, query_node
from .metrics import avg_f1, evaluate, overlapping_nmi
from .runner import (RunConfig, RunReport, bench_scaling, exploration_curve, run_ablation, run_metacode,
                     run_metacode_sim, verify_theorems)

__version__ = "0.1.0"

__all__ = [
    "AgmSpec", "CommunityCover", "DatasetBundle", "ExploredState", "HiddenNetwork", "RunConfig", "RunReport",
    "WorkingGraph", "avg_f1", "bench_scaling", "evaluate", "exploration_curve", "generate_agm", "generate_er",
    "load_bundle", "load_ego_snap", "overlapping_nmi", "query_node", "run_ablation", "run_metacode",
    "run_metacode_sim", "save_bundle", "verify_theorems",
]
