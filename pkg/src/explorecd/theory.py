"""Checks for the degree theorems on AGM networks.

Kept independent of the generators: everything here works from a cover, p and
(optionally) an observed degree vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import CommunityCover


def epsilon_bound(n_min: int, K: int) -> float:
    """Largest size spread the theorems allow: (N_min - 1)/K - 1."""
    return (n_min - 1) / K - 1


def expected_degrees(cover: CommunityCover, p: float) -> np.ndarray:
    """Exact AGM expected degree of every node, sum over u != v of 1-(1-p)^c_uv."""
    c = cover.shared_counts()
    prob = 1.0 - (1.0 - p) ** c
    np.fill_diagonal(prob, 0.0)
    return prob.sum(axis=1)


def binomial_degree_means(cover: CommunityCover, p: float) -> np.ndarray:
    """Per-node sum of (N_Ci - 1) p over the node's communities."""
    sizes = np.array([len(c) for c in cover.communities], dtype=float)
    M = cover.to_matrix().astype(float)
    return M @ ((sizes - 1) * p)


@dataclass
class AssumptionReport:
    checks: dict[str, bool]
    values: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    @property
    def failed(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]

    def summary(self) -> str:
        if self.ok:
            return "all assumptions hold"
        vals = ", ".join(f"{k}={v:.4g}" for k, v in self.values.items())
        return f"failed: {', '.join(self.failed)} ({vals})"


def check_assumptions(cover: CommunityCover, p, eps: float) -> AssumptionReport:
    """Evaluate equal-p, community count, size spread, epsilon bound and multiplicity balance."""
    sizes = np.array([len(c) for c in cover.communities])
    K = len(sizes)
    mult = cover.multiplicity()
    n = cover.n_nodes
    ps = np.atleast_1d(np.asarray(p, dtype=float))
    checks: dict[str, bool] = {}
    values: dict[str, float] = {}

    checks["equal_p"] = bool(np.all(ps == ps[0]) and 0 < ps[0] < 1)
    checks["k_at_least_2"] = K >= 2
    checks["all_nodes_covered"] = bool((mult >= 1).all())
    if K == 0:
        return AssumptionReport(checks, values)
    n_min, n_max = int(sizes.min()), int(sizes.max())
    values.update(n_min=n_min, n_max=n_max, eps=eps, eps_bound=epsilon_bound(n_min, K))
    checks["size_spread"] = n_max - n_min <= eps
    checks["eps_bound"] = eps <= epsilon_bound(n_min, K) + 1e-12

    counts = np.array([(mult == i).sum() for i in range(1, K + 1)])
    frac1 = counts[0] / n
    values["n1_fraction"] = frac1
    checks["n1_fraction"] = frac1 <= 2 / 3 + 1e-12

    ed = expected_degrees(cover, float(ps[0]))
    class_mass = np.array([ed[mult == i].sum() for i in range(1, K + 1)])
    # E[D|A_i] N_i is the summed expected degree of the class
    values["single_mass"] = class_mass[0]
    values["multi_mass"] = class_mass[1:].sum()
    checks["degree_balance"] = class_mass[0] >= class_mass[1:].sum() - 1e-9
    return AssumptionReport(checks, values)


@dataclass
class DegreeOrdering:
    class_means: dict[int, float]
    global_mean: float
    pairwise: dict[tuple[int, int], bool]
    above_global: dict[int, bool]

    @property
    def ok(self) -> bool:
        return all(self.pairwise.values()) and all(self.above_global.values())


def degree_ordering(degrees: np.ndarray, multiplicity: np.ndarray) -> DegreeOrdering:
    """Empirical class means for both degree theorems.

    Pairwise: mean degree of multiplicity M >= that of M' for all M > M'.
    Above global: every class with M >= 2 has mean degree >= the overall mean.
    """
    degrees = np.asarray(degrees, dtype=float)
    present = sorted(int(m) for m in np.unique(multiplicity) if m >= 1)
    means = {m: float(degrees[multiplicity == m].mean()) for m in present}
    gm = float(degrees.mean())
    pairwise = {(a, b): means[a] >= means[b] for a in present for b in present if a > b}
    above = {m: means[m] >= gm for m in present if m >= 2}
    return DegreeOrdering(means, gm, pairwise, above)
