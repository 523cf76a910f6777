"""Cover agreement (overlapping NMI, AvgF1) and adjacency AUC."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from .data import CommunityCover
from .graph import TruthHandle, WorkingGraph


def _check(truth: CommunityCover, detected: CommunityCover) -> None:
    if truth.K == 0 or detected.K == 0:
        raise ValueError("covers must contain at least one community")
    if truth.n_nodes != detected.n_nodes:
        raise ValueError(f"covers span different node sets ({truth.n_nodes} vs {detected.n_nodes})")


def _h(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return -np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)


def _overlaps(truth: CommunityCover, detected: CommunityCover):
    A = truth.to_matrix().astype(np.int64)
    B = detected.to_matrix().astype(np.int64)
    return A.T @ B, A.sum(axis=0), B.sum(axis=0)


def _conditional(n11, sx, sy, n):
    """Best-match H(X_k|Y) per row community, entropies in nats."""
    d = n11 / n
    c = (sx[:, None] - n11) / n           # X=1, Y=0
    b = (sy[None, :] - n11) / n           # X=0, Y=1
    a = 1.0 - b - c - d                   # X=0, Y=0
    valid = _h(a) + _h(d) >= _h(b) + _h(c)
    joint = _h(a) + _h(b) + _h(c) + _h(d)
    py = sy / n
    hy = _h(py) + _h(1 - py)
    cond = joint - hy[None, :]
    px = sx / n
    hx = _h(px) + _h(1 - px)
    cond = np.where(valid, cond, hx[:, None])
    return np.minimum(cond.min(axis=1), hx), hx


def _ratio(cond: float, h: float, h_other: float) -> float:
    if h > 0:
        return cond / h
    # a side with no entropy carries no information unless both sides are trivial
    return 0.0 if h_other == 0 else 1.0


def overlapping_nmi(truth: CommunityCover, detected: CommunityCover) -> float:
    """NMI = 1 - (H(X|Y)/H(X) + H(Y|X)/H(Y)) / 2 over binary community variables."""
    _check(truth, detected)
    n = truth.n_nodes
    n11, sx, sy = _overlaps(truth, detected)
    cxy, hx = _conditional(n11, sx, sy, n)
    cyx, hy = _conditional(n11.T, sy, sx, n)
    HX, HY = float(hx.sum()), float(hy.sum())
    val = 1.0 - 0.5 * (_ratio(float(cxy.sum()), HX, HY) + _ratio(float(cyx.sum()), HY, HX))
    return float(min(1.0, max(0.0, val)))


def f1_matrix(truth: CommunityCover, detected: CommunityCover) -> np.ndarray:
    n11, sx, sy = _overlaps(truth, detected)
    return 2.0 * n11 / (sx[:, None] + sy[None, :])


def avg_f1(truth: CommunityCover, detected: CommunityCover) -> float:
    _check(truth, detected)
    F1 = f1_matrix(truth, detected)
    return float(0.5 * (F1.max(axis=1).mean() + F1.max(axis=0).mean()))


def pair_index(n: int, u, v):
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    return u * n - u * (u + 1) // 2 + (v - u - 1)


def pair_scores(working: WorkingGraph, scores=None, queried_mask=None) -> np.ndarray:
    """Prediction for every pair u < v: 1 on working-graph edges, 0 elsewhere,
    overwritten by the similarity score on uncertain pairs when available."""
    n = working.n_nodes
    out = np.zeros(n * (n - 1) // 2)
    ea = working.edge_array()
    if len(ea):
        out[pair_index(n, ea[:, 0], ea[:, 1])] = 1.0
    if scores is not None and len(scores.psi):
        keep = np.ones(len(scores.psi), dtype=bool)
        if queried_mask is not None:
            keep = ~(queried_mask[scores.u] | queried_mask[scores.v])
        out[pair_index(n, scores.u[keep], scores.v[keep])] = scores.psi[keep]
        if len(working.explored):
            ex = np.array(sorted(working.explored))
            out[pair_index(n, ex[:, 0], ex[:, 1])] = 1.0
    return out


def auc_from_scores(labels: np.ndarray, scores: np.ndarray) -> float:
    """Mann-Whitney AUC with midranks for ties; NaN when one class is empty."""
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def adjacency_auc(working: WorkingGraph, truth: TruthHandle, scores=None, queried_mask=None) -> float:
    n = working.n_nodes
    labels = np.zeros(n * (n - 1) // 2, dtype=bool)
    te = np.array(sorted(truth.edges()), dtype=np.int64).reshape(-1, 2)
    if len(te):
        labels[pair_index(n, te[:, 0], te[:, 1])] = True
    return auc_from_scores(labels, pair_scores(working, scores, queried_mask))


@dataclass
class MetricReport:
    nmi: float
    avg_f1: float
    auc: float | None
    matches: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["auc"] is not None and math.isnan(d["auc"]):
            d["auc"] = None
        return d


def evaluate(truth: CommunityCover, detected: CommunityCover, working: WorkingGraph | None = None,
             truth_handle: TruthHandle | None = None, scores=None, queried_mask=None) -> MetricReport:
    F1 = f1_matrix(truth, detected)
    matches = [{"truth": i, "detected": int(F1[i].argmax()), "f1": float(F1[i].max())}
               for i in range(truth.K)]
    auc = None
    if working is not None and truth_handle is not None:
        auc = adjacency_auc(working, truth_handle, scores, queried_mask)
    return MetricReport(overlapping_nmi(truth, detected), avg_f1(truth, detected), auc, matches)
