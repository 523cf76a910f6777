"""Query-node selection: affiliation-guided, random and depth-first."""
from __future__ import annotations

import numpy as np

from .graph import ExploredState


class ExhaustedError(RuntimeError):
    """Every node has already been queried."""


def _unqueried(state: ExploredState) -> np.ndarray:
    cand = state.unqueried()
    if len(cand) == 0:
        raise ExhaustedError("all nodes have been queried")
    return cand


def cosine_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity; any zero row gives similarity 0."""
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    S = A @ B.T
    denom = np.outer(na, nb)
    return np.divide(S, denom, out=np.zeros_like(S, dtype=float), where=denom > 0)


def metacode_scores(F: np.ndarray, queried: list[int], lam: float,
                    strict_mean: bool = False) -> np.ndarray:
    """Score every node: ||F_v||_1 + lam * (1 - sum_{u in S_t} sim(F_v, F_u) / (t + 1)).

    With ``strict_mean`` the divisor is t (a plain average) instead of t + 1.
    """
    F = np.asarray(F, dtype=float)
    t = len(queried)
    l1 = np.abs(F).sum(axis=1)
    if t == 0:
        return l1 + lam
    sims = cosine_matrix(F, F[queried]).sum(axis=1)
    div = t if strict_mean else t + 1
    return l1 + lam * (1.0 - sims / div)


def select_metacode(F: np.ndarray, state: ExploredState, lam: float,
                    strict_mean: bool = False) -> int:
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    cand = _unqueried(state)
    scores = metacode_scores(F, state.queried, lam, strict_mean)[cand]
    # argmax takes the first maximum, cand is ascending -> smallest id wins ties
    return int(cand[np.argmax(scores)])


def select_random(state: ExploredState, rng: np.random.Generator) -> int:
    cand = _unqueried(state)
    return int(cand[rng.integers(len(cand))])


class DfsFrontier:
    """Stack of discovered-but-unqueried nodes for depth-first exploration."""

    def __init__(self):
        self.stack: list[int] = []
        self.restarts = 0

    def push_neighbors(self, state: ExploredState, neighbors) -> None:
        for w in sorted(neighbors):
            if not state.is_queried(w):
                self.stack.append(int(w))


def select_dfs(state: ExploredState, frontier: DfsFrontier, rng: np.random.Generator) -> int:
    """Pop the most recently discovered unqueried node; restart randomly when empty.

    Call ``frontier.push_neighbors`` with each query's result to feed the stack.
    """
    _unqueried(state)
    while frontier.stack:
        v = frontier.stack.pop()
        if not state.is_queried(v):
            return v
    frontier.restarts += 1
    return select_random(state, rng)
