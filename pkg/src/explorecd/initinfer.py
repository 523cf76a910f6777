"""Metadata-only initial network: Boolean multi-assignment clustering + AGM sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .generators import sample_agm_edges
from .graph import Edge


@dataclass
class MacResult:
    C: np.ndarray  # N x K, {0,1}
    U: np.ndarray  # K x D, {0,1}
    error: int
    history: list[int]


def boolean_product(C: np.ndarray, U: np.ndarray) -> np.ndarray:
    """(C (x) U)_ud = OR_k (C_uk AND U_kd)."""
    return (C.astype(np.int64) @ U.astype(np.int64)) > 0


def hamming_error(X: np.ndarray, C: np.ndarray, U: np.ndarray) -> int:
    return int((boolean_product(C, U) != X.astype(bool)).sum())


def _jaccard(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    D = cdist(A.astype(bool), B.astype(bool), metric="jaccard")
    return np.nan_to_num(D, nan=0.0)


def kmedoids_jaccard(X: np.ndarray, K: int, rng: np.random.Generator, n_iter: int = 20) -> np.ndarray:
    """Indices of K medoid rows (k-means++ seeding, alternating updates)."""
    n = X.shape[0]
    D = _jaccard(X, X)
    medoids = [int(rng.integers(n))]
    for _ in range(1, K):
        d = D[:, medoids].min(axis=1) ** 2
        d[medoids] = 0.0
        if d.sum() > 0:
            nxt = int(rng.choice(n, p=d / d.sum()))
        else:
            free = np.setdiff1d(np.arange(n), medoids)
            nxt = int(rng.choice(free))
        medoids.append(nxt)
    medoids = np.array(medoids)
    for _ in range(n_iter):
        labels = D[:, medoids].argmin(axis=1)
        new = medoids.copy()
        for k in range(K):
            members = np.flatnonzero(labels == k)
            if len(members) == 0:
                continue
            cost = D[np.ix_(members, members)].sum(axis=1)
            new[k] = members[np.argmin(cost)]
        if len(set(new.tolist())) < K or np.array_equal(new, medoids):
            break
        medoids = new
    return medoids


def _update_memberships(X: np.ndarray, C: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Greedy per-row bit toggles while the row's Hamming error strictly drops.

    Rows are independent given U; every row takes its best single toggle per
    sweep (smallest k on ties) until no toggle helps.
    """
    Xb = X.astype(bool)
    Ui = U.astype(np.int64)
    C = C.astype(bool).copy()
    K = U.shape[0]
    active = np.ones(X.shape[0], dtype=bool)
    while active.any():
        rows = np.flatnonzero(active)
        cover = C[rows].astype(np.int64) @ Ui
        cur = ((cover > 0) != Xb[rows]).sum(axis=1)
        best_err = cur.copy()
        best_k = np.full(len(rows), -1)
        for k in range(K):
            on = C[rows, k]
            delta = np.where(on[:, None], -Ui[k], Ui[k])
            err = (((cover + delta) > 0) != Xb[rows]).sum(axis=1)
            better = err < best_err
            best_err[better] = err[better]
            best_k[better] = k
        moved = best_k >= 0
        C[rows[moved], best_k[moved]] ^= True
        active[rows[~moved]] = False
    return C


def _update_prototypes(X: np.ndarray, C: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Coordinate-wise exact test: U_kd = 1 iff it lowers the total error."""
    Xb = X.astype(bool)
    Ci = C.astype(np.int64)
    U = U.astype(bool).copy()
    cover = Ci @ U.astype(np.int64)
    for k in range(U.shape[0]):
        members = Ci[:, k].astype(bool)
        if not members.any():
            continue
        others = cover[members] - np.outer(np.ones(members.sum(), dtype=np.int64), U[k].astype(np.int64))
        x = Xb[members]
        err_off = ((others > 0) != x).sum(axis=0)
        err_on = (True != x).sum(axis=0)
        new = err_on < err_off
        cover[members] = others + new.astype(np.int64)
        U[k] = new
    return U


def mac_decompose(X: np.ndarray, K: int, seed: int = 0, max_rounds: int = 20,
                  n_init: int = 3) -> MacResult:
    """Boolean decomposition X ~ C (x) U minimising the Hamming error.

    Alternates greedy membership updates and exact prototype updates from
    ``n_init`` k-medoid starts, keeping the best. The error never rises
    between rounds; empty prototypes are reseeded, and nodes left with no
    community get their single best one at the end.
    """
    X = np.asarray(X).astype(bool)
    n, d = X.shape
    if K < 1:
        raise ValueError("K must be >= 1")
    if K > n:
        raise ValueError(f"K={K} exceeds the number of nodes N={n}")
    if n == 0 or d == 0:
        raise ValueError("feature matrix is empty")
    rng = np.random.default_rng(seed)
    best: MacResult | None = None
    for _ in range(n_init):
        res = _mac_single(X, K, rng, max_rounds)
        if best is None or res.error < best.error:
            best = res
    return best


def _mac_single(X: np.ndarray, K: int, rng: np.random.Generator, max_rounds: int) -> MacResult:
    n = X.shape[0]
    med = kmedoids_jaccard(X, K, rng)
    U = X[med].copy()
    labels = _jaccard(X, U).argmin(axis=1)
    C = np.zeros((n, K), dtype=bool)
    C[np.arange(n), labels] = True
    history = [hamming_error(X, C, U)]
    for _ in range(max_rounds):
        C_new = _update_memberships(X, C, U)
        U_new = _update_prototypes(X, C_new, U)
        for k in np.flatnonzero(~U_new.any(axis=1)):
            # an empty prototype contributes nothing, so reseeding it is error-neutral
            C_new[:, k] = False
            resid = (boolean_product(C_new, U_new) != X).sum(axis=1)
            src = X[int(np.argmax(resid))]
            if src.any():
                U_new[k] = src
            else:
                U_new[k, int(np.argmax(X.sum(axis=0)))] = True
        history.append(hamming_error(X, C_new, U_new))
        changed = not (np.array_equal(C_new, C) and np.array_equal(U_new, U))
        C, U = C_new, U_new
        if not changed:
            break
    C = _fill_empty(X, C, U)
    U_fit = _update_prototypes(X, C, U)
    keep = ~U_fit.any(axis=1)
    U_fit[keep] = U[keep]
    U = U_fit
    return MacResult(C.astype(np.int8), U.astype(np.int8), hamming_error(X, C, U), history)


def _fill_empty(X: np.ndarray, C: np.ndarray, U: np.ndarray) -> np.ndarray:
    C = C.copy()
    for u in np.flatnonzero(~C.any(axis=1)):
        errs = (U != X[u]).sum(axis=1)
        C[u, int(np.argmin(errs))] = True
    return C


def agm_sample_initial(C: np.ndarray, p: float, seed: int) -> set[Edge]:
    """Initial edge set: each pair linked w.p. 1-(1-p)^c_uv under memberships C."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    rng = np.random.default_rng(seed)
    arr = sample_agm_edges(np.asarray(C), p, rng)
    return {(int(u), int(v)) for u, v in arr}
