"""Twin-encoder edge inference from node metadata.

A shared two-layer perceptron maps feature rows to embeddings. Pairs are
scored by a sigmoid head on the Hadamard product of their embeddings, and the
encoder is trained on pairs whose status the queries have made certain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .graph import Edge, ExploredState
from .optim import Adam


class DegenerateBatch(ValueError):
    pass


@dataclass
class SiamParams:
    W1: np.ndarray      # D x hidden
    W2: np.ndarray      # hidden x E_dim
    w_head: np.ndarray  # E_dim
    b_head: np.ndarray  # shape (1,)

    @classmethod
    def init(cls, n_features: int, rng: np.random.Generator, hidden: int = 256,
             embed_dim: int = 64) -> "SiamParams":
        def glorot(a, b):
            lim = np.sqrt(6.0 / (a + b))
            return rng.uniform(-lim, lim, size=(a, b))
        return cls(glorot(n_features, hidden), glorot(hidden, embed_dim),
                   rng.uniform(-0.1, 0.1, size=embed_dim), np.zeros(1))

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "W2": self.W2, "w_head": self.w_head, "b_head": self.b_head}

    def copy(self) -> "SiamParams":
        return SiamParams(self.W1.copy(), self.W2.copy(), self.w_head.copy(), self.b_head.copy())


@dataclass
class SiamHyper:
    margin: float = 0.5
    lr: float = 0.05
    epochs: int = 100
    batch_size: int = 256
    neg_ratio: float = 5.0
    hidden: int = 256
    embed_dim: int = 64
    seed: int = 0


def encode(params: SiamParams, x: np.ndarray, cache: dict | None = None) -> np.ndarray:
    """e = ReLU(ReLU(x W1) W2); works on one row or a stack of rows."""
    x = np.asarray(x, dtype=np.float64)
    Z1 = x @ params.W1
    H1 = np.maximum(Z1, 0.0)
    Z2 = H1 @ params.W2
    if cache is not None:
        cache.update(x=x, Z1=Z1, H1=H1, Z2=Z2)
    return np.maximum(Z2, 0.0)


def score_pair(params: SiamParams, e_u: np.ndarray, e_v: np.ndarray) -> float:
    return float(expit(np.dot(params.w_head, e_u * e_v) + params.b_head[0]))


def cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cosine similarity, 0 whenever either row is the zero vector."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = na * nb
    dot = np.einsum("ij,ij->i", a, b)
    return np.divide(dot, denom, out=np.zeros_like(dot), where=denom > 0)


def contrastive_loss(e_u, e_v, label, r: float) -> float:
    """Pull linked pairs to similarity >= r, push unlinked pairs to similarity 0."""
    if not 0 < r <= 1:
        raise ValueError("margin r must lie in (0, 1]")
    s = cosine(e_u, e_v)
    label = np.asarray(label, dtype=float)
    out = (1 - label) * 0.5 * s ** 2 + label * 0.5 * np.maximum(0.0, r - s) ** 2
    return float(out.sum())


def _pair_loss_grads(a, b, label, w, bias, r):
    """Mean joint loss over pairs and its gradients w.r.t. a, b, w, bias."""
    n = len(label)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    ok = (na > 0) & (nb > 0)
    safe_a = np.where(ok, na, 1.0)
    safe_b = np.where(ok, nb, 1.0)
    dot = np.einsum("ij,ij->i", a, b)
    s = np.where(ok, dot / (safe_a * safe_b), 0.0)
    hinge = np.maximum(0.0, r - s)
    contr = (1 - label) * 0.5 * s ** 2 + label * 0.5 * hinge ** 2
    dl_ds = np.where(ok, (1 - label) * s - label * hinge, 0.0)
    ds_da = b / (safe_a * safe_b)[:, None] - (s / safe_a ** 2)[:, None] * a
    ds_db = a / (safe_a * safe_b)[:, None] - (s / safe_b ** 2)[:, None] * b

    prod = a * b
    z = prod @ w + bias
    bce = np.logaddexp(0.0, z) - label * z
    dz = expit(z) - label

    loss = float((contr + bce).sum() / n)
    ga = (dl_ds[:, None] * ds_da + dz[:, None] * (w[None, :] * b)) / n
    gb = (dl_ds[:, None] * ds_db + dz[:, None] * (w[None, :] * a)) / n
    gw = (dz[:, None] * prod).sum(axis=0) / n
    gbias = np.array([dz.sum() / n])
    return loss, ga, gb, gw, gbias


def batch_loss_and_grads(params: SiamParams, X: np.ndarray, u: np.ndarray, v: np.ndarray,
                         label: np.ndarray, r: float) -> tuple[float, dict]:
    nodes, inv = np.unique(np.concatenate([u, v]), return_inverse=True)
    cache: dict = {}
    E = encode(params, X[nodes], cache)
    iu, iv = inv[: len(u)], inv[len(u):]
    loss, ga, gb, gw, gbias = _pair_loss_grads(E[iu], E[iv], label.astype(float),
                                               params.w_head, params.b_head[0], r)
    dE = np.zeros_like(E)
    np.add.at(dE, iu, ga)
    np.add.at(dE, iv, gb)
    dZ2 = dE * (cache["Z2"] > 0)
    dW2 = cache["H1"].T @ dZ2
    dZ1 = (dZ2 @ params.W2.T) * (cache["Z1"] > 0)
    dW1 = cache["x"].T @ dZ1
    return loss, {"W1": dW1, "W2": dW2, "w_head": gw, "b_head": gbias}


@dataclass
class PairBatch:
    u: np.ndarray
    v: np.ndarray
    label: np.ndarray
    degenerate: bool = False

    def __len__(self) -> int:
        return len(self.label)


def count_certain_nonedges(state: ExploredState) -> int:
    q = state.t
    n = state.n_nodes
    return q * (n - q) + q * (q - 1) // 2 - len(state.explored_edges)


def sample_pairs(state: ExploredState, neg_ratio: float, seed) -> PairBatch:
    """All explored edges as positives plus sampled certain non-edges.

    The batch is flagged degenerate when no certain non-edge exists.
    """
    if not state.explored_edges:
        raise DegenerateBatch("no explored edges to train on")
    rng = np.random.default_rng(seed)
    pos = np.array(sorted(state.explored_edges), dtype=np.int64)
    available = count_certain_nonedges(state)
    want = int(min(round(neg_ratio * len(pos)), available))
    neg = _sample_nonedges(state, want, available, rng)
    u = np.concatenate([pos[:, 0], neg[:, 0]])
    v = np.concatenate([pos[:, 1], neg[:, 1]])
    label = np.concatenate([np.ones(len(pos), dtype=np.int8), np.zeros(len(neg), dtype=np.int8)])
    return PairBatch(u, v, label, degenerate=available == 0)


def _sample_nonedges(state: ExploredState, want: int, available: int,
                     rng: np.random.Generator) -> np.ndarray:
    if want <= 0:
        return np.zeros((0, 2), dtype=np.int64)
    n = state.n_nodes
    queried = np.array(state.queried, dtype=np.int64)
    mask = state.queried_mask
    E = state.explored_edges
    if available <= 4 * want:
        pairs = [(min(q, w), max(q, w)) for q in queried for w in range(n)
                 if w != q and not (mask[w] and w < q)]
        pairs = [e for e in pairs if e not in E]
        idx = rng.choice(len(pairs), size=want, replace=False)
        return np.array(sorted(pairs[i] for i in idx), dtype=np.int64).reshape(-1, 2)
    out: set[Edge] = set()
    while len(out) < want:
        m = 2 * (want - len(out)) + 8
        qs = queried[rng.integers(len(queried), size=m)]
        ws = rng.integers(n, size=m)
        keep = rng.random(m)
        for q, w, k in zip(qs.tolist(), ws.tolist(), keep.tolist()):
            if q == w:
                continue
            # pairs with both ends queried are drawn twice as often
            if mask[w] and k < 0.5:
                continue
            e = (q, w) if q < w else (w, q)
            if e in E or e in out:
                continue
            out.add(e)
            if len(out) == want:
                break
    return np.array(sorted(out), dtype=np.int64).reshape(-1, 2)


def train_siamnet(X: np.ndarray, batch: PairBatch, hyper: SiamHyper,
                  init: SiamParams | None = None, epochs: int | None = None) -> tuple[SiamParams, list[float]]:
    """Mini-batch Adam on contrastive + BCE loss.

    Returns the parameters and per-epoch mean loss; the final entry is the
    full-batch loss at the returned parameters.
    """
    from .embed import TrainingDivergence

    if len(batch) == 0:
        raise DegenerateBatch("empty pair batch")
    X = np.asarray(X, dtype=np.float64)
    rng = np.random.default_rng(hyper.seed)
    params = init.copy() if init is not None else SiamParams.init(
        X.shape[1], rng, hyper.hidden, hyper.embed_dim)
    opt = Adam(params.as_dict(), lr=hyper.lr)
    n = len(batch)
    history = []
    for epoch in range(hyper.epochs if epochs is None else epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            loss, grads = batch_loss_and_grads(params, X, batch.u[idx], batch.v[idx],
                                               batch.label[idx], hyper.margin)
            if not np.isfinite(loss):
                raise TrainingDivergence(f"non-finite siamese loss at epoch {epoch}")
            total += loss * len(idx)
            opt.step(grads)
        history.append(total / n)
    final, _ = batch_loss_and_grads(params, X, batch.u, batch.v, batch.label, hyper.margin)
    history.append(final)
    return params, history


@dataclass
class SimilarityScores:
    """Scores for the uncertain pairs (both endpoints unqueried)."""

    u: np.ndarray
    v: np.ndarray
    psi: np.ndarray

    def as_dict(self) -> dict[Edge, float]:
        return {(int(a), int(b)): float(s) for a, b, s in zip(self.u, self.v, self.psi)}


def score_uncertain(params: SiamParams, X: np.ndarray, state: ExploredState) -> SimilarityScores:
    cand = state.unqueried()
    if len(cand) < 2:
        empty = np.zeros(0, dtype=np.int64)
        return SimilarityScores(empty, empty, np.zeros(0))
    E = encode(params, np.asarray(X, dtype=np.float64)[cand])
    S = (E * params.w_head[None, :]) @ E.T + params.b_head[0]
    iu, iv = np.triu_indices(len(cand), k=1)
    return SimilarityScores(cand[iu], cand[iv], expit(S[iu, iv]))


def infer_edges(params: SiamParams, X: np.ndarray, state: ExploredState, threshold: float = 0.9,
                cap: int | None = None, scores: SimilarityScores | None = None) -> set[Edge]:
    """Uncertain pairs scoring at least ``threshold``, keeping the ``cap`` best."""
    if scores is None:
        scores = score_uncertain(params, X, state)
    if cap is None:
        cap = 2 * len(state.explored_edges)
    hit = np.flatnonzero(scores.psi >= threshold)
    if len(hit) > cap:
        order = np.argsort(-scores.psi[hit], kind="stable")
        hit = np.sort(hit[order[:cap]])
    return {(int(scores.u[i]), int(scores.v[i])) for i in hit}
