"""Community-affiliation embedding with a two-layer graph convolution.

F = ReLU(A_hat ReLU(A_hat X W1) W2), trained on

    L = -sum_{edges} log(1 - exp(-F_u.F_v)) + sum_{non-edges} F_u.F_v
        + eta * BCE(X, sigmoid(F W^T))

with gradients written out by hand.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .data import CommunityCover
from .graph import WorkingGraph
from .optim import Adam

log = logging.getLogger(__name__)

EDGE_FLOOR = 1e-10
PROB_CLIP = 1e-7


class TrainingDivergence(RuntimeError):
    pass


def normalized_adjacency(n: int, edges: np.ndarray) -> sp.csr_matrix:
    """D^-1/2 (A + I) D^-1/2 for an (m, 2) edge array."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([edges[:, 0], edges[:, 1], np.arange(n)])
    cols = np.concatenate([edges[:, 1], edges[:, 0], np.arange(n)])
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    d = np.asarray(A.sum(axis=1)).ravel()
    dinv = 1.0 / np.sqrt(d)
    return sp.csr_matrix(sp.diags(dinv) @ A @ sp.diags(dinv))


def _edges_of(graph) -> tuple[int, np.ndarray]:
    if isinstance(graph, WorkingGraph):
        return graph.n_nodes, graph.edge_array()
    n, edges = graph
    return n, np.asarray(edges, dtype=np.int64).reshape(-1, 2)


@dataclass
class EmbedderParams:
    W1: np.ndarray  # D x H
    W2: np.ndarray  # H x K
    W: np.ndarray   # D x K, metadata head

    @classmethod
    def init(cls, n_features: int, hidden: int, K: int, rng: np.random.Generator) -> "EmbedderParams":
        def glorot(a, b):
            lim = np.sqrt(6.0 / (a + b))
            return rng.uniform(-lim, lim, size=(a, b))
        return cls(glorot(n_features, hidden), glorot(hidden, K), glorot(n_features, K))

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "W2": self.W2, "W": self.W}

    def copy(self) -> "EmbedderParams":
        return EmbedderParams(self.W1.copy(), self.W2.copy(), self.W.copy())


@dataclass
class EmbedHyper:
    eta: float = 1.5
    lr: float = 1e-3
    epochs: int = 300
    hidden: int = 128
    seed: int = 0
    warm_start: bool = True
    propagate: bool = True  # False: A_hat := I (per-node perceptron)
    revive: bool = True     # redraw all-zero output columns before a warm start

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")


def gcn_forward(A_hat, X: np.ndarray, params: EmbedderParams, cache: dict | None = None) -> np.ndarray:
    """Two propagation steps with ReLU; F >= 0 by construction."""
    AX = A_hat @ X if A_hat is not None else X
    Z1 = AX @ params.W1
    H1 = np.maximum(Z1, 0.0)
    P = A_hat @ H1 if A_hat is not None else H1
    Z2 = P @ params.W2
    F = np.maximum(Z2, 0.0)
    if cache is not None:
        cache.update(AX=AX, Z1=Z1, P=P, Z2=Z2)
    return F


def _edge_dots(F, edges):
    return np.einsum("ij,ij->i", F[edges[:, 0]], F[edges[:, 1]])


def loss_structure(F: np.ndarray, graph) -> float:
    """Edge log-likelihood term plus non-edge dot products (aggregate identity)."""
    _, edges = _edges_of(graph)
    x = _edge_dots(F, edges)
    xf = np.maximum(x, EDGE_FLOOR)
    edge_term = -np.sum(np.log(-np.expm1(-xf)))
    s = F.sum(axis=0)
    all_pairs = 0.5 * (s @ s - np.einsum("ij,ij->", F, F))
    return float(edge_term + all_pairs - x.sum())


def loss_structure_naive(F: np.ndarray, graph) -> float:
    """O(N^2) double loop over pairs; reference for :func:`loss_structure`."""
    n, edges = _edges_of(graph)
    es = {(int(u), int(v)) for u, v in edges}
    total = 0.0
    for u in range(n):
        for v in range(u + 1, n):
            x = float(F[u] @ F[v])
            if (u, v) in es:
                total -= np.log(-np.expm1(-max(x, EDGE_FLOOR)))
            else:
                total += x
    return total


def grad_structure(F: np.ndarray, graph) -> np.ndarray:
    n, edges = _edges_of(graph)
    x = _edge_dots(F, edges)
    g = np.where(x > EDGE_FLOOR, -1.0 / np.expm1(np.maximum(x, EDGE_FLOOR)), 0.0)
    w = g - 1.0
    Wm = sp.csr_matrix((np.concatenate([w, w]),
                        (np.concatenate([edges[:, 0], edges[:, 1]]),
                         np.concatenate([edges[:, 1], edges[:, 0]]))), shape=(n, n))
    return F.sum(axis=0)[None, :] - F + Wm @ F


def _metadata_terms(F, W, X):
    logits = F @ W.T
    Q = expit(logits)
    Qc = np.clip(Q, PROB_CLIP, 1 - PROB_CLIP)
    return Q, Qc


def loss_metadata(F: np.ndarray, W: np.ndarray, X: np.ndarray) -> float:
    _, Qc = _metadata_terms(F, W, X)
    return float(-np.sum(X * np.log(Qc) + (1 - X) * np.log(1 - Qc)))


def grad_metadata(F, W, X) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the metadata loss w.r.t. F and W."""
    Q, Qc = _metadata_terms(F, W, X)
    R = np.where(Q == Qc, Q - X, 0.0)
    return R @ W, R.T @ F


def total_loss(F, W, graph, X, eta: float) -> float:
    if eta < 0:
        raise ValueError("eta must be >= 0")
    l1 = loss_structure(F, graph)
    return l1 + eta * loss_metadata(F, W, X) if eta else l1


def loss_and_grads(params: EmbedderParams, A_hat, X, graph, eta: float) -> tuple[float, dict]:
    cache: dict = {}
    F = gcn_forward(A_hat, X, params, cache)
    loss = loss_structure(F, graph)
    dF = grad_structure(F, graph)
    dW = np.zeros_like(params.W)
    if eta:
        loss += eta * loss_metadata(F, params.W, X)
        gF, gW = grad_metadata(F, params.W, X)
        dF += eta * gF
        dW = eta * gW
    dZ2 = dF * (cache["Z2"] > 0)
    dW2 = cache["P"].T @ dZ2
    dP = dZ2 @ params.W2.T
    dH1 = A_hat.T @ dP if A_hat is not None else dP
    dZ1 = dH1 * (cache["Z1"] > 0)
    dW1 = cache["AX"].T @ dZ1
    return loss, {"W1": dW1, "W2": dW2, "W": dW}


def _live_init(A_hat, X, hyper: EmbedHyper, K: int, tries: int = 20) -> EmbedderParams:
    """Glorot init, redrawn while some output column is zero on every node.

    A column that starts dead gets no gradient through the final ReLU and
    would stay empty for the whole run.
    """
    rng = np.random.default_rng(hyper.seed)
    for _ in range(tries):
        params = EmbedderParams.init(X.shape[1], hyper.hidden, K, rng)
        if gcn_forward(A_hat, X, params).any(axis=0).all():
            return params
    log.warning("could not draw an initialisation with all %d columns active", K)
    return params


def _revive_columns(params: EmbedderParams, A_hat, X, rng, tries: int = 20) -> list[int]:
    """Redraw the W2 (and W) columns of communities that are zero on every node."""
    dead = np.flatnonzero(~gcn_forward(A_hat, X, params).any(axis=0))
    H, K = params.W2.shape
    lim = np.sqrt(6.0 / (H + K))
    for k in dead:
        for _ in range(tries):
            params.W2[:, k] = rng.uniform(-lim, lim, size=H)
            if gcn_forward(A_hat, X, params)[:, k].any():
                break
        params.W[:, k] = 0.0
    if len(dead):
        log.debug("revived affiliation columns %s", dead.tolist())
    return dead.tolist()


@dataclass
class TrainResult:
    params: EmbedderParams
    F: np.ndarray
    history: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.history[-1]


def train_embedder(graph: WorkingGraph, X: np.ndarray, hyper: EmbedHyper,
                   init: EmbedderParams | None = None, K: int | None = None,
                   epochs: int | None = None) -> TrainResult:
    """Full-batch Adam on the combined loss.

    ``history[i]`` is the loss before update ``i``; the last entry is the loss
    at the returned parameters.
    """
    X = np.asarray(X, dtype=np.float64)
    n = graph.n_nodes
    if n == 0:
        raise ValueError("graph has no nodes")
    edges = graph.edge_array()
    A_hat = normalized_adjacency(n, edges) if hyper.propagate else None
    if init is None:
        if K is None:
            raise ValueError("need K or init params")
        params = _live_init(A_hat, X, hyper, K)
    else:
        params = init.copy()
        if hyper.revive:
            _revive_columns(params, A_hat, X, np.random.default_rng([hyper.seed, len(edges)]))
    g = (n, edges)
    opt = Adam(params.as_dict(), lr=hyper.lr)
    history = []
    for epoch in range(hyper.epochs if epochs is None else epochs):
        loss, grads = loss_and_grads(params, A_hat, X, g, hyper.eta)
        if not np.isfinite(loss) or not all(np.isfinite(v).all() for v in grads.values()):
            raise TrainingDivergence(f"non-finite embedder loss at epoch {epoch} (last finite: "
                                     f"{history[-1] if history else 'none'})")
        history.append(loss)
        opt.step(grads)
    F = gcn_forward(A_hat, X, params)
    final = total_loss(F, params.W, g, X, hyper.eta)
    if not np.isfinite(final):
        raise TrainingDivergence("non-finite embedder loss after training")
    history.append(final)
    return TrainResult(params, F, history)


@dataclass
class DirectParams:
    F: np.ndarray
    W: np.ndarray

    def copy(self) -> "DirectParams":
        return DirectParams(self.F.copy(), self.W.copy())


def train_direct(graph: WorkingGraph, X: np.ndarray, K: int, eta: float, epochs: int,
                 lr: float = 0.01, seed: int = 0, init: DirectParams | None = None) -> tuple[DirectParams, list[float]]:
    """Projected Adam on the same loss, optimising F itself (BIGCLAM-style)."""
    X = np.asarray(X, dtype=np.float64)
    n = graph.n_nodes
    rng = np.random.default_rng(seed)
    if init is None:
        p = DirectParams(rng.uniform(0, 1, size=(n, K)),
                         rng.uniform(-0.1, 0.1, size=(X.shape[1], K)))
    else:
        p = init.copy()
    g = (n, graph.edge_array())
    store = {"F": p.F, "W": p.W}
    opt = Adam(store, lr=lr)
    history = []
    for epoch in range(epochs):
        loss = loss_structure(p.F, g)
        dF = grad_structure(p.F, g)
        dW = np.zeros_like(p.W)
        if eta:
            loss += eta * loss_metadata(p.F, p.W, X)
            gF, gW = grad_metadata(p.F, p.W, X)
            dF += eta * gF
            dW = eta * gW
        if not np.isfinite(loss):
            raise TrainingDivergence(f"non-finite direct loss at epoch {epoch}")
        history.append(float(loss))
        opt.step({"F": dF, "W": dW})
        np.maximum(p.F, 0.0, out=p.F)
    history.append(total_loss(p.F, p.W, g, X, eta))
    return p, history


def background_threshold(n_nodes: int, n_edges: int) -> float:
    """Affiliation strength at which the edge probability reaches graph density."""
    if n_nodes < 2:
        return 0.0
    eps_bg = 2.0 * n_edges / (n_nodes * (n_nodes - 1))
    eps_bg = min(eps_bg, 1 - 1e-12)
    return float(np.sqrt(-np.log1p(-eps_bg)))


def communities_from_affiliation(F: np.ndarray, delta: float | None = None,
                                 n_edges: int | None = None) -> CommunityCover:
    """Threshold F at delta; nodes with no community keep their argmax one."""
    F = np.asarray(F)
    n, K = F.shape
    if delta is None:
        if n_edges is None:
            raise ValueError("need delta or the working graph's edge count")
        delta = background_threshold(n, n_edges)
    # exact zeros never count as membership
    M = (F >= max(delta, 1e-12))
    empty = ~M.any(axis=1)
    M[np.flatnonzero(empty), F[empty].argmax(axis=1)] = True
    return CommunityCover(n, [np.flatnonzero(M[:, k]) for k in range(K) if M[:, k].any()])
