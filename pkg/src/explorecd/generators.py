"""Synthetic networks: AGM with planted covers, Erdos-Renyi, theorem instances."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import CommunityCover, DatasetBundle, features_from_prototypes
from .graph import HiddenNetwork
from .theory import AssumptionReport, check_assumptions, epsilon_bound


class InfeasibleInstance(ValueError):
    def __init__(self, msg: str, report: AssumptionReport | None = None):
        super().__init__(msg)
        self.report = report


def overlapping_blocks(n_nodes: int, n_communities: int, overlap: int) -> CommunityCover:
    """Equal-size contiguous blocks on a ring, each widened by ``overlap`` nodes per side."""
    stride = n_nodes / n_communities
    comms = []
    for k in range(n_communities):
        lo = int(round(k * stride)) - overlap
        hi = int(round((k + 1) * stride)) + overlap
        comms.append(sorted({i % n_nodes for i in range(lo, hi)}))
    return CommunityCover(n_nodes, comms)


def random_memberships(n_nodes: int, n_communities: int, mean_extra: float,
                       rng: np.random.Generator) -> CommunityCover:
    """Each node joins one uniform community plus Poisson(mean_extra) more."""
    M = np.zeros((n_nodes, n_communities), dtype=bool)
    M[np.arange(n_nodes), rng.integers(n_communities, size=n_nodes)] = True
    extra = np.minimum(rng.poisson(mean_extra, size=n_nodes), n_communities - 1)
    for u in np.flatnonzero(extra):
        free = np.flatnonzero(~M[u])
        M[u, rng.choice(free, size=extra[u], replace=False)] = True
    return CommunityCover.from_matrix(M)


@dataclass
class AgmSpec:
    n_nodes: int
    n_communities: int
    p: float
    memberships: CommunityCover | None = None
    overlap: int = 10
    n_features: int = 64
    feature_density: float = 0.2
    flip_rate: float = 0.01
    seed: int = 0
    name: str = "agm"

    def validate(self) -> None:
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if self.memberships is not None:
            if self.memberships.n_nodes != self.n_nodes:
                raise ValueError("membership cover size differs from n_nodes")
            if (self.memberships.multiplicity() == 0).any():
                raise ValueError("memberships must cover every node")


def edge_probability(shared: np.ndarray | int, p: float) -> np.ndarray:
    """AGM edge probability 1 - (1 - p)^c for shared-community count c."""
    return 1.0 - (1.0 - p) ** np.asarray(shared, dtype=float)


def sample_agm_edges(cover_matrix: np.ndarray, p: float, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli edges per pair; returns an (m, 2) array with u < v."""
    M = np.asarray(cover_matrix, dtype=np.float64)
    n = M.shape[0]
    iu, iv = np.triu_indices(n, k=1)
    shared = np.einsum("ik,ik->i", M[iu], M[iv]) if n < 600 else (M @ M.T)[iu, iv]
    prob = edge_probability(shared, p)
    hit = rng.random(len(iu)) < prob
    return np.stack([iu[hit], iv[hit]], axis=1)


def generate_agm(spec: AgmSpec) -> DatasetBundle:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    cover = spec.memberships
    if cover is None:
        cover = overlapping_blocks(spec.n_nodes, spec.n_communities, spec.overlap)
    M = cover.to_matrix()
    edges = sample_agm_edges(M, spec.p, rng)
    X = features_from_prototypes(M, spec.n_features, spec.feature_density, spec.flip_rate, rng)
    return DatasetBundle(HiddenNetwork(spec.n_nodes, map(tuple, edges)), X, cover,
                         name=spec.name, seed=spec.seed)


def generate_er(n: int, q: float, seed: int) -> HiddenNetwork:
    if not 0 <= q <= 1:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    rng = np.random.default_rng(seed)
    iu, iv = np.triu_indices(n, k=1)
    hit = rng.random(len(iu)) < q
    return HiddenNetwork(n, zip(iu[hit].tolist(), iv[hit].tolist()))


def profile_counts(profile, n_nodes: int | None = None) -> list[int]:
    """Turn a multiplicity profile into node counts N_1..N_K.

    Integer entries are taken as counts; fractions need ``n_nodes``.
    """
    prof = list(profile)
    if all(isinstance(x, (int, np.integer)) for x in prof):
        return [int(x) for x in prof]
    if n_nodes is None:
        raise ValueError("fractional profile needs n_nodes")
    counts = np.floor(np.asarray(prof, dtype=float) * n_nodes).astype(int)
    counts[np.argmax(prof)] += n_nodes - counts.sum()
    return counts.tolist()


@dataclass
class TheoremInstance:
    bundle: DatasetBundle
    multiplicity: np.ndarray
    sizes: list[int]
    report: AssumptionReport
    params: dict = field(default_factory=dict)


def _assign(counts: list[int], sizes: list[int], rng: np.random.Generator) -> np.ndarray | None:
    K = len(sizes)
    mult = np.repeat(np.arange(1, K + 1), counts)
    rng.shuffle(mult)
    order = np.argsort(-mult, kind="stable")
    M = np.zeros((len(mult), K), dtype=bool)
    cap = np.array(sizes, dtype=np.int64)
    for u in order:
        m = mult[u]
        # most remaining capacity first, random tie-break
        keys = np.lexsort((rng.random(K), -cap))
        pick = keys[:m]
        if (cap[pick] <= 0).any():
            return None
        M[u, pick] = True
        cap[pick] -= 1
    return M if (cap == 0).all() else None


def generate_theorem_instance(
    K: int,
    n_min: int,
    eps: float,
    p: float,
    overlap_profile,
    seed: int,
    n_nodes: int | None = None,
    n_features: int = 64,
    feature_density: float = 0.2,
    flip_rate: float = 0.01,
    max_tries: int = 20,
) -> TheoremInstance:
    """AGM network built to satisfy the equal-p, size-spread and multiplicity assumptions.

    ``overlap_profile`` gives N_1..N_K as counts, or as fractions together with
    ``n_nodes``. Community sizes are drawn in ``[n_min, n_min + eps]`` subject
    to the membership total; the result is re-verified by
    :func:`explorecd.theory.check_assumptions`.
    """
    if K < 2:
        raise ValueError("need K >= 2")
    if eps > epsilon_bound(n_min, K) + 1e-12:
        raise InfeasibleInstance(f"eps={eps} exceeds the bound (n_min-1)/K-1={epsilon_bound(n_min, K):.4g}")
    counts = profile_counts(overlap_profile, n_nodes)
    if len(counts) < K:
        counts = counts + [0] * (K - len(counts))
    if len(counts) != K:
        raise ValueError("profile longer than K")
    slots = sum((i + 1) * c for i, c in enumerate(counts))
    lo, hi = K * n_min, K * (n_min + int(np.floor(eps + 1e-12)))
    if not lo <= slots <= hi:
        raise InfeasibleInstance(
            f"profile needs {slots} memberships but sizes in [{n_min}, {n_min}+{eps}] allow [{lo}, {hi}]")

    rng = np.random.default_rng(seed)
    last_report = None
    for _ in range(max_tries):
        sizes = np.full(K, n_min)
        spare = slots - lo
        room = np.full(K, int(np.floor(eps + 1e-12)))
        while spare > 0:
            k = rng.choice(np.flatnonzero(room > 0))
            sizes[k] += 1
            room[k] -= 1
            spare -= 1
        M = _assign(counts, sizes.tolist(), rng)
        if M is None:
            continue
        cover = CommunityCover.from_matrix(M)
        report = check_assumptions(cover, p, eps)
        last_report = report
        if not report.ok:
            continue
        edges = sample_agm_edges(M, p, rng)
        X = features_from_prototypes(M, n_features, feature_density, flip_rate, rng)
        n = M.shape[0]
        bundle = DatasetBundle(HiddenNetwork(n, map(tuple, edges)), X, cover,
                               name=f"theorem-K{K}-s{seed}", seed=seed)
        return TheoremInstance(bundle, cover.multiplicity(), sizes.tolist(), report,
                               dict(K=K, n_min=n_min, eps=eps, p=p, counts=counts))
    raise InfeasibleInstance("no assignment satisfies the assumptions: "
                             + (last_report.summary() if last_report else "membership assignment failed"),
                             last_report)
