"""Datasets: community covers, bundles, the SNAP ego parser and bundle files."""
from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graph import HiddenNetwork, canon

log = logging.getLogger(__name__)

BUNDLE_FORMAT = "explorecd-bundle"
BUNDLE_VERSION = 1


class ParseError(ValueError):
    pass


class BundleError(ValueError):
    pass


@dataclass(frozen=True)
class CommunityCover:
    """A list of (possibly overlapping) node sets over ``n_nodes`` nodes."""

    n_nodes: int
    communities: tuple[frozenset[int], ...]

    def __init__(self, n_nodes: int, communities: Iterable[Iterable[int]]):
        comms = tuple(frozenset(int(u) for u in c) for c in communities)
        for k, c in enumerate(comms):
            if not c:
                raise ValueError(f"community {k} is empty")
            if min(c) < 0 or max(c) >= n_nodes:
                raise ValueError(f"community {k} has a node outside [0, {n_nodes})")
        object.__setattr__(self, "n_nodes", int(n_nodes))
        object.__setattr__(self, "communities", comms)

    @property
    def K(self) -> int:
        return len(self.communities)

    def __len__(self) -> int:
        return len(self.communities)

    def __iter__(self):
        return iter(self.communities)

    def to_matrix(self) -> np.ndarray:
        M = np.zeros((self.n_nodes, self.K), dtype=np.int8)
        for k, c in enumerate(self.communities):
            M[list(c), k] = 1
        return M

    @classmethod
    def from_matrix(cls, M: np.ndarray) -> "CommunityCover":
        M = np.asarray(M).astype(bool)
        return cls(M.shape[0], [np.flatnonzero(M[:, k]) for k in range(M.shape[1]) if M[:, k].any()])

    def multiplicity(self) -> np.ndarray:
        """Number of communities each node belongs to."""
        m = np.zeros(self.n_nodes, dtype=np.int64)
        for c in self.communities:
            m[list(c)] += 1
        return m

    def shared_counts(self) -> np.ndarray:
        """N x N matrix c_uv of shared community counts (diagonal zeroed)."""
        M = self.to_matrix().astype(np.int64)
        c = M @ M.T
        np.fill_diagonal(c, 0)
        return c


def write_cover(cover: CommunityCover, path) -> None:
    with open(path, "w") as fh:
        for c in cover.communities:
            fh.write(" ".join(str(u) for u in sorted(c)) + "\n")


def read_cover(path, n_nodes: int | None = None) -> CommunityCover:
    comms = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                comms.append([int(tok) for tok in line.split()])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad node id ({exc})") from None
    if n_nodes is None:
        n_nodes = 1 + max((max(c) for c in comms), default=-1)
    return CommunityCover(n_nodes, comms)


@dataclass
class DatasetBundle:
    hidden: HiddenNetwork
    features: np.ndarray
    truth: CommunityCover
    name: str
    seed: int | None = None
    extra: dict | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.int8)
        n = self.hidden.n_nodes
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise ValueError(f"features shape {self.features.shape} inconsistent with N={n}")
        if not np.isin(self.features, (0, 1)).all():
            raise ValueError("features must be binary")
        if self.truth.n_nodes != n:
            raise ValueError("community cover node count differs from the network")

    @property
    def n_nodes(self) -> int:
        return self.hidden.n_nodes


# ---------------------------------------------------------------- SNAP ego files


def _read_lines(path: Path) -> list[str]:
    if not path.exists():
        raise ParseError(f"missing file: {path}")
    return path.read_text().splitlines()


def load_ego_snap(
    path_prefix,
    keep_ego: bool = True,
    largest_component: bool = True,
    prune_zero_features: bool = False,
) -> DatasetBundle:
    """Load a SNAP ego network given the common prefix (e.g. ``facebook/348``).

    Reads ``.edges``, ``.feat``, ``.egofeat`` and ``.circles``. The ego gets
    index 0 and is connected to every alter; alters follow in ascending
    original id.
    """
    prefix = Path(path_prefix)
    ego_id = prefix.name
    feat_lines = _read_lines(prefix.with_name(prefix.name + ".feat"))
    ego_lines = _read_lines(prefix.with_name(prefix.name + ".egofeat"))
    edge_lines = _read_lines(prefix.with_name(prefix.name + ".edges"))
    circle_lines = _read_lines(prefix.with_name(prefix.name + ".circles"))

    raw_feats: dict[str, list[int]] = {}
    width = None
    for lineno, line in enumerate(feat_lines, 1):
        toks = line.split()
        if not toks:
            continue
        node, bits = toks[0], toks[1:]
        if width is None:
            width = len(bits)
        elif len(bits) != width:
            raise ParseError(f"{prefix}.feat:{lineno}: expected {width} feature values, got {len(bits)}")
        try:
            raw_feats[node] = [int(b) for b in bits]
        except ValueError:
            raise ParseError(f"{prefix}.feat:{lineno}: non-integer feature value") from None
    ego_rows = [ln.split() for ln in ego_lines if ln.strip()]
    if len(ego_rows) != 1:
        raise ParseError(f"{prefix}.egofeat: expected one row, got {len(ego_rows)}")
    if width is None:
        width = len(ego_rows[0])
    if len(ego_rows[0]) != width:
        raise ParseError(f"{prefix}.egofeat:1: expected {width} feature values, got {len(ego_rows[0])}")
    ego_feat = [int(b) for b in ego_rows[0]]

    alters = sorted(raw_feats, key=lambda s: (int(s) if s.lstrip("-").isdigit() else 0, s))
    order = ([ego_id] if keep_ego else []) + alters
    index = {name: i for i, name in enumerate(order)}

    edges = set()
    for lineno, line in enumerate(edge_lines, 1):
        toks = line.split()
        if not toks:
            continue
        if len(toks) != 2:
            raise ParseError(f"{prefix}.edges:{lineno}: expected two node ids")
        a, b = toks
        for x in (a, b):
            if x not in index:
                raise ParseError(f"{prefix}.edges:{lineno}: node {x} has no feature row")
        if a != b:
            edges.add(canon(index[a], index[b]))
    if keep_ego:
        edges.update(canon(0, index[a]) for a in alters)

    circles = []
    for lineno, line in enumerate(circle_lines, 1):
        toks = line.split()
        if not toks:
            continue
        members = []
        for x in toks[1:]:
            if x not in index:
                raise ParseError(f"{prefix}.circles:{lineno}: circle {toks[0]} references unknown node {x}")
            members.append(index[x])
        if members:
            circles.append(members)
    if not circles:
        log.warning("%s: no circles found; ground-truth cover is empty", prefix)

    X = np.array(([ego_feat] if keep_ego else []) + [raw_feats[a] for a in alters], dtype=np.int8)
    if X.size and not np.isin(X, (0, 1)).all():
        raise ParseError(f"{prefix}: feature values must be 0/1")
    n = len(order)

    keep = np.arange(n)
    if largest_component and n:
        import scipy.sparse.csgraph as csg
        from .graph import adjacency_matrix

        ncomp, labels = csg.connected_components(adjacency_matrix(n, edges), directed=False)
        if ncomp > 1:
            big = np.bincount(labels).argmax()
            keep = np.flatnonzero(labels == big)
    remap = {int(old): new for new, old in enumerate(keep)}
    edges = {canon(remap[u], remap[v]) for u, v in edges if u in remap and v in remap}
    circles = [[remap[u] for u in c if u in remap] for c in circles]
    circles = [c for c in circles if c]
    X = X[keep]
    if prune_zero_features and X.size:
        X = X[:, X.any(axis=0)]

    n = len(keep)
    stats = {
        "nodes": n,
        "edges": len(edges),
        "communities": len(circles),
        "features": int(X.shape[1]) if X.ndim == 2 else 0,
        "dropped_nodes": len(order) - n,
    }
    log.info("loaded ego network %s: %s", ego_id, stats)
    return DatasetBundle(HiddenNetwork(n, edges), X.reshape(n, -1), CommunityCover(n, circles),
                         name=f"ego-{ego_id}", extra={"preprocessing": stats})


# ---------------------------------------------------------------- bundle files


def _bundle_body(bundle: DatasetBundle) -> str:
    edges = sorted(bundle.hidden.truth_handle().edges())
    out = ["#edges"]
    out += [f"{u}\t{v}" for u, v in edges]
    out.append("#features")
    out += ["".join("1" if b else "0" for b in row) for row in bundle.features]
    out.append("#communities")
    out += [" ".join(str(u) for u in sorted(c)) for c in bundle.truth.communities]
    return "\n".join(out) + "\n"


def save_bundle(bundle: DatasetBundle, path) -> None:
    body = _bundle_body(bundle)
    header = {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "name": bundle.name,
        "seed": bundle.seed,
        "n_nodes": bundle.n_nodes,
        "n_edges": bundle.hidden.n_edges,
        "n_features": int(bundle.features.shape[1]),
        "n_communities": bundle.truth.K,
        "sha256": hashlib.sha256(body.encode()).hexdigest(),
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        fh.write(body)
    os.replace(tmp, path)


def load_bundle(path) -> DatasetBundle:
    text = Path(path).read_text()
    first, _, body = text.partition("\n")
    try:
        header = json.loads(first)
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path}: unreadable header ({exc})") from None
    if header.get("format") != BUNDLE_FORMAT:
        raise BundleError(f"{path}: not a bundle file")
    if header.get("version") != BUNDLE_VERSION:
        raise BundleError(f"{path}: unsupported bundle version {header.get('version')}")
    if hashlib.sha256(body.encode()).hexdigest() != header["sha256"]:
        raise BundleError(f"{path}: checksum mismatch (truncated or edited file)")

    section = None
    edges, rows, comms = [], [], []
    for lineno, line in enumerate(body.splitlines(), 2):
        if line.startswith("#"):
            section = line[1:]
            continue
        if section == "edges":
            u, v = line.split("\t")
            edges.append((int(u), int(v)))
        elif section == "features":
            rows.append([1 if ch == "1" else 0 for ch in line])
        elif section == "communities":
            comms.append([int(x) for x in line.split()])
        else:
            raise BundleError(f"{path}:{lineno}: data outside a section")
    n, d = header["n_nodes"], header["n_features"]
    if len(edges) != header["n_edges"] or len(rows) != n or len(comms) != header["n_communities"]:
        raise BundleError(f"{path}: section sizes disagree with header")
    X = np.array(rows, dtype=np.int8).reshape(n, d)
    return DatasetBundle(HiddenNetwork(n, edges), X, CommunityCover(n, comms),
                         name=header["name"], seed=header.get("seed"))


def bundles_equal(a: DatasetBundle, b: DatasetBundle) -> bool:
    return (
        a.n_nodes == b.n_nodes
        and a.hidden.truth_handle().edges() == b.hidden.truth_handle().edges()
        and np.array_equal(a.features, b.features)
        and a.truth.communities == b.truth.communities
        and a.name == b.name
    )


def features_from_prototypes(
    memberships: Sequence[Sequence[int]] | np.ndarray,
    n_features: int,
    feature_density: float,
    flip_rate: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """OR of per-community prototype rows, then independent bit flips."""
    M = np.asarray(memberships, dtype=bool)
    K = M.shape[1]
    U = rng.random((K, n_features)) < feature_density
    for k in range(K):
        if not U[k].any():
            U[k, rng.integers(n_features)] = True
    X = (M.astype(np.int64) @ U.astype(np.int64)) > 0
    flips = rng.random(X.shape) < flip_rate
    return (X ^ flips).astype(np.int8)
