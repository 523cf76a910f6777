"""Graph primitives: the hidden network oracle, explored state and working graph.

Edges are always stored as canonical ``(min, max)`` tuples of node indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp

Edge = tuple[int, int]


class QueryError(ValueError):
    """Raised on an invalid node query (duplicate or out of range)."""


class CertaintyError(ValueError):
    """Raised when an inferred edge contradicts what the queries revealed."""


def canon(u: int, v: int) -> Edge:
    u, v = int(u), int(v)
    if u == v:
        raise ValueError(f"self-edge ({u}, {v}) not allowed")
    return (u, v) if u < v else (v, u)


def canon_edges(edges: Iterable) -> set[Edge]:
    return {canon(u, v) for u, v in edges}


def adjacency_lists(n: int, edges: Iterable[Edge]) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    for nb in adj:
        nb.sort()
    return adj


def edge_array(edges: Iterable[Edge]) -> np.ndarray:
    """Sorted ``(m, 2)`` int array of canonical edges."""
    arr = np.array(sorted(edges), dtype=np.int64)
    return arr.reshape(-1, 2)


def adjacency_matrix(n: int, edges: Iterable[Edge]) -> sp.csr_matrix:
    arr = edge_array(edges)
    data = np.ones(2 * len(arr))
    rows = np.concatenate([arr[:, 0], arr[:, 1]])
    cols = np.concatenate([arr[:, 1], arr[:, 0]])
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


class TruthHandle:
    """Privileged read access to the full edge set, for evaluation only.

    Every access is counted so a run can prove that nothing but the metrics
    looked at the ground truth.
    """

    def __init__(self, n_nodes: int, edges: frozenset[Edge]):
        self.n_nodes = n_nodes
        self._edges = edges
        self.accesses = 0

    def edges(self) -> frozenset[Edge]:
        self.accesses += 1
        return self._edges

    def has_edge(self, u: int, v: int) -> bool:
        self.accesses += 1
        return canon(u, v) in self._edges


class HiddenNetwork:
    """Ground-truth graph reachable only through neighbourhood queries.

    There is deliberately no method returning the edge set; use
    :meth:`truth_handle` (metrics only) for that.
    """

    def __init__(self, n_nodes: int, edges: Iterable):
        self.n_nodes = int(n_nodes)
        es = canon_edges(edges)
        for u, v in es:
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ValueError(f"edge ({u}, {v}) out of range for N={self.n_nodes}")
        self.__edges = frozenset(es)
        self.__adj = adjacency_lists(self.n_nodes, self.__edges)
        self.query_count = 0

    @property
    def n_edges(self) -> int:
        return len(self.__edges)

    def neighbors(self, v: int) -> list[int]:
        """Oracle call. Counted; use :func:`query_node` in detection code."""
        if not 0 <= v < self.n_nodes:
            raise QueryError(f"node {v} out of range")
        self.query_count += 1
        return list(self.__adj[v])

    def truth_handle(self) -> TruthHandle:
        return TruthHandle(self.n_nodes, self.__edges)

    def fresh(self) -> "HiddenNetwork":
        """Same graph with its own query counter, for concurrent runs."""
        other = object.__new__(HiddenNetwork)
        other.n_nodes = self.n_nodes
        other._HiddenNetwork__edges = self.__edges
        other._HiddenNetwork__adj = self.__adj
        other.query_count = 0
        return other


@dataclass
class ExploredState:
    """Query sequence S_t and the certain edge set E_t."""

    n_nodes: int
    queried: list[int] = field(default_factory=list)
    explored_edges: set[Edge] = field(default_factory=set)

    def __post_init__(self):
        self._queried_mask = np.zeros(self.n_nodes, dtype=bool)
        self._queried_mask[self.queried] = True

    @property
    def t(self) -> int:
        return len(self.queried)

    @property
    def queried_mask(self) -> np.ndarray:
        return self._queried_mask.copy()

    def is_queried(self, v: int) -> bool:
        return bool(self._queried_mask[v])

    def unqueried(self) -> np.ndarray:
        return np.flatnonzero(~self._queried_mask)

    def is_certain(self, u: int, v: int) -> bool:
        return bool(self._queried_mask[u] or self._queried_mask[v])

    def explored_nodes(self) -> set[int]:
        """Nodes seen so far: queried ones plus every discovered neighbour."""
        seen = set(self.queried)
        for u, v in self.explored_edges:
            seen.add(u)
            seen.add(v)
        return seen

    def n_explored(self) -> int:
        return len(self.explored_nodes())

    def _record(self, v: int, nbrs: list[int]) -> None:
        self.queried.append(v)
        self._queried_mask[v] = True
        self.explored_edges.update(canon(v, w) for w in nbrs)


def query_node(oracle: HiddenNetwork, state: ExploredState, v: int) -> list[int]:
    """Query ``v``: reveal its neighbours and add the incident edges to E_t."""
    v = int(v)
    if not 0 <= v < state.n_nodes:
        raise QueryError(f"node {v} out of range")
    if state.is_queried(v):
        raise QueryError(f"node {v} already queried; duplicate queries waste budget")
    nbrs = oracle.neighbors(v)
    state._record(v, nbrs)
    return nbrs


@dataclass
class WorkingGraph:
    """Current inferred graph G^(t): explored edges plus inferred ones."""

    n_nodes: int
    explored: frozenset[Edge]
    inferred: frozenset[Edge]

    @property
    def edges(self) -> frozenset[Edge]:
        return self.explored | self.inferred

    def provenance(self, e: Edge) -> str:
        e = canon(*e)
        if e in self.explored:
            return "explored"
        if e in self.inferred:
            return "inferred"
        raise KeyError(e)

    def adjacency(self) -> sp.csr_matrix:
        return adjacency_matrix(self.n_nodes, self.edges)

    def edge_array(self) -> np.ndarray:
        return edge_array(self.edges)


def merge_inferred(state: ExploredState, inferred: Iterable) -> WorkingGraph:
    """Union E_t with inferred edges, refusing any certain non-edge."""
    explored = frozenset(state.explored_edges)
    inf = set()
    for u, v in inferred:
        e = canon(u, v)
        if e in explored:
            continue
        if state.is_certain(*e):
            raise CertaintyError(
                f"inferred edge {e} touches a queried node but was not revealed by the query"
            )
        inf.add(e)
    return WorkingGraph(state.n_nodes, explored, frozenset(inf))


def degree_stats(n_nodes: int, edges: Iterable[Edge]) -> tuple[np.ndarray, float]:
    deg = np.zeros(n_nodes, dtype=np.int64)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    return deg, float(deg.mean()) if n_nodes else 0.0
