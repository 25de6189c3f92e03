"""Directed state-space graphs and their neighborhood structure.

Convention used everywhere in memory: nodes are 0-based and each node's
out-neighborhood is stored sorted ascending; the position of a neighbor in
that sorted list is the coordinate of the corresponding edge in every
p-vector, rate vector and block-matrix layout downstream. Edge lists at the
file/config boundary (JSON configs, rates.csv) carry 1-based node labels and
are converted on the way in and out.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import GraphError


class Graph:
    """Immutable directed graph with per-node ordered out-neighborhoods.

    Attributes:
        n_nodes: number of nodes N.
        out_adj: tuple of N tuples; out_adj[i] lists the targets of node i,
            sorted ascending (0-based).
        in_adj: tuple of N tuples; in_adj[i] lists the sources of edges into
            i, sorted ascending. Exact transpose of out_adj.
        out_degree: tuple of N ints, d_i = len(out_adj[i]).
        n_edges: total edge count E.
        edge_src, edge_dst: int64 arrays of length E, edges enumerated node
            by node in out_adj order (the global edge order).
        edge_offset: int64 array of length N+1; node i's edges occupy the
            slice edge_offset[i]:edge_offset[i+1] of the global order.
    """

    __slots__ = (
        "n_nodes",
        "out_adj",
        "in_adj",
        "out_degree",
        "n_edges",
        "edge_src",
        "edge_dst",
        "edge_offset",
        "nbr_arrays",
        "_slot",
    )

    def __init__(self, n_nodes: int, out_adj: Sequence[Sequence[int]]):
        self.n_nodes = int(n_nodes)
        self.out_adj = tuple(tuple(nbrs) for nbrs in out_adj)
        incoming: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for i, nbrs in enumerate(self.out_adj):
            for j in nbrs:
                incoming[j].append(i)
        self.in_adj = tuple(tuple(sorted(srcs)) for srcs in incoming)
        self.out_degree = tuple(len(nbrs) for nbrs in self.out_adj)
        self.n_edges = sum(self.out_degree)

        src = np.empty(self.n_edges, dtype=np.int64)
        dst = np.empty(self.n_edges, dtype=np.int64)
        off = np.zeros(self.n_nodes + 1, dtype=np.int64)
        slot: dict[tuple[int, int], int] = {}
        e = 0
        for i, nbrs in enumerate(self.out_adj):
            for k, j in enumerate(nbrs):
                src[e] = i
                dst[e] = j
                slot[(i, j)] = k
                e += 1
            off[i + 1] = e
        for arr in (src, dst, off):
            arr.setflags(write=False)
        self.edge_src = src
        self.edge_dst = dst
        self.edge_offset = off
        nbr_arrays = []
        for nbrs in self.out_adj:
            a = np.asarray(nbrs, dtype=np.int64)
            a.setflags(write=False)
            nbr_arrays.append(a)
        self.nbr_arrays = tuple(nbr_arrays)
        self._slot = slot

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n_nodes == other.n_nodes and self.out_adj == other.out_adj

    def __hash__(self) -> int:
        return hash((self.n_nodes, self.out_adj))

    def __repr__(self) -> str:
        return f"Graph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Ordered out-neighborhood of node i (0-based)."""
        return self.out_adj[i]

    def edge_list(self) -> list[tuple[int, int]]:
        """Edges as 1-based (source, target) pairs in global edge order."""
        return [(int(s) + 1, int(t) + 1) for s, t in zip(self.edge_src, self.edge_dst)]


def build_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Build a graph from 1-based (source, target) pairs.

    Rejects self-loops, duplicate edges and out-of-range node indices.
    Neighborhoods come out sorted ascending by target, which fixes the
    coordinate order of all downstream p-vectors.
    """
    if n < 1:
        raise GraphError(f"graph needs at least one node, got n={n}")
    seen: set[tuple[int, int]] = set()
    adj: list[list[int]] = [[] for _ in range(n)]
    for pair in edges:
        s, t = int(pair[0]), int(pair[1])
        if not (1 <= s <= n) or not (1 <= t <= n):
            raise GraphError(f"edge ({s},{t}) out of range for n={n} (labels are 1-based)")
        if s == t:
            raise GraphError(f"self-loop edge ({s},{t}) is not allowed")
        if (s, t) in seen:
            raise GraphError(f"duplicate edge ({s},{t})")
        seen.add((s, t))
        adj[s - 1].append(t - 1)
    for nbrs in adj:
        nbrs.sort()
    return Graph(n, adj)


def edge_index(g: Graph, i: int, j: int) -> int:
    """Position of target j within the ordered out-neighborhood of i.

    Both arguments 0-based; the returned slot is the coordinate of edge
    (i, j) in p-vectors and rate vectors. Raises GraphError if the edge is
    absent.
    """
    try:
        return g._slot[(i, j)]
    except KeyError:
        raise GraphError(f"no edge from node {i} to node {j}") from None


def global_edge_index(g: Graph, i: int, j: int) -> int:
    """Index of edge (i, j) in the global edge order (0-based nodes)."""
    return int(g.edge_offset[i]) + edge_index(g, i, j)
