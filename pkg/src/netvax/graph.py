"""Undirected contact networks: construction, random generation, edge-list I/O.

Units are integers ``0 .. n_units - 1``.  Edges are unordered pairs without
self-loops; duplicates collapse to a single edge.  Graphs are immutable once
built.
"""

from __future__ import annotations

from typing import IO, Iterable

import numpy as np

__all__ = [
    "ContactGraph",
    "EdgeListError",
    "erdos_renyi",
    "load_edge_list",
    "save_edge_list",
]


class EdgeListError(ValueError):
    """Raised when an edge-list stream cannot be parsed."""


class ContactGraph:
    """Immutable undirected graph stored as a canonical edge array plus a
    CSR-style adjacency (sorted neighbor arrays) for traversal.

    Parameters
    ----------
    n_units : number of units; must be >= 1.
    edges : iterable of (i, j) pairs.  Order and orientation do not matter.
    """

    def __init__(self, n_units: int, edges: Iterable[tuple[int, int]] = ()) -> None:
        n_units = int(n_units)
        if n_units < 1:
            raise ValueError(f"n_units must be >= 1, got {n_units}")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                         dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, 2)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("edges must be pairs of unit indices")
        if arr.size:
            if arr.min() < 0 or arr.max() >= n_units:
                raise ValueError("edge endpoint out of range")
            if np.any(arr[:, 0] == arr[:, 1]):
                raise ValueError("self-loops are not allowed")
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        pairs = np.unique(np.column_stack([lo, hi]), axis=0) if arr.size else arr

        self.n_units = n_units
        self.edges = pairs  # (m, 2), i < j, lexicographically sorted
        self.edges.setflags(write=False)

        # adjacency: both orientations, grouped by source
        src = np.concatenate([pairs[:, 0], pairs[:, 1]])
        dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
        order = np.lexsort((dst, src))
        self._adj = dst[order]
        self._adj.setflags(write=False)
        self.degree = np.bincount(src, minlength=n_units)
        self.degree.setflags(write=False)
        self._indptr = np.concatenate([[0], np.cumsum(self.degree)])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def neighbors(self, unit: int) -> np.ndarray:
        """Sorted array of units adjacent to ``unit`` (read-only view)."""
        if not 0 <= unit < self.n_units:
            raise ValueError(f"unit {unit} out of range")
        return self._adj[self._indptr[unit]:self._indptr[unit + 1]]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ContactGraph):
            return NotImplemented
        return self.n_units == other.n_units and np.array_equal(self.edges, other.edges)

    def __repr__(self) -> str:
        return f"ContactGraph(n_units={self.n_units}, n_edges={self.n_edges})"


def erdos_renyi(n_units: int, density: float, seed: int) -> ContactGraph:
    """Draw a G(n, p) graph with edge probability ``density``.

    Deterministic for a fixed seed: uses NumPy's default PCG64 generator and
    scans unordered pairs in ascending (i, j) order, one uniform draw per
    pair.  density=0 gives the empty graph, density=1 the complete graph.
    """
    n_units = int(n_units)
    if n_units < 1:
        raise ValueError(f"n_units must be >= 1, got {n_units}")
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must be in [0, 1], got {density}")
    rng = np.random.default_rng(seed)
    srcs = []
    dsts = []
    for i in range(n_units - 1):
        draws = rng.random(n_units - 1 - i)
        hit = np.nonzero(draws < density)[0]
        if hit.size:
            srcs.append(np.full(hit.size, i, dtype=np.int64))
            dsts.append(hit.astype(np.int64) + i + 1)
    if srcs:
        edges = np.column_stack([np.concatenate(srcs), np.concatenate(dsts)])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    return ContactGraph(n_units, edges)


def save_edge_list(graph: ContactGraph, sink: IO[str]) -> None:
    """Write ``n_units=N`` then one ``i j`` line per edge (i < j, sorted)."""
    sink.write(f"n_units={graph.n_units}\n")
    for i, j in graph.edges:
        sink.write(f"{i} {j}\n")


def load_edge_list(source: IO[str]) -> ContactGraph:
    """Parse the edge-list format written by :func:`save_edge_list`.

    Lines starting with ``#`` and blank lines are skipped.  Parse failures
    raise :class:`EdgeListError` naming the offending line number.
    """
    n_units = None
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n_units is None:
            if not line.startswith("n_units="):
                raise EdgeListError(f"missing n_units header at line {lineno}")
            try:
                n_units = int(line.split("=", 1)[1])
            except ValueError:
                raise EdgeListError(f"invalid n_units header at line {lineno}") from None
            if n_units < 1:
                raise EdgeListError(f"invalid n_units header at line {lineno}")
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListError(f"malformed edge at line {lineno}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(f"malformed edge at line {lineno}") from None
        if i == j:
            raise EdgeListError(f"self-loop at line {lineno}")
        if not (0 <= i < n_units and 0 <= j < n_units):
            raise EdgeListError(f"index out of range at line {lineno}")
        edges.append((i, j))
    if n_units is None:
        raise EdgeListError("missing n_units header at line 1")
    return ContactGraph(n_units, edges)
