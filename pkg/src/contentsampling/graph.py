"""Graph loading, degree tables and connected components.

Graphs are stored as CSR arrays (``ptr``/``idx`` pairs) so samplers can index
neighbors by dense vertex id. Three views are kept: outgoing, incoming and the
undirected view obtained by ignoring edge direction.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    pass


class GraphParseError(GraphError):
    def __init__(self, line_no: int, line: str):
        super().__init__(f"line {line_no}: expected two integer tokens 'u v', got {line!r}")
        self.line_no = line_no


class EmptyGraphError(GraphError):
    pass


def _csr(n: int, src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sorted, deduplicated CSR adjacency from (src, dst) pairs."""
    if len(src):
        key = np.unique(src.astype(np.int64) * n + dst.astype(np.int64))
        src, dst = key // n, key % n
    counts = np.bincount(src, minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, np.asarray(dst, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple graph over vertices ``0..num_vertices-1``.

    For an undirected graph the directed views hold each edge in both
    directions, so ``outdeg == indeg == deg``.
    """

    num_vertices: int
    out_ptr: np.ndarray
    out_idx: np.ndarray
    in_ptr: np.ndarray
    in_idx: np.ndarray
    und_ptr: np.ndarray
    und_idx: np.ndarray
    is_directed: bool
    original_ids: np.ndarray
    self_loops_dropped: int = 0
    name: str = "graph"

    @classmethod
    def from_edges(cls, num_vertices: int, edges, directed: bool = False,
                   original_ids=None, name: str = "graph") -> "Graph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if num_vertices < 0 or (len(e) and (e.min() < 0 or e.max() >= num_vertices)):
            raise GraphError("edge endpoint outside [0, num_vertices)")
        loops = e[:, 0] == e[:, 1]
        n_loops = int(loops.sum())
        e = e[~loops]
        u, v = e[:, 0], e[:, 1]
        und_ptr, und_idx = _csr(num_vertices, np.concatenate([u, v]), np.concatenate([v, u]))
        if directed:
            out_ptr, out_idx = _csr(num_vertices, u, v)
            in_ptr, in_idx = _csr(num_vertices, v, u)
        else:
            out_ptr, out_idx = und_ptr, und_idx
            in_ptr, in_idx = und_ptr, und_idx
        if original_ids is None:
            original_ids = np.arange(num_vertices, dtype=np.int64)
        return cls(num_vertices, out_ptr, out_idx, in_ptr, in_idx, und_ptr, und_idx,
                   directed, np.asarray(original_ids, dtype=np.int64), n_loops, name)

    # -- degree tables -----------------------------------------------------
    @cached_property
    def deg(self) -> np.ndarray:
        return np.diff(self.und_ptr)

    @cached_property
    def outdeg(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    @cached_property
    def indeg(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    @property
    def num_edges(self) -> int:
        """Undirected (simple) edge count."""
        return int(len(self.und_idx) // 2)

    @property
    def num_directed_edges(self) -> int:
        return int(len(self.out_idx))

    def neighbors(self, v: int) -> np.ndarray:
        return self.und_idx[self.und_ptr[v]:self.und_ptr[v + 1]]

    def out_neighbors(self, v: int) -> np.ndarray:
        return self.out_idx[self.out_ptr[v]:self.out_ptr[v + 1]]

    def in_neighbors(self, v: int) -> np.ndarray:
        return self.in_idx[self.in_ptr[v]:self.in_ptr[v + 1]]

    @cached_property
    def adjacency_lists(self) -> tuple[list[int], list[int]]:
        """Undirected CSR as Python lists, for tight sampling loops."""
        return self.und_ptr.tolist(), self.und_idx.tolist()

    @cached_property
    def components(self) -> "ComponentMap":
        return largest_connected_component(self)

    def directed_edge_array(self) -> np.ndarray:
        src = np.repeat(np.arange(self.num_vertices), self.outdeg)
        return np.column_stack([src, self.out_idx])

    def subgraph(self, vertices) -> "Graph":
        """Induced subgraph, relabelled densely in ascending vertex order."""
        keep = np.unique(np.asarray(vertices, dtype=np.int64))
        remap = np.full(self.num_vertices, -1, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        e = self.directed_edge_array()
        e = remap[e]
        e = e[(e >= 0).all(axis=1)]
        return Graph.from_edges(len(keep), e, directed=self.is_directed,
                                original_ids=self.original_ids[keep], name=self.name)

    def lcc_subgraph(self) -> "Graph":
        cm = self.components
        return self.subgraph(np.flatnonzero(cm.component_id == cm.lcc_id))


@dataclass(frozen=True, eq=False)
class ComponentMap:
    component_id: np.ndarray
    component_sizes: dict[int, int] = field(default_factory=dict)
    lcc_id: int = 0

    def members(self, cid: int) -> np.ndarray:
        return np.flatnonzero(self.component_id == cid)

    @property
    def lcc_vertices(self) -> np.ndarray:
        return self.members(self.lcc_id)


def largest_connected_component(g: Graph) -> ComponentMap:
    """Components of the undirected view; each is named by its smallest vertex."""
    n = g.num_vertices
    if n == 0:
        raise EmptyGraphError("graph has no vertices")
    adj = csr_matrix((np.ones(len(g.und_idx), dtype=np.int8), g.und_idx, g.und_ptr), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    # smallest member of each scipy label
    first = np.full(labels.max() + 1, n, dtype=np.int64)
    np.minimum.at(first, labels, np.arange(n))
    cid = first[labels]
    ids, counts = np.unique(cid, return_counts=True)
    sizes = {int(c): int(s) for c, s in zip(ids, counts)}
    # np.unique sorts ids, so argmax picks the smallest id on ties
    lcc = int(ids[np.argmax(counts)])
    return ComponentMap(cid, sizes, lcc)


def reachable_count(g: Graph, v: int) -> int:
    cm = g.components
    return cm.component_sizes[int(cm.component_id[v])] - 1


def load_edge_list(path, directed: bool = False, id_map_path=None) -> Graph:
    """Read a whitespace-separated edge list.

    Lines starting with ``#`` are comments. Original ids may be sparse; they
    are remapped to dense ids in ascending order of original id. When
    ``id_map_path`` is given the map is written there as
    ``original_id,dense_id`` CSV.
    """
    path = Path(path)
    pairs: list[tuple[int, int]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise GraphParseError(line_no, line)
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise GraphParseError(line_no, line) from None
    if not pairs:
        raise EmptyGraphError(f"{path}: no edges")
    raw_edges = np.array(pairs, dtype=np.int64)
    if raw_edges.min() < 0:
        raise GraphError(f"{path}: negative vertex id")
    original_ids, dense = np.unique(raw_edges, return_inverse=True)
    dense = dense.reshape(-1, 2)
    if id_map_path is not None:
        with open(id_map_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["original_id", "dense_id"])
            w.writerows((int(o), i) for i, o in enumerate(original_ids))
    return Graph.from_edges(len(original_ids), dense, directed=directed,
                            original_ids=original_ids, name=path.stem)


def graph_stats(g: Graph) -> dict[str, int]:
    """Census counts in the layout of a dataset overview table."""
    lcc = g.lcc_subgraph()
    return {
        "vertices": g.num_vertices,
        "edges": g.num_edges,
        "directed-edges": g.num_directed_edges,
        "vertices (LCC)": lcc.num_vertices,
        "edges (LCC)": lcc.num_edges,
        "directed-edges (LCC)": lcc.num_directed_edges,
    }
