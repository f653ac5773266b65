"""Synthetic content placement (CDS I-IV) and the on-disk content store.

Every content item has ``f`` copies on distinct vertices, one of which is the
special (original) copy. The store keeps flat arrays: ``copy_vertex`` lists
every copy's host, grouped by content via ``copy_ptr``; the special copy is
always the first copy of its content.
"""
from __future__ import annotations

import io
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .graph import Graph
from .samplers import make_rng

SCHEMES = ("CDS1", "CDS2", "CDS3", "CDS4")
CDS2_RETRY_CAP = 10_000


class ContentConfigError(ValueError):
    pass


class StoreIntegrityError(ValueError):
    pass


@dataclass(frozen=True)
class ParetoConfig:
    alpha: float = 1.0
    W: int = 20

    def __post_init__(self):
        if not self.alpha > 0:
            raise ContentConfigError("alpha must be positive")
        if self.W < 1:
            raise ContentConfigError("W must be >= 1")


def pareto_pmf(cfg: ParetoConfig) -> np.ndarray:
    """Truncated Pareto pmf over copy counts 1..W."""
    k = np.arange(1, cfg.W + 1, dtype=np.float64)
    terms = cfg.alpha / k ** (cfg.alpha + 1)
    return terms / terms.sum()


@dataclass(frozen=True)
class Content:
    content_id: int
    label: int
    f: int
    copies: tuple[int, ...]
    special_vertex: int


@dataclass(frozen=True, eq=False)
class ContentStore:
    labels: np.ndarray
    f: np.ndarray
    copy_ptr: np.ndarray
    copy_vertex: np.ndarray
    num_vertices: int
    graph_name: str = "graph"
    scheme: str = "CDS1"
    seed: int = 0

    @classmethod
    def from_placements(cls, placements: Sequence[Sequence[int]], num_vertices: int,
                        labels=None, **meta) -> "ContentStore":
        """Build from per-content host lists (special copy first); labels default to f."""
        f = np.array([len(p) for p in placements], dtype=np.int64)
        ptr = np.zeros(len(f) + 1, dtype=np.int64)
        np.cumsum(f, out=ptr[1:])
        verts = (np.concatenate([np.asarray(p, dtype=np.int64) for p in placements])
                 if len(placements) else np.zeros(0, dtype=np.int64))
        labels = f.copy() if labels is None else np.asarray(labels, dtype=np.int64)
        store = cls(labels, f, ptr, verts, num_vertices, **meta)
        store.validate()
        return store

    def validate(self) -> None:
        H = len(self.f)
        if len(self.labels) != H or len(self.copy_ptr) != H + 1:
            raise StoreIntegrityError("array lengths disagree")
        sizes = np.diff(self.copy_ptr)
        bad = np.flatnonzero(sizes != self.f)
        if len(bad):
            c = int(bad[0])
            raise StoreIntegrityError(f"content {c}: f={self.f[c]} but {sizes[c]} copies")
        if H and self.f.min() < 1:
            raise StoreIntegrityError("content without a special copy (f < 1)")
        if len(self.copy_vertex) and (self.copy_vertex.min() < 0
                                      or self.copy_vertex.max() >= self.num_vertices):
            raise StoreIntegrityError("copy placed on a vertex outside the graph")
        # distinct hosts per content
        key = self.copy_content * self.num_vertices + self.copy_vertex
        if len(np.unique(key)) != len(key):
            raise StoreIntegrityError("a content has two copies on one vertex")

    # -- views -------------------------------------------------------------
    @property
    def H(self) -> int:
        return len(self.f)

    def __len__(self):
        return self.H

    @cached_property
    def copy_content(self) -> np.ndarray:
        return np.repeat(np.arange(self.H), self.f)

    @cached_property
    def special_vertex(self) -> np.ndarray:
        return self.copy_vertex[self.copy_ptr[:-1]]

    @cached_property
    def copy_is_special(self) -> np.ndarray:
        flag = np.zeros(len(self.copy_vertex), dtype=bool)
        flag[self.copy_ptr[:-1]] = True
        return flag

    @cached_property
    def _vertex_index(self) -> tuple[np.ndarray, np.ndarray]:
        order = np.lexsort((self.copy_content, self.copy_vertex))
        counts = np.bincount(self.copy_vertex, minlength=self.num_vertices)
        ptr = np.zeros(self.num_vertices + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return ptr, order

    def contents_at(self, v: int) -> np.ndarray:
        """Content ids with a copy on vertex ``v``."""
        ptr, order = self._vertex_index
        return self.copy_content[order[ptr[v]:ptr[v + 1]]]

    def specials_at(self, v: int) -> np.ndarray:
        """Special-copy flags aligned with :meth:`contents_at`."""
        ptr, order = self._vertex_index
        return self.copy_is_special[order[ptr[v]:ptr[v + 1]]]

    def __getitem__(self, c: int) -> Content:
        a, b = self.copy_ptr[c], self.copy_ptr[c + 1]
        copies = tuple(self.copy_vertex[a:b].tolist())
        return Content(int(c), int(self.labels[c]), int(self.f[c]), copies, copies[0])

    def __iter__(self):
        return (self[c] for c in range(self.H))

    def true_distribution(self, labels=None) -> dict[int, float]:
        labels = self.labels if labels is None else np.asarray(labels)
        if self.H == 0:
            return {}
        keys, counts = np.unique(labels, return_counts=True)
        return {int(k): c / self.H for k, c in zip(keys, counts)}

    def with_labels(self, labels) -> "ContentStore":
        return ContentStore(np.asarray(labels, dtype=np.int64), self.f, self.copy_ptr,
                            self.copy_vertex, self.num_vertices, self.graph_name,
                            self.scheme, self.seed)

    # -- serialization -----------------------------------------------------
    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write(f"H={self.H}\tgraph={self.graph_name}\tscheme={self.scheme}"
                  f"\tseed={self.seed}\tV={self.num_vertices}\n")
        verts = self.copy_vertex.tolist()
        ptr = self.copy_ptr.tolist()
        for c, (lab, f) in enumerate(zip(self.labels.tolist(), self.f.tolist())):
            hosts = verts[ptr[c]:ptr[c + 1]]
            buf.write(f"{c}\t{lab}\t{f}\t{hosts[0]}\t{','.join(map(str, hosts))}\n")
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str, num_vertices: int | None = None) -> "ContentStore":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines or not lines[0].startswith("H="):
            raise StoreIntegrityError("missing 'H=' header line")
        header = dict(tok.split("=", 1) for tok in lines[0].split("\t"))
        H = int(header["H"])
        body = lines[1:]
        if len(body) != H:
            raise StoreIntegrityError(f"header says H={H} but {len(body)} records follow")
        labels, placements = [], []
        for c, line in enumerate(body):
            parts = line.split("\t")
            if len(parts) != 5:
                raise StoreIntegrityError(f"record {c}: expected 5 tab-separated fields")
            cid, lab, f, special, hosts = parts
            if int(cid) != c:
                raise StoreIntegrityError(f"record {c}: content ids must be 0..H-1 in order")
            hosts = [int(h) for h in hosts.split(",")] if hosts else []
            if int(f) != len(hosts):
                raise StoreIntegrityError(f"content {c}: f={f} but {len(hosts)} copies")
            if not hosts or hosts[0] != int(special):
                raise StoreIntegrityError(f"content {c}: special copy missing from host list head")
            labels.append(int(lab))
            placements.append(hosts)
        if num_vertices is None:
            num_vertices = int(header.get("V", 1 + max((max(p) for p in placements), default=-1)))
        seed = header.get("seed", "0")
        return cls.from_placements(placements, num_vertices, labels,
                                   graph_name=header.get("graph", "graph"),
                                   scheme=header.get("scheme", "CDS1"),
                                   seed=int(seed) if seed.lstrip("-").isdigit() else 0)

    @classmethod
    def load(cls, path, num_vertices: int | None = None) -> "ContentStore":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read(), num_vertices)


# -- placement schemes -----------------------------------------------------

def draw_copy_counts(n_content: int, cfg: ParetoConfig, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(np.arange(1, cfg.W + 1), size=n_content, p=pareto_pmf(cfg))


def generate_cds1(g: Graph, n_content: int, cfg: ParetoConfig, seed: int) -> ContentStore:
    """Copies on distinct uniformly random vertices; first draw holds the special copy."""
    if cfg.W > g.num_vertices:
        raise ContentConfigError(f"W={cfg.W} exceeds |V|={g.num_vertices}")
    rng = make_rng(seed)
    fs = draw_copy_counts(n_content, cfg, rng)
    n = g.num_vertices
    placements = [rng.choice(n, size=int(f), replace=False) for f in fs]
    return ContentStore.from_placements(placements, n, graph_name=g.name, scheme="CDS1", seed=seed)


def nearest_vertices(g: Graph, v: int, k: int) -> list[int]:
    """``v`` followed by the ``k-1`` nearest vertices in BFS level order.

    Within a level vertices are taken in ascending id.
    """
    out = [v]
    if k <= 1:
        return out
    seen = {v}
    level = [v]
    while level and len(out) < k:
        nxt = set()
        for u in level:
            for w in g.neighbors(u).tolist():
                if w not in seen:
                    nxt.add(w)
        level = sorted(nxt)
        seen.update(level)
        out.extend(level[:k - len(out)])
    return out


def generate_cds2(g: Graph, n_content: int, cfg: ParetoConfig, seed: int) -> ContentStore:
    """Special copy on a vertex that reaches >= k-1 others, duplicates on its nearest vertices."""
    rng = make_rng(seed)
    fs = draw_copy_counts(n_content, cfg, rng)
    cm = g.components
    reach = np.array([cm.component_sizes[int(c)] - 1 for c in cm.component_id])
    n = g.num_vertices
    placements = []
    for f in fs.tolist():
        for _ in range(CDS2_RETRY_CAP):
            v = int(rng.integers(n))
            if reach[v] >= f - 1:
                break
        else:
            raise ContentConfigError(
                f"no vertex reaching {f - 1} others found after {CDS2_RETRY_CAP} draws")
        placements.append(nearest_vertices(g, v, f))
    return ContentStore.from_placements(placements, n, graph_name=g.name, scheme="CDS2", seed=seed)


def cascade(ptr: list[int], idx: list[int], seed_vertex: int, p: float,
            rng: np.random.Generator) -> list[int]:
    """Independent cascade from ``seed_vertex`` over a CSR adjacency.

    Infected vertices are processed FIFO; each gets one Bernoulli(p) trial per
    neighbor that is still copy-free at that moment.
    """
    infected = [seed_vertex]
    if p <= 0:
        return infected
    has = {seed_vertex}
    queue = deque(infected)
    while queue:
        u = queue.popleft()
        targets = [w for w in idx[ptr[u]:ptr[u + 1]] if w not in has]
        if not targets:
            continue
        hits = rng.random(len(targets)) < p
        for w, hit in zip(targets, hits.tolist()):
            if hit:
                has.add(w)
                infected.append(w)
                queue.append(w)
    return infected


def _generate_cascade(g: Graph, n_content: int, p_s: float, seed: int, ptr, idx,
                      scheme: str) -> ContentStore:
    if not 0.0 <= p_s <= 1.0:
        raise ContentConfigError("p_S must lie in [0, 1]")
    rng = make_rng(seed)
    n = g.num_vertices
    ptr, idx = ptr.tolist(), idx.tolist()
    placements = [cascade(ptr, idx, int(rng.integers(n)), p_s, rng) for _ in range(n_content)]
    return ContentStore.from_placements(placements, n, graph_name=g.name, scheme=scheme, seed=seed)


def generate_cds3(g: Graph, n_content: int, p_s: float, seed: int) -> ContentStore:
    """Independent cascade over the undirected view."""
    return _generate_cascade(g, n_content, p_s, seed, g.und_ptr, g.und_idx, "CDS3")


def generate_cds4(g: Graph, n_content: int, p_s: float, seed: int) -> ContentStore:
    """Independent cascade from each infected vertex to its followers (incoming edges)."""
    if not g.is_directed:
        raise ContentConfigError("CDS4 needs a directed graph")
    return _generate_cascade(g, n_content, p_s, seed, g.in_ptr, g.in_idx, "CDS4")


def categorical_labels(store: ContentStore, n_labels: int, seed: int) -> np.ndarray:
    """Labels uniform over ``0..n_labels-1``, drawn independently of f."""
    return make_rng(seed).integers(n_labels, size=store.H)


def generate(scheme: str, g: Graph, n_content: int, seed: int, alpha: float = 1.0,
             W: int = 20, p_s: float = 0.01) -> ContentStore:
    scheme = scheme.upper().replace(" ", "")
    if scheme == "CDS1":
        return generate_cds1(g, n_content, ParetoConfig(alpha, W), seed)
    if scheme == "CDS2":
        return generate_cds2(g, n_content, ParetoConfig(alpha, W), seed)
    if scheme == "CDS3":
        return generate_cds3(g, n_content, p_s, seed)
    if scheme == "CDS4":
        return generate_cds4(g, n_content, p_s, seed)
    raise ContentConfigError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
