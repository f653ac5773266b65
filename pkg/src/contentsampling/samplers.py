"""Vertex samplers: UNI, RW, MHRW and FS (frontier sampling).

Every sampler returns a :class:`SampleTrace` holding the visited vertices in
order together with the non-normalized stationary weight of each step
(1 for UNI/MHRW, ``deg(v)`` for RW/FS). A run stops at the step where the
``budget``-th distinct vertex first appears, unless ``max_steps`` is set, in
which case exactly that many steps are recorded.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .graph import Graph

SAMPLERS = ("UNI", "RW", "MHRW", "FS")
_BLOCK = 8192


class SamplerError(RuntimeError):
    pass


class SamplerConfigError(SamplerError, ValueError):
    pass


class BudgetUnreachableError(SamplerError):
    pass


class StuckError(SamplerError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SamplerConfig:
    budget: int = 1
    walkers: int = 1000
    start: int | None = None      # None: uniform start (over the LCC for RW/MHRW)
    burn_in: int = 0
    max_steps: int | None = None  # step-count stopping rule instead of distinct budget

    def __post_init__(self):
        if self.budget < 1:
            raise SamplerConfigError("budget must be >= 1")
        if self.walkers < 1:
            raise SamplerConfigError("walkers must be >= 1")
        if self.burn_in < 0:
            raise SamplerConfigError("burn_in must be >= 0")
        if self.max_steps is not None and self.max_steps < 1:
            raise SamplerConfigError("max_steps must be >= 1")


@dataclass(eq=False)
class SampleTrace:
    vertices: np.ndarray
    weights: np.ndarray
    sampler_id: str
    seed: int | None = None
    distinct_visited: frozenset = field(default=None)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.distinct_visited is None:
            self.distinct_visited = frozenset(self.vertices.tolist())

    def __len__(self):
        return len(self.vertices)

    @property
    def n_steps(self) -> int:
        return len(self.vertices)

    @property
    def distinct_array(self) -> np.ndarray:
        return np.unique(self.vertices)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# sampler={self.sampler_id} seed={self.seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "vertex", "weight_hat"])
        for i, (v, wt) in enumerate(zip(self.vertices.tolist(), self.weights.tolist())):
            w.writerow([i, v, repr(wt)])
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def load(cls, path) -> "SampleTrace":
        meta = {}
        vs, ws = [], []
        with open(path, encoding="utf-8") as fh:
            rows = []
            for line in fh:
                if line.startswith("#"):
                    for tok in line[1:].split():
                        k, _, val = tok.partition("=")
                        meta[k] = val
                else:
                    rows.append(line)
        for row in csv.DictReader(rows):
            vs.append(int(row["vertex"]))
            ws.append(float(row["weight_hat"]))
        seed = meta.get("seed")
        seed = None if seed in (None, "None") else int(seed)
        return cls(np.array(vs, dtype=np.int64), np.array(ws), meta.get("sampler", "UNI"), seed)


class _Uniforms:
    """Block-buffered U[0,1) stream; keeps per-step RNG overhead out of loops."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf: list[float] = []
        self.i = 0

    def next(self) -> float:
        if self.i == len(self.buf):
            self.buf = self.rng.random(_BLOCK).tolist()
            self.i = 0
        x = self.buf[self.i]
        self.i += 1
        return x


def _uniform_start(g: Graph, rng: np.random.Generator) -> int:
    lcc = g.components.lcc_vertices
    return int(lcc[rng.integers(len(lcc))])


def _check_walk_start(g: Graph, start: int, budget: int, max_steps) -> None:
    if not 0 <= start < g.num_vertices:
        raise SamplerConfigError(f"start vertex {start} out of range")
    if g.deg[start] == 0:
        raise SamplerError(f"start vertex {start} is isolated")
    if max_steps is None:
        size = g.components.component_sizes[int(g.components.component_id[start])]
        if budget > size:
            raise BudgetUnreachableError(
                f"budget {budget} exceeds the {size} vertices reachable from start {start}")


def _run(step: Callable[[], int], weight: Callable[[int], float], first: int | None,
         cfg: SamplerConfig) -> tuple[list[int], list[float], set[int]]:
    """Drive a step function until the stopping rule fires.

    ``first``, when given, is recorded as the initial step.
    """
    vs: list[int] = []
    seen: set[int] = set()
    if cfg.max_steps is not None:
        if first is not None:
            vs.append(first)
        while len(vs) < cfg.max_steps:
            vs.append(step())
        seen.update(vs)
    else:
        budget = cfg.budget
        if first is not None:
            vs.append(first)
            seen.add(first)
        while len(seen) < budget:
            v = step()
            vs.append(v)
            seen.add(v)
    return vs, [weight(v) for v in vs], seen


def sample_uni(g: Graph, cfg: SamplerConfig, seed: int) -> SampleTrace:
    """Uniform vertex sampling with replacement."""
    n = g.num_vertices
    if n == 0:
        raise SamplerConfigError("empty graph")
    if cfg.max_steps is None and cfg.budget > n:
        raise SamplerConfigError(f"budget {cfg.budget} exceeds |V| = {n}")
    rng = make_rng(seed)
    u = _Uniforms(rng)
    vs, ws, seen = _run(lambda: int(u.next() * n), lambda v: 1.0, None, cfg)
    return SampleTrace(vs, ws, "UNI", seed, frozenset(seen))


def sample_rw(g: Graph, cfg: SamplerConfig, seed: int) -> SampleTrace:
    """Simple random walk on the undirected view; weight_hat = deg."""
    rng = make_rng(seed)
    start = _uniform_start(g, rng) if cfg.start is None else int(cfg.start)
    _check_walk_start(g, start, cfg.budget, cfg.max_steps)
    ptr, idx = g.adjacency_lists
    u = _Uniforms(rng)
    cur = start

    def step() -> int:
        nonlocal cur
        a = ptr[cur]
        cur = idx[a + int(u.next() * (ptr[cur + 1] - a))]
        return cur

    for _ in range(cfg.burn_in):
        step()
    deg = g.deg.tolist()
    vs, ws, seen = _run(step, lambda v: float(deg[v]), cur, cfg)
    return SampleTrace(vs, ws, "RW", seed, frozenset(seen))


def mhrw_acceptance(deg_u: int, deg_v: int) -> float:
    return min(deg_u / deg_v, 1.0)


def sample_mhrw(g: Graph, cfg: SamplerConfig, seed: int) -> SampleTrace:
    """Metropolis-Hastings walk targeting the uniform distribution.

    Rejected proposals repeat the current vertex as a new step.
    """
    rng = make_rng(seed)
    start = _uniform_start(g, rng) if cfg.start is None else int(cfg.start)
    _check_walk_start(g, start, cfg.budget, cfg.max_steps)
    ptr, idx = g.adjacency_lists
    u = _Uniforms(rng)
    cur = start

    def step() -> int:
        nonlocal cur
        a = ptr[cur]
        du = ptr[cur + 1] - a
        prop = idx[a + int(u.next() * du)]
        dv = ptr[prop + 1] - ptr[prop]
        # min(du/dv, 1) acceptance; the draw is consumed either way
        if u.next() * dv < du:
            cur = prop
        return cur

    for _ in range(cfg.burn_in):
        step()
    vs, ws, seen = _run(step, lambda v: 1.0, cur, cfg)
    return SampleTrace(vs, ws, "MHRW", seed, frozenset(seen))


class _FenwickSampler:
    """Prefix-sum tree over integer weights for O(log T) proportional draws."""

    def __init__(self, weights: list[int]):
        self.n = len(weights)
        self.tree = [0] * (self.n + 1)
        self.w = list(weights)
        for i, x in enumerate(weights):
            self._add(i, x)
        self.total = sum(weights)
        self.top = 1 << max(self.n.bit_length() - 1, 0)

    def _add(self, i: int, delta: int) -> None:
        i += 1
        while i <= self.n:
            self.tree[i] += delta
            i += i & -i

    def set(self, i: int, x: int) -> None:
        d = x - self.w[i]
        if d:
            self.w[i] = x
            self.total += d
            self._add(i, d)

    def find(self, r: int) -> int:
        """Smallest index whose inclusive prefix sum exceeds ``r``."""
        pos, step, tree = 0, self.top, self.tree
        while step:
            nxt = pos + step
            if nxt <= self.n and tree[nxt] <= r:
                pos = nxt
                r -= tree[nxt]
            step >>= 1
        return pos


def fs_selection_probs(degrees) -> np.ndarray:
    """Probability that FS moves each walker, given the walkers' degrees."""
    d = np.asarray(degrees, dtype=np.float64)
    return d / d.sum()


def sample_fs(g: Graph, cfg: SamplerConfig, seed: int) -> SampleTrace:
    """Frontier sampling with ``cfg.walkers`` coordinated walkers.

    Walkers start uniformly over V; isolated draws are redrawn at
    initialization. Only vertices reached by a move are recorded.
    """
    n = g.num_vertices
    if n == 0:
        raise SamplerConfigError("empty graph")
    deg = g.deg.tolist()
    if not any(deg):
        raise StuckError("every vertex is isolated")
    rng = make_rng(seed)
    walkers = []
    while len(walkers) < cfg.walkers:
        v = int(rng.integers(n))
        if deg[v] > 0:
            walkers.append(v)
    if cfg.max_steps is None:
        cm = g.components
        reach = sum(cm.component_sizes[c] for c in set(cm.component_id[walkers].tolist()))
        if cfg.budget > reach:
            raise BudgetUnreachableError(
                f"budget {cfg.budget} exceeds the {reach} vertices reachable by the walkers")
    ptr, idx = g.adjacency_lists
    tree = _FenwickSampler([deg[v] for v in walkers])
    u = _Uniforms(rng)

    def step() -> int:
        k = tree.find(int(u.next() * tree.total))
        cur = walkers[k]
        a = ptr[cur]
        w = idx[a + int(u.next() * (ptr[cur + 1] - a))]
        walkers[k] = w
        tree.set(k, deg[w])
        return w

    for _ in range(cfg.burn_in):
        step()
    vs, ws, seen = _run(step, lambda v: float(deg[v]), None, cfg)
    return SampleTrace(vs, ws, "FS", seed, frozenset(seen))


_DISPATCH = {"UNI": sample_uni, "RW": sample_rw, "MHRW": sample_mhrw, "FS": sample_fs}


def sample(sampler_id: str, g: Graph, cfg: SamplerConfig, seed: int) -> SampleTrace:
    try:
        fn = _DISPATCH[sampler_id.upper()]
    except KeyError:
        raise SamplerConfigError(f"unknown sampler {sampler_id!r}; choose from {SAMPLERS}") from None
    return fn(g, cfg, seed)


def weight_hat(sampler_id: str, g: Graph) -> np.ndarray:
    """Non-normalized stationary weight of every vertex under ``sampler_id``."""
    if sampler_id in ("UNI", "MHRW"):
        return np.ones(g.num_vertices)
    if sampler_id in ("RW", "FS"):
        return g.deg.astype(np.float64)
    raise SamplerConfigError(f"unknown sampler {sampler_id!r}")


def stationary(sampler_id: str, g: Graph) -> np.ndarray:
    w = weight_hat(sampler_id, g)
    return w / w.sum()
