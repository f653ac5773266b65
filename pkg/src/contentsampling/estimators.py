"""Content-distribution estimators: DCE, MLE, SCE, WCE and vertex-label WCE.

All estimators reduce a trace to per-vertex visit weights
``w[v] = sum over steps at v of 1/weight_hat`` and then sum over the copies
hosted at those vertices, so revisits contribute every time.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import comb

from .content import ContentStore
from .graph import Graph
from .samplers import SampleTrace

ESTIMATORS = ("DCE", "MLE", "SCE", "WCE", "VWCE")

Labeler = Callable[[ContentStore], np.ndarray]


class EstimatorError(ValueError):
    pass


class EmptySampleError(EstimatorError):
    pass


class UnsupportedSamplerError(EstimatorError):
    pass


@dataclass
class DistributionEstimate:
    bins: dict[int, float]
    n_steps: int
    estimator_id: str
    sampler_id: str = ""
    seed: int | None = None
    numerators: dict[int, float] = field(default_factory=dict, repr=False)
    normalizer: float = 1.0

    def vector(self, labels) -> np.ndarray:
        return np.array([self.bins.get(int(k), 0.0) for k in labels])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# estimator={self.estimator_id} sampler={self.sampler_id} "
                  f"n_steps={self.n_steps} seed={self.seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "omega_hat"])
        for k in sorted(self.bins):
            w.writerow([k, repr(float(self.bins[k]))])
        return buf.getvalue()


def _labels(store: ContentStore, labeler: Labeler | None) -> np.ndarray:
    return store.labels if labeler is None else np.asarray(labeler(store))


def copy_count_labeler(store: ContentStore) -> np.ndarray:
    return store.f


def visit_weights(trace: SampleTrace, num_vertices: int) -> np.ndarray:
    return np.bincount(trace.vertices, weights=1.0 / trace.weights, minlength=num_vertices)


def _finish(label_of_mass: np.ndarray, mass: np.ndarray, domain: np.ndarray, est_id: str,
            trace: SampleTrace, what: str) -> DistributionEstimate:
    keys, inv = np.unique(domain, return_inverse=True)
    pos = np.searchsorted(keys, label_of_mass)
    num = np.bincount(pos, weights=mass, minlength=len(keys))
    total = num.sum()
    if not total > 0:
        raise EmptySampleError(f"{est_id}: no {what} collected")
    bins = {int(k): float(x / total) for k, x in zip(keys, num)}
    return DistributionEstimate(bins, trace.n_steps, est_id, trace.sampler_id, trace.seed,
                                {int(k): float(x) for k, x in zip(keys, num)}, float(total))


def observed_multiplicity(trace: SampleTrace, store: ContentStore) -> np.ndarray:
    """Per content, how many of its copies sit on distinct sampled vertices."""
    visited = np.zeros(store.num_vertices, dtype=np.float64)
    visited[trace.distinct_array] = 1.0
    return np.bincount(store.copy_content, weights=visited[store.copy_vertex],
                       minlength=store.H).astype(np.int64)


def estimate_dce(trace: SampleTrace, store: ContentStore,
                 labeler: Labeler | None = None) -> DistributionEstimate:
    """Label fractions among the distinct contents seen."""
    if trace.n_steps == 0:
        raise EmptySampleError("empty trace")
    labels = _labels(store, labeler)
    seen = observed_multiplicity(trace, store) > 0
    return _finish(labels[seen], np.ones(seen.sum()), labels, "DCE", trace, "content")


def estimate_sce(trace: SampleTrace, store: ContentStore,
                 labeler: Labeler | None = None) -> DistributionEstimate:
    """Reweighted count of special copies."""
    labels = _labels(store, labeler)
    w = visit_weights(trace, store.num_vertices)
    return _finish(labels, w[store.special_vertex], labels, "SCE", trace, "special copy")


def estimate_wce(trace: SampleTrace, store: ContentStore,
                 labeler: Labeler | None = None) -> DistributionEstimate:
    """Every collected copy weighted by 1/(weight_hat * f)."""
    if store.H and store.f.min() < 1:
        raise EstimatorError("copy with f = 0")
    labels = _labels(store, labeler)
    w = visit_weights(trace, store.num_vertices)
    mass = w[store.copy_vertex] / store.f[store.copy_content]
    return _finish(labels[store.copy_content], mass, labels, "WCE", trace, "content")


def vertex_copy_count(g: Graph) -> np.ndarray:
    """indeg + outdeg + 1: the number of profiles listing each vertex."""
    return g.indeg + g.outdeg + 1


def estimate_vertex_wce(trace: SampleTrace, g: Graph,
                        vertex_labeler: Callable[[Graph], np.ndarray] | np.ndarray | None = None
                        ) -> DistributionEstimate:
    """WCE over vertex labels, using the profiles a sampled vertex lists.

    A sampled vertex ``s`` exposes its following, its followers and itself
    as a multiset; a neighbor that is both appears twice.
    """
    if trace.n_steps == 0:
        raise EmptySampleError("empty trace")
    if vertex_labeler is None:
        labels = g.outdeg
    elif callable(vertex_labeler):
        labels = np.asarray(vertex_labeler(g))
    else:
        labels = np.asarray(vertex_labeler)
    w = visit_weights(trace, g.num_vertices)
    inv_f = 1.0 / vertex_copy_count(g)
    e = g.directed_edge_array()
    src, dst = e[:, 0], e[:, 1]
    # self term, dst listed as "following" of src, src listed as "follower" of dst
    owner = np.concatenate([np.arange(g.num_vertices), dst, src])
    holder = np.concatenate([np.arange(g.num_vertices), src, dst])
    mass = w[holder] * inv_f[owner]
    return _finish(labels[owner], mass, labels, "VWCE", trace, "vertex")


# -- maximum likelihood ----------------------------------------------------

@dataclass(frozen=True)
class MleConfig:
    p: float
    M: int
    em_max_iters: int = 10_000
    em_tol: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise EstimatorError(f"degenerate sampling probability p={self.p}")
        if self.M < 1:
            raise EstimatorError("M must be >= 1")


def mle_pij(cfg: MleConfig) -> np.ndarray:
    """``P[i-1, j-1]`` = P(i of j copies sampled | at least one sampled), zero for i > j."""
    i = np.arange(1, cfg.M + 1)[:, None]
    j = np.arange(1, cfg.M + 1)[None, :]
    q = 1.0 - cfg.p
    with np.errstate(invalid="ignore"):
        P = comb(j, i) * cfg.p ** i * q ** np.clip(j - i, 0, None) / (1.0 - q ** j)
    return np.where(i <= j, P, 0.0)


def detection_prob(cfg: MleConfig) -> np.ndarray:
    """P(at least one of j copies sampled), j = 1..M."""
    return 1.0 - (1.0 - cfg.p) ** np.arange(1, cfg.M + 1)


def mixture_loglik(theta: np.ndarray, counts: np.ndarray, P: np.ndarray) -> float:
    """sum_i g_i log(sum_j theta_j P_ij)."""
    mix = P @ theta
    nz = counts > 0
    return float(counts[nz] @ np.log(mix[nz]))


def em_mixture(counts: np.ndarray, P: np.ndarray, max_iters: int = 10_000,
               tol: float = 1e-8) -> np.ndarray:
    """EM for mixture weights with known kernels ``P[i, j]``.

    Maximizes ``sum_i counts_i log(sum_j theta_j P_ij)`` over the simplex,
    starting from uniform weights.
    """
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise EmptySampleError("no observations for EM")
    M = P.shape[1]
    theta = np.full(M, 1.0 / M)
    nz = counts > 0
    g, Pn = counts[nz], P[nz]
    for _ in range(max_iters):
        mix = Pn @ theta
        new = theta * (Pn.T @ (g / mix)) / total
        done = np.abs(new - theta).sum() < tol
        theta = new
        if done:
            break
    return theta


def default_M(multiplicity: np.ndarray, num_vertices: int, W: int | None = None) -> int:
    if W is not None:
        return int(W)
    top = int(multiplicity.max()) if len(multiplicity) else 1
    return max(1, min(10 * top, num_vertices))


def mle_config_for(trace: SampleTrace, store: ContentStore, M: int | None = None,
                   W: int | None = None, **kw) -> MleConfig:
    mult = observed_multiplicity(trace, store)
    p = len(trace.distinct_visited) / store.num_vertices
    return MleConfig(p, M if M is not None else default_M(mult, store.num_vertices, W), **kw)


def _check_mle_input(trace: SampleTrace, mult: np.ndarray, cfg: MleConfig) -> np.ndarray:
    if trace.sampler_id != "UNI":
        raise UnsupportedSamplerError(f"MLE supports UNI traces only, got {trace.sampler_id}")
    obs = mult[mult > 0]
    if len(obs) == 0:
        raise EmptySampleError("MLE: no content collected")
    if obs.max() > cfg.M:
        raise EstimatorError(f"observed multiplicity {obs.max()} exceeds M={cfg.M}")
    return obs


def size_distribution_from_counts(counts: np.ndarray, cfg: MleConfig) -> np.ndarray:
    """MLE of the copy-count distribution given multiplicity counts ``counts[i-1]``.

    EM fits the size mix of detected contents; dividing by each size's
    detection probability maps it back to all contents.
    """
    theta = em_mixture(counts, mle_pij(cfg), cfg.em_max_iters, cfg.em_tol)
    omega = theta / detection_prob(cfg)
    return omega / omega.sum()


def estimate_mle_copycount(trace: SampleTrace, store: ContentStore,
                           cfg: MleConfig) -> DistributionEstimate:
    mult = observed_multiplicity(trace, store)
    obs = _check_mle_input(trace, mult, cfg)
    counts = np.bincount(obs, minlength=cfg.M + 1)[1:]
    omega = size_distribution_from_counts(counts, cfg)
    bins = {j: float(x) for j, x in enumerate(omega, start=1)}
    for k in np.unique(store.f).tolist():
        bins.setdefault(int(k), 0.0)
    return DistributionEstimate(bins, trace.n_steps, "MLE", trace.sampler_id, trace.seed)


def estimate_mle_label(trace: SampleTrace, store: ContentStore, cfg: MleConfig,
                       labeler: Labeler | None = None) -> DistributionEstimate:
    """MLE for labels that do not depend on the copy count.

    Per label, EM recovers the copy-count mix; the fraction of sampled
    contents with that label is then divided by the label's detection
    probability and renormalized.
    """
    labels = _labels(store, labeler)
    mult = observed_multiplicity(trace, store)
    _check_mle_input(trace, mult, cfg)
    det = detection_prob(cfg)
    seen = mult > 0
    n_seen = seen.sum()
    keys = np.unique(labels)
    raw = {}
    for k in keys.tolist():
        sel = seen & (labels == k)
        if not sel.any():
            raw[k] = 0.0
            continue
        counts = np.bincount(mult[sel], minlength=cfg.M + 1)[1:]
        beta = size_distribution_from_counts(counts, cfg)
        raw[k] = (sel.sum() / n_seen) / float(beta @ det)
    S = sum(raw.values())
    bins = {int(k): v / S for k, v in raw.items()}
    return DistributionEstimate(bins, trace.n_steps, "MLE", trace.sampler_id, trace.seed,
                                {int(k): v for k, v in raw.items()}, S)


def estimate(estimator_id: str, trace: SampleTrace, store: ContentStore | None = None,
             graph: Graph | None = None, labeler: Labeler | None = None,
             mle: MleConfig | None = None, W: int | None = None,
             label_mode: str = "copies") -> DistributionEstimate:
    """Dispatch by estimator id. ``label_mode`` picks the MLE variant."""
    est = estimator_id.upper()
    if est == "DCE":
        return estimate_dce(trace, store, labeler)
    if est == "SCE":
        return estimate_sce(trace, store, labeler)
    if est == "WCE":
        return estimate_wce(trace, store, labeler)
    if est == "VWCE":
        if graph is None:
            raise EstimatorError("VWCE needs the graph")
        return estimate_vertex_wce(trace, graph)
    if est == "MLE":
        if trace.sampler_id != "UNI":
            raise UnsupportedSamplerError(f"MLE supports UNI traces only, got {trace.sampler_id}")
        cfg = mle or mle_config_for(trace, store, W=W)
        if label_mode == "copies":
            return estimate_mle_copycount(trace, store, cfg)
        return estimate_mle_label(trace, store, cfg, labeler)
    raise EstimatorError(f"unknown estimator {estimator_id!r}; choose from {ESTIMATORS}")
