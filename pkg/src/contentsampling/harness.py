"""Monte-Carlo NMSE experiments over (scheme, sampler, estimator) settings."""
from __future__ import annotations

import dataclasses
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import content as cg
from .estimators import ESTIMATORS, UnsupportedSamplerError, copy_count_labeler, estimate
from .graph import Graph, load_edge_list
from .samplers import SAMPLERS, SamplerConfig, sample

log = logging.getLogger(__name__)


class ExperimentConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    graph_path: str | None = None
    directed: bool = False
    restrict_to_lcc: bool = False
    scheme: str = "CDS1"
    n_content: int = 10_000
    alpha: float = 1.0
    W: int = 20
    p_S: float = 0.01
    labeler: str = "copies"          # "copies" or "categorical:<K>"
    sampler: str = "UNI"
    estimator: str = "WCE"
    budget_fraction: float = 0.01
    walkers_T: int = 1000
    burn_in: int = 0
    runs: int = 200
    base_seed: int = 0
    regen_store_per_run: bool = False
    output_path: str | None = None

    def __post_init__(self):
        self.scheme = self.scheme.upper()
        self.sampler = self.sampler.upper()
        self.estimator = self.estimator.upper()

    def validate(self, g: Graph | None = None) -> None:
        if self.runs < 1:
            raise ExperimentConfigError("runs must be >= 1")
        if not 0 < self.budget_fraction <= 1:
            raise ExperimentConfigError("budget_fraction must lie in (0, 1]")
        if self.scheme not in cg.SCHEMES:
            raise ExperimentConfigError(f"unknown scheme {self.scheme}")
        if self.sampler not in SAMPLERS:
            raise ExperimentConfigError(f"unknown sampler {self.sampler}")
        if self.estimator not in ESTIMATORS:
            raise ExperimentConfigError(f"unknown estimator {self.estimator}")
        if self.estimator == "MLE" and self.sampler != "UNI":
            raise UnsupportedSamplerError("MLE is defined for UNI traces only")
        if self.scheme == "CDS4" and not self.directed:
            raise ExperimentConfigError("CDS4 needs a directed graph")
        _parse_labeler(self.labeler)
        if g is not None and self.scheme in ("CDS1", "CDS2") and self.W > g.num_vertices:
            raise ExperimentConfigError(f"W={self.W} exceeds |V|={g.num_vertices}")

    def budget(self, g: Graph) -> int:
        return max(1, int(round(self.budget_fraction * g.num_vertices)))

    def store_key(self) -> tuple:
        """Fields that determine the generated content."""
        return (self.graph_path, self.directed, self.restrict_to_lcc, self.scheme,
                self.n_content, self.alpha, self.W, self.p_S, self.labeler,
                self.base_seed, self.regen_store_per_run)

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


def _parse_value(raw: str):
    s = raw.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    low = s.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line or (line.startswith("[") and line.endswith("]")):
                continue
            key, sep, val = line.partition("=")
            key = key.strip()
            if not sep or key not in names:
                raise ExperimentConfigError(f"{path}:{n}: unknown or malformed entry {line!r}")
            out[key] = _parse_value(val)
    return out


def load_config(path, **overrides) -> ExperimentConfig:
    values = read_config(path)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def _parse_labeler(spec: str) -> int | None:
    if spec == "copies":
        return None
    kind, _, k = spec.partition(":")
    if kind != "categorical" or not k.isdigit() or int(k) < 1:
        raise ExperimentConfigError(f"labeler must be 'copies' or 'categorical:<K>', got {spec!r}")
    return int(k)


def prepare_graph(cfg: ExperimentConfig, g: Graph | None = None) -> Graph:
    if g is None:
        if cfg.graph_path is None:
            raise ExperimentConfigError("graph_path is required")
        g = load_edge_list(cfg.graph_path, directed=cfg.directed)
    if cfg.restrict_to_lcc:
        g = g.lcc_subgraph()
    return g


def build_store(cfg: ExperimentConfig, g: Graph, seed: int) -> cg.ContentStore:
    store = cg.generate(cfg.scheme, g, cfg.n_content, seed, alpha=cfg.alpha, W=cfg.W, p_s=cfg.p_S)
    k = _parse_labeler(cfg.labeler)
    if k is not None:
        store = store.with_labels(cg.categorical_labels(store, k, seed))
    return store


def true_distribution(cfg: ExperimentConfig, g: Graph, store: cg.ContentStore) -> dict[int, float]:
    if cfg.estimator == "VWCE":
        keys, counts = np.unique(g.outdeg, return_counts=True)
        return {int(k): c / g.num_vertices for k, c in zip(keys, counts)}
    return store.true_distribution()


def run_once(cfg: ExperimentConfig, g: Graph, store: cg.ContentStore, run_index: int) -> dict[int, float]:
    """One sampling run; the run seed is ``base_seed + run_index`` (1-based)."""
    seed = cfg.base_seed + run_index
    scfg = SamplerConfig(budget=cfg.budget(g), walkers=cfg.walkers_T, burn_in=cfg.burn_in)
    trace = sample(cfg.sampler, g, scfg, seed)
    label_mode = "copies" if cfg.labeler == "copies" else "labels"
    W = cfg.W if cfg.scheme in ("CDS1", "CDS2") else None
    est = estimate(cfg.estimator, trace, store, graph=g, W=W, label_mode=label_mode)
    return est.bins


@dataclass
class NmseReport:
    labels: np.ndarray
    true_omega: np.ndarray
    estimates: np.ndarray = field(repr=False)   # runs x labels
    truths: np.ndarray = field(repr=False)      # runs x labels (differs only with regen)
    config: ExperimentConfig | None = None
    wall_time: float = 0.0

    @property
    def runs(self) -> int:
        return self.estimates.shape[0]

    @property
    def mean_estimate(self) -> np.ndarray:
        return self.estimates.mean(axis=0)

    @property
    def std_error(self) -> np.ndarray:
        if self.runs < 2:
            return np.zeros(len(self.labels))
        return self.estimates.std(axis=0, ddof=1) / np.sqrt(self.runs)

    @property
    def nmse(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.sqrt(((self.estimates - self.truths) ** 2).mean(axis=0)) / self.true_omega

    @property
    def covered(self) -> np.ndarray:
        return self.true_omega > 0

    def row(self, label: int) -> dict:
        i = int(np.searchsorted(self.labels, label))
        return {"label": int(self.labels[i]), "true_omega": float(self.true_omega[i]),
                "mean_estimate": float(self.mean_estimate[i]), "nmse": float(self.nmse[i]),
                "std_error": float(self.std_error[i])}

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.config is not None:
            for k, v in sorted(dataclasses.asdict(self.config).items()):
                if k != "output_path":
                    buf.write(f"# {k}={v}\n")
        mean, nmse = self.mean_estimate, self.nmse
        spurious = [(int(k), float(m)) for k, t, m in zip(self.labels, self.true_omega, mean)
                    if t == 0 and m > 0]
        buf.write(f"# spurious_mass={float(sum(m for _, m in spurious))!r}\n")
        for k, m in spurious:
            buf.write(f"# spurious label={k} mean_estimate={m!r}\n")
        buf.write("label,true_omega,mean_estimate,nmse,runs\n")
        for i in np.flatnonzero(self.covered):
            buf.write(f"{int(self.labels[i])},{float(self.true_omega[i])!r},"
                      f"{float(mean[i])!r},{float(nmse[i])!r},{self.runs}\n")
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


# Worker state for process pools; set once per worker by _init_worker.
_STATE: dict = {}


def _init_worker(cfg, g, store):
    _STATE.update(cfg=cfg, g=g, store=store)


def _do_run(run_index: int):
    cfg, g, store = _STATE["cfg"], _STATE["g"], _STATE["store"]
    if cfg.regen_store_per_run:
        store = build_store(cfg, g, _store_seed(cfg, run_index))
    return true_distribution(cfg, g, store), run_once(cfg, g, store, run_index)


def _store_seed(cfg: ExperimentConfig, run_index: int) -> int:
    # disjoint from the sampling seeds base_seed+1..base_seed+runs
    return cfg.base_seed + cfg.runs + run_index


def _collect(cfg: ExperimentConfig, g: Graph, store, jobs: int) -> list:
    idx = range(1, cfg.runs + 1)
    if jobs <= 1:
        _init_worker(cfg, g, store)
        try:
            return [_do_run(r) for r in idx]
        finally:
            _STATE.clear()
    with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(cfg, g, store)) as ex:
        # map() yields in submission order, so reduction order is fixed
        return list(ex.map(_do_run, idx, chunksize=max(1, cfg.runs // (4 * jobs))))


def _assemble(cfg, results, t0) -> NmseReport:
    keys = sorted({k for truth, est in results for k in (*truth, *est)})
    labels = np.array(keys, dtype=np.int64)
    truths = np.array([[truth.get(k, 0.0) for k in keys] for truth, _ in results])
    ests = np.array([[est.get(k, 0.0) for k in keys] for _, est in results])
    return NmseReport(labels, truths.mean(axis=0), ests, truths, cfg, time.perf_counter() - t0)


def run_experiment(cfg: ExperimentConfig, graph: Graph | None = None, jobs: int = 1,
                   store: cg.ContentStore | None = None) -> NmseReport:
    """Generate content once (seed ``base_seed``) and run ``cfg.runs`` sampling runs."""
    t0 = time.perf_counter()
    cfg.validate()
    g = prepare_graph(cfg, graph)
    cfg.validate(g)
    if store is None and not cfg.regen_store_per_run:
        store = build_store(cfg, g, cfg.base_seed)
    report = _assemble(cfg, _collect(cfg, g, store, jobs), t0)
    log.info("experiment %s/%s/%s: %d runs in %.2fs", cfg.scheme, cfg.sampler,
             cfg.estimator, cfg.runs, report.wall_time)
    if cfg.output_path:
        report.save(cfg.output_path)
    return report


@dataclass
class ComparisonTable:
    labels: np.ndarray
    true_omega: np.ndarray
    reports: dict[str, NmseReport]

    def nmse(self, name: str) -> np.ndarray:
        return self.reports[name].nmse

    def to_csv(self) -> str:
        names = list(self.reports)
        buf = io.StringIO()
        buf.write("label,true_omega," + ",".join(f"nmse_{n}" for n in names) + "\n")
        for i, k in enumerate(self.labels):
            if self.true_omega[i] <= 0:
                continue
            cols = []
            for n in names:
                r = self.reports[n]
                j = np.searchsorted(r.labels, k)
                cols.append(repr(float(r.nmse[j])))
            buf.write(f"{int(k)},{float(self.true_omega[i])!r}," + ",".join(cols) + "\n")
        return buf.getvalue()


def compare_estimators(cfgs: list[ExperimentConfig], graph: Graph | None = None,
                       jobs: int = 1) -> ComparisonTable:
    """Run configs that share one content store; join their NMSE columns."""
    if not cfgs:
        raise ExperimentConfigError("no configs to compare")
    key = cfgs[0].store_key()
    for c in cfgs[1:]:
        if c.store_key() != key:
            raise ExperimentConfigError("configs differ in more than sampler/estimator")
    for c in cfgs:
        c.validate()
    g = prepare_graph(cfgs[0], graph)
    store = None if cfgs[0].regen_store_per_run else build_store(cfgs[0], g, cfgs[0].base_seed)
    reports: dict[str, NmseReport] = {}
    for c in cfgs:
        name = f"{c.sampler}_{c.estimator}"
        if name in reports:
            name = f"{name}_{len(reports)}"
        reports[name] = run_experiment(c.replace(restrict_to_lcc=False, output_path=None),
                                       graph=g, jobs=jobs, store=store)
    labels = np.array(sorted({int(k) for r in reports.values() for k in r.labels}), dtype=np.int64)
    first = next(iter(reports.values()))
    truth = np.array([first.true_omega[np.searchsorted(first.labels, k)]
                      if k in set(first.labels.tolist()) else 0.0 for k in labels])
    return ComparisonTable(labels, truth, reports)
