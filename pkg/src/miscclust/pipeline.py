"""End-to-end orchestration: independent subspaces, then one clustering each.

Stages run in this order::

    standardize -> whiten -> ica -> merge -> select_k -> factorize -> kmeans

The first three recover statistically independent source components; merge
groups them into subspaces by description length; the last three cluster
each subspace with the kernel graph-regularised semi-NMF.
"""
from __future__ import annotations

import configparser
import json
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .data import DataMatrix, GeneratorSpec, LabeledDataset, generate, load_csv, standardize
from .errors import StageError
from .factorization import KernelSpec, SolverConfig, gram, kgsnmf, knn_graph
from .ica import fast_ica, whiten
from .metrics import ViewReport, evaluate_views
from .selection import Clustering, kmeans, select_k
from .subspace import MergeTrace, SubspacePartition, merge_subspaces, partition_with_v, select_partition

STAGES = ("standardize", "whiten", "ica", "merge", "select_k", "factorize", "kmeans")


def _env_seed():
    raw = os.environ.get("MISC_SEED")
    if raw is None or raw.strip() == "":
        return 0
    try:
        seed = int(raw)
    except ValueError:
        raise ValueError(f"MISC_SEED must be an unsigned integer, got {raw!r}") from None
    if seed < 0:
        raise ValueError("MISC_SEED must be unsigned")
    return seed


@dataclass
class PipelineConfig:
    """Every knob of a run.  ``seed=None`` falls back to ``$MISC_SEED``, then 0."""

    input: Union[str, GeneratorSpec, None] = None
    orientation: str = "samples_as_rows"
    lam: float = 10.0
    eps_neighbors: int = 5
    kernel: KernelSpec = field(default_factory=KernelSpec)
    k_override: Optional[tuple] = None
    v_override: Optional[int] = None
    k_range: tuple = (2, None)
    max_iter: int = 500
    rel_tol: float = 1e-6
    seed: Optional[int] = None
    output_dir: Optional[str] = None
    parallel: bool = False

    def __post_init__(self):
        if self.seed is None:
            self.seed = _env_seed()
        if int(self.seed) < 0:
            raise ValueError("seed must be unsigned")
        self.seed = int(self.seed)
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.eps_neighbors < 1:
            raise ValueError("eps_neighbors must be >= 1")
        if self.v_override is not None and self.v_override < 1:
            raise ValueError("v_override must be >= 1")
        if self.k_override is not None:
            ks = (self.k_override,) if isinstance(self.k_override, int) else tuple(self.k_override)
            if not ks or any(int(k) < 1 for k in ks):
                raise ValueError("k_override entries must be >= 1")
            self.k_override = tuple(int(k) for k in ks)
        k_min, k_max = self.k_range
        if k_min < 1 or (k_max is not None and k_max < k_min):
            raise ValueError(f"invalid k_range {self.k_range}")
        self.k_range = (int(k_min), None if k_max is None else int(k_max))
        if self.orientation not in ("samples_as_rows", "features_as_rows"):
            raise ValueError(f"unknown orientation {self.orientation!r}")

    def solver_config(self, seed) -> SolverConfig:
        return SolverConfig(lam=self.lam, max_iter=self.max_iter, rel_tol=self.rel_tol, seed=seed)

    def to_dict(self):
        out = asdict(self)
        out["kernel"] = {"kind": self.kernel.kind, "width": self.kernel.width}
        out["k_range"] = list(self.k_range)
        out["k_override"] = list(self.k_override) if self.k_override is not None else None
        if isinstance(self.input, GeneratorSpec):
            out["input"] = {"kind": self.input.kind, "n": self.input.n,
                            "params": dict(self.input.params), "seed": self.input.seed}
        out.pop("output_dir")
        out.pop("parallel")
        return out


# --------------------------------------------------------------------------- #
# flat key = value configuration files
# --------------------------------------------------------------------------- #

_INT_KEYS = {"eps_neighbors", "v_override", "max_iter", "seed", "n", "k_min", "k_max"}
_FLOAT_KEYS = {"lam", "rel_tol"}


def read_config_file(path) -> dict:
    """Parse an INI-style file into a plain dict.

    A section header is optional; keys from all sections are merged.
    ``lambda`` is accepted as an alias for ``lam``.
    """
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = "[misc]\n" + text
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string(text)
    raw = {}
    for section in parser.sections():
        raw.update(parser[section])
    out = {}
    for key, value in raw.items():
        key = key.strip().lower().replace("-", "_")
        if key == "lambda":
            key = "lam"
        value = value.strip()
        if value == "" or value.lower() == "none":
            out[key] = None
        elif key in _INT_KEYS:
            out[key] = int(value)
        elif key in _FLOAT_KEYS:
            out[key] = float(value)
        elif key == "k_override":
            out[key] = tuple(int(v) for v in value.replace(",", " ").split())
        elif key == "parallel":
            out[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            out[key] = value
    return out


def config_from_mapping(values: dict) -> PipelineConfig:
    """Build a PipelineConfig from flat keys as produced by ``read_config_file``."""
    values = dict(values)
    known = {f for f in PipelineConfig.__dataclass_fields__}
    kw = {}
    kind = values.pop("kernel", None)
    width = values.pop("kernel_width", None)
    if kind is not None or width is not None:
        kw["kernel"] = KernelSpec(kind or "gaussian", "auto" if width in (None, "auto") else float(width))
    k_min, k_max = values.pop("k_min", None), values.pop("k_max", None)
    if k_min is not None or k_max is not None:
        kw["k_range"] = (2 if k_min is None else k_min, k_max)
    generator = values.pop("generator", None)
    n = values.pop("n", None)
    if generator is not None:
        if n is None:
            raise ValueError("a generator input needs n")
        gen_seed = values.pop("generator_seed", None)
        kw["input"] = GeneratorSpec(generator, n, {}, int(gen_seed) if gen_seed is not None else 0)
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    kw.update({k: v for k, v in values.items() if v is not None or k in ("v_override", "k_override")})
    return PipelineConfig(**kw)


# --------------------------------------------------------------------------- #
# report
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class SubspaceResult:
    rows: tuple
    k: int
    converged: bool
    iterations: int
    objective: float


@dataclass
class RunReport:
    v: int
    partition: SubspacePartition
    merge_trace: MergeTrace
    per_subspace: list
    clusterings: list
    metrics: Optional[ViewReport]
    timings: dict
    config_echo: dict

    def __post_init__(self):
        if len(self.clusterings) != self.v:
            raise ValueError("a run report needs exactly one clustering per subspace")

    def merge_trace_summary(self):
        return self.merge_trace.to_json()

    def to_dict(self, include_timings=True):
        out = {
            "v": self.v,
            "partition": self.partition.as_lists(),
            "subspaces": [
                {"rows": list(s.rows), "k": s.k, "iterations": s.iterations,
                 "converged": s.converged, "objective": s.objective}
                for s in self.per_subspace
            ],
            "merge_trace": self.merge_trace_summary(),
            "config": self.config_echo,
        }
        if self.metrics is not None:
            out["metrics"] = self.metrics.to_dict()
        if include_timings:
            out["timings"] = dict(self.timings)
        return out

    def to_json(self, include_timings=True):
        return json.dumps(self.to_dict(include_timings), indent=2, sort_keys=True)

    def write(self, output_dir):
        """Write ``clustering_<i>.csv`` for every subspace and ``report.json``."""
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        for i, clustering in enumerate(self.clusterings, start=1):
            write_labels(out / f"clustering_{i}.csv", clustering.labels)
        (out / "report.json").write_text(self.to_json() + "\n")
        return out


def write_labels(path, labels):
    lines = ["sample_index,label"] + [f"{i},{int(l)}" for i, l in enumerate(labels)]
    Path(path).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------- #
# the run
# --------------------------------------------------------------------------- #

class _Clock:
    def __init__(self):
        self.ms = {s: 0.0 for s in STAGES}

    @contextmanager
    def stage(self, name):
        start = time.perf_counter()
        try:
            yield
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        finally:
            self.ms[name] += (time.perf_counter() - start) * 1000.0


def _cluster_subspace(rows, k, cfg: PipelineConfig, index):
    times = {}
    seed = cfg.seed + index
    t0 = time.perf_counter()
    try:
        K = gram(rows, cfg.kernel)
        eps = min(cfg.eps_neighbors, rows.shape[1] - 1)
        graph = knn_graph(rows, eps)
        state = kgsnmf(K, graph, k, cfg.solver_config(seed))
    except Exception as exc:
        raise StageError("factorize", exc) from exc
    times["factorize"] = (time.perf_counter() - t0) * 1000.0
    t0 = time.perf_counter()
    try:
        clustering = kmeans(state.H, k, seed=seed)
    except Exception as exc:
        raise StageError("kmeans", exc) from exc
    times["kmeans"] = (time.perf_counter() - t0) * 1000.0
    return state, clustering, times


def run_misc(X: DataMatrix, cfg: PipelineConfig = None, views=None) -> RunReport:
    """Find independent subspaces of ``X`` and cluster each of them.

    ``views`` (optional ``(name, labels)`` pairs) adds a clustering-by-view
    metric table to the report.  Any failure is re-raised as a
    ``StageError`` naming the stage.
    """
    cfg = cfg or PipelineConfig()
    clock = _Clock()

    with clock.stage("standardize"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            Xs = standardize(X)
    with clock.stage("whiten"):
        Xw, transform, mean = whiten(Xs)
    with clock.stage("ica"):
        decomposition = fast_ica(Xw, seed=cfg.seed, whitening_mean=mean, whitening_transform=transform)
    S = decomposition.sources
    d = S.shape[0]

    with clock.stage("merge"):
        if cfg.v_override is not None:
            if cfg.v_override > d:
                raise ValueError(f"v_override={cfg.v_override} exceeds the {d} source components")
            trace = merge_subspaces(S, parallel=cfg.parallel, stop_when_independent=False)
            partition = partition_with_v(trace, cfg.v_override)
        else:
            trace = merge_subspaces(S, parallel=cfg.parallel)
            partition = select_partition(trace)
    v = partition.v

    with clock.stage("select_k"):
        if cfg.k_override is not None:
            ks = cfg.k_override * v if len(cfg.k_override) == 1 else cfg.k_override
            if len(ks) != v:
                raise ValueError(f"k_override has {len(ks)} entries for {v} subspaces")
        else:
            k_min, k_max = cfg.k_range
            ks = tuple(select_k(S[list(g)], k_min, k_max, seed=cfg.seed) for g in partition.groups)

    jobs = [(S[list(g)], ks[i], cfg, i) for i, g in enumerate(partition.groups)]
    if cfg.parallel and v > 1:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda job: _cluster_subspace(*job), jobs))
    else:
        results = [_cluster_subspace(*job) for job in jobs]

    per_subspace, clusterings = [], []
    for g, k, (state, clustering, times) in zip(partition.groups, ks, results):
        for name, ms in times.items():
            clock.ms[name] += ms
        per_subspace.append(SubspaceResult(g, int(k), bool(state.converged), int(state.iterations), float(state.objective)))
        clusterings.append(clustering)

    metrics = None
    if views:
        metrics = evaluate_views(clusterings, list(views), tuple(f"clustering_{i + 1}" for i in range(v)))

    return RunReport(v, partition, trace, per_subspace, clusterings, metrics, clock.ms, cfg.to_dict())


def load_input(cfg: PipelineConfig):
    """Resolve ``cfg.input`` to ``(DataMatrix, views or None)``."""
    if isinstance(cfg.input, GeneratorSpec):
        ds: LabeledDataset = generate(cfg.input)
        return ds.data, list(ds.views)
    if cfg.input is None:
        raise ValueError("no input given: set a CSV path or a generator")
    return load_csv(cfg.input, cfg.orientation), None


def run_pipeline(cfg: PipelineConfig, views=None) -> RunReport:
    """Load the configured input, run, and write results when ``output_dir`` is set."""
    X, generated_views = load_input(cfg)
    report = run_misc(X, cfg, views if views is not None else generated_views)
    if cfg.output_dir is not None:
        report.write(cfg.output_dir)
    return report
