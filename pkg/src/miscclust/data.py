"""Datasets, CSV I/O and synthetic generators.

All matrices follow the features-by-samples convention: ``values`` has shape
``(d, n)`` with one column per sample.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateInputError, ParseError

GENERATOR_KINDS = ("gaussian_blobs", "atom", "lsun", "rings")


@dataclass(frozen=True)
class DataMatrix:
    values: np.ndarray
    feature_names: Optional[tuple] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got shape {values.shape}")
        d, n = values.shape
        if d < 1 or n < 2:
            raise ValueError(f"need d >= 1 and n >= 2, got d={d}, n={n}")
        if not np.all(np.isfinite(values)):
            raise ValueError("data matrix contains NaN or Inf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.feature_names is not None:
            names = tuple(str(s) for s in self.feature_names)
            if len(names) != d:
                raise ValueError(f"{len(names)} feature names for {d} features")
            object.__setattr__(self, "feature_names", names)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


def _check_labels(labels, n, name="labels"):
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != n:
        raise ValueError(f"{name}: expected {n} labels, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        if not np.all(labels == np.round(labels)):
            raise ValueError(f"{name}: labels must be integers")
    labels = labels.astype(np.int64)
    k = labels.max() + 1
    if labels.min() != 0 or np.unique(labels).size != k:
        raise ValueError(f"{name}: labels must form the contiguous range 0..k-1")
    labels.setflags(write=False)
    return labels


@dataclass(frozen=True)
class LabeledDataset:
    data: DataMatrix
    views: tuple = ()

    def __post_init__(self):
        views = tuple(
            (str(name), _check_labels(lab, self.data.n, str(name))) for name, lab in self.views
        )
        object.__setattr__(self, "views", views)

    def view(self, name):
        for vname, labels in self.views:
            if vname == name:
                return labels
        raise KeyError(name)

    @property
    def view_names(self):
        return [name for name, _ in self.views]


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; choose from {GENERATOR_KINDS}")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


# --------------------------------------------------------------------------- #
# CSV I/O
# --------------------------------------------------------------------------- #

def _parse_float(cell):
    try:
        value = float(cell)
    except ValueError:
        return None
    return value


def load_csv(path, orientation="samples_as_rows") -> DataMatrix:
    """Read a numeric CSV table into a features-by-samples ``DataMatrix``.

    A first row in which no cell parses as a number is taken as the header.
    Errors report 1-based (row, column) file coordinates.
    """
    if orientation not in ("samples_as_rows", "features_as_rows"):
        raise ValueError(f"unknown orientation {orientation!r}")
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh)]
    # keep file line numbers for error messages, skip blank lines
    numbered = [(i + 1, [c.strip() for c in row]) for i, row in enumerate(rows) if any(c.strip() for c in row)]
    if not numbered:
        raise ParseError(f"{path}: empty file")

    header = None
    first_line, first = numbered[0]
    if all(_parse_float(c) is None for c in first):
        header = first
        numbered = numbered[1:]
    if not numbered:
        raise ParseError(f"{path}: no data rows")

    width = len(header) if header is not None else len(numbered[0][1])
    table = np.empty((len(numbered), width))
    for r, (line, cells) in enumerate(numbered):
        if len(cells) != width:
            raise ParseError(
                f"{path}: row {line} has {len(cells)} cells, expected {width}", row=line
            )
        for c, cell in enumerate(cells):
            value = _parse_float(cell)
            if value is None:
                raise ParseError(
                    f"{path}: non-numeric cell {cell!r} at ({line},{c + 1})", row=line, col=c + 1
                )
            table[r, c] = value

    if orientation == "samples_as_rows":
        return DataMatrix(table.T, feature_names=header)
    names = None
    return DataMatrix(table, feature_names=names)


def save_csv(path, data: DataMatrix, orientation="samples_as_rows"):
    """Write ``data`` back out; the header is written when feature names exist."""
    values = data.values.T if orientation == "samples_as_rows" else data.values
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if data.feature_names is not None and orientation == "samples_as_rows":
            writer.writerow(data.feature_names)
        for row in values:
            writer.writerow([repr(float(v)) for v in row])


def save_views(path, dataset: LabeledDataset):
    """One column per view, one row per sample."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.view_names)
        columns = [labels for _, labels in dataset.views]
        for i in range(dataset.data.n):
            writer.writerow([int(col[i]) for col in columns])


def load_views(path):
    """Read a views CSV (header of view names) into ``[(name, labels), ...]``."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise ParseError(f"{path}: views file needs a header and at least one row")
    names = rows[0]
    out = []
    for c, name in enumerate(names):
        col = []
        for r, row in enumerate(rows[1:], start=2):
            if len(row) != len(names):
                raise ParseError(f"{path}: row {r} has {len(row)} cells, expected {len(names)}", row=r)
            try:
                col.append(int(row[c]))
            except ValueError:
                raise ParseError(f"{path}: non-integer label {row[c]!r} at ({r},{c + 1})", row=r, col=c + 1)
        out.append((name.strip(), np.asarray(col)))
    return out


# --------------------------------------------------------------------------- #
# preprocessing
# --------------------------------------------------------------------------- #

class DroppedFeatureWarning(UserWarning):
    pass


def standardize(X: DataMatrix) -> DataMatrix:
    """Zero-mean, unit (population) variance per feature.

    Constant features are dropped with a ``DroppedFeatureWarning``.
    """
    values = X.values
    mean = values.mean(axis=1, keepdims=True)
    centered = values - mean
    std = np.sqrt((centered**2).mean(axis=1))
    scale = np.abs(mean[:, 0])
    keep = std > 1e-12 * np.maximum(scale, 1.0)
    if not keep.any():
        raise DegenerateInputError("all features are constant")
    if not keep.all():
        dropped = np.flatnonzero(~keep).tolist()
        names = [X.feature_names[i] for i in dropped] if X.feature_names else dropped
        warnings.warn(f"dropping constant features {names}", DroppedFeatureWarning, stacklevel=2)
    out = centered[keep] / std[keep, None]
    names = None
    if X.feature_names is not None:
        names = tuple(nm for nm, k in zip(X.feature_names, keep) if k)
    return DataMatrix(out, feature_names=names)


# --------------------------------------------------------------------------- #
# generators
# --------------------------------------------------------------------------- #

def _default_centers(k, dim, spread):
    if dim == 1:
        return np.arange(k, dtype=float)[:, None] * spread
    angles = 2 * np.pi * np.arange(k) / k
    centers = np.zeros((k, dim))
    centers[:, 0] = spread * np.cos(angles)
    centers[:, 1] = spread * np.sin(angles)
    return centers


def gen_gaussian_blobs(spec: GeneratorSpec) -> LabeledDataset:
    """Axis-aligned Gaussian clusters, samples dealt round-robin over clusters.

    params:
        centers  -- k x dim list of cluster centres (default: k points on a
                    circle of radius ``spread``)
        k, dim   -- used only when ``centers`` is absent (defaults 3, 2)
        spread   -- radius of the default circle (default 10)
        scale    -- standard deviation: a scalar, one per cluster, or a
                    k x dim table of per-axis values (default 1)
    """
    p = spec.params
    if "centers" in p:
        centers = np.atleast_2d(np.asarray(p["centers"], dtype=float))
    else:
        centers = _default_centers(int(p.get("k", 3)), int(p.get("dim", 2)), float(p.get("spread", 10.0)))
    k, dim = centers.shape
    if k > spec.n or spec.n < 2 * k:
        raise ValueError(f"n={spec.n} too small for {k} clusters (need n >= 2k)")
    scale = np.asarray(p.get("scale", 1.0), dtype=float)
    scale = np.broadcast_to(scale[:, None] if scale.ndim == 1 else scale, (k, dim))
    if np.any(scale <= 0):
        raise ValueError("cluster scales must be positive")

    rng = np.random.default_rng(spec.seed)
    labels = np.arange(spec.n) % k
    X = centers[labels] + scale[labels] * rng.standard_normal((spec.n, dim))
    names = tuple(f"x{i}" for i in range(dim))
    return LabeledDataset(DataMatrix(X.T, names), (("blobs", labels),))


def _unit_vectors(rng, count, dim):
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def gen_atom(spec: GeneratorSpec) -> LabeledDataset:
    """Dense ball nested in a hollow spherical shell, in 3-D.

    Half the samples fill the ball uniformly, the other half lie uniformly in
    the shell.

    params: inner_radius (1.0), shell_inner (4.0), shell_outer (4.5)
    """
    n = spec.n
    if n % 2:
        raise ValueError(f"atom needs an even n, got {n}")
    if n < 4:
        raise ValueError("atom needs n >= 4")
    p = spec.params
    r_in = float(p.get("inner_radius", 1.0))
    s_lo = float(p.get("shell_inner", 4.0))
    s_hi = float(p.get("shell_outer", 4.5))
    if not 0 < r_in < s_lo <= s_hi:
        raise ValueError("need 0 < inner_radius < shell_inner <= shell_outer")

    rng = np.random.default_rng(spec.seed)
    half = n // 2
    core = _unit_vectors(rng, half, 3) * (r_in * rng.random(half) ** (1 / 3))[:, None]
    # uniform in volume between the two shell radii
    u = rng.random(half)
    radii = (s_lo**3 + u * (s_hi**3 - s_lo**3)) ** (1 / 3)
    shell = _unit_vectors(rng, half, 3) * radii[:, None]
    X = np.vstack([core, shell])
    labels = np.repeat([0, 1], half)
    return LabeledDataset(DataMatrix(X.T, ("x", "y", "z")), (("atom", labels),))


def gen_lsun(spec: GeneratorSpec) -> LabeledDataset:
    """Two elongated bars forming an "L" plus one round cluster, in 2-D.

    The bars take n/4 samples each and the round cluster n/2.  Bars are
    uniform rectangles; the round cluster is a Gaussian truncated to a disc.

    params: horizontal_bar (((0, 6), (0, 1))), vertical_bar (((0, 1), (1.6, 6))),
            ball_center ((4.4, 2.6)), ball_sd (0.5), ball_radius (1.0)
    """
    n = spec.n
    if n % 4:
        raise ValueError(f"lsun needs n divisible by 4, got {n}")
    if n < 8:
        raise ValueError("lsun needs n >= 8")
    p = spec.params
    horiz_box = np.asarray(p.get("horizontal_bar", ((0.0, 6.0), (0.0, 1.0))), dtype=float)
    vert_box = np.asarray(p.get("vertical_bar", ((0.0, 1.0), (1.6, 6.0))), dtype=float)
    cx, cy = (float(c) for c in p.get("ball_center", (4.4, 2.6)))
    sd = float(p.get("ball_sd", 0.5))
    radius = float(p.get("ball_radius", 1.0))
    for box in (horiz_box, vert_box):
        if box.shape != (2, 2) or np.any(box[:, 1] <= box[:, 0]):
            raise ValueError("bars are ((x_lo, x_hi), (y_lo, y_hi)) with lo < hi")

    rng = np.random.default_rng(spec.seed)
    q = n // 4

    def bar(box, count):
        return box[:, 0] + rng.random((count, 2)) * (box[:, 1] - box[:, 0])

    horiz = bar(horiz_box, q)
    vert = bar(vert_box, q)
    ball = np.empty((2 * q, 2))
    filled = 0
    while filled < 2 * q:
        draw = rng.standard_normal((2 * q, 2)) * sd
        draw = draw[np.hypot(draw[:, 0], draw[:, 1]) <= radius][: 2 * q - filled]
        ball[filled : filled + len(draw)] = draw
        filled += len(draw)
    ball += [cx, cy]
    X = np.vstack([horiz, vert, ball])
    labels = np.repeat([0, 1, 2], [q, q, 2 * q])
    return LabeledDataset(DataMatrix(X.T, ("x", "y")), (("lsun", labels),))


def gen_rings(spec: GeneratorSpec) -> LabeledDataset:
    """Concentric noisy circles in 2-D, samples dealt round-robin over rings.

    params: radii ((1.0, 3.0)), noise (0.1)
    """
    p = spec.params
    radii = np.asarray(p.get("radii", (1.0, 3.0)), dtype=float)
    noise = float(p.get("noise", 0.1))
    k = radii.size
    if spec.n < 2 * k:
        raise ValueError(f"n={spec.n} too small for {k} rings")
    rng = np.random.default_rng(spec.seed)
    labels = np.arange(spec.n) % k
    theta = rng.uniform(0, 2 * np.pi, spec.n)
    r = radii[labels] + noise * rng.standard_normal(spec.n)
    X = np.stack([r * np.cos(theta), r * np.sin(theta)])
    return LabeledDataset(DataMatrix(X, ("x", "y")), (("rings", labels),))


_GENERATORS = {
    "gaussian_blobs": gen_gaussian_blobs,
    "atom": gen_atom,
    "lsun": gen_lsun,
    "rings": gen_rings,
}


def generate(spec: GeneratorSpec) -> LabeledDataset:
    return _GENERATORS[spec.kind](spec)


def compose_multiview(parts: Sequence[LabeledDataset], seed: Optional[int] = 0) -> LabeledDataset:
    """Stack independent datasets into one feature space.

    Each part's samples are shuffled with its own permutation before
    stacking, which destroys any sample-level coupling between parts.  Each
    part's label views are carried along under the same permutation.
    ``seed=None`` keeps every part in its original order.
    """
    if not parts:
        raise ValueError("need at least one part")
    n = parts[0].data.n
    if any(p.data.n != n for p in parts):
        raise ValueError(f"all parts must share n; got {[p.data.n for p in parts]}")
    rng = None if seed is None else np.random.default_rng(seed)
    blocks, names, views = [], [], []
    for idx, part in enumerate(parts):
        perm = np.arange(n) if rng is None else rng.permutation(n)
        blocks.append(part.data.values[:, perm])
        fnames = part.data.feature_names or tuple(f"x{i}" for i in range(part.data.d))
        names.extend(f"p{idx}.{nm}" for nm in fnames)
        for vname, labels in part.views:
            views.append((f"p{idx}.{vname}", labels[perm]))
    return LabeledDataset(DataMatrix(np.vstack(blocks), tuple(names)), tuple(views))


def two_view_blobs(n=600, seed=0) -> LabeledDataset:
    """Two independent 2-D blob views: four clusters and two clusters.

    Cluster scales differ inside each view so that the two coordinates of a
    view are statistically dependent; otherwise ICA would split a view into
    independent one-dimensional pieces.
    """
    ss = np.random.SeedSequence(seed)
    s_a, s_b, s_mix = (int(s.generate_state(1)[0]) for s in ss.spawn(3))
    view_a = gen_gaussian_blobs(
        GeneratorSpec(
            "gaussian_blobs",
            n,
            {"centers": [[0, 0], [10, 0], [5, 9], [5, 3]], "scale": [0.7, 1.0, 0.8, 0.6]},
            s_a,
        )
    )
    view_b = gen_gaussian_blobs(
        GeneratorSpec("gaussian_blobs", n, {"centers": [[0, 0], [8, 0]], "scale": [0.4, 1.2]}, s_b)
    )
    return compose_multiview([view_a, view_b], seed=s_mix)
