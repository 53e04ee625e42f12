"""Datasets, label budgets and label-noise injection.

All randomness goes through ``numpy.random.Generator`` backed by PCG64.
A trial seed is split with ``SeedSequence.spawn`` so that label sampling and
label corruption draw from independent streams (see :func:`trial_seeds`).
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class DataFormatError(ValueError):
    """Raised when an input file cannot be parsed into a Dataset."""


def _readonly(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    true_classes: np.ndarray
    class_count: int
    name: str = "dataset"

    def __post_init__(self):
        x = _readonly(np.asarray(self.features, dtype=float))
        y = _readonly(np.asarray(self.true_classes, dtype=np.int64))
        if x.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if x.shape[0] < 2:
            raise ValueError("a dataset needs at least two instances")
        if y.shape != (x.shape[0],):
            raise ValueError("one class per instance is required")
        if y.min() < 0 or y.max() >= self.class_count:
            raise ValueError("true classes must lie in [0, class_count)")
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain NaN or Inf")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "true_classes", y)
        object.__setattr__(self, "class_count", int(self.class_count))

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class LabelAssignment:
    """Labeled instance indices and the (possibly corrupted) class observed for each."""

    n: int
    class_count: int
    labeled_indices: np.ndarray
    observed_classes: np.ndarray

    def __post_init__(self):
        idx = _readonly(np.asarray(self.labeled_indices, dtype=np.int64))
        obs = _readonly(np.asarray(self.observed_classes, dtype=np.int64))
        if idx.ndim != 1 or obs.shape != idx.shape:
            raise ValueError("labeled_indices and observed_classes must be 1-D and aligned")
        if len(idx) > self.n:
            raise ValueError("more labels than instances")
        if len(np.unique(idx)) != len(idx):
            raise ValueError("labeled indices must be distinct")
        if len(idx) and (idx.min() < 0 or idx.max() >= self.n):
            raise ValueError("labeled index out of range")
        if len(obs) and (obs.min() < 0 or obs.max() >= self.class_count):
            raise ValueError("observed class out of range")
        object.__setattr__(self, "labeled_indices", idx)
        object.__setattr__(self, "observed_classes", obs)

    @property
    def l(self):
        return len(self.labeled_indices)

    def indicator(self):
        """Binary n x c label matrix: one 1 per labeled row, zeros elsewhere."""
        y = np.zeros((self.n, self.class_count))
        y[self.labeled_indices, self.observed_classes] = 1.0
        return y

    def labeled_indicator(self):
        """The labeled rows of :meth:`indicator`, in ``labeled_indices`` order (l x c)."""
        y = np.zeros((self.l, self.class_count))
        y[np.arange(self.l), self.observed_classes] = 1.0
        return y

    def replace(self, labeled_indices, observed_classes):
        return LabelAssignment(self.n, self.class_count, labeled_indices, observed_classes)


@dataclass(frozen=True)
class NoiseRecord:
    corrupted_indices: frozenset = field(default_factory=frozenset)
    fraction: float = 0.0
    seed: int = 0


def load_dense_csv(path, label_column):
    """Read a headered CSV with one label column and numeric features.

    Classes are re-indexed densely in order of first appearance.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataFormatError(f"{path}: label column {label_column!r} not found in header")
        li = header.index(label_column)
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            feats = []
            for j, cell in enumerate(row):
                if j == li:
                    continue
                cell = cell.strip()
                if not cell:
                    raise DataFormatError(f"{path}: line {lineno}: missing value in column {header[j]!r}")
                try:
                    feats.append(float(cell))
                except ValueError:
                    raise DataFormatError(
                        f"{path}: line {lineno}: non-numeric value {cell!r} in column {header[j]!r}"
                    ) from None
            rows.append(feats)
            labels.append(row[li].strip())
    if len(rows) < 2:
        raise DataFormatError(f"{path}: need at least two data rows")
    codes = {}
    classes = np.array([codes.setdefault(lab, len(codes)) for lab in labels])
    try:
        return Dataset(np.array(rows, dtype=float), classes, len(codes), name=path.stem)
    except ValueError as e:
        raise DataFormatError(f"{path}: {e}") from None


def write_dense_csv(data, path, label_column="label"):
    """Write a Dataset in the schema read by :func:`load_dense_csv`."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j}" for j in range(data.d)] + [label_column])
        for row, c in zip(data.features, data.true_classes):
            w.writerow([repr(float(v)) for v in row] + [int(c)])


def _read_idx(path, magic, ndim):
    raw = Path(path).read_bytes()
    if len(raw) < 4 + 4 * ndim:
        raise DataFormatError(f"{path}: truncated IDX header")
    (got,) = struct.unpack(">I", raw[:4])
    if got != magic:
        raise DataFormatError(f"{path}: bad magic 0x{got:08x}, expected 0x{magic:08x}")
    dims = struct.unpack(f">{ndim}I", raw[4 : 4 + 4 * ndim])
    body = np.frombuffer(raw, dtype=np.uint8, offset=4 + 4 * ndim)
    if body.size != int(np.prod(dims)):
        raise DataFormatError(f"{path}: payload has {body.size} bytes, header promises {np.prod(dims)}")
    return body.reshape(dims)


def load_idx(images_path, labels_path):
    """Read an IDX image/label pair (MNIST layout); pixels are scaled to [0, 1]."""
    images = _read_idx(images_path, IDX_IMAGES_MAGIC, 3)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(
            f"image count {images.shape[0]} does not match label count {labels.shape[0]}"
        )
    x = images.reshape(images.shape[0], -1).astype(float) / 255.0
    y = labels.astype(np.int64)
    return Dataset(x, y, int(y.max()) + 1, name=Path(images_path).stem)


def _simplex_centers(c, d):
    # c mutually equidistant points at unit pairwise distance, embedded in R^d
    if c == 1:
        return np.zeros((1, d))
    if d < c - 1:
        raise ValueError(f"{c} equidistant centers need d >= {c - 1}, got d = {d}")
    e = np.eye(c) - 1.0 / c
    u, _, _ = np.linalg.svd(e)
    coords = e @ u[:, : c - 1]
    coords /= np.sqrt(2.0)
    out = np.zeros((c, d))
    out[:, : c - 1] = coords
    return out


def generate_gaussian_blobs(n, d, c, separation, seed=0):
    """Unit-variance Gaussian blobs whose centers are pairwise ``separation`` apart.

    Instances are grouped by class in blocks; class sizes differ by at most one.
    """
    if not 1 <= c <= n:
        raise ValueError("need 1 <= c <= n")
    if d < 1:
        raise ValueError("need d >= 1")
    if separation <= 0:
        raise ValueError("separation must be positive")
    rng = np.random.default_rng(seed)
    sizes = [n // c + (k < n % c) for k in range(c)]
    y = np.repeat(np.arange(c), sizes)
    centers = _simplex_centers(c, d) * separation
    x = centers[y] + rng.standard_normal((n, d))
    return Dataset(x, y, c, name=f"blobs-n{n}-d{d}-c{c}-s{separation:g}-seed{seed}")


def trial_seeds(seed):
    """Derive independent (sampling, corruption) seeds from one trial seed."""
    a, b = np.random.SeedSequence(seed).spawn(2)
    return int(a.generate_state(1)[0]), int(b.generate_state(1)[0])


def sample_labels(data, l, seed, max_attempts=10_000):
    """Uniformly sample ``l`` labeled instances, resampling until every class is covered."""
    present = np.unique(data.true_classes)
    if l < len(present):
        raise ValueError(f"cannot cover {len(present)} classes with {l} labels")
    if l > data.n:
        raise ValueError(f"cannot label {l} of {data.n} instances")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        idx = np.sort(rng.choice(data.n, size=l, replace=False))
        if len(np.unique(data.true_classes[idx])) == len(present):
            return LabelAssignment(data.n, data.class_count, idx, data.true_classes[idx])
    raise RuntimeError(f"no class-covering sample found in {max_attempts} attempts")


def corrupted_count(fraction, l):
    # half-up rounding; Python's round() would send 2.5 to 2
    return int(np.floor(fraction * l + 0.5))


def corrupt_labels(assignment, fraction, seed):
    """Flip ``round(fraction * l)`` labels to a uniformly drawn different class."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    c = assignment.class_count
    m = corrupted_count(fraction, assignment.l)
    if m == 0:
        return assignment, NoiseRecord(frozenset(), fraction, seed)
    if c < 2:
        raise ValueError("cannot flip labels with a single class")
    rng = np.random.default_rng(seed)
    pos = rng.choice(assignment.l, size=m, replace=False)
    obs = assignment.observed_classes.copy()
    shift = rng.integers(0, c - 1, size=m)
    obs[pos] = shift + (shift >= obs[pos])
    noisy = assignment.replace(assignment.labeled_indices, obs)
    record = NoiseRecord(frozenset(int(i) for i in assignment.labeled_indices[pos]), fraction, seed)
    return noisy, record


def corrupted_from_truth(data, assignment):
    """Instances whose observed class disagrees with the ground truth."""
    idx = assignment.labeled_indices
    wrong = data.true_classes[idx] != assignment.observed_classes
    return frozenset(int(i) for i in idx[wrong])
