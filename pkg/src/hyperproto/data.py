"""Datasets: CSV ingestion, synthetic blobs and seeded train/test splits."""

import csv
import math
from dataclasses import dataclass

import numpy as np


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        if features.ndim != 2 or features.shape[0] < 1:
            raise ValueError("features must be a non-empty (N, n) array")
        if labels.shape != (features.shape[0],):
            raise ValueError(f"expected {features.shape[0]} labels, got shape {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer) or np.any(labels < 0):
            raise ValueError("labels must be nonnegative integers")
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels.astype(np.int64))

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def subset(self, index):
        return Dataset(self.features[index], self.labels[index])


def load_csv(path, has_header=False, label_column="last"):
    """Parse a numeric CSV whose last (or first) column holds integer labels.

    ``label_column=None`` reads every column as a feature and labels all rows 0.
    """
    features, labels = [], []
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    start = 1 if has_header else 0
    width = None
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row:
            continue
        if width is None:
            width = len(row)
            if width < (1 if label_column is None else 2):
                raise DataFormatError(f"row {lineno}: need at least one feature and a label")
        elif len(row) != width:
            raise DataFormatError(f"row {lineno}: expected {width} columns, got {len(row)}")
        if label_column is None:
            raw_label, raw_features = "0", row
        elif label_column == "last":
            raw_label, raw_features = row[-1], row[:-1]
        else:
            raw_label, raw_features = row[0], row[1:]
        try:
            values = [float(cell) for cell in raw_features]
        except ValueError as exc:
            raise DataFormatError(f"row {lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in values):
            raise DataFormatError(f"row {lineno}: non-finite feature")
        try:
            label = int(raw_label)
        except ValueError:
            raise DataFormatError(f"row {lineno}: label {raw_label!r} is not an integer") from None
        if label < 0:
            raise DataFormatError(f"row {lineno}: negative label {label}")
        features.append(values)
        labels.append(label)
    if not features:
        raise DataFormatError("empty file")
    return Dataset(np.array(features), np.array(labels, dtype=np.int64))


def save_csv(dataset, path):
    with open(path, "w", newline="") as fh:
        for x, label in zip(dataset.features, dataset.labels):
            fh.write(",".join([format(v, ".17g") for v in x] + [str(int(label))]) + "\n")


def blob_centers(k, n, radius=4.0):
    angles = 2.0 * np.pi * np.arange(k) / k
    if n == 1:
        return np.linspace(-radius, radius, k)[:, None]
    centers = np.zeros((k, n))
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    return centers


def gen_blobs(k, n, per_class, spread=0.5, seed=0):
    """Gaussian blobs around centers on a circle of radius 4 (evenly spaced for n=1)."""
    if k < 2 or n < 1 or per_class < 1 or spread < 0:
        raise ValueError(f"invalid blob parameters: K={k}, n={n}, per_class={per_class}, spread={spread}")
    rng = np.random.default_rng(seed)
    centers = blob_centers(k, n)
    labels = np.repeat(np.arange(k), per_class)
    features = centers[labels] + spread * rng.standard_normal((k * per_class, n))
    return Dataset(features, labels)


def split(dataset, test_fraction, seed=0):
    """Seeded permutation; the first ``floor(test_fraction * N)`` rows become the test set."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = len(dataset)
    n_test = int(math.floor(test_fraction * n))
    if n_test < 1 or n_test >= n:
        raise ValueError(f"test_fraction {test_fraction} leaves an empty part for N={n}")
    order = np.random.default_rng(seed).permutation(n)
    return dataset.subset(order[n_test:]), dataset.subset(order[:n_test])
