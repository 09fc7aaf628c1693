"""Class prototypes on the ideal boundary of the Poincaré ball."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .geometry import UNIT_TOL, angle_to_unit

FILE_UNIT_TOL = 1e-6


class PrototypeFileError(ValueError):
    pass


@dataclass(frozen=True)
class PrototypeSet:
    """``K`` unit vectors in ``R^d``; row ``j`` is the prototype of label ``j``."""

    directions: np.ndarray
    labels: np.ndarray = field(default=None)

    def __post_init__(self):
        directions = np.array(self.directions, dtype=np.float64)
        if directions.ndim != 2:
            raise ValueError("prototype directions must be a (K, d) array")
        k, d = directions.shape
        if k < 2 or d < 1:
            raise ValueError(f"need K >= 2 prototypes of dimension d >= 1, got K={k}, d={d}")
        if not np.all(np.isfinite(directions)):
            raise ValueError("prototype directions must be finite")
        norms = np.linalg.norm(directions, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise ValueError(f"prototype {int(np.argmax(np.abs(norms - 1.0)))} is not a unit vector")
        labels = np.arange(k) if self.labels is None else np.asarray(self.labels)
        if labels.shape != (k,) or not np.array_equal(np.sort(labels), np.arange(k)):
            raise ValueError(f"labels must be exactly 0..{k - 1}, each once")
        order = np.argsort(labels)
        directions = directions[order]
        cos = directions @ directions.T
        np.fill_diagonal(cos, -np.inf)
        if np.any(cos >= 1.0 - 1e-9):
            i, j = np.unravel_index(np.argmax(cos), cos.shape)
            raise ValueError(f"prototypes {i} and {j} coincide")
        directions.setflags(write=False)
        labels = np.arange(k)
        labels.setflags(write=False)
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.directions.shape[0]

    @property
    def n_classes(self):
        return self.directions.shape[0]

    @property
    def dim(self):
        return self.directions.shape[1]

    def __eq__(self, other):
        if not isinstance(other, PrototypeSet):
            return NotImplemented
        return np.array_equal(self.directions, other.directions)

    __hash__ = None


def max_pairwise_cosine(directions):
    directions = getattr(directions, "directions", directions)
    cos = directions @ directions.T
    np.fill_diagonal(cos, -np.inf)
    return float(cos.max())


def separation_objective(directions):
    """Mean over prototypes of the cosine to the nearest other prototype."""
    cos = directions @ directions.T
    np.fill_diagonal(cos, -np.inf)
    # argmax returns the first maximum, i.e. ties go to the smallest index.
    nearest = np.argmax(cos, axis=1)
    worst = cos[np.arange(len(cos)), nearest]
    return float(np.mean(worst)), nearest


def place_line():
    """The two ideal points of the hyperbolic line: label 0 at -1, label 1 at +1."""
    return PrototypeSet(np.array([[-1.0], [1.0]]))


def place_uniform_circle(k):
    if k < 2:
        raise ValueError(f"need K >= 2 prototypes, got {k}")
    return PrototypeSet(angle_to_unit(2.0 * np.pi * np.arange(k) / k))


def place_separated(k, d, iterations=1000, step=0.1, decay=0.99, seed=0):
    """Spread ``k`` unit vectors in ``R^d`` by minimizing their worst cosines.

    Every iteration moves each prototype against its nearest neighbour (the
    gradient of their cosine), renormalizes, and shrinks the step by ``decay``.
    The iterate with the lowest objective is returned.
    """
    if k < 2 or d < 2:
        raise ValueError(f"separated placement needs K >= 2 and d >= 2, got K={k}, d={d}")
    if iterations < 0 or step <= 0 or not 0 < decay <= 1:
        raise ValueError("iterations must be >= 0, step > 0 and decay in (0, 1]")
    rng = np.random.default_rng(seed)
    current = rng.standard_normal((k, d))
    current /= np.linalg.norm(current, axis=1, keepdims=True)
    best, best_value = current, np.inf
    rate = step
    for it in range(iterations + 1):
        value, nearest = separation_objective(current)
        if not np.isfinite(value):
            raise FloatingPointError(f"separation objective became non-finite at iteration {it}")
        if value < best_value:
            best, best_value = current, value
        if it == iterations:
            break
        moved = current - rate * current[nearest]
        norms = np.linalg.norm(moved, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise FloatingPointError(f"prototype collapsed to zero at iteration {it}")
        current = moved / norms
        rate *= decay
    return PrototypeSet(best)


def project_to_ideal(radii, directions, labels=None):
    """Drop the radii of embedded points, keeping their directions as prototypes.

    Points at the origin have no direction and are rejected.
    """
    radii = np.asarray(radii, dtype=np.float64)
    directions = np.asarray(directions, dtype=np.float64)
    if np.any(radii <= 0.0):
        raise ValueError(f"point {int(np.argmax(radii <= 0.0))} has radius 0; its direction is undefined")
    directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    return PrototypeSet(directions, labels)


def format_prototypes(prototypes):
    out = io.StringIO()
    for label, row in zip(prototypes.labels, prototypes.directions):
        out.write(",".join([str(int(label))] + [format(v, ".17g") for v in row]) + "\n")
    return out.getvalue()


def save_prototypes(prototypes, path):
    with open(path, "w", newline="") as fh:
        fh.write(format_prototypes(prototypes))


def _parse_rows(rows, width_name):
    parsed = []
    for lineno, row in enumerate(rows, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < 2:
            raise PrototypeFileError(f"row {lineno}: expected label and {width_name}")
        try:
            label = int(row[0])
            values = [float(cell) for cell in row[1:]]
        except ValueError as exc:
            raise PrototypeFileError(f"row {lineno}: {exc}") from None
        if parsed and len(values) != len(parsed[0][2]):
            raise PrototypeFileError(f"row {lineno}: expected {len(parsed[0][2])} values, got {len(values)}")
        parsed.append((lineno, label, values))
    if not parsed:
        raise PrototypeFileError("no rows found")
    seen = {}
    for lineno, label, _ in parsed:
        if label in seen:
            raise PrototypeFileError(f"row {lineno}: duplicate label {label} (first on row {seen[label]})")
        seen[label] = lineno
    return parsed


def load_prototypes(path):
    """Read a ``label,c1,...,cd`` file written by :func:`save_prototypes`."""
    with open(path, newline="") as fh:
        parsed = _parse_rows(csv.reader(fh), "coordinates")
    for lineno, _, values in parsed:
        norm = np.linalg.norm(values)
        if abs(norm - 1.0) > FILE_UNIT_TOL:
            raise PrototypeFileError(f"row {lineno}: norm {norm:.6g} is not 1")
    labels = np.array([label for _, label, _ in parsed])
    if not np.array_equal(np.sort(labels), np.arange(len(labels))):
        raise PrototypeFileError(f"labels must be 0..{len(labels) - 1}")
    # Vectors within the file tolerance are renormalized to the set's tolerance.
    directions = np.array([values for _, _, values in parsed])
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    directions = np.where(np.abs(norms - 1.0) > UNIT_TOL, directions / norms, directions)
    try:
        return PrototypeSet(directions, labels)
    except ValueError as exc:
        raise PrototypeFileError(str(exc)) from None


def load_polar_points(path):
    """Read ``label,r,u1,...,ud`` rows of embedded points for :func:`project_to_ideal`."""
    with open(path, newline="") as fh:
        parsed = _parse_rows(csv.reader(fh), "radius and direction")
    for lineno, _, values in parsed:
        if len(values) < 2:
            raise PrototypeFileError(f"row {lineno}: expected a radius and at least one direction coordinate")
    labels = np.array([label for _, label, _ in parsed])
    radii = np.array([values[0] for _, _, values in parsed])
    directions = np.array([values[1:] for _, _, values in parsed])
    return project_to_ideal(radii, directions, labels)
