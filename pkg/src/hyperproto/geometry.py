"""Poincaré ball coordinates, hyperbolic distance, exp map at the origin and
the Busemann function.

Points are handled in two coordinate systems: Euclidean coordinates ``z``
inside the open unit ball, and hyperbolic polar coordinates ``(r, u)`` with
``z = tanh(r / 2) * u``. Every function broadcasts over leading axes, so a
batch of points is an ``(..., d)`` array of directions with ``(...)`` radii.
"""

from typing import NamedTuple

import numpy as np

UNIT_TOL = 1e-12


class GeometryError(ValueError):
    """Raised for inputs that are not points of hyperbolic space."""


def _as_vectors(x, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        raise GeometryError(f"{name} must have at least one axis, got a scalar")
    if x.shape[-1] < 1:
        raise GeometryError(f"{name} must have dimension d >= 1")
    if not np.all(np.isfinite(x)):
        raise GeometryError(f"{name} has non-finite entries")
    return x


def _check_same_dim(a, b):
    if a.shape[-1] != b.shape[-1]:
        raise GeometryError(f"dimension mismatch: {a.shape[-1]} != {b.shape[-1]}")


def canonical_direction(d, shape=()):
    u = np.zeros(tuple(shape) + (d,))
    u[..., 0] = 1.0
    return u


class HyperbolicPolar(NamedTuple):
    """Hyperbolic polar coordinates ``(r, u)``.

    ``r`` has shape ``batch`` and ``u`` has shape ``batch + (d,)``. At ``r == 0``
    the direction is the first standard basis vector.
    """

    r: np.ndarray
    u: np.ndarray

    @classmethod
    def create(cls, r, u):
        """Validate and build coordinates, canonicalizing the origin direction."""
        r = np.asarray(r, dtype=np.float64)
        u = _as_vectors(u, "u")
        if r.shape != u.shape[:-1]:
            raise GeometryError(f"radius shape {r.shape} does not match direction shape {u.shape}")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise GeometryError("radius must be finite and nonnegative")
        if np.any(np.abs(np.linalg.norm(u, axis=-1) - 1.0) > UNIT_TOL):
            raise GeometryError("direction must be a unit vector")
        u = np.where((r == 0)[..., None], canonical_direction(u.shape[-1], r.shape), u)
        return cls(r, u)

    @classmethod
    def origin(cls, d):
        return cls(np.float64(0.0), canonical_direction(d))

    @property
    def dim(self):
        return self.u.shape[-1]


def as_ideal_point(p):
    """Validate ``p`` as an ideal point, i.e. a unit vector (or batch of them)."""
    p = _as_vectors(p, "ideal point")
    if np.any(np.abs(np.linalg.norm(p, axis=-1) - 1.0) > UNIT_TOL):
        raise GeometryError("ideal point must be a unit vector")
    return p


def _compensated_sum(terms):
    # Pairwise-error-free accumulation along the last axis (Ogita-Rump-Oishi Sum2).
    s = terms[..., 0]
    comp = np.zeros_like(s)
    for k in range(1, terms.shape[-1]):
        t = terms[..., k]
        new = s + t
        bb = new - s
        comp = comp + ((s - (new - bb)) + (t - bb))
        s = new
    return s + comp


def _exact_squares(x):
    # Veltkamp split: x*x == hi*hi + 2*hi*lo + lo*lo exactly in binary64.
    c = 134217729.0 * x
    hi = c - (c - x)
    lo = x - hi
    return np.concatenate([hi * hi, 2.0 * hi * lo, lo * lo], axis=-1)


def one_minus_sq_norm(z):
    """``1 - |z|^2`` evaluated to near full relative precision near the boundary."""
    z = np.asarray(z, dtype=np.float64)
    terms = np.concatenate([np.ones(z.shape[:-1] + (1,)), -_exact_squares(z)], axis=-1)
    # Largest magnitudes first keeps the cascade well-behaved.
    order = np.argsort(-np.abs(terms), axis=-1, kind="stable")
    return _compensated_sum(np.take_along_axis(terms, order, axis=-1))


def hp_from_euclidean(z):
    """Convert a Poincaré ball point (or batch) to hyperbolic polar coordinates."""
    z = _as_vectors(z, "z")
    norm = np.linalg.norm(z, axis=-1)
    gap = one_minus_sq_norm(z)
    if np.any(norm >= 1.0) or np.any(gap <= 0.0):
        raise GeometryError("point is not inside the open unit ball")
    # r = 2 artanh|z| = log((1 + |z|)^2 / (1 - |z|^2))
    r = 2.0 * np.log1p(norm) - np.log(gap)
    r = np.where(norm == 0.0, 0.0, r)
    safe = np.where(norm == 0.0, 1.0, norm)[..., None]
    u = np.where((norm == 0.0)[..., None], canonical_direction(z.shape[-1], norm.shape), z / safe)
    return HyperbolicPolar(r, u)


def euclidean_from_hp(h):
    """``z = tanh(r/2) u``."""
    return np.tanh(np.asarray(h.r) / 2.0)[..., None] * h.u


def exp_origin(y):
    """Exponential map at the origin, returned in hyperbolic polar coordinates."""
    y = _as_vectors(y, "y")
    r = np.linalg.norm(y, axis=-1)
    safe = np.where(r == 0.0, 1.0, r)[..., None]
    u = np.where((r == 0.0)[..., None], canonical_direction(y.shape[-1], r.shape), y / safe)
    return HyperbolicPolar(r, u)


def alignment_gaps(u, p):
    """Return ``(1 - u.p, 1 + u.p)`` for unit vectors.

    Computed as ``|u - p|^2 / 2`` and ``|u + p|^2 / 2`` so that both are exactly
    zero at exact (anti-)alignment and keep relative precision near it.
    """
    one_minus = 0.5 * np.sum((u - p) ** 2, axis=-1)
    one_plus = 0.5 * np.sum((u + p) ** 2, axis=-1)
    return one_minus, one_plus


def hyperbolic_distance(a, b):
    """Hyperbolic distance between two points given in polar coordinates."""
    _check_same_dim(a.u, b.u)
    one_minus, _ = alignment_gaps(a.u, b.u)
    # cosh(d) - 1 = 2 sinh^2((r1 - r2)/2) + sinh r1 sinh r2 (1 - u1.u2); the
    # clamp at zero is the arcosh argument clamp at one.
    delta = 2.0 * np.sinh((a.r - b.r) / 2.0) ** 2 + np.sinh(a.r) * np.sinh(b.r) * one_minus
    delta = np.maximum(delta, 0.0)
    return np.log1p(delta + np.sqrt(delta * (delta + 2.0)))


def busemann(p, h):
    """Busemann function ``log(cosh r - sinh r u.p)`` of the ideal point ``p``.

    Evaluated as ``r + log((1 - c)/2 + e^{-2r} (1 + c)/2)`` with a log-add-exp,
    which stays exact along geodesics into ``p`` for any radius.
    """
    p = np.asarray(p, dtype=np.float64)
    _check_same_dim(p, h.u)
    r = np.asarray(h.r, dtype=np.float64)
    one_minus, one_plus = alignment_gaps(h.u, p)
    with np.errstate(divide="ignore"):
        tail = np.logaddexp(np.log(one_minus / 2.0), -2.0 * r + np.log(one_plus / 2.0))
    # b is confined to [-r, r] analytically.
    tail = np.clip(tail, -2.0 * r, 0.0)
    return np.where(r == 0.0, 0.0, r + tail)


def busemann_euclidean(p, z):
    """Busemann function from Euclidean coordinates, ``log(|p - z|^2 / (1 - |z|^2))``.

    Only well conditioned away from the boundary; kept as a cross-check.
    """
    p = np.asarray(p, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    _check_same_dim(p, z)
    return np.log(np.sum((p - z) ** 2, axis=-1)) - np.log(one_minus_sq_norm(z))


def angle_to_unit(theta):
    theta = np.asarray(theta, dtype=np.float64)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
