"""Penalized Busemann (peBu) loss and its gradients.

The loss of a point ``z`` against an ideal point ``p`` is
``b_p(z) - log(1 - |z|^2) = 2 log(|p - z| / (1 - |z|^2))``; it vanishes at the
origin and is bounded below by ``-2 log 2``.
"""

import numpy as np

from .geometry import (
    GeometryError,
    _check_same_dim,
    alignment_gaps,
    busemann,
    exp_origin,
    one_minus_sq_norm,
)

LOWER_BOUND = -2.0 * np.log(2.0)


def penalty(r):
    """Overconfidence penalty ``-log(1 - |z|^2) = 2 log cosh(r/2)``."""
    r = np.asarray(r, dtype=np.float64)
    return np.where(r == 0.0, 0.0, r + 2.0 * np.log1p(np.exp(-r)) - 2.0 * np.log(2.0))


def pebu_loss(h, p):
    """peBu loss of the point ``h`` (polar coordinates) against ideal point ``p``."""
    return busemann(p, h) + penalty(h.r)


def pebu_loss_euclidean(z, p):
    """Closed Euclidean form ``2 log(|p - z| / (1 - |z|^2))``; a cross-check only."""
    z = np.asarray(z, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    _check_same_dim(p, z)
    return np.log(np.sum((p - z) ** 2, axis=-1)) - 2.0 * np.log(one_minus_sq_norm(z))


def _radial_ratio(r, one_minus, one_plus):
    # (tanh r - c) / (1 - c tanh r) and tanh r / (1 - c tanh r), rewritten with
    # q = e^{-2r} so nothing cancels when tanh r rounds to 1.
    q = np.exp(-2.0 * r)
    denom = one_minus + q * one_plus
    empty = denom == 0.0
    safe = np.where(empty, 1.0, denom)
    ratio = np.where(empty, -1.0, (one_minus - q * one_plus) / safe)
    scale = np.where(empty, np.inf, (1.0 - q) / safe)
    return ratio, scale


def pebu_grad_hp(h, p):
    """Gradients ``(d_r, d_u)`` of the loss in polar coordinates.

    ``d_u`` is the ambient gradient ``-p tanh r / (1 - tanh r u.p)``; it is not
    projected onto the tangent space of the sphere.
    """
    p = np.asarray(p, dtype=np.float64)
    _check_same_dim(p, h.u)
    r = np.asarray(h.r, dtype=np.float64)
    one_minus, one_plus = alignment_gaps(h.u, p)
    ratio, scale = _radial_ratio(r, one_minus, one_plus)
    d_r = ratio + np.tanh(r / 2.0)
    with np.errstate(invalid="ignore"):
        d_u = -p * scale[..., None]
    return d_r, d_u


def pebu_grad_y(y, p):
    """Gradient of ``pebu_loss(exp_origin(y), p)`` with respect to ``y``.

    With ``r = |y|``, ``u = y / r``, ``c = u.p`` and ``D = 1 - c tanh r``::

        u (tanh r - c) / D - (p - c u) tanh r / (r D) + u tanh(r / 2)

    and ``-p`` at ``y = 0``.
    """
    y = np.asarray(y, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    _check_same_dim(p, y)
    h = exp_origin(y)
    r, u = h.r, h.u
    one_minus, one_plus = alignment_gaps(u, p)
    ratio, scale = _radial_ratio(r, one_minus, one_plus)
    c = np.sum(u * p, axis=-1)
    tangential = p - c[..., None] * u
    zero = r == 0.0
    safe_r = np.where(zero, 1.0, r)
    with np.errstate(invalid="ignore"):
        angular = np.where(np.isinf(scale)[..., None], 0.0, tangential * (scale / safe_r)[..., None])
    grad = u * (ratio + np.tanh(r / 2.0))[..., None] - angular
    return np.where(zero[..., None], -p * np.ones_like(grad), grad)


def _lookup(prototypes, labels):
    directions = getattr(prototypes, "directions", prototypes)
    directions = np.asarray(directions, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= len(directions)):
        bad = labels[(labels < 0) | (labels >= len(directions))][0]
        raise ValueError(f"unknown label {bad}; prototypes cover 0..{len(directions) - 1}")
    return directions[labels]


def batch_loss(ys, labels, prototypes):
    """Mean peBu loss over a batch and the per-example ``y`` gradients scaled by 1/N.

    ``ys`` is ``(N, d)``; ``labels`` index rows of ``prototypes``, which may be a
    :class:`~hyperproto.prototypes.PrototypeSet` or an ``(K, d)`` array.
    """
    ys = np.asarray(ys, dtype=np.float64)
    if ys.ndim != 2 or ys.shape[0] == 0:
        raise ValueError("batch must be a non-empty (N, d) array")
    labels = np.asarray(labels)
    if labels.shape != (ys.shape[0],):
        raise ValueError(f"expected {ys.shape[0]} labels, got shape {labels.shape}")
    ps = _lookup(prototypes, labels)
    n = ys.shape[0]
    losses = pebu_loss(exp_origin(ys), ps)
    # Sequential sum in input order keeps training runs bit-reproducible.
    total = 0.0
    for value in losses:
        total += float(value)
    return total / n, pebu_grad_y(ys, ps) / n


def cross_entropy_1d(z_prime, p_prime):
    """Binary cross-entropy ``-p' log z' - (1 - p') log(1 - z')``."""
    z_prime = np.asarray(z_prime, dtype=np.float64)
    if np.any((z_prime <= 0.0) | (z_prime >= 1.0)):
        raise GeometryError("z' must lie in the open interval (0, 1)")
    return -p_prime * np.log(z_prime) - (1 - p_prime) * np.log1p(-z_prime)
