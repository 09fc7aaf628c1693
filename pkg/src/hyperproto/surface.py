"""Grid data of the peBu loss and its radial derivative over the Poincaré disc."""

import numpy as np

from .geometry import as_ideal_point, hp_from_euclidean
from .loss import pebu_grad_hp, pebu_loss

EDGE_CUTOFF = 0.995


def loss_surface(prototype=(1.0, 0.0), resolution=100, cutoff=EDGE_CUTOFF):
    """Rows ``(x, y, loss, d_r)`` on the grid ``{i / resolution}^2`` inside ``|z| < cutoff``.

    Rows are ordered by ``x`` then ``y``; ``d_r`` is the derivative of the loss
    with respect to the hyperbolic radius.
    """
    p = as_ideal_point(prototype)
    if p.shape != (2,):
        raise ValueError(f"the loss surface is drawn on the disc (d=2), got d={p.shape[-1]}")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    ticks = np.arange(-resolution, resolution + 1) / resolution
    xs, ys = np.meshgrid(ticks, ticks, indexing="ij")
    z = np.stack([xs.ravel(), ys.ravel()], axis=1)
    z = z[np.hypot(z[:, 0], z[:, 1]) < cutoff]
    h = hp_from_euclidean(z)
    loss = pebu_loss(h, p)
    d_r, _ = pebu_grad_hp(h, p)
    return np.column_stack([z, loss, d_r])


def format_surface(rows):
    lines = ["x,y,loss,d_r"]
    lines.extend(",".join(format(v, ".17g") for v in row) for row in rows)
    return "\n".join(lines) + "\n"
