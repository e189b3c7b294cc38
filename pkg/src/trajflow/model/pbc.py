"""Periodic boundary helpers (orthorhombic boxes only)."""

from __future__ import annotations

import numpy as np

from ..errors import TriclinicUnsupported


def minimum_image(delta, box) -> np.ndarray:
    """Wrap displacement components into [-L/2, L/2) along periodic axes.

    ``delta`` may be a 3-vector or an (..., 3) array. Non-periodic components
    pass through unchanged.
    """
    d = np.array(delta, dtype=np.float64, copy=True)
    lengths = box.lengths
    for axis in range(3):
        if box.periodic[axis]:
            length = lengths[axis]
            d[..., axis] -= length * np.floor(d[..., axis] / length + 0.5)
    return d


def require_orthorhombic(box) -> None:
    if not box.is_orthorhombic:
        raise TriclinicUnsupported("only orthorhombic boxes are supported here")
