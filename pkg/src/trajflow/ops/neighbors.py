"""Cutoff neighbor search: cell lists with a brute-force fallback.

The cell-list path needs a fully periodic orthorhombic box with at least
three cells per axis (cell edge ≥ cutoff); anything else falls back to the
vectorized O(N²) minimum-image scan, which is exact for every box. A box
with a periodic edge shorter than 2x cutoff is refused for large N (the
pair count explodes and the caller almost certainly mis-set the cutoff).
"""

from __future__ import annotations

import numpy as np

from ..errors import BoxTooSmall
from ..model.pbc import minimum_image, require_orthorhombic

BRUTE_FORCE_LIMIT = 5000
_CHUNK = 2 ** 21  # candidate pairs processed per block


def _half_shell_offsets() -> np.ndarray:
    offs = [
        (dx, dy, dz)
        for dz in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dx in (-1, 0, 1)
        if dz > 0 or (dz == 0 and dy > 0) or (dz == 0 and dy == 0 and dx > 0)
    ]
    return np.array(offs, dtype=np.int64)


HALF_SHELL = _half_shell_offsets()


def brute_force_pairs(positions, box, cutoff: float) -> np.ndarray:
    """All unordered pairs (i<j) with minimum-image distance ≤ cutoff."""
    pos = np.asarray(positions, dtype=np.float64)
    n = pos.shape[0]
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    cut2 = float(cutoff) * float(cutoff)
    out_i = []
    out_j = []
    rows_per_block = max(1, _CHUNK // n)  # bounds the candidate matrix
    for start in range(0, n, rows_per_block):
        stop = min(start + rows_per_block, n)
        delta = pos[start:stop, None, :] - pos[None, :, :]
        delta = minimum_image(delta, box)
        d2 = np.einsum("ijk,ijk->ij", delta, delta)
        ii, jj = np.nonzero(d2 <= cut2)
        ii = ii + start
        keep = ii < jj
        out_i.append(ii[keep])
        out_j.append(jj[keep])
    pairs = np.stack([np.concatenate(out_i), np.concatenate(out_j)], axis=1)
    pairs = pairs.astype(np.int64)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def _cell_list_pairs(pos, box, cutoff: float, ncells) -> np.ndarray:
    lengths = box.lengths
    cut2 = float(cutoff) * float(cutoff)
    # wrap into [0, L), bucket; the right edge clamps into the last cell
    frac = pos / lengths
    frac -= np.floor(frac)
    cell_xyz = np.minimum((frac * ncells).astype(np.int64), ncells - 1)
    ncx, ncy, ncz = (int(c) for c in ncells)
    cell_id = cell_xyz[:, 0] + ncx * (cell_xyz[:, 1] + ncy * cell_xyz[:, 2])
    order = np.argsort(cell_id, kind="stable")
    sorted_ids = cell_id[order]
    ncell_total = ncx * ncy * ncz
    starts = np.searchsorted(sorted_ids, np.arange(ncell_total + 1))
    counts = np.diff(starts)

    gx, gy, gz = np.meshgrid(
        np.arange(ncx), np.arange(ncy), np.arange(ncz), indexing="ij"
    )
    base_xyz = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    base_lin = base_xyz[:, 0] + ncx * (base_xyz[:, 1] + ncy * base_xyz[:, 2])

    found_i = []
    found_j = []

    def flush(ii, jj):
        delta = pos[ii] - pos[jj]
        delta = minimum_image(delta, box)
        d2 = np.einsum("ij,ij->i", delta, delta)
        keep = d2 <= cut2
        found_i.append(ii[keep])
        found_j.append(jj[keep])

    def emit(cells_a, cells_b, same_cell: bool):
        """Candidate pairs from the product of each cell pair, chunked."""
        ca = counts[cells_a]
        cb = counts[cells_b]
        nonzero = (ca > 0) & (cb > 0)
        cells_a = cells_a[nonzero]
        cells_b = cells_b[nonzero]
        ca = ca[nonzero]
        cb = cb[nonzero]
        total = (ca * cb).astype(np.int64)
        if total.sum() == 0:
            return
        bounds = np.cumsum(total)
        lo = 0
        while lo < len(total):
            target = (bounds[lo - 1] if lo else 0) + _CHUNK
            hi = int(np.searchsorted(bounds, target)) + 1
            hi = min(max(hi, lo + 1), len(total))
            t = total[lo:hi]
            tsum = int(t.sum())
            offsets_flat = np.repeat(np.cumsum(t) - t, t)
            local = np.arange(tsum, dtype=np.int64) - offsets_flat
            cb_rep = np.repeat(cb[lo:hi], t)
            a_local = local // cb_rep
            b_local = local - a_local * cb_rep
            a_idx = np.repeat(starts[cells_a[lo:hi]], t) + a_local
            b_idx = np.repeat(starts[cells_b[lo:hi]], t) + b_local
            if same_cell:
                mask = a_local < b_local
                a_idx = a_idx[mask]
                b_idx = b_idx[mask]
            flush(order[a_idx], order[b_idx])
            lo = hi

    emit(base_lin, base_lin, same_cell=True)
    for off in HALF_SHELL:
        nb_xyz = (base_xyz + off) % np.array([ncx, ncy, ncz])
        nb_lin = nb_xyz[:, 0] + ncx * (nb_xyz[:, 1] + ncy * nb_xyz[:, 2])
        emit(base_lin, nb_lin, same_cell=False)

    if not found_i:
        return np.empty((0, 2), dtype=np.int64)
    ii = np.concatenate(found_i)
    jj = np.concatenate(found_j)
    swap = ii > jj
    pairs = np.stack([np.where(swap, jj, ii), np.where(swap, ii, jj)], axis=1)
    pairs = pairs.astype(np.int64)
    order2 = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order2]


def neighbor_pairs(positions, box, cutoff: float) -> np.ndarray:
    """Unordered neighbor pairs (i<j), lexicographically sorted."""
    if not cutoff > 0:
        raise BoxTooSmall(f"cutoff must be positive, got {cutoff}")
    require_orthorhombic(box)
    pos = np.ascontiguousarray(positions, dtype=np.float64)
    n = pos.shape[0]
    lengths = box.lengths
    small = [
        axis for axis in range(3)
        if box.periodic[axis] and lengths[axis] < 2.0 * cutoff
    ]
    if small and n >= BRUTE_FORCE_LIMIT:
        raise BoxTooSmall(
            f"periodic edge {lengths[small[0]]} < 2x cutoff {cutoff} with N={n}"
        )
    fully_periodic = all(box.periodic)
    if fully_periodic and not small:
        ncells = np.floor(lengths / cutoff).astype(np.int64)
        # keep the grid proportional to N: a sparse system in a huge box
        # would otherwise allocate per-cell arrays far beyond the atom
        # count (cells larger than the cutoff stay correct)
        limit = max(3, int(np.ceil(np.cbrt(8.0 * max(n, 1)))))
        ncells = np.minimum(ncells, limit)
        if np.all(ncells >= 3):
            return _cell_list_pairs(pos, box, cutoff, ncells)
    return brute_force_pairs(pos, box, cutoff)


def pairs_to_csr(pairs: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric CSR adjacency (offsets[N+1], sorted neighbor blocks)."""
    if len(pairs) == 0:
        return np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int64)
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((dst, src))
    src = src[order]
    dst = dst[order]
    offsets = np.searchsorted(src, np.arange(n + 1)).astype(np.int64)
    return offsets, dst.astype(np.int64)


def list_neighbors(positions, box, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    """CSR neighbor list over all atoms of ``positions``."""
    pairs = neighbor_pairs(positions, box, cutoff)
    return pairs_to_csr(pairs, np.asarray(positions).shape[0])
