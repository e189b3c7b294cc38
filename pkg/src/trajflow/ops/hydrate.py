"""Guest-pair filtering, cone water selection, hydrogen-bond perception,
O-H to O-O rebonding, fixed-length ring search, and cage labeling.

All atom indices are global (into the frame's position array). Per-pair
collections use a CSR layout: offsets of length K+1 plus a flat value
array, where block p holds the values for guest pair p.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import BadParam, OrphanHydrogen
from ..model.pbc import minimum_image

GUEST_CUTOFF = 9.0
HBOND_R_MAX = 3.5
HBOND_THETA_MIN = 150.0
CONE_ANGLE = 45.0
COVALENT_OH_MAX = 1.2
RING_LENGTH = 5


def filter_guests(positions, box, guest_idx, cutoff: float = GUEST_CUTOFF) -> np.ndarray:
    """Unordered guest pairs (global indices, i<j) within ``cutoff``, sorted."""
    if not cutoff > 0:
        raise BadParam(f"guest cutoff must be positive, got {cutoff}")
    positions = np.asarray(positions, dtype=np.float64)
    guest_idx = np.sort(np.asarray(guest_idx, dtype=np.int64))
    m = len(guest_idx)
    if m < 2:
        return np.empty((0, 2), dtype=np.int64)
    gpos = positions[guest_idx]
    delta = minimum_image(gpos[:, None, :] - gpos[None, :, :], box)
    d2 = np.einsum("ijk,ijk->ij", delta, delta)
    ii, jj = np.nonzero(d2 <= cutoff * cutoff)
    keep = ii < jj
    pairs = np.stack([guest_idx[ii[keep]], guest_idx[jj[keep]]], axis=1)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def cone_mask(positions, box, g1: int, g2: int, water_idx,
              angle_deg: float = CONE_ANGLE, max_distance=None) -> np.ndarray:
    """Waters inside both inclusive cones around the g1-g2 axis.

    A water at either apex has a zero displacement vector; the inequality
    0 >= 0 then accepts it, matching the on-axis (midpoint) case.
    """
    positions = np.asarray(positions, dtype=np.float64)
    water_idx = np.asarray(water_idx, dtype=np.int64)
    axis = minimum_image(positions[g2] - positions[g1], box)
    v1 = minimum_image(positions[water_idx] - positions[g1], box)
    v2 = minimum_image(positions[water_idx] - positions[g2], box)
    cos_t = math.cos(math.radians(angle_deg))
    nu = float(np.linalg.norm(axis))
    n1 = np.linalg.norm(v1, axis=1)
    n2 = np.linalg.norm(v2, axis=1)
    ok = (v1 @ axis >= n1 * nu * cos_t) & (v2 @ -axis >= n2 * nu * cos_t)
    if max_distance is not None:
        ok &= (n1 <= max_distance) & (n2 <= max_distance)
    return ok


def filter_waters(positions, box, pairs, water_idx,
                  angle_deg: float = CONE_ANGLE,
                  max_distance=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-pair qualifying water oxygens as CSR (offsets, flat global ids)."""
    if not 0.0 < angle_deg < 90.0:
        raise BadParam(f"cone angle must be in (0, 90) degrees, got {angle_deg}")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    water_idx = np.sort(np.asarray(water_idx, dtype=np.int64))
    blocks = []
    counts = np.zeros(len(pairs), dtype=np.int64)
    for p, (g1, g2) in enumerate(pairs):
        ok = cone_mask(positions, box, int(g1), int(g2), water_idx,
                       angle_deg, max_distance)
        sel = water_idx[ok]
        counts[p] = len(sel)
        blocks.append(sel)
    offsets = np.zeros(len(pairs) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    flat = (np.concatenate(blocks) if blocks
            else np.empty(0, dtype=np.int64)).astype(np.int64)
    return offsets, flat


def covalent_oh(positions, box, o_idx, h_idx,
                r_max: float = COVALENT_OH_MAX) -> np.ndarray:
    """Owning oxygen (global index) for each hydrogen, by nearest O <= r_max."""
    positions = np.asarray(positions, dtype=np.float64)
    o_idx = np.sort(np.asarray(o_idx, dtype=np.int64))
    h_idx = np.asarray(h_idx, dtype=np.int64)
    if len(h_idx) == 0:
        return np.empty(0, dtype=np.int64)
    if len(o_idx) == 0:
        raise OrphanHydrogen("hydrogens present but no oxygens to bind to")
    owner = np.empty(len(h_idx), dtype=np.int64)
    r2 = r_max * r_max
    chunk = max(1, (2 ** 20) // max(1, len(o_idx)))
    for start in range(0, len(h_idx), chunk):
        stop = min(start + chunk, len(h_idx))
        delta = minimum_image(
            positions[h_idx[start:stop], None, :] - positions[o_idx][None, :, :],
            box,
        )
        d2 = np.einsum("ijk,ijk->ij", delta, delta)
        best = np.argmin(d2, axis=1)  # ties resolve to the smallest O index
        bad = d2[np.arange(len(best)), best] > r2
        if np.any(bad):
            h = int(h_idx[start:stop][np.nonzero(bad)[0][0]])
            raise OrphanHydrogen(
                f"hydrogen {h} has no oxygen within {r_max} A"
            )
        owner[start:stop] = o_idx[best]
    return owner


def _owner_lookup(h_idx, h_owner):
    h_idx = np.asarray(h_idx, dtype=np.int64)
    h_owner = np.asarray(h_owner, dtype=np.int64)
    order = np.argsort(h_idx, kind="stable")
    return h_idx[order], h_owner[order]


def hbonds_in_set(positions, box, selected_o, h_idx, h_owner,
                  r_max: float = HBOND_R_MAX,
                  theta_min_deg: float = HBOND_THETA_MIN) -> np.ndarray:
    """Hydrogen bonds within one selected oxygen set, as (H, acceptor O) rows.

    A bond requires donor and acceptor oxygens in the set, O-O minimum-image
    distance <= r_max, and donor angle O-H...O' >= theta_min (both inclusive).
    """
    positions = np.asarray(positions, dtype=np.float64)
    sel = np.unique(np.asarray(selected_o, dtype=np.int64))
    if len(sel) < 2 or len(h_idx) == 0:
        return np.empty((0, 2), dtype=np.int64)
    h_sorted, owner_sorted = _owner_lookup(h_idx, h_owner)
    donor = np.isin(owner_sorted, sel)
    hs = h_sorted[donor]
    owners = owner_sorted[donor]
    if len(hs) == 0:
        return np.empty((0, 2), dtype=np.int64)

    d_oo = minimum_image(positions[owners][:, None, :] - positions[sel][None, :, :], box)
    within = np.einsum("ijk,ijk->ij", d_oo, d_oo) <= r_max * r_max
    within &= sel[None, :] != owners[:, None]

    ho = minimum_image(positions[owners] - positions[hs], box)
    ha = minimum_image(positions[sel][None, :, :] - positions[hs][:, None, :], box)
    n_ho = np.linalg.norm(ho, axis=1)
    n_ha = np.linalg.norm(ha, axis=2)
    denom = n_ho[:, None] * n_ha
    cos_angle = np.divide(
        np.einsum("ik,ijk->ij", ho, ha), denom,
        out=np.ones_like(denom),  # degenerate geometry never qualifies
        where=denom > 0,
    )
    within &= cos_angle <= math.cos(math.radians(theta_min_deg))

    hi, ai = np.nonzero(within)
    edges = np.stack([hs[hi], sel[ai]], axis=1)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    return edges[order]


def reconnect_in_set(oh_edges, h_idx, h_owner) -> np.ndarray:
    """Replace each (H, O') edge by (owner(H), O'), canonical and deduplicated."""
    oh_edges = np.asarray(oh_edges, dtype=np.int64).reshape(-1, 2)
    if len(oh_edges) == 0:
        return np.empty((0, 2), dtype=np.int64)
    h_sorted, owner_sorted = _owner_lookup(h_idx, h_owner)
    pos = np.searchsorted(h_sorted, oh_edges[:, 0])
    bad = (pos >= len(h_sorted)) | (h_sorted[np.minimum(pos, len(h_sorted) - 1)]
                                    != oh_edges[:, 0])
    if np.any(bad):
        raise OrphanHydrogen(
            f"hydrogen {int(oh_edges[np.nonzero(bad)[0][0], 0])} has no covalent oxygen"
        )
    donor_o = owner_sorted[pos]
    acceptor = oh_edges[:, 1]
    lo = np.minimum(donor_o, acceptor)
    hi = np.maximum(donor_o, acceptor)
    edges = np.unique(np.stack([lo, hi], axis=1), axis=0)
    return edges[edges[:, 0] != edges[:, 1]]


def find_n_cycles(edges, n: int = RING_LENGTH) -> np.ndarray:
    """All simple cycles of length exactly n, canonical, as an R x n array.

    Canonical form: the smallest vertex leads, and of the two traversal
    directions the one with the smaller second vertex is kept, so each cycle
    is enumerated exactly once (DFS only extends above the start vertex).
    """
    if n < 3:
        raise BadParam(f"ring length must be >= 3, got {n}")
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        a, b = int(a), int(b)
        if a == b:
            continue
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    for v in adj:
        adj[v] = sorted(set(adj[v]))

    rings: list[tuple[int, ...]] = []

    def extend(start: int, path: list[int], on_path: set[int]) -> None:
        last = path[-1]
        if len(path) == n:
            if start in adj[last] and path[1] < path[-1]:
                rings.append(tuple(path))
            return
        for nxt in adj[last]:
            if nxt > start and nxt not in on_path:
                path.append(nxt)
                on_path.add(nxt)
                extend(start, path, on_path)
                on_path.discard(nxt)
                path.pop()

    for start in sorted(adj):
        extend(start, [start], {start})

    if not rings:
        return np.empty((0, n), dtype=np.int64)
    return np.array(sorted(rings), dtype=np.int64)


def rings_for_pairs(positions, box, pairs, water_offsets, water_flat,
                    h_idx, h_owner, r_max: float = HBOND_R_MAX,
                    theta_min_deg: float = HBOND_THETA_MIN,
                    n: int = RING_LENGTH):
    """Per-pair pipeline: H-bonds -> O-O rebonding -> n-rings.

    Returns (oh_edges, oh_pair, oo_edges, oo_pair, ring_vertices, ring_pair);
    every *_pair array tags rows with the guest-pair block they came from.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    oh_blocks, oo_blocks, ring_blocks = [], [], []
    oh_tags, oo_tags, ring_tags = [], [], []
    for p in range(len(pairs)):
        sel = water_flat[water_offsets[p]:water_offsets[p + 1]]
        oh = hbonds_in_set(positions, box, sel, h_idx, h_owner,
                           r_max=r_max, theta_min_deg=theta_min_deg)
        oo = reconnect_in_set(oh, h_idx, h_owner)
        rings = find_n_cycles(oo, n=n)
        oh_blocks.append(oh)
        oo_blocks.append(oo)
        ring_blocks.append(rings)
        oh_tags.append(np.full(len(oh), p, dtype=np.int64))
        oo_tags.append(np.full(len(oo), p, dtype=np.int64))
        ring_tags.append(np.full(len(rings), p, dtype=np.int64))

    def cat(blocks, width):
        if blocks:
            return np.concatenate(blocks).reshape(-1, width).astype(np.int64)
        return np.empty((0, width), dtype=np.int64)

    def cat1(tags):
        return (np.concatenate(tags) if tags else np.empty(0, dtype=np.int64))

    return (cat(oh_blocks, 2), cat1(oh_tags), cat(oo_blocks, 2), cat1(oo_tags),
            cat(ring_blocks, n), cat1(ring_tags))


def register_hydrate(n_atoms: int, pairs, ring_vertices, ring_pair,
                     min_rings: int = 1) -> tuple[np.ndarray, int]:
    """Label mutually coordinated guest components and their ring oxygens.

    A guest pair is coordinated when at least ``min_rings`` rings witness it.
    Components of the coordinated-pair graph (of 2+ guests by construction)
    get labels 1..C ordered by smallest guest index; member guests and the
    oxygens of the component's witnessing rings take the component label.
    An oxygen witnessing rings in several components keeps the first
    (smallest) label assigned. Returns (per-atom labels, count of labeled atoms).
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    ring_vertices = np.asarray(ring_vertices, dtype=np.int64)
    ring_pair = np.asarray(ring_pair, dtype=np.int64)
    labels = np.zeros(int(n_atoms), dtype=np.float64)
    if len(pairs) == 0 or len(ring_pair) == 0:
        return labels, 0
    witness = np.bincount(ring_pair, minlength=len(pairs))
    coordinated = np.nonzero(witness >= min_rings)[0]
    if len(coordinated) == 0:
        return labels, 0

    parent: dict[int, int] = {}

    def find(x: int) -> int:
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in coordinated:
        ra, rb = find(int(pairs[p, 0])), find(int(pairs[p, 1]))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    members: dict[int, list[int]] = {}
    for g in parent:
        members.setdefault(find(g), []).append(g)
    component_order = sorted(members, key=lambda root: min(members[root]))
    label_of_root = {root: c + 1 for c, root in enumerate(component_order)}

    for root in component_order:
        labels[members[root]] = label_of_root[root]
    # ring oxygens, in label then pair then ring order; first assignment wins
    for root in component_order:
        lbl = label_of_root[root]
        for p in coordinated:
            if find(int(pairs[p, 0])) != root:
                continue
            for ring in ring_vertices[ring_pair == p]:
                for v in ring:
                    if labels[v] == 0:
                        labels[v] = lbl
    return labels, int(np.count_nonzero(labels))
