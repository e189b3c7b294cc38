"""Hydrate-detection nodes: the guest-pair / cone-water / hydrogen-bond /
ring / labeling pipeline plus its scalar order parameter.

Species are selected by atom_type match lists given as node parameters
(e.g. guests=["C"], oxygens=["OW"], hydrogens=["HW"]). Edge tables carry a
parallel *_pair column tagging each row with the guest-pair block it belongs
to, so the per-pair semantics survive the node split.
"""

from __future__ import annotations

import numpy as np

from ..errors import BadParam
from ..model.tensor import Tensor
from ..ops import (covalent_oh, filter_guests, filter_waters, find_n_cycles,
                   hbonds_in_set, reconnect_in_set, register_hydrate)
from ..ops.hydrate import (CONE_ANGLE, COVALENT_OH_MAX, GUEST_CUTOFF,
                           HBOND_R_MAX, HBOND_THETA_MIN, RING_LENGTH)
from .base import (NodeKind, PortSpec, optional_param, param_f64,
                   param_str_list, register)


def species_indices(ctx, names: tuple[str, ...]) -> np.ndarray:
    """Global indices of atoms whose atom_type is in the match list."""
    wanted = set(names)
    return np.array([i for i, t in enumerate(ctx.frame.atom_type) if t in wanted],
                    dtype=np.int64)


def _per_pair_blocks(tags: np.ndarray, rows: np.ndarray):
    """Yield (pair id, row block) for each distinct tag, ascending."""
    for p in np.unique(tags):
        yield int(p), rows[tags == p]


def _covalent_map(ctx, params: dict, kind: str):
    o_idx = species_indices(ctx, param_str_list(params, "oxygens", kind))
    h_idx = species_indices(ctx, param_str_list(params, "hydrogens", kind))
    r_cov = param_f64(params, "r_covalent", COVALENT_OH_MAX, kind)
    if not r_cov > 0:
        raise BadParam(f"{kind}: r_covalent must be > 0")
    h_owner = covalent_oh(ctx.frame.positions, ctx.frame.box, o_idx, h_idx, r_cov)
    return o_idx, h_idx, h_owner


@register
class FilterGuests(NodeKind):
    """Unordered guest pairs within the coordination cutoff."""

    name = "filter_guests"

    def _params(self, params: dict):
        guests = param_str_list(params, "guests", self.name)
        cutoff = param_f64(params, "cutoff", GUEST_CUTOFF, self.name)
        if not cutoff > 0:
            raise BadParam(f"{self.name}: cutoff must be > 0, got {cutoff}")
        return guests, cutoff

    def ports(self, params):
        self._params(params)
        return (), (PortSpec("pairs", "i64", 2, (None, 2)),)

    def run(self, ctx, inputs, params):
        guests, cutoff = self._params(params)
        guest_idx = species_indices(ctx, guests)
        pairs = filter_guests(ctx.frame.positions, ctx.frame.box, guest_idx, cutoff)
        return {"pairs": Tensor(pairs)}


@register
class FilterWaters(NodeKind):
    """Water oxygens inside both inclusive cones around each guest pair,
    returned as CSR blocks aligned with the input pair rows."""

    name = "filter_waters"

    def _params(self, params: dict):
        oxygens = param_str_list(params, "oxygens", self.name)
        angle = param_f64(params, "angle", CONE_ANGLE, self.name)
        if not 0.0 < angle < 90.0:
            raise BadParam(f"{self.name}: angle must be in (0, 90), got {angle}")
        max_distance = optional_param(params, "max_distance", None, float, self.name)
        if max_distance is not None:
            max_distance = float(max_distance)
            if not max_distance > 0:
                raise BadParam(f"{self.name}: max_distance must be > 0")
        return oxygens, angle, max_distance

    def ports(self, params):
        self._params(params)
        return (PortSpec("pairs", "i64", 2, (None, 2)),), \
               (PortSpec("offsets", "i64", 1), PortSpec("waters", "i64", 1))

    def run(self, ctx, inputs, params):
        oxygens, angle, max_distance = self._params(params)
        water_idx = species_indices(ctx, oxygens)
        offsets, flat = filter_waters(ctx.frame.positions, ctx.frame.box,
                                      inputs["pairs"].array, water_idx,
                                      angle, max_distance)
        return {"offsets": Tensor(offsets), "waters": Tensor(flat)}


@register
class HbondsFiltered(NodeKind):
    """Hydrogen bonds within each pair's selected waters, as (H, acceptor O)
    edges tagged with their pair row."""

    name = "hbonds_filtered"

    def _thresholds(self, params: dict):
        r_max = param_f64(params, "r_max", HBOND_R_MAX, self.name)
        theta = param_f64(params, "theta_min", HBOND_THETA_MIN, self.name)
        if not r_max > 0:
            raise BadParam(f"{self.name}: r_max must be > 0")
        if not 0.0 < theta <= 180.0:
            raise BadParam(f"{self.name}: theta_min must be in (0, 180]")
        return r_max, theta

    def ports(self, params):
        param_str_list(params, "oxygens", self.name)
        param_str_list(params, "hydrogens", self.name)
        self._thresholds(params)
        return (PortSpec("offsets", "i64", 1), PortSpec("waters", "i64", 1)), \
               (PortSpec("oh_edges", "i64", 2, (None, 2)),
                PortSpec("oh_pair", "i64", 1))

    def run(self, ctx, inputs, params):
        r_max, theta = self._thresholds(params)
        _, h_idx, h_owner = _covalent_map(ctx, params, self.name)
        offsets = inputs["offsets"].array
        flat = inputs["waters"].array
        edges, tags = [], []
        for p in range(len(offsets) - 1):
            sel = flat[offsets[p]:offsets[p + 1]]
            found = hbonds_in_set(ctx.frame.positions, ctx.frame.box, sel,
                                  h_idx, h_owner, r_max, theta)
            edges.append(found)
            tags.append(np.full(len(found), p, dtype=np.int64))
        oh_edges = (np.concatenate(edges) if edges
                    else np.empty((0, 2), dtype=np.int64))
        oh_pair = (np.concatenate(tags) if tags else np.empty(0, dtype=np.int64))
        return {"oh_edges": Tensor(oh_edges), "oh_pair": Tensor(oh_pair)}


@register
class ReconnectWater(NodeKind):
    """Replace each (H, O') hydrogen bond with (owner O, O'), per pair."""

    name = "reconnect_water"

    def ports(self, params):
        param_str_list(params, "oxygens", self.name)
        param_str_list(params, "hydrogens", self.name)
        return (PortSpec("oh_edges", "i64", 2, (None, 2)),
                PortSpec("oh_pair", "i64", 1)), \
               (PortSpec("oo_edges", "i64", 2, (None, 2)),
                PortSpec("oo_pair", "i64", 1))

    def run(self, ctx, inputs, params):
        _, h_idx, h_owner = _covalent_map(ctx, params, self.name)
        oh_edges = inputs["oh_edges"].array
        oh_pair = inputs["oh_pair"].array
        if len(oh_edges) != len(oh_pair):
            raise BadParam(
                f"{self.name}: {len(oh_edges)} edges vs {len(oh_pair)} pair tags")
        edges, tags = [], []
        for p, block in _per_pair_blocks(oh_pair, oh_edges):
            oo = reconnect_in_set(block, h_idx, h_owner)
            edges.append(oo)
            tags.append(np.full(len(oo), p, dtype=np.int64))
        oo_edges = (np.concatenate(edges) if edges
                    else np.empty((0, 2), dtype=np.int64))
        oo_pair = (np.concatenate(tags) if tags else np.empty(0, dtype=np.int64))
        return {"oo_edges": Tensor(oo_edges), "oo_pair": Tensor(oo_pair)}


@register
class FindLinks(NodeKind):
    """Simple cycles of length n within each pair's O-O bond block."""

    name = "find_links"

    def _n(self, params: dict) -> int:
        n = optional_param(params, "n", RING_LENGTH, int, self.name)
        if n < 3:
            raise BadParam(f"{self.name}: n must be >= 3, got {n}")
        return int(n)

    def ports(self, params):
        n = self._n(params)
        return (PortSpec("oo_edges", "i64", 2, (None, 2)),
                PortSpec("oo_pair", "i64", 1)), \
               (PortSpec("ring_vertices", "i64", 2, (None, n)),
                PortSpec("ring_pair", "i64", 1))

    def run(self, ctx, inputs, params):
        n = self._n(params)
        oo_edges = inputs["oo_edges"].array
        oo_pair = inputs["oo_pair"].array
        if len(oo_edges) != len(oo_pair):
            raise BadParam(
                f"{self.name}: {len(oo_edges)} edges vs {len(oo_pair)} pair tags")
        rings, tags = [], []
        for p, block in _per_pair_blocks(oo_pair, oo_edges):
            found = find_n_cycles(block, n)
            rings.append(found)
            tags.append(np.full(len(found), p, dtype=np.int64))
        ring_vertices = (np.concatenate(rings) if rings
                         else np.empty((0, n), dtype=np.int64))
        ring_pair = (np.concatenate(tags) if tags else np.empty(0, dtype=np.int64))
        return {"ring_vertices": Tensor(ring_vertices),
                "ring_pair": Tensor(ring_pair)}


@register
class RegisterHydrate(NodeKind):
    """Label mutually coordinated guest components plus their ring oxygens.

    prior_labels is accepted for graph compatibility but does not influence
    the output: labeling is recomputed from scratch every frame.
    """

    name = "register_hydrate"

    def _min_rings(self, params: dict) -> int:
        min_rings = optional_param(params, "min_rings", 1, int, self.name)
        if min_rings < 1:
            raise BadParam(f"{self.name}: min_rings must be >= 1")
        return int(min_rings)

    def ports(self, params):
        self._min_rings(params)
        return (PortSpec("pairs", "i64", 2, (None, 2)),
                PortSpec("ring_vertices", "i64", 2, (None, None)),
                PortSpec("ring_pair", "i64", 1),
                PortSpec("prior_labels", "f64", 1, optional=True)), \
               (PortSpec("labels", "f64", 1), PortSpec("mcg_count", "i64", 0))

    def run(self, ctx, inputs, params):
        labels, count = register_hydrate(ctx.n_atoms,
                                         inputs["pairs"].array,
                                         inputs["ring_vertices"].array,
                                         inputs["ring_pair"].array,
                                         self._min_rings(params))
        return {"labels": Tensor(labels),
                "mcg_count": Tensor(np.asarray(count, dtype=np.int64))}


@register
class McgOrderParameter(NodeKind):
    """Number of labeled molecules, as a plot-ready f64 scalar."""

    name = "mcg_order_parameter"

    def ports(self, params):
        return (PortSpec("labels", "f64", 1),), (PortSpec("count", "f64", 0),)

    def run(self, ctx, inputs, params):
        count = float(np.count_nonzero(inputs["labels"].array))
        return {"count": Tensor(np.asarray(count, dtype=np.float64))}
