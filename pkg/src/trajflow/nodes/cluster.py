"""Cluster-analysis nodes: neighbor lists, component labeling, modal masks,
recurrent tracking, and fade channels."""

from __future__ import annotations

from ..errors import BadParam, BadStep
from ..model.tensor import Tensor
from ..ops import (combine_channels, group_labels, labels2colors, mode_mask,
                   neighbor_pairs, pairs_to_csr, track_cluster)
from .base import NodeKind, PortSpec, param_f64, register

DEFAULT_FADE_STEP = 0.05


@register
class ListNeighbors(NodeKind):
    """CSR neighbor list of the input positions under a distance cutoff."""

    name = "list_neighbors"

    def _cutoff(self, params: dict) -> float:
        cutoff = param_f64(params, "cutoff", None, self.name)
        if not cutoff > 0:
            raise BadParam(f"{self.name}: cutoff must be > 0, got {cutoff}")
        return cutoff

    def ports(self, params):
        self._cutoff(params)
        return (PortSpec("positions", "f64", 2, (None, 3)),), \
               (PortSpec("offsets", "i64", 1), PortSpec("neighbors", "i64", 1))

    def run(self, ctx, inputs, params):
        positions = inputs["positions"].array
        pairs = neighbor_pairs(positions, ctx.frame.box, self._cutoff(params))
        offsets, neighbors = pairs_to_csr(pairs, len(positions))
        return {"offsets": Tensor(offsets), "neighbors": Tensor(neighbors)}


@register
class GroupList(NodeKind):
    """Connected-component id per atom, canonically labeled."""

    name = "group_list"

    def ports(self, params):
        return (PortSpec("offsets", "i64", 1), PortSpec("neighbors", "i64", 1)), \
               (PortSpec("ids", "i64", 1),)

    def run(self, ctx, inputs, params):
        ids = group_labels(inputs["offsets"].array, inputs["neighbors"].array)
        return {"ids": Tensor(ids)}


@register
class ModeMask(NodeKind):
    """1 where the id equals the most frequent id (ties: smallest id)."""

    name = "mode_mask"

    def ports(self, params):
        return (PortSpec("ids", "i64", 1),), (PortSpec("mask", "i64", 1),)

    def run(self, ctx, inputs, params):
        return {"mask": Tensor(mode_mask(inputs["ids"].array))}


@register
class TrackCluster(NodeKind):
    """Follow a cluster across frames by previous-label overlap."""

    name = "track_cluster"

    def ports(self, params):
        return (PortSpec("current_ids", "i64", 1),
                PortSpec("prev_label", "f64", 1)), \
               (PortSpec("new_label", "f64", 1),)

    def run(self, ctx, inputs, params):
        label = track_cluster(inputs["current_ids"].array,
                              inputs["prev_label"].array)
        return {"new_label": Tensor(label)}


@register
class Labels2Colors(NodeKind):
    """Fade a [0,1] channel toward 1 for labeled atoms, toward 0 otherwise."""

    name = "labels2colors"

    def _step(self, params: dict) -> float:
        step = param_f64(params, "step", DEFAULT_FADE_STEP, self.name)
        if not 0.0 < step <= 1.0:
            raise BadStep(f"{self.name}: step must be in (0, 1], got {step}")
        return step

    def ports(self, params):
        self._step(params)
        return (PortSpec("label", "f64", 1), PortSpec("prev_channel", "f64", 1)), \
               (PortSpec("channel", "f64", 1),)

    def run(self, ctx, inputs, params):
        channel = labels2colors(inputs["label"].array,
                                inputs["prev_channel"].array,
                                self._step(params))
        return {"channel": Tensor(channel)}


@register
class CombineChannels(NodeKind):
    """Elementwise maximum of two channels."""

    name = "combine_channels"

    def ports(self, params):
        return (PortSpec("forward", "f64", 1), PortSpec("backward", "f64", 1)), \
               (PortSpec("out", "f64", 1),)

    def run(self, ctx, inputs, params):
        out = combine_channels(inputs["forward"].array,
                               inputs["backward"].array)
        return {"out": Tensor(out)}
