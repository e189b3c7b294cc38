"""Engine-provided nodes: frame queries, scene mutations, attributes,
plotting, and small arithmetic plumbing.

Every node validates its inputs fully inside run() so that recorded effects
can be applied unconditionally afterwards.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import (BadParam, BadRange, ComponentOutOfRange, IndexOutOfRange,
                      LengthMismatch, NonFinite, NonPositiveScale, RankMismatch,
                      SelfBond, ShapeMismatch)
from ..model.tensor import Tensor
from .base import (NodeKind, PortSpec, optional_param, param_f64, register,
                   require_param)

_DTYPES = ("i64", "f64")


def _param_dtype(params: dict, kind: str, default: str = "f64") -> str:
    dtype = optional_param(params, "dtype", default, str, kind)
    if dtype not in _DTYPES:
        raise BadParam(f"{kind}: dtype must be one of {_DTYPES}, got {dtype!r}")
    return dtype


def _param_rank(params: dict, kind: str, key: str = "rank",
                default: int = 1) -> int:
    rank = optional_param(params, key, default, int, kind)
    if rank < 0:
        raise BadParam(f"{kind}: {key} must be >= 0")
    return int(rank)


def _check_indices(indices: np.ndarray, n_atoms: int, kind: str) -> None:
    if indices.size and (indices.min() < 0 or indices.max() >= n_atoms):
        bad = indices[(indices < 0) | (indices >= n_atoms)][0]
        raise IndexOutOfRange(f"{kind}: atom index {int(bad)} outside [0, {n_atoms})")


@register
class GetPositions(NodeKind):
    """Positions + original indices of atoms passing a filter."""

    name = "get_positions"

    def _filter(self, params: dict) -> str:
        mode = optional_param(params, "filter", "all", str, self.name)
        if mode not in ("all", "visible", "region"):
            raise BadParam(f"{self.name}: filter must be all|visible|region")
        return mode

    def _region(self, params: dict) -> np.ndarray:
        region = params.get("region")
        if (not isinstance(region, (list, tuple)) or len(region) != 6 or
                not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                        for v in region)):
            raise BadParam(
                f"{self.name}: region must be 6 numbers [x0,y0,z0,x1,y1,z1]")
        bounds = np.asarray(region, dtype=np.float64).reshape(2, 3)
        if np.any(bounds[0] > bounds[1]):
            raise BadParam(f"{self.name}: region min exceeds max")
        return bounds

    def ports(self, params):
        mode = self._filter(params)
        if mode == "region":
            self._region(params)
        return (), (PortSpec("positions", "f64", 2, (None, 3)),
                    PortSpec("indices", "i64", 1))

    def env_reads(self, ctx, params):
        mode = self._filter(params)
        reads = [("positions", ctx.frame.positions.tobytes())]
        if mode == "visible":
            reads.append(("visibility", ctx.visibility().tobytes()))
        return reads

    def run(self, ctx, inputs, params):
        mode = self._filter(params)
        pos = ctx.frame.positions
        if mode == "all":
            keep = np.ones(ctx.n_atoms, dtype=bool)
        elif mode == "visible":
            keep = ctx.visibility()
        else:
            lo, hi = self._region(params)
            keep = np.all((pos >= lo) & (pos <= hi), axis=1)
        idx = np.nonzero(keep)[0].astype(np.int64)
        return {"positions": Tensor(pos[idx]),
                "indices": Tensor(idx)}


@register
class SetColors(NodeKind):
    """Per-atom RGBA recorded into the frame's scene delta."""

    name = "set_colors"

    def ports(self, params):
        return (PortSpec("indices", "i64", 1),
                PortSpec("colors", "f64", 2, (None, 4))), ()

    def run(self, ctx, inputs, params):
        indices = inputs["indices"].array
        colors = inputs["colors"].array
        if len(indices) != len(colors):
            raise ShapeMismatch(
                f"{self.name}: {len(indices)} indices vs {len(colors)} colors")
        _check_indices(indices, ctx.n_atoms, self.name)
        if colors.size and (np.any(colors < 0) or np.any(colors > 1)
                            or not np.all(np.isfinite(colors))):
            raise ComponentOutOfRange(
                f"{self.name}: color components must lie in [0, 1]")
        if len(indices):
            ctx.set_colors(indices, colors)
        return {}


@register
class ShowRange(NodeKind):
    """Keep atoms whose attribute value lies in [lo, hi] visible; hide the
    rest. Multiple range nodes in one frame AND together."""

    name = "show_range"

    def _bounds(self, params: dict) -> tuple[str, float, float]:
        attr = require_param(params, "attribute", str, self.name)
        lo = param_f64(params, "lo", -math.inf, self.name)
        hi = param_f64(params, "hi", math.inf, self.name)
        if lo > hi:
            raise BadRange(f"{self.name}: lo {lo} > hi {hi}")
        return attr, lo, hi

    def ports(self, params):
        self._bounds(params)
        return (), ()

    def env_reads(self, ctx, params):
        attr, _, _ = self._bounds(params)
        return [("attr:" + attr, ctx.read_attribute(attr).tobytes())]

    def run(self, ctx, inputs, params):
        attr, lo, hi = self._bounds(params)
        values = ctx.read_attribute(attr)
        keep = (values >= lo) & (values <= hi)
        ctx.set_visible(np.arange(ctx.n_atoms, dtype=np.int64), keep)
        return {}


@register
class SetRadiusScale(NodeKind):
    """Per-atom radius multipliers in the scene delta."""

    name = "set_radius_scale"

    def ports(self, params):
        return (PortSpec("indices", "i64", 1),
                PortSpec("scales", "f64", 1)), ()

    def run(self, ctx, inputs, params):
        indices = inputs["indices"].array
        scales = inputs["scales"].array
        if len(indices) != len(scales):
            raise ShapeMismatch(
                f"{self.name}: {len(indices)} indices vs {len(scales)} scales")
        _check_indices(indices, ctx.n_atoms, self.name)
        if scales.size and not np.all(scales > 0):
            raise NonPositiveScale(f"{self.name}: radius scales must be > 0")
        if len(indices):
            ctx.set_radius(indices, scales)
        return {}


@register
class ExtraBonds(NodeKind):
    """Extra display bonds; unordered pairs, deduplicated."""

    name = "extra_bonds"

    def ports(self, params):
        return (PortSpec("pairs", "i64", 2, (None, 2)),), ()

    def run(self, ctx, inputs, params):
        pairs = inputs["pairs"].array
        if pairs.size:
            _check_indices(pairs.ravel(), ctx.n_atoms, self.name)
            if np.any(pairs[:, 0] == pairs[:, 1]):
                bad = pairs[pairs[:, 0] == pairs[:, 1]][0, 0]
                raise SelfBond(f"{self.name}: self bond ({int(bad)},{int(bad)})")
            ctx.add_bonds(pairs)
        return {}


@register
class SetCameraCenter(NodeKind):
    """Camera center for this frame; last writer wins."""

    name = "set_camera_center"

    def ports(self, params):
        return (PortSpec("center", "f64", 1, (3,)),), ()

    def run(self, ctx, inputs, params):
        center = inputs["center"].array
        if not np.all(np.isfinite(center)):
            raise NonFinite(f"{self.name}: camera center must be finite")
        ctx.set_camera(center)
        return {}


@register
class PlotData(NodeKind):
    """Collect plot points across a run.

    lines_accumulate appends one (frame_index, value) point per executed
    frame; lines replaces the whole series with the rank-1 input each frame.
    """

    name = "plot_data"

    def _mode(self, params: dict) -> str:
        mode = optional_param(params, "mode", "lines_accumulate", str, self.name)
        if mode not in ("lines_accumulate", "lines"):
            raise BadParam(f"{self.name}: mode must be lines_accumulate|lines")
        optional_param(params, "label", None, str, self.name)
        return mode

    def ports(self, params):
        mode = self._mode(params)
        rank = 0 if mode == "lines_accumulate" else 1
        return (PortSpec("value", "f64", rank),), ()

    def run(self, ctx, inputs, params):
        mode = self._mode(params)
        value = inputs["value"]
        if mode == "lines_accumulate":
            if value.rank != 0:
                raise RankMismatch(
                    f"{self.name}: accumulate mode needs a scalar, got rank {value.rank}")
            ctx.plot(("append", ctx.frame_index, float(value.item())))
        else:
            points = [(float(i), float(v)) for i, v in enumerate(value.array)]
            ctx.plot(("replace", points))
        return {}


@register
class GetAttribute(NodeKind):
    """Read a per-atom attribute as seen at this node's execution instant."""

    name = "get_attribute"

    def ports(self, params):
        require_param(params, "name", str, self.name)
        return (), (PortSpec("values", "f64", 1),)

    def env_reads(self, ctx, params):
        name = require_param(params, "name", str, self.name)
        return [("attr:" + name, ctx.read_attribute(name).tobytes())]

    def run(self, ctx, inputs, params):
        name = require_param(params, "name", str, self.name)
        return {"values": Tensor(ctx.read_attribute(name))}


@register
class SetAttribute(NodeKind):
    """Write a per-atom attribute; visible to downstream readers this frame."""

    name = "set_attribute"

    def ports(self, params):
        require_param(params, "name", str, self.name)
        return (PortSpec("values", "f64", 1),), ()

    def attr_writes(self, params):
        return [require_param(params, "name", str, self.name)]

    def run(self, ctx, inputs, params):
        name = require_param(params, "name", str, self.name)
        values = inputs["values"].array
        if values.shape != (ctx.n_atoms,):
            raise LengthMismatch(
                f"{self.name}: expected {ctx.n_atoms} values, got {values.shape}")
        ctx.write_attribute(name, values)
        return {}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


@register
class Const(NodeKind):
    """Constant tensor; a number gives rank 0, a list rank 1, a rectangular
    list of lists rank 2."""

    name = "const"

    def _value(self, params: dict) -> Tensor:
        if "value" not in params:
            raise BadParam(f"{self.name}: missing required param 'value'")
        value = params["value"]
        dtype = _param_dtype(params, self.name)
        np_dtype = np.int64 if dtype == "i64" else np.float64
        if _is_number(value):
            return Tensor(np.asarray(value, dtype=np_dtype))
        if isinstance(value, (list, tuple)):
            if all(_is_number(v) for v in value):
                return Tensor(np.asarray(value, dtype=np_dtype))
            if (value and all(isinstance(row, (list, tuple)) and
                              len(row) == len(value[0]) and
                              all(_is_number(v) for v in row)
                              for row in value)):
                return Tensor(np.asarray(value, dtype=np_dtype))
        raise BadParam(
            f"{self.name}: value must be a number, a list of numbers, "
            "or a rectangular list of lists")

    def ports(self, params):
        tensor = self._value(params)
        dims = tensor.shape if tensor.rank == 2 else None
        return (), (PortSpec("out", tensor.dtype, tensor.rank, dims),)

    def run(self, ctx, inputs, params):
        return {"out": self._value(params)}


class _Elementwise(NodeKind):
    """Shared shape handling: equal shapes, or b a scalar broadcast."""

    def ports(self, params):
        dtype = _param_dtype(params, self.name)
        rank = _param_rank(params, self.name)
        rank_b = _param_rank(params, self.name, "rank_b", rank)
        if rank_b not in (0, rank):
            raise BadParam(f"{self.name}: rank_b must be 0 or equal to rank")
        return (PortSpec("a", dtype, rank),
                PortSpec("b", dtype, rank_b)), (PortSpec("out", dtype, rank),)

    def _combine(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def run(self, ctx, inputs, params):
        a = inputs["a"].array
        b = inputs["b"].array
        if b.ndim != 0 and a.shape != b.shape:
            raise ShapeMismatch(f"{self.name}: shapes {a.shape} vs {b.shape}")
        return {"out": Tensor(self._combine(a, b))}


@register
class Add(_Elementwise):
    """Elementwise sum; b may be a scalar broadcast over a."""

    name = "add"

    def _combine(self, a, b):
        return a + b


@register
class Mul(_Elementwise):
    """Elementwise product; b may be a scalar broadcast over a."""

    name = "mul"

    def _combine(self, a, b):
        return a * b


_COMPARE_OPS = {
    ">=": np.greater_equal,
    "<=": np.less_equal,
    ">": np.greater,
    "<": np.less,
    "==": np.equal,
    "!=": np.not_equal,
}


@register
class CompareMask(NodeKind):
    """0/1 mask from comparing each element with a threshold."""

    name = "compare_mask"

    def _setup(self, params: dict):
        op = require_param(params, "op", str, self.name)
        if op not in _COMPARE_OPS:
            raise BadParam(
                f"{self.name}: op must be one of {sorted(_COMPARE_OPS)}")
        threshold = param_f64(params, "threshold", None, self.name)
        dtype = _param_dtype(params, self.name)
        rank = _param_rank(params, self.name)
        return _COMPARE_OPS[op], threshold, dtype, rank

    def ports(self, params):
        _, _, dtype, rank = self._setup(params)
        return (PortSpec("values", dtype, rank),), (PortSpec("mask", "i64", rank),)

    def run(self, ctx, inputs, params):
        fn, threshold, _, _ = self._setup(params)
        values = inputs["values"].array
        return {"mask": Tensor(fn(values, threshold).astype(np.int64))}


@register
class CountNonzero(NodeKind):
    """Number of nonzero elements as a scalar i64."""

    name = "count_nonzero"

    def ports(self, params):
        dtype = _param_dtype(params, self.name)
        rank = _param_rank(params, self.name)
        return (PortSpec("values", dtype, rank),), (PortSpec("count", "i64", 0),)

    def run(self, ctx, inputs, params):
        count = int(np.count_nonzero(inputs["values"].array))
        return {"count": Tensor(np.asarray(count, dtype=np.int64))}


@register
class ToF64(NodeKind):
    """Cast i64 to f64 (e.g. a count feeding a plot)."""

    name = "to_f64"

    def ports(self, params):
        rank = _param_rank(params, self.name, default=0)
        return (PortSpec("values", "i64", rank),), (PortSpec("out", "f64", rank),)

    def run(self, ctx, inputs, params):
        return {"out": Tensor(inputs["values"].array.astype(np.float64))}
