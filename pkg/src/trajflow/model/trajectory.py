"""Lazily loaded trajectories.

A Trajectory pairs a byte-stream source with per-frame byte offsets built in
one indexing pass; frames are parsed on demand and kept in a bounded LRU
cache so multi-gigabyte files never need full residency.
"""

from __future__ import annotations

import threading
from collections import OrderedDict, namedtuple
from typing import Callable, Protocol

from ..errors import IndexOutOfRange, SourceReadError
from .frame import Frame

DEFAULT_CACHE_BYTES = 512 * 1024 * 1024

CacheStats = namedtuple("CacheStats", ["hits", "misses"])


class ByteSource:
    """Random-access reader over a local file."""

    def __init__(self, path: str):
        self.path = str(path)
        self._lock = threading.Lock()
        try:
            self._fh = open(self.path, "rb")
        except OSError as exc:
            raise SourceReadError(f"cannot open {self.path}: {exc}") from exc

    def read_at(self, offset: int, size: int) -> bytes:
        with self._lock:
            try:
                self._fh.seek(offset)
                return self._fh.read(size)
            except OSError as exc:
                raise SourceReadError(f"read failed on {self.path}: {exc}") from exc

    def close(self) -> None:
        self._fh.close()


class FrameSource(Protocol):
    """Parses frame ``k`` from the underlying byte stream."""

    def parse_frame(self, k: int) -> Frame: ...


class _FrameCache:
    """LRU over frames with a byte budget."""

    def __init__(self, max_bytes: int):
        self.max_bytes = int(max_bytes)
        self._entries: OrderedDict[int, Frame] = OrderedDict()
        self._bytes = 0
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, k: int) -> Frame | None:
        with self._lock:
            frame = self._entries.get(k)
            if frame is not None:
                self._entries.move_to_end(k)
                self.hits += 1
            else:
                self.misses += 1
            return frame

    def put(self, k: int, frame: Frame) -> None:
        size = frame.nbytes()
        with self._lock:
            if k in self._entries:
                return
            self._entries[k] = frame
            self._bytes += size
            while self._bytes > self.max_bytes and len(self._entries) > 1:
                _, evicted = self._entries.popitem(last=False)
                self._bytes -= evicted.nbytes()


class Trajectory:
    def __init__(
        self,
        source: FrameSource,
        frame_count: int,
        atom_count: int,
        attribute_names: tuple[str, ...] = (),
        path: str = "",
        cache_bytes: int = DEFAULT_CACHE_BYTES,
    ):
        self.source = source
        self.frame_count = int(frame_count)
        self.atom_count = int(atom_count)
        self.attribute_names = tuple(attribute_names)
        self.path = path
        self._cache = _FrameCache(cache_bytes)

    def load_frame(self, k: int) -> Frame:
        k = int(k)
        if not (0 <= k < self.frame_count):
            raise IndexOutOfRange(f"frame {k} outside [0, {self.frame_count})")
        frame = self._cache.get(k)
        if frame is None:
            frame = self.source.parse_frame(k)
            self._cache.put(k, frame)
        return frame

    def cache_stats(self) -> "CacheStats":
        return CacheStats(self._cache.hits, self._cache.misses)

    def __repr__(self):
        return (
            f"Trajectory(frames={self.frame_count}, atoms={self.atom_count}, "
            f"attrs={list(self.attribute_names)})"
        )


class CallableFrameSource:
    """Adapts a plain function to the FrameSource protocol (used by tests
    and by importers whose per-frame parser is a closure over the index)."""

    def __init__(self, fn: Callable[[int], Frame]):
        self._fn = fn

    def parse_frame(self, k: int) -> Frame:
        return self._fn(k)
