"""Importer plugin registry and format dispatch."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

from ..errors import SourceReadError, UnknownFormat
from ..model.trajectory import Trajectory
from .gro import parse_gro, probe_gro
from .lammps import parse_lammps_dump, probe_lammps
from .pdb import parse_pdb, probe_pdb
from .ssv import parse_ssv, probe_ssv

PROBE_BYTES = 4096


@dataclass(frozen=True)
class Importer:
    name: str
    extensions: tuple[str, ...]
    probe: Callable[[bytes], bool]  # peek-only: gets the leading bytes
    parse: Callable[..., Trajectory]


class ImporterRegistry:
    """Extension dispatch first, then content probing; first registered wins."""

    def __init__(self):
        self._importers: list[Importer] = []

    def register(self, importer: Importer) -> None:
        self._importers.append(importer)

    def by_extension(self, ext: str) -> Importer | None:
        ext = ext.lower().lstrip(".")
        for imp in self._importers:
            if ext in imp.extensions:
                return imp
        return None

    def by_probe(self, head: bytes) -> Importer | None:
        for imp in self._importers:
            if imp.probe(head):
                return imp
        return None

    def resolve(self, path: str) -> Importer:
        ext = os.path.splitext(path)[1]
        imp = self.by_extension(ext) if ext else None
        if imp is None:
            with open(path, "rb") as fh:
                head = fh.read(PROBE_BYTES)
            imp = self.by_probe(head)
        if imp is None:
            raise UnknownFormat(f"no importer claims {path!r}")
        return imp

    def names(self) -> list[str]:
        return [imp.name for imp in self._importers]


def default_registry() -> ImporterRegistry:
    reg = ImporterRegistry()
    reg.register(Importer("ssv", ("ssv",), probe_ssv, parse_ssv))
    reg.register(Importer("gro", ("gro",), probe_gro, parse_gro))
    reg.register(Importer("pdb", ("pdb", "ent"), probe_pdb, parse_pdb))
    reg.register(
        Importer("lammps", ("lammpstrj", "dump"), probe_lammps, parse_lammps_dump)
    )
    return reg


REGISTRY = default_registry()


def open_trajectory(path: str, cache_bytes: int | None = None,
                    registry: ImporterRegistry | None = None) -> Trajectory:
    """Open any registered trajectory format, indexing frames lazily."""
    reg = registry if registry is not None else REGISTRY
    try:
        importer = reg.resolve(path)
        return importer.parse(path, cache_bytes=cache_bytes)
    except OSError as exc:
        raise SourceReadError(f"cannot read {path}: {exc}") from exc
