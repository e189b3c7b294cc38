from .gro import parse_gro, probe_gro
from .lammps import parse_lammps_dump, probe_lammps
from .pdb import parse_pdb, probe_pdb
from .registry import REGISTRY, Importer, ImporterRegistry, default_registry, open_trajectory
from .ssv import ColumnSpec, parse_ssv, probe_ssv, write_ssv

__all__ = [
    "ColumnSpec",
    "Importer",
    "ImporterRegistry",
    "REGISTRY",
    "default_registry",
    "open_trajectory",
    "parse_gro",
    "parse_lammps_dump",
    "parse_pdb",
    "parse_ssv",
    "probe_gro",
    "probe_lammps",
    "probe_pdb",
    "probe_ssv",
    "write_ssv",
]
