"""Numeric kernels behind the analysis nodes."""

from .clusters import (
    combine_channels,
    group_labels,
    labels2colors,
    mode_mask,
    track_cluster,
)
from .hydrate import (
    cone_mask,
    covalent_oh,
    filter_guests,
    filter_waters,
    find_n_cycles,
    hbonds_in_set,
    reconnect_in_set,
    register_hydrate,
    rings_for_pairs,
)
from .neighbors import (
    brute_force_pairs,
    list_neighbors,
    neighbor_pairs,
    pairs_to_csr,
)

__all__ = [
    "brute_force_pairs",
    "combine_channels",
    "cone_mask",
    "covalent_oh",
    "filter_guests",
    "filter_waters",
    "find_n_cycles",
    "group_labels",
    "hbonds_in_set",
    "labels2colors",
    "list_neighbors",
    "mode_mask",
    "neighbor_pairs",
    "pairs_to_csr",
    "reconnect_in_set",
    "register_hydrate",
    "rings_for_pairs",
    "track_cluster",
]
