"""Cluster labeling, modal masking, recurrent tracking, color graduation."""

from __future__ import annotations

import numpy as np

from ..errors import BadStep, ShapeMismatch


def group_labels(offsets, neighbors) -> np.ndarray:
    """Connected-component ids over a CSR adjacency.

    Components are numbered 0..K-1 in order of their smallest atom index, so
    the labeling is canonical and independent of edge insertion order.
    """
    offsets = np.asarray(offsets, dtype=np.int64)
    neighbors = np.asarray(neighbors, dtype=np.int64)
    n = len(offsets) - 1
    parent = np.arange(n, dtype=np.int64)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]  # path halving
            x = parent[x]
        return int(x)

    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(offsets))
    for a, b in zip(src, neighbors):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    roots = np.fromiter((find(i) for i in range(n)), dtype=np.int64, count=n)
    uniq, inverse = np.unique(roots, return_inverse=True)
    mins = np.full(len(uniq), n, dtype=np.int64)
    np.minimum.at(mins, inverse, np.arange(n, dtype=np.int64))
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[np.argsort(mins, kind="stable")] = np.arange(len(uniq), dtype=np.int64)
    return rank[inverse]


def mode_mask(ids) -> np.ndarray:
    """1 where id equals the most frequent id (ties -> smallest id), else 0."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        return np.zeros(0, dtype=np.int64)
    uniq, counts = np.unique(ids, return_counts=True)
    modal = uniq[np.argmax(counts)]  # uniq is sorted, argmax takes first max
    return (ids == modal).astype(np.int64)


def track_cluster(current_ids, prev_label) -> np.ndarray:
    """Follow a labeled cluster across a frame boundary.

    The current cluster containing the most previously-labeled atoms becomes
    the tracked cluster (ties -> smallest cluster id) and its members are
    labeled 1. When no current cluster contains any labeled atom the cluster
    has dissipated and every label is cleared.
    """
    current_ids = np.asarray(current_ids, dtype=np.int64)
    prev_label = np.asarray(prev_label, dtype=np.float64)
    if current_ids.shape != prev_label.shape:
        raise ShapeMismatch(
            f"ids shape {current_ids.shape} != labels shape {prev_label.shape}"
        )
    if current_ids.size == 0:
        return np.zeros(0, dtype=np.float64)
    uniq, inverse = np.unique(current_ids, return_inverse=True)
    counts = np.bincount(
        inverse, weights=(prev_label != 0).astype(np.float64), minlength=len(uniq)
    )
    if counts.max() == 0:
        return np.zeros(current_ids.shape, dtype=np.float64)
    winner = uniq[np.argmax(counts)]  # first max = smallest cluster id
    return (current_ids == winner).astype(np.float64)


def labels2colors(label, prev_channel, step: float) -> np.ndarray:
    """Graduate a [0,1] color channel toward 1 for labeled atoms, 0 otherwise."""
    if not 0.0 < step <= 1.0:
        raise BadStep(f"step must be in (0, 1], got {step}")
    label = np.asarray(label, dtype=np.float64)
    prev = np.asarray(prev_channel, dtype=np.float64)
    if label.shape != prev.shape:
        raise ShapeMismatch(
            f"label shape {label.shape} != channel shape {prev.shape}"
        )
    out = np.where(label != 0, prev + step, prev - step)
    return np.clip(out, 0.0, 1.0)


def combine_channels(a, b) -> np.ndarray:
    """Elementwise max of two channels (either temporal direction lights up)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"channel shapes differ: {a.shape} vs {b.shape}")
    return np.maximum(a, b)
