"""Cluster labeling/tracking against BFS and hand-rolled counting oracles."""

import collections

import numpy as np
import pytest

from trajflow.errors import BadStep, ShapeMismatch
from trajflow.model.frame import Box
from trajflow.ops.clusters import (
    combine_channels,
    group_labels,
    labels2colors,
    mode_mask,
    track_cluster,
)
from trajflow.ops.neighbors import list_neighbors, pairs_to_csr


def bfs_partition(n, edges):
    """Independent component oracle: BFS, components ordered by min member."""
    adj = collections.defaultdict(set)
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    labels = [-1] * n
    next_id = 0
    for start in range(n):
        if labels[start] != -1:
            continue
        queue = collections.deque([start])
        labels[start] = next_id
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if labels[w] == -1:
                    labels[w] = next_id
                    queue.append(w)
        next_id += 1
    return labels


def csr_from_edges(n, edges):
    pairs = (np.array(sorted(set(map(tuple, map(sorted, edges)))), dtype=np.int64)
             if edges else np.empty((0, 2), dtype=np.int64))
    return pairs_to_csr(pairs.reshape(-1, 2), n)


def track_cluster_reference(ids, prev):
    """Straightforward loop implementation of the tracking rule."""
    counts = collections.defaultdict(int)
    for i, c in enumerate(ids):
        if prev[i] != 0:
            counts[c] += 1
    if not counts or max(counts.values()) == 0:
        return [0.0] * len(ids)
    best = max(counts.values())
    winner = min(c for c, k in counts.items() if k == best)
    return [1.0 if c == winner else 0.0 for c in ids]


class TestGroupLabels:
    def test_edge_and_isolated(self):
        offsets, neigh = csr_from_edges(3, [(0, 1)])
        assert group_labels(offsets, neigh).tolist() == [0, 0, 1]

    def test_no_edges_all_singletons(self):
        offsets, neigh = csr_from_edges(3, [])
        assert group_labels(offsets, neigh).tolist() == [0, 1, 2]

    def test_ids_ordered_by_smallest_member(self):
        # component {1,3} contains atom 1 < 2, so it takes id 1 after {0}
        offsets, neigh = csr_from_edges(4, [(1, 3)])
        assert group_labels(offsets, neigh).tolist() == [0, 1, 2, 1]

    @pytest.mark.parametrize("seed", range(30))
    def test_random_graphs_match_bfs(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 60))
        m = int(rng.integers(0, 3 * n))
        edges = [tuple(sorted(rng.integers(0, n, size=2)))
                 for _ in range(m)]
        edges = [(a, b) for a, b in edges if a != b]
        offsets, neigh = csr_from_edges(n, edges)
        assert group_labels(offsets, neigh).tolist() == bfs_partition(n, edges)

    def test_insertion_order_invariance(self):
        rng = np.random.default_rng(77)
        edges = [(0, 5), (5, 9), (2, 3), (3, 7), (1, 8)]
        offsets, neigh = csr_from_edges(10, edges)
        want = group_labels(offsets, neigh).tolist()
        for _ in range(10):
            perm = [edges[i] for i in rng.permutation(len(edges))]
            offsets2, neigh2 = csr_from_edges(10, perm)
            assert group_labels(offsets2, neigh2).tolist() == want

    def test_from_positions(self):
        # two spatial blobs -> two components
        box = Box.cubic(50.0)
        blob1 = np.array([[1.0, 1, 1], [1.8, 1, 1], [2.6, 1, 1]])
        blob2 = np.array([[30.0, 30, 30], [30.8, 30, 30]])
        pos = np.vstack([blob1, blob2])
        offsets, neigh = list_neighbors(pos, box, 1.0)
        assert group_labels(offsets, neigh).tolist() == [0, 0, 0, 1, 1]


class TestModeMask:
    def test_basic(self):
        assert mode_mask(np.array([1, 1, 2])).tolist() == [1, 1, 0]

    def test_tie_breaks_to_smallest_id(self):
        assert mode_mask(np.array([3, 3, 5, 5])).tolist() == [1, 1, 0, 0]

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_counter_oracle(self, seed):
        rng = np.random.default_rng(200 + seed)
        ids = rng.integers(0, 8, size=int(rng.integers(1, 100)))
        counts = collections.Counter(ids.tolist())
        best = max(counts.values())
        modal = min(v for v, k in counts.items() if k == best)
        mask = mode_mask(ids)
        assert mask.tolist() == [1 if v == modal else 0 for v in ids.tolist()]
        assert int(mask.sum()) == best  # sum(mask) = max cluster size


class TestTrackCluster:
    def test_follows_majority_cluster(self):
        ids = np.array([0, 0, 0, 1])
        prev = np.array([1.0, 1.0, 0.0, 0.0])
        assert track_cluster(ids, prev).tolist() == [1.0, 1.0, 1.0, 0.0]

    def test_dissipation_clears_labels(self):
        ids = np.array([0, 0, 1])
        prev = np.zeros(3)
        assert track_cluster(ids, prev).tolist() == [0.0, 0.0, 0.0]

    def test_tie_breaks_to_smallest_cluster_id(self):
        ids = np.array([0, 0, 1, 1])
        prev = np.array([1.0, 0.0, 1.0, 0.0])
        assert track_cluster(ids, prev).tolist() == [1.0, 1.0, 0.0, 0.0]

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            track_cluster(np.array([0, 1]), np.zeros(3))

    @pytest.mark.parametrize("seed", range(20))
    def test_random_frames_match_reference(self, seed):
        rng = np.random.default_rng(300 + seed)
        n = int(rng.integers(1, 80))
        ids = rng.integers(0, 6, size=n)
        prev = rng.choice([0.0, 1.0], size=n)
        got = track_cluster(ids, prev).tolist()
        assert got == track_cluster_reference(ids.tolist(), prev.tolist())

    def test_constructed_merge_and_dissipate_scenario(self):
        """30 atoms, 50 frames, membership known by construction.

        Atoms 0-9 are cluster A, 10-19 cluster B, 20-29 noise singletons.
        Frames 0-19: A and B separate, tracking stays on A (seeded there).
        Frames 20-34: A and B merged; the merged cluster inherits tracking.
        Frames 35-39: everything splits to singletons -> counts collapse to
        1-member clusters; the label follows the best singleton.
        Frames 40-49: all of A relabeled away (prev all zero) -> cleared.
        """
        n = 30
        label = np.zeros(n)
        label[:10] = 1.0  # seed: A is tracked
        for frame in range(50):
            if frame < 20:
                ids = np.array([0] * 10 + [1] * 10 + list(range(2, 12)))
                expect = [1.0] * 10 + [0.0] * 20
            elif frame < 35:
                ids = np.array([0] * 20 + list(range(1, 11)))
                expect = [1.0] * 20 + [0.0] * 10
            elif frame < 40:
                ids = np.arange(n)
                # every labeled atom is its own cluster of count 1; the
                # smallest labeled id wins -> atom 0 only
                expect = [1.0] + [0.0] * 29
            else:
                ids = np.arange(n)
                label = np.zeros(n)  # labels externally wiped: dissipation
                expect = [0.0] * n
            label = track_cluster(ids, label)
            assert label.tolist() == expect, f"frame {frame}"


class TestLabels2Colors:
    def test_fade_in(self):
        out = labels2colors(np.array([1.0]), np.array([0.0]), 0.1)
        assert out.tolist() == [0.1]

    def test_saturates_at_one(self):
        out = labels2colors(np.array([1.0]), np.array([1.0]), 0.1)
        assert out.tolist() == [1.0]

    def test_fade_out_clamps_at_zero(self):
        out = labels2colors(np.array([0.0]), np.array([0.05]), 0.1)
        assert out.tolist() == [0.0]

    def test_bad_step(self):
        for step in (0.0, -0.1, 1.5):
            with pytest.raises(BadStep):
                labels2colors(np.zeros(1), np.zeros(1), step)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            labels2colors(np.zeros(2), np.zeros(3), 0.1)


class TestCombineChannels:
    def test_elementwise_max(self):
        out = combine_channels(np.array([0.2, 0.9]), np.array([0.8, 0.1]))
        assert out.tolist() == [0.8, 0.9]

    def test_zero_is_neutral(self):
        a = np.array([0.3, 0.0, 1.0])
        assert combine_channels(a, np.zeros(3)).tolist() == a.tolist()

    def test_identity_on_equal_inputs(self):
        a = np.array([0.5, 0.25])
        assert combine_channels(a, a).tolist() == a.tolist()

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            combine_channels(np.zeros(2), np.zeros(4))
