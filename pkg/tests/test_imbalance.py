"""Class statistics and head/tail partitioning."""

import numpy as np
import pytest

from tailfocal import ConfigError, class_stats_from_counts, tail_partition


def _brute_partition(counts, t_s):
    """Explicit sort-and-scan re-derivation of positions and tail flags."""
    order = sorted(range(len(counts)), key=lambda c: (-counts[c], c))
    total = sum(counts)
    pos = [0.0] * len(counts)
    cum = 0
    for c in order:
        cum += counts[c]
        pos[c] = cum / total
    return pos, [p > t_s for p in pos]


class TestClassStats:
    def test_basic_aggregates(self):
        stats = class_stats_from_counts([100, 10, 2])
        assert stats.n_classes == 3
        assert stats.total == 112
        assert stats.cir == 50.0
        assert list(stats.desc_order) == [0, 1, 2]

    def test_desc_order_breaks_ties_by_class_index(self):
        stats = class_stats_from_counts([5, 9, 5, 9])
        assert list(stats.desc_order) == [1, 3, 0, 2]

    def test_uniform_counts(self):
        stats = class_stats_from_counts([7, 7])
        assert stats.cir == 1.0
        assert stats.total == 14

    def test_rejects_zero_and_negative_counts(self):
        with pytest.raises(ConfigError):
            class_stats_from_counts([5, 0, 3])
        with pytest.raises(ConfigError):
            class_stats_from_counts([5, -1])

    def test_rejects_empty_and_non_integer(self):
        with pytest.raises(ConfigError):
            class_stats_from_counts([])
        with pytest.raises(ConfigError):
            class_stats_from_counts([1.5, 2.0])

    def test_accepts_integer_valued_floats(self):
        stats = class_stats_from_counts(np.array([4.0, 2.0]))
        assert stats.counts.dtype == np.int64
        assert stats.total == 6


class TestTailPartition:
    def test_documented_example(self):
        stats = class_stats_from_counts([100, 10, 2])
        part = tail_partition(stats, 0.9)
        np.testing.assert_allclose(
            part.normalized_position, [100 / 112, 110 / 112, 1.0], rtol=0, atol=0
        )
        assert list(part.is_tail) == [False, True, True]
        assert part.n_tail == 2

    def test_last_position_is_exactly_one(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            counts = rng.integers(1, 10_000, size=rng.integers(1, 40))
            stats = class_stats_from_counts(counts)
            part = tail_partition(stats, 0.5)
            assert part.normalized_position[stats.desc_order[-1]] == 1.0

    def test_threshold_one_gives_no_tail(self):
        stats = class_stats_from_counts([100, 10, 2])
        part = tail_partition(stats, 1.0)
        assert part.n_tail == 0

    def test_threshold_zero_marks_every_class(self):
        stats = class_stats_from_counts([100, 10, 2])
        part = tail_partition(stats, 0.0)
        assert part.n_tail == 3

    def test_positions_nondecreasing_along_desc_order(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            counts = rng.integers(1, 500, size=rng.integers(2, 30))
            stats = class_stats_from_counts(counts)
            part = tail_partition(stats, 0.7)
            walked = part.normalized_position[stats.desc_order]
            assert np.all(np.diff(walked) >= 0)

    def test_count_scaling_leaves_partition_unchanged(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            counts = rng.integers(1, 200, size=rng.integers(2, 20))
            k = int(rng.integers(2, 9))
            a = tail_partition(class_stats_from_counts(counts), 0.8)
            b = tail_partition(class_stats_from_counts(counts * k), 0.8)
            assert np.array_equal(a.normalized_position, b.normalized_position)
            assert np.array_equal(a.is_tail, b.is_tail)

    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            counts = rng.integers(1, 1000, size=rng.integers(1, 25))
            t_s = float(rng.uniform(0, 1))
            stats = class_stats_from_counts(counts)
            part = tail_partition(stats, t_s)
            pos, tail = _brute_partition(list(map(int, counts)), t_s)
            assert np.array_equal(part.normalized_position, np.array(pos))
            assert list(part.is_tail) == tail

    def test_rejects_threshold_outside_unit_interval(self):
        stats = class_stats_from_counts([3, 1])
        with pytest.raises(ConfigError):
            tail_partition(stats, -0.1)
        with pytest.raises(ConfigError):
            tail_partition(stats, 1.1)
