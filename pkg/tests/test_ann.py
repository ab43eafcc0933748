"""Hyperplane-forest retrieval cross-checked against brute force."""
from __future__ import annotations

import numpy as np
import pytest

from liftparse.ann import HyperplaneForest


def unit_rows(rng, n, dim):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def brute_force(vectors, query, radius):
    # per-row norm, bit-identical to the forest's own distance expression
    hits = [
        (i, float(np.linalg.norm(vectors[i] - query)))
        for i in range(len(vectors))
    ]
    hits = [(i, d) for i, d in hits if d < radius]
    hits.sort(key=lambda pair: (pair[1], pair[0]))
    return hits


@pytest.mark.parametrize("radius", [0.3, 0.9, 1.4])
def test_matches_brute_force_with_full_budget(radius):
    rng = np.random.default_rng(11)
    vectors = unit_rows(rng, 300, 32)
    forest = HyperplaneForest(vectors, n_trees=16, leaf_size=8, seed=0)
    for _ in range(200):
        q = unit_rows(rng, 1, 32)[0]
        assert forest.query_radius(q, radius) == brute_force(vectors, q, radius)


def test_budget_at_store_size_is_exact():
    rng = np.random.default_rng(5)
    vectors = unit_rows(rng, 128, 16)
    forest = HyperplaneForest(vectors, seed=3)
    for _ in range(100):
        q = unit_rows(rng, 1, 16)[0]
        got = forest.query_radius(q, 0.8, budget=len(vectors))
        assert got == brute_force(vectors, q, 0.8)


def test_results_sorted_by_distance_then_id():
    rng = np.random.default_rng(2)
    vectors = unit_rows(rng, 60, 8)
    forest = HyperplaneForest(vectors)
    q = unit_rows(rng, 1, 8)[0]
    out = forest.query_radius(q, 1.2)
    assert out == sorted(out, key=lambda pair: (pair[1], pair[0]))


def test_duplicate_vectors_all_retrieved():
    """Coincident points defeat plane-picking; the forest must fall back."""
    rng = np.random.default_rng(9)
    point = unit_rows(rng, 1, 12)[0]
    vectors = np.vstack([np.tile(point, (50, 1)), unit_rows(rng, 10, 12)])
    forest = HyperplaneForest(vectors, leaf_size=4)
    hits = forest.query_radius(point, 1e-6)
    assert [i for i, _ in hits] == list(range(50))
    assert all(d == 0.0 for _, d in hits)


def test_empty_store():
    forest = HyperplaneForest(np.zeros((0, 8)))
    assert forest.query_radius(np.ones(8), 1.0) == []


def test_single_point_store():
    v = np.zeros((1, 4))
    v[0, 0] = 1.0
    forest = HyperplaneForest(v)
    assert forest.query_radius(v[0], 0.1) == [(0, 0.0)]
    far = np.array([0.0, 1.0, 0.0, 0.0])
    assert forest.query_radius(far, 0.1) == []


def test_build_is_deterministic():
    rng = np.random.default_rng(7)
    vectors = unit_rows(rng, 100, 16)
    a = HyperplaneForest(vectors, seed=4).to_arrays()
    b = HyperplaneForest(vectors, seed=4).to_arrays()
    assert a.keys() == b.keys()
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])


def test_arrays_round_trip_preserves_queries():
    rng = np.random.default_rng(13)
    vectors = unit_rows(rng, 150, 24)
    forest = HyperplaneForest(vectors, seed=1)
    rebuilt = HyperplaneForest.from_arrays(vectors, forest.to_arrays())
    for _ in range(50):
        q = unit_rows(rng, 1, 24)[0]
        assert rebuilt.query_radius(q, 1.0) == forest.query_radius(q, 1.0)
