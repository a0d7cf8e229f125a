import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tiegraph.graph import (
    Roster,
    adjacency_to_dyads,
    copeland_score,
    dyad_flat,
    dyads_to_adjacency,
    iter_dyads,
    n_dyads,
    report_array_to_matrix,
)


def test_roster_validation():
    assert Roster(["a", "b"]).n_vertices == 2
    with pytest.raises(ValueError):
        Roster(["a"])
    with pytest.raises(ValueError, match="duplicate"):
        Roster(["a", "b", "a"])
    with pytest.raises(KeyError):
        Roster(["a", "b"]).ordinal("c")


@pytest.mark.parametrize("n", range(2, 9))
def test_flat_index_is_bijection(n):
    flats = [dyad_flat(i, j, n) for i in range(n) for j in range(i + 1, n)]
    assert sorted(flats) == list(range(n_dyads(n)))
    # lexicographic order
    assert flats == list(range(n_dyads(n)))
    assert [d.flat for d in iter_dyads(n)] == flats
    assert all(d.i < d.j for d in iter_dyads(n))


def test_flat_index_symmetric_and_rejects_loops():
    assert dyad_flat(2, 0, 4) == dyad_flat(0, 2, 4)
    with pytest.raises(ValueError):
        dyad_flat(1, 1, 4)


def test_adjacency_to_dyads_examples():
    assert adjacency_to_dyads([[0, 1], [0, 0]]).tolist() == [1]
    assert adjacency_to_dyads([[0, 0], [0, 0]]).tolist() == [0]
    theta = np.zeros((3, 3), dtype=int)
    theta[1, 0] = 1  # vertex 2 dominates vertex 1 (1-based)
    assert adjacency_to_dyads(theta).tolist() == [-1, 0, 0]


@pytest.mark.parametrize(
    "theta",
    [
        [[0, 1], [1, 0]],  # mutual domination
        [[1, 0], [0, 0]],  # loop
        [[0, 2], [0, 0]],  # not binary
        [[0, 1, 0], [0, 0, 0]],  # not square
    ],
)
def test_adjacency_rejects_invalid(theta):
    with pytest.raises(ValueError):
        adjacency_to_dyads(theta)


def test_dyads_to_adjacency_examples():
    assert dyads_to_adjacency([1], 2).tolist() == [[0, 1], [0, 0]]
    assert not dyads_to_adjacency([0, 0, 0], Roster("abc")).any()
    with pytest.raises(ValueError):
        dyads_to_adjacency([0, 0], 3)


def test_round_trip_exhaustive_n3():
    seen = set()
    for xi in itertools.product((-1, 0, 1), repeat=3):
        theta = dyads_to_adjacency(xi, 3)
        assert tuple(adjacency_to_dyads(theta)) == xi
        seen.add(theta.tobytes())
    assert len(seen) == 27


@given(st.integers(2, 7).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.sampled_from((-1, 0, 1)), min_size=n_dyads(n), max_size=n_dyads(n)))))
def test_round_trip_property(case):
    n, xi = case
    assert adjacency_to_dyads(dyads_to_adjacency(xi, n)).tolist() == xi


def test_report_array_to_matrix():
    assert report_array_to_matrix(np.array([[0, 1], [0, 0]])[:, :, None]).tolist() == [[1]]
    y = np.stack([np.zeros((2, 2)), np.array([[0, 0], [1, 0]])], axis=2).astype(int)
    assert report_array_to_matrix(y).tolist() == [[0], [-1]]

    rng = np.random.default_rng(3)
    slices = [dyads_to_adjacency(rng.integers(-1, 2, size=3), 3) for _ in range(3)]
    y = np.stack(slices, axis=2)
    expected = np.stack([adjacency_to_dyads(s) for s in slices])
    np.testing.assert_array_equal(report_array_to_matrix(y), expected)


def test_report_array_rejects_bad_slice():
    y = np.zeros((2, 2, 2), dtype=int)
    y[0, 1, 1] = y[1, 0, 1] = 1
    with pytest.raises(ValueError, match="informant slice 1"):
        report_array_to_matrix(y)


def test_copeland_examples():
    assert copeland_score([1, 0, 0], 3).tolist() == [1, -1, 0]
    assert copeland_score([0, 0, 0], 3).tolist() == [0, 0, 0]
    # 1 beats 2, 2 beats 3, 3 beats 1: dyads (1,2)=+1, (1,3)=-1, (2,3)=+1
    assert copeland_score([1, -1, 1], 3).tolist() == [0, 0, 0]


@given(st.integers(2, 8).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.sampled_from((-1, 0, 1)), min_size=n_dyads(n), max_size=n_dyads(n)))))
def test_copeland_sums_to_zero(case):
    n, xi = case
    assert copeland_score(xi, n).sum() == 0
