import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from lineconsensus.assignment import linear_assignment

from conftest import brute_force_max_similarity


def test_empty_matrices():
    for shape in [(0, 0), (0, 3), (4, 0)]:
        rows, cols = linear_assignment(np.zeros(shape))
        assert rows.size == cols.size == 0


def test_known_square_instance():
    cost = np.array([[90, 76, 75, 70], [35, 85, 55, 65], [125, 95, 90, 105], [45, 110, 95, 115]])
    rows, cols = linear_assignment(cost)
    assert cost[rows, cols].sum() == 265
    assert list(rows) == [0, 1, 2, 3]


@pytest.mark.parametrize("shape", [(2, 5), (5, 2), (3, 3), (1, 6), (6, 1)])
def test_rectangular_matches_brute_force(rng, shape):
    for _ in range(50):
        sim = rng.random(shape)
        rows, cols = linear_assignment(1.0 - sim)
        assert len(rows) == min(shape)
        assert len(set(rows)) == len(rows) and len(set(cols)) == len(cols)
        assert sim[rows, cols].sum() == pytest.approx(brute_force_max_similarity(sim), abs=1e-12)


def test_agrees_with_scipy_including_ties(rng):
    for _ in range(500):
        n, m = rng.integers(1, 9, 2)
        cost = np.round(rng.random((n, m)), 1)
        r1, c1 = linear_sum_assignment(cost)
        r2, c2 = linear_assignment(cost)
        assert cost[r2, c2].sum() == pytest.approx(cost[r1, c1].sum(), abs=1e-12)


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        linear_assignment([[np.inf, 1.0]])
