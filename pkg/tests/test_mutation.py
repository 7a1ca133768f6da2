import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cropcal.core import Bounds, Solution
from cropcal.mutation import (
    STRATEGIES,
    MutationContext,
    PBestArchive,
    binomial_crossover,
    get_strategy,
    mutate,
    sample_parents,
    select_pbest,
)

WIDE = Bounds([-100.0, -100.0], [100.0, 100.0])
POP = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [0.0, 3.0], [4.0, 4.0], [1.0, 2.0], [3.0, 1.0]])


def ctx(i=0, F=0.5, best=None, arch=None):
    return MutationContext(POP, i, F, WIDE, best=best, pbest_archive=arch)


def test_catalog_is_complete():
    expected = {
        "rand/1", "current/1", "best/1", "rand/2", "best/2",
        "current-to-best/1", "current-to-rand/1", "current-to-pbest/1",
    }
    assert expected <= set(STRATEGIES)
    assert get_strategy("DE/best/1/bin").name == "best/1"
    with pytest.raises(KeyError):
        get_strategy("nonsense/3")


# hand-computed mutants with pinned parents
@pytest.mark.parametrize(
    "name,parents,expected",
    [
        ("rand/1", [1, 2, 3], [1 + 0.5 * (2 - 0), 1 + 0.5 * (0 - 3)]),
        ("current/1", [1, 2], [0 + 0.5 * (1 - 2), 0 + 0.5 * (1 - 0)]),
        ("best/1", [1, 2], [4 + 0.5 * (1 - 2), 4 + 0.5 * (1 - 0)]),
        ("rand/2", [1, 2, 3, 4, 5], [1 + 0.5 * 2 + 0.5 * (4 - 1), 1 - 1.5 + 0.5 * (4 - 2)]),
        ("best/2", [1, 2, 3, 4], [4 - 0.5 + 0.5 * (0 - 4), 4 + 0.5 + 0.5 * (3 - 4)]),
        ("current-to-best/1", [1, 2], [0 + 0.5 * 4 + 0.5 * (1 - 2), 0 + 0.5 * 4 + 0.5 * (1 - 0)]),
        ("current-to-rand/1", [1, 2, 3], [0.5 * 1 + 0.5 * (2 - 0), 0.5 * 1 + 0.5 * (0 - 3)]),
        ("current-to-pbest/1", [1, 2], [0.5 * 3 + 0.5 * (1 - 2), 0.5 * 1 + 0.5 * (1 - 0)]),
    ],
)
def test_mutants_with_pinned_parents(name, parents, expected):
    c = ctx(best=np.array([4.0, 4.0]), arch=np.array([3.0, 1.0]))
    v = mutate(name, c, 0, parents=parents)
    np.testing.assert_allclose(v, expected)


def test_rand_1_with_equal_parents_returns_parent():
    pop = np.tile([1.5, -2.0], (5, 1))
    v = mutate("rand/1", MutationContext(pop, 0, 0.8, WIDE), 0)
    np.testing.assert_allclose(v, [1.5, -2.0])


def test_best_1_with_zero_F_is_best():
    v = mutate("best/1", ctx(F=0.0, best=np.array([4.0, 4.0])), 3)
    np.testing.assert_array_equal(v, [4.0, 4.0])


def test_mutant_is_clamped():
    b = Bounds([0, 0], [1, 1])
    v = mutate("rand/1", MutationContext(POP, 0, 0.5, b), 0, parents=[4, 1, 0])
    assert b.contains(v)


def test_missing_inputs_raise():
    with pytest.raises(ValueError):
        mutate("best/1", ctx(), 0)
    with pytest.raises(ValueError):
        mutate("current-to-pbest/1", ctx(), 0)
    with pytest.raises(ValueError):
        mutate("rand/2", MutationContext(POP[:4], 0, 0.5, WIDE), 0)
    with pytest.raises(ValueError):
        MutationContext(POP, 0, float("nan"), WIDE)


@settings(max_examples=60, deadline=None)
@given(st.integers(6, 40), st.integers(1, 5), st.integers(0, 10**6))
def test_parents_distinct_and_exclude_target(n, k, seed):
    rng = np.random.default_rng(seed)
    target = int(rng.integers(n))
    idx = sample_parents(n, k, target, rng)
    assert len(set(idx.tolist())) == k
    assert target not in idx
    assert np.all((idx >= 0) & (idx < n))


def test_parent_sampling_is_uniform():
    # chi-square style check: every non-target index appears about equally often
    rng = np.random.default_rng(1)
    counts = np.zeros(10)
    for _ in range(20000):
        counts[sample_parents(10, 3, 4, rng)] += 1
    assert counts[4] == 0
    others = np.delete(counts, 4)
    expected = 20000 * 3 / 9
    assert np.all(np.abs(others - expected) < 5 * np.sqrt(expected))


def test_binomial_crossover_cr_extremes():
    t = np.zeros(6)
    m = np.ones(6)
    np.testing.assert_array_equal(binomial_crossover(t, m, 1.0, 0), m)
    u = binomial_crossover(t, m, 0.0, 0)
    assert np.sum(u != t) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.floats(0, 1), st.integers(0, 10**6))
def test_crossover_never_returns_target(d, cr, seed):
    t = np.zeros(d)
    m = np.arange(1, d + 1, dtype=float)
    u = binomial_crossover(t, m, cr, seed)
    assert not np.array_equal(u, t)
    assert np.all((u == t) | (u == m))


def test_crossover_errors():
    with pytest.raises(ValueError):
        binomial_crossover(np.zeros(2), np.zeros(3), 0.5, 0)
    with pytest.raises(ValueError):
        binomial_crossover(np.zeros(2), np.zeros(2), 1.5, 0)


def test_select_pbest_top_fraction():
    arch = [Solution([float(i)], float(i)) for i in range(10)]
    picks = {select_pbest(arch, 0.3, s).fitness for s in range(200)}
    assert picks == {0.0, 1.0, 2.0}
    assert select_pbest(arch, 0.01, 0).fitness == 0.0
    with pytest.raises(ValueError):
        select_pbest([], 0.3, 0)
    with pytest.raises(ValueError):
        select_pbest(arch, 0.0, 0)


def test_pbest_archive_dedup_and_eviction():
    a = PBestArchive(4)
    a.add(np.array([[0.0], [1.0], [0.0]]), np.array([0.0, 1.0, 0.0]))
    assert len(a) == 2
    a.add(np.array([[2.0], [3.0], [4.0]]), np.array([2.0, 3.0, 4.0]))
    assert len(a) == 4
    # oldest entry went first
    np.testing.assert_array_equal(a.genomes.ravel(), [1.0, 2.0, 3.0, 4.0])
    assert select_pbest(a, 0.25, 0).fitness == 1.0
    with pytest.raises(ValueError):
        PBestArchive(0)
