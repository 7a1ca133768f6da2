import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cropcal.baselines import DEConfig, de_optimize
from cropcal.core import Bounds, ConfigurationError, ObjectiveError, Population
from cropcal.demmogc import (
    DEFAULT_OPERATORS,
    DemmogcConfig,
    adapt_operator_probabilities,
    apportion,
    communicate,
    optimize,
    rand_to_best_2,
)
from cropcal.mutation import MutationContext

BOX = Bounds([-5.0, -5.0], [5.0, 5.0])


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


def test_defaults():
    cfg = DemmogcConfig()
    assert (cfg.np, cfg.G, cfg.F, cfg.Cr, cfg.p_best_fraction, cfg.elite_fraction) == (10, 50, 0.6, 0.9, 0.3, 0.1)
    assert cfg.operators == DEFAULT_OPERATORS == ("current-to-best/1", "rand-to-best/2", "current-to-pbest/1")


def test_config_validation():
    with pytest.raises(ConfigurationError):
        DemmogcConfig(np=5)
    with pytest.raises(ConfigurationError):
        DemmogcConfig(elite_fraction=0.6)
    with pytest.raises(ConfigurationError):
        DemmogcConfig(p_best_fraction=0.0)
    with pytest.raises(KeyError):
        DemmogcConfig(operators=("bogus/1",))


def test_rand_to_best_2_arithmetic():
    pop = np.array([[9.0, 9.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    c = MutationContext(pop, 0, 0.6, Bounds([-10, -10], [10, 10]), best=np.array([2.0, 2.0]))
    np.testing.assert_allclose(rand_to_best_2(c, 0, parents=[1, 2, 3]), [2.2, 1.6])


def test_rand_to_best_2_degenerate_cases():
    pop = np.array([[9.0, 9.0], [1.0, 1.0], [3.0, 0.0], [0.0, 4.0]])
    wide = Bounds([-10, -10], [10, 10])
    c = MutationContext(pop, 0, 0.0, wide, best=np.array([2.0, 2.0]))
    np.testing.assert_allclose(rand_to_best_2(c, 1, parents=[1, 2, 3]), [1.0, 1.0])
    same = np.tile([1.5, 2.5], (5, 1))
    c = MutationContext(same, 0, 0.6, wide, best=np.array([1.5, 2.5]))
    np.testing.assert_allclose(rand_to_best_2(c, 2), [1.5, 2.5])
    with pytest.raises(ValueError):
        rand_to_best_2(MutationContext(pop[:3], 0, 0.6, wide, best=pop[0]), 0)


def test_probability_examples():
    s = adapt_operator_probabilities((2, 1, 1))
    np.testing.assert_allclose(s.probabilities, (3 / 7, 2 / 7, 2 / 7))
    np.testing.assert_allclose(adapt_operator_probabilities((0, 0, 0)).probabilities, (1 / 3,) * 3)
    assert adapt_operator_probabilities((10, 0, 0), total=10).sizes == (6, 2, 2)
    assert adapt_operator_probabilities((0, 0, 0), total=10).sizes == (4, 3, 3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 50), min_size=3, max_size=3), st.integers(6, 60))
def test_probabilities_and_sizes_invariants(successes, total):
    s = adapt_operator_probabilities(successes, total)
    assert abs(sum(s.probabilities) - 1.0) <= 1e-12
    assert all(p > 0 for p in s.probabilities)
    assert sum(s.sizes) == total
    assert min(s.sizes) >= 2


def test_apportion_rejects_impossible_floor():
    with pytest.raises(ConfigurationError):
        apportion(5, [1, 1, 1], floor=2)


def _pops(*fits):
    return [Population(np.array([[f, 0.0] for f in fs]), np.array(fs, dtype=float)) for fs in fits]


def test_communicate_hand_trace():
    subpops, pool = communicate(_pops([1, 9], [2, 8], [3, 7]), 0.5, 0)
    assert sorted(pool.fitness.tolist()) == [1.0, 2.0, 3.0]
    for before, after in zip(([1, 9], [2, 8], [3, 7]), subpops):
        assert before[0] in after.fitness  # own elite survives
        assert max(after.fitness) <= 3.0
        # the migrant came from another subpopulation
        assert after.fitness[1] != before[0]
    assert max(max(sp.fitness) for sp in subpops) <= 3.0


def test_communicate_default_sizes():
    pops = _pops([5, 1, 7, 3], [4, 2, 6], [8, 9, 0.5])
    out, pool = communicate(pops, 0.10, 0)
    assert len(pool) == 3
    for before, after in zip(pops, out):
        changed = np.sum(before.fitness != after.fitness)
        assert changed <= 1
        assert np.argmax(before.fitness) in np.flatnonzero(before.fitness != after.fitness) or changed == 0


def test_communicate_zero_k_is_noop():
    pops = _pops([5, 1, 7, 3], [4, 2, 6], [8, 9, 0.5])
    g = np.random.default_rng(0)
    state = g.bit_generator.state
    out, pool = communicate(pops, 0.0, g)
    assert len(pool) == 0
    assert g.bit_generator.state == state
    for a, b in zip(pops, out):
        np.testing.assert_array_equal(a.fitness, b.fitness)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.lists(st.floats(0, 100), min_size=2, max_size=6), min_size=3, max_size=3),
    st.sampled_from([0.1, 0.25, 0.5]),
    st.integers(0, 1000),
)
def test_communicate_never_loses_global_best(fits, k, seed):
    pops = _pops(*fits)
    out, _ = communicate(pops, k, seed)
    assert min(min(sp.fitness) for sp in out) == min(min(f) for f in fits)
    assert [len(sp) for sp in out] == [len(f) for f in fits]


def test_unique_migrants_skip_copies():
    pops = _pops([1, 9], [1, 8], [3, 7])
    out, _ = communicate(pops, 0.5, 0, unique=True)
    for sp in out:
        keys = [g.tobytes() for g in sp.genomes]
        assert len(set(keys)) == len(keys)


def test_sphere_converges_for_most_seeds():
    # the elite migration makes small populations collapse now and then;
    # the majority of seeds still reach the optimum
    best = np.array([optimize(sphere, BOX, rng=s).best.fitness for s in range(20)])
    assert np.median(best) < 1e-2
    assert np.mean(best < 1e-2) >= 0.6


def test_constant_objective_flat_history():
    r = optimize(lambda x: 3.5, BOX, rng=0)
    assert r.best.fitness == 3.5
    np.testing.assert_array_equal(r.history, np.full(50, 3.5))


def test_zero_generations():
    r = optimize(sphere, BOX, DemmogcConfig(G=0), rng=4)
    assert r.history.size == 0
    assert r.n_evals == 10


def test_history_length_and_eval_count():
    r = optimize(sphere, BOX, DemmogcConfig(G=7), rng=1)
    assert r.history.size == 7
    assert r.n_evals == 10 + 7 * 10


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.0, 0.1, 0.3]))
def test_monotone_bounded_and_adaptive(seed, k):
    seen = []
    box = Bounds([-3.0, 1.0, 0.0], [2.0, 4.0, 0.5])
    r = optimize(
        lambda x: float(np.sum(np.sin(3 * x) + x**2)),
        box,
        DemmogcConfig(G=15, elite_fraction=k),
        rng=seed,
        callback=lambda g, genomes, fit: seen.append(box.contains(genomes)),
    )
    assert all(seen) and len(seen) == 15
    assert np.all(np.diff(r.history) <= 0)
    for p, sizes in zip(r.extras["probabilities"], r.extras["sizes"]):
        assert abs(sum(p) - 1) <= 1e-12 and min(p) > 0
        assert sum(sizes) == 10 and min(sizes) >= 2


def test_reduces_to_canonical_de():
    # same strategy everywhere, no migration, fixed F and Cr: identical trajectories
    for seed in range(3):
        cfg = DemmogcConfig(operators=("best/1",) * 3, elite_fraction=0.0, F=0.6, Cr=0.9, G=20)
        a = optimize(sphere, BOX, cfg, rng=seed)
        b = de_optimize(sphere, BOX, DEConfig(strategy="best/1", F=0.6, Cr=0.9, G=20), rng=seed)
        np.testing.assert_array_equal(a.history, b.history)
        np.testing.assert_array_equal(a.best.genome, b.best.genome)


def test_deterministic():
    a = optimize(sphere, BOX, rng=9)
    b = optimize(sphere, BOX, rng=9)
    np.testing.assert_array_equal(a.history, b.history)
    assert a.extras == b.extras


def test_non_finite_objective_aborts():
    with pytest.raises(ObjectiveError):
        optimize(lambda x: float("nan"), BOX, rng=0)


def test_collapsed_box_returns_the_point():
    box = Bounds([1.0, 2.0], [1.0, 2.0])
    r = optimize(sphere, box, rng=0)
    np.testing.assert_array_equal(r.best.genome, [1.0, 2.0])
    assert r.best.fitness == 5.0
