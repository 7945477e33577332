from collections import Counter
from dataclasses import dataclass

import numpy as np
import pytest
from scipy.special import ndtri
from scipy.stats import chisquare

from extshapley.bench import RandomGameSpec, make_random_game
from extshapley.core import ConfigurationError, Partition, Permutation, bell, enumerate_partitions
from extshapley.exact import exact_value, formation_probability
from extshapley.games import TableGame
from extshapley.montecarlo import (
    ErrorSpec,
    approximate,
    contribution_bounds,
    hu_yang_table,
    make_sampler_state,
    normal_quantile,
    required_samples,
    sample_labels,
    sample_partition,
    sample_permutation,
    theoretical_epsilon,
    unwind,
    variance_bound,
)
from extshapley.weightings import AlphaWeighting, all_weightings, alpha_bolger, alpha_free, alpha_macho_stadler

from helpers import random_table_game

WEIGHTINGS = all_weightings()
ids = [a.name for a in WEIGHTINGS]


def test_single_player_permutation():
    state = make_sampler_state(alpha_free(), 1, 0)
    assert all(sample_permutation(state) == Permutation((0,)) for _ in range(10))


def test_permutation_uniform():
    state = make_sampler_state(alpha_free(), 3, 123)
    counts = Counter(sample_permutation(state).order for _ in range(60000))
    assert len(counts) == 6
    for c in counts.values():
        assert abs(c / 60000 - 1 / 6) <= 0.01


def test_sampler_determinism():
    def draw(seed):
        state = make_sampler_state(alpha_bolger(), 5, seed)
        out = []
        for _ in range(50):
            pi = sample_permutation(state)
            out.append((pi, sample_partition(state, pi)))
        return out

    assert draw(4) == draw(4)
    assert draw(4) != draw(5)


def test_free_and_full_samplers_are_degenerate():
    rng = np.random.default_rng(0)
    perms = rng.permuted(np.tile(np.arange(4), (100, 1)), axis=1)
    free = sample_labels(rng, WEIGHTINGS[0], perms)
    full = sample_labels(rng, WEIGHTINGS[1], perms)
    assert all(Partition.from_labels(r) == Partition.singletons(4) for r in free.tolist())
    assert all(Partition.from_labels(r) == Partition.grand(4) for r in full.tolist())


def _empirical(alpha, pi, draws, seed):
    rng = np.random.default_rng(seed)
    labels = sample_labels(rng, alpha, np.tile(np.array(pi.order), (draws, 1)))
    return Counter(Partition.from_labels(r) for r in labels.tolist())


@pytest.mark.parametrize("alpha", [a for a in WEIGHTINGS if a.name not in ("free", "full")], ids=lambda a: a.name)
def test_sampler_matches_chained_weights(alpha):
    n, draws = 4, 20000
    parts = enumerate_partitions(n)
    for k, order in enumerate([(0, 1, 2, 3), (3, 1, 0, 2), (2, 3, 1, 0)]):
        pi = Permutation(order)
        probs = np.array([formation_probability(alpha, pi, p) for p in parts])
        counts = _empirical(alpha, pi, draws, k)
        support = probs > 0
        assert sum(counts[p] for p, s in zip(parts, support) if not s) == 0
        obs = np.array([counts[p] for p in parts])[support]
        assert chisquare(obs, probs[support] * draws).pvalue > 0.001


def test_bolger_last_player_alone():
    n = 3
    pi = Permutation.identity(n)
    counts = _empirical(alpha_bolger(), pi, 40000, 9)
    freq = counts[Partition(n, (0b011, 0b100))] / 40000
    assert abs(freq - 1 / 4) < 0.01


def test_hu_yang_sampler_uniform():
    n, draws = 4, 30000
    counts = _empirical(WEIGHTINGS[4], Permutation((2, 0, 3, 1)), draws, 17)
    obs = np.array([counts[p] for p in enumerate_partitions(n)])
    assert chisquare(obs).pvalue > 0.001


@dataclass(frozen=True)
class CustomBolger(AlphaWeighting):
    name: str = "custom"

    def weight(self, i, coalition, partition):
        return alpha_bolger().weight(i, coalition, partition)


def test_generic_sampler_matches_chained_weights():
    n, draws = 4, 6000
    pi = Permutation((1, 3, 0, 2))
    parts = enumerate_partitions(n)
    probs = np.array([formation_probability(alpha_bolger(), pi, p) for p in parts])
    counts = _empirical(CustomBolger(), pi, draws, 2)
    obs = np.array([counts[p] for p in parts])
    assert chisquare(obs, probs * draws).pvalue > 0.001


def test_unknown_sampler_kind():
    @dataclass(frozen=True)
    class Odd(AlphaWeighting):
        name: str = "odd"
        sampler_kind: str = "mystery"

        def weight(self, i, coalition, partition):
            return 1.0

    with pytest.raises(ConfigurationError):
        sample_labels(np.random.default_rng(0), Odd(), np.zeros((1, 3), dtype=np.int64))


@pytest.mark.parametrize("alpha", WEIGHTINGS, ids=ids)
def test_every_sample_telescopes(alpha):
    n = 5
    game = make_random_game(RandomGameSpec("normal", n, 3))
    rng = np.random.default_rng(1)
    perms = rng.permuted(np.tile(np.arange(n), (500, 1)), axis=1)
    contrib = unwind(game, perms, sample_labels(rng, alpha, perms))
    grand = game.value((1 << n) - 1, Partition.grand(n))
    assert np.max(np.abs(contrib.sum(axis=1) - grand)) <= 1e-12


def test_zero_game_estimate_is_zero():
    est, diag = approximate(TableGame(4), alpha_bolger(), 777, seed=3)
    assert np.array_equal(est, np.zeros(4))
    assert diag.samples == 777


def test_single_sample_has_no_variance():
    est, diag = approximate(random_table_game(3, np.random.default_rng(0)), alpha_free(), 1)
    assert np.all(np.isnan(diag.variance))


def test_approximate_determinism_and_workers():
    game = make_random_game(RandomGameSpec("uniform", 6, 2))
    a, _ = approximate(game, alpha_macho_stadler(), 10000, seed=5, workers=1)
    b, _ = approximate(game, alpha_macho_stadler(), 10000, seed=5, workers=1)
    c, _ = approximate(game, alpha_macho_stadler(), 10000, seed=5, workers=3)
    d, _ = approximate(game, alpha_macho_stadler(), 10000, seed=6)
    assert np.array_equal(a, b) and np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_approximate_rejects_bad_arguments():
    game = TableGame(3)
    with pytest.raises(ValueError):
        approximate(game, alpha_free(), 0)
    with pytest.raises(ValueError):
        approximate(game, alpha_free(), 10, seed=-1)


@pytest.mark.parametrize("alpha", WEIGHTINGS, ids=ids)
def test_unbiased(alpha):
    n = 4
    game = random_table_game(n, np.random.default_rng(31))
    exact = exact_value(game, alpha)
    runs = np.array([approximate(game, alpha, 2000, seed=s)[0] for s in range(50)])
    mean = runs.mean(axis=0)
    spread = runs.std(axis=0, ddof=1) / np.sqrt(len(runs))
    assert np.all(np.abs(mean - exact) <= 3 * spread + 1e-12)


def test_macho_stadler_error_bound_n5():
    game = make_random_game(RandomGameSpec("normal", 5, 0))
    lo, hi = contribution_bounds("normal", 5)
    m = required_samples(ErrorSpec(0.05, 0.01, lo, hi))
    est, _ = approximate(game, alpha_macho_stadler(), m, seed=1)
    assert np.max(np.abs(est - exact_value(game, alpha_macho_stadler()))) <= 0.05


def test_normal_quantile():
    assert normal_quantile(0.995) == pytest.approx(2.5758293, abs=1e-6)
    assert round(normal_quantile(0.995), 2) == 2.58
    assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-12)
    for beta in (1e-9, 1e-6, 1e-4, 0.01, 0.05, 0.2, 0.5):
        assert normal_quantile(1 - beta / 2) == pytest.approx(ndtri(1 - beta / 2), abs=1e-6)


def test_required_samples():
    assert variance_bound(0.0, 2.0) == 1.0
    assert required_samples(ErrorSpec(0.1, 0.01, 0.0, 2.0)) == 664
    assert required_samples(ErrorSpec(0.05, 0.01, 0.0, 1.0)) == 664
    m = required_samples(ErrorSpec(0.1, 0.01, -4.7, 6.7))
    assert theoretical_epsilon(m, 0.01, -4.7, 6.7) <= 0.1 < theoretical_epsilon(m - 1, 0.01, -4.7, 6.7)


@pytest.mark.parametrize("args", [(0.0, 0.01, 0, 1), (0.1, 0.0, 0, 1), (0.1, 1.0, 0, 1), (0.1, 0.01, 2, 1)])
def test_error_spec_validation(args):
    with pytest.raises(ValueError):
        ErrorSpec(*args)


def test_contribution_bounds():
    assert contribution_bounds("normal", 10) == pytest.approx((-4.7, 6.7))
    assert contribution_bounds("uniform", 10) == (-9.0, 10.0)
    assert contribution_bounds("normal", 1) == pytest.approx((0.7, 1.3))
    with pytest.raises(ConfigurationError):
        contribution_bounds("cauchy", 3)


@pytest.mark.parametrize("n", range(1, 13))
def test_hu_yang_table(n):
    t = hu_yang_table(n)
    for c in range(n + 1):
        assert t.D(n, c) == 1
    for k in range(1, n):
        for c in range(1, k + 1):
            assert t.D(k, c) == c * t.D(k + 1, c) + t.D(k + 1, c + 1)
            assert t.new_block_prob(k, c) >= 1 / n
            assert c * t.join_prob(k, c) + t.new_block_prob(k, c) == pytest.approx(1.0)
    assert t.D(0, 0) == t.D(1, 1) == bell(n)
    if n > 1:
        assert t.join_prob(1, 1) == pytest.approx(bell(n - 1) / bell(n))


def test_hu_yang_table_n4_anchor():
    assert hu_yang_table(4).new_block_prob(1, 1) == pytest.approx(2 / 3)
