"""Monte Carlo approximation of extended Shapley values.

Each sample draws a leaving order uniformly at random, then a partition from
the formation distribution of the weighting given that order, and walks the
order backwards: players return one at a time to the meeting coalition and
each is credited with the change in its value.

Reproducibility: samples are produced in chunks of ``CHUNK_SIZE``; chunk
``c`` uses its own generator seeded from ``(seed, c)``. Chunk results are
merged in chunk order, so the estimate does not depend on how many workers
processed the chunks.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, Partition, Permutation, bit, check_players
from .games import PartitionFunctionGame
from .weightings import AlphaWeighting, HuYangTable, hu_yang_table

__all__ = [
    "CHUNK_SIZE",
    "Diagnostics",
    "ErrorSpec",
    "HuYangTable",
    "SamplerState",
    "approximate",
    "contribution_bounds",
    "hu_yang_table",
    "make_sampler_state",
    "normal_quantile",
    "required_samples",
    "sample_labels",
    "sample_partition",
    "sample_permutation",
    "theoretical_epsilon",
    "variance_bound",
]

CHUNK_SIZE = 4096


@dataclass
class SamplerState:
    rng: np.random.Generator
    weighting: AlphaWeighting
    n: int


def make_sampler_state(weighting: AlphaWeighting, n: int, seed: int) -> SamplerState:
    check_players(n)
    return SamplerState(np.random.default_rng(seed), weighting, n)


def sample_permutation(state: SamplerState) -> Permutation:
    return Permutation(tuple(state.rng.permutation(state.n).tolist()))


def sample_partition(state: SamplerState, pi: Permutation) -> Partition:
    labels = sample_labels(state.rng, state.weighting, np.array([pi.order]))
    return Partition.from_labels(labels[0].tolist())


def _cycle_labels(sigma: np.ndarray) -> np.ndarray:
    """Label every element by the smallest element of its cycle (pointer doubling)."""
    n = sigma.shape[1]
    lab = np.broadcast_to(np.arange(n), sigma.shape).copy()
    f = sigma.copy()
    for _ in range(max(1, math.ceil(math.log2(n))) + 1):
        lab = np.minimum(lab, np.take_along_axis(lab, f, axis=1))
        f = np.take_along_axis(f, f, axis=1)
    return lab


def _sequential_labels(rng, weighting, perms):
    B, n = perms.shape
    labels = np.zeros((B, n), dtype=np.int64)
    full = (1 << n) - 1
    for r in range(B):
        meeting = full
        outside: list[int] = []
        for a in perms[r].tolist():
            rest = meeting & ~bit(a)
            options = []
            for t in range(len(outside) + 1):
                moved = list(outside)
                if t < len(outside):
                    moved[t] |= bit(a)
                else:
                    moved.append(bit(a))
                after = Partition(n, tuple(moved) + ((rest,) if rest else ()))
                options.append(weighting.weight(a, rest, after))
            cum = np.cumsum(options)
            t = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            t = min(t, len(options) - 1)
            if t == len(outside):
                outside.append(bit(a))
            else:
                outside[t] |= bit(a)
            labels[r, a] = t
            meeting = rest
    return labels


def sample_labels(rng: np.random.Generator, weighting: AlphaWeighting, perms: np.ndarray) -> np.ndarray:
    """Block labels of one sampled partition per row of ``perms`` (leaving orders)."""
    perms = np.asarray(perms, dtype=np.int64)
    B, n = perms.shape
    kind = weighting.sampler_kind
    ar = np.arange(B)
    if kind == "free":
        return np.broadcast_to(np.arange(n), (B, n)).copy()
    if kind == "full":
        return np.zeros((B, n), dtype=np.int64)
    if kind == "bolger":
        labels = np.zeros((B, n), dtype=np.int64)
        blocks = np.zeros(B, dtype=np.int64)
        for t in range(n):
            choice = rng.integers(0, blocks + 1)
            labels[ar, perms[:, t]] = choice
            blocks += choice == blocks
        return labels
    if kind == "macho-stadler":
        sigma = rng.permuted(np.broadcast_to(np.arange(n), (B, n)), axis=1)
        return _cycle_labels(sigma)
    if kind == "hu-yang":
        new_block = hu_yang_table(n).new_block
        labels = np.zeros((B, n), dtype=np.int64)
        blocks = np.zeros(B, dtype=np.int64)
        for t in range(n):
            fresh = rng.random(B) < new_block[t, blocks]
            existing = rng.integers(0, np.maximum(blocks, 1))
            choice = np.where(fresh, blocks, existing)
            labels[ar, perms[:, t]] = choice
            blocks += fresh
        return labels
    if kind is None:
        return _sequential_labels(rng, weighting, perms)
    raise ConfigurationError(f"no partition sampler for sampler_kind={kind!r}")


def unwind(game: PartitionFunctionGame, perms: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-sample contributions, shape ``(B, n)``, for given orders and partitions."""
    B, n = perms.shape
    ar = np.arange(B)
    blocks = np.zeros((B, n + 1), dtype=np.int64)
    for p in range(n):
        blocks[ar, labels[:, p]] |= 1 << p
    s = np.zeros(B, dtype=np.int64)
    before = np.zeros(B)
    contrib = np.zeros((B, n))
    for j in range(n - 1, -1, -1):
        a = perms[:, j]
        moving = np.left_shift(1, a).astype(np.int64)
        blocks[ar, labels[ar, a]] &= ~moving
        s |= moving
        blocks[:, n] = s
        after = game.values(s, blocks)
        contrib[ar, a] = after - before
        before = after
    return contrib


@dataclass
class Diagnostics:
    samples: int
    variance: np.ndarray
    std_error: np.ndarray
    max_efficiency_gap: float


def _chunk(game, weighting, seed, index, size):
    n = game.n
    rng = np.random.default_rng([seed, index])
    perms = rng.permuted(np.broadcast_to(np.arange(n), (size, n)), axis=1)
    labels = sample_labels(rng, weighting, perms)
    contrib = unwind(game, perms, labels)
    totals = contrib.sum(axis=1)
    return contrib.sum(axis=0), (contrib**2).sum(axis=0), totals


def approximate(
    game: PartitionFunctionGame,
    weighting: AlphaWeighting,
    m: int,
    seed: int = 0,
    workers: int = 1,
) -> tuple[np.ndarray, Diagnostics]:
    """Estimate the value of ``game`` from ``m`` samples."""
    if m < 1:
        raise ValueError(f"sample count must be positive (got {m})")
    if seed < 0:
        raise ValueError(f"seed must be nonnegative (got {seed})")
    n = game.n
    sizes = [CHUNK_SIZE] * (m // CHUNK_SIZE)
    if m % CHUNK_SIZE:
        sizes.append(m % CHUNK_SIZE)
    jobs = [(game, weighting, seed, c, size) for c, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: _chunk(*job), jobs))
    else:
        results = [_chunk(*job) for job in jobs]

    total = np.zeros(n)
    total_sq = np.zeros(n)
    grand = game.value((1 << n) - 1, Partition.grand(n))
    gap = 0.0
    for s, sq, per_sample in results:
        total += s
        total_sq += sq
        gap = max(gap, float(np.max(np.abs(per_sample - grand))))
    mean = total / m
    if m > 1:
        variance = np.maximum(total_sq - m * mean**2, 0.0) / (m - 1)
    else:
        variance = np.full(n, np.nan)
    return mean, Diagnostics(m, variance, np.sqrt(variance / m), gap)


def normal_quantile(p: float) -> float:
    return statistics.NormalDist().inv_cdf(p)


@dataclass(frozen=True)
class ErrorSpec:
    """Target error ``epsilon`` with failure probability ``beta``."""

    epsilon: float
    beta: float
    min_contrib: float
    max_contrib: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive (got {self.epsilon})")
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1) (got {self.beta})")
        if self.min_contrib > self.max_contrib:
            raise ValueError("min_contrib exceeds max_contrib")


def variance_bound(min_contrib: float, max_contrib: float) -> float:
    return (max_contrib - min_contrib) ** 2 / 4


def required_samples(spec: ErrorSpec) -> int:
    z = normal_quantile(1 - spec.beta / 2)
    m = variance_bound(spec.min_contrib, spec.max_contrib) / spec.epsilon**2 * z * z
    return max(1, math.ceil(m))


def theoretical_epsilon(m: int, beta: float, min_contrib: float, max_contrib: float) -> float:
    """Error guaranteed with probability ``1 - beta`` after ``m`` samples."""
    z = normal_quantile(1 - beta / 2)
    return math.sqrt(variance_bound(min_contrib, max_contrib) / m) * z


def contribution_bounds(distribution: str, n: int) -> tuple[float, float]:
    """Bounds on a single elementary contribution for the random game families."""
    if distribution == "normal":
        return 1.3 - 0.6 * n, 0.6 * n + 0.7
    if distribution == "uniform":
        return -n + 1.0, float(n)
    raise ConfigurationError(f"unknown distribution {distribution!r} (known: normal, uniform)")
