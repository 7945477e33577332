"""Marginality weightings ``alpha_i(S, P)``.

``weight(i, S, P)`` is the probability that player ``i``, leaving the
coalition ``S + i``, ends up where it sits in ``P``; ``S`` is what is left
behind (``0`` when ``i`` was alone) and ``i`` is not in ``S``. From a state
``(S', P')`` the admissible moves of ``i in S'`` are: join any other block
of ``P'``, or open a new block. When ``S' == {i}`` the new-block move leaves
the partition unchanged.
"""

from __future__ import annotations

import abc
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import (
    ConfigurationError,
    MAX_ENUM_PLAYERS,
    MAX_PLAYERS,
    Partition,
    Permutation,
    SizeError,
    bit,
    enumerate_partitions,
    format_coalition,
    lowbit,
    popcount,
    transfer,
)


def prior_partition(i: int, coalition: int, partition: Partition) -> Partition:
    """The partition ``tau_i^S(P)`` that ``i`` left to produce ``partition``."""
    return transfer(partition, i, coalition)


def transfer_targets(partition: Partition, coalition: int) -> list[int]:
    """Admissible targets for a player leaving ``coalition``; ``0`` is the new block."""
    return [b for b in partition.blocks if b != coalition] + [0]


class AlphaWeighting(abc.ABC):
    """A weighting; subclasses must be symmetric, nonnegative and normalized.

    ``sampler_kind`` names a dedicated partition sampler in
    :mod:`extshapley.montecarlo`; ``None`` selects the generic sequential one.
    """

    name: str = "custom"
    sampler_kind: str | None = None

    @abc.abstractmethod
    def weight(self, i: int, coalition: int, partition: Partition) -> float:
        ...


class ShapeWeighting(AlphaWeighting):
    """A weighting whose value depends only on counts and sizes.

    ``transition(n, remaining, outside_blocks, target_size)`` gives the
    probability of a move in terms of the size of the coalition left behind,
    the number of outside blocks before the move and the size of the joined
    block (``0`` for a new block). The exact solver uses it to work on block
    shapes instead of explicit partitions.
    """

    @abc.abstractmethod
    def transition(self, n: int, remaining: int, outside_blocks: int, target_size: int) -> float:
        ...


@dataclass(frozen=True)
class FreeWeighting(ShapeWeighting):
    """Externality-free: the leaver always ends up alone."""

    name: str = "free"
    sampler_kind: str = "free"

    def weight(self, i, coalition, partition):
        return 1.0 if partition.block_of(i) == bit(i) else 0.0

    def transition(self, n, remaining, outside_blocks, target_size):
        return 1.0 if target_size == 0 else 0.0


@dataclass(frozen=True)
class FullWeighting(ShapeWeighting):
    """Full of externalities: uniform over joins; a new block only when forced."""

    name: str = "full"
    sampler_kind: str = "full"

    def weight(self, i, coalition, partition):
        joins = len(prior_partition(i, coalition, partition)) - 1
        alone = partition.block_of(i) == bit(i)
        if joins == 0:
            return 1.0 if alone else 0.0
        return 0.0 if alone else 1.0 / joins

    def transition(self, n, remaining, outside_blocks, target_size):
        if outside_blocks == 0:
            return 1.0 if target_size == 0 else 0.0
        return 1.0 / outside_blocks if target_size else 0.0


@dataclass(frozen=True)
class BolgerWeighting(ShapeWeighting):
    """Every admissible move equally likely."""

    name: str = "bolger"
    sampler_kind: str = "bolger"

    def weight(self, i, coalition, partition):
        return 1.0 / len(prior_partition(i, coalition, partition))

    def transition(self, n, remaining, outside_blocks, target_size):
        return 1.0 / (outside_blocks + 1)


@dataclass(frozen=True)
class MachoStadlerWeighting(ShapeWeighting):
    """Chinese-restaurant weights: join with odds equal to the block size."""

    name: str = "macho-stadler"
    sampler_kind: str = "macho-stadler"

    def weight(self, i, coalition, partition):
        n = partition.n
        size = popcount(partition.block_of(i))
        denom = n - popcount(coalition)
        return (size - 1) / denom if size > 1 else 1.0 / denom

    def transition(self, n, remaining, outside_blocks, target_size):
        return (target_size or 1) / (n - remaining)


@dataclass(frozen=True)
class HuYangTable:
    """Cover counts for sequential uniform partition sampling.

    ``counts[k][c]`` is the number of partitions of ``n`` players that extend
    a fixed partial partition of ``k`` players into ``c`` blocks.
    """

    n: int
    counts: tuple[tuple[int, ...], ...]
    new_block: np.ndarray = field(repr=False, compare=False)

    def D(self, k: int, c: int) -> int:
        return self.counts[k][c]

    def new_block_prob(self, k: int, c: int) -> float:
        return self.counts[k + 1][c + 1] / self.counts[k][c]

    def join_prob(self, k: int, c: int) -> float:
        """Probability of joining one particular existing block."""
        return self.counts[k + 1][c] / self.counts[k][c]


@lru_cache(maxsize=None)
def hu_yang_table(n: int) -> HuYangTable:
    if not 1 <= n <= MAX_PLAYERS:
        raise SizeError(f"hu-yang table supports 1 <= n <= {MAX_PLAYERS} (got n={n})")
    D = [[0] * (n + 2) for _ in range(n + 1)]
    for c in range(n + 1):
        D[n][c] = 1
    for k in range(n - 1, -1, -1):
        for c in range(0 if k == 0 else 1, k + 1):
            D[k][c] = c * D[k + 1][c] + D[k + 1][c + 1]
    new_block = np.zeros((n, n + 1))
    for k in range(n):
        for c in range(0 if k == 0 else 1, k + 1):
            new_block[k, c] = D[k + 1][c + 1] / D[k][c]
    new_block.flags.writeable = False
    return HuYangTable(n, tuple(tuple(row) for row in D), new_block)


def _trace(partition: Partition, outside: int) -> tuple[int, ...]:
    return tuple(sorted((b & outside for b in partition.blocks if b & outside), key=lowbit))


@lru_cache(maxsize=None)
def _cover_counts(n: int) -> Counter:
    full = (1 << n) - 1
    counts: Counter = Counter()
    for p in enumerate_partitions(n):
        for s in range(full + 1):
            counts[(s, _trace(p, full & ~s))] += 1
    return counts


def cover_count(coalition: int, partition: Partition) -> int:
    """Number of partitions ``Q`` with ``Q_[S] == partition``, by enumeration."""
    outside = partition.full & ~coalition
    return _cover_counts(partition.n)[(coalition, _trace(partition, outside))]


@dataclass(frozen=True)
class HuYangWeighting(ShapeWeighting):
    """Weights that make every final partition equally likely."""

    name: str = "hu-yang"
    sampler_kind: str = "hu-yang"

    def weight(self, i, coalition, partition):
        n = partition.n
        table = hu_yang_table(n)
        k = n - popcount(coalition) - 1
        c_before = len(prior_partition(i, coalition, partition)) - 1
        c_after = len(partition) - (1 if coalition else 0)
        return table.D(k + 1, c_after) / table.D(k, c_before)

    def weight_by_counting(self, i: int, coalition: int, partition: Partition) -> float:
        if partition.n > MAX_ENUM_PLAYERS:
            raise SizeError(f"counting route supports n <= {MAX_ENUM_PLAYERS}")
        before = prior_partition(i, coalition, partition)
        return cover_count(coalition, partition) / cover_count(coalition | bit(i), before)

    def transition(self, n, remaining, outside_blocks, target_size):
        table = hu_yang_table(n)
        k = n - remaining - 1
        c_after = outside_blocks + (0 if target_size else 1)
        return table.D(k + 1, c_after) / table.D(k, outside_blocks)


_WEIGHTINGS = {
    "free": FreeWeighting,
    "full": FullWeighting,
    "bolger": BolgerWeighting,
    "macho-stadler": MachoStadlerWeighting,
    "hu-yang": HuYangWeighting,
}
_ALIASES = {"pham-do-norde": "free", "mcquillin": "full"}
WEIGHTING_NAMES = tuple(_WEIGHTINGS)


def get_weighting(name: str) -> AlphaWeighting:
    key = _ALIASES.get(name.lower(), name.lower())
    try:
        return _WEIGHTINGS[key]()
    except KeyError:
        known = ", ".join(list(_WEIGHTINGS) + list(_ALIASES))
        raise ConfigurationError(f"unknown weighting {name!r} (known: {known})") from None


def alpha_free() -> FreeWeighting:
    return FreeWeighting()


def alpha_full() -> FullWeighting:
    return FullWeighting()


def alpha_bolger() -> BolgerWeighting:
    return BolgerWeighting()


def alpha_macho_stadler() -> MachoStadlerWeighting:
    return MachoStadlerWeighting()


def alpha_hu_yang() -> HuYangWeighting:
    return HuYangWeighting()


def all_weightings() -> list[AlphaWeighting]:
    return [cls() for cls in _WEIGHTINGS.values()]


@dataclass
class ValidationReport:
    weighting: str
    n: int
    passed: bool
    checked: dict[str, int]
    failure: str | None = None

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        counts = ", ".join(f"{k}={v}" for k, v in self.checked.items())
        line = f"{self.weighting} n={self.n}: {status} ({counts})"
        return line if self.failure is None else f"{line}\n  {self.failure}"


def _states(n: int):
    for p in enumerate_partitions(n):
        for s in p.blocks + (0,):
            yield s, p


def _generators(n: int) -> list[Permutation]:
    if n == 1:
        return []
    gens = [Permutation((1, 0) + tuple(range(2, n)))]
    if n > 2:
        gens.append(Permutation(tuple((i + 1) % n for i in range(n))))
    return gens


def validate_weighting(alpha: AlphaWeighting, n: int, tol: float = 1e-9) -> ValidationReport:
    """Exhaustively check range, symmetry and normalization of ``alpha``.

    Symmetry is checked against a transposition and the ``n``-cycle; these
    generate every permutation, so invariance under both is invariance under
    all of them.
    """
    if not 1 <= n <= 6:
        raise SizeError(f"validate route supports 1 <= n <= 6 (got n={n})")
    checked = {"range": 0, "symmetry": 0, "normalization": 0}
    gens = _generators(n)

    def fail(msg):
        return ValidationReport(alpha.name, n, False, checked, msg)

    for s, p in _states(n):
        for i in range(n):
            if s & bit(i):
                continue
            w = alpha.weight(i, s, p)
            checked["range"] += 1
            if not (math.isfinite(w) and -tol <= w <= 1 + tol):
                return fail(f"range: alpha_{i + 1}({format_coalition(s)}, {p}) = {w}")
            for g in gens:
                wg = alpha.weight(g(i), g.apply_mask(s), g.apply_partition(p))
                checked["symmetry"] += 1
                if abs(w - wg) > tol:
                    return fail(
                        f"symmetry: alpha_{i + 1}({format_coalition(s)}, {p}) = {w} but "
                        f"permuted by {[x + 1 for x in g.order]} gives {wg}"
                    )
    for p in enumerate_partitions(n):
        for s in p.blocks:
            for i in range(n):
                if not s & bit(i):
                    continue
                rest = s & ~bit(i)
                total = sum(alpha.weight(i, rest, transfer(p, i, t)) for t in transfer_targets(p, s))
                checked["normalization"] += 1
                if abs(total - 1.0) > tol:
                    return fail(
                        f"normalization: weights of player {i + 1} leaving "
                        f"({format_coalition(s)}, {p}) sum to {total}"
                    )
    return ValidationReport(alpha.name, n, True, checked)
