"""Partition-function game representations.

Every game answers scalar queries ``v.value(S, P)`` and batched queries
``v.values(s, blocks)``. In the batched form ``s`` is an int64 vector of
coalition masks and ``blocks`` an int64 matrix whose row ``r`` lists the
blocks of the partition containing ``s[r]`` (any order, zero masks ignored).
"""

from __future__ import annotations

import abc
from typing import Callable, Mapping

import numpy as np

from .core import Partition, Permutation, check_players, format_coalition


def _row_partition(n: int, row) -> Partition:
    return Partition(n, tuple(int(b) for b in row if b))


class PartitionFunctionGame(abc.ABC):
    """Base class for games ``v: EC -> R``; ``v(emptyset, P)`` is always 0."""

    def __init__(self, n: int):
        check_players(n)
        self.n = n

    @abc.abstractmethod
    def _value(self, coalition: int, partition: Partition) -> float:
        """Value of a nonempty embedded coalition."""

    def value(self, coalition: int, partition: Partition) -> float:
        if coalition == 0:
            return 0.0
        return float(self._value(coalition, partition))

    __call__ = value

    def values(self, s: np.ndarray, blocks: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.int64)
        blocks = np.asarray(blocks, dtype=np.int64)
        out = np.zeros(s.shape[0])
        for r in np.flatnonzero(s):
            out[r] = self._value(int(s[r]), _row_partition(self.n, blocks[r]))
        return out

    def __add__(self, other: "PartitionFunctionGame") -> "CombinedGame":
        return CombinedGame([(1.0, self), (1.0, other)])

    def __mul__(self, c: float) -> "CombinedGame":
        return CombinedGame([(float(c), self)])

    __rmul__ = __mul__


class TableGame(PartitionFunctionGame):
    """Explicit table keyed by ``(coalition mask, canonical block tuple)``.

    Missing entries are worth 0.
    """

    def __init__(self, n: int, table: Mapping[tuple[int, tuple[int, ...]], float] | None = None):
        super().__init__(n)
        self.table: dict[tuple[int, tuple[int, ...]], float] = {}
        for (s, blocks), value in (table or {}).items():
            self[s, Partition(n, blocks)] = value

    def __setitem__(self, key: tuple[int, Partition], value: float) -> None:
        s, p = key
        if s == 0 or s not in p.blocks:
            raise ValueError(f"{format_coalition(s)} is not a block of {p}")
        self.table[(s, p.blocks)] = float(value)

    def _value(self, coalition, partition):
        return self.table.get((coalition, partition.blocks), 0.0)

    @classmethod
    def from_game(cls, game: PartitionFunctionGame) -> "TableGame":
        from .exact import ec_index, game_vector

        keys, _ = ec_index(game.n)
        vec = game_vector(game)
        out = cls(game.n)
        out.table = {k: float(x) for k, x in zip(keys, vec) if x != 0.0}
        return out

    def __add__(self, other):
        if isinstance(other, TableGame) and other.n == self.n:
            out = TableGame(self.n)
            out.table = dict(self.table)
            for k, x in other.table.items():
                out.table[k] = out.table.get(k, 0.0) + x
            return out
        return super().__add__(other)

    def __mul__(self, c):
        out = TableGame(self.n)
        out.table = {k: float(c) * x for k, x in self.table.items()}
        return out

    __rmul__ = __mul__


class FunctionGame(PartitionFunctionGame):
    """Game backed by a Python callable ``fn(coalition_mask, partition)``."""

    def __init__(self, n: int, fn: Callable[[int, Partition], float]):
        super().__init__(n)
        self.fn = fn

    def _value(self, coalition, partition):
        return self.fn(coalition, partition)


class CombinedGame(PartitionFunctionGame):
    """Linear combination ``sum c_k * v_k``."""

    def __init__(self, terms: list[tuple[float, PartitionFunctionGame]]):
        ns = {g.n for _, g in terms}
        if len(ns) != 1:
            raise ValueError("combined games must share the player count")
        super().__init__(ns.pop())
        self.terms = terms

    def _value(self, coalition, partition):
        return sum(c * g.value(coalition, partition) for c, g in self.terms)

    def values(self, s, blocks):
        out = np.zeros(len(s))
        for c, g in self.terms:
            out += c * g.values(s, blocks)
        return out

    def __add__(self, other):
        extra = other.terms if isinstance(other, CombinedGame) else [(1.0, other)]
        return CombinedGame(self.terms + extra)

    def __mul__(self, c):
        return CombinedGame([(float(c) * k, g) for k, g in self.terms])

    __rmul__ = __mul__


def _permute_masks(masks: np.ndarray, order: tuple[int, ...]) -> np.ndarray:
    out = np.zeros_like(masks)
    for i, p in enumerate(order):
        out |= ((masks >> i) & 1) << p
    return out


class PermutedGame(PartitionFunctionGame):
    """``pi(v)(S, P) = v(pi(S), pi(P))``."""

    def __init__(self, game: PartitionFunctionGame, pi: Permutation):
        if pi.n != game.n:
            raise ValueError("permutation and game disagree on the player count")
        super().__init__(game.n)
        self.game = game
        self.pi = pi

    def _value(self, coalition, partition):
        return self.game.value(self.pi.apply_mask(coalition), self.pi.apply_partition(partition))

    def values(self, s, blocks):
        s = np.asarray(s, dtype=np.int64)
        blocks = np.asarray(blocks, dtype=np.int64)
        order = self.pi.order
        return self.game.values(_permute_masks(s, order), _permute_masks(blocks, order))


def permute_game(game: PartitionFunctionGame, pi: Permutation) -> PermutedGame:
    return PermutedGame(game, pi)
