"""Players, coalitions, partitions and the operators acting on them.

Coalitions are plain ``int`` bitmasks over 0-indexed players (bit ``i`` set
means player ``i`` is a member). Anything that crosses a user-facing
boundary (constructors named ``of``, ``str``, the game file, the CLI) speaks
1-indexed player numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

MAX_PLAYERS = 20
MAX_ENUM_PLAYERS = 12


class SizeError(ValueError):
    """Raised when a player count exceeds the cap of the requested route."""


class InvalidTransferError(ValueError):
    """Raised for a transfer whose target is not admissible."""


class ConfigurationError(ValueError):
    """Raised for unknown weightings, distributions and similar settings."""


def check_players(n: int, cap: int = MAX_PLAYERS, route: str = "coalition") -> None:
    if not 1 <= n <= cap:
        raise SizeError(f"{route} route supports 1 <= n <= {cap} (got n={n})")


def bit(i: int) -> int:
    return 1 << i


def lowbit(mask: int) -> int:
    return mask & -mask


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def members(mask: int) -> list[int]:
    """0-indexed members of ``mask`` in increasing order."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def mask_of(players: Iterable[int]) -> int:
    """Bitmask of a collection of 1-indexed players."""
    mask = 0
    for p in players:
        if p < 1:
            raise ValueError(f"players are numbered from 1 (got {p})")
        mask |= 1 << (p - 1)
    return mask


def players_of(mask: int) -> list[int]:
    """1-indexed players of ``mask``."""
    return [i + 1 for i in members(mask)]


def format_coalition(mask: int) -> str:
    return "{" + ",".join(str(p) for p in players_of(mask)) + "}"


@dataclass(frozen=True)
class Partition:
    """A set partition of ``n`` players.

    ``blocks`` holds nonempty, pairwise-disjoint masks whose union is the
    full player set. The constructor reorders them canonically (block of the
    smallest player first), so two equal partitions compare and hash equal.
    """

    n: int
    blocks: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(sorted(self.blocks, key=lowbit))
        seen = 0
        for b in blocks:
            if b <= 0:
                raise ValueError("partition blocks must be nonempty")
            if seen & b:
                raise ValueError("partition blocks overlap")
            seen |= b
        if seen != (1 << self.n) - 1:
            raise ValueError(f"blocks do not cover players 1..{self.n}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def of(cls, blocks: Sequence[Iterable[int]], n: int | None = None) -> "Partition":
        """Build from 1-indexed lists, e.g. ``Partition.of([[1, 2], [3]])``."""
        masks = [mask_of(b) for b in blocks]
        if n is None:
            n = max(m.bit_length() for m in masks)
        return cls(n, tuple(masks))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        groups: dict[int, int] = {}
        for i, lab in enumerate(labels):
            groups[int(lab)] = groups.get(int(lab), 0) | (1 << i)
        return cls(len(labels), tuple(groups.values()))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(n, tuple(1 << i for i in range(n)))

    @classmethod
    def grand(cls, n: int) -> "Partition":
        return cls(n, ((1 << n) - 1,))

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    def block_of(self, i: int) -> int:
        b = 1 << i
        for block in self.blocks:
            if block & b:
                return block
        raise ValueError(f"player {i + 1} is not in the partition")

    def labels(self) -> tuple[int, ...]:
        """Restricted growth string of the partition."""
        lab = [0] * self.n
        for k, block in enumerate(self.blocks):
            for i in members(block):
                lab[i] = k
        return tuple(lab)

    def to_lists(self) -> list[list[int]]:
        return [players_of(b) for b in self.blocks]

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self) -> Iterator[int]:
        return iter(self.blocks)

    def __contains__(self, mask: object) -> bool:
        return mask in self.blocks

    def __str__(self) -> str:
        return "{" + ",".join(format_coalition(b) for b in self.blocks) + "}"


class EmbeddedCoalition(NamedTuple):
    coalition: int
    partition: Partition

    def __str__(self) -> str:
        return f"({format_coalition(self.coalition)}, {self.partition})"


@dataclass(frozen=True)
class Permutation:
    """A permutation of ``range(n)``, read both as a map and as an ordering.

    As a map, ``pi(i) == order[i]``; as an ordering, ``order`` lists the
    players in the order they leave the meeting point.
    """

    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(x) for x in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"not a permutation: {order}")
        object.__setattr__(self, "order", order)

    @classmethod
    def of(cls, order: Iterable[int]) -> "Permutation":
        """Build from a 1-indexed ordering such as ``(3, 1, 2)``."""
        return cls(tuple(p - 1 for p in order))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.order)

    def __call__(self, i: int) -> int:
        return self.order[i]

    def position(self, i: int) -> int:
        return self.order.index(i)

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for j, p in enumerate(self.order):
            inv[p] = j
        return Permutation(tuple(inv))

    def apply_mask(self, mask: int) -> int:
        out = 0
        for i in members(mask):
            out |= 1 << self.order[i]
        return out

    def apply_partition(self, partition: Partition) -> Partition:
        return Partition(partition.n, tuple(self.apply_mask(b) for b in partition.blocks))


def bell(n: int) -> int:
    """n-th Bell number from the Bell triangle."""
    if not 0 <= n <= MAX_PLAYERS + 1:
        raise SizeError(f"bell supports 0 <= n <= {MAX_PLAYERS + 1} (got n={n})")
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


@lru_cache(maxsize=None)
def rgs_array(n: int) -> np.ndarray:
    """All restricted growth strings of length ``n`` in lexicographic order.

    Returns a read-only ``(bell(n), n)`` int8 array; row ``r`` labels the
    block of each player in the ``r``-th partition.
    """
    if not 0 <= n <= MAX_ENUM_PLAYERS:
        raise SizeError(f"enumeration supports n <= {MAX_ENUM_PLAYERS} (got n={n})")
    if n == 0:
        out = np.zeros((1, 0), dtype=np.int8)
        out.flags.writeable = False
        return out
    rows = np.zeros((1, 1), dtype=np.int8)
    maxes = np.zeros(1, dtype=np.int8)
    for _ in range(1, n):
        reps = (maxes + 2).astype(np.int64)
        idx = np.repeat(np.arange(len(rows)), reps)
        starts = np.cumsum(reps) - reps
        new_label = (np.arange(idx.size) - np.repeat(starts, reps)).astype(np.int8)
        rows = np.concatenate([rows[idx], new_label[:, None]], axis=1)
        maxes = np.maximum(maxes[idx], new_label)
    rows.flags.writeable = False
    return rows


def enumerate_partitions(n: int) -> list[Partition]:
    """Every partition of ``n`` players, in lexicographic RGS order."""
    if not 1 <= n <= MAX_ENUM_PLAYERS:
        raise SizeError(f"enumeration supports 1 <= n <= {MAX_ENUM_PLAYERS} (got n={n})")
    return [Partition.from_labels(row) for row in rgs_array(n).tolist()]


def transfer(partition: Partition, i: int, target: int) -> Partition:
    """Move player ``i`` into block ``target``; ``target == 0`` opens a new block."""
    b = 1 << i
    if target & b:
        raise InvalidTransferError(f"player {i + 1} already belongs to {format_coalition(target)}")
    if target and target not in partition.blocks:
        raise InvalidTransferError(f"{format_coalition(target)} is not a block of {partition}")
    blocks = []
    for block in partition.blocks:
        if block & b:
            block ^= b
        elif block == target:
            block |= b
        if block:
            blocks.append(block)
    if target == 0:
        blocks.append(b)
    return Partition(partition.n, tuple(blocks))


def restrict_to_new_block(partition: Partition, coalition: int) -> Partition:
    """Pull the members of ``coalition`` out of their blocks into one new block."""
    blocks = [b & ~coalition for b in partition.blocks]
    blocks = [b for b in blocks if b]
    if coalition:
        blocks.append(coalition)
    return Partition(partition.n, tuple(blocks))


def trailing_set(pi: Permutation, i: int) -> int:
    """Players that come after ``i`` in the ordering ``pi``."""
    out = 0
    for p in pi.order[pi.position(i) + 1:]:
        out |= 1 << p
    return out


def embedded_coalitions(n: int) -> list[EmbeddedCoalition]:
    """All embedded coalitions with a nonempty coalition, partition-major."""
    return [EmbeddedCoalition(s, p) for p in enumerate_partitions(n) for s in p.blocks]
