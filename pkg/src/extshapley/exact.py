"""Exact extended Shapley values.

Three independent routes are provided:

* :func:`exact_value_eq1` sums over every (ordering, partition) pair, with
  the formation probability chained from the weights. Only for tiny ``n``.
* :func:`exact_value` collects the transfers out of each embedded coalition.
  For :class:`ShapeWeighting` it works on block shapes and is vectorized up
  to ``n = 12``; other weightings go through a dynamic program over states.
* :func:`basis_value` solves the simple games ``c * e^(S, P)`` by reverse
  induction on ``|S|``, using only the axioms.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .core import (
    EmbeddedCoalition,
    InvalidTransferError,
    Partition,
    Permutation,
    SizeError,
    bit,
    check_players,
    embedded_coalitions,
    enumerate_partitions,
    format_coalition,
    lowbit,
    members,
    popcount,
    restrict_to_new_block,
    rgs_array,
    transfer,
)
from .games import PartitionFunctionGame, TableGame, permute_game
from .weightings import AlphaWeighting, ShapeWeighting, transfer_targets

EXACT_CAP = 12
EQ1_CAP = 8
GENERIC_CAP = 8
BASIS_CAP = 8


@lru_cache(maxsize=None)
def ec_index(n: int) -> tuple[list[tuple[int, tuple[int, ...]]], dict]:
    """Keys ``(S, blocks)`` of all embedded coalitions and their positions."""
    keys = [(ec.coalition, ec.partition.blocks) for ec in embedded_coalitions(n)]
    return keys, {k: j for j, k in enumerate(keys)}


@lru_cache(maxsize=None)
def _ec_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    keys, _ = ec_index(n)
    s = np.array([k[0] for k in keys], dtype=np.int64)
    blocks = np.zeros((len(keys), n), dtype=np.int64)
    for r, (_, bl) in enumerate(keys):
        blocks[r, : len(bl)] = bl
    return s, blocks


def game_vector(game: PartitionFunctionGame) -> np.ndarray:
    """Values of ``game`` on every embedded coalition, in :func:`ec_index` order."""
    check_players(game.n, EXACT_CAP, "embedded-coalition table")
    s, blocks = _ec_arrays(game.n)
    return np.asarray(game.values(s, blocks), dtype=float)


def table_game_from_vector(n: int, vec: np.ndarray) -> TableGame:
    keys, _ = ec_index(n)
    game = TableGame(n)
    game.table = {k: float(x) for k, x in zip(keys, vec) if x != 0.0}
    return game


def elementary_mc(game: PartitionFunctionGame, i: int, coalition: int, partition: Partition, target: int) -> float:
    """Loss ``v(S, P) - v(S - i, tau_i^T(P))`` when ``i`` moves to ``target``."""
    if not coalition & bit(i) or coalition not in partition:
        raise InvalidTransferError(f"player {i + 1} is not in {format_coalition(coalition)} of {partition}")
    if target not in transfer_targets(partition, coalition):
        raise InvalidTransferError(f"{format_coalition(target)} is not an admissible target")
    rest = coalition & ~bit(i)
    return game.value(coalition, partition) - game.value(rest, transfer(partition, i, target))


def mc_alpha(game: PartitionFunctionGame, alpha: AlphaWeighting, i: int, coalition: int, partition: Partition) -> float:
    """Weighted marginal contribution of ``i`` to ``(coalition, partition)``."""
    rest = coalition & ~bit(i)
    here = game.value(coalition, partition)
    total = 0.0
    for t in transfer_targets(partition, coalition):
        after = transfer(partition, i, t)
        w = alpha.weight(i, rest, after)
        if w:
            total += w * (here - game.value(rest, after))
    return total


def formation_probability(alpha: AlphaWeighting, pi: Permutation, partition: Partition) -> float:
    """Probability that ``partition`` forms when players leave in order ``pi``."""
    n = pi.n
    prob = 1.0
    rest = (1 << n) - 1
    for i in pi.order:
        rest &= ~bit(i)
        prob *= alpha.weight(i, rest, restrict_to_new_block(partition, rest))
        if prob == 0.0:
            break
    return prob


@lru_cache(maxsize=32)
def eq1_operator(alpha: AlphaWeighting, n: int) -> np.ndarray:
    """Matrix ``M`` with ``phi = M @ game_vector(v)``, built term by term."""
    check_players(n, EQ1_CAP, "permutation-sum")
    _, idx = ec_index(n)
    parts = enumerate_partitions(n)
    # extended precision keeps the many small additions from drifting
    M = np.zeros((n, len(idx)), dtype=np.longdouble)
    restricted: dict[tuple[Partition, int], Partition] = {}

    def restrict(p, s):
        key = (p, s)
        if key not in restricted:
            restricted[key] = restrict_to_new_block(p, s)
        return restricted[key]

    for order in itertools.permutations(range(n)):
        trailing = [0] * n
        acc = 0
        for j in range(n - 1, -1, -1):
            trailing[j] = acc
            acc |= bit(order[j])
        for p in parts:
            pr = 1.0
            for j, i in enumerate(order):
                pr *= alpha.weight(i, trailing[j], restrict(p, trailing[j]))
                if pr == 0.0:
                    break
            if pr == 0.0:
                continue
            for j, i in enumerate(order):
                c = trailing[j]
                upper = c | bit(i)
                M[i, idx[(upper, restrict(p, upper).blocks)]] += pr
                if c:
                    M[i, idx[(c, restrict(p, c).blocks)]] -= pr
    M = (M / math.factorial(n)).astype(np.float64)
    M.flags.writeable = False
    return M


def exact_value_eq1(game: PartitionFunctionGame, alpha: AlphaWeighting) -> np.ndarray:
    """Reference value by brute force over orderings and partitions (``n <= 8``)."""
    check_players(game.n, EQ1_CAP, "permutation-sum")
    return eq1_operator(alpha, game.n) @ game_vector(game)


def _integer_partitions(k: int) -> list[tuple[int, ...]]:
    out = []

    def rec(left, cap, acc):
        if left == 0:
            out.append(tuple(acc))
            return
        for part in range(min(left, cap), 0, -1):
            rec(left - part, part, acc + [part])

    rec(k, k, [])
    return out


def _shrink(shape: tuple[int, ...], size: int) -> tuple[int, ...]:
    parts = list(shape)
    parts.remove(size)
    if size > 1:
        parts.append(size - 1)
    return tuple(sorted(parts, reverse=True))


@lru_cache(maxsize=32)
def _shape_flow(alpha: ShapeWeighting, n: int) -> dict[tuple[int, ...], float]:
    """Sum over leaving orders of the outsiders of the chance their shape forms."""
    G: dict[tuple[int, ...], float] = {(): 1.0}
    for k in range(1, n + 1):
        for shape in _integer_partitions(k):
            total = 0.0
            for size in set(shape):
                prev = _shrink(shape, size)
                w = alpha.transition(n, n - k, len(prev), size - 1)
                if w:
                    total += shape.count(size) * size * G[prev] * w
            G[shape] = total
    return G


@lru_cache(maxsize=64)
def _shape_tables(alpha: ShapeWeighting, n: int, k: int):
    """Per-row coefficients for all partitions of ``k`` outsiders.

    Returns ``(rgs, inside, outside)``: RGS rows that carry any weight, the
    coefficient of ``v`` for each member of the coalition, and the
    coefficient for the outsider at each RGS position.
    """
    G = _shape_flow(alpha, n)
    nf = math.factorial(n)
    rgs = rgs_array(k)
    rows = rgs.shape[0]
    counts = np.zeros((rows, k + 1), dtype=np.int64)
    ar = np.arange(rows)
    for p in range(k):
        np.add.at(counts, (ar, rgs[:, p]), 1)
    sorted_counts = -np.sort(-counts, axis=1)
    uniq, inverse = np.unique(sorted_counts, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    a_tab = np.zeros(len(uniq))
    b_tab = np.zeros((len(uniq), k + 1))
    for u, row in enumerate(uniq):
        shape = tuple(int(x) for x in row if x)
        a_tab[u] = math.factorial(n - k - 1) / nf * G[shape]
        for size in set(shape):
            prev = _shrink(shape, size)
            w = alpha.transition(n, n - k, len(prev), size - 1)
            b_tab[u, size] = -math.factorial(n - k) / nf * G[prev] * w
    inside = a_tab[inverse]
    sizes = counts[ar[:, None], rgs.astype(np.int64)]
    outside = b_tab[inverse[:, None], sizes]
    active = (inside != 0.0) | (outside != 0.0).any(axis=1)
    return rgs[active], inside[active], outside[active]


def _exact_shape(game: PartitionFunctionGame, alpha: ShapeWeighting) -> np.ndarray:
    n = game.n
    full = (1 << n) - 1
    phi = np.zeros(n)
    for s in range(1, full + 1):
        outsiders = members(full & ~s)
        k = len(outsiders)
        rgs, inside, outside = _shape_tables(alpha, n, k)
        rows = rgs.shape[0]
        if rows == 0:
            continue
        blocks = np.zeros((rows, k + 1), dtype=np.int64)
        blocks[:, k] = s
        ar = np.arange(rows)
        for p, player in enumerate(outsiders):
            blocks[ar, rgs[:, p]] |= 1 << player
        vals = game.values(np.full(rows, s, dtype=np.int64), blocks)
        phi[members(s)] += inside @ vals
        if k:
            phi[outsiders] += vals @ outside
    return phi


@lru_cache(maxsize=32)
def _generic_operator(alpha: AlphaWeighting, n: int) -> np.ndarray:
    """Dynamic program over states ``(meeting set, outside partition)``."""
    _, idx = ec_index(n)
    W = np.zeros((n, len(idx)))
    full = (1 << n) - 1
    level: dict[tuple[int, tuple[int, ...]], float] = {(full, ()): 1.0}
    for _ in range(n):
        nxt: dict[tuple[int, tuple[int, ...]], float] = defaultdict(float)
        for (c, outside), flow in level.items():
            share = flow / popcount(c)
            here = Partition(n, outside + (c,))
            col = idx[(c, here.blocks)]
            for i in members(c):
                W[i, col] += share
            for j in members(c):
                rest = c & ~bit(j)
                for t in outside + (0,):
                    if t:
                        moved = tuple(b | bit(j) if b == t else b for b in outside)
                    else:
                        moved = tuple(sorted(outside + (bit(j),), key=lowbit))
                    after = Partition(n, moved + ((rest,) if rest else ()))
                    w = alpha.weight(j, rest, after)
                    if not w:
                        continue
                    nxt[(rest, moved)] += share * w
                    if rest:
                        W[j, idx[(rest, after.blocks)]] -= share * w
        level = nxt
    W.flags.writeable = False
    return W


def exact_value(game: PartitionFunctionGame, alpha: AlphaWeighting) -> np.ndarray:
    """Exact value of ``game`` under ``alpha``.

    Shape-based weightings run up to ``n = 12``; any other weighting up to
    ``n = 8``.
    """
    n = game.n
    if isinstance(alpha, ShapeWeighting):
        check_players(n, EXACT_CAP, "exact")
        return _exact_shape(game, alpha)
    check_players(n, GENERIC_CAP, "exact (custom weighting)")
    return _generic_operator(alpha, n) @ game_vector(game)


@lru_cache(maxsize=32)
def basis_operator(alpha: AlphaWeighting, n: int) -> np.ndarray:
    """Column ``j`` is the value of the simple game on the ``j``-th embedded coalition."""
    check_players(n, BASIS_CAP, "basis recursion")
    keys, idx = ec_index(n)
    full = (1 << n) - 1
    U = np.zeros((n, len(keys)))
    for col in sorted(range(len(keys)), key=lambda j: -popcount(keys[j][0])):
        s, blocks = keys[col]
        if s == full:
            U[:, col] = 1.0 / n
            continue
        p = Partition(n, blocks)
        joint = 0.0
        for j in members(full & ~s):
            w = alpha.weight(j, s, p)
            if not w:
                continue
            up = transfer(p, j, s)
            part = w * U[j, idx[(s | bit(j), up.blocks)]]
            U[j, col] = -part
            joint += part
        U[members(s), col] = joint / popcount(s)
    U.flags.writeable = False
    return U


def basis_value(c: float, anchor: EmbeddedCoalition, alpha: AlphaWeighting) -> np.ndarray:
    """Value of the simple game worth ``c`` at ``anchor`` and 0 elsewhere."""
    s, p = anchor
    if s == 0 or s not in p:
        raise ValueError(f"{format_coalition(s)} is not a block of {p}")
    _, idx = ec_index(p.n)
    return c * basis_operator(alpha, p.n)[:, idx[(s, p.blocks)]]


def basis_decomposition_value(game: PartitionFunctionGame, alpha: AlphaWeighting) -> np.ndarray:
    return basis_operator(alpha, game.n) @ game_vector(game)


def classical_shapley_value(char_fn: Callable[[int], float], n: int) -> np.ndarray:
    """Plain Shapley value of a characteristic function, averaged over all orders."""
    phi = np.zeros(n)
    for order in itertools.permutations(range(n)):
        prev = 0.0
        coalition = 0
        for i in order:
            coalition |= bit(i)
            cur = char_fn(coalition)
            phi[i] += cur - prev
            prev = cur
    return phi / math.factorial(n)


@dataclass
class AxiomResult:
    name: str
    passed: bool
    deviation: float
    checked: int
    detail: str = ""


@dataclass
class AxiomReport:
    results: list[AxiomResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def as_dict(self) -> dict:
        return {
            r.name: {"passed": bool(r.passed), "max_deviation": float(r.deviation), "checked": int(r.checked)}
            for r in self.results
        }

    def __str__(self) -> str:
        lines = []
        for r in self.results:
            mark = "pass" if r.passed else "FAIL"
            line = f"{r.name:<12} {mark}  max deviation {r.deviation:.2e} over {r.checked} checks"
            lines.append(line + (f"  ({r.detail})" if r.detail else ""))
        return "\n".join(lines)


def _is_null_player(game, alpha, i, tol):
    for ec in embedded_coalitions(game.n):
        if ec.coalition & bit(i) and abs(mc_alpha(game, alpha, i, *ec)) > tol:
            return False
    return True


def check_axioms(
    game: PartitionFunctionGame,
    alpha: AlphaWeighting,
    value_fn: Callable[[PartitionFunctionGame], np.ndarray] | None = None,
    pairs: int = 50,
    null_games: int = 20,
    seed: int = 0,
    tol: float = 1e-9,
) -> AxiomReport:
    """Check Efficiency, Symmetry, Additivity and Null-Player on ``game``.

    Additivity pairs ``game`` with random table games; Null-Player uses
    ``game`` when it has a null player and, in any case, the two-point games
    ``c * (alpha_i(S, P) e^(S + i, tau_i^S(P)) + e^(S, P))`` for random
    ``(S, P)`` and ``i`` outside ``S``.
    """
    n = game.n
    check_players(n, 6, "axiom check")
    if value_fn is None:
        def value_fn(g):
            return exact_value(g, alpha)
    rng = np.random.default_rng(seed)
    keys, idx = ec_index(n)
    full = (1 << n) - 1
    report = AxiomReport()
    phi = np.asarray(value_fn(game), dtype=float)

    grand = game.value(full, Partition.grand(n))
    dev = abs(phi.sum() - grand)
    report.results.append(AxiomResult("efficiency", dev <= tol, dev, 1))

    dev = 0.0
    count = 0
    for order in itertools.permutations(range(n)):
        pi = Permutation(order)
        lhs = np.asarray(value_fn(permute_game(game, pi)))
        dev = max(dev, float(np.max(np.abs(lhs - phi[list(order)]))))
        count += 1
    report.results.append(AxiomResult("symmetry", dev <= tol, dev, count))

    dev = 0.0
    for _ in range(pairs):
        other = table_game_from_vector(n, rng.uniform(-1.0, 1.0, len(keys)))
        both = table_game_from_vector(n, game_vector(game) + game_vector(other))
        lhs = np.asarray(value_fn(both))
        rhs = phi + np.asarray(value_fn(other))
        dev = max(dev, float(np.max(np.abs(lhs - rhs))))
    report.results.append(AxiomResult("additivity", dev <= tol, dev, pairs))

    dev = 0.0
    count = 0
    premise_failures = 0
    for i in range(n):
        if _is_null_player(game, alpha, i, tol):
            dev = max(dev, abs(phi[i]))
            count += 1
    candidates = [k for k in keys if k[0] != full]
    for _ in range(null_games if n > 1 else 0):
        s, blocks = candidates[rng.integers(len(candidates))]
        p = Partition(n, blocks)
        i = int(rng.choice(members(full & ~s)))
        c = float(rng.uniform(0.5, 2.0))
        tilde = TableGame(n)
        tilde[s, p] = c
        up = transfer(p, i, s)
        tilde[s | bit(i), up] = c * alpha.weight(i, s, p)
        if not _is_null_player(tilde, alpha, i, tol):
            premise_failures += 1
            continue
        dev = max(dev, abs(float(value_fn(tilde)[i])))
        count += 1
    ok = dev <= tol and premise_failures == 0
    detail = f"{premise_failures} constructed games were not null-player games" if premise_failures else ""
    report.results.append(AxiomResult("null-player", ok, dev, count, detail))
    return report
