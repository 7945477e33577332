"""Random game families and the timing / error experiments."""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass, field, fields
from typing import Iterable, TextIO

import numpy as np
from scipy.special import ndtri

from .core import ConfigurationError, check_players
from .exact import EXACT_CAP, exact_value
from .games import PartitionFunctionGame
from .montecarlo import (
    ErrorSpec,
    approximate,
    contribution_bounds,
    required_samples,
    theoretical_epsilon,
)
from .weightings import AlphaWeighting

DISTRIBUTIONS = ("normal", "uniform")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SALT_COALITION = 0x5EED_C0A1_1710_0001
_SALT_BLOCK = 0x5EED_B10C_0000_0002
_SALT_VALUE = 0x5EED_7A1E_0000_0003


def splitmix64(x: np.ndarray) -> np.ndarray:
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _salt(seed: int, tag: int) -> np.uint64:
    return splitmix64(np.array([(seed * 0x100000001B3 ^ tag) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]


@dataclass(frozen=True)
class RandomGameSpec:
    distribution: str
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigurationError(
                f"unknown distribution {self.distribution!r} (known: {', '.join(DISTRIBUTIONS)})"
            )
        check_players(self.n)


class RandomGame(PartitionFunctionGame):
    """Game whose values are drawn lazily from a hash of ``(S, P, seed)``.

    ``normal``: ``|S| * X`` with ``X ~ N(1, 0.1)`` redrawn until it lies in
    ``[0.7, 1.3]``. ``uniform``: ``|S| * U(0, 1)``.

    The embedded coalition is keyed by ``hS[S] + sum(hT[T] for T in P)``
    modulo ``2**64`` with two seeded hash tables over all ``2**n`` masks, so
    the key does not depend on block order and nothing of size ``Bell(n)``
    is ever stored.
    """

    def __init__(self, spec: RandomGameSpec):
        super().__init__(spec.n)
        self.spec = spec
        masks = np.arange(1 << spec.n, dtype=np.uint64)
        self._h_coalition = splitmix64(masks ^ _salt(spec.seed, _SALT_COALITION))
        self._h_block = splitmix64(masks ^ _salt(spec.seed, _SALT_BLOCK))
        self._h_block[0] = 0
        self._value_salt = _salt(spec.seed, _SALT_VALUE)
        self._size = np.array([bin(i).count("1") for i in range(1 << spec.n)], dtype=np.float64)

    def _value(self, coalition, partition):
        row = np.array([partition.blocks], dtype=np.int64)
        return float(self.values(np.array([coalition], dtype=np.int64), row)[0])

    def values(self, s, blocks):
        s = np.asarray(s, dtype=np.int64)
        blocks = np.asarray(blocks, dtype=np.int64)
        key = self._h_coalition[s] + self._h_block[blocks].sum(axis=1, dtype=np.uint64)
        h = splitmix64(key ^ self._value_salt)
        if self.spec.distribution == "uniform":
            draw = (h >> np.uint64(11)).astype(np.float64) * 2.0**-53
        else:
            draw = np.empty(len(s))
            pending = np.arange(len(s))
            while pending.size:
                u = ((h[pending] >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
                x = 1.0 + 0.1 * ndtri(u)
                ok = (x >= 0.7) & (x <= 1.3)
                draw[pending[ok]] = x[ok]
                pending = pending[~ok]
                h[pending] = splitmix64(h[pending])
        out = self._size[s] * draw
        out[s == 0] = 0.0
        return out


def make_random_game(spec: RandomGameSpec) -> RandomGame:
    return RandomGame(spec)


@dataclass
class ExperimentRow:
    n: int
    weighting: str
    method: str
    samples: int | None
    seconds: float | None
    max_error: float | None
    theoretical_eps: float | None


CSV_HEADER = [f.name for f in fields(ExperimentRow)]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


@dataclass
class ExperimentResult:
    rows: list[ExperimentRow] = field(default_factory=list)

    def write_csv(self, out: TextIO) -> None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ExperimentResult":
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        rows = []
        for rec in reader:
            def num(key, kind):
                return kind(rec[key]) if rec[key] != "" else None

            rows.append(ExperimentRow(
                int(rec["n"]), rec["weighting"], rec["method"], num("samples", int),
                num("seconds", float), num("max_error", float), num("theoretical_eps", float),
            ))
        return cls(rows)


def _timed(fn, repeats: int, warmup: bool):
    if warmup:
        fn()
    times = []
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, statistics.median(times)


def run_error_experiment(
    n: int,
    weighting: AlphaWeighting,
    schedule: Iterable[int],
    trials: int = 1,
    seed: int = 0,
    distribution: str = "normal",
    beta: float = 0.01,
    workers: int = 1,
) -> ExperimentResult:
    """Observed max error against the exact value for each sample count.

    Trial ``t`` uses the game seeded ``seed + t``; the estimate for sample
    count number ``j`` of that trial uses sampling seed ``seed * 1000 + t * 100 + j``.
    """
    check_players(n, EXACT_CAP, "error experiment")
    lo, hi = contribution_bounds(distribution, n)
    schedule = list(schedule)
    result = ExperimentResult()
    for t in range(trials):
        game = make_random_game(RandomGameSpec(distribution, n, seed + t))
        exact = exact_value(game, weighting)
        for j, m in enumerate(schedule):
            t0 = time.perf_counter()
            est, _ = approximate(game, weighting, m, seed=seed * 1000 + t * 100 + j, workers=workers)
            seconds = time.perf_counter() - t0
            result.rows.append(ExperimentRow(
                n, weighting.name, "approximate", m, seconds,
                float(np.max(np.abs(est - exact))), theoretical_epsilon(m, beta, lo, hi),
            ))
    return result


def run_timing_experiment(
    ns: Iterable[int],
    weighting: AlphaWeighting,
    epsilon: float = 0.1,
    beta: float = 0.01,
    seed: int = 0,
    distribution: str = "normal",
    repeats: int = 3,
    warmup: bool = True,
    max_exact_n: int = EXACT_CAP,
    workers: int = 1,
    stop_after_crossover: bool = False,
) -> ExperimentResult:
    """Wall-clock time of the exact route and of the approximation per ``n``.

    Each cell is the median of ``repeats`` runs after an optional discarded
    warm-up run. The approximation uses the sample count that guarantees
    ``epsilon`` with probability ``1 - beta`` under the family's bounds.
    """
    result = ExperimentResult()
    for n in ns:
        game = make_random_game(RandomGameSpec(distribution, n, seed))
        lo, hi = contribution_bounds(distribution, n)
        m = required_samples(ErrorSpec(epsilon, beta, lo, hi))
        exact = None
        exact_seconds = None
        if n <= max_exact_n:
            exact, exact_seconds = _timed(lambda: exact_value(game, weighting), repeats, warmup)
            result.rows.append(ExperimentRow(n, weighting.name, "exact", None, exact_seconds, 0.0, None))
        est, approx_seconds = _timed(
            lambda: approximate(game, weighting, m, seed=seed, workers=workers)[0], repeats, warmup
        )
        err = float(np.max(np.abs(est - exact))) if exact is not None else None
        result.rows.append(ExperimentRow(
            n, weighting.name, "approximate", m, approx_seconds, err, theoretical_epsilon(m, beta, lo, hi),
        ))
        if stop_after_crossover and exact_seconds is not None and approx_seconds < exact_seconds:
            break
    return result


def crossover_n(result: ExperimentResult) -> int | None:
    """Smallest ``n`` at which the approximation ran faster than the exact route."""
    exact = {r.n: r.seconds for r in result.rows if r.method == "exact"}
    for r in result.rows:
        if r.method == "approximate" and r.n in exact and r.seconds < exact[r.n]:
            return r.n
    return None
