import numpy as np

from extshapley.core import Partition, popcount
from extshapley.exact import ec_index, table_game_from_vector
from extshapley.games import FunctionGame


def random_table_game(n, rng, low=-1.0, high=1.0):
    keys, _ = ec_index(n)
    return table_game_from_vector(n, rng.uniform(low, high, len(keys)))


def no_externality_game(n, char_fn):
    """Game whose value ignores how the outsiders are arranged."""
    return FunctionGame(n, lambda s, p: char_fn(s))


def random_char_fn(n, rng):
    table = rng.uniform(-1.0, 1.0, 1 << n)
    table[0] = 0.0
    return lambda s: float(table[s])


def cardinality_game(n):
    return FunctionGame(n, lambda s, p: float(popcount(s)))


def P(*blocks, n=None):
    return Partition.of(blocks, n)


ACCEPTANCE_LINES: list[str] = []


def report_criterion(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return ok
