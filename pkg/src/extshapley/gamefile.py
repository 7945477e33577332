"""JSON game files.

Format::

    {"n": 3,
     "values": [{"coalition": [1, 2], "partition": [[1, 2], [3]], "value": 4.0}, ...]}

Players are numbered from 1. Embedded coalitions that are not listed are
worth 0; listing the same one twice is an error.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .core import MAX_PLAYERS, Partition, SizeError, mask_of, players_of
from .games import PartitionFunctionGame, TableGame


class GameFileError(ValueError):
    def __init__(self, message: str, entry: int | None = None):
        self.entry = entry
        super().__init__(message if entry is None else f"entry {entry}: {message}")


def _players(obj, n, entry, what) -> list[int]:
    if not isinstance(obj, list) or not all(isinstance(p, int) and not isinstance(p, bool) for p in obj):
        raise GameFileError(f"{what} must be a list of player numbers", entry)
    for p in obj:
        if not 1 <= p <= n:
            raise GameFileError(f"{what} mentions player {p} outside 1..{n}", entry)
    if len(set(obj)) != len(obj):
        raise GameFileError(f"{what} repeats a player", entry)
    return obj


def parse_game_data(data) -> TableGame:
    if not isinstance(data, dict) or "n" not in data or "values" not in data:
        raise GameFileError('game file must be an object with keys "n" and "values"')
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise GameFileError('"n" must be an integer')
    if not 1 <= n <= MAX_PLAYERS:
        raise SizeError(f"game files support 1 <= n <= {MAX_PLAYERS} (got n={n})")
    if not isinstance(data["values"], list):
        raise GameFileError('"values" must be a list')
    game = TableGame(n)
    full = (1 << n) - 1
    for k, rec in enumerate(data["values"]):
        if not isinstance(rec, dict) or not {"coalition", "partition", "value"} <= rec.keys():
            raise GameFileError('expected keys "coalition", "partition", "value"', k)
        coalition = mask_of(_players(rec["coalition"], n, k, "coalition"))
        raw_blocks = rec["partition"]
        if not isinstance(raw_blocks, list) or not raw_blocks:
            raise GameFileError("partition must be a nonempty list of blocks", k)
        blocks = []
        seen = 0
        for b in raw_blocks:
            mask = mask_of(_players(b, n, k, "partition block"))
            if mask == 0:
                raise GameFileError("partition has an empty block", k)
            if mask & seen:
                raise GameFileError("partition blocks overlap", k)
            seen |= mask
            blocks.append(mask)
        if seen != full:
            missing = players_of(full & ~seen)
            raise GameFileError(f"partition misses players {missing}", k)
        partition = Partition(n, tuple(blocks))
        if coalition == 0 or coalition not in partition:
            raise GameFileError("coalition is not a block of the partition", k)
        value = rec["value"]
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            raise GameFileError("value must be a finite number", k)
        key = (coalition, partition.blocks)
        if key in game.table:
            raise GameFileError("duplicate embedded coalition", k)
        game.table[key] = float(value)
    return game


def parse_game_file(path: str | Path) -> TableGame:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise GameFileError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFileError(f"{path} is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    return parse_game_data(data)


def game_to_data(game: PartitionFunctionGame) -> dict:
    """Serializable form listing every nonzero embedded coalition (``n <= 12``)."""
    table = game.table if isinstance(game, TableGame) else TableGame.from_game(game).table
    values = []
    for (s, blocks), value in table.items():
        if value != 0.0:
            values.append({
                "coalition": players_of(s),
                "partition": [players_of(b) for b in blocks],
                "value": value,
            })
    return {"n": game.n, "values": values}


def write_game_file(game: PartitionFunctionGame, path: str | Path) -> None:
    Path(path).write_text(json.dumps(game_to_data(game), indent=1) + "\n", encoding="utf-8")
