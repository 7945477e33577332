import json
import subprocess
import sys

import numpy as np
import pytest

from extshapley.bench import RandomGameSpec, make_random_game
from extshapley.cli import main
from extshapley.core import Partition, SizeError, embedded_coalitions
from extshapley.exact import classical_shapley_value
from extshapley.gamefile import GameFileError, game_to_data, parse_game_data, parse_game_file, write_game_file

from helpers import random_char_fn, random_table_game


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_single_entry():
    g = parse_game_data({"n": 2, "values": [{"coalition": [1, 2], "partition": [[1, 2]], "value": 1.0}]})
    ecs = embedded_coalitions(2)
    assert [g.value(*e) for e in ecs] == [1.0 if e.coalition == 3 else 0.0 for e in ecs]


@pytest.mark.parametrize("entry,message", [
    ({"coalition": [1], "partition": [[1], [2]], "value": 1}, "misses players [3]"),
    ({"coalition": [1], "partition": [[1, 2], [2, 3]], "value": 1}, "overlap"),
    ({"coalition": [1, 3], "partition": [[1, 2], [3]], "value": 1}, "not a block"),
    ({"coalition": [4], "partition": [[1, 2, 3]], "value": 1}, "outside 1..3"),
    ({"coalition": [1], "partition": [[1], [2, 3]], "value": "x"}, "finite number"),
    ({"coalition": [1], "partition": [[1], [2, 3]]}, "expected keys"),
    ({"coalition": [1, 1], "partition": [[1], [2, 3]], "value": 1}, "repeats"),
])
def test_parse_rejects(entry, message):
    good = {"coalition": [1, 2, 3], "partition": [[1, 2, 3]], "value": 1.0}
    with pytest.raises(GameFileError) as exc:
        parse_game_data({"n": 3, "values": [good, entry]})
    assert exc.value.entry == 1
    assert str(exc.value).startswith("entry 1:")
    assert message in str(exc.value)


def test_parse_rejects_duplicates_and_bad_n():
    rec = {"coalition": [1, 2], "partition": [[1, 2]], "value": 1.0}
    with pytest.raises(GameFileError, match="duplicate"):
        parse_game_data({"n": 2, "values": [rec, dict(rec)]})
    with pytest.raises(SizeError):
        parse_game_data({"n": 25, "values": []})
    with pytest.raises(GameFileError):
        parse_game_data({"n": "3", "values": []})
    with pytest.raises(GameFileError):
        parse_game_data([1, 2])


def test_parse_file_errors(tmp_path):
    with pytest.raises(GameFileError, match="cannot read"):
        parse_game_file(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(GameFileError, match="not valid JSON"):
        parse_game_file(bad)


def test_game_file_round_trip(tmp_path):
    g = random_table_game(4, np.random.default_rng(0))
    path = tmp_path / "g.json"
    write_game_file(g, path)
    back = parse_game_file(path)
    for e in embedded_coalitions(4):
        assert back.value(*e) == g.value(*e)
    assert game_to_data(back) == game_to_data(g)


def no_externality_file(tmp_path, n, seed):
    char = random_char_fn(n, np.random.default_rng(seed))
    values = [
        {"coalition": [i + 1 for i in range(n) if s >> i & 1],
         "partition": [[i + 1 for i in range(n) if b >> i & 1] for b in p.blocks],
         "value": char(s)}
        for s, p in embedded_coalitions(n)
    ]
    return write_json(tmp_path / "g.json", {"n": n, "values": values}), char


def test_exact_command_classical_collapse(tmp_path, capsys):
    path, char = no_externality_file(tmp_path, 4, 3)
    code, out, err = run(["exact", "--game", path, "--weighting", "free"], capsys)
    assert code == 0 and err == ""
    report = json.loads(out)
    assert report["value"] == pytest.approx(classical_shapley_value(char, 4).tolist(), abs=1e-9)
    assert all(r["passed"] for r in report["axioms"].values())


def test_exact_command_csv(tmp_path, capsys):
    path, _ = no_externality_file(tmp_path, 3, 1)
    code, out, _ = run(["exact", "--game", path, "--weighting", "mcquillin", "--output", "csv"], capsys)
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "player,value" and len(lines) == 4


def test_exact_command_random_game(capsys):
    code, out, _ = run(["exact", "--distribution", "normal", "--n", "7", "--seed", "2", "--weighting", "hu-yang"], capsys)
    report = json.loads(out)
    assert code == 0
    assert report["axioms"] is None
    assert len(report["value"]) == 7


def test_approx_command(capsys):
    argv = ["approx", "--distribution", "normal", "--n", "10", "--weighting", "macho-stadler",
            "--epsilon", "0.1", "--beta", "0.01", "--seed", "7"]
    code, out, _ = run(argv, capsys)
    report = json.loads(out)
    assert code == 0
    assert report["samples"] == 21557
    assert report["theoretical_eps"] <= 0.1
    assert len(report["estimate"]) == len(report["std_error"]) == 10
    game = make_random_game(RandomGameSpec("normal", 10, 7))
    assert sum(report["estimate"]) == pytest.approx(game.value((1 << 10) - 1, Partition.grand(10)), abs=1e-9)


def test_approx_matches_exact_small(capsys):
    argv = ["--distribution", "uniform", "--n", "6", "--weighting", "bolger", "--seed", "4"]
    _, out, _ = run(["approx", *argv, "--epsilon", "0.1", "--beta", "0.01"], capsys)
    est = np.array(json.loads(out)["estimate"])
    _, out, _ = run(["exact", *argv], capsys)
    exact = np.array(json.loads(out)["value"])
    assert np.max(np.abs(est - exact)) <= 0.1


def test_approx_file_game_needs_bounds(tmp_path, capsys):
    path, _ = no_externality_file(tmp_path, 3, 0)
    code, _, err = run(["approx", "--game", path, "--weighting", "free", "--epsilon", "0.1", "--beta", "0.01"], capsys)
    assert code == 2 and err.startswith("extshapley: error[usage]:")
    code, out, _ = run(["approx", "--game", path, "--weighting", "free", "--epsilon", "0.1", "--beta", "0.01",
                        "--min-contrib", "-2", "--max-contrib", "2"], capsys)
    assert code == 0 and json.loads(out)["samples"] == 2654
    code, out, _ = run(["approx", "--game", path, "--weighting", "free", "--samples", "50"], capsys)
    assert code == 0 and json.loads(out)["theoretical_eps"] is None


def test_sample_size_command(capsys):
    code, out, _ = run(["sample-size", "--epsilon", "0.1", "--beta", "0.01", "--min-contrib", "0", "--max-contrib", "2"], capsys)
    assert code == 0 and json.loads(out)["samples"] == 664
    code, out, _ = run(["sample-size", "--epsilon", "0.1", "--beta", "0.01", "--distribution", "normal", "--n", "10",
                        "--output", "csv"], capsys)
    assert out.splitlines()[1].endswith(",21557")


def test_validate_command(capsys):
    code, out, _ = run(["validate", "--weighting", "bolger", "--n", "5"], capsys)
    assert code == 0 and json.loads(out)["passed"] is True


def test_bench_command(tmp_path, capsys):
    out_path = tmp_path / "timing.csv"
    code, out, _ = run(["bench", "--weighting", "bolger", "--n-min", "3", "--n-max", "4", "--repeats", "1",
                        "--out", str(out_path)], capsys)
    assert code == 0 and out == ""
    assert out_path.read_text().startswith("n,weighting,method,samples,seconds,max_error,theoretical_eps\n")
    code, out, _ = run(["bench", "--experiment", "error", "--weighting", "free", "--n", "4",
                        "--schedule", "100,1000", "--trials", "2"], capsys)
    assert code == 0 and len(out.splitlines()) == 5


@pytest.mark.parametrize("argv,code,tag", [
    (["exact", "--distribution", "normal", "--n", "4", "--weighting", "nope"], 2, "usage"),
    (["exact", "--distribution", "normal", "--n", "13", "--weighting", "free"], 4, "size"),
    (["exact", "--distribution", "normal", "--weighting", "free"], 2, "usage"),
    (["approx", "--distribution", "normal", "--n", "4", "--weighting", "free"], 2, "usage"),
    (["approx", "--distribution", "normal", "--n", "4", "--weighting", "free", "--samples", "5", "--epsilon", "1"], 2, "usage"),
    (["approx", "--distribution", "normal", "--n", "4", "--weighting", "free", "--epsilon", "0.1"], 2, "usage"),
    (["approx", "--distribution", "normal", "--n", "21", "--weighting", "free", "--samples", "5"], 4, "size"),
    (["sample-size", "--epsilon", "-1", "--beta", "0.01", "--min-contrib", "0", "--max-contrib", "1"], 2, "usage"),
    (["validate", "--weighting", "free", "--n", "7"], 4, "size"),
    (["bench", "--experiment", "error", "--weighting", "free", "--n", "13"], 4, "size"),
    (["frobnicate"], 2, "usage"),
    ([], 2, "usage"),
])
def test_failure_paths(argv, code, tag, capsys):
    status, out, err = run(argv, capsys)
    assert status == code
    assert out == ""
    assert err.count("\n") == 1
    assert err.startswith(f"extshapley: error[{tag}]: ")
    if tag == "size":
        assert "<=" in err


def test_parse_failure_exit_code(tmp_path, capsys):
    path = write_json(tmp_path / "g.json", {"n": 3, "values": [{"coalition": [1], "partition": [[1], [2]], "value": 1}]})
    status, _, err = run(["exact", "--game", path, "--weighting", "free"], capsys)
    assert status == 3
    assert err.startswith("extshapley: error[parse]: entry 0:")


@pytest.mark.parametrize("argv", [
    ["approx", "--distribution", "uniform", "--n", "8", "--weighting", "hu-yang", "--samples", "9000", "--seed", "3"],
    ["approx", "--distribution", "normal", "--n", "8", "--weighting", "bolger", "--samples", "9000", "--seed", "3",
     "--workers", "2", "--output", "csv"],
    ["exact", "--distribution", "normal", "--n", "5", "--weighting", "macho-stadler", "--seed", "1"],
])
def test_repeat_runs_identical(argv, capsys):
    first = run(argv, capsys)
    second = run(argv, capsys)
    assert first == second and first[0] == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "extshapley", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("extshapley ")
