import json

import pytest

from stochgames import parse_game
from stochgames.cli import main
from stochgames.gen import GenParams, generate_arena, random_params
from stochgames.errors import ValidationError

from instances import g1_doc, cycle_arena
from stochgames.model import serialize_game


def test_gen_deterministic_bytes(tmp_path):
    args = [
        "gen", "--states", "4", "--eve-actions", "2", "--adam-actions", "2",
        "--density", "0.7", "--eve-blocks", "2", "--adam-blocks", "2",
        "--final", "1", "--seed", "1",
    ]
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_gen_output_parses():
    for draw in range(1000):
        arena = generate_arena(random_params(draw))
        assert parse_game(serialize_game(arena)) == arena


def test_gen_blind_partition():
    params = GenParams(
        state_count=3, eve_action_count=2, adam_action_count=1,
        transition_density=1.0, eve_blocks=1, adam_blocks=3, final_count=1, seed=0,
    )
    arena = generate_arena(params)
    assert len(arena.eve_obs) == 1 and len(arena.eve_obs[0]) == 3


def test_gen_param_validation():
    with pytest.raises(ValidationError):
        GenParams(0, 1, 1, 1.0, 1, 1, 0, 0)
    with pytest.raises(ValidationError):
        GenParams(2, 1, 1, 0.0, 1, 1, 0, 0)
    with pytest.raises(ValidationError):
        GenParams(2, 1, 1, 1.0, 3, 1, 0, 0)


def test_cli_solve_g1(tmp_path, capsys):
    game = tmp_path / "g1.json"
    game.write_text(g1_doc())
    out = tmp_path / "report.json"
    code = main(["solve", "--game", str(game), "--objective", "reach", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["verdict"] == "yes"
    assert report["objective"] == "reach"
    assert report["witness"]["owner"] == "eve"
    assert report["candidates_checked"] == 7
    assert report["config"]["objective"] == "reach"
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["command"] == "solve" and record["outcome"] == "verdict=yes"


def test_cli_solve_malformed_exit_2(tmp_path):
    game = tmp_path / "bad.json"
    game.write_text("{broken")
    assert main(["solve", "--game", str(game), "--objective", "reach"]) == 2


def test_cli_solve_missing_file_exit_2(tmp_path):
    assert main(["solve", "--game", str(tmp_path / "none.json"), "--objective", "reach"]) == 2


def test_cli_solve_cap_exit_3(tmp_path):
    game = tmp_path / "g1.json"
    game.write_text(g1_doc())
    out = tmp_path / "partial.json"
    code = main([
        "solve", "--game", str(game), "--objective", "reach",
        "--max-candidates", "1", "--out", str(out),
    ])
    assert code == 3
    partial = json.loads(out.read_text())
    assert partial["verdict"] is None
    assert partial["candidates_checked"] == 1
    assert "error" in partial


def test_cli_eval_g1(tmp_path, capsys):
    game = tmp_path / "g1.json"
    game.write_text(g1_doc())
    eve = tmp_path / "eve.json"
    eve.write_text(json.dumps({
        "owner": "eve", "memory": ["m"], "init": "m",
        "move": {"m": {"a": "1/2", "b": "1/2"}},
        "update": {"m": {"0": "m", "1": "m"}},
    }))
    adam = tmp_path / "adam.json"
    adam.write_text(json.dumps({
        "owner": "adam", "memory": ["m"], "init": "m",
        "move": {"m": {"x": "1/1"}},
        "update": {"m": {"0": "m", "1": "m"}},
    }))
    code = main(["eval", "--game", str(game), "--eve", str(eve), "--adam", str(adam), "--objective", "reach"])
    assert code == 0
    out = capsys.readouterr().out.strip()
    assert json.loads(out) == {"probability": "1/1", "method": "exact"}


def test_cli_simulate_reproducible(tmp_path, capsys):
    game = tmp_path / "g1.json"
    game.write_text(g1_doc())
    eve = tmp_path / "eve.json"
    eve.write_text(json.dumps({
        "owner": "eve", "memory": ["m"], "init": "m",
        "move": {"m": {"a": "1/2", "b": "1/2"}},
        "update": {"m": {"0": "m", "1": "m"}},
    }))
    adam = tmp_path / "adam.json"
    adam.write_text(json.dumps({
        "owner": "adam", "memory": ["m"], "init": "m",
        "move": {"m": {"x": 1}},
        "update": {"m": {"0": "m", "1": "m"}},
    }))
    args = [
        "simulate", "--game", str(game), "--eve", str(eve), "--adam", str(adam),
        "--objective", "reach", "--samples", "300", "--horizon", "40", "--seed", "9",
    ]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    second = capsys.readouterr().out
    assert first == second
    record = json.loads(first)
    assert record["generator"] == "python-random-mt19937"
    assert record["samples"] == 300


def test_cli_knowledge_dump(tmp_path, capsys):
    game = tmp_path / "g1.json"
    game.write_text(g1_doc())
    out = tmp_path / "ka.json"
    code = main(["knowledge", "--game", str(game), "--dump", "--out", str(out)])
    assert code == 0
    dumped = parse_game(out.read_text())
    # perfect information: every knowledge is a singleton
    assert all("{" + name.split("|")[0] + "}" == name.split("|")[1] for name in dumped.states)
    err = capsys.readouterr().err
    assert "census: knowledge_states=" in err


def test_cli_knowledge_census_matches_module(tmp_path, capsys):
    from stochgames import build_knowledge_arena

    arena = cycle_arena(3, 2)
    game = tmp_path / "cycle.json"
    game.write_text(serialize_game(arena))
    assert main(["knowledge", "--game", str(game)]) == 0
    err = capsys.readouterr().err
    census_line = next(line for line in err.splitlines() if line.startswith("census:"))
    ka = build_knowledge_arena(arena)
    kstates, knowledges, edges = ka.census
    assert census_line == f"census: knowledge_states={kstates} knowledges={knowledges} edges={edges}"
