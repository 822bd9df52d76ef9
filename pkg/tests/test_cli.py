import json

import pytest

from cyberdef_sim.cli import EXIT_CONFIG, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main


def run(*argv):
    return main([str(a) for a in argv])


def test_gen_is_byte_identical(tmp_path):
    assert run("gen", "--seed", 42, "--out", tmp_path / "a") == EXIT_OK
    assert run("gen", "--seed", 42, "--out", tmp_path / "b") == EXIT_OK
    for name in ("topology.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert run("gen", "--seed", 43, "--out", tmp_path / "c") == EXIT_OK
    assert (tmp_path / "c" / "topology.json").read_bytes() != (tmp_path / "a" / "topology.json").read_bytes()


def test_eval_header_and_manifest(tmp_path):
    assert run("eval", "--episodes", 5, "--policy", "random", "--out", tmp_path) == EXIT_OK
    lines = (tmp_path / "stats.csv").read_text().splitlines()
    assert lines[0] == "episode,return"
    assert len(lines) == 6
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "eval"
    assert manifest["options"]["seed"] == 0
    assert len(manifest["episode_seeds"]) == 5
    assert set(manifest["files"]) == {"stats.csv"}


def test_seed_env_var_sets_default_only(tmp_path, monkeypatch):
    monkeypatch.setenv("CYBERDEF_SIM_SEED", "9")
    run("eval", "--episodes", 2, "--policy", "random", "--out", tmp_path / "env")
    run("eval", "--episodes", 2, "--policy", "random", "--seed", 9, "--out", tmp_path / "flag")
    run("eval", "--episodes", 2, "--policy", "random", "--seed", 0, "--out", tmp_path / "zero")
    env = (tmp_path / "env" / "stats.csv").read_text()
    assert env == (tmp_path / "flag" / "stats.csv").read_text()
    assert env != (tmp_path / "zero" / "stats.csv").read_text()


def test_train_rerun_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run("train", "--episodes", 20, "--seed", 3, "--out", tmp_path / d) == EXIT_OK
    for name in ("curve.csv", "qtable.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "curve.csv").read_text().splitlines()[0] == "episode,return"


def test_eval_saved_qtable(tmp_path):
    run("train", "--episodes", 10, "--out", tmp_path / "t")
    assert run("eval", "--episodes", 3, "--qtable", tmp_path / "t" / "qtable.json", "--out", tmp_path / "e") == EXIT_OK
    assert run("eval", "--scenario", "minimal", "--episodes", 3, "--qtable", tmp_path / "t" / "qtable.json",
               "--out", tmp_path / "bad") == EXIT_CONFIG


def test_sweep_rows(tmp_path):
    assert run("sweep", "--episodes", 20, "--settings", "perfect,realistic", "--out", tmp_path) == EXIT_OK
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "setting,policy,mean_return,std"
    rows = [ln.split(",") for ln in lines[1:]]
    assert [r[0] for r in rows] == ["perfect", "realistic"]
    assert float(rows[0][2]) >= float(rows[1][2])


def test_sweep_repeated_setting_identical_rows(tmp_path):
    assert run("sweep", "--episodes", 10, "--settings", "p=0.5,p=0.5", "--out", tmp_path) == EXIT_OK
    _, a, b = (tmp_path / "sweep.csv").read_text().splitlines()
    assert a == b


def test_sweep_needs_two_settings(tmp_path):
    assert run("sweep", "--settings", "perfect", "--out", tmp_path) == EXIT_USAGE


def test_sweep_unknown_preset(tmp_path, capsys):
    assert run("sweep", "--settings", "perfect,bogus", "--out", tmp_path) == EXIT_CONFIG
    assert "realistic" in capsys.readouterr().err


def test_unknown_reward_preset(tmp_path):
    assert run("eval", "--reward-preset", "nope", "--out", tmp_path) == EXIT_CONFIG


def test_missing_scenario_file(tmp_path):
    assert run("eval", "--scenario", tmp_path / "none.json", "--out", tmp_path) == EXIT_CONFIG


def test_bad_arguments_are_usage_errors(tmp_path):
    assert run("eval", "--episodes", 0, "--out", tmp_path) == EXIT_USAGE
    assert run("frobnicate") == EXIT_USAGE
    assert run("eval", "--encoding", "pixels", "--out", tmp_path) == EXIT_USAGE


def test_compare_one_episode_and_rerun(tmp_path):
    for d in ("a", "b"):
        assert run("compare", "--episodes", 1, "--out", tmp_path / d) == EXIT_OK
    lines = (tmp_path / "a" / "compare.csv").read_text().splitlines()
    assert lines[0] == "episode,baseline,detector"
    assert len(lines) == 2
    summary = (tmp_path / "a" / "summary.csv").read_text().splitlines()
    assert summary[0] == "encoding,final_window,mean_return,reward_range"
    for name in ("compare.csv", "summary.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.fixture
def minimal_trace(tmp_path):
    assert run("eval", "--scenario", "minimal", "--episodes", 1, "--policy", "noop",
               "--detector-preset", "realistic", "--save-traces", 1, "--out", tmp_path) == EXIT_OK
    return tmp_path / "traces" / "episode_0000.jsonl"


def test_replay_renders_every_turn(minimal_trace, capsys):
    assert run("replay", minimal_trace) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("--- turn ") == 10
    assert "red:     Impact s0h0 -> success" in out
    assert "replay identical" in out.splitlines()[-1]


def test_replay_checks_scenario(tmp_path, minimal_trace, capsys):
    # the trace was recorded with a detector override, so it no longer matches the shipped file
    assert run("replay", minimal_trace, "--scenario", "minimal") == EXIT_VERIFY
    run("eval", "--scenario", "minimal", "--episodes", 1, "--save-traces", 1, "--out", tmp_path / "plain")
    assert run("replay", tmp_path / "plain" / "traces" / "episode_0000.jsonl", "--scenario", "minimal") == EXIT_OK


def test_replay_shows_genuine_flags(minimal_trace, capsys):
    run("replay", minimal_trace)
    out = capsys.readouterr().out
    assert "[genuine]" in out


def test_replay_single_turn(minimal_trace, capsys):
    assert run("replay", minimal_trace, "--turn", 5) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("--- turn ") == 1
    assert "--- turn 5 ---" in out
    assert run("replay", minimal_trace, "--turn", 99) == EXIT_USAGE


def test_replay_refuses_divergent_trace(minimal_trace, capsys):
    lines = minimal_trace.read_text().splitlines()
    rec = json.loads(lines[4])
    rec["reward"] = 123.0
    lines[4] = json.dumps(rec)
    minimal_trace.write_text("\n".join(lines) + "\n")
    assert run("replay", minimal_trace) == EXIT_VERIFY
    captured = capsys.readouterr()
    assert "turn 3" in captured.err
    assert "--- turn" not in captured.out


def test_replay_empty_footer(minimal_trace, capsys):
    lines = minimal_trace.read_text().splitlines()
    lines[-1] = "{}"
    minimal_trace.write_text("\n".join(lines) + "\n")
    assert run("replay", minimal_trace) == EXIT_VERIFY
    assert "footer" in capsys.readouterr().err
