"""Command line interface smoke tests."""

import json

import pytest
from click.testing import CliRunner

from yokai.cli import main
from yokai.records import read_records, verify_replay


@pytest.fixture()
def runner():
    return CliRunner()


class TestBench:
    def test_text_table(self, runner):
        result = runner.invoke(main, ["bench", "--envs", "4", "--steps", "3", "--seed", "1"])
        assert result.exit_code == 0, result.output
        assert "steps/s" in result.output
        assert "python" in result.output or "compiled" in result.output

    def test_json(self, runner):
        result = runner.invoke(
            main, ["bench", "--envs", "2", "--envs", "4", "--steps", "2", "--json"]
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert [row["num_envs"] for row in payload["rows"]] == [2, 4]
        assert all(row["steps_per_second"] > 0 for row in payload["rows"])


class TestEval:
    def test_text_summary(self, runner):
        result = runner.invoke(
            main,
            ["eval", "--seat0", "greedy", "--seat1", "random", "--games", "4", "--seed", "3"],
        )
        assert result.exit_code == 0, result.output
        assert "success rate" in result.output
        assert "greedy vs random" in result.output

    def test_json_and_records(self, runner, tmp_path):
        out = tmp_path / "eval.jsonl"
        result = runner.invoke(
            main,
            [
                "eval", "--seat0", "random", "--seat1", "random",
                "--games", "3", "--records", str(out), "--json",
            ],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["metrics"]["episodes"] == 3
        assert payload["seats"] == ["random", "random"]
        records = read_records(out)
        assert len(records) == 3
        for record in records:
            verify_replay(record)

    def test_symmetrized_eval_runs(self, runner):
        # scripted policies act on the state; the symmetry draw must not break them
        result = runner.invoke(
            main, ["eval", "--games", "2", "--op", "c+r", "--seed", "9", "--json"]
        )
        assert result.exit_code == 0, result.output

    def test_missing_seat_for_three_players(self, runner):
        result = runner.invoke(main, ["eval", "--players", "3", "--games", "1"])
        assert result.exit_code != 0
        assert "--seat2" in result.output

    def test_four_player_eval(self, runner):
        result = runner.invoke(
            main,
            [
                "eval", "--players", "4", "--seat2", "random", "--seat3", "random",
                "--games", "1", "--json",
            ],
        )
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["metrics"]["episodes"] == 1


class TestCrossplay:
    def test_matrix_output(self, runner):
        result = runner.invoke(
            main, ["crossplay", "--pool", "random,greedy", "--games", "2", "--seed", "5"]
        )
        assert result.exit_code == 0, result.output
        assert "gap" in result.output
        assert "greedy" in result.output

    def test_json(self, runner):
        result = runner.invoke(
            main, ["crossplay", "--pool", "random", "--games", "2", "--json"]
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["names"] == ["random"]
        assert len(payload["success_matrix"]) == 1


class TestDiagnose:
    def test_random_policy_report(self, runner):
        result = runner.invoke(main, ["diagnose", "--policy", "random", "--json"])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["scenarios"] == 48
        assert set(payload["mean_rank"]) == {"t0", "t1", "wrong"}

    def test_text_report(self, runner):
        result = runner.invoke(main, ["diagnose", "--policy", "greedy"])
        assert result.exit_code == 0, result.output
        assert "mean rank" in result.output

    def test_explicit_fixture_file(self, runner, tmp_path):
        from yokai.diagnostics import generate_default_scenarios, write_scenarios

        path = tmp_path / "scen.json"
        write_scenarios(generate_default_scenarios()[:6], path)
        result = runner.invoke(main, ["diagnose", "--fixtures", str(path), "--json"])
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["scenarios"] == 6


class TestExport:
    def test_episodes_and_probing(self, runner, tmp_path):
        episodes = tmp_path / "episodes.jsonl"
        probing = tmp_path / "probing.jsonl"
        result = runner.invoke(
            main,
            [
                "export", "--games", "2", "--seed", "4",
                "--out", str(episodes), "--probing", str(probing),
            ],
        )
        assert result.exit_code == 0, result.output
        records = read_records(episodes)
        assert len(records) == 2
        for record in records:
            verify_replay(record)
            assert record.policies == ["oracle", "oracle"]
        rows = [json.loads(line) for line in probing.read_text().splitlines()]
        assert len(rows) == sum(r.length for r in records) * 2
        assert all(row["schema"] == "yle-probing/1" for row in rows)

    def test_out_is_required(self, runner):
        result = runner.invoke(main, ["export", "--games", "1"])
        assert result.exit_code != 0


class TestConfigFile:
    def test_defaults_from_config(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"eval": {"games": 2, "seat0": "random", "seat1": "random"}}))
        result = runner.invoke(main, ["--config", str(cfg), "eval", "--json"])
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["metrics"]["episodes"] == 2

    def test_explicit_flag_beats_config(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"eval": {"games": 5}}))
        result = runner.invoke(
            main,
            ["--config", str(cfg), "eval", "--games", "1",
             "--seat0", "random", "--seat1", "random", "--json"],
        )
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["metrics"]["episodes"] == 1

    def test_invalid_config_json(self, runner, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{nope")
        result = runner.invoke(main, ["--config", str(cfg), "bench", "--envs", "2"])
        assert result.exit_code != 0
        assert "not valid JSON" in result.output


class TestUsageErrors:
    def test_unknown_command(self, runner):
        result = runner.invoke(main, ["transmogrify"])
        assert result.exit_code == 2

    def test_bad_variant(self, runner):
        result = runner.invoke(main, ["bench", "--variant", "7x7"])
        assert result.exit_code == 2

    def test_bad_policy_spec_reports_cleanly(self, runner):
        result = runner.invoke(main, ["eval", "--seat0", "alphazero", "--games", "1"])
        assert result.exit_code == 1
        assert "alphazero" in result.output


class TestServe:
    def test_serve_boots_uvicorn(self, runner, monkeypatch):
        captured = {}

        def fake_run(app, host, port):
            captured["host"], captured["port"] = host, port

        import uvicorn

        monkeypatch.setattr(uvicorn, "run", fake_run)
        result = runner.invoke(main, ["serve", "--port", "9999"])
        assert result.exit_code == 0, result.output
        assert captured == {"host": "127.0.0.1", "port": 9999}


class TestKernelBench:
    def test_backend_comparison(self, runner):
        result = runner.invoke(main, ["bench", "--kernels", "--json"])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert "python" in payload["backends"]
        for row in payload["backends"].values():
            assert row["states_per_second"] > 0

    def test_text_output(self, runner):
        result = runner.invoke(main, ["bench", "--kernels"])
        assert result.exit_code == 0, result.output
        assert "states/s" in result.output
