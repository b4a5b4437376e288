"""End-to-end command-line behavior and exit codes."""

from __future__ import annotations

import json

import pytest

from euroforecast import data_io
from euroforecast.cli import CONFIG_DIR_ENV, EXIT_CONFIG, EXIT_FIT, EXIT_IO, EXIT_OK, main

from conftest import build_team_model


def save_hand_models(path, teams_with_elo):
    models = {t: build_team_model(t, e) for t, e in teams_with_elo.items()}
    data_io.save_models(path, models)
    return path


@pytest.fixture(scope="module")
def euro2020_model_file(tmp_path_factory, euro2020):
    ratings, _, _ = euro2020
    path = tmp_path_factory.mktemp("models") / "euro2020.json"
    return save_hand_models(path, ratings)


@pytest.fixture(scope="module")
def euro2016_model_file(tmp_path_factory, data_dir):
    ratings = data_io.rating_table(data_io.load_ratings(data_dir / "euro2016_ratings.csv"))
    path = tmp_path_factory.mktemp("models") / "euro2016.json"
    return save_hand_models(path, ratings)


@pytest.fixture(scope="module")
def fitted_model_file(tmp_path_factory, demo_history):
    """A real fit over four teams, reused by forecast/gof tests."""
    matches_path, ratings_path = demo_history
    out = tmp_path_factory.mktemp("fit") / "model.json"
    code = main(
        [
            "fit",
            "--matches", str(matches_path),
            "--ratings", str(ratings_path),
            "--teams", "FRA,BEL,MKD,XXH",
            "--out", str(out),
        ]
    )
    assert code == EXIT_OK
    return out


class TestParser:
    def test_help(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        assert "replay-elo" in capsys.readouterr().out

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "euroforecast" in capsys.readouterr().out

    def test_missing_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["gof", "--model", "x.json", "--out", "y.csv", "--frobnicate"])
        assert exc.value.code == 2


class TestReplayElo:
    def test_annotates_and_reports(self, tmp_path, demo_history, capsys):
        matches_path, ratings_path = demo_history
        out = tmp_path / "annotated.csv"
        code = main(
            [
                "replay-elo",
                "--matches", str(matches_path),
                "--ratings", str(ratings_path),
                "--out", str(out),
            ]
        )
        assert code == EXIT_OK
        assert "annotated" in capsys.readouterr().out
        annotated = data_io.load_matches(out)
        assert annotated
        assert all(m.elo_a_before is not None for m in annotated)

    def test_deterministic_output_bytes(self, tmp_path, demo_history):
        matches_path, ratings_path = demo_history
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert (
                main(
                    [
                        "replay-elo",
                        "--matches", str(matches_path),
                        "--ratings", str(ratings_path),
                        "--out", str(out),
                    ]
                )
                == EXIT_OK
            )
        assert a.read_bytes() == b.read_bytes()

    def test_missing_input_is_io_error(self, tmp_path, demo_history, capsys):
        _, ratings_path = demo_history
        code = main(
            [
                "replay-elo",
                "--matches", str(tmp_path / "absent.csv"),
                "--ratings", str(ratings_path),
                "--out", str(tmp_path / "out.csv"),
            ]
        )
        assert code == EXIT_IO
        assert "error" in capsys.readouterr().err


class TestFit:
    def test_fit_writes_models(self, fitted_model_file, capsys):
        models, metadata = data_io.load_models(fitted_model_file)
        assert sorted(models) == ["BEL", "FRA", "MKD", "XXH"]
        assert metadata["command"] == "fit"
        for model in models.values():
            assert "attack" in model.diagnostics
            assert "defense" in model.diagnostics

    def test_refit_is_byte_identical(self, tmp_path, demo_history, fitted_model_file):
        matches_path, ratings_path = demo_history
        out = tmp_path / "model.json"
        code = main(
            [
                "fit",
                "--matches", str(matches_path),
                "--ratings", str(ratings_path),
                "--teams", "FRA,BEL,MKD,XXH",
                "--out", str(out),
            ]
        )
        assert code == EXIT_OK
        assert out.read_bytes() == fitted_model_file.read_bytes()

    def test_gof_export_flag(self, tmp_path, demo_history):
        matches_path, ratings_path = demo_history
        out = tmp_path / "model.json"
        gof = tmp_path / "gof.csv"
        code = main(
            [
                "fit",
                "--matches", str(matches_path),
                "--ratings", str(ratings_path),
                "--teams", "FRA,BEL",
                "--out", str(out),
                "--gof-out", str(gof),
            ]
        )
        assert code == EXIT_OK
        text = gof.read_text()
        assert "FRA,attack" in text
        assert "BEL,defense" in text

    def test_unknown_team_fails_with_fit_exit(self, tmp_path, demo_history, capsys):
        matches_path, ratings_path = demo_history
        out = tmp_path / "model.json"
        code = main(
            [
                "fit",
                "--matches", str(matches_path),
                "--ratings", str(ratings_path),
                "--teams", "FRA,ZZZ",
                "--out", str(out),
            ]
        )
        assert code == EXIT_FIT
        captured = capsys.readouterr()
        assert "ZZZ" in captured.err
        # the model file still carries the teams that did fit
        models, _ = data_io.load_models(out)
        assert "FRA" in models

    def test_needs_team_source(self, tmp_path, demo_history, capsys):
        matches_path, ratings_path = demo_history
        code = main(
            [
                "fit",
                "--matches", str(matches_path),
                "--ratings", str(ratings_path),
                "--out", str(tmp_path / "model.json"),
            ]
        )
        assert code == EXIT_CONFIG
        assert "--teams or --fixtures" in capsys.readouterr().err


class TestForecast:
    def test_grid_outputs(self, tmp_path, fitted_model_file, demo_history, capsys):
        _, ratings_path = demo_history
        out = tmp_path / "grid.csv"
        json_out = tmp_path / "grid.json"
        code = main(
            [
                "forecast",
                "--model", str(fitted_model_file),
                "--team-a", "FRA",
                "--team-b", "BEL",
                "--ratings", str(ratings_path),
                "--venue", "FRA",
                "--out", str(out),
                "--json-out", str(json_out),
            ]
        )
        assert code == EXIT_OK
        output = capsys.readouterr().out
        assert "P(win/draw/win)" in output
        assert "most likely score" in output
        doc = json.loads(json_out.read_text())
        assert doc["team_a"] == "FRA"
        total = sum(sum(row) for row in doc["grid"])
        assert total == pytest.approx(1.0, abs=1e-8)
        assert "# model_sha256: " in out.read_text()

    def test_elo_overrides(self, tmp_path, fitted_model_file):
        out = tmp_path / "grid.csv"
        code = main(
            [
                "forecast",
                "--model", str(fitted_model_file),
                "--team-a", "MKD",
                "--team-b", "XXH",
                "--elo-a", "1600",
                "--elo-b", "1600",
                "--cap", "8",
                "--out", str(out),
            ]
        )
        assert code == EXIT_OK
        header = [
            l for l in out.read_text().splitlines() if not l.startswith("#")
        ][0]
        assert header == "goals_a," + ",".join(f"b{j}" for j in range(9))

    def test_team_missing_from_model(self, tmp_path, fitted_model_file, capsys):
        code = main(
            [
                "forecast",
                "--model", str(fitted_model_file),
                "--team-a", "FRA",
                "--team-b", "GER",
                "--elo-a", "2000",
                "--elo-b", "1900",
                "--out", str(tmp_path / "grid.csv"),
            ]
        )
        assert code == EXIT_CONFIG
        assert "GER" in capsys.readouterr().err

    def test_needs_some_elo_source(self, tmp_path, fitted_model_file, capsys):
        code = main(
            [
                "forecast",
                "--model", str(fitted_model_file),
                "--team-a", "FRA",
                "--team-b", "BEL",
                "--out", str(tmp_path / "grid.csv"),
            ]
        )
        assert code == EXIT_CONFIG
        assert "--ratings" in capsys.readouterr().err


class TestSimulate:
    def test_smoke_run(self, tmp_path, euro2020_model_file, data_dir, capsys):
        out_dir = tmp_path / "sim"
        code = main(
            [
                "simulate",
                "--model", str(euro2020_model_file),
                "--fixtures", str(data_dir / "euro2020_fixtures.csv"),
                "--allocation", str(data_dir / "euro2020_allocation.csv"),
                "--ratings", str(data_dir / "euro2020_ratings.csv"),
                "--n-runs", "80",
                "--seed", "3",
                "--out-dir", str(out_dir),
            ]
        )
        assert code == EXIT_OK
        assert "P(champion" in capsys.readouterr().out
        for name in (
            "group_probabilities.csv",
            "stage_probabilities.csv",
            "stage_standard_errors.csv",
        ):
            assert (out_dir / name).exists()
        stage_lines = [
            l
            for l in (out_dir / "stage_probabilities.csv").read_text().splitlines()
            if l and not l.startswith("#")
        ]
        assert len(stage_lines) == 1 + 24
        champion_total = sum(float(l.split(",")[1]) for l in stage_lines[1:])
        assert champion_total == pytest.approx(1.0, abs=24 * 5e-7)

    def test_deterministic_across_workers(self, tmp_path, euro2020_model_file, data_dir):
        outputs = []
        for name, workers in (("one", "1"), ("three", "3")):
            out_dir = tmp_path / name
            code = main(
                [
                    "simulate",
                    "--model", str(euro2020_model_file),
                    "--fixtures", str(data_dir / "euro2020_fixtures.csv"),
                    "--allocation", str(data_dir / "euro2020_allocation.csv"),
                    "--ratings", str(data_dir / "euro2020_ratings.csv"),
                    "--n-runs", "60",
                    "--seed", "7",
                    "--workers", workers,
                    "--out-dir", str(out_dir),
                ]
            )
            assert code == EXIT_OK
            outputs.append((out_dir / "stage_probabilities.csv").read_text())
        # worker count appears in the manifest, so compare data rows only
        strip = lambda text: [l for l in text.splitlines() if not l.startswith("#")]
        assert strip(outputs[0]) == strip(outputs[1])

    def test_bad_fixture_file_is_config_error(self, tmp_path, euro2020_model_file, data_dir, capsys):
        lines = (data_dir / "euro2020_fixtures.csv").read_text().splitlines()
        broken = tmp_path / "broken.csv"
        broken.write_text("\n".join(lines[:-1]) + "\n")
        code = main(
            [
                "simulate",
                "--model", str(euro2020_model_file),
                "--fixtures", str(broken),
                "--allocation", str(data_dir / "euro2020_allocation.csv"),
                "--ratings", str(data_dir / "euro2020_ratings.csv"),
                "--n-runs", "10",
                "--out-dir", str(tmp_path / "sim"),
            ]
        )
        assert code == EXIT_CONFIG
        assert "error" in capsys.readouterr().err


class TestValidate:
    def test_euro2016_backtest(self, tmp_path, euro2016_model_file, data_dir, capsys):
        out = tmp_path / "metrics.csv"
        code = main(
            [
                "validate",
                "--model", str(euro2016_model_file),
                "--fixtures", str(data_dir / "euro2016_fixtures.csv"),
                "--allocation", str(data_dir / "euro2016_allocation.csv"),
                "--ratings", str(data_dir / "euro2016_ratings.csv"),
                "--results", str(data_dir / "euro2016_results.csv"),
                "--n-runs", "60",
                "--seed", "1",
                "--out", str(out),
            ]
        )
        assert code == EXIT_OK
        output = capsys.readouterr().out
        assert "MLD" in output and "Brier" in output and "RPS" in output
        text = out.read_text()
        assert "# total_mld: " in text
        assert "# total_brier: " in text
        assert "# total_rps: " in text


class TestGof:
    def test_report(self, tmp_path, fitted_model_file, capsys):
        out = tmp_path / "gof.csv"
        code = main(["gof", "--model", str(fitted_model_file), "--out", str(out)])
        assert code == EXIT_OK
        output = capsys.readouterr().out
        assert "regression" in output
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert len(lines) == 1 + 3 * 4

    def test_missing_model_is_io_error(self, tmp_path, capsys):
        code = main(
            ["gof", "--model", str(tmp_path / "absent.json"), "--out", str(tmp_path / "g.csv")]
        )
        assert code == EXIT_IO


class TestConfigResolution:
    def test_bad_config_flag(self, tmp_path, euro2020_model_file, data_dir, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"reference_date": "2021-06-07", "bogus": 1}')
        code = main(
            [
                "simulate",
                "--model", str(euro2020_model_file),
                "--fixtures", str(data_dir / "euro2020_fixtures.csv"),
                "--allocation", str(data_dir / "euro2020_allocation.csv"),
                "--ratings", str(data_dir / "euro2020_ratings.csv"),
                "--n-runs", "10",
                "--out-dir", str(tmp_path / "sim"),
                "--config", str(cfg),
            ]
        )
        assert code == EXIT_CONFIG
        assert "bogus" in capsys.readouterr().err

    def test_missing_config_flag_is_io_error(self, tmp_path, euro2020_model_file, data_dir):
        code = main(
            [
                "simulate",
                "--model", str(euro2020_model_file),
                "--fixtures", str(data_dir / "euro2020_fixtures.csv"),
                "--allocation", str(data_dir / "euro2020_allocation.csv"),
                "--ratings", str(data_dir / "euro2020_ratings.csv"),
                "--n-runs", "10",
                "--out-dir", str(tmp_path / "sim"),
                "--config", str(tmp_path / "absent.json"),
            ]
        )
        assert code == EXIT_IO

    def test_env_dir_config_used_for_fit(self, tmp_path, demo_history, monkeypatch):
        matches_path, ratings_path = demo_history
        env_dir = tmp_path / "confdir"
        env_dir.mkdir()
        (env_dir / "config.json").write_text('{"reference_date": "2019-01-01"}')
        monkeypatch.setenv(CONFIG_DIR_ENV, str(env_dir))
        out = tmp_path / "model.json"
        code = main(
            [
                "fit",
                "--matches", str(matches_path),
                "--ratings", str(ratings_path),
                "--teams", "FRA,BEL",
                "--out", str(out),
                "--end", "2018-12-31",
            ]
        )
        assert code == EXIT_OK
        _, metadata = data_io.load_models(out)
        assert metadata["reference_date"] == "2019-01-01"

    def test_config_flag_beats_env(self, tmp_path, demo_history, monkeypatch):
        matches_path, ratings_path = demo_history
        env_dir = tmp_path / "confdir"
        env_dir.mkdir()
        (env_dir / "config.json").write_text('{"reference_date": "2019-01-01"}')
        monkeypatch.setenv(CONFIG_DIR_ENV, str(env_dir))
        flag_cfg = tmp_path / "flag.json"
        flag_cfg.write_text('{"reference_date": "2020-02-02"}')
        out = tmp_path / "model.json"
        code = main(
            [
                "fit",
                "--matches", str(matches_path),
                "--ratings", str(ratings_path),
                "--teams", "FRA,BEL",
                "--out", str(out),
                "--end", "2019-12-31",
                "--config", str(flag_cfg),
            ]
        )
        assert code == EXIT_OK
        _, metadata = data_io.load_models(out)
        assert metadata["reference_date"] == "2020-02-02"
