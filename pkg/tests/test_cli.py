import src.analytic_model as analytic_model
from main import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from src.errors import NoPhysicalRootError
from src.results_io import load_csv

SWEEP_CONFIG = """\
[scenario]
name = "tiny"
up = 1
down = 1

[sweep]
buffers = [20, 40]
variants = ["new_cubic", "simulation"]
seeds = [1]

[sim]
duration = 0.5
"""

POINT = ["--up", "1", "--down", "1", "--buffer", "20"]


class TestUsage:

    def test_no_command(self, capsys) -> None:
        assert main([]) == EXIT_USAGE

    def test_missing_argument(self, capsys) -> None:
        assert main(["model", "--up", "1"]) == EXIT_USAGE
        assert "--down" in capsys.readouterr().err

    def test_bad_choice(self, capsys) -> None:
        assert main(["model", *POINT, "--variant", "quintic"]) == EXIT_USAGE

    def test_invalid_scenario(self, capsys) -> None:
        assert main(["model", "--up", "0", "--down", "0", "--buffer", "20"]) == EXIT_USAGE

    def test_sweep_sources_exclusive(self, tmp_path, capsys) -> None:
        argv = ["sweep", "--config", "x.toml", "--scenario", "s1", "--out", str(tmp_path / "o.csv")]
        assert main(argv) == EXIT_USAGE


class TestModel:

    def test_single_variant(self, capsys) -> None:
        assert main(["model", *POINT, "--variant", "new"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "ratio up/down" in out
        assert "15.3" in out

    def test_all_variants(self, capsys) -> None:
        assert main(["model", *POINT, "--variant", "all"]) == EXIT_OK
        out = capsys.readouterr().out
        for name in ("new_cubic", "old_quartic", "exact_transcendental"):
            assert name in out

    def test_no_physical_root(self, monkeypatch, capsys) -> None:
        def no_root(params, variant="new_cubic"):
            raise NoPhysicalRootError("nothing left", candidates=[])

        monkeypatch.setattr(analytic_model, "solve_model", no_root)
        assert main(["model", *POINT, "--variant", "old"]) == EXIT_NUMERIC


class TestOtherCommands:

    def test_simulate(self, capsys) -> None:
        assert main(["simulate", *POINT, "--duration", "0.5"]) == EXIT_OK
        assert "flow 0 up" in capsys.readouterr().out

    def test_simulate_bad_duration(self, capsys) -> None:
        assert main(["simulate", *POINT, "--duration", "-1"]) == EXIT_USAGE

    def test_scenarios(self, capsys) -> None:
        assert main(["scenarios"]) == EXIT_OK
        out = capsys.readouterr().out
        for name in ("s1", "s2", "s3", "s4"):
            assert name in out


class TestSweepAndCompare:

    def test_sweep_then_compare(self, tmp_path, capsys) -> None:
        config = tmp_path / "tiny.toml"
        config.write_text(SWEEP_CONFIG)
        results = tmp_path / "out" / "tiny.csv"
        plots = tmp_path / "plots"
        assert main(["sweep", "--config", str(config), "--out", str(results), "--plot", str(plots)]) == EXIT_OK
        rows = load_csv(results)
        assert [(r.buffer, r.variant) for r in rows] == [
            (20, "new_cubic"), (20, "simulation"), (40, "new_cubic"), (40, "simulation"),
        ]
        assert (plots / "tiny_new_cubic.dat").exists()
        assert (plots / "tiny_simulation_jain.dat").exists()

        comparison = tmp_path / "cmp.csv"
        argv = ["compare", "--a", str(results), "--b", str(results), "--out", str(comparison)]
        assert main(argv) == EXIT_OK
        lines = comparison.read_text().splitlines()
        assert lines[0].startswith("scenario,B,variant,model_ratio,sim_ratio")
        assert len(lines) == 3

    def test_missing_config(self, tmp_path, capsys) -> None:
        argv = ["sweep", "--config", str(tmp_path / "none.toml"), "--out", str(tmp_path / "o.csv")]
        assert main(argv) == EXIT_CONFIG
        assert "none.toml" in capsys.readouterr().err

    def test_compare_bad_csv(self, tmp_path, capsys) -> None:
        bad = tmp_path / "bad.csv"
        bad.write_text("not,a,results,file\n")
        argv = ["compare", "--a", str(bad), "--b", str(bad), "--out", str(tmp_path / "c.csv")]
        assert main(argv) == EXIT_CONFIG

    def test_compare_disjoint_grids(self, tmp_path, capsys) -> None:
        a_cfg = tmp_path / "a.toml"
        a_cfg.write_text(SWEEP_CONFIG.replace('["new_cubic", "simulation"]', '["new_cubic"]'))
        b_cfg = tmp_path / "b.toml"
        b_cfg.write_text(
            SWEEP_CONFIG.replace("[20, 40]", "[60]").replace('["new_cubic", "simulation"]', '["simulation"]')
        )
        assert main(["sweep", "--config", str(a_cfg), "--out", str(tmp_path / "a.csv")]) == EXIT_OK
        assert main(["sweep", "--config", str(b_cfg), "--out", str(tmp_path / "b.csv")]) == EXIT_OK
        argv = ["compare", "--a", str(tmp_path / "a.csv"), "--b", str(tmp_path / "b.csv"),
                "--out", str(tmp_path / "c.csv")]
        assert main(argv) == EXIT_CONFIG
