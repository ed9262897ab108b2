"""Command-line behavior: outputs, artifacts, exit codes, reproducibility.

Simulation-bearing commands run on an artificially short cavity (explicit
two/three step delays) so each invocation stays well under a second.
"""
import pytest

from resbeam.cli import main

TINY = ["--set", "cavity.n_l=2", "--set", "cavity.n_r=3",
        "--set", "scenario.duration=1e-8",
        "--set", "scenario.record_decimation=1"]


class TestGeometryCommand:
    def test_reports_stability_and_delays(self, capsys):
        assert main(["geometry"]) == 0
        out = capsys.readouterr().out
        assert "(stable)" in out
        assert "n_l=30" in out
        assert "n_c=6242" in out

    def test_profile_artifact(self, tmp_path, capsys):
        assert main(["geometry", "--out", str(tmp_path)]) == 0
        profile = tmp_path / "geometry-profile.csv"
        assert profile.exists()
        assert (tmp_path / "geometry.manifest").exists()
        lines = profile.read_text().splitlines()
        assert lines[0] == "z_m,radius_m"
        assert len(lines) == 2049


class TestSteadyStateCommand:
    def test_prints_threshold_and_output(self, capsys):
        assert main(["steady-state"]) == 0
        out = capsys.readouterr().out
        assert "30.9862 W" in out
        assert "7.4232 W" in out

    def test_sweep_artifact(self, tmp_path, capsys):
        assert main(["steady-state", "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "steady-state.csv").read_text().splitlines()
        assert lines[0] == "p_in_w,p_out_w,below_threshold"
        assert len(lines) == 202
        cells = lines[1].split(",")
        assert float(cells[0]) == 0.0
        assert cells[2] == "1"


class TestExitCodes:
    def test_config_violation(self, capsys):
        code = main(["geometry", "--set", "loss.r_m2=1.2"])
        assert code == 2
        assert "loss.r_m2" in capsys.readouterr().err

    def test_unstable_geometry(self, capsys):
        code = main(["geometry", "--set", "geometry.d=4"])
        assert code == 2
        assert "unstable" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["geometry", "--config", str(tmp_path / "none.cfg")])
        assert code == 2
        assert "cannot read" in capsys.readouterr().err

    def test_simulation_fault(self, tmp_path, capsys):
        code = main(["simulate", "--out", str(tmp_path),
                     "--set", "cavity.n_l=2", "--set", "cavity.n_r=3",
                     "--set", "scenario.duration=2e-7",
                     "--set", "gain.sigma=1e-15"])
        assert code == 3
        assert "simulation fault" in capsys.readouterr().err

    def test_unknown_subcommand_and_preset(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["warp-drive"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            main(["preset", "fig99-everything"])
        assert exc.value.code == 2
        capsys.readouterr()


class TestSimulateCommand:
    def test_artifacts(self, tmp_path, capsys):
        out = tmp_path / "a"
        assert main(["simulate", "--out", str(out)] + TINY) == 0
        assert (out / "simulate-window0.csv").exists()
        assert (out / "simulate.rbt").exists()
        assert (out / "simulate.manifest").exists()
        lines = (out / "simulate-window0.csv").read_text().splitlines()
        assert lines[0].startswith("time_s,p_out")
        assert len(lines) == 3001
        stdout = capsys.readouterr().out
        assert "window 0: 3000 samples" in stdout

    def test_repeat_runs_identical(self, tmp_path, capsys):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--out", str(out1)] + TINY) == 0
        assert main(["simulate", "--out", str(out2)] + TINY) == 0
        csv1 = (out1 / "simulate-window0.csv").read_bytes()
        assert csv1 == (out2 / "simulate-window0.csv").read_bytes()
        assert (out1 / "simulate.rbt").read_bytes() == \
            (out2 / "simulate.rbt").read_bytes()
        capsys.readouterr()

    def test_manifest_reproduces_run(self, tmp_path, capsys):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--out", str(out1)] + TINY) == 0
        assert main(["simulate", "--config", str(out1 / "simulate.manifest"),
                     "--out", str(out2)]) == 0
        assert (out1 / "simulate-window0.csv").read_bytes() == \
            (out2 / "simulate-window0.csv").read_bytes()
        capsys.readouterr()

    def test_warm_start_holds_level(self, tmp_path, capsys):
        out = tmp_path / "warm"
        assert main(["simulate", "--warm", "--out", str(out)] + TINY) == 0
        stdout = capsys.readouterr().out
        # warm start: max and min stay within a watt of each other
        lines = (out / "simulate-window0.csv").read_text().splitlines()
        p = [float(row.split(",")[1]) for row in lines[1:]]
        assert max(p) - min(p) < 0.02 * max(p)


class TestReceiverCommands:
    def test_demodulate_artifact(self, tmp_path, capsys):
        out = tmp_path / "demod"
        code = main(["demodulate", "--out", str(out),
                     "--set", "modulation.n_bits=300"])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "0 errors" in stdout
        lines = (out / "demodulate.csv").read_text().splitlines()
        assert lines[0] == ("sample_rate_hz,adc_bits,noise_var,"
                            "bits_compared,errors,ber,phase,n_c")
        assert len(lines) == 2
        row = lines[1].split(",")
        assert row[4] == "0"

    def test_ber_sweep_grid(self, tmp_path, capsys):
        out = tmp_path / "sweep"
        code = main(["ber-sweep", "--out", str(out),
                     "--set", "modulation.n_bits=300",
                     "--rates", "2e9,1e9", "--adc-bits", "10",
                     "--noise", "0"])
        assert code == 0
        capsys.readouterr()
        lines = (out / "ber-sweep.csv").read_text().splitlines()
        assert len(lines) == 3
        # rows come out sorted by rate
        assert float(lines[1].split(",")[0]) == 1e9
        assert float(lines[2].split(",")[0]) == 2e9
