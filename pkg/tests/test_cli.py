import math

import numpy as np
import pytest

from splitma import cli
from splitma.cli import (
    EXIT_ESTIMATION,
    EXIT_INPUT,
    EXIT_OK,
    FitInput,
    InputError,
    cmd_fit,
    increments_from_levels,
    main,
    parse_config,
    read_csv_columns,
)
from splitma.model import SplitMaParams, simulate

THETA0 = SplitMaParams((1.0,), 0.6827, 1.0)


def write(path, text):
    path.write_text(text)
    return str(path)


def series(name, values):
    return name + "\n" + "".join("%.17g\n" % v for v in values)


class TestSimulate:
    def test_rows_and_columns(self, tmp_path):
        out = tmp_path / "sim.csv"
        assert main(["simulate", "-T", "5", "--seed", "1", "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "t,eps,theta,x,m,y"
        assert len(lines) == 6

    def test_round_trip(self, tmp_path):
        out = tmp_path / "sim.csv"
        main(["simulate", "-T", "300", "--seed", "7", "--b-c", "0.4", "--sigma2", "2", "--out", str(out)])
        cols = read_csv_columns(out)
        sim = simulate(SplitMaParams((1.0,), 0.4, 2.0), 300, 7)
        for name, ref in (("eps", sim.eps), ("x", sim.x), ("m", sim.m), ("y", sim.y)):
            assert np.array_equal(cols[name], ref)
        assert np.array_equal(cols["theta"], sim.theta_ind)
        assert np.array_equal(cols["t"], np.arange(1, 301))

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            main(["simulate", "-T", "100", "--seed", "3", "--out", str(p)])
        assert a.read_bytes() == b.read_bytes()

    def test_seed_required(self, tmp_path):
        assert main(["simulate", "-T", "5", "--out", str(tmp_path / "s.csv")]) == EXIT_INPUT

    def test_bad_parameters(self, tmp_path):
        assert main(["simulate", "-T", "5", "--seed", "1", "--b-c", "1.5", "--out", str(tmp_path / "s.csv")]) == EXIT_INPUT
        assert main(["simulate", "-T", "0", "--seed", "1", "--out", str(tmp_path / "s.csv")]) == EXIT_INPUT


class TestInputParsing:
    def test_nan_row_rejected(self, tmp_path):
        path = write(tmp_path / "x.csv", "x\n1.0\nnan\n2.0\n")
        with pytest.raises(InputError, match="row 3"):
            read_csv_columns(path)

    def test_text_cell_rejected(self, tmp_path):
        path = write(tmp_path / "x.csv", "x\n1.0\n2.0\nabc\n")
        with pytest.raises(InputError, match="row 4"):
            read_csv_columns(path)

    def test_ragged_row(self, tmp_path):
        path = write(tmp_path / "x.csv", "a,b\n1,2\n3\n")
        with pytest.raises(InputError, match="row 3"):
            read_csv_columns(path)

    def test_missing_file(self, tmp_path):
        assert main(["estimate", str(tmp_path / "none.csv")]) == EXIT_INPUT

    def test_estimate_exit_code_on_nan(self, tmp_path, capsys):
        path = write(tmp_path / "x.csv", "x\n" + "0.1\n" * 40 + "inf\n")
        assert main(["estimate", path]) == EXIT_INPUT
        assert "row 42" in capsys.readouterr().err

    def test_increments(self):
        assert np.array_equal(increments_from_levels([1.0, 3.0, 2.0]), [0.0, 2.0, -1.0])


class TestEstimate:
    def test_report(self, tmp_path, capsys):
        x = simulate(THETA0, 1500, 2).x
        path = write(tmp_path / "x.csv", series("x", x))
        out = tmp_path / "est.csv"
        assert main(["estimate", path, "--weight", "1", "--weight", "3", "--out", str(out)]) == EXIT_OK
        cols = read_csv_columns_text(out)
        assert [r[0] for r in cols] == ["initial", "g1", "g3"]
        assert "b_c" in capsys.readouterr().out

    def test_infeasible_exit_code(self, tmp_path):
        x = np.random.default_rng(0).standard_normal(200)
        x = x + 0.9 * np.r_[0.0, x[:-1]]
        path = write(tmp_path / "x.csv", series("x", x))
        assert main(["estimate", path]) == EXIT_ESTIMATION


def read_csv_columns_text(path):
    return [line.split(",") for line in path.read_text().splitlines()[1:]]


class TestFit:
    def test_synthetic_recovery(self, tmp_path):
        sim = simulate(THETA0, 1500, 21)
        path = write(tmp_path / "y.csv", series("y", sim.y))
        rep = cmd_fit(FitInput(path), (1, 2, 3), tmp_path / "out")
        for e in rep.ecf.values():
            assert abs(e.b_c_hat - 0.6827) <= 0.1
            assert abs(e.sigma2_hat - 1.0) <= 0.15
            assert e.objective <= e.objective_init
        assert rep.ecf[1].objective < rep.s_t_initial
        for p in (rep.report_path, rep.reconstruction_path, rep.density_path, tmp_path / "out" / "fit_report.txt"):
            assert p.exists()
        recon = read_csv_columns(rep.reconstruction_path)
        assert len(recon["m"]) == 1500
        dens = read_csv_columns(rep.density_path)
        assert len(dens["x"]) == cli.KDE_GRID
        dx = dens["x"][1] - dens["x"][0]
        assert np.sum(dens["fitted"]) * dx == pytest.approx(1.0, abs=0.01)
        assert np.sum(dens["empirical"]) * dx == pytest.approx(1.0, abs=0.01)

    def test_reconstruction_tracks_truth(self, tmp_path):
        sim = simulate(THETA0, 1500, 22)
        path = write(tmp_path / "y.csv", series("y", sim.y))
        rep = cmd_fit(FitInput(path), (1,), tmp_path)
        m = read_csv_columns(rep.reconstruction_path)["m"]
        assert np.corrcoef(m, sim.m)[0, 1] > 0.9

    def test_constant_levels(self, tmp_path):
        path = write(tmp_path / "y.csv", "y\n" + "5.0\n" * 100)
        assert main(["fit", path, "--out", str(tmp_path)]) == EXIT_ESTIMATION

    def test_too_short(self, tmp_path):
        path = write(tmp_path / "y.csv", "y\n" + "1.0\n2.0\n" * 10)
        assert main(["fit", path, "--out", str(tmp_path)]) == EXIT_INPUT

    def test_log_volume_mode(self, tmp_path):
        sim = simulate(THETA0, 400, 23)
        vol = np.exp(sim.y * 0.1 + 5)
        lines = ["p1,v1,p2,v2"] + ["1.0,%.17g,2.0,%.17g" % (a, a) for a in vol]
        path = write(tmp_path / "pv.csv", "\n".join(lines) + "\n")
        code = main(["fit", path, "--mode", "log_volume", "--price-cols", "p1,p2", "--volume-cols", "v1,v2",
                     "--weight", "1", "--out", str(tmp_path / "o")])
        assert code == EXIT_OK
        assert (tmp_path / "o" / "fit_report.csv").exists()

    def test_log_volume_needs_positive_turnover(self, tmp_path):
        lines = ["p,v"] + ["1.0,2.0"] * 40 + ["1.0,0.0"]
        path = write(tmp_path / "pv.csv", "\n".join(lines) + "\n")
        with pytest.raises(InputError, match="row 42"):
            FitInput(path, "log_volume", price_columns=("p",), volume_columns=("v",)).levels()

    def test_selected_weight_must_be_fitted(self, tmp_path):
        sim = simulate(THETA0, 200, 24)
        path = write(tmp_path / "y.csv", series("y", sim.y))
        with pytest.raises(InputError):
            cmd_fit(FitInput(path), (1,), tmp_path, select_weight=2)


class TestMcTable:
    def test_minimal_config(self, tmp_path, capsys):
        cfg = write(tmp_path / "mc.cfg", f"T = 100\nreps = 4\nseed = 1  # comment\nweights = 1\nout = {tmp_path / 'run'}\n")
        assert main(["mc-table", "--config", cfg]) == EXIT_OK
        for suffix in ("_summary.csv", "_samples.csv", "_tables.txt"):
            assert (tmp_path / f"run{suffix}").exists()
        assert "RMSE" in capsys.readouterr().out

    def test_flags_override_config(self, tmp_path):
        cfg = write(tmp_path / "mc.cfg", f"T = 100\nreps = 4\nseed = 1\nweights = 2\nout = {tmp_path / 'run'}\n")
        assert main(["mc-table", "--config", cfg, "--reps", "2", "--weight", "1"]) == EXIT_OK
        text = (tmp_path / "run_tables.txt").read_text()
        assert "replications: 2" in text and "g1" in text and "g2" not in text

    def test_invalid_weight_names_field(self, tmp_path, capsys):
        cfg = write(tmp_path / "mc.cfg", "T = 100\nreps = 4\nseed = 1\nweights = 1, 4\n")
        assert main(["mc-table", "--config", cfg]) == EXIT_INPUT
        assert "weights" in capsys.readouterr().err

    def test_unknown_key(self):
        with pytest.raises(InputError, match="mc.cfg:2.*colour"):
            parse_config("T = 100\ncolour = red\n", "mc.cfg")

    def test_missing_required(self, tmp_path, capsys):
        cfg = write(tmp_path / "mc.cfg", "T = 100\nreps = 4\n")
        assert main(["mc-table", "--config", cfg]) == EXIT_INPUT
        assert "seed" in capsys.readouterr().err

    def test_bad_value(self):
        with pytest.raises(InputError, match="reps"):
            parse_config("reps = many\n")


class TestReconstruct:
    def run(self, tmp_path, y, c_hat, *extra):
        path = write(tmp_path / "y.csv", series("y", y))
        out = tmp_path / "r.csv"
        assert main(["reconstruct", path, "--c-hat", str(c_hat), "--out", str(out), *extra]) == EXIT_OK
        return read_csv_columns(out)

    def test_constant_series(self, tmp_path):
        cols = self.run(tmp_path, np.full(20, 3.0), 1.0)
        assert np.all(cols["eps"] == 0)
        assert np.allclose(cols["m"], 3.0)

    def test_large_threshold_freezes_mean(self, tmp_path):
        y = np.cumsum(np.random.default_rng(1).standard_normal(50))
        cols = self.run(tmp_path, y, 1e12)
        assert np.allclose(cols["m"], y.mean(), atol=1e-12)
        assert np.allclose(cols["eps"][1:], y[1:] - y.mean(), atol=1e-12)

    def test_explicit_start(self, tmp_path):
        cols = self.run(tmp_path, [1.0, 2.0, 4.0], 1e12, "--m1", "0.5")
        assert np.array_equal(cols["m"], [0.5, 0.5, 0.5])

    def test_against_simulation(self, tmp_path):
        sim = simulate(THETA0, 2000, 31)
        cols = self.run(tmp_path, sim.y, THETA0.c)
        assert np.corrcoef(cols["m"], sim.m)[0, 1] > 0.95

    def test_too_short(self, tmp_path):
        path = write(tmp_path / "y.csv", "y\n1.0\n")
        assert main(["reconstruct", path, "--c-hat", "1", "--out", str(tmp_path / "r.csv")]) == EXIT_INPUT


class TestCubatureDump:
    def test_stdout(self, capsys):
        assert main(["cubature-dump", "--weight", "2"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "u1,u2,weight" and len(lines) == 82
        w = np.array([float(l.split(",")[2]) for l in lines[1:]])
        assert w.sum() == pytest.approx(math.pi, abs=1e-10)

    def test_grid_flags(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["cubature-dump", "--radial-n", "3", "--angular-m", "2", "--out", str(out)]) == EXIT_OK
        assert len(out.read_text().splitlines()) == 26

    def test_bad_weight(self):
        assert main(["cubature-dump", "--weight", "5"]) == EXIT_INPUT


def test_help_exits_cleanly():
    assert main(["--help"]) == EXIT_OK


def test_unknown_command():
    assert main(["frobnicate"]) == EXIT_INPUT
