"""Command-line interface.

Subcommands::

    simulate        simulate a GSB(p) path to CSV
    estimate        moment and ECF estimates from an increment series
    mc-table        Monte Carlo study with summary and normality tables
    fit             levels/log-volumes -> estimates, reconstruction, densities
    reconstruct     martingale means and innovations from a level series
    cubature-dump   nodes and weights of the planar cubature rule

Exit codes: 0 success, 2 input or configuration error, 3 feasibility or
estimation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import gaussian_kde

from . import charfn, mc
from .estim import EcfEstimate, FeasibilityError, MomEstimate, estimate_ecf, estimate_mom, objective_s2
from .model import SplitMaParams, reconstruct_martingale, simulate
from .quad import build_cubature, cubature_for_weight, weight_gamma

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ESTIMATION = 3
MIN_LEVELS = 31
KDE_GRID = 512


class InputError(ValueError):
    """Bad input file, column or configuration value."""


# ---------------------------------------------------------------- io helpers

def _fmt(v) -> str:
    return "%.17g" % v


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([v if isinstance(v, (int, np.integer)) else _fmt(v) for v in row])
    return buf.getvalue()


def read_csv_columns(path) -> dict:
    """Read a numeric CSV with a header row into ``{name: float array}``.

    Empty, non-numeric, NaN and infinite cells are rejected with their row
    number (the header is row 1).
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    cols = {h: [] for h in header}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        for name, cell in zip(header, row):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"{path}: row {lineno}, column {name!r}: not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise InputError(f"{path}: row {lineno}, column {name!r}: non-finite value {cell!r}")
            cols[name].append(v)
    return {k: np.asarray(v) for k, v in cols.items()}


def _pick_column(cols: dict, name: str | None, preferred: str, path) -> np.ndarray:
    if name is None:
        if preferred in cols:
            name = preferred
        elif len(cols) == 1:
            name = next(iter(cols))
        else:
            raise InputError(f"{path}: choose a column with --column (found {', '.join(cols)})")
    if name not in cols:
        raise InputError(f"{path}: no column {name!r} (found {', '.join(cols)})")
    return cols[name]


# ---------------------------------------------------------------- simulate / reconstruct

def cmd_simulate(params: SplitMaParams, T: int, seed, out_csv) -> None:
    sim = simulate(params, T, seed)
    t = np.arange(1, T + 1)
    text = csv_text(
        ("t", "eps", "theta", "x", "m", "y"),
        (t, sim.eps, sim.theta_ind.astype(int), sim.x, sim.m, sim.y),
    )
    write_atomic(out_csv, text)


def cmd_reconstruct(y, c_hat: float, out_csv, m1: float | None = None):
    y = np.asarray(y, dtype=float)
    m, eps = reconstruct_martingale(y, c_hat, m1)
    write_atomic(out_csv, csv_text(("t", "y", "m", "eps"), (np.arange(1, len(y) + 1), y, m, eps)))
    return m, eps


def cmd_cubature_dump(weight_k: int, n: int, m: int, out_csv=None) -> str:
    rule = build_cubature(weight_gamma(weight_k), n, m)
    text = csv_text(("u1", "u2", "weight"), (rule.points[:, 0], rule.points[:, 1], rule.weights))
    if out_csv is not None:
        write_atomic(out_csv, text)
    return text


# ---------------------------------------------------------------- estimation report

@dataclass
class EstimationResult:
    mom: MomEstimate
    ecf: dict  # weight k -> EcfEstimate

    def table(self, s_t_initial: float = math.nan) -> str:
        names = ["initial"] + [f"g{k}" for k in self.ecf]
        rows = [
            ("rho1_hat", [self.mom.rho1_hat] * len(names)),
            ("b_c", [self.mom.b_c_hat] + [e.b_c_hat for e in self.ecf.values()]),
            ("c", [self.mom.c_hat] + [e.c_hat for e in self.ecf.values()]),
            ("sigma2", [self.mom.sigma2_hat] + [e.sigma2_hat for e in self.ecf.values()]),
            ("S_T", [s_t_initial] + [e.objective for e in self.ecf.values()]),
            ("S_T_init", [math.nan] + [e.objective_init for e in self.ecf.values()]),
        ]
        out = [f"{'':<10}" + "".join(f"{n:>14}" for n in names)]
        for label, vals in rows:
            out.append(f"{label:<10}" + "".join(f"{v:>14.6g}" for v in vals))
        return "\n".join(out) + "\n"

    def csv(self) -> str:
        header = ("estimator", "rho1_hat", "b_c", "c", "sigma2", "S_T", "S_T_init", "iterations", "converged")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        m = self.mom
        w.writerow(["initial"] + [_fmt(v) for v in (m.rho1_hat, m.b_c_hat, m.c_hat, m.sigma2_hat)] + ["nan", "nan", 0, 1])
        for k, e in self.ecf.items():
            w.writerow(
                [f"g{k}"]
                + [_fmt(v) for v in (m.rho1_hat, e.b_c_hat, e.c_hat, e.sigma2_hat, e.objective, e.objective_init)]
                + [e.iterations, int(e.converged)]
            )
        return buf.getvalue()


def run_estimation(x, weights, radial_n=5, angular_m=4) -> EstimationResult:
    mom = estimate_mom(x)
    ecf = {}
    for k in weights:
        ecf[k] = estimate_ecf(x, k, mom, cubature_for_weight(k, radial_n, angular_m))
    return EstimationResult(mom, ecf)


# ---------------------------------------------------------------- fit pipeline

MODES = ("log_volume", "level", "increment")


@dataclass
class FitInput:
    path: Path
    mode: str = "level"
    column: str | None = None
    price_columns: tuple = ()
    volume_columns: tuple = ()

    def levels(self) -> np.ndarray:
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        cols = read_csv_columns(self.path)
        if self.mode == "log_volume":
            if not self.price_columns or len(self.price_columns) != len(self.volume_columns):
                raise InputError("log_volume mode needs matching --price-cols and --volume-cols")
            for c in self.price_columns + self.volume_columns:
                if c not in cols:
                    raise InputError(f"{self.path}: no column {c!r}")
            turnover = sum(cols[s] * cols[h] for s, h in zip(self.price_columns, self.volume_columns))
            bad = np.flatnonzero(turnover <= 0)
            if bad.size:
                raise InputError(f"{self.path}: row {bad[0] + 2}: turnover must be positive to take logs")
            y = np.log(turnover)
        elif self.mode == "level":
            y = _pick_column(cols, self.column, "y", self.path)
        else:
            x = _pick_column(cols, self.column, "x", self.path)
            y = np.cumsum(x)
        if len(y) < MIN_LEVELS:
            raise InputError(f"need at least {MIN_LEVELS} levels, got {len(y)}")
        return y


@dataclass
class FitReport:
    rho1_hat: float
    mom: MomEstimate
    ecf: dict
    selected_weight: int
    s_t_initial: float
    report_path: Path
    reconstruction_path: Path
    density_path: Path
    table: str = field(repr=False, default="")


def increments_from_levels(y) -> np.ndarray:
    """``X_1 = 0`` and ``X_t = Y_t - Y_{t-1}``."""
    y = np.asarray(y, dtype=float)
    return np.r_[0.0, np.diff(y)]


def density_table(x, params: SplitMaParams, n_grid: int = KDE_GRID):
    """Gaussian-KDE (Silverman bandwidth) and fitted mixture density on mean +- 4 sd."""
    x = np.asarray(x, dtype=float)
    mu, sd = x.mean(), x.std()
    grid = np.linspace(mu - 4 * sd, mu + 4 * sd, n_grid)
    empirical = gaussian_kde(x, bw_method="silverman")(grid)
    fitted = charfn.pdf_x(params, grid)
    return grid, empirical, fitted


def cmd_fit(inp: FitInput, weights=(1, 2, 3), out_dir=".", select_weight=None, radial_n=5, angular_m=4) -> FitReport:
    weights = tuple(int(k) for k in weights)
    if not weights:
        raise InputError("at least one weight is required")
    select = weights[0] if select_weight is None else int(select_weight)
    if select not in weights:
        raise InputError(f"selected weight {select} is not among {weights}")
    y = inp.levels()
    x = increments_from_levels(y)
    res = run_estimation(x, weights, radial_n, angular_m)
    sel = res.ecf[select]

    rule = cubature_for_weight(select, radial_n, angular_m)
    s_t_init = objective_s2(res.mom.b_c_hat, res.mom.sigma2_hat, charfn.ecf(2, rule.points, x), rule)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "fit_report.csv"
    recon_path = out / "reconstruction.csv"
    dens_path = out / "density.csv"
    write_atomic(report_path, res.csv())
    write_atomic(out / "fit_report.txt", res.table(s_t_init))
    cmd_reconstruct(y, sel.c_hat, recon_path)
    grid, emp, fit = density_table(x, SplitMaParams((1.0,), sel.b_c_hat, sel.sigma2_hat))
    write_atomic(dens_path, csv_text(("x", "empirical", "fitted"), (grid, emp, fit)))
    return FitReport(
        rho1_hat=res.mom.rho1_hat,
        mom=res.mom,
        ecf=res.ecf,
        selected_weight=select,
        s_t_initial=s_t_init,
        report_path=report_path,
        reconstruction_path=recon_path,
        density_path=dens_path,
        table=res.table(s_t_init),
    )


# ---------------------------------------------------------------- mc config

_MC_KEYS = {
    "T": int,
    "reps": int,
    "b_c": float,
    "sigma2": float,
    "alpha": float,
    "weights": str,
    "seed": int,
    "parallel": str,
    "workers": int,
    "radial_n": int,
    "angular_m": int,
    "jb_mc_reps": int,
    "out": str,
}


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{source}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _MC_KEYS:
            raise InputError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _MC_KEYS[key](val)
        except ValueError:
            raise InputError(f"{source}:{lineno}: bad value for {key!r}: {val!r}") from None
    return out


def _parse_weights(value) -> tuple:
    if isinstance(value, str):
        parts = [p for p in value.replace(",", " ").split() if p]
    else:
        parts = list(value)
    try:
        ks = tuple(int(p) for p in parts)
    except ValueError:
        raise InputError(f"weights: not an integer list: {value!r}") from None
    bad = [k for k in ks if k not in (1, 2, 3)]
    if bad or not ks:
        raise InputError(f"weights: each weight must be 1, 2 or 3, got {value!r}")
    return ks


def _parse_bool(key, value) -> bool:
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise InputError(f"{key}: expected a boolean, got {value!r}")


def mc_config_from(settings: dict) -> tuple:
    """Build an :class:`mc.McConfig` and output prefix from merged settings."""
    for key in ("T", "reps", "seed"):
        if key not in settings:
            raise InputError(f"{key}: required setting is missing")
    try:
        theta0 = SplitMaParams((settings.get("alpha", 1.0),), settings.get("b_c", 0.6827), settings.get("sigma2", 1.0))
    except ValueError as exc:
        raise InputError(f"model parameters: {exc}") from None
    if not theta0.is_nontrivial:
        raise InputError("b_c: must lie strictly inside (0, 1)")
    try:
        cfg = mc.McConfig(
            T=settings["T"],
            reps=settings["reps"],
            theta0=theta0,
            weights=_parse_weights(settings.get("weights", "1,2,3")),
            seed=settings["seed"],
            parallel=_parse_bool("parallel", settings.get("parallel", False)),
            workers=settings.get("workers"),
            radial_n=settings.get("radial_n", 5),
            angular_m=settings.get("angular_m", 4),
            jb_mc_reps=settings.get("jb_mc_reps", mc.JB_MC_REPS),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return cfg, settings.get("out", "mc")


def cmd_mc_table(settings: dict):
    cfg, prefix = mc_config_from(settings)
    report = mc.run_mc(cfg)
    write_atomic(f"{prefix}_summary.csv", mc.report_csv(report))
    write_atomic(f"{prefix}_samples.csv", mc.samples_csv(report))
    tables = mc.summary_table(report) + "\n" + mc.normality_table(report)
    write_atomic(f"{prefix}_tables.txt", tables)
    return report, tables


# ---------------------------------------------------------------- argparse

def _add_grid_flags(p):
    p.add_argument("--radial-n", type=int, default=None, help="interior radial nodes (default 5)")
    p.add_argument("--angular-m", type=int, default=None, help="angular nodes per quadrant (default 4)")


def _add_weight_flag(p):
    p.add_argument("--weight", type=int, action="append", default=None, metavar="K",
                   help="weight g_K(u) = exp(-K |u|^2 / 2), K in {1,2,3}; repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splitma", description="Split-MA / GSB simulation and estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a GSB(p) path")
    p.add_argument("--alpha", type=float, action="append", default=None, help="MA coefficient; repeat for p > 1")
    p.add_argument("--b-c", type=float, default=0.6827)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("-T", "--length", type=int, required=True, dest="T")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("estimate", help="moment and ECF estimates from increments")
    p.add_argument("input")
    p.add_argument("--column", default=None)
    _add_weight_flag(p)
    _add_grid_flags(p)
    p.add_argument("--out", default=None, help="CSV report path (text table goes to stdout)")

    p = sub.add_parser("mc-table", help="Monte Carlo study")
    p.add_argument("--config", default=None, help="flat key = value file")
    p.add_argument("-T", "--length", type=int, default=None, dest="T")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--b-c", type=float, default=None)
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--parallel", action="store_const", const=True, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--jb-mc-reps", type=int, default=None)
    _add_weight_flag(p)
    _add_grid_flags(p)
    p.add_argument("--out", default=None, help="output prefix")

    p = sub.add_parser("fit", help="fit the integrated GSB(1) model to a level series")
    p.add_argument("input")
    p.add_argument("--mode", choices=MODES, default="level")
    p.add_argument("--column", default=None)
    p.add_argument("--price-cols", default="", help="comma-separated price columns (log_volume mode)")
    p.add_argument("--volume-cols", default="", help="comma-separated volume columns (log_volume mode)")
    _add_weight_flag(p)
    p.add_argument("--select-weight", type=int, default=None, help="weight whose estimate drives reconstruction")
    _add_grid_flags(p)
    p.add_argument("--seed", type=int, default=None, help="accepted for uniformity; the fit is deterministic")
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("reconstruct", help="martingale means from levels")
    p.add_argument("input")
    p.add_argument("--column", default=None)
    p.add_argument("--c-hat", type=float, required=True)
    p.add_argument("--m1", type=float, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("cubature-dump", help="print cubature nodes and weights")
    p.add_argument("--weight", type=int, default=1, metavar="K")
    _add_grid_flags(p)
    p.add_argument("--out", default=None)
    return parser


def _split(s: str) -> tuple:
    return tuple(c.strip() for c in s.split(",") if c.strip())


def _dispatch(args) -> int:
    n = args.radial_n if getattr(args, "radial_n", None) is not None else 5
    m = args.angular_m if getattr(args, "angular_m", None) is not None else 4

    if args.command == "simulate":
        try:
            params = SplitMaParams(tuple(args.alpha or [1.0]), args.b_c, args.sigma2)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        if args.T < 1:
            raise InputError("T must be >= 1")
        cmd_simulate(params, args.T, args.seed, args.out)
        return EXIT_OK

    if args.command == "estimate":
        weights = _parse_weights(args.weight or [1, 2, 3])
        x = _pick_column(read_csv_columns(args.input), args.column, "x", args.input)
        res = run_estimation(x, weights, n, m)
        sys.stdout.write(res.table())
        if args.out:
            write_atomic(args.out, res.csv())
        return EXIT_OK

    if args.command == "mc-table":
        settings = {}
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise InputError(f"cannot read {args.config}: {exc}") from None
            settings.update(parse_config(text, args.config))
        flags = {
            "T": args.T, "reps": args.reps, "b_c": args.b_c, "sigma2": args.sigma2,
            "seed": args.seed, "parallel": args.parallel, "workers": args.workers,
            "jb_mc_reps": args.jb_mc_reps, "radial_n": args.radial_n,
            "angular_m": args.angular_m, "out": args.out,
            "weights": args.weight,
        }
        settings.update({k: v for k, v in flags.items() if v is not None})
        _, tables = cmd_mc_table(settings)
        sys.stdout.write(tables)
        return EXIT_OK

    if args.command == "fit":
        inp = FitInput(Path(args.input), args.mode, args.column, _split(args.price_cols), _split(args.volume_cols))
        weights = _parse_weights(args.weight or [1, 2, 3])
        rep = cmd_fit(inp, weights, args.out, args.select_weight, n, m)
        sys.stdout.write(rep.table)
        return EXIT_OK

    if args.command == "reconstruct":
        y = _pick_column(read_csv_columns(args.input), args.column, "y", args.input)
        if len(y) < 2:
            raise InputError("need at least two levels")
        cmd_reconstruct(y, args.c_hat, args.out, args.m1)
        return EXIT_OK

    if args.command == "cubature-dump":
        _parse_weights([args.weight])
        text = cmd_cubature_dump(args.weight, n, m, args.out)
        if args.out is None:
            sys.stdout.write(text)
        return EXIT_OK

    raise InputError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return _dispatch(args)
    except FeasibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
