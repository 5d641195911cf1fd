"""Monte Carlo replication harness: estimator summaries and normality tests.

Replication ``r`` of a study with seed ``s`` simulates from the stream
``(s, r)``, so the report does not depend on how replications are scheduled.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .estim import EcfOptions, FeasibilityError, estimate_ecf, estimate_mom
from .model import SplitMaParams, make_rng, simulate
from .quad import cubature_for_weight

PARAMS = ("b_c", "c", "sigma2")
INITIAL = "initial"
MIN_NORMALITY_N = 8
JB_MC_REPS = 2000


@dataclass(frozen=True)
class McConfig:
    T: int
    reps: int
    theta0: SplitMaParams
    weights: tuple = (1, 2, 3)
    seed: int = 0
    parallel: bool = False
    workers: int | None = None
    radial_n: int = 5
    angular_m: int = 4
    jb_mc_reps: int = JB_MC_REPS
    cf: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(k) for k in self.weights))
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.T < 30:
            raise ValueError(f"T must be >= 30, got {self.T}")
        bad = [k for k in self.weights if k not in (1, 2, 3)]
        if bad:
            raise ValueError(f"weights must be drawn from {{1, 2, 3}}, got {bad}")

    @property
    def estimators(self):
        return (INITIAL,) + tuple(f"g{k}" for k in self.weights)


@dataclass(frozen=True)
class SummaryRow:
    true: float
    min: float
    mean: float
    max: float
    bias: float
    rmse: float


@dataclass
class McReport:
    config: McConfig
    summary: dict  # estimator -> parameter -> SummaryRow
    normality: dict  # estimator -> parameter -> {"AD": (stat, p), "W": ..., "JB": ...}
    samples: dict  # estimator -> (n_ok, 3) array of (b_c, c, sigma2)
    failed_reps: int = 0
    nonconverged: dict = field(default_factory=dict)


def summarize(estimates, true_value: float) -> SummaryRow:
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise ValueError("summarize needs at least one estimate")
    mean = float(np.mean(est))
    return SummaryRow(
        true=float(true_value),
        min=float(est.min()),
        mean=mean,
        max=float(est.max()),
        bias=mean - true_value,
        rmse=math.sqrt(float(np.mean((est - true_value) ** 2))),
    )


# ---------------------------------------------------------------- normality

def _check_sample(sample):
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1 or len(x) < MIN_NORMALITY_N:
        raise ValueError(f"normality tests need at least {MIN_NORMALITY_N} values")
    return x


def _normal_probs(x):
    z = (np.sort(x) - x.mean()) / x.std(ddof=1)
    p = ndtr(z)
    return np.clip(p, 1e-300, 1 - 1e-16)


def ad_test(sample):
    """Anderson-Darling test for composite normality.

    Returns the modified statistic ``A^2 (1 + 0.75/n + 2.25/n^2)`` and the
    piecewise-exponential p-value approximation for that statistic.
    """
    x = _check_sample(sample)
    n = len(x)
    p = _normal_probs(x)
    i = np.arange(1, n + 1)
    a2 = -n - np.mean((2 * i - 1) * (np.log(p) + np.log1p(-p[::-1])))
    aa = a2 * (1 + 0.75 / n + 2.25 / n**2)
    if aa < 0.2:
        pval = 1 - math.exp(-13.436 + 101.14 * aa - 223.73 * aa**2)
    elif aa < 0.34:
        pval = 1 - math.exp(-8.318 + 42.796 * aa - 59.938 * aa**2)
    elif aa < 0.6:
        pval = math.exp(0.9177 - 4.279 * aa - 1.38 * aa**2)
    else:
        pval = math.exp(1.2937 - 5.709 * aa + 0.0186 * aa**2)
    return float(aa), float(min(max(pval, 0.0), 1.0))


def cvm_test(sample):
    """Cramer-von Mises test for composite normality, modified ``W (1 + 0.5/n)``."""
    x = _check_sample(sample)
    n = len(x)
    p = _normal_probs(x)
    i = np.arange(1, n + 1)
    w = 1.0 / (12 * n) + float(np.sum((p - (2 * i - 1) / (2.0 * n)) ** 2))
    ww = w * (1 + 0.5 / n)
    if ww < 0.0275:
        pval = 1 - math.exp(-13.953 + 775.5 * ww - 12542.61 * ww**2)
    elif ww < 0.051:
        pval = 1 - math.exp(-5.903 + 179.546 * ww - 1515.29 * ww**2)
    elif ww < 0.092:
        pval = math.exp(0.886 - 31.62 * ww + 10.897 * ww**2)
    elif ww < 1.1:
        pval = math.exp(1.111 - 34.242 * ww + 12.832 * ww**2)
    else:
        pval = 7.37e-10
    return float(ww), float(min(max(pval, 0.0), 1.0))


def _jb_stat(x, axis=-1):
    d = x - x.mean(axis=axis, keepdims=True)
    m2 = np.mean(d**2, axis=axis)
    skew = np.mean(d**3, axis=axis) / m2**1.5
    kurt = np.mean(d**4, axis=axis) / m2**2
    return x.shape[axis] * (skew**2 / 6 + (kurt - 3) ** 2 / 24)


@lru_cache(maxsize=64)
def _jb_null(n: int, mc_reps: int, seed: int):
    rng = make_rng((0x4A42, n, mc_reps, seed))
    out = np.empty(mc_reps)
    block = max(1, 2_000_000 // n)
    for start in range(0, mc_reps, block):
        stop = min(start + block, mc_reps)
        out[start:stop] = _jb_stat(rng.standard_normal((stop - start, n)))
    out.sort()
    out.setflags(write=False)
    return out


def jb_test(sample, mc_reps: int = JB_MC_REPS, seed: int = 0):
    """Jarque-Bera statistic with a Monte Carlo p-value from Gaussian samples of equal length."""
    x = _check_sample(sample)
    stat = float(_jb_stat(x))
    null = _jb_null(len(x), int(mc_reps), int(seed))
    exceed = len(null) - np.searchsorted(null, stat, side="left")
    return stat, float((1 + exceed) / (len(null) + 1))


# ---------------------------------------------------------------- harness

def _one_rep(cfg: McConfig, r: int):
    x = simulate(cfg.theta0, cfg.T, (cfg.seed, r)).x
    try:
        mom = estimate_mom(x)
    except FeasibilityError:
        return None
    rows = [(mom.b_c_hat, mom.c_hat, mom.sigma2_hat, True)]
    opts = EcfOptions(cf=cfg.cf)
    for k in cfg.weights:
        rule = cubature_for_weight(k, cfg.radial_n, cfg.angular_m)
        e = estimate_ecf(x, k, mom, rule, opts)
        rows.append((e.b_c_hat, e.c_hat, e.sigma2_hat, e.converged))
    return rows


def _rep_chunk(args):
    cfg, lo, hi = args
    return [_one_rep(cfg, r) for r in range(lo, hi)]


def run_mc(config: McConfig) -> McReport:
    """Run all replications and assemble the report in replication order."""
    cfg = config
    if cfg.parallel and cfg.reps > 1:
        step = max(1, cfg.reps // (4 * (cfg.workers or 4)))
        chunks = [(cfg, lo, min(lo + step, cfg.reps)) for lo in range(0, cfg.reps, step)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = [row for part in pool.map(_rep_chunk, chunks) for row in part]
    else:
        results = [_one_rep(cfg, r) for r in range(cfg.reps)]

    ok = [res for res in results if res is not None]
    failed = len(results) - len(ok)
    truth = {"b_c": cfg.theta0.b_c, "c": cfg.theta0.c, "sigma2": cfg.theta0.sigma2}
    summary, normality, samples, nonconv = {}, {}, {}, {}
    for e_idx, name in enumerate(cfg.estimators):
        arr = np.array([res[e_idx][:3] for res in ok], dtype=float).reshape(-1, 3)
        samples[name] = arr
        nonconv[name] = sum(1 for res in ok if not res[e_idx][3])
        summary[name] = {}
        normality[name] = {}
        for j, par in enumerate(PARAMS):
            col = arr[:, j]
            summary[name][par] = summarize(col, truth[par]) if len(col) else None
            normality[name][par] = _normality_cell(col, cfg)
    return McReport(cfg, summary, normality, samples, failed, nonconv)


def _normality_cell(col, cfg):
    nan = (math.nan, math.nan)
    if len(col) < MIN_NORMALITY_N or np.ptp(col) == 0:
        return {"AD": nan, "W": nan, "JB": nan}
    return {
        "AD": ad_test(col),
        "W": cvm_test(col),
        "JB": jb_test(col, cfg.jb_mc_reps, cfg.seed),
    }


# ---------------------------------------------------------------- output

_SUMMARY_FIELDS = ("true", "min", "mean", "max", "bias", "rmse")


def report_csv(report: McReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("estimator", "parameter") + _SUMMARY_FIELDS + ("ad", "ad_p", "cvm", "cvm_p", "jb", "jb_p"))
    for est, cells in report.summary.items():
        for par, row in cells.items():
            vals = [getattr(row, f) if row else math.nan for f in _SUMMARY_FIELDS]
            nt = report.normality[est][par]
            vals += [*nt["AD"], *nt["W"], *nt["JB"]]
            w.writerow([est, par] + ["%.17g" % v for v in vals])
    return buf.getvalue()


def samples_csv(report: McReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("row", "estimator") + PARAMS)
    for est, arr in report.samples.items():
        for i, vals in enumerate(arr):
            w.writerow([i, est] + ["%.17g" % v for v in vals])
    return buf.getvalue()


def summary_table(report: McReport) -> str:
    """Parameter blocks with TRUE/MIN/MEAN/MAX/BIAS/RMSE rows, one column per estimator."""
    cfg = report.config
    names = list(report.summary)
    lines = [
        f"Sample size: T={cfg.T}, replications: {cfg.reps} (failed: {report.failed_reps})",
        f"{'':<8}{'':<6}" + "".join(f"{n:>12}" for n in names),
    ]
    labels = {"b_c": "b_c", "c": "c", "sigma2": "sigma2"}
    for par in PARAMS:
        for f in _SUMMARY_FIELDS:
            vals = []
            for n in names:
                row = report.summary[n][par]
                vals.append(f"{getattr(row, f):>12.4f}" if row else f"{'nan':>12}")
            lines.append(f"{labels[par] if f == 'true' else '':<8}{f.upper():<6}" + "".join(vals))
    return "\n".join(lines) + "\n"


def normality_table(report: McReport) -> str:
    """One row per estimator and parameter with AD, W and JB statistics and p-values."""
    head = f"{'estimator':<10}{'param':<8}" + "".join(
        f"{h:>10}" for h in ("AD", "p", "W", "p", "JB", "p")
    )
    lines = [head]
    for est, cells in report.normality.items():
        for par, nt in cells.items():
            vals = [*nt["AD"], *nt["W"], *nt["JB"]]
            lines.append(f"{est:<10}{par:<8}" + "".join(f"{v:>10.4f}" for v in vals))
    return "\n".join(lines) + "\n"
