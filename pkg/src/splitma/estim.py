"""Method-of-moments and empirical-characteristic-function estimators.

Both estimators target ``(b_c, sigma2)`` of the integrated Split-MA(1) model
``X_t = eps_t - theta_{t-1} eps_{t-1}`` unless other fixed coefficients are
supplied.  The ECF estimator minimizes the cubature approximation of

    S_T = int int (phi_2(u1, u2; b_c, sigma2) - ecf_T(u1, u2))^2 g_k(u1, u2) du

with ``g_k(u) = exp(-k |u|^2 / 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import expit, logit

from . import charfn
from .model import SplitMaParams
from .quad import CubatureRule, cubature_for_weight, weight_gamma
from .statfun import chi2_1_quantile

MIN_MOM_LENGTH = 30


class FeasibilityError(ValueError):
    """The lag-one autocorrelation lies outside (-0.5, 0)."""

    def __init__(self, rho1: float, message: str | None = None):
        self.rho1 = rho1
        super().__init__(message or f"rho1_hat = {rho1!r} lies outside the feasible interval (-0.5, 0)")


@dataclass(frozen=True)
class MomEstimate:
    b_c_hat: float
    sigma2_hat: float
    c_hat: float
    rho1_hat: float
    gamma0_hat: float


@dataclass(frozen=True)
class EcfEstimate:
    b_c_hat: float
    sigma2_hat: float
    c_hat: float
    objective: float
    iterations: int
    converged: bool
    weight_k: int
    objective_init: float = math.nan


def empirical_acov(x, h: int) -> float:
    """``(1/T) sum_{t<=T-h} (x_t - xbar)(x_{t+h} - xbar)``."""
    x = np.asarray(x, dtype=float)
    h = int(h)
    if h < 0:
        raise ValueError("lag must be >= 0")
    if len(x) <= h:
        raise ValueError(f"series of length {len(x)} is too short for lag {h}")
    d = x - x.mean()
    return float(np.dot(d[: len(d) - h], d[h:]) / len(d))


def estimate_mom(x, min_length: int = MIN_MOM_LENGTH) -> MomEstimate:
    """Moment estimator from ``rho(1) = -b_c / (1 + b_c)`` and ``gamma(0) = sigma2 (1 + b_c)``."""
    x = np.asarray(x, dtype=float)
    if len(x) < min_length:
        raise ValueError(f"need at least {min_length} observations, got {len(x)}")
    g0 = empirical_acov(x, 0)
    if not g0 > 0:
        raise FeasibilityError(math.nan, "series has zero variance; rho1_hat is undefined")
    return mom_from_moments(empirical_acov(x, 1) / g0, g0)


def mom_from_moments(rho1: float, gamma0: float) -> MomEstimate:
    """Map a lag-one autocorrelation and a variance to ``(b_c, sigma2, c)``."""
    if not -0.5 < rho1 < 0.0:
        raise FeasibilityError(rho1)
    b = -rho1 / (1.0 + rho1)
    s2 = gamma0 / (1.0 + b)
    return MomEstimate(b_c_hat=b, sigma2_hat=s2, c_hat=s2 * chi2_1_quantile(b), rho1_hat=rho1, gamma0_hat=gamma0)


def _cf_at_nodes(params: SplitMaParams, points, cf: str):
    if cf == "exact":
        return charfn.cf_ell(points, params)
    if cf == "factorized":
        return charfn.cf_ell_factorized(points, params)
    raise ValueError(f"cf must be 'exact' or 'factorized', got {cf!r}")


def objective_s2(b_c, sigma2, ecf_at_nodes, rule: CubatureRule, alphas=(1.0,), cf: str = "exact") -> float:
    """Cubature value of the weighted squared CF distance at ``(b_c, sigma2)``."""
    params = SplitMaParams(alphas, b_c, sigma2)
    diff = _cf_at_nodes(params, rule.points, cf) - ecf_at_nodes
    return math.fsum(rule.weights * diff * diff)


class NelderMeadResult(NamedTuple):
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool


def nelder_mead(
    f: Callable,
    x0,
    max_iter: int = 2000,
    x_tol: float = 1e-8,
    f_tol: float = 1e-12,
    step: float = 0.1,
) -> NelderMeadResult:
    """Downhill simplex with the standard coefficients (1, 2, 0.5, 0.5).

    Stops when the simplex diameter (max-norm distance to the best vertex)
    falls below ``x_tol``, when the spread of function values falls below
    ``f_tol``, or after ``max_iter`` iterations.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = len(x0)
    simplex = np.vstack([x0] + [x0 + step * e for e in np.eye(d)])
    fvals = np.array([f(v) for v in simplex], dtype=float)
    if not math.isfinite(fvals[0]):
        raise ValueError("objective is not finite at the starting point")

    it = 0
    converged = False
    while True:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        diameter = np.max(np.abs(simplex[1:] - simplex[0]))
        if diameter < x_tol or fvals[-1] - fvals[0] < f_tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = f(xc)
            accept = fc <= fr
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            accept = fc < fvals[-1]
        if accept:
            simplex[-1], fvals[-1] = xc, fc
            continue
        best = simplex[0]
        simplex[1:] = best + 0.5 * (simplex[1:] - best)
        fvals[1:] = [f(v) for v in simplex[1:]]

    return NelderMeadResult(simplex[0].copy(), float(fvals[0]), it, converged)


@dataclass(frozen=True)
class EcfOptions:
    max_iter: int = 2000
    x_tol: float = 1e-8
    f_tol: float = 1e-12
    step: float = 0.1
    sigma2_cap: float = 1e6
    cf: str = "exact"


def estimate_ecf(
    x,
    weight_k: int = 1,
    init: MomEstimate | None = None,
    rule: CubatureRule | None = None,
    opts: EcfOptions | None = None,
    alphas=(1.0,),
) -> EcfEstimate:
    """ECF estimate of ``(b_c, sigma2)`` started from the moment estimate.

    The search runs over ``(logit b_c, log sigma2)``; values of ``sigma2``
    above ``opts.sigma2_cap`` are rejected.  ``alphas`` other than ``(1,)``
    are held fixed and are experimental.
    """
    opts = opts or EcfOptions()
    x = np.asarray(x, dtype=float)
    if init is None:
        init = estimate_mom(x)
    if rule is None:
        rule = cubature_for_weight(weight_k)
    elif not math.isclose(rule.gamma, weight_gamma(weight_k)):
        raise ValueError(f"rule gamma {rule.gamma} does not match weight k={weight_k}")
    target = charfn.ecf(2, rule.points, x)
    return minimize_ecf(target, rule, init, weight_k, opts, alphas)


def minimize_ecf(
    ecf_at_nodes,
    rule: CubatureRule,
    init: MomEstimate,
    weight_k: int,
    opts: EcfOptions | None = None,
    alphas=(1.0,),
) -> EcfEstimate:
    """Minimize the cubature objective for a precomputed ECF vector."""
    opts = opts or EcfOptions()
    if not 0.0 < init.b_c_hat < 1.0 or not init.sigma2_hat > 0:
        raise FeasibilityError(init.rho1_hat, "initial estimate lies outside the parameter space")
    target = np.asarray(ecf_at_nodes, dtype=float)

    def obj(z):
        b = float(expit(z[0]))
        s2 = math.exp(min(z[1], 700.0))
        if not 0.0 < b < 1.0 or s2 > opts.sigma2_cap or s2 == 0.0:
            return math.inf
        return objective_s2(b, s2, target, rule, alphas=alphas, cf=opts.cf)

    z0 = np.array([logit(init.b_c_hat), math.log(init.sigma2_hat)])
    f0 = obj(z0)
    res = nelder_mead(obj, z0, max_iter=opts.max_iter, x_tol=opts.x_tol, f_tol=opts.f_tol, step=opts.step)
    b = float(expit(res.x[0]))
    s2 = math.exp(res.x[1])
    return EcfEstimate(
        b_c_hat=b,
        sigma2_hat=s2,
        c_hat=s2 * chi2_1_quantile(b),
        objective=res.fun,
        iterations=res.iterations,
        converged=res.converged,
        weight_k=int(weight_k),
        objective_init=f0,
    )
