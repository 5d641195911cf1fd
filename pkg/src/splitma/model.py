"""GSB(p) levels and Split-MA(p) increments: simulation, second moments, inversion.

The model is::

    Y_t - sum_j a_j Y_{t-j} = eps_t - sum_j a_j theta_{t-j} eps_{t-j}
    theta_t = I(eps_{t-1}^2 <= c),   c = sigma2 * F^{-1}(b_c)

with Gaussian innovations ``eps_t ~ N(0, sigma2)`` and ``F`` the chi-square(1)
CDF.  ``X_t`` (the left-hand side) is the Split-MA(p) increment process and
``Y_t = m_t + eps_t`` splits the levels into martingale means and noise.

Pre-sample convention: ``eps_t = 0``, ``m_t = 0`` and ``theta_t = 1`` for
``t <= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .statfun import chi2_1_cdf, chi2_1_quantile

_INTEGRATED_TOL = 1e-12


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator for ``seed`` (an int or a tuple of ints).

    Monte Carlo replication ``r`` of a study with seed ``s`` uses
    ``make_rng((s, r))``, so every replication owns an independent stream
    regardless of the order in which replications are run.
    """
    if isinstance(seed, (int, np.integer)):
        seed = (int(seed),)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(seed))))


@dataclass(frozen=True)
class SplitMaParams:
    """Parameter vector ``(a_1, ..., a_p, b_c, sigma2)``.

    ``b_c = P(eps_{t-1}^2 <= c)`` may sit on the closed interval [0, 1] so
    that the limiting cases (``b_c = 1``: plain MA(p), ``b_c = 0``: white
    noise) stay expressible; estimation requires :attr:`is_nontrivial`.
    """

    alphas: tuple
    b_c: float
    sigma2: float

    def __post_init__(self):
        alphas = tuple(float(a) for a in np.atleast_1d(self.alphas))
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "b_c", float(self.b_c))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if len(alphas) == 0:
            raise ValueError("model order p must be >= 1")
        if any(not math.isfinite(a) or a < 0 for a in alphas):
            raise ValueError(f"coefficients must be finite and >= 0, got {alphas}")
        if not 0.0 <= self.b_c <= 1.0:
            raise ValueError(f"b_c must lie in [0, 1], got {self.b_c}")
        if not (math.isfinite(self.sigma2) and self.sigma2 >= 0.0):
            raise ValueError(f"sigma2 must be finite and >= 0, got {self.sigma2}")

    @classmethod
    def from_critical_value(cls, alphas, c, sigma2):
        """Build parameters from the threshold ``c`` instead of ``b_c``."""
        if sigma2 <= 0:
            raise ValueError("sigma2 must be > 0 to convert c into b_c")
        return cls(alphas, chi2_1_cdf(c / sigma2), sigma2)

    @property
    def p(self) -> int:
        return len(self.alphas)

    @property
    def alpha_sum(self) -> float:
        return math.fsum(self.alphas)

    @property
    def c(self) -> float:
        """Critical value ``sigma2 * F^{-1}(b_c)`` (0 and inf at the limits)."""
        if self.b_c == 0.0:
            return 0.0
        if self.b_c == 1.0:
            return math.inf
        return self.sigma2 * chi2_1_quantile(self.b_c)

    @property
    def is_nontrivial(self) -> bool:
        return 0.0 < self.b_c < 1.0

    @property
    def integrated(self) -> bool:
        return abs(self.alpha_sum - 1.0) <= _INTEGRATED_TOL

    @property
    def stationary(self) -> bool:
        return self.alpha_sum < 1.0

    @property
    def invertible(self) -> bool:
        return self.b_c * self.alpha_sum < 1.0


@dataclass
class SimulationOutput:
    """Aligned series for ``t = 1..T`` (index 0 holds ``t = 1``)."""

    eps: np.ndarray
    theta_ind: np.ndarray
    x: np.ndarray
    m: np.ndarray
    y: np.ndarray
    seed: object = field(default=None)

    def __len__(self):
        return len(self.eps)


def simulate(params: SplitMaParams, T: int, seed) -> SimulationOutput:
    """Simulate ``T`` steps of the GSB(p) process from zero pre-sample values.

    The output is a deterministic function of ``(params, T, seed)``.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    p = params.p
    a = np.asarray(params.alphas)
    rng = make_rng(seed)
    eps = np.zeros(p + T)
    eps[p:] = math.sqrt(params.sigma2) * rng.standard_normal(T)

    # theta_t = I(eps_{t-1}^2 <= c); pre-sample theta is 1
    theta = np.ones(p + T)
    theta[1:] = eps[:-1] ** 2 <= params.c
    eta = theta * eps
    lag = np.r_[0.0, a]

    x = eps - lfilter(lag, [1.0], eta)
    m = lfilter(lag, np.r_[1.0, -a], (1.0 - theta) * eps)
    y = m + eps
    return SimulationOutput(
        eps=eps[p:], theta_ind=theta[p:].astype(np.int8), x=x[p:], m=m[p:], y=y[p:], seed=seed
    )


def cov_x(params: SplitMaParams, h: int) -> float:
    """Autocovariance of the Split-MA(p) increments at lag ``h``."""
    h = abs(int(h))
    a, p, s2, b = params.alphas, params.p, params.sigma2, params.b_c
    if h == 0:
        return s2 * (1.0 + b * math.fsum(x * x for x in a))
    if h < p:
        cross = math.fsum(a[j] * a[j + h] for j in range(p - h))
        return s2 * b * (cross - a[h - 1])
    if h == p:
        return -s2 * b * a[p - 1]
    return 0.0


def cov_sum(params: SplitMaParams) -> float:
    """Sum of all increment autocovariances; ``sigma2 * (1 - b_c)`` when integrated."""
    if not params.integrated:
        raise ValueError(f"cov_sum requires sum(alphas) == 1, got {params.alpha_sum!r}")
    return params.sigma2 * (1.0 - params.b_c)


def acf1(params: SplitMaParams) -> float:
    """Lag-one autocorrelation ``-b_c / (1 + b_c)`` of the Split-MA(1) with a_1 = 1."""
    if params.p != 1 or params.alphas[0] != 1.0:
        raise ValueError("acf1 is defined for p = 1, a_1 = 1")
    return -params.b_c / (1.0 + params.b_c)


def cov_y(params: SplitMaParams, h_max: int) -> np.ndarray:
    """Autocovariances ``gamma_Y(0..h_max)`` of stationary GSB levels.

    Multiplying the model equation by ``Y_{t-h}`` gives::

        gamma_Y(h) - sum_j a_j gamma_Y(|h-j|) = sigma2 I(h=0) - sum_{j>=h} a_j s(j-h)

    with ``s(k) = E[theta_t eps_t Y_{t+k}]``.  Only ``s(0) = b_c sigma2`` is
    non-zero: the martingale means are driven by ``q_t eps_t`` which is
    orthogonal to ``theta_t eps_t``.  Lags ``0..p`` are solved as one linear
    system, larger lags follow from the homogeneous recursion.
    """
    if not params.stationary:
        raise ValueError(f"cov_y requires sum(alphas) < 1, got {params.alpha_sum!r}")
    p, a, s2, b = params.p, np.asarray(params.alphas), params.sigma2, params.b_c
    s0 = b * s2

    A = np.eye(p + 1)
    rhs = np.zeros(p + 1)
    rhs[0] = s2
    for h in range(p + 1):
        for j in range(1, p + 1):
            A[h, abs(h - j)] -= a[j - 1]
        if h >= 1:
            rhs[h] -= a[h - 1] * s0
    gamma = np.empty(max(h_max, p) + 1)
    gamma[: p + 1] = np.linalg.solve(A, rhs)
    for h in range(p + 1, len(gamma)):
        gamma[h] = sum(a[j - 1] * gamma[h - j] for j in range(1, p + 1))
    return gamma[: h_max + 1]


def invert(params: SplitMaParams, x: Sequence[float], eps_init=None) -> np.ndarray:
    """Recover innovations from increments via ``eps_t = X_t + sum_j a_j theta_{t-j} eps_{t-j}``.

    ``eps_init`` holds ``eps_{1-p}, ..., eps_0`` (zeros by default, matching
    :func:`simulate`); values further back are taken as zero.
    """
    if not params.invertible:
        raise ValueError(
            f"Split-MA not invertible: b_c * sum(alphas) = {params.b_c * params.alpha_sum!r} >= 1"
        )
    p = params.p
    a = params.alphas
    c = params.c
    x = np.asarray(x, dtype=float)
    head = np.zeros(p) if eps_init is None else np.asarray(eps_init, dtype=float)
    if head.shape != (p,):
        raise ValueError(f"eps_init must have length p={p}")

    # buf[k] is eps at time k - p - 1; one extra zero feeds theta_{1-p}
    buf = [0.0] + list(head) + [0.0] * len(x)
    off = p + 1
    for t in range(len(x)):
        acc = x[t]
        i = t + off
        for j in range(1, p + 1):
            e = buf[i - j]
            if e != 0.0 and buf[i - j - 1] ** 2 <= c:
                acc += a[j - 1] * e
        buf[i] = acc
    return np.asarray(buf[off:])


def omega_weights(params: SplitMaParams, theta_seq, t: int, k_max: int) -> np.ndarray:
    """Weights ``omega_0(t), ..., omega_kmax(t)`` with ``eps_t = sum_k omega_k(t) X_{t-k}``.

    ``theta_seq[i]`` must hold ``theta_i`` for ``i = t - k_max, ..., t``.
    """
    if t - k_max < 0:
        raise ValueError("theta_seq does not cover indices t - k_max .. t")
    a = params.alphas
    w = np.zeros(k_max + 1)
    w[0] = 1.0
    for k in range(1, k_max + 1):
        acc = 0.0
        for j in range(1, min(k, params.p) + 1):
            acc += a[j - 1] * w[k - j]
        w[k] = theta_seq[t - k] * acc
    return w


def reconstruct_martingale(y, c_hat: float, m1: float | None = None):
    """Filter martingale means and innovations out of integrated GSB(1) levels.

    Runs ``eps_t = y_t - m_t`` and ``m_t = m_{t-1} + eps_{t-1} I(eps_{t-2}^2 > c_hat)``
    for ``t = 2..T`` from ``eps_1 = eps_0 = 0`` and ``m_1 = mean(y)`` (or the
    supplied ``m1``).

    Returns
    -------
    (m, eps) : tuple of ndarray
    """
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise ValueError("reconstruct_martingale needs at least two observations")
    T = len(y)
    m = np.empty(T)
    eps = np.empty(T)
    m[0] = y.mean() if m1 is None else float(m1)
    eps[0] = 0.0
    prev2 = 0.0  # eps_{t-2}
    for t in range(1, T):
        m[t] = m[t - 1] + (eps[t - 1] if prev2 * prev2 > c_hat else 0.0)
        eps[t] = y[t] - m[t]
        prev2 = eps[t - 1]
    return m, eps
