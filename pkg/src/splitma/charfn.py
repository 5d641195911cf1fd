"""Characteristic functions, moments and the marginal density of Split-MA(p).

Two families of theoretical CFs live here.

``cf_ell`` / ``cf1`` / ``cf2``
    The exact CF of a block ``(X_t, ..., X_{t+l-1})``.  In
    ``sum_j u_j X_{t+j-1}`` the innovation ``eps_s`` carries the coefficient
    ``v_s - theta_s w_s`` and ``theta_s`` is a function of ``eps_{s-1}`` only,
    so the expectation is a product of 2x2 transfer matrices indexed by the
    indicator states.  The matrix entries are Gaussian integrals of
    ``cos(q eps)`` restricted to ``eps^2 <= c`` or ``eps^2 > c``.

``cf_ell_factorized`` / ``cf1_factorized`` / ``cf2_factorized``
    The closed-form product that treats every indicator as independent of all
    innovations.  It coincides with the exact CF for single observations of
    the order-one model and otherwise is an approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import wofz

from .model import SplitMaParams

_MAX_MOMENT_ORDER = 20


def _gauss(q, sigma2):
    return np.exp(-0.5 * sigma2 * q * q)


def _truncated_cos(q, params: SplitMaParams):
    """``E[cos(q eps) I(eps^2 <= c)]`` for ``eps ~ N(0, sigma2)``.

    Written through the Faddeeva function so that no ``exp(+q^2)`` growth
    appears: ``exp(-s2 q^2/2) - exp(-c/(2 s2)) Re[exp(-i k q) w(iz)]``.
    """
    s2, b = params.sigma2, params.b_c
    g = _gauss(q, s2)
    if b == 0.0:
        return np.zeros_like(g)
    if b == 1.0:
        return g
    sigma = math.sqrt(s2)
    k = math.sqrt(params.c)
    iz = (-q * s2 + 1j * k) / (sigma * math.sqrt(2.0))
    tail = math.exp(-0.5 * k * k / s2) * np.real(np.exp(-1j * k * q) * wofz(iz))
    return g - tail


def cf_eta(u, params: SplitMaParams):
    """CF of ``theta_t eps_t``: ``1 + b_c (exp(-sigma2 u^2 / 2) - 1)``."""
    u = np.asarray(u, dtype=float)
    return 1.0 + params.b_c * (_gauss(u, params.sigma2) - 1.0)


def cf_ell(u, params: SplitMaParams):
    """Exact CF of order ``l`` evaluated at ``u`` of shape ``(..., l)``."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u[None]
    ell = u.shape[-1]
    batch = u.shape[:-1]
    if params.sigma2 == 0.0:
        return np.ones(batch)
    p, a, b = params.p, params.alphas, params.b_c

    # state[..., i] = P-weighted partial expectation with theta_s = i
    state = np.empty(batch + (2,))
    state[..., 0] = 1.0 - b
    state[..., 1] = b
    zero = np.zeros(batch)
    for s in range(1 - p, ell + 1):
        v = u[..., s - 1] if 1 <= s <= ell else zero
        w = zero
        for j in range(1, p + 1):
            if 1 <= s + j <= ell:
                w = w + a[j - 1] * u[..., s + j - 1]
        nxt_small = zero
        nxt_large = zero
        for th in (0, 1):
            q = v - w if th else v
            inside = _truncated_cos(q, params)
            nxt_small = nxt_small + state[..., th] * inside
            nxt_large = nxt_large + state[..., th] * (_gauss(q, params.sigma2) - inside)
        # the next indicator is 1 when eps_s^2 <= c
        state = np.stack([nxt_large, nxt_small], axis=-1)
    return state.sum(axis=-1)


def cf1(u, params: SplitMaParams):
    """Exact marginal CF of ``X_t``."""
    u = np.asarray(u, dtype=float)
    return cf_ell(u[..., None], params)


def cf2(u1, u2, params: SplitMaParams):
    """Exact CF of the pair ``(X_t, X_{t+1})``."""
    u1, u2 = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(u2, dtype=float))
    return cf_ell(np.stack([u1, u2], axis=-1), params)


def cf_ell_factorized(u, params: SplitMaParams):
    """Closed-form product CF of order ``l`` with independent indicators.

    With ``M = max(p, l)``, ``u`` and the coefficients zero-padded to length
    ``M``::

        exp(-s2 u_M^2/2)
        * prod_{j<M} [(1-b) exp(-s2 u_j^2/2) + b exp(-s2 (u_j - sum_k a_k u_{k+j})^2/2)]
        * prod_{j<=M} [1 - b + b exp(-s2 (sum_{k>=j} a_k u_{k-j+1})^2/2)]
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u[None]
    ell = u.shape[-1]
    p, b, s2 = params.p, params.b_c, params.sigma2
    M = max(p, ell)
    uu = np.zeros(u.shape[:-1] + (M + 1,))  # 1-based
    uu[..., 1 : ell + 1] = u
    a = np.zeros(M + 1)
    a[1 : p + 1] = params.alphas

    out = _gauss(uu[..., M], s2)
    for j in range(1, M):
        shift = sum(a[k] * uu[..., k + j] for k in range(1, M - j + 1))
        out = out * ((1 - b) * _gauss(uu[..., j], s2) + b * _gauss(uu[..., j] - shift, s2))
    for j in range(1, M + 1):
        arg = sum(a[k] * uu[..., k - j + 1] for k in range(j, M + 1))
        out = out * (1 - b + b * _gauss(arg, s2))
    return out


def cf1_factorized(u, params: SplitMaParams):
    """``exp(-s2 u^2/2) prod_j [1 + b (exp(-a_j^2 s2 u^2/2) - 1)]``."""
    u = np.asarray(u, dtype=float)
    out = _gauss(u, params.sigma2)
    for aj in params.alphas:
        out = out * cf_eta(aj * u, params)
    return out


def cf2_factorized(u1, u2, params: SplitMaParams):
    """Two-dimensional product CF with independent indicators."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    s2, b = params.sigma2, params.b_c
    a = list(params.alphas) + [0.0]
    out = _gauss(u2, s2) * ((1 - b) * _gauss(u1, s2) + b * _gauss(u1 - a[0] * u2, s2))
    for j in range(params.p):
        out = out * cf_eta(a[j] * u1 + a[j + 1] * u2, params)
    return out


def ecf(ell: int, u, data, chunk: int = 65536):
    """Real part of the empirical CF of overlapping ``l``-blocks of ``data``.

    ``u`` is a single point of length ``l`` or an ``(N, l)`` array of points;
    the result is ``mean_t cos(sum_j u_j X_{t+j-1})`` over the
    ``T - l + 1`` blocks.
    """
    data = np.asarray(data, dtype=float)
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    if u.shape[-1] != ell:
        raise ValueError(f"points must have {ell} coordinates, got shape {u.shape}")
    if len(data) < ell:
        raise ValueError(f"need at least {ell} observations, got {len(data)}")
    blocks = sliding_window_view(data, ell)
    n = len(blocks)
    acc = np.zeros(len(u))
    for start in range(0, n, chunk):
        acc += np.cos(blocks[start : start + chunk] @ u.T).sum(axis=0)
    out = acc / n
    return out[0] if single else out


def lk_poly(k: int, x):
    """k-th coefficient polynomial of ``log(1 - x + x e^t) = sum_k L_k(x) t^k / k!``.

    Differentiating ``A G' = A'`` with ``A(t) = 1 - x + x e^t`` gives
    ``L_{n+1} = x - x sum_{i=1}^{n} C(n, i) L_{n-i+1}``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x = np.asarray(x, dtype=float)
    L = [None, x]
    for n in range(1, k):
        acc = sum(math.comb(n, i) * L[n - i + 1] for i in range(1, n + 1))
        L.append(x - x * acc)
    return L[k] if L[k].ndim else float(L[k])


@dataclass
class MomentTable:
    """Moments ``E(X^0..X^n)`` with the recurrence coefficients behind them.

    ``W[k]`` and ``V[k] = (-1)^k (2k-1)!! sigma2^k W[k]`` (index 0 unused) are
    the cumulant-side quantities; ``values[2m]`` solves the even-moment
    recurrence.
    """

    order: int
    values: np.ndarray
    W: np.ndarray
    V: np.ndarray

    def __getitem__(self, k):
        return self.values[k]


def _double_factorial_odd(k):
    # (2k-1)!!
    return math.prod(range(1, 2 * k, 2))


def moment(params: SplitMaParams, n: int) -> MomentTable:
    """Moments of ``X_t`` up to order ``n`` from the cumulant recurrence.

    These are the moments of :func:`cf1_factorized` and therefore exact for
    ``p = 1``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > _MAX_MOMENT_ORDER:
        raise ValueError(f"moments above order {_MAX_MOMENT_ORDER} are not supported")
    half = n // 2
    b, s2 = params.b_c, params.sigma2
    W = np.zeros(half + 1)
    V = np.zeros(half + 1)
    for k in range(1, half + 1):
        power_sum = math.fsum(a ** (2 * k) for a in params.alphas)
        W[k] = 1.0 + b * power_sum if k == 1 else lk_poly(k, b) * power_sum
        V[k] = (-1) ** k * _double_factorial_odd(k) * s2**k * W[k]
    values = np.zeros(n + 1)
    values[0] = 1.0
    for m in range(1, half + 1):
        values[2 * m] = math.fsum(
            math.comb(2 * m - 1, 2 * k - 1)
            * _double_factorial_odd(k)
            * s2**k
            * W[k]
            * values[2 * (m - k)]
            for k in range(1, m + 1)
        )
    return MomentTable(order=n, values=values, W=W, V=V)


def kurtosis(params: SplitMaParams) -> float:
    """``E X^4 / (E X^2)^2 = 3 (1 + W_2 / W_1^2)``."""
    tab = moment(params, 4)
    return 3.0 * (1.0 + tab.W[2] / tab.W[1] ** 2)


def pdf_x(params: SplitMaParams, x):
    """Marginal density of the order-one increments: a two-component Gaussian mixture."""
    if params.p != 1:
        raise ValueError("pdf_x is available for p = 1 only")
    x = np.asarray(x, dtype=float)
    s2, b, a = params.sigma2, params.b_c, params.alphas[0]

    def normal(var):
        return np.exp(-0.5 * x * x / var) / math.sqrt(2.0 * math.pi * var)

    return (1.0 - b) * normal(s2) + b * normal((1.0 + a * a) * s2)
