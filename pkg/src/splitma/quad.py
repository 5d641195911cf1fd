"""Radial Gauss-Radau rule and polar product cubature for Gaussian plane weights.

For ``g(u) = exp(-gamma |u|^2)`` the planar integral of ``g f`` is written in
polar form ``int_0^inf r e^{-gamma r^2} S(r) dr`` with ``S`` the angular
integral of ``f``.  The radial integral is handled by a Radau rule with the
fixed node ``r_0 = 0``: its interior nodes are the Gauss nodes of the weight
``r^2 e^{-gamma r^2}`` (the Radau weight ``r * (r e^{-gamma r^2})``), and the
angular integral by the trapezoidal rule on ``4m`` equispaced angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.linalg import eigh_tridiagonal

_MP_DIGITS = 60


class QuadratureError(ValueError):
    """Raised when the orthogonal-polynomial recurrence breaks down."""


@dataclass(frozen=True)
class RadialRule:
    """``int_0^inf r e^{-gamma r^2} S(r) dr ~ sum_k weights[k] S(nodes[k])``; ``nodes[0] = 0``."""

    gamma: float
    n: int
    nodes: np.ndarray
    weights: np.ndarray

    def apply(self, S) -> float:
        vals = np.asarray(S(self.nodes), dtype=float)
        return math.fsum(self.weights * vals)


@dataclass(frozen=True)
class CubatureRule:
    """Planar nodes ``points[j] = (u1, u2)`` and weights for ``exp(-gamma |u|^2)``."""

    gamma: float
    n: int
    m: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=None)
def _gauss_unit(n: int):
    """n-point Gauss rule for ``t^2 e^{-t^2}`` on (0, inf), computed once per n.

    Recurrence coefficients come from the modified-moment-free Chebyshev
    algorithm on the exact moments ``Gamma((j+3)/2)/2`` in extended precision
    (the moment map is badly conditioned, so double precision is not enough).
    """
    with mpmath.workdps(_MP_DIGITS):
        mom = [mpmath.gamma(mpmath.mpf(j + 3) / 2) / 2 for j in range(2 * n)]
        alpha = [mpmath.mpf(0)] * n
        beta = [mpmath.mpf(0)] * n
        alpha[0] = mom[1] / mom[0]
        beta[0] = mom[0]
        sig_prev = [mpmath.mpf(0)] * (2 * n)
        sig = list(mom)
        for k in range(1, n):
            new = [mpmath.mpf(0)] * (2 * n)
            for l in range(k, 2 * n - k):
                new[l] = sig[l + 1] - alpha[k - 1] * sig[l] - beta[k - 1] * sig_prev[l]
            alpha[k] = new[k + 1] / new[k] - sig[k] / sig[k - 1]
            beta[k] = new[k] / sig[k - 1]
            if beta[k] <= 0:
                raise QuadratureError(f"non-positive recurrence coefficient beta_{k} = {beta[k]}")
            sig_prev, sig = sig, new
        diag = np.array([float(a) for a in alpha])
        off = np.array([float(mpmath.sqrt(b)) for b in beta[1:]])
        mass = float(beta[0])
    nodes, vecs = eigh_tridiagonal(diag, off)
    order = np.argsort(nodes)
    return nodes[order], mass * vecs[0, order] ** 2


def build_radial(gamma: float, n: int) -> RadialRule:
    """(n+1)-point Radau rule for ``r e^{-gamma r^2}`` with fixed node at 0.

    Exact for every ``S(r) = r^j`` with ``j <= 2n``.
    """
    if not (gamma > 0 and math.isfinite(gamma)):
        raise ValueError(f"gamma must be positive and finite, got {gamma!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    t, lam = _gauss_unit(int(n))
    r = t / math.sqrt(gamma)
    # Gauss weights for r^2 e^{-gamma r^2}; dividing by r gives the Radau interior weights
    interior = lam * gamma**-1.5 / r
    a0 = 1.0 / (2.0 * gamma) - math.fsum(interior)
    if not np.all(interior > 0) or a0 <= 0:
        raise QuadratureError("Radau weights are not positive")
    nodes = np.r_[0.0, r]
    weights = np.r_[a0, interior]
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return RadialRule(gamma=float(gamma), n=int(n), nodes=nodes, weights=weights)


def build_cubature(gamma: float, n: int = 5, m: int = 4) -> CubatureRule:
    """Product rule with ``N = 4 m n + 1`` nodes for ``exp(-gamma (u1^2 + u2^2))``.

    The origin carries ``2 pi A_0``; each radius ``r_k`` is visited at the
    angles ``nu pi / (2m)``, ``nu = 1..m``, and their three quarter-turn
    rotations with weight ``(pi / 2m) A_k``.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m!r}")
    radial = build_radial(gamma, n)
    ang = np.arange(1, m + 1) * math.pi / (2 * m)
    cx, cy = np.cos(ang), np.sin(ang)
    pts = [np.zeros((1, 2))]
    wts = [np.array([2.0 * math.pi * radial.weights[0]])]
    for r, a in zip(radial.nodes[1:], radial.weights[1:]):
        x, y = r * cx, r * cy
        ring = np.concatenate(
            [np.c_[x, y], np.c_[-x, -y], np.c_[y, -x], np.c_[-y, x]]
        )
        pts.append(ring)
        wts.append(np.full(len(ring), math.pi / (2 * m) * a))
    points = np.concatenate(pts)
    weights = np.concatenate(wts)
    points.setflags(write=False)
    weights.setflags(write=False)
    return CubatureRule(gamma=float(gamma), n=int(n), m=int(m), points=points, weights=weights)


def weight_gamma(k: int) -> float:
    """Radial rate of ``g_k(u) = exp(-k |u|^2 / 2)``."""
    if k < 1:
        raise ValueError(f"weight index must be >= 1, got {k!r}")
    return k / 2.0


def cubature_for_weight(k: int, n: int = 5, m: int = 4) -> CubatureRule:
    return build_cubature(weight_gamma(k), n, m)


def integrate(rule: CubatureRule, f) -> float:
    """``sum_j w_j f(u1_j, u2_j)``; ``f`` may be vectorized or scalar-only."""
    u1, u2 = rule.points[:, 0], rule.points[:, 1]
    try:
        vals = np.asarray(f(u1, u2), dtype=float)
    except TypeError:
        vals = None
    if vals is None or vals.shape != u1.shape:
        vals = np.array([float(f(a, b)) for a, b in zip(u1, u2)])
    return math.fsum(rule.weights * vals)
