"""Small numerical helpers: Gaussian tail functions, quadrature grids, sums.

Everything here is deterministic and vectorized; the fixed-order
Gauss-Legendre rules are validated against adaptive quadrature in the
test suite so the hot loops can avoid per-point adaptive calls.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import special

SPEED_OF_LIGHT = 299_792_458.0


def qfunc(x):
    """Gaussian tail probability Q(x) = 0.5 * erfc(x / sqrt(2))."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def qfunc_inv(p: float) -> float:
    """Inverse of the Gaussian tail probability on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"Q^-1 argument must be in (0, 1), got {p}")
    return float(np.sqrt(2.0) * special.erfcinv(2.0 * p))


@lru_cache(maxsize=None)
def _leggauss(n: int):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(a, b, n: int):
    """Nodes and weights for an n-point Gauss-Legendre rule on [a, b].

    ``a`` and ``b`` may be arrays (broadcast against each other), in which
    case the returned arrays carry a trailing node axis.
    """
    ref_x, ref_w = _leggauss(n)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[..., None] + half[..., None] * ref_x
    w = half[..., None] * ref_w
    return x, w


def exponential_cell_nodes(rate: float, n: int, quantile: float = 0.9999,
                           split: float | None = None):
    """Quadrature grid for E[f(X)] with X ~ Exp(rate), truncated + renormalized.

    Returns (nodes, weights) such that sum(w_i * f(x_i)) approximates the
    expectation of f over the truncated distribution. ``split`` places a
    panel boundary at a known kink of f (e.g. the LOS-ball edge).
    """
    if rate <= 0.0:
        raise ValueError("rate must be positive")
    x_max = -np.log1p(-quantile) / rate
    if split is not None and 0.0 < split < x_max:
        half = n // 2
        x1, w1 = gauss_legendre(0.0, split, half)
        x2, w2 = gauss_legendre(split, x_max, n - half)
        x = np.concatenate([x1, x2])
        w = np.concatenate([w1, w2])
    else:
        x, w = gauss_legendre(0.0, x_max, n)
    pdf = rate * np.exp(-rate * x)
    weights = w * pdf / quantile
    return x, weights


def split_panel(a, b, cut: float, n: int):
    """Gauss-Legendre nodes/weights on [a, b] (arrays broadcast), split at
    ``cut`` into two n/2-point panels wherever a < cut < b.

    Integrands here switch propagation regime at the LOS-ball edge, so
    panels straddling it must not be integrated as one smooth piece.
    Returns (x, w) with a trailing axis of n nodes either way.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    straddle = (a < cut) & (cut < b)
    if not np.any(straddle):
        return gauss_legendre(a, b, n)
    half = n // 2
    x_plain, w_plain = gauss_legendre(a, b, n)
    lo_x, lo_w = gauss_legendre(a, np.minimum(b, cut), half)
    hi_x, hi_w = gauss_legendre(np.maximum(a, cut), b, n - half)
    x_split = np.concatenate([lo_x, hi_x], axis=-1)
    w_split = np.concatenate([lo_w, hi_w], axis=-1)
    mask = straddle[..., None]
    return np.where(mask, x_split, x_plain), np.where(mask, w_split, w_plain)


def reciprocal_power(base, n: int):
    """(base)^(-n) for integer n >= 1 via repeated multiplication.

    Substantially faster than np.power for the small Nakagami shapes used
    in the interference integrals.
    """
    inv = 1.0 / base
    out = inv
    for _ in range(n - 1):
        out = out * inv
    return out


def kahan_sum(values) -> float:
    """Compensated sum; order-stable accumulation for reductions."""
    total = 0.0
    comp = 0.0
    for v in values:
        y = float(v) - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * np.log10(x)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(w: float) -> float:
    return 10.0 * np.log10(w) + 30.0
