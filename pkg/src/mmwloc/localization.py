"""Localization-phase accuracy bounds and the induced error probabilities.

Ranging and angle accuracy are modeled by estimation lower bounds under
the effective observation-energy factor

    zeta = 2 * SNR_L * B_pilot * (1 - beta) * T_F / (G_B * G_U)
         = 2 * k_pl * p_t * z^(-alpha) * (1 - beta) * T_F / N0,

which is gain- and bandwidth-free. The ranging variance carries the
pilot-band curvature factor B_pilot^2 * pi^2 / (3 c^2) and observes the
whole localization phase (1 - beta) * T_F. The angle variance carries the
aperture information of the sounding subarray (at most
``ue_sounding_elements``, the calibrated panel the UE estimates with)
evaluated at boresight: the UE steers its lobe at the estimate, so the
bound is taken in the beam's own frame, making it independent of the
arrival angle. Angle sounding occupies its own short correlation window
(``aoa_sounding_time``, clipped to the localization phase).

Beam-selection error: the ranging estimate, Gaussian around the true
position, leaves the serving beam's ground interval. Misalignment: the
angle estimate misses by more than the alignment threshold nu. Both are
averaged over the cell-size distribution and the uniform user position
with fixed Gauss-Legendre grids (64 cell nodes on the 0.999-quantile
truncated exponential, 32 nodes per beam interval).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .antenna import UlaArray, aoa_fisher_factor, beamwidth_to_elements, main_lobe_gain
from .config import NetworkConfig
from .dictionary import BeamEntry
from .errors import NumericError, UnidentifiableAngleError
from .geometry import UserGeometry
from .numerics import (
    SPEED_OF_LIGHT,
    exponential_cell_nodes,
    qfunc,
    split_panel,
)

CELL_NODES = 64
BEAM_NODES = 32


@dataclass(frozen=True)
class LocalizationBounds:
    """Ranging / angle error variances and the energy factor behind them."""

    sigma_d2: float
    sigma_psi2: float
    zeta: float


@dataclass(frozen=True)
class ErrorThresholds:
    """Alignment threshold rule plus the access / optimization caps."""

    nu_rule: str = "ue_half"      # 'ue_half': theta_u/2; 'min_half': min(theta_b, theta_u)/2
    delta_bs: float = 0.05        # per-step beam-selection cap
    delta_ma: float = 0.05        # per-step misalignment cap
    delta_d: float = 0.1          # ranging termination accuracy [m, rms]
    delta_psi: float = 0.02       # angle termination accuracy [rad, rms]
    eps_bs: float = 0.1           # optimization constraint cap
    eps_ma: float = 0.1

    def __post_init__(self):
        for name in ("delta_bs", "delta_ma", "eps_bs", "eps_ma"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in (0, 1]")
        if self.delta_d <= 0.0 or self.delta_psi <= 0.0:
            raise ValueError("termination accuracies must be positive")
        if self.nu_rule not in ("min_half", "ue_half"):
            raise ValueError(f"unknown nu rule: {self.nu_rule}")


def nu_threshold(theta_b: float, theta_u: float, rule: str = "ue_half") -> float:
    """Beam-pair alignment threshold nu(theta_b, theta_u).

    Default: the pair stays aligned while the pointing error sits inside
    the UE main lobe (theta_u / 2); 'min_half' instead requires it inside
    the narrower of the two lobes.
    """
    if rule == "ue_half":
        return 0.5 * theta_u
    if rule == "min_half":
        return 0.5 * min(theta_b, theta_u)
    raise ValueError(f"unknown nu rule: {rule}")


# ---------------------------------------------------------------------------
# Observation energy and variance profiles (vectorized over positions)
# ---------------------------------------------------------------------------

def observation_energy(x, beta: float, cfg: NetworkConfig,
                       observation_time: float | None = None):
    """zeta over ground positions x; observation_time defaults to (1-beta)*T_F."""
    x = np.asarray(x, dtype=float)
    if observation_time is None:
        observation_time = (1.0 - beta) * cfg.t_frame
    if observation_time < 0.0:
        raise ValueError("observation time must be non-negative")
    z2 = x * x + cfg.h_b * cfg.h_b
    alpha = np.where(x <= cfg.d_s, cfg.alpha_los, cfg.alpha_nlos)
    atten = z2 ** (-0.5 * alpha)
    out = 2.0 * cfg.k_pl * cfg.p_t * atten * observation_time / cfg.noise_psd
    return out if out.ndim else float(out)


def _ranging_curvature(cfg: NetworkConfig, pilot_bandwidth: float | None = None) -> float:
    b = cfg.pilot_bandwidth if pilot_bandwidth is None else pilot_bandwidth
    return b * b * math.pi * math.pi / (3.0 * SPEED_OF_LIGHT ** 2)


@lru_cache(maxsize=512)
def _aoa_factor(m: int) -> float:
    return aoa_fisher_factor(UlaArray(m))


def ranging_variance(x, gamma_b: float, gamma_u: float, beta: float,
                     cfg: NetworkConfig, observation_time: float | None = None,
                     pilot_bandwidth: float | None = None):
    """sigma_d^2 over positions; inf when the observation time is zero."""
    zeta = observation_energy(x, beta, cfg, observation_time)
    info = zeta * gamma_b * gamma_u * _ranging_curvature(cfg, pilot_bandwidth)
    with np.errstate(divide="ignore"):
        out = np.where(info > 0.0, 1.0 / np.maximum(info, 1e-300), np.inf)
    return out if out.ndim else float(out)


def sounding_elements(theta_u: float, cfg: NetworkConfig) -> int:
    """Aperture available to angle estimation: the beam's element count,
    capped at the calibrated sounding subarray size."""
    return min(beamwidth_to_elements(theta_u), cfg.ue_sounding_elements)


def aoa_variance(x, gamma_b: float, theta_u: float, beta: float,
                 cfg: NetworkConfig, observation_time: float | None = None,
                 elements: int | None = None):
    """sigma_psi^2 over positions; inf for a single-element aperture.

    The default observation window is the angle-sounding time clipped to
    the localization phase (so beta -> 1 starves it to zero). ``elements``
    overrides the estimation aperture (the access loop sweeps with the
    full beam aperture rather than the in-service sounding panel).
    """
    m = sounding_elements(theta_u, cfg) if elements is None else elements
    factor = _aoa_factor(m)
    if factor == 0.0:
        shape = np.shape(np.asarray(x, dtype=float))
        return np.full(shape, np.inf) if shape else np.inf
    if observation_time is None:
        observation_time = min(cfg.aoa_sounding_time, (1.0 - beta) * cfg.t_frame)
    zeta = observation_energy(x, beta, cfg, observation_time)
    info = zeta * gamma_b * factor
    with np.errstate(divide="ignore"):
        out = np.where(info > 0.0, 1.0 / np.maximum(info, 1e-300), np.inf)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Point bounds (public operations)
# ---------------------------------------------------------------------------

def crlb_distance(geom: UserGeometry, theta_b: float, theta_u: float,
                  beta: float, cfg: NetworkConfig) -> float:
    """Ranging error variance for the beam pair (theta_b, theta_u)."""
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must be in [0, 1); beta = 1 leaves no "
                         "localization resources (infinite variance)")
    gamma_b = main_lobe_gain(theta_b, cfg)
    gamma_u = main_lobe_gain(theta_u, cfg)
    return float(ranging_variance(geom.d, gamma_b, gamma_u, beta, cfg))


def crlb_aoa(geom: UserGeometry, theta_b: float, theta_u: float,
             beta: float, cfg: NetworkConfig) -> float:
    """Arrival-angle error variance; the estimation aperture follows
    theta_u up to the sounding-subarray cap."""
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must be in [0, 1)")
    if sounding_elements(theta_u, cfg) < 2:
        raise UnidentifiableAngleError(
            "a single-element aperture carries no angle information")
    gamma_b = main_lobe_gain(theta_b, cfg)
    return float(aoa_variance(geom.d, gamma_b, theta_u, beta, cfg))


def localization_bounds(geom: UserGeometry, theta_b: float, theta_u: float,
                        beta: float, cfg: NetworkConfig) -> LocalizationBounds:
    return LocalizationBounds(
        sigma_d2=crlb_distance(geom, theta_b, theta_u, beta, cfg),
        sigma_psi2=crlb_aoa(geom, theta_b, theta_u, beta, cfg),
        zeta=float(observation_energy(geom.d, beta, cfg)),
    )


# ---------------------------------------------------------------------------
# Error probabilities
# ---------------------------------------------------------------------------

def beam_selection_profile(x, sigma_d, d_left: float, d_right: float):
    """P(estimate outside [d_left, d_right]) for Gaussian estimates centered
    at positions x with std sigma_d (elementwise; handles 0 and inf)."""
    x = np.asarray(x, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma_d, dtype=float), x.shape).copy()
    out = np.empty_like(x)
    zero = sigma == 0.0
    infinite = np.isinf(sigma)
    regular = ~(zero | infinite)
    if np.any(regular):
        s = sigma[regular]
        xs = x[regular]
        out[regular] = (1.0 - qfunc((d_left - xs) / s)
                        + qfunc((d_right - xs) / s))
    if np.any(zero):
        xs = x[zero]
        boundary = (xs == d_left) | (xs == d_right)
        inside = (xs > d_left) & (xs < d_right)
        out[zero] = np.where(boundary, 0.5, np.where(inside, 0.0, 1.0))
    out[infinite] = 1.0
    return out


def p_beam_selection(d: float, sigma_d2: float, beam: BeamEntry) -> float:
    """Probability the ranging estimate leaves the serving beam's interval."""
    if not beam.d_left <= d <= beam.d_right:
        raise ValueError("true position must lie inside the beam interval")
    if sigma_d2 < 0.0:
        raise ValueError("variance must be non-negative")
    sigma = math.sqrt(sigma_d2)
    return float(beam_selection_profile(np.asarray([d]), sigma,
                                        beam.d_left, beam.d_right)[0])


def p_misalignment(sigma_psi2: float, nu: float) -> float:
    """2 Q(nu / sigma_psi); 1 when nu == 0, 0 in the perfect-estimate limit."""
    if nu < 0.0:
        raise ValueError("threshold must be non-negative")
    if sigma_psi2 < 0.0:
        raise ValueError("variance must be non-negative")
    if nu == 0.0:
        return 1.0
    if sigma_psi2 == 0.0:
        return 0.0
    if math.isinf(sigma_psi2):
        return 1.0
    return float(2.0 * qfunc(nu / math.sqrt(sigma_psi2)))


# ---------------------------------------------------------------------------
# Cell-averaged errors
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _cell_grid(k: int, cfg: NetworkConfig):
    """Quadrature grid over (cell size, position-within-beam) for row k.

    Returns (da_nodes, da_weights, theta_k, bounds, x, pos_w) with shapes
    (nc,), (nc,), (nc,), (nc, k+1), (nc, k, nb), (nc, k, nb); pos_w already
    includes the uniform 1/d_a position density. Beam panels straddling
    the LOS-ball edge are split there (the variance profiles jump).
    """
    da_nodes, da_weights = exponential_cell_nodes(
        2.0 * cfg.bs_density, CELL_NODES, split=cfg.d_s)
    theta_k = np.arctan2(da_nodes, cfg.h_b) / k
    angles = np.arange(k + 1) * theta_k[:, None]
    bounds = cfg.h_b * np.tan(angles)
    bounds[:, 0] = 0.0
    bounds[:, -1] = da_nodes
    x, w = split_panel(bounds[:, :-1], bounds[:, 1:], cfg.d_s, BEAM_NODES)
    pos_w = w / da_nodes[:, None, None]
    for arr in (da_nodes, da_weights, theta_k, bounds, x, pos_w):
        arr.setflags(write=False)
    return da_nodes, da_weights, theta_k, bounds, x, pos_w


def _check_finite(value: float, what: str) -> float:
    if not np.isfinite(value):
        raise NumericError(f"{what} quadrature produced a non-finite value")
    return value


def avg_beam_selection_error(k: int, beta: float, theta_u: float,
                             cfg: NetworkConfig, *,
                             sigma_d2_override: float | None = None) -> float:
    """Beam-selection error averaged over cell sizes and user positions.

    For k == 1 the single beam spans the whole cell and estimates are
    clamped to the cell support, so the error is exactly zero.
    """
    if k < 1:
        raise ValueError("dictionary size must be >= 1")
    if k == 1:
        return 0.0
    if beta == 1.0 and sigma_d2_override is None:
        return 1.0  # no localization resources: estimates carry no information
    da_nodes, da_weights, theta_k, bounds, x, pos_w = _cell_grid(k, cfg)
    gamma_u = main_lobe_gain(theta_u, cfg)
    total = 0.0
    for i in range(da_nodes.size):
        gamma_b = main_lobe_gain(float(theta_k[i]), cfg)
        if sigma_d2_override is None:
            sigma = np.sqrt(ranging_variance(x[i], gamma_b, gamma_u, beta, cfg))
        else:
            sigma = np.full(x[i].shape, math.sqrt(sigma_d2_override))
        cell_val = 0.0
        for j in range(k):
            p = beam_selection_profile(x[i, j], sigma[j],
                                       float(bounds[i, j]), float(bounds[i, j + 1]))
            cell_val += float(np.dot(p, pos_w[i, j]))
        total += da_weights[i] * cell_val
    return _check_finite(min(max(total, 0.0), 1.0), "beam-selection")


def avg_misalignment_error(k: int, theta_u: float, beta: float,
                           cfg: NetworkConfig, *,
                           sigma_psi2_override: float | None = None,
                           nu_rule: str = "ue_half") -> float:
    """Misalignment error averaged over cell sizes, positions, and arrival
    angles (the angle average is trivial: the bound is angle-independent)."""
    if k < 1:
        raise ValueError("dictionary size must be >= 1")
    if beta == 1.0 and sigma_psi2_override is None:
        return 1.0
    da_nodes, da_weights, theta_k, _, x, pos_w = _cell_grid(k, cfg)
    total = 0.0
    for i in range(da_nodes.size):
        nu = nu_threshold(float(theta_k[i]), theta_u, nu_rule)
        if nu == 0.0:
            total += da_weights[i]
            continue
        gamma_b = main_lobe_gain(float(theta_k[i]), cfg)
        if sigma_psi2_override is None:
            var = aoa_variance(x[i], gamma_b, theta_u, beta, cfg)
        else:
            var = np.full(x[i].shape, float(sigma_psi2_override))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(var > 0.0, nu / np.sqrt(var), np.inf)
        p = np.where(np.isinf(var), 1.0, 2.0 * qfunc(ratio))
        p = np.where(var == 0.0, 0.0, p)
        total += da_weights[i] * float(np.sum(p * pos_w[i]))
    return _check_finite(min(max(total, 0.0), 1.0), "misalignment")
