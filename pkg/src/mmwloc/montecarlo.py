"""Ground-truth simulator for every analytical expression in the package.

Trials run in fixed-size batches, each batch on its own counter-derived
substream (SeedSequence spawn key = batch index), so results are
bit-identical for a given (seed, config) regardless of how batches are
scheduled. Aggregation uses exact integer success counts.

The coverage simulator realizes the same conditional model the analysis
integrates: a user at a uniform position inside the (drawn or given)
cell, estimate draws from the localization bounds, branch gains chosen by
the realized beam-selection/misalignment events, and interferers from a
one-dimensional deployment beyond the serving ground distance with
side-to-side lobe gains and per-link Nakagami power fading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .antenna import main_lobe_gain, sidelobe_gain
from .config import NetworkConfig
from .coverage import CoverageQuery, CoverageResult
from .geometry import UserGeometry
from .localization import aoa_variance, ranging_variance
from .numerics import kahan_sum

BATCH_SIZE = 8192


@dataclass(frozen=True)
class Realization:
    """One deployment draw around a typical user at the origin."""

    seed: int
    bs_positions: np.ndarray   # sorted ground coordinates on [-W, W]
    serving_index: int
    user: UserGeometry
    fading: np.ndarray         # per-BS power draws, unit mean

    @property
    def serving_distance(self) -> float:
        return abs(float(self.bs_positions[self.serving_index]))


def _batch_streams(seed: int, trials: int):
    """Yield (rng, batch_size) pairs with deterministic substreams."""
    n_batches = (trials + BATCH_SIZE - 1) // BATCH_SIZE
    for b in range(n_batches):
        size = min(BATCH_SIZE, trials - b * BATCH_SIZE)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(b,)))
        yield rng, size


def window_half_width(cfg: NetworkConfig) -> float:
    """Deployment window: wide enough that truncated interference is < 0.1%."""
    return max(10.0 / cfg.bs_density, cfg.d_s + 500.0)


def sample_realization(cfg: NetworkConfig, seed: int,
                       half_width: float | None = None) -> Realization:
    """Draw a deployment on [-W, W] plus fading, user at the origin."""
    w = window_half_width(cfg) if half_width is None else half_width
    if w < 10.0 / cfg.bs_density:
        import warnings
        warnings.warn("window half-width below 10/lambda: truncation bias likely")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    count = rng.poisson(2.0 * cfg.bs_density * w)
    positions = np.sort(rng.uniform(-w, w, size=count))
    if count == 0:
        raise ValueError("empty deployment draw; enlarge the window")
    serving = int(np.argmin(np.abs(positions)))
    shapes = np.where(np.abs(positions) <= cfg.d_s, cfg.n_los, cfg.n_nlos)
    fading = rng.standard_gamma(shapes) / shapes
    user = UserGeometry(d=abs(float(positions[serving])), h_b=cfg.h_b)
    return Realization(seed=seed, bs_positions=positions, serving_index=serving,
                       user=user, fading=fading)


def _interference_sums(rng, d: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    """Per-trial interference power sums from interferers beyond d."""
    w = window_half_width(cfg)
    span = np.maximum(w - d, 0.0)
    counts = rng.poisson(2.0 * cfg.bs_density * span)
    total = int(counts.sum())
    out = np.zeros(d.shape[0])
    if total == 0:
        return out
    owner = np.repeat(np.arange(d.shape[0]), counts)
    y = d[owner] + rng.uniform(0.0, 1.0, size=total) * span[owner]
    shapes = np.where(y <= cfg.d_s, cfg.n_los, cfg.n_nlos)
    fade = rng.standard_gamma(shapes) / shapes
    alpha = np.where(y <= cfg.d_s, cfg.alpha_los, cfg.alpha_nlos)
    q2 = y * y + cfg.h_b * cfg.h_b
    g2 = sidelobe_gain(cfg) ** 2
    powers = cfg.p_t * cfg.k_pl * g2 * fade * q2 ** (-0.5 * alpha)
    return np.bincount(owner, weights=powers, minlength=d.shape[0])


def simulate_laplace(serving_d: float, weight: float, cfg: NetworkConfig,
                     trials: int, seed: int) -> tuple:
    """Estimate E[exp(-weight * sum_i f_i q_i^(-alpha_i))] beyond serving_d.

    The weight plays the role of the scaled threshold times the interferer
    gain product; used to validate the analytical Laplace exponents.
    """
    values = []
    for rng, size in _batch_streams(seed, trials):
        d = np.full(size, float(serving_d))
        sums = _interference_sums(rng, d, cfg)
        g2 = sidelobe_gain(cfg) ** 2
        values.append(np.exp(-weight * sums / (cfg.p_t * cfg.k_pl * g2)))
    values = np.concatenate(values)
    mean = kahan_sum(values) / trials
    stderr = float(np.std(values, ddof=1) / math.sqrt(trials))
    return mean, stderr


def _row_geometry(d_a: np.ndarray, k: int, cfg: NetworkConfig):
    """Beam boundaries (n, k+1) and beamwidth (n,) for per-trial cells."""
    theta_k = np.arctan2(d_a, cfg.h_b) / k
    angles = np.arange(k + 1) * theta_k[:, None]
    bounds = cfg.h_b * np.tan(angles)
    bounds[:, 0] = 0.0
    bounds[:, -1] = d_a
    return bounds, theta_k


def _containing_beam(d: np.ndarray, theta_k: np.ndarray, k: int,
                     cfg: NetworkConfig) -> np.ndarray:
    """1-based beam index per trial; boundary ties resolve to the left beam.

    Uses the angular construction directly: beam j covers ground angles
    ((j-1)*theta_k, j*theta_k]."""
    angle = np.arctan2(d, cfg.h_b)
    return np.clip(np.ceil(angle / theta_k).astype(int), 1, k)


def _nu_vector(theta_k: np.ndarray, theta_u: float, rule: str) -> np.ndarray:
    if rule == "min_half":
        return 0.5 * np.minimum(theta_k, theta_u)
    if rule == "ue_half":
        return np.full_like(theta_k, 0.5 * theta_u)
    raise ValueError(f"unknown nu rule: {rule}")


def simulate_coverage(query: CoverageQuery, cfg: NetworkConfig, trials: int,
                      seed: int, nu_rule: str = "ue_half") -> CoverageResult:
    """Empirical P(SINR >= T) under the full error-aware branch logic."""
    if trials < 1:
        raise ValueError("need at least one trial")
    successes = 0
    branch_hits = {"aligned": 0, "misaligned": 0, "beam_error": 0}
    gamma_u = main_lobe_gain(query.theta_u, cfg)
    g = sidelobe_gain(cfg)
    for rng, size in _batch_streams(seed, trials):
        if query.cell_size is not None:
            d_a = np.full(size, float(query.cell_size))
        elif query.j is not None:
            d_a = np.full(size, cfg.mean_cell_size)
        else:
            d_a = rng.exponential(cfg.mean_cell_size, size=size)
        bounds, theta_k = _row_geometry(d_a, query.k, cfg)
        if query.j is not None:
            d_left = bounds[:, query.j - 1]
            d_right = bounds[:, query.j]
            d = d_left + rng.uniform(0.0, 1.0, size=size) * (d_right - d_left)
        else:
            d = rng.uniform(0.0, 1.0, size=size) * d_a
            idx = _containing_beam(d, theta_k, query.k, cfg)
            d_left = bounds[np.arange(size), idx - 1]
            d_right = bounds[np.arange(size), idx]

        gamma_b = (cfg.g0 * (2.0 * math.pi - (2.0 * math.pi - theta_k)
                             * cfg.eps_sidelobe) / theta_k)
        sigma_d2 = ranging_variance(d, gamma_b, gamma_u, query.beta, cfg)
        sigma_psi2 = aoa_variance(d, gamma_b, query.theta_u, query.beta, cfg)

        if query.k == 1:
            bs_error = np.zeros(size, dtype=bool)
            rng.standard_normal(size)  # keep the stream layout k-independent
        else:
            d_hat = d + np.sqrt(sigma_d2) * rng.standard_normal(size)
            bs_error = (d_hat < d_left) | (d_hat > d_right)
        nu = _nu_vector(theta_k, query.theta_u, nu_rule)
        psi_err = np.abs(np.sqrt(sigma_psi2) * rng.standard_normal(size))
        ma_error = psi_err >= nu

        aligned = ~bs_error & ~ma_error
        misaligned = ~bs_error & ma_error
        gain = np.where(bs_error, g * g,
                        np.where(ma_error, gamma_b * g, gamma_b * gamma_u))

        alpha_s = np.where(d <= cfg.d_s, cfg.alpha_los, cfg.alpha_nlos)
        shape_s = np.where(d <= cfg.d_s, cfg.n_los, cfg.n_nlos)
        fade = rng.standard_gamma(shape_s) / shape_s
        z2 = d * d + cfg.h_b * cfg.h_b
        signal = cfg.p_t * cfg.k_pl * gain * fade * z2 ** (-0.5 * alpha_s)
        interference = _interference_sums(rng, d, cfg)
        sinr = signal / (cfg.noise_power + interference)
        ok = sinr >= query.threshold
        successes += int(ok.sum())
        branch_hits["aligned"] += int((ok & aligned).sum())
        branch_hits["misaligned"] += int((ok & misaligned).sum())
        branch_hits["beam_error"] += int((ok & bs_error).sum())
    p = successes / trials
    stderr = math.sqrt(max(p * (1.0 - p), 0.0) / trials)
    breakdown = {k_: v / trials for k_, v in branch_hits.items()}
    return CoverageResult(probability=p, method="montecarlo",
                          breakdown=breakdown, stderr=stderr)


def simulate_error_probabilities(k: int, beta: float, theta_u: float,
                                 cfg: NetworkConfig, trials: int, seed: int,
                                 nu_rule: str = "ue_half", *,
                                 sigma_override: float | None = None) -> dict:
    """Empirical beam-selection and misalignment frequencies.

    Mirrors the averaged analytical errors: cells from the cell-size
    distribution, users uniform inside, Gaussian estimate draws from the
    per-position bounds. Row 1 never misselects (single clamped beam).
    """
    if k < 1 or trials < 1:
        raise ValueError("need k >= 1 and trials >= 1")
    bs_count = 0
    ma_count = 0
    gamma_u = main_lobe_gain(theta_u, cfg)
    for rng, size in _batch_streams(seed, trials):
        d_a = rng.exponential(cfg.mean_cell_size, size=size)
        bounds, theta_k = _row_geometry(d_a, k, cfg)
        d = rng.uniform(0.0, 1.0, size=size) * d_a
        idx = _containing_beam(d, theta_k, k, cfg)
        d_left = bounds[np.arange(size), idx - 1]
        d_right = bounds[np.arange(size), idx]
        gamma_b = (cfg.g0 * (2.0 * math.pi - (2.0 * math.pi - theta_k)
                             * cfg.eps_sidelobe) / theta_k)
        if sigma_override is None:
            sigma_d = np.sqrt(ranging_variance(d, gamma_b, gamma_u, beta, cfg))
            sigma_psi = np.sqrt(aoa_variance(d, gamma_b, theta_u, beta, cfg))
        else:
            sigma_d = np.full(size, math.sqrt(sigma_override))
            sigma_psi = np.full(size, math.sqrt(sigma_override))
        if k > 1:
            d_hat = d + sigma_d * rng.standard_normal(size)
            bs_count += int(((d_hat < d_left) | (d_hat > d_right)).sum())
        else:
            rng.standard_normal(size)
        nu = _nu_vector(theta_k, theta_u, nu_rule)
        psi_err = np.abs(sigma_psi * rng.standard_normal(size))
        ma_count += int((psi_err >= nu).sum())
    p_bs = bs_count / trials
    p_ma = ma_count / trials
    return {
        "p_bs": p_bs,
        "p_ma": p_ma,
        "stderr_bs": math.sqrt(max(p_bs * (1.0 - p_bs), 0.0) / trials),
        "stderr_ma": math.sqrt(max(p_ma * (1.0 - p_ma), 0.0) / trials),
    }
