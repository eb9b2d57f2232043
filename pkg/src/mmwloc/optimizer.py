"""Two-stage rate-coverage optimization: inner resource split, outer beamwidth.

For each candidate dictionary size the inner stage grid-searches the
partition factor beta under the averaged beam-selection / misalignment
caps; the outer stage takes the best feasible row. The UE beamwidth per
candidate is the one the access procedure would settle on: the thinnest
grid beamwidth whose misalignment probability, at the reference in-cell
geometry, stays under the per-step cap. Since the angle error adapts to
the noise level, so does the beam pairing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .antenna import main_lobe_gain
from .config import NetworkConfig
from .coverage import rate_coverage
from .dictionary import row_beamwidth
from .initial_access import DEFAULT_UE_GRID, select_ue_beam
from .localization import (
    aoa_variance,
    avg_beam_selection_error,
    avg_misalignment_error,
)


def ue_beamwidth_for_dictionary(k: int, cfg: NetworkConfig,
                                grid: tuple = DEFAULT_UE_GRID,
                                cell_size: float | None = None,
                                beta_ref: float = 0.5,
                                delta_ma: float = 0.05) -> float:
    """UE beamwidth paired with dictionary size k.

    Evaluates the angle-error bound at the reference geometry (mid-cell of
    the mean cell) and returns the thinnest grid beamwidth keeping the
    misalignment probability under ``delta_ma`` there.
    """
    if k < 1:
        raise ValueError("dictionary size must be >= 1")
    d_a = cell_size if cell_size is not None else cfg.mean_cell_size
    theta_k = row_beamwidth(d_a, cfg.h_b, k)
    gamma_b = main_lobe_gain(theta_k, cfg)
    x_ref = 0.5 * d_a
    sigma2 = float(aoa_variance(x_ref, gamma_b, max(grid), beta_ref, cfg))
    return select_ue_beam(theta_k, sigma2, delta_ma, grid)


def default_beta_grid(step: float = 0.02) -> tuple:
    """The inner-search grid over (0, 1]."""
    n = int(round(1.0 / step))
    return tuple(round(i * step, 10) for i in range(1, n + 1))


@dataclass(frozen=True)
class OptimizationSpec:
    r0: float = 1.0e8                       # effective-rate target [bit/s]
    eps_bs: float = 0.1                     # averaged beam-selection cap
    eps_ma: float = 0.1                     # averaged misalignment cap
    k_candidates: tuple = (1, 2, 4, 8, 16, 32)
    beta_grid: tuple = field(default_factory=default_beta_grid)
    theta_u: float | None = None            # None: per-k pairing rule
    nu_rule: str = "ue_half"

    def __post_init__(self):
        if self.r0 <= 0.0:
            raise ValueError("rate target must be positive")
        if not 0.0 < self.eps_bs < 1.0 or not 0.0 < self.eps_ma < 1.0:
            raise ValueError("constraint caps must be in (0, 1)")
        if not self.k_candidates or not self.beta_grid:
            raise ValueError("candidate grids must be non-empty")


@dataclass(frozen=True)
class BetaOptimum:
    """Inner-stage result for one dictionary size."""

    k: int
    theta_u: float
    feasible: bool
    beta_star: float | None
    objective: float | None
    p_bs: float | None
    p_ma: float | None
    feasible_count: int


@dataclass(frozen=True)
class OptimizationResult:
    feasible: bool
    theta_star: float | None
    k_star: int | None
    beta_star: float | None
    objective: float | None
    feasible_set_size: int
    per_k_table: tuple


def optimize_beta(k: int, spec: OptimizationSpec, cfg: NetworkConfig) -> BetaOptimum:
    """Best feasible beta for dictionary size k; ties go to the larger beta
    (more data resources once localization constraints are met)."""
    theta_u = (spec.theta_u if spec.theta_u is not None
               else ue_beamwidth_for_dictionary(k, cfg))
    best_beta = None
    best_obj = -1.0
    best_errors = (None, None)
    feasible_count = 0
    for beta in spec.beta_grid:
        p_bs = avg_beam_selection_error(k, beta, theta_u, cfg)
        p_ma = avg_misalignment_error(k, theta_u, beta, cfg,
                                      nu_rule=spec.nu_rule)
        if p_bs > spec.eps_bs or p_ma > spec.eps_ma:
            continue
        feasible_count += 1
        obj = rate_coverage(spec.r0, beta, k, theta_u, cfg, nu_rule=spec.nu_rule)
        if obj >= best_obj:
            best_obj = obj
            best_beta = beta
            best_errors = (p_bs, p_ma)
    if best_beta is None:
        return BetaOptimum(k=k, theta_u=theta_u, feasible=False, beta_star=None,
                           objective=None, p_bs=None, p_ma=None, feasible_count=0)
    return BetaOptimum(k=k, theta_u=theta_u, feasible=True, beta_star=best_beta,
                       objective=best_obj, p_bs=best_errors[0],
                       p_ma=best_errors[1], feasible_count=feasible_count)


def optimize_beamwidth(spec: OptimizationSpec, cfg: NetworkConfig) -> OptimizationResult:
    """Outer stage: the best feasible (k, beta) pair across candidates."""
    rows = tuple(optimize_beta(k, spec, cfg) for k in spec.k_candidates)
    feasible_rows = [r for r in rows if r.feasible]
    total_feasible = sum(r.feasible_count for r in rows)
    if not feasible_rows:
        return OptimizationResult(feasible=False, theta_star=None, k_star=None,
                                  beta_star=None, objective=None,
                                  feasible_set_size=0, per_k_table=rows)
    best = max(feasible_rows, key=lambda r: (r.objective, -r.k))
    theta_star = row_beamwidth(cfg.mean_cell_size, cfg.h_b, best.k)
    return OptimizationResult(feasible=True, theta_star=theta_star,
                              k_star=best.k, beta_star=best.beta_star,
                              objective=best.objective,
                              feasible_set_size=total_feasible,
                              per_k_table=rows)
