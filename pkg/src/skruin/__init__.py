"""Outage, ultimate-ruin and recharge-latency analysis for secret-key budgets.

Key bits are generated from a fading channel and spent as one-time pad on
data transmission. The package computes the per-slot net key usage, the
finite-horizon outage probability of the key budget, the ultimate ruin
probability under random transmission, the associated bounds and the
required initial budget, with a Monte Carlo simulator as cross-check.
"""

from ._backend import BACKEND
from .bounds import (
    AdjustmentCoefficient,
    adjustment_coefficient,
    bound_psi,
    bound_psi_hat,
    lundberg_bound,
)
from .channels import ChannelModel, Family, LinkPair, mean_skg_rate, mean_tx_rate, rate_moment
from .errors import (
    ConfigurationError,
    DomainError,
    GridRangeError,
    NumericalError,
    PreconditionError,
    SkruinError,
    TruncationError,
)
from .finite_time import GridSpec, SurvivalSurface, outage_at, solve_survival
from .latency import LatencyReport, average_latency, latency_mc, latency_report, required_budget
from .montecarlo import (
    LatencySummary,
    TrajectoryStats,
    simulate_outage,
    simulate_outage_many,
    simulate_recharge_latency,
)
from .net_usage import (
    GriddedDistribution,
    SchemeKind,
    SchemeSpec,
    build_net_usage,
    critical_tx_prob,
    net_usage_mean,
)
from .ultimate import UltimateRuinCurve, solve_ultimate_ruin, ultimate_ruin_mc_estimate

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AdjustmentCoefficient",
    "ChannelModel",
    "ConfigurationError",
    "DomainError",
    "Family",
    "GridRangeError",
    "GridSpec",
    "GriddedDistribution",
    "LatencyReport",
    "LatencySummary",
    "LinkPair",
    "NumericalError",
    "PreconditionError",
    "SchemeKind",
    "SchemeSpec",
    "SkruinError",
    "SurvivalSurface",
    "TrajectoryStats",
    "TruncationError",
    "UltimateRuinCurve",
    "adjustment_coefficient",
    "average_latency",
    "bound_psi",
    "bound_psi_hat",
    "build_net_usage",
    "critical_tx_prob",
    "latency_mc",
    "latency_report",
    "lundberg_bound",
    "mean_skg_rate",
    "mean_tx_rate",
    "net_usage_mean",
    "outage_at",
    "rate_moment",
    "required_budget",
    "simulate_outage",
    "simulate_outage_many",
    "simulate_recharge_latency",
    "solve_survival",
    "solve_ultimate_ruin",
    "ultimate_ruin_mc_estimate",
]
