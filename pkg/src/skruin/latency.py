"""Required initial budget and recharge latency.

The budget needed to keep the outage probability over ``tau`` slots at or
below ``epsilon`` is read off the solved outage surface. Refilling that
budget by key generation alone takes ``b0 / E[theta]`` channel
realizations on average; with one key-generation and one transmission
block per slot, that is half as many slots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channels
from .channels import LinkPair
from .errors import DomainError, GridRangeError
from .finite_time import SurvivalSurface
from .montecarlo import DEFAULT_SEED, LatencySummary, simulate_recharge_latency

REALIZATIONS_PER_SLOT = 2


@dataclass(frozen=True)
class LatencyReport:
    required_budget: float
    mean_latency_realizations: float
    mean_latency_slots: float
    epsilon: float | None = None
    tau: int | None = None

    def __post_init__(self):
        if self.required_budget < 0:
            raise DomainError("required budget must be nonnegative")


def required_budget(surface: SurvivalSurface, tau: int, epsilon: float) -> float:
    """Smallest budget whose outage probability over ``tau`` slots is at most ``epsilon``.

    The bracketing grid points are interpolated linearly. Returns 0 when
    even an arbitrarily small positive budget meets the target.

    Raises:
        GridRangeError: ``tau`` exceeds the surface horizon, or the target is
            not met anywhere on the grid.
    """
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if int(tau) != tau or not 0 <= tau <= surface.t_max:
        raise GridRangeError(f"tau={tau} outside 0..{surface.t_max}")
    g = surface.grid
    psi = 1.0 - surface.values[int(tau), g.n_neg - 1:]
    psi[0] = 1.0 - surface.zero_plus[int(tau)]
    if psi[0] <= epsilon:
        return 0.0
    below = np.flatnonzero(psi <= epsilon)
    if below.size == 0:
        raise GridRangeError(
            f"outage {psi[-1]:.3e} at b_max={g.b_max} still exceeds epsilon={epsilon:g}; widen the grid"
        )
    j = int(below[0])
    frac = (psi[j - 1] - epsilon) / (psi[j - 1] - psi[j])
    return float(g.step * (j - 1 + frac))


def average_latency(link: LinkPair, b0: float) -> LatencyReport:
    """Mean recharge latency ``b0 / E[theta]``, in realizations and in slots."""
    if b0 < 0:
        raise DomainError("b0 must be nonnegative")
    real = b0 / channels.mean_skg_rate(link)
    return LatencyReport(float(b0), real, real / REALIZATIONS_PER_SLOT)


def latency_report(surface: SurvivalSurface, link: LinkPair, tau: int, epsilon: float) -> LatencyReport:
    b0 = required_budget(surface, tau, epsilon)
    rep = average_latency(link, b0)
    return LatencyReport(rep.required_budget, rep.mean_latency_realizations, rep.mean_latency_slots,
                         epsilon, int(tau))


def latency_mc(link: LinkPair, b0: float, trials: int = 10**5, seed: int = DEFAULT_SEED, **kw) -> LatencySummary:
    """Monte Carlo hitting time of ``b0`` bits under key generation only."""
    return simulate_recharge_latency(link, b0, trials, seed, **kw)
