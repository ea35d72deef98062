"""Closed-form and Monte Carlo upper bounds on the outage probability.

Finite horizon (partial sums ``S_t = Z_1 + ... + Z_t``):

* ``Psi_t(b0) = E[max(S_t, 0)] / b0``, estimated by sampling ``S_t``;
* ``Psi_hat_t(b0) = sqrt(t Var(Z) + t^2 E[Z]^2) / b0``, which dominates it.

Infinite horizon: ``psi(b0) <= exp(-r* b0)`` with ``r*`` the positive root of
``E[exp(r Z)] = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError, NumericalError, PreconditionError
from .net_usage import GriddedDistribution

RESIDUAL_TOL = 1e-10
R_LO = 1e-8
R_HI_START = 0.1
TRUNCATION_BIAS_TOL = 1e-6
_MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class AdjustmentCoefficient:
    r_star: float
    residual: float

    def __post_init__(self):
        if not self.r_star > 0:
            raise DomainError("adjustment coefficient must be positive")


@dataclass(frozen=True)
class BoundEstimate:
    value: float
    se: float


def bound_psi_hat(dist: GriddedDistribution, t: int, b0: float) -> float:
    """Second-moment bound ``sqrt(t Var(Z) + t^2 E[Z]^2) / b0``; may exceed 1."""
    if not b0 > 0:
        raise DomainError(f"b0 must be positive, got {b0}")
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    m, v = dist.mean(), dist.var()
    return math.sqrt(t * v + t * t * m * m) / b0


def bound_psi(
    dist: GriddedDistribution, t: int, b0: float, trials: int = 10**6, seed: int = 0, chunk: int = 1 << 18
) -> BoundEstimate:
    """Monte Carlo estimate of ``E[max(S_t, 0)] / b0`` with its standard error.

    ``S_t`` is built from inverse-CDF draws of the gridded ``Z``.
    """
    if not b0 > 0:
        raise DomainError(f"b0 must be positive, got {b0}")
    if t < 0 or trials < 1:
        raise DomainError("need t >= 0 and trials >= 1")
    if t == 0:
        return BoundEstimate(0.0, 0.0)
    rng = np.random.default_rng(seed)
    total = total_sq = 0.0
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        s = np.zeros(n)
        for _ in range(t):
            s += dist.sample(rng, n)
        pos = np.maximum(s, 0.0)
        total += pos.sum()
        total_sq += (pos * pos).sum()
        done += n
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    return BoundEstimate(float(mean / b0), math.sqrt(var / trials) / b0)


def log_mgf(dist: GriddedDistribution, r: float) -> float:
    """``g(r) = ln E[exp(r Z)]`` on the gridded distribution."""
    m = dist.mgf(r)
    if not (m > 0 and math.isfinite(m)):
        raise NumericalError(f"moment generating function not finite at r={r}")
    return math.log(m)


def adjustment_coefficient(dist: GriddedDistribution) -> AdjustmentCoefficient:
    """Positive root ``r*`` of ``E[exp(r Z)] = 1``.

    Raises:
        PreconditionError: ``E[Z] >= 0`` (the budget is exhausted almost
            surely and no positive root exists) or ``Z`` never exceeds 0.
        NumericalError: the root misses the residual tolerance.
    """
    mean = dist.mean()
    if mean >= 0:
        raise PreconditionError(
            f"E[Z] = {mean:.6g} >= 0: ultimate ruin is certain and no positive adjustment coefficient exists"
        )
    if not np.any(dist.pdf[dist.z > 0] > 0):
        raise PreconditionError("Z has no mass above 0: ruin is impossible and no adjustment coefficient exists")
    g = lambda r: log_mgf(dist, r)  # noqa: E731
    if g(R_LO) >= 0:
        raise NumericalError("g(r) is not negative just above 0; drift too close to zero for the grid")
    r_hi = R_HI_START
    for _ in range(_MAX_DOUBLINGS):
        if g(r_hi) > 0:
            break
        r_hi *= 2.0
    else:
        raise NumericalError("could not bracket the adjustment coefficient")
    r = optimize.brentq(g, R_LO, r_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    residual = abs(dist.mgf(r) - 1.0)
    if residual > RESIDUAL_TOL:
        raise NumericalError(f"adjustment coefficient residual {residual:.2e} exceeds {RESIDUAL_TOL:g}")
    # mass beyond z_max sits at z > z_max, so it shifts E[exp(r Z)] by at least tail * exp(r z_max)
    bias = dist.upper_tail * math.exp(r * dist.z_max)
    if bias > TRUNCATION_BIAS_TOL:
        raise NumericalError(f"grid truncation could bias the moment generating function by {bias:.2e}")
    return AdjustmentCoefficient(float(r), float(residual))


def lundberg_bound(coef: AdjustmentCoefficient | float, b0):
    """``exp(-r* b0)`` for ``b0 >= 0``."""
    r = coef.r_star if isinstance(coef, AdjustmentCoefficient) else float(coef)
    b = np.asarray(b0, dtype=float)
    if np.any(b < 0):
        raise DomainError("b0 must be nonnegative")
    out = np.exp(-r * b)
    return float(out) if out.ndim == 0 else out
