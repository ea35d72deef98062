"""Infinite-horizon ruin probability under random transmission.

The ruin probability solves the renewal equation

    psi(b) = 1 - F_Z(b) + integral_0^inf psi(s) f_Z(b - s) ds,   b > 0,

a Fredholm equation of the second kind. It is discretized by a Nystrom
scheme on uniform nodes ``s_k = k H`` in ``[0, s_max]``: ``psi`` is taken
piecewise linear between nodes and each hat function is integrated
exactly against ``dF_Z`` (product integration). The kernel has a moving
jump at ``s = b`` wherever ``f_Z`` jumps at 0, which this handles without
placing panel breaks. The resulting matrix is banded and is factored with
LAPACK's banded LU.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack
from scipy.sparse.linalg import LinearOperator, onenormest

from . import bounds
from .channels import LinkPair
from .errors import DomainError, NumericalError, PreconditionError
from .montecarlo import DEFAULT_SEED, DEFAULT_TRIALS, Estimate, simulate_outage
from .net_usage import GriddedDistribution, SchemeSpec
from ._lattice import hat_weights, stride_for

log = logging.getLogger(__name__)

PSI_TAIL_TOL = 1e-10
DEFAULT_NODE_STEP = 0.1
COND_LIMIT = 1e12
CLAMP_TOL = 1e-6
MAX_NODES = 2_000_000


class _CdfIntegral:
    """Exact ``F(x)`` and ``G(x) = integral_{-inf}^x F`` for the piecewise-linear CDF."""

    def __init__(self, dist: GriddedDistribution):
        self.z0 = dist.z_min
        self.h = dist.step
        self.F = np.asarray(dist.cdf)
        self.G = np.concatenate([[0.0], np.cumsum(0.5 * (self.F[1:] + self.F[:-1]) * self.h)])
        self.n = self.F.size

    def _locate(self, x):
        u = (np.asarray(x, dtype=float) - self.z0) / self.h
        j = np.clip(np.floor(u).astype(np.int64), 0, self.n - 2)
        return u, j, u - j

    def cdf(self, x):
        u, j, d = self._locate(x)
        val = self.F[j] + d * (self.F[j + 1] - self.F[j])
        return np.where(u < 0, 0.0, np.where(u > self.n - 1, 1.0, val))

    def integral(self, x):
        u, j, d = self._locate(x)
        val = self.G[j] + self.h * d * (self.F[j] + 0.5 * d * (self.F[j + 1] - self.F[j]))
        top = self.G[-1] + (u - (self.n - 1)) * self.h
        return np.where(u < 0, 0.0, np.where(u > self.n - 1, top, val))


@dataclass(frozen=True, eq=False)
class UltimateRuinCurve:
    """Nystrom solution at the nodes ``budgets`` plus its interpolant.

    ``certain`` marks the zero-or-positive drift regime, where ruin has
    probability one and no equation is solved.
    """

    budgets: np.ndarray
    psi: np.ndarray
    certain: bool = False
    r_star: float | None = None
    node_step: float | None = None
    s_max: float | None = None
    max_clamp: float = 0.0
    condition: float | None = None
    _cdf: _CdfIntegral | None = None

    def __call__(self, b0):
        return self.evaluate(b0)

    def evaluate(self, b0):
        """Ruin probability at arbitrary budgets via the Nystrom interpolant."""
        b = np.atleast_1d(np.asarray(b0, dtype=float))
        if self.certain:
            out = np.ones_like(b)
        elif self._cdf is None:  # ruin impossible
            out = np.where(b > 0, 0.0, 1.0)
        else:
            out = np.array([self._at(x) for x in b])
        return float(out[0]) if np.ndim(b0) == 0 else out

    def _at(self, b: float) -> float:
        if b <= 0:
            return 1.0
        c, H = self._cdf, self.node_step
        z_lo, z_hi = c.z0, c.z0 + (c.n - 1) * c.h
        k_lo = max(1, math.floor((b - z_hi) / H) - 1)
        k_hi = min(self.psi.size - 1, math.ceil((b - z_lo) / H) + 1)
        val = 1.0 - float(c.cdf(b))
        val += self.psi[0] * float(c.cdf(b) - (c.integral(b) - c.integral(b - H)) / H)
        if k_hi >= k_lo:
            x = b - H * np.arange(k_lo, k_hi + 1)
            w = (c.integral(x + H) - 2.0 * c.integral(x) + c.integral(x - H)) / H
            val += float(np.dot(w, self.psi[k_lo:k_hi + 1]))
        return min(max(val, 0.0), 1.0)


def _band_matrix(hw, n: int):
    """``I - A`` in LAPACK banded storage with room for the LU fill-in."""
    kl = max(hw.m_hi, 0)
    ku = max(-hw.m_lo, 0)
    ab = np.zeros((2 * kl + ku + 1, n))
    # A[i, k] = W_{i-k} for k >= 1 and R_i for k = 0; stored at ab[kl + ku + i - k, k]
    for m in range(max(hw.m_lo, -(n - 1)), min(hw.m_hi, n - 1) + 1):
        row = kl + ku + m
        ks = np.arange(max(0, -m), min(n, n - m))
        ab[row, ks] = -hw.w[m - hw.m_lo]
        if 0 <= m < n and ks.size and ks[0] == 0:
            ab[row, 0] = -hw.r[m - hw.m_lo]
    ab[kl + ku, :] += 1.0
    return ab, kl, ku


def _fallback_s_max(dist: GriddedDistribution) -> float:
    # diffusion approximation r ~ 2 |E[Z]| / Var(Z)
    r = 2.0 * abs(dist.mean()) / dist.var()
    return -math.log(PSI_TAIL_TOL) / r


def solve_ultimate_ruin(
    dist: GriddedDistribution,
    nodes: int | None = None,
    s_max: float | None = None,
    node_step: float = DEFAULT_NODE_STEP,
) -> UltimateRuinCurve:
    """Ultimate ruin probability for the net usage ``dist``.

    Args:
        dist: gridded net usage distribution.
        nodes: number of node intervals on ``[0, s_max]``. When given, the
            node spacing is ``s_max / nodes`` rounded to a multiple of
            ``dist.step``; otherwise ``node_step`` is used.
        s_max: truncation budget; defaults to ``-ln(1e-10) / r*``.
        node_step: node spacing when ``nodes`` is not given.

    Raises:
        NumericalError: the system is ill-conditioned (estimate above
            ``1e12``) or the solution needs a clamp above ``1e-6``.
    """
    mean = dist.mean()
    if mean >= 0:
        log.info("E[Z] = %.4g >= 0: ruin is certain", mean)
        return UltimateRuinCurve(np.array([0.0]), np.array([1.0]), certain=True)
    try:
        r_star = bounds.adjustment_coefficient(dist).r_star
    except PreconditionError:
        # no mass above zero: the budget can never decrease
        return UltimateRuinCurve(np.array([0.0]), np.array([0.0]))
    except NumericalError:
        r_star = None
    if s_max is None:
        if r_star is not None:
            s_max = -math.log(PSI_TAIL_TOL) / r_star
        else:
            s_max = _fallback_s_max(dist)
            log.warning("adjustment coefficient unavailable; using diffusion estimate s_max=%.4g", s_max)
    if not s_max > 0:
        raise DomainError("s_max must be positive")
    if nodes is not None:
        if nodes < 1:
            raise DomainError("nodes must be positive")
        stride = max(1, int(round(s_max / (nodes * dist.step))))
        n = int(nodes)
    else:
        stride = stride_for(dist, node_step)
        n = int(math.ceil(s_max / (stride * dist.step)))
    if n + 1 > MAX_NODES:
        raise DomainError(f"{n + 1} nodes exceed the limit of {MAX_NODES}; increase node_step")
    hw = hat_weights(dist, stride)
    H = hw.node_step
    budgets = H * np.arange(n + 1)

    ab, kl, ku = _band_matrix(hw, n + 1)
    norm_m = np.abs(ab[kl:]).sum(axis=0).max()
    cdf = _CdfIntegral(dist)
    rhs = 1.0 - cdf.cdf(budgets)
    lu, piv, info = lapack.dgbtrf(ab, kl, ku, overwrite_ab=1)
    if info != 0:
        raise NumericalError(f"banded LU failed (info={info})")

    def solve(v, trans=0):
        x, inf = lapack.dgbtrs(lu, kl, ku, np.asarray(v, dtype=float).reshape(-1, 1), piv, trans=trans)
        if inf != 0:
            raise NumericalError(f"banded solve failed (info={inf})")
        return x[:, 0]

    op = LinearOperator((n + 1, n + 1), matvec=solve, rmatvec=lambda v: solve(v, 1), dtype=float)
    cond = float(norm_m * onenormest(op))
    if not cond < COND_LIMIT:
        raise NumericalError(f"Nystrom system condition estimate {cond:.3e} exceeds {COND_LIMIT:g}")
    psi = solve(rhs)
    clamp = float(max(-psi.min(), psi.max() - 1.0, 0.0))
    if clamp > CLAMP_TOL:
        raise NumericalError(f"Nystrom solution needed a clamp of {clamp:.3e}")
    psi = np.clip(psi, 0.0, 1.0)
    log.debug("nystrom: %d nodes, H=%g, s_max=%g, cond~%.2e, clamp %.1e", n + 1, H, n * H, cond, clamp)
    budgets.setflags(write=False)
    psi.setflags(write=False)
    return UltimateRuinCurve(budgets, psi, False, r_star, H, n * H, clamp, cond, cdf)


def ultimate_ruin_mc_estimate(
    link: LinkPair,
    scheme: SchemeSpec,
    b0: float,
    horizon: int = 150,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
    threads: int | None = None,
    backend: str | None = None,
) -> Estimate:
    """Outage probability by ``horizon``, a lower proxy for the ultimate ruin probability."""
    if not scheme.is_random:
        raise PreconditionError("the Monte Carlo proxy is defined for the random transmission scheme")
    stats = simulate_outage(link, scheme, b0, horizon, trials, seed, threads, backend)
    return Estimate(float(stats.outage_by_t[-1]), float(stats.se_by_t[-1]))
