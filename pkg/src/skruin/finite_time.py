"""Finite-horizon survival and outage probabilities of the key budget.

The survival probability obeys the one-slot recursion

    surv_{t+1}(b) = integral of surv_t(b - s) dF_Z(s),   surv_0(b) = 1{b > 0},

which is a linear integrodifference step. Each step is evaluated as one
FFT convolution of the current surface with product-integration weights
(see :mod:`skruin._lattice`), so ``surv_1`` reproduces ``F_Z`` exactly on
the grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from ._lattice import hat_weights
from .errors import ConfigurationError, DomainError, GridRangeError, NumericalError
from .net_usage import GriddedDistribution

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-9
WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Budget grid ``b_min, b_min + step, ..., b_max`` and horizon ``t_max``."""

    b_min: float
    b_max: float
    step: float
    t_max: int

    def __post_init__(self):
        if not self.step > 0:
            raise DomainError("grid step must be positive")
        if not (self.b_min <= 0 < self.b_max):
            raise DomainError(f"need b_min <= 0 < b_max, got [{self.b_min}, {self.b_max}]")
        if int(self.t_max) != self.t_max or self.t_max < 1:
            raise DomainError(f"t_max must be a positive integer, got {self.t_max!r}")
        object.__setattr__(self, "t_max", int(self.t_max))
        for name in ("b_min", "b_max"):
            v = getattr(self, name)
            if not math.isclose(round(v / self.step) * self.step, v, rel_tol=0, abs_tol=1e-9 * self.step):
                raise DomainError(f"{name}={v} is not a multiple of step={self.step}")

    @property
    def n_neg(self) -> int:
        """Number of grid points with ``b <= 0`` (0 included)."""
        return int(round(-self.b_min / self.step)) + 1

    @property
    def n_pos(self) -> int:
        return int(round(self.b_max / self.step))

    @property
    def budgets(self) -> np.ndarray:
        return (np.arange(self.n_neg + self.n_pos) - (self.n_neg - 1)) * self.step


@dataclass(frozen=True, eq=False)
class SurvivalSurface:
    """Survival probabilities ``values[t, j]`` at ``grid.budgets[j]``.

    ``zero_plus[t]`` is the right limit at ``b = 0``; the value stored at
    ``b = 0`` itself is 0 because an empty budget is already an outage.
    """

    grid: GridSpec
    values: np.ndarray
    zero_plus: np.ndarray
    max_clamp: float = 0.0
    _nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for a in (self.values, self.zero_plus):
            a.setflags(write=False)
        # interpolation nodes for b >= 0 with the right limit at 0
        object.__setattr__(self, "_nodes", self.grid.step * np.arange(self.grid.n_pos + 1))

    @property
    def t_max(self) -> int:
        return self.grid.t_max

    @property
    def budgets(self) -> np.ndarray:
        return self.grid.budgets

    def _row_pos(self, t: int) -> np.ndarray:
        i0 = self.grid.n_neg - 1
        row = self.values[t, i0:].copy()
        row[0] = self.zero_plus[t]
        return row

    def survival(self, t: int, b0):
        """Survival probability up to slot ``t`` from initial budget ``b0``."""
        if int(t) != t or not 0 <= t <= self.t_max:
            raise GridRangeError(f"t={t} outside 0..{self.t_max}")
        b = np.asarray(b0, dtype=float)
        eps = 1e-9 * self.grid.step
        if np.any(b < self.grid.b_min - eps) or np.any(b > self.grid.b_max + eps):
            raise GridRangeError(
                f"budget outside the solved grid [{self.grid.b_min}, {self.grid.b_max}]"
            )
        out = np.interp(b, self._nodes, self._row_pos(int(t)))
        out = np.where(b > 0, out, 0.0)
        return float(out) if out.ndim == 0 else out

    def outage(self, t: int, b0):
        return 1.0 - self.survival(t, b0)

    def outage_row(self, t: int) -> np.ndarray:
        """Outage probabilities on the positive grid budgets ``step .. b_max``."""
        return 1.0 - self.values[t, self.grid.n_neg:]


def _internal_extent(dist: GriddedDistribution, grid: GridSpec) -> int:
    """Top node index of the internal grid.

    A budget gains at most ``|z_min|`` per slot, so values above
    ``b_max + t_max |z_min|`` cannot reach the reported grid within the
    horizon; they are closed with survival 1.
    """
    gain = max(-dist.z_min, 0.0)
    return int(math.ceil((grid.b_max + grid.t_max * gain) / grid.step)) + 1


def solve_survival(dist: GriddedDistribution, grid: GridSpec) -> SurvivalSurface:
    """Survival surface for ``t = 0 .. grid.t_max`` on ``grid``.

    Raises:
        ConfigurationError: ``grid.step`` differs from ``dist.step``.
        NumericalError: the convolution weights lose mass or a step needs a
            clamp larger than ``1e-9``.
    """
    if not math.isclose(grid.step, dist.step, rel_tol=1e-12, abs_tol=0):
        raise ConfigurationError(f"grid step {grid.step} differs from distribution step {dist.step}")
    hw = hat_weights(dist, 1)
    if abs(hw.w.sum() - 1.0) > WEIGHT_SUM_TOL or abs(hw.cell[-1] - 1.0) > WEIGHT_SUM_TOL:
        raise NumericalError("convolution weights do not sum to one")

    K = _internal_extent(dist, grid)
    nw = hw.w.size
    n_full = K + nw - 1
    n_fft = sfft.next_fast_len(n_full, real=True)
    w_hat = sfft.rfft(hw.w, n_fft)

    i = np.arange(K + 1)
    # index into the linear convolution for output node i (see _lattice)
    conv_idx = i - 1 - hw.m_lo
    closure = hw.at(hw.cell, i - K - 1)
    r_term = hw.at(hw.r, i)

    n_out = grid.n_pos + 1
    values = np.zeros((grid.t_max + 1, grid.n_neg + grid.n_pos))
    zero_plus = np.empty(grid.t_max + 1)
    v = np.ones(K + 1)  # surv_0 on nodes 0+ .. K
    values[0, grid.n_neg:] = 1.0
    zero_plus[0] = 1.0
    worst = 0.0
    for t in range(1, grid.t_max + 1):
        full = sfft.irfft(sfft.rfft(v[1:], n_fft) * w_hat, n_fft)
        new = full[conv_idx] + closure + v[0] * r_term
        lo, hi = -new.min(), new.max() - 1.0
        clamp = max(lo, hi, 0.0)
        worst = max(worst, clamp)
        if clamp > CLAMP_TOL:
            raise NumericalError(f"step {t} needed a clamp of {clamp:.3e}")
        v = np.clip(new, 0.0, 1.0)
        zero_plus[t] = v[0]
        values[t, grid.n_neg:] = v[1:n_out]
    log.debug("survival solve: %d nodes, fft length %d, max clamp %.2e", K + 1, n_fft, worst)
    values.setflags(write=False)
    return SurvivalSurface(grid, values, zero_plus, worst)


def outage_at(surface: SurvivalSurface, t: int, b0: float) -> float:
    """Outage probability ``1 - surv_t(b0)`` with linear interpolation in ``b0``.

    Raises:
        GridRangeError: ``t`` or ``b0`` lies outside the solved surface.
    """
    return surface.outage(t, b0)
