"""Product-integration weights for ``int phi(b - s) dF_Z(s)``.

``phi`` is represented by its values at nodes ``k * H`` (piecewise linear
between them) and ``F_Z`` is the piecewise-linear interpolant of the
gridded CDF. Integrating each hat function against ``dF_Z`` exactly gives
weights that depend only on the node offset, so the operator becomes a
discrete convolution. Both the finite-horizon recursion and the
ultimate-ruin equation use these weights.

With ``D_m`` the integral of ``F_Z`` over ``[m H, (m + 1) H]``:

* full hat at offset ``m``:  ``W_m = (D_m - D_{m-1}) / H``
* right half-hat (the node at budget 0, where ``phi`` jumps): ``R_m = F(m H) - D_{m-1} / H``
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .net_usage import GriddedDistribution


@dataclass(frozen=True)
class HatWeights:
    stride: int  # H / dist.step
    node_step: float
    m_lo: int  # offset of w[0]
    w: np.ndarray  # W_m for m = m_lo .. m_lo + len(w) - 1
    r: np.ndarray  # R_m, same offsets as w
    cell: np.ndarray  # D_m / H, same offsets as w (cumulative weight sums)

    @property
    def m_hi(self) -> int:
        return self.m_lo + self.w.size - 1

    def at(self, arr: np.ndarray, m) -> np.ndarray:
        """Look up ``arr`` at offsets ``m``; 0 below the support, ``arr[-1]`` above."""
        m = np.asarray(m)
        j = m - self.m_lo
        out = np.where(j >= arr.size, arr[-1], 0.0)
        inside = (j >= 0) & (j < arr.size)
        return np.where(inside, arr[np.clip(j, 0, arr.size - 1)], out)


def stride_for(dist: GriddedDistribution, node_step: float) -> int:
    s = node_step / dist.step
    k = int(round(s))
    if k < 1 or not math.isclose(s, k, rel_tol=0, abs_tol=1e-9):
        raise ConfigurationError(
            f"node step {node_step} must be a positive integer multiple of the distribution step {dist.step}"
        )
    return k


def hat_weights(dist: GriddedDistribution, stride: int = 1) -> HatWeights:
    h = dist.step
    H = stride * h
    k_min = int(round(dist.z_min / h))
    k_max = k_min + dist.size - 1
    # coarse offsets whose cells touch [k_min - 1, k_max + 1] (with one spare each side)
    m_lo = math.floor((k_min - 1) / stride) - 1
    m_hi = math.ceil((k_max + 1) / stride) + 1
    # fine CDF over k in [ (m_lo - 1) * stride, (m_hi + 1) * stride ]
    k0 = (m_lo - 1) * stride
    k1 = (m_hi + 1) * stride
    fine = np.empty(k1 - k0 + 1)
    k = np.arange(k0, k1 + 1)
    fine[k < k_min] = 0.0
    fine[k > k_max] = 1.0
    sel = (k >= k_min) & (k <= k_max)
    fine[sel] = dist.cdf
    # trapezoid of F over each fine cell, then over each coarse cell
    fine_cells = 0.5 * (fine[1:] + fine[:-1]) * h
    coarse = fine_cells.reshape(-1, stride).sum(axis=1)  # D_m for m = m_lo - 1 .. m_hi
    D_prev, D = coarse[:-1], coarse[1:]
    w = (D - D_prev) / H
    F_nodes = fine[stride::stride][: w.size]  # F(m H) for m = m_lo .. m_hi
    r = F_nodes - D_prev / H
    return HatWeights(stride, H, m_lo, w, r, D / H)
