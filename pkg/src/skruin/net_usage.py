"""Per-slot net key usage ``Z`` (bits spent minus bits generated).

Deterministic scheme: every slot has one SKG block and one TX block, so
``Z = xi - theta``. Random scheme: a slot transmits with probability ``p``
and otherwise generates key bits, so ``Z = P xi - (1 - P) theta`` with
``P ~ Bernoulli(p)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from . import channels
from .channels import LinkPair
from .errors import DomainError, TruncationError

MASS_TOL = 1e-9
TRUNC_TOL = 1e-7
TAIL_QUANTILE = 1e-9
DEFAULT_STEP = 0.01


class SchemeKind(enum.Enum):
    DETERMINISTIC = "deterministic"
    RANDOM_TX = "random"


@dataclass(frozen=True)
class SchemeSpec:
    kind: SchemeKind = SchemeKind.DETERMINISTIC
    tx_prob: float | None = None

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", SchemeKind(self.kind.lower()))
        if self.kind is SchemeKind.RANDOM_TX:
            if self.tx_prob is None or not 0.0 <= self.tx_prob <= 1.0:
                raise DomainError(f"tx_prob must lie in [0, 1], got {self.tx_prob!r}")
        else:
            object.__setattr__(self, "tx_prob", None)

    @classmethod
    def deterministic(cls) -> "SchemeSpec":
        return cls(SchemeKind.DETERMINISTIC)

    @classmethod
    def random_tx(cls, p: float) -> "SchemeSpec":
        return cls(SchemeKind.RANDOM_TX, float(p))

    @property
    def is_random(self) -> bool:
        return self.kind is SchemeKind.RANDOM_TX


@dataclass(frozen=True, eq=False)
class GriddedDistribution:
    """PDF and CDF of a scalar random variable on a uniform grid.

    The grid points are ``z_min + k * step`` for ``k = 0 .. n - 1``. Outside
    the grid the CDF is taken to be 0 (below) and 1 (above).
    """

    z_min: float
    step: float
    pdf: np.ndarray
    cdf: np.ndarray
    upper_tail: float | None = None  # mass above z_max; defaults to 1 - cdf[-1]

    def __post_init__(self):
        pdf = np.asarray(self.pdf, dtype=float)
        cdf = np.asarray(self.cdf, dtype=float)
        if not self.step > 0:
            raise DomainError("grid step must be positive")
        if pdf.shape != cdf.shape or pdf.ndim != 1 or pdf.size < 2:
            raise DomainError("pdf and cdf must be 1-D arrays of equal length")
        if np.any(pdf < 0):
            raise DomainError("pdf has negative entries")
        if np.any(np.diff(cdf) < -1e-15) or cdf[0] < -1e-15 or cdf[-1] > 1 + 1e-12:
            raise DomainError("cdf must be nondecreasing with values in [0, 1]")
        if cdf[-1] < 1 - MASS_TOL:
            raise DomainError(f"cdf reaches only {cdf[-1]:.12f}; mass missing beyond tolerance")
        if self.upper_tail is None:
            object.__setattr__(self, "upper_tail", max(1.0 - float(cdf[-1]), 0.0))
        pdf.setflags(write=False)
        cdf.setflags(write=False)
        object.__setattr__(self, "pdf", pdf)
        object.__setattr__(self, "cdf", cdf)

    @property
    def size(self) -> int:
        return self.pdf.size

    @property
    def z_max(self) -> float:
        return self.z_min + (self.size - 1) * self.step

    @property
    def z(self) -> np.ndarray:
        return self.z_min + self.step * np.arange(self.size)

    @property
    def origin_index(self) -> int:
        """Grid index ``k`` such that ``z_min + k * step`` is (closest to) zero."""
        return int(round(-self.z_min / self.step))

    def cdf_at(self, x):
        return np.interp(x, self.z, self.cdf, left=0.0, right=1.0)

    def pdf_at(self, x):
        return np.interp(x, self.z, self.pdf, left=0.0, right=0.0)

    @property
    def mass(self) -> float:
        """Trapezoid integral of the stored density (1 up to discretization error)."""
        return float(np.trapezoid(self.pdf, dx=self.step))

    # Expectations are normalized by ``mass`` so that E[1] = 1 exactly; roots
    # of E[exp(r Z)] = 1 near r = 0 are sensitive to any offset there.

    def mean(self) -> float:
        return float(np.trapezoid(self.z * self.pdf, dx=self.step)) / self.mass

    def second_moment(self) -> float:
        return float(np.trapezoid(self.z**2 * self.pdf, dx=self.step)) / self.mass

    def var(self) -> float:
        m = self.mean()
        return self.second_moment() - m * m

    def mgf(self, r: float) -> float:
        """``E[exp(r Z)]`` by the trapezoid rule on the grid."""
        return float(np.trapezoid(np.exp(r * self.z) * self.pdf, dx=self.step)) / self.mass

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-CDF sampling with linear interpolation between grid points."""
        u = rng.random(size)
        cdf, z = self.cdf, self.z
        # flat stretches of the CDF would make the inverse ambiguous
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        return np.interp(u, cdf[keep], z[keep])


# -- construction -------------------------------------------------------------


def default_support(link: LinkPair, scheme: SchemeSpec, step: float = DEFAULT_STEP) -> tuple[float, float]:
    """Grid bounds covering ``Z`` up to the ``1e-9`` tail quantiles, snapped to ``step``."""
    lo, hi = 0.0, 0.0
    if not (scheme.is_random and scheme.tx_prob == 1.0):
        lo = -channels.skg_rate_quantile(link, 1.0 - TAIL_QUANTILE)
    if not (scheme.is_random and scheme.tx_prob == 0.0):
        hi = channels.tx_rate_quantile(link.tx, 1.0 - TAIL_QUANTILE)
    # one extra cell on each side keeps the boundary jump of the densities on-grid
    lo = (math.floor(lo / step) - 1) * step
    hi = (math.ceil(hi / step) + 1) * step
    return lo, hi


def _axis(z_min: float, z_max: float, step: float) -> tuple[np.ndarray, int]:
    k0 = int(round(z_min / step))
    k1 = int(round(z_max / step))
    if not math.isclose(k0 * step, z_min, abs_tol=1e-9 * step) or not math.isclose(
        k1 * step, z_max, abs_tol=1e-9 * step
    ):
        raise DomainError("grid bounds must be integer multiples of step (0 must be a grid point)")
    if k0 > 0 or k1 < 0:
        raise DomainError("grid must contain 0")
    return np.arange(k0, k1 + 1) * step, -k0


def _on_grid_density(values: np.ndarray, jump_index: int) -> np.ndarray:
    # a density with a jump at a grid point contributes half its one-sided
    # limit there, which keeps trapezoid sums second-order accurate
    values = values.copy()
    values[jump_index] *= 0.5
    return values


def _check_truncation(link: LinkPair, scheme: SchemeSpec, z_min: float, z_max: float):
    p = scheme.tx_prob if scheme.is_random else None
    lower = float(channels.skg_rate_sf(link, max(-z_min, 0.0)))
    upper = float(channels.tx_rate_sf(link.tx, max(z_max, 0.0)))
    if p is not None:
        lower *= 1.0 - p
        upper *= p
    if lower > TRUNC_TOL:
        raise TruncationError(
            f"lower tail (SKG rate above {-z_min:g} bit) truncates {lower:.3e} > {TRUNC_TOL:g}"
        )
    if upper > TRUNC_TOL:
        raise TruncationError(
            f"upper tail (transmission rate above {z_max:g} bit) truncates {upper:.3e} > {TRUNC_TOL:g}"
        )
    return lower, upper


def build_net_usage(
    link: LinkPair,
    scheme: SchemeSpec,
    step: float = DEFAULT_STEP,
    z_min: float | None = None,
    z_max: float | None = None,
) -> GriddedDistribution:
    """Gridded distribution of the per-slot net usage ``Z``.

    The deterministic scheme convolves the density of ``xi`` with that of
    ``-theta`` by FFT; the random scheme mixes the two CDFs pointwise.

    Raises:
        TruncationError: if explicit bounds cut off more than ``1e-7`` of
            probability mass in either tail.
    """
    if not step > 0:
        raise DomainError("step must be positive")
    d_lo, d_hi = default_support(link, scheme, step)
    z_min = d_lo if z_min is None else z_min
    z_max = d_hi if z_max is None else z_max
    _, upper = _check_truncation(link, scheme, z_min, z_max)
    z, i0 = _axis(z_min, z_max, step)

    if scheme.is_random:
        p = scheme.tx_prob
        neg, pos = z <= 0, z >= 0
        f_neg = np.where(neg, channels.skg_rate_pdf(link, np.where(neg, -z, 0.0)), 0.0)
        f_pos = np.where(pos, channels.tx_rate_pdf(link.tx, np.where(pos, z, 0.0)), 0.0)
        pdf = (1.0 - p) * _on_grid_density(f_neg, i0) + p * _on_grid_density(f_pos, i0)
        cdf = np.empty_like(z)
        cdf[neg] = (1.0 - p) * channels.skg_rate_sf(link, -z[neg])
        cdf[~neg] = (1.0 - p) + p * channels.tx_rate_cdf(link.tx, z[~neg])
        cdf = np.maximum.accumulate(np.clip(cdf, 0.0, 1.0))
        return GriddedDistribution(float(z[0]), step, pdf, cdf, upper)

    # density of -theta on k <= 0 and of xi on k >= 0, both on the same lattice
    n_neg = i0 + 1
    n_pos = z.size - i0
    f_mtheta = _on_grid_density(channels.skg_rate_pdf(link, step * np.arange(n_neg)), 0)[::-1]
    f_xi = _on_grid_density(channels.tx_rate_pdf(link.tx, step * np.arange(n_pos)), 0)
    n = sfft.next_fast_len(n_neg + n_pos - 1, real=True)
    conv = sfft.irfft(sfft.rfft(f_mtheta, n) * sfft.rfft(f_xi, n), n)[: n_neg + n_pos - 1] * step
    # conv index j corresponds to z = (j - i0) * step; keep the requested axis
    pdf = np.clip(conv[: z.size], 0.0, None)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * step)])
    total = cdf[-1]
    return GriddedDistribution(float(z[0]), step, pdf / total, cdf / total, upper)


# -- scalar summaries ---------------------------------------------------------


def net_usage_mean(dist: GriddedDistribution) -> float:
    return dist.mean()


def critical_tx_prob(link: LinkPair) -> float:
    """Transmission probability at which the random scheme has zero drift."""
    e_theta = channels.mean_skg_rate(link)
    e_xi = channels.mean_tx_rate(link)
    return e_theta / (e_theta + e_xi)


def exact_net_usage_mean(link: LinkPair, scheme: SchemeSpec) -> float:
    """``E[Z]`` from the quadrature moments of ``theta`` and ``xi``."""
    e_theta = channels.mean_skg_rate(link)
    e_xi = channels.mean_tx_rate(link)
    if scheme.is_random:
        p = scheme.tx_prob
        return p * e_xi - (1.0 - p) * e_theta
    return e_xi - e_theta


def sample_net_usage(link: LinkPair, scheme: SchemeSpec, rng: np.random.Generator, size=None):
    """Draw ``Z``. The random scheme draws the Bernoulli first, then one rate."""
    if not scheme.is_random:
        theta, xi = channels.sample_slot(link, rng, size)
        return xi - theta
    tx = rng.random(size) < scheme.tx_prob
    if size is None:
        if tx:
            return float(channels.tx_rate_from_snr(link.tx.sample(rng)))
        return -float(channels.skg_rate_from_snr(link.main.sample(rng), link.eve.sample(rng)))
    out = np.empty(tx.shape)
    n_tx = int(tx.sum())
    out[tx] = channels.tx_rate_from_snr(link.tx.sample(rng, n_tx))
    n_skg = tx.size - n_tx
    out[~tx] = -channels.skg_rate_from_snr(link.main.sample(rng, n_skg), link.eve.sample(rng, n_skg))
    return out
