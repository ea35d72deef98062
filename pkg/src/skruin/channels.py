"""SNR models for the main and eavesdropper links and the per-slot rates they induce.

Two rates drive the key budget:

* the secret-key generation (SKG) rate ``theta = log2((1 + X + Y) / (1 + Y))``
  obtained from main-channel SNR ``X`` and eavesdropper SNR ``Y``;
* the transmission rate ``xi = log2(1 + X~)`` consumed as one-time pad, where
  ``X~`` is an independent copy of the main-channel SNR.

All SNRs are linear inside this module; dB values are converted by
:meth:`ChannelModel.from_db` at the configuration boundary.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NumericalError

LN2 = math.log(2.0)
INV_LN2 = 1.0 / LN2


class Family(enum.Enum):
    """SNR distribution family. Rayleigh fading gives an exponential SNR."""

    EXPONENTIAL = "exponential"


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ChannelModel:
    """SNR distribution of a single link, with ``mean_snr`` on a linear scale."""

    mean_snr: float
    family: Family = Family.EXPONENTIAL

    def __post_init__(self):
        if not (self.mean_snr > 0 and math.isfinite(self.mean_snr)):
            raise DomainError(f"mean_snr must be positive and finite, got {self.mean_snr!r}")

    @classmethod
    def from_db(cls, snr_db: float, family: Family = Family.EXPONENTIAL) -> "ChannelModel":
        return cls(db_to_linear(snr_db), family)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-np.maximum(x, 0.0) / self.mean_snr), 0.0)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, np.exp(-np.maximum(x, 0.0) / self.mean_snr), 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, np.exp(-np.maximum(x, 0.0) / self.mean_snr) / self.mean_snr, 0.0)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.exponential(self.mean_snr, size)


@dataclass(frozen=True)
class LinkPair:
    """Main link (Alice to Bob) and eavesdropper link (Alice to Eve).

    ``tx`` is the main-channel model during data transmission. It defaults to
    ``main`` (equal transmit power for key generation and data), but may be
    set separately.
    """

    main: ChannelModel
    eve: ChannelModel
    tx: ChannelModel = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.tx is None:
            object.__setattr__(self, "tx", self.main)

    @classmethod
    def from_db(cls, main_db: float, eve_db: float, tx_db: float | None = None) -> "LinkPair":
        tx = None if tx_db is None else ChannelModel.from_db(tx_db)
        return cls(ChannelModel.from_db(main_db), ChannelModel.from_db(eve_db), tx)


def _check_rate_arg(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("rate argument must be nonnegative")
    return t


def _scalar_or_array(value, like):
    return float(value) if np.ndim(like) == 0 else value


# -- SKG rate -----------------------------------------------------------------


def _skg_sf_closed(link: LinkPair, t: np.ndarray) -> np.ndarray:
    # Pr(theta > t) = E_Y[exp(-u (1 + Y) / gx)] with u = 2^t - 1
    gx, gy = link.main.mean_snr, link.eve.mean_snr
    u = np.expm1(np.minimum(t, 1000.0) * LN2)
    return np.exp(-u / gx) / (1.0 + u * (gy / gx))


def _skg_cdf_quad(link: LinkPair, t: float) -> float:
    if t == 0:
        return 0.0
    u = math.expm1(t * LN2)
    eve = link.eve
    inner = lambda y: float(link.main.cdf(u * (1.0 + y))) * float(eve.pdf(y))  # noqa: E731
    upper = eve.mean_snr * 60.0
    val, err = integrate.quad(inner, 0.0, upper, limit=200, epsabs=1e-13, epsrel=1e-11)
    if err > 1e-8:
        raise NumericalError(f"SKG CDF quadrature did not converge at t={t} (err={err:.2e})")
    return val


def skg_rate_cdf(link: LinkPair, t, method: str = "closed"):
    """CDF of the SKG rate ``theta`` in bits.

    ``method="quad"`` integrates ``Pr(X <= (2^t - 1)(1 + Y))`` over the
    eavesdropper SNR numerically; ``"closed"`` uses the exponential/exponential
    closed form of the same integral.
    """
    t = _check_rate_arg(t)
    if method == "quad":
        out = np.vectorize(lambda s: _skg_cdf_quad(link, float(s)))(t)
        return _scalar_or_array(out, t)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    out = 1.0 - _skg_sf_closed(link, t)
    return _scalar_or_array(out, t)


def skg_rate_sf(link: LinkPair, t):
    t = _check_rate_arg(t)
    return _scalar_or_array(_skg_sf_closed(link, t), t)


def skg_rate_pdf(link: LinkPair, t):
    """Density of ``theta``; zero for ``t < 0``, one-sided limit at ``t = 0``."""
    t = np.asarray(t, dtype=float)
    gx, gy = link.main.mean_snr, link.eve.mean_snr
    c = gy / gx
    ts = np.clip(t, 0.0, 1000.0)
    u = np.expm1(ts * LN2)
    d = 1.0 + u * c
    val = LN2 * (u + 1.0) * np.exp(-u / gx) * (1.0 / (gx * d) + c / d**2)
    return np.where(t >= 0, val, 0.0)


def skg_rate_quantile(link: LinkPair, q: float) -> float:
    """Smallest ``t`` with ``F_theta(t) >= q``."""
    if not 0 <= q < 1:
        raise DomainError("quantile level must lie in [0, 1)")
    if q == 0:
        return 0.0
    target = 1.0 - q
    hi = 1.0
    while _skg_sf_closed(link, np.array(hi)) > target:
        hi *= 2.0
    return optimize.brentq(
        lambda s: float(_skg_sf_closed(link, np.array(s))) - target, 0.0, hi, xtol=1e-13, rtol=1e-14
    )


# -- transmission rate --------------------------------------------------------


def tx_rate_cdf(main: ChannelModel, t):
    """CDF of the transmission rate ``xi = log2(1 + X~)``."""
    t = _check_rate_arg(t)
    out = main.cdf(np.expm1(np.minimum(t, 1000.0) * LN2))
    return _scalar_or_array(out, t)


def tx_rate_sf(main: ChannelModel, t):
    t = _check_rate_arg(t)
    return _scalar_or_array(main.sf(np.expm1(np.minimum(t, 1000.0) * LN2)), t)


def tx_rate_pdf(main: ChannelModel, t):
    t = np.asarray(t, dtype=float)
    ts = np.clip(t, 0.0, 1000.0)
    x = np.expm1(ts * LN2)
    val = LN2 * (x + 1.0) * np.exp(-x / main.mean_snr) / main.mean_snr
    return np.where(t >= 0, val, 0.0)


def tx_rate_quantile(main: ChannelModel, q: float) -> float:
    if not 0 <= q < 1:
        raise DomainError("quantile level must lie in [0, 1)")
    return math.log2(1.0 - main.mean_snr * math.log1p(-q))


# -- moments ------------------------------------------------------------------


@dataclass(frozen=True)
class Moment:
    value: float
    abserr: float

    def __float__(self):
        return self.value


def _moment_from_sf(sf, order: int) -> Moment:
    # E[R^k] = int_0^inf k t^(k-1) Pr(R > t) dt
    if order not in (1, 2):
        raise DomainError("only first and second moments are supported")
    integrand = (lambda s: sf(s)) if order == 1 else (lambda s: 2.0 * s * sf(s))
    val, err = integrate.quad(integrand, 0.0, np.inf, limit=400, epsabs=1e-12, epsrel=1e-10)
    if not np.isfinite(val) or err > 1e-6 * max(abs(val), 1e-300) + 1e-12:
        raise NumericalError(f"moment quadrature failed: value={val}, abserr={err}")
    return Moment(val, err)


def rate_moment(kind: str, link: LinkPair, order: int = 1) -> Moment:
    """``E[theta^order]`` (``kind="skg"``) or ``E[xi^order]`` (``kind="tx"``), in bits."""
    kind = kind.lower()
    if kind == "skg":
        sf = lambda s: float(_skg_sf_closed(link, np.array(s)))  # noqa: E731
    elif kind == "tx":
        sf = lambda s: float(tx_rate_sf(link.tx, s))  # noqa: E731
    else:
        raise ValueError(f"kind must be 'skg' or 'tx', got {kind!r}")
    return _moment_from_sf(sf, order)


def mean_skg_rate(link: LinkPair) -> float:
    return rate_moment("skg", link).value


def mean_tx_rate(link: LinkPair) -> float:
    return rate_moment("tx", link).value


# -- sampling -----------------------------------------------------------------


def skg_rate_from_snr(x, y):
    return np.log1p(x / (1.0 + y)) * INV_LN2


def tx_rate_from_snr(x):
    return np.log1p(x) * INV_LN2


def sample_slot(link: LinkPair, rng: np.random.Generator, size=None):
    """Draw ``(theta, xi)`` from independent ``X``, ``Y`` and ``X~``."""
    x = link.main.sample(rng, size)
    y = link.eve.sample(rng, size)
    xt = link.tx.sample(rng, size)
    return skg_rate_from_snr(x, y), tx_rate_from_snr(xt)
