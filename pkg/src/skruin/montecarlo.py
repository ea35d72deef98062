"""Trajectory simulation of the key budget for both operating schemes.

Each trial owns a counter-based random stream, so results depend only on
``(seed, trial index)`` and are bit-identical for any thread count or
backend. An outage is declared at the end of the first slot with
``B_t <= 0``; an initial budget ``b0 <= 0`` is an outage at ``t = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from ._pykernels import SCHEME_DETERMINISTIC, SCHEME_RANDOM
from .channels import LinkPair
from .errors import DomainError, NumericalError
from .net_usage import SchemeSpec

DEFAULT_TRIALS = 10**6
DEFAULT_SEED = 20240601


@dataclass(frozen=True, eq=False)
class TrajectoryStats:
    """Outage probability by slot for one initial budget.

    ``outage_by_t[t]`` is the fraction of trials with an outage at or before
    slot ``t`` (index 0 is the initial state).
    """

    b0: float
    outage_by_t: np.ndarray
    se_by_t: np.ndarray
    trials: int
    seed: int

    @property
    def t_max(self) -> int:
        return self.outage_by_t.size - 1


@dataclass(frozen=True)
class LatencySummary:
    """Recharge latency ``T`` in channel realizations of key generation."""

    b0: float
    mean: float
    se: float
    q10: float
    q50: float
    q90: float
    trials: int
    seed: int


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float


def binomial_se(p: np.ndarray | float, n: int):
    return np.sqrt(np.asarray(p) * (1.0 - np.asarray(p)) / n)


def _scheme_args(link: LinkPair, scheme: SchemeSpec):
    code = SCHEME_RANDOM if scheme.is_random else SCHEME_DETERMINISTIC
    p = scheme.tx_prob if scheme.is_random else 0.0
    return code, p, link.main.mean_snr, link.eve.mean_snr, link.tx.mean_snr


def _check(trials: int, t_max: int):
    if trials < 1:
        raise DomainError("trials must be at least 1")
    if t_max < 1:
        raise DomainError("t_max must be at least 1")


def simulate_outage_many(
    link: LinkPair,
    scheme: SchemeSpec,
    b0s: Sequence[float],
    t_max: int,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
    threads: int | None = None,
    backend: str | None = None,
) -> list[TrajectoryStats]:
    """Outage curves for several initial budgets from one set of trajectories."""
    _check(trials, t_max)
    b0s = np.atleast_1d(np.asarray(b0s, dtype=float))
    times = _backend.outage_times(seed, trials, b0s, t_max, *_scheme_args(link, scheme),
                                  threads=threads, backend=backend)
    out = []
    for j, b0 in enumerate(b0s):
        counts = np.bincount(times[:, j], minlength=t_max + 2)[: t_max + 1]
        p = np.cumsum(counts) / trials
        out.append(TrajectoryStats(float(b0), p, binomial_se(p, trials), trials, seed))
    return out


def simulate_outage(
    link: LinkPair,
    scheme: SchemeSpec,
    b0: float,
    t_max: int,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
    threads: int | None = None,
    backend: str | None = None,
) -> TrajectoryStats:
    """Outage probability by slot for initial budget ``b0``."""
    return simulate_outage_many(link, scheme, [b0], t_max, trials, seed, threads, backend)[0]


def simulate_recharge_latency(
    link: LinkPair,
    b0: float,
    trials: int = 10**5,
    seed: int = DEFAULT_SEED,
    max_slots: int | None = None,
    threads: int | None = None,
    backend: str | None = None,
) -> LatencySummary:
    """Key-generation realizations needed to accumulate ``b0`` bits.

    Raises:
        NumericalError: some trial did not reach ``b0`` within ``max_slots``.
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")
    if max_slots is None:
        max_slots = 1000 + int(100 * max(b0, 0.0))
    t = _backend.hitting_times(seed, trials, float(b0), link.main.mean_snr, link.eve.mean_snr,
                               max_slots, threads=threads, backend=backend)
    censored = int(np.count_nonzero(t > max_slots))
    if censored:
        raise NumericalError(f"{censored} trials did not accumulate {b0} bits within {max_slots} realizations")
    t = t.astype(float)
    se = float(t.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    q10, q50, q90 = np.quantile(t, [0.1, 0.5, 0.9])
    return LatencySummary(float(b0), float(t.mean()), se, float(q10), float(q50), float(q90), trials, seed)


def sample_increments(
    link: LinkPair,
    scheme: SchemeSpec,
    trials: int,
    t_max: int = 1,
    seed: int = DEFAULT_SEED,
    threads: int | None = None,
    backend: str | None = None,
) -> np.ndarray:
    """Per-slot net usage ``Z`` of each trial, shape ``(trials, t_max)``."""
    _check(trials, t_max)
    return _backend.increments(seed, trials, t_max, *_scheme_args(link, scheme),
                               threads=threads, backend=backend)
