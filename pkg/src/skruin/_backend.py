"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
kernels take over. ``SKRUIN_BACKEND=python`` forces the fallback and
``SKRUIN_NUM_THREADS`` overrides the worker count.
"""

import os
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

if os.environ.get("SKRUIN_BACKEND", "").lower() == "python":
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
CHUNK = 1 << 16


def available_backends():
    return ["compiled", "python"] if _compiled is not None else ["python"]


def default_threads() -> int:
    env = os.environ.get("SKRUIN_NUM_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            warnings.warn(f"ignoring non-integer SKRUIN_NUM_THREADS={env!r}")
        else:
            if n >= 1:
                return n
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _resolve(backend):
    backend = backend or BACKEND
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled
    if backend == "python":
        return _pykernels
    raise ValueError(f"unknown backend {backend!r}")


def _chunked(fn, n, threads, combine, *args):
    bounds = [(s, min(n, s + CHUNK) - s) for s in range(0, n, CHUNK)] or [(0, 0)]
    if threads <= 1 or len(bounds) == 1:
        parts = [fn(args[0], s, m, *args[1:]) for s, m in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda sm: fn(args[0], sm[0], sm[1], *args[1:]), bounds))
    return combine(parts)


def outage_times(seed, n, b0s, t_max, scheme, p, gx, gy, gxt, threads=None, backend=None):
    threads = threads or default_threads()
    b0s = np.asarray(b0s, dtype=np.float64)
    mod = _resolve(backend)
    if mod is _pykernels:
        return _chunked(_pykernels.outage_times, n, threads, np.concatenate,
                        seed, b0s, t_max, scheme, p, gx, gy, gxt)
    return mod.outage_times(seed, 0, n, b0s, t_max, scheme, p, gx, gy, gxt, threads)


def increments(seed, n, t_max, scheme, p, gx, gy, gxt, threads=None, backend=None):
    threads = threads or default_threads()
    mod = _resolve(backend)
    if mod is _pykernels:
        return _chunked(_pykernels.increments, n, threads, np.concatenate,
                        seed, t_max, scheme, p, gx, gy, gxt)
    return mod.increments(seed, 0, n, t_max, scheme, p, gx, gy, gxt, threads)


def hitting_times(seed, n, b0, gx, gy, max_slots, threads=None, backend=None):
    threads = threads or default_threads()
    mod = _resolve(backend)
    if mod is _pykernels:
        return _chunked(_pykernels.hitting_times, n, threads, np.concatenate,
                        seed, b0, gx, gy, max_slots)
    return mod.hitting_times(seed, 0, n, b0, gx, gy, max_slots, threads)
