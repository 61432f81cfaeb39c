"""Gaussian tail function Q and its inverse.

Every Gaussian tail evaluation in the package goes through ``qfunc`` /
``log_qfunc`` looked up on this module at call time, which lets
``corrupted_qfunc`` swap in a faulty implementation for self-test runs.
"""

from __future__ import annotations

import contextlib
import math

import numpy as np
from scipy import special as _sp

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)


def qfunc(x):
    """Q(x) = P[N(0,1) > x]. Accepts scalars or arrays."""
    if np.isscalar(x):
        return 0.5 * math.erfc(x / SQRT2)
    return 0.5 * _sp.erfc(np.asarray(x, dtype=float) / SQRT2)


def log_qfunc(x):
    """log Q(x), accurate far into the upper tail."""
    return _sp.log_ndtr(-np.asarray(x, dtype=float))


def phi(x):
    """Standard normal density."""
    if np.isscalar(x):
        return math.exp(-0.5 * x * x) / SQRT2PI
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT2PI


def qinv(p: float, tol: float = 1e-12) -> float:
    """Inverse of Q on (0, 1).

    Newton iteration on log Q, started from scipy's ndtri and safeguarded by
    a bracket so every step stays inside the current interval.
    """
    if not 0.0 < p < 1.0:
        if p == 0.0:
            return math.inf
        if p == 1.0:
            return -math.inf
        raise ValueError(f"qinv needs p in (0, 1), got {p}")
    x = -float(_sp.ndtri(p))
    lo, hi = x - 1.0, x + 1.0
    while float(log_qfunc(lo)) < math.log(p):
        lo -= 2.0 * (hi - lo)
    while float(log_qfunc(hi)) > math.log(p):
        hi += 2.0 * (hi - lo)
    target = math.log(p)
    for _ in range(100):
        lq = float(log_qfunc(x))
        g = lq - target
        if g > 0:
            lo = x
        else:
            hi = x
        # d/dx log Q(x) = -phi(x)/Q(x)
        slope = -math.exp(-0.5 * x * x - lq) / SQRT2PI
        step = g / slope if slope != 0 else 0.0
        nx = x - step
        if not lo < nx < hi:
            nx = 0.5 * (lo + hi)
        if abs(nx - x) < tol or hi - lo < tol:
            return nx
        x = nx
    return x


def binary_entropy(t):
    """h(t) in nats, with h(0) = h(1) = 0."""
    t = np.asarray(t, dtype=float)
    out = -_sp.xlogy(t, t) - _sp.xlogy(1.0 - t, 1.0 - t)
    return float(out) if out.ndim == 0 else out


@contextlib.contextmanager
def corrupted_qfunc(scale: float = 1.01):
    """Temporarily replace Q with a slightly wrong version (self-test hook)."""
    global qfunc, log_qfunc
    good_q, good_lq = qfunc, log_qfunc

    def bad_q(x):
        return good_q(x) * scale

    def bad_lq(x):
        return good_lq(x) + math.log(scale)

    qfunc, log_qfunc = bad_q, bad_lq
    try:
        yield
    finally:
        qfunc, log_qfunc = good_q, good_lq
