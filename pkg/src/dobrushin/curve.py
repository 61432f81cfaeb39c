"""Dobrushin curve bounds for additive-noise channels under a cost budget.

The TV Dobrushin curve F_TV(t) is the largest output TV over input pairs at
input TV t with average cost E M(|X|) <= a on each side.  It is sandwiched:

    t * theta_lb(2 M^{-1}(a/t))  <=  F_TV(t)  <=  t * theta_c(2 M^{-1}(a/t))

with equality when theta is concave.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import special
from .noise import (Gridded, NoiseModel, ThetaCurve, concave_envelope,
                    lb_curve)


class CostFunction:
    """Increasing cost M with M(0) = 0."""

    name: str = ""

    def cost(self, x):
        raise NotImplementedError

    def inv(self, y):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __str__(self) -> str:
        d = self.to_dict()
        return f"{d['family']}:{next(iter(d['params'].values())):g}"


@dataclass(frozen=True)
class Power(CostFunction):
    """M(x) = x^p."""

    p: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 0):
            raise ValueError(f"power exponent must be positive, got {self.p!r}")

    def cost(self, x):
        return np.abs(np.asarray(x, dtype=float)) ** self.p

    def inv(self, y):
        return np.asarray(y, dtype=float) ** (1.0 / self.p)

    def to_dict(self):
        return {"family": "power", "params": {"p": self.p}}


@dataclass(frozen=True)
class SubExp(CostFunction):
    """M(x) = exp(alpha x) - 1."""

    alpha: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")

    def cost(self, x):
        with np.errstate(over="ignore"):
            return np.expm1(self.alpha * np.abs(np.asarray(x, dtype=float)))

    def inv(self, y):
        return np.log1p(np.asarray(y, dtype=float)) / self.alpha

    def to_dict(self):
        return {"family": "subexp", "params": {"alpha": self.alpha}}


@dataclass(frozen=True)
class SubGauss(CostFunction):
    """M(x) = exp(alpha x^2) - 1."""

    alpha: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")

    def cost(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return np.expm1(self.alpha * x * x)

    def inv(self, y):
        return np.sqrt(np.log1p(np.asarray(y, dtype=float)) / self.alpha)

    def to_dict(self):
        return {"family": "subgauss", "params": {"alpha": self.alpha}}


_COSTS = {"power": Power, "subexp": SubExp, "subgauss": SubGauss}


def parse_cost(text: str) -> CostFunction:
    """Parse 'power:2', 'subexp:1' or 'subgauss:0.5'."""
    fam, _, arg = text.partition(":")
    fam = fam.strip().lower()
    if fam not in _COSTS:
        raise ValueError(f"unknown cost family {fam!r}")
    try:
        return _COSTS[fam](float(arg) if arg else (2.0 if fam == "power" else 1.0))
    except ValueError as exc:
        raise ValueError(f"bad cost {text!r}: {exc}") from None


def cost_from_dict(d: dict) -> CostFunction:
    fam = d.get("family")
    if fam not in _COSTS:
        raise ValueError(f"unknown cost family {fam!r}")
    (v,) = d["params"].values()
    return _COSTS[fam](float(v))


@dataclass(frozen=True, eq=False)
class DobrushinCurve:
    """Upper and lower TV Dobrushin curve bounds for one noise/cost/budget.

    For gridded noise the sampled theta_lb and its concave envelope are
    computed once here; named families use their closed-form profile, which
    is already concave.
    """

    noise: NoiseModel
    cost: CostFunction
    a: float
    n_shifts: int = 2001
    lb: ThetaCurve | None = field(default=None, init=False)
    envelope: ThetaCurve | None = field(default=None, init=False)

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValueError(f"budget a must be positive and finite, got {self.a!r}")
        if isinstance(self.noise, Gridded):
            lb = lb_curve(self.noise, n=self.n_shifts)
            object.__setattr__(self, "lb", lb)
            object.__setattr__(self, "envelope", concave_envelope(lb))

    def theta_lb(self, x):
        return self.noise.theta(x) if self.lb is None else self.lb(x)

    def theta_c(self, x):
        return self.noise.theta(x) if self.envelope is None else self.envelope(x)

    def shift(self, t):
        """2 M^{-1}(a/t), infinite at t = 0."""
        t = np.asarray(t, dtype=float)
        # a/t past the float range clamps the shift to inf, where theta saturates
        with np.errstate(divide="ignore", over="ignore"):
            return 2.0 * self.cost.inv(self.a / t)

    def upper(self, t):
        return self._bound(t, self.theta_c)

    def lower(self, t):
        return self._bound(t, self.theta_lb)

    def log_gap(self, t):
        """log(t - upper(t)) = log t + log(1 - theta_c(shift)), free of rounding to t."""
        t = _check_t(t)
        x = self.shift(t)
        with np.errstate(divide="ignore"):
            if self.envelope is None:
                g = self.noise.log_theta_gap(x)
            else:
                g = np.log1p(-np.asarray(self.envelope(x)))
            out = np.log(t) + g
        return float(out) if np.ndim(out) == 0 else out

    def _bound(self, t, prof):
        t = _check_t(t)
        x = self.shift(t)
        out = np.where(t > 0, t * np.asarray(prof(np.where(t > 0, x, 0.0))), 0.0)
        return float(out) if out.ndim == 0 else out

    def with_budget(self, a: float) -> "DobrushinCurve":
        return DobrushinCurve(self.noise, self.cost, a, self.n_shifts)


def ftv_upper(curve: DobrushinCurve, t):
    return curve.upper(t)


def ftv_lower(curve: DobrushinCurve, t):
    return curve.lower(t)


def ftv_gaussian(a: float, t, cost: CostFunction | None = None):
    """F_TV for unit-variance Gaussian noise: t (1 - 2 Q(M^{-1}(a/t)))."""
    cost = Power(2.0) if cost is None else cost
    if not a > 0:
        raise ValueError("budget a must be positive")
    t = _check_t(t)
    with np.errstate(divide="ignore", over="ignore"):
        u = cost.inv(a / t)
    out = np.where(t > 0, t * (1.0 - 2.0 * special.qfunc(np.where(t > 0, u, 0.0))), 0.0)
    return float(out) if out.ndim == 0 else out


def compose_curves(curves: list[DobrushinCurve], t0: float = 1.0) -> list[float]:
    """Push t0 through a chain of stages; returns the bound after each one."""
    traj = []
    t = t0
    for c in curves:
        t = float(c.upper(t))
        traj.append(t)
    return traj


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
        raise ValueError("t must lie in [0, 1]")
    return t
