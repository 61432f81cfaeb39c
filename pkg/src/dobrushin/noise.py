"""Additive noise models and their shift-TV profile.

For a noise variable Z the profile is theta(x) = TV(P_Z, P_{Z+x}).  The
named families have closed forms; ``Gridded`` densities are handled by exact
integration of the piecewise-linear interpolant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import special

SATURATION_TOL = 1e-12


class NoiseModel:
    """Common interface of the noise families."""

    family: str = ""
    # theta is nondecreasing and concave on [0, inf) for every named family
    concave_theta = True
    symmetric_unimodal = True

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def theta(self, x):
        raise NotImplementedError

    def log_theta_gap(self, x):
        """log(1 - theta(x)), finite exactly when theta(x) < 1."""
        with np.errstate(divide="ignore"):
            return _scalar(np.log1p(-np.asarray(self.theta(x), dtype=float)))

    def extent(self, tail: float = 1e-13) -> tuple[float, float]:
        """Interval carrying all but ``tail`` of the mass."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __str__(self) -> str:
        d = self.to_dict()
        return d["family"] + ":" + ",".join(f"{v:g}" for v in d["params"].values())


@dataclass(frozen=True)
class Gaussian(NoiseModel):
    sigma: float = 1.0
    family = "gaussian"

    def __post_init__(self):
        _positive("sigma", self.sigma)

    def pdf(self, x):
        return special.phi(np.asarray(x, dtype=float) / self.sigma) / self.sigma

    def cdf(self, x):
        return special.qfunc(-np.asarray(x, dtype=float) / self.sigma)

    def theta(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        return _scalar(1.0 - 2.0 * special.qfunc(x / (2.0 * self.sigma)))

    def log_theta_gap(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        return _scalar(math.log(2.0) + special.log_qfunc(x / (2.0 * self.sigma)))

    def extent(self, tail=1e-13):
        r = self.sigma * special.qinv(tail / 2.0)
        return -r, r

    def sample(self, rng, size):
        return rng.normal(0.0, self.sigma, size)

    def to_dict(self):
        return {"family": self.family, "params": {"sigma": self.sigma}}


@dataclass(frozen=True)
class Laplace(NoiseModel):
    b: float = 1.0
    family = "laplace"

    def __post_init__(self):
        _positive("b", self.b)

    def pdf(self, x):
        return np.exp(-np.abs(np.asarray(x, dtype=float)) / self.b) / (2.0 * self.b)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        e = 0.5 * np.exp(-np.abs(x) / self.b)
        return np.where(x < 0, e, 1.0 - e)

    def theta(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        return _scalar(-np.expm1(-x / (2.0 * self.b)))

    def log_theta_gap(self, x):
        return _scalar(-np.abs(np.asarray(x, dtype=float)) / (2.0 * self.b))

    def extent(self, tail=1e-13):
        r = self.b * math.log(1.0 / tail)
        return -r, r

    def sample(self, rng, size):
        return rng.laplace(0.0, self.b, size)

    def to_dict(self):
        return {"family": self.family, "params": {"b": self.b}}


@dataclass(frozen=True)
class Uniform(NoiseModel):
    """Uniform on [-width/2, width/2]."""

    width: float = 1.0
    family = "uniform"

    def __post_init__(self):
        _positive("width", self.width)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.width / 2.0, 1.0 / self.width, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip(x / self.width + 0.5, 0.0, 1.0)

    def theta(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        return _scalar(np.minimum(x / self.width, 1.0))

    def extent(self, tail=1e-13):
        return -self.width / 2.0, self.width / 2.0

    def sample(self, rng, size):
        return rng.uniform(-self.width / 2.0, self.width / 2.0, size)

    def to_dict(self):
        return {"family": self.family, "params": {"width": self.width}}


@dataclass(frozen=True)
class Exponential(NoiseModel):
    """One-sided exponential noise with the given rate."""

    rate: float = 1.0
    family = "exponential"
    symmetric_unimodal = False

    def __post_init__(self):
        _positive("rate", self.rate)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def theta(self, x):
        # the overlap of Exp and its shift is exp(-rate*|x|)
        x = np.abs(np.asarray(x, dtype=float))
        return _scalar(-np.expm1(-self.rate * x))

    def log_theta_gap(self, x):
        return _scalar(-self.rate * np.abs(np.asarray(x, dtype=float)))

    def extent(self, tail=1e-13):
        return 0.0, math.log(1.0 / tail) / self.rate

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    def to_dict(self):
        return {"family": self.family, "params": {"rate": self.rate}}


@dataclass(frozen=True, eq=False)
class Gridded(NoiseModel):
    """Density given by samples on a strictly increasing grid.

    The density is the linear interpolant of the samples and is zero outside
    the grid.  It must integrate to 1 (trapezoid rule) within 1e-9.
    """

    x: np.ndarray
    f: np.ndarray
    family = "gridded"
    concave_theta = False
    symmetric_unimodal = False

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if x.ndim != 1 or x.shape != f.shape or x.size < 2:
            raise ValueError("gridded noise needs 1-d x and f of equal length >= 2")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(f)):
            raise ValueError("gridded noise values must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("gridded noise grid must be strictly increasing")
        if np.any(f < 0):
            raise ValueError("gridded noise density must be nonnegative")
        mass = float(np.trapezoid(f, x))
        if abs(mass - 1.0) > 1e-9:
            raise ValueError(f"gridded noise density integrates to {mass!r}, not 1")
        x.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "f", f)

    @classmethod
    def from_pdf(cls, x, f) -> "Gridded":
        """Build from unnormalized samples, rescaling to unit mass."""
        x = np.asarray(x, dtype=float)
        f = np.asarray(f, dtype=float)
        return cls(x, f / np.trapezoid(f, x))

    @property
    def span(self) -> float:
        return float(self.x[-1] - self.x[0])

    @property
    def step(self) -> float:
        return float(np.min(np.diff(self.x)))

    def pdf(self, x):
        return np.interp(x, self.x, self.f, left=0.0, right=0.0)

    def cdf(self, x):
        c = np.concatenate([[0.0], np.cumsum(0.5 * (self.f[1:] + self.f[:-1]) * np.diff(self.x))])
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(self.x, x, side="right") - 1, 0, self.x.size - 2)
        dx = np.clip(x - self.x[i], 0.0, self.x[i + 1] - self.x[i])
        slope = (self.f[i + 1] - self.f[i]) / (self.x[i + 1] - self.x[i])
        out = c[i] + self.f[i] * dx + 0.5 * slope * dx * dx
        out = np.where(x < self.x[0], 0.0, np.where(x >= self.x[-1], c[-1], out))
        return _scalar(out)

    def theta(self, x):
        xs = np.abs(np.atleast_1d(np.asarray(x, dtype=float)))
        out = np.array([self._theta_one(min(s, self.span)) for s in xs])
        return _scalar(out.reshape(np.shape(x)))

    def _theta_one(self, s: float) -> float:
        if s == 0.0:
            return 0.0
        u = np.concatenate([self.x, self.x + s])
        u.sort(kind="stable")
        a = np.interp(u, self.x, self.f, left=0.0, right=0.0)
        b = np.interp(u - s, self.x, self.f, left=0.0, right=0.0)
        return min(1.0, 0.5 * abs_integral_linear(u, b - a))

    def is_symmetric_unimodal(self, tol: float = 1e-9) -> bool:
        """Numerical check of symmetry about 0 and monotone decay away from it."""
        mirrored = np.interp(-self.x, self.x, self.f, left=0.0, right=0.0)
        if np.max(np.abs(mirrored - self.f)) > tol * max(1.0, float(np.max(self.f))):
            return False
        right = self.f[self.x >= 0]
        return bool(np.all(np.diff(right) <= tol))

    def extent(self, tail=1e-13):
        return float(self.x[0]), float(self.x[-1])

    def sample(self, rng, size):
        c = np.asarray(self.cdf(self.x))
        return np.interp(rng.uniform(0.0, c[-1], size), c, self.x)

    def to_dict(self):
        return {"family": self.family, "x": self.x.tolist(), "f": self.f.tolist()}

    def __str__(self) -> str:
        return f"gridded[{self.x.size} pts on {self.x[0]:g}..{self.x[-1]:g}]"


def abs_integral_linear(u: np.ndarray, d: np.ndarray) -> float:
    """Exact integral of |d| where d is piecewise linear on nodes u."""
    d0, d1 = d[:-1], d[1:]
    a0, a1 = np.abs(d0), np.abs(d1)
    total = a0 + a1
    cell = 0.5 * total
    cross = np.flatnonzero(d0 * d1 < 0)
    if cross.size:
        # a sign change inside the cell: two triangles instead of a trapezoid
        c0, c1 = a0[cross], a1[cross]
        cell[cross] = 0.5 * (c0 * c0 + c1 * c1) / (c0 + c1)
    return float(np.dot(np.diff(u), cell))


def pos_integral_linear(u: np.ndarray, d: np.ndarray) -> float:
    """Exact integral of max(d, 0) where d is piecewise linear on nodes u."""
    w = np.diff(u)
    d0, d1 = d[:-1], d[1:]
    p0, p1 = np.maximum(d0, 0.0), np.maximum(d1, 0.0)
    cross = d0 * d1 < 0
    denom = np.where(cross, np.abs(d0) + np.abs(d1), 1.0)
    cell = np.where(cross, 0.5 * np.maximum(p0, p1) ** 2 / denom, 0.5 * (p0 + p1))
    return float(np.sum(w * cell))


def _nonneg(name: str, v) -> None:
    if np.any(np.asarray(v, dtype=float) < 0) or np.any(np.isnan(v)):
        raise ValueError(f"{name} must be nonnegative")


def theta(model: NoiseModel, x):
    """TV(P_Z, P_{Z+x}) for a shift x >= 0."""
    _nonneg("shift", x)
    return model.theta(x)


def theta_lb(model: NoiseModel, s, step: float | None = None):
    """sup of theta over |x| <= s.

    Named families have nondecreasing profiles, so this is theta(s).  For a
    gridded density it is the maximum of theta over the shifts k * step
    (default step: the finest grid spacing) that do not exceed s, plus the
    full span once s reaches it.  That keeps it a nondecreasing function of
    s and never above the true sup.
    """
    _nonneg("radius", s)
    if model.concave_theta:
        return model.theta(s)
    s_arr = np.abs(np.atleast_1d(np.asarray(s, dtype=float)))
    h = model.step if step is None else step
    span = model.span
    top = min(float(np.max(s_arr)), span)
    grid = np.arange(0.0, top + h, h)
    grid = grid[grid <= span]
    running = np.maximum.accumulate(np.atleast_1d(model.theta(grid)))
    k = np.searchsorted(grid, s_arr * (1 + 1e-12), side="right") - 1
    out = running[np.clip(k, 0, grid.size - 1)]
    # beyond the span the shifted copies are disjoint; theta is flat from there
    out = np.where(s_arr >= span, np.maximum(out, float(model.theta(span))), out)
    return _scalar(out.reshape(np.shape(s)))


@dataclass(frozen=True, eq=False)
class ThetaCurve:
    """A sampled profile: raw theta, its running max, or a concave envelope.

    Evaluation interpolates linearly and holds the last value beyond the
    grid (capped at 1 for envelopes).
    """

    x: np.ndarray
    y: np.ndarray
    kind: str = "raw"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size == 0:
            raise ValueError("curve needs matching 1-d x and y")
        if np.any(np.diff(x) <= 0):
            raise ValueError("curve grid must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def tail_value(self) -> float:
        last = float(self.y[-1])
        return min(1.0, last) if self.kind == "envelope" else last

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.interp(np.abs(s), self.x, self.y, right=self.tail_value())
        return _scalar(out)

    def running_max(self) -> "ThetaCurve":
        return ThetaCurve(self.x, np.maximum.accumulate(self.y), "lb", dict(self.meta))


def theta_curve(model: NoiseModel, x_max: float, n: int = 2001) -> ThetaCurve:
    """theta sampled on n equally spaced shifts in [0, x_max]."""
    if x_max <= 0 or n < 2:
        raise ValueError("theta_curve needs x_max > 0 and n >= 2")
    x = np.linspace(0.0, x_max, n)
    return ThetaCurve(x, np.atleast_1d(model.theta(x)), "raw", {"noise": str(model)})


def lb_curve(model: NoiseModel, x_max: float | None = None, n: int = 2001) -> ThetaCurve:
    """Sampled theta_lb; for gridded noise the default range is the grid span."""
    if x_max is None:
        x_max = model.span if isinstance(model, Gridded) else model.extent(1e-15)[1] * 2.0
    return theta_curve(model, x_max, n).running_max()


def upper_hull(px: np.ndarray, py: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Upper convex hull of points sorted by x (Andrew's monotone chain)."""
    hull: list[tuple[float, float]] = []
    for p in zip(px.tolist(), py.tolist()):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point unless it lies strictly above the chord
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    hx, hy = zip(*hull)
    return np.array(hx), np.array(hy)


def concave_envelope(curve: ThetaCurve) -> ThetaCurve:
    """Least concave majorant on [0, x_max] of the curve and the origin."""
    px, py = curve.x, curve.y
    if px[0] > 0:
        px = np.concatenate([[0.0], px])
        py = np.concatenate([[0.0], py])
    else:
        py = py.copy()
        py[0] = max(py[0], 0.0)
    hx, hy = upper_hull(px, py)
    return ThetaCurve(hx, hy, "envelope", dict(curve.meta))


def contraction_criterion(model: NoiseModel, A: float, tol: float = SATURATION_TOL) -> dict:
    """eta(A) = sup_{|x| <= A} theta(x), and whether it has reached 1.

    A saturated result means the channel does not strictly contract TV at
    that shift radius (compactly supported noise, for instance).
    """
    if not A > 0:
        raise ValueError("contraction_criterion needs A > 0")
    eta = float(theta_lb(model, A))
    return {"eta": eta, "saturated": eta >= 1.0 - tol}


# -- serialization ---------------------------------------------------------

_NAMED = {"gaussian": (Gaussian, "sigma"), "laplace": (Laplace, "b"),
          "uniform": (Uniform, "width"), "exponential": (Exponential, "rate")}


def noise_from_dict(d: dict) -> NoiseModel:
    fam = d.get("family")
    if fam == "gridded":
        return Gridded(np.asarray(d["x"], dtype=float), np.asarray(d["f"], dtype=float))
    if fam not in _NAMED:
        raise ValueError(f"unknown noise family {fam!r}")
    cls, key = _NAMED[fam]
    params = d.get("params", {})
    if set(params) != {key}:
        raise ValueError(f"{fam} noise takes exactly one parameter {key!r}")
    return cls(float(params[key]))


def parse_noise(text: str) -> NoiseModel:
    """Parse 'gaussian:1', 'laplace:0.5', ... or 'gridded:path/to.json'."""
    fam, _, arg = text.partition(":")
    fam = fam.strip().lower()
    if fam == "gridded":
        return noise_from_dict(json.loads(Path(arg).read_text()))
    if fam not in _NAMED:
        raise ValueError(f"unknown noise family {fam!r}")
    cls, _ = _NAMED[fam]
    try:
        return cls(float(arg) if arg else 1.0)
    except ValueError as exc:
        raise ValueError(f"bad noise {text!r}: {exc}") from None


def _positive(name: str, v: float) -> None:
    if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
        raise ValueError(f"{name} must be a positive finite number, got {v!r}")


def _scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a
