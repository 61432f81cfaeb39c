"""Distributions, E_gamma, f-divergences and discrete-channel coefficients.

Three distribution variants are supported: ``Discrete`` (finite atoms),
``Gridded`` (a density on a grid, shared with the noise module) and
``GaussMix`` (finite Gaussian mixtures, the exact output of a discrete
input through Gaussian noise).  Pairwise quantities are computed exactly for
discrete pairs, from CDFs between likelihood-ratio crossings for mixture
pairs, and by exact integration of the piecewise-linear interpolant for
gridded pairs.  Mixing an atomic and a continuous law is rejected: the pair
is mutually singular and such comparisons are almost always a mistake.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal
from scipy.special import logsumexp, xlogy

from . import special
from .noise import (Gaussian, Gridded, NoiseModel, pos_integral_linear)

MASS_TOL = 1e-12


# -- distributions ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Discrete:
    locs: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        locs = np.atleast_1d(np.asarray(self.locs, dtype=float))
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if locs.shape != m.shape or locs.ndim != 1 or locs.size == 0:
            raise ValueError("discrete law needs matching 1-d locations and masses")
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(m))):
            raise ValueError("discrete law values must be finite")
        if np.any(m < 0) or abs(float(np.sum(m)) - 1.0) > MASS_TOL:
            raise ValueError("discrete masses must be nonnegative and sum to 1")
        # merge repeated locations so atoms are unique and sorted
        u, inv = np.unique(locs, return_inverse=True)
        object.__setattr__(self, "locs", u)
        object.__setattr__(self, "masses", np.bincount(inv, weights=m, minlength=u.size))

    def cdf(self, x):
        c = np.cumsum(self.masses)
        i = np.searchsorted(self.locs, np.asarray(x, dtype=float), side="right")
        return np.where(i > 0, c[np.maximum(i - 1, 0)], 0.0)

    def mean_cost(self, cost) -> float:
        return float(np.dot(self.masses, cost.cost(self.locs)))

    def to_dict(self):
        return {"family": "discrete", "locs": self.locs.tolist(), "masses": self.masses.tolist()}


@dataclass(frozen=True, eq=False)
class GaussMix:
    means: np.ndarray
    stds: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.means, dtype=float))
        sd = np.broadcast_to(np.asarray(self.stds, dtype=float), mu.shape).copy()
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if w.shape != mu.shape or mu.ndim != 1 or mu.size == 0:
            raise ValueError("mixture needs matching 1-d means and weights")
        if np.any(sd <= 0) or not np.all(np.isfinite(sd)) or not np.all(np.isfinite(mu)):
            raise ValueError("mixture stds must be positive and finite")
        if np.any(w < 0) or abs(float(np.sum(w)) - 1.0) > MASS_TOL:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        keep = w > 0
        object.__setattr__(self, "means", mu[keep])
        object.__setattr__(self, "stds", sd[keep])
        object.__setattr__(self, "weights", w[keep])

    def extent(self, k: float = 20.0) -> tuple[float, float]:
        return (float(np.min(self.means - k * self.stds)),
                float(np.max(self.means + k * self.stds)))

    def logpdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(x.shape)
        lw = np.log(self.weights) - np.log(self.stds) - 0.5 * math.log(2 * math.pi)
        chunk = max(1, 2_000_000 // self.means.size)
        for s in range(0, x.size, chunk):
            z = (x[s:s + chunk, None] - self.means) / self.stds
            out[s:s + chunk] = logsumexp(lw - 0.5 * z * z, axis=1)
        return out

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def _zs(self, x):
        return (np.asarray(x, dtype=float)[..., None] - self.means) / self.stds

    def cdf(self, x):
        return np.sum(self.weights * special.qfunc(-self._zs(x)), axis=-1)

    def sf(self, x):
        return np.sum(self.weights * special.qfunc(self._zs(x)), axis=-1)

    def mass(self, a: float, b: float) -> float:
        """P[a < X < b], evaluated on the accurate side of each component."""
        za = (a - self.means) / self.stds
        zb = (b - self.means) / self.stds
        upper = special.qfunc(za) - special.qfunc(zb)
        lower = special.qfunc(-zb) - special.qfunc(-za)
        return float(np.sum(self.weights * np.where(za > 0, upper, lower)))

    def cdf_integral(self, x):
        """int_{-inf}^x F(y) dy."""
        z = self._zs(x)
        return np.sum(self.weights * self.stds * (z * special.qfunc(-z) + special.phi(z)), axis=-1)

    def sf_integral(self, x):
        """int_x^inf (1 - F(y)) dy."""
        z = self._zs(x)
        return np.sum(self.weights * self.stds * (special.phi(z) - z * special.qfunc(z)), axis=-1)

    def to_dict(self):
        return {"family": "gaussmix", "means": self.means.tolist(),
                "stds": self.stds.tolist(), "weights": self.weights.tolist()}


Distribution = Discrete | Gridded | GaussMix


def dist_from_dict(d: dict):
    fam = d.get("family")
    if fam == "discrete":
        return Discrete(d["locs"], d["masses"])
    if fam == "gridded":
        return Gridded(np.asarray(d["x"], dtype=float), np.asarray(d["f"], dtype=float))
    if fam == "gaussmix":
        return GaussMix(d["means"], d["stds"], d["weights"])
    raise ValueError(f"unknown distribution family {fam!r}")


def point_mass(x: float = 0.0) -> Discrete:
    return Discrete([x], [1.0])


def bernoulli(p: float) -> Discrete:
    return Discrete([0.0, 1.0], [1.0 - p, p])


# -- convolution -----------------------------------------------------------

def convolve(P, noise: NoiseModel, tail: float = 1e-13, points_per_scale: int = 1000):
    """Law of X + Z for X ~ P and independent noise Z.

    Gaussian noise keeps discrete and mixture inputs in closed form.  Other
    combinations are rendered on a uniform grid from cell averages of the
    noise CDF, which conserves mass exactly and handles density jumps.
    """
    if tail > 1e-8:
        raise ValueError(f"truncating tail mass {tail:g} > 1e-8 would under-resolve the output")
    if isinstance(noise, Gaussian):
        if isinstance(P, Discrete):
            return GaussMix(P.locs, noise.sigma, P.masses)
        if isinstance(P, GaussMix):
            return GaussMix(P.means, np.sqrt(P.stds ** 2 + noise.sigma ** 2), P.weights)
    if isinstance(noise, Gridded):
        scale = noise.step
    else:
        lo, hi = noise.extent(0.5)
        scale = (hi - lo) if hi > lo else 1.0
    lo, hi = noise.extent(tail)
    if isinstance(P, Discrete):
        h = scale / points_per_scale
        y = np.arange(P.locs[0] + lo - h, P.locs[-1] + hi + 2 * h, h)
        f = np.zeros_like(y)
        for x0, m in zip(P.locs, P.masses):
            f += m * (np.asarray(noise.cdf(y - x0 + h / 2)) - np.asarray(noise.cdf(y - x0 - h / 2))) / h
        return _grid_dist(y, f)
    if isinstance(P, GaussMix):
        a, b = P.extent()
        h = min(float(np.min(P.stds)) / 50.0, scale / points_per_scale)
        x = np.arange(a, b + h, h)
        P = _grid_dist(x, P.pdf(x))
    if isinstance(P, Gridded):
        h = P.step
        x = np.arange(P.x[0], P.x[-1] + h, h)
        fx = P.pdf(x)
        j = np.arange(math.floor(lo / h) - 1, math.ceil(hi / h) + 2)
        kern = (np.asarray(noise.cdf(j * h + h / 2)) - np.asarray(noise.cdf(j * h - h / 2))) / h
        f = signal.fftconvolve(fx * h, kern)
        y = x[0] + (j[0] + np.arange(f.size)) * h
        return _grid_dist(y, np.maximum(f, 0.0))
    raise TypeError(f"cannot convolve {type(P).__name__}")


def _grid_dist(x, f) -> Gridded:
    return Gridded.from_pdf(x, f)


# -- E_gamma and TV --------------------------------------------------------

def e_gamma(P, Q, gamma: float) -> float:
    """E_gamma(P||Q) = 1/2 int |dP - gamma dQ| - 1/2 |1 - gamma|."""
    if not (gamma >= 0 and math.isfinite(gamma)):
        raise ValueError("gamma must be a finite nonnegative number")
    if gamma == 0.0:
        return 0.0
    kind = _pair_kind(P, Q)
    # E_gamma is the mass of (P - gamma Q)^+ for gamma >= 1 and of
    # (gamma Q - P)^+ below 1; this avoids cancellation against |1 - gamma|/2.
    if kind == "discrete":
        locs, p, q = _align(P, Q)
        d = p - gamma * q
        return float(np.sum(np.maximum(d, 0.0) if gamma >= 1 else np.maximum(-d, 0.0)))
    if kind == "gaussmix":
        return _e_gamma_mix(P, Q, gamma)
    u, p, q = _common_grid(P, Q)
    d = p - gamma * q
    return pos_integral_linear(u, d if gamma >= 1 else -d)


def tv(P, Q) -> float:
    return e_gamma(P, Q, 1.0)


def _crossings(P: GaussMix, Q: GaussMix, lg: float) -> tuple[np.ndarray, float]:
    """Roots of log p - log q - lg, and the sign of that function at -inf."""
    a1, b1 = P.extent(15.0)
    a2, b2 = Q.extent(15.0)
    lo, hi = min(a1, a2), max(b1, b2)
    h = min(float(np.min(P.stds)), float(np.min(Q.stds))) / 25.0
    x = np.linspace(lo, hi, int(math.ceil((hi - lo) / h)) + 1)
    r = P.logpdf(x) - Q.logpdf(x) - lg
    # skip exact zeros so a crossing that lands on a node is still bracketed
    nz = np.flatnonzero(np.sign(r))
    s = np.sign(r[nz])
    roots = []

    def fn(z):
        return float(P.logpdf(z)[0] - Q.logpdf(z)[0] - lg)

    for i in np.flatnonzero(s[:-1] * s[1:] < 0):
        roots.append(optimize.brentq(fn, x[nz[i]], x[nz[i + 1]], xtol=1e-14))
    first = float(s[0]) if s.size else 0.0
    return np.array(roots), first


def _e_gamma_mix(P: GaussMix, Q: GaussMix, gamma: float) -> float:
    roots, first = _crossings(P, Q, math.log(gamma))
    edges = np.concatenate([[-math.inf], roots, [math.inf]])
    want = 1.0 if gamma >= 1 else -1.0
    total = 0.0
    sign = first
    for a, b in zip(edges[:-1], edges[1:]):
        if sign == want:
            part = P.mass(a, b) - gamma * Q.mass(a, b)
            total += part if gamma >= 1 else -part
        sign = -sign
    return max(total, 0.0)


def e_gamma_derivative(P, Q, gamma: float) -> float:
    """d/dgamma E_gamma = 1{gamma < 1} - Q[dP/dQ > gamma]."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    ind = 1.0 if gamma < 1 else 0.0
    kind = _pair_kind(P, Q)
    if kind == "discrete":
        locs, p, q = _align(P, Q)
        return ind - float(np.sum(q[p > gamma * q]))
    if kind == "gaussmix":
        roots, first = _crossings(P, Q, math.log(gamma))
        edges = np.concatenate([[-math.inf], roots, [math.inf]])
        tot, sign = 0.0, first
        for a, b in zip(edges[:-1], edges[1:]):
            if sign > 0:
                tot += Q.mass(a, b)
            sign = -sign
        return ind - tot
    # gridded: Q-mass of {p > gamma q} from the interpolants
    u, p, q = _common_grid(P, Q)
    d = p - gamma * q
    mask = (d[:-1] > 0) & (d[1:] > 0)
    qm = 0.5 * (q[:-1] + q[1:]) * np.diff(u)
    return ind - float(np.sum(qm[mask]))


def e_gamma_derivative_check(P, Q, gamma: float, h: float = 1e-5) -> dict:
    """Closed-form derivative next to a central finite difference."""
    closed = e_gamma_derivative(P, Q, gamma)
    fd = (e_gamma(P, Q, gamma + h) - e_gamma(P, Q, gamma - h)) / (2 * h)
    return {"closed_form": closed, "finite_difference": fd, "abs_err": abs(closed - fd)}


# -- f-divergences ---------------------------------------------------------

@dataclass(frozen=True)
class FDiv:
    """A named f-divergence: kl, chi2, hellinger2, or falpha with exponent alpha.

    ``falpha`` uses f = 1 - x^a for a < 1, x log x for a = 1 and x^a - 1 for
    a > 1; its divergence is a monotone transform of the Renyi divergence.
    """

    name: str
    alpha: float = 1.0

    def __post_init__(self):
        if self.name not in ("kl", "chi2", "hellinger2", "falpha"):
            raise ValueError(f"unknown f-divergence {self.name!r}")
        if self.name == "falpha" and not self.alpha > 0:
            raise ValueError("falpha needs alpha > 0")

    @property
    def key(self) -> str:
        if self.name == "falpha":
            return "kl" if self.alpha == 1 else ("falpha_lt1" if self.alpha < 1 else "falpha_gt1")
        return self.name

    def f(self, x):
        x = np.asarray(x, dtype=float)
        a = self.alpha
        return {"kl": lambda: xlogy(x, x), "chi2": lambda: (x - 1) ** 2,
                "hellinger2": lambda: (np.sqrt(x) - 1) ** 2,
                "falpha_lt1": lambda: 1 - x ** a, "falpha_gt1": lambda: x ** a - 1}[self.key]()

    def f2(self, x):
        """Second derivative f''(x)."""
        x = np.asarray(x, dtype=float)
        a = self.alpha
        return {"kl": lambda: 1 / x, "chi2": lambda: 2 + 0 * x,
                "hellinger2": lambda: 0.5 * x ** -1.5,
                "falpha_lt1": lambda: a * (1 - a) * x ** (a - 2),
                "falpha_gt1": lambda: a * (a - 1) * x ** (a - 2)}[self.key]()

    def f1(self, x):
        """First derivative f'(x)."""
        x = np.asarray(x, dtype=float)
        a = self.alpha
        return {"kl": lambda: np.log(x) + 1, "chi2": lambda: 2 * (x - 1),
                "hellinger2": lambda: 1 - x ** -0.5,
                "falpha_lt1": lambda: -a * x ** (a - 1),
                "falpha_gt1": lambda: a * x ** (a - 1)}[self.key]()

    def f0(self) -> float:
        return {"kl": 0.0, "chi2": 1.0, "hellinger2": 1.0,
                "falpha_lt1": 1.0, "falpha_gt1": -1.0}[self.key]

    def slope_inf(self) -> float:
        """lim f(x)/x, the weight of P-mass where Q vanishes."""
        return {"kl": math.inf, "chi2": math.inf, "hellinger2": 1.0,
                "falpha_lt1": 0.0, "falpha_gt1": math.inf}[self.key]

    def integrand(self, lp, lq):
        """q f(p/q) from log densities, finite wherever both are."""
        a = self.alpha
        with np.errstate(invalid="ignore", over="ignore"):
            k = self.key
            if k == "kl":
                v = np.exp(lp) * (lp - lq)
            elif k == "chi2":
                v = np.exp(2 * lp - lq) - 2 * np.exp(lp) + np.exp(lq)
            elif k == "hellinger2":
                v = (np.exp(lp / 2) - np.exp(lq / 2)) ** 2
            elif k == "falpha_lt1":
                v = np.exp(lq) - np.exp(a * lp + (1 - a) * lq)
            else:
                v = np.exp(a * lp + (1 - a) * lq) - np.exp(lq)
        pinf, qinf = np.isneginf(lp), np.isneginf(lq)
        v = np.where(pinf & qinf, 0.0, v)
        # p > 0 = q: weight by the slope at infinity
        s = self.slope_inf()
        v = np.where(~pinf & qinf, np.exp(lp) * s if math.isfinite(s) else np.inf, v)
        # p = 0 < q: q f(0)
        f0 = float(self.f(0.0))
        return np.where(pinf & ~qinf, np.exp(lq) * f0, v)


def parse_fdiv(text: str) -> FDiv:
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    if name in ("renyi", "falpha"):
        return FDiv("falpha", float(arg) if arg else 2.0)
    return FDiv(name)


def f_divergence(P, Q, f: FDiv | str) -> float:
    """D_f(P||Q) = E_Q f(dP/dQ); +inf when P is not dominated and f grows superlinearly."""
    f = parse_fdiv(f) if isinstance(f, str) else f
    kind = _pair_kind(P, Q)
    with np.errstate(divide="ignore"):
        if kind == "discrete":
            locs, p, q = _align(P, Q)
            return float(np.sum(f.integrand(np.log(p), np.log(q))))
        if kind == "gaussmix":
            return _fdiv_mix(P, Q, f)
        u, p, q = _common_grid(P, Q)
        v = f.integrand(np.log(p), np.log(q))
    if np.any(np.isinf(v)):
        return math.inf
    return float(np.trapezoid(v, u))


def _fdiv_mix(P: GaussMix, Q: GaussMix, f: FDiv) -> float:
    a1, b1 = P.extent(20.0)
    a2, b2 = Q.extent(20.0)
    lo, hi = min(a1, a2), max(b1, b2)
    h = min(float(np.min(P.stds)), float(np.min(Q.stds))) / 100.0
    n = int(math.ceil((hi - lo) / h))
    x = np.linspace(lo, hi, n + 1 + (n % 2))
    v = f.integrand(P.logpdf(x), Q.logpdf(x))
    total = float(_simpson(v, x))
    # a non-negligible integrand at the edge of the window means the
    # integral diverges (Q tails lighter than the f-weighted P tails)
    if not math.isfinite(total) or max(abs(v[0]), abs(v[-1])) > 1e-9 * max(1.0, abs(total)):
        return math.inf
    return total


def _simpson(v, x):
    from scipy.integrate import simpson
    return simpson(v, x=x)


def hellinger2(P, Q) -> float:
    """int (sqrt dP - sqrt dQ)^2, ranging over [0, 2]."""
    return f_divergence(P, Q, FDiv("hellinger2"))


def integral_representation(P, Q, f: FDiv | str, panels_per_decade: int = 1,
                            nodes: int = 64, span: tuple[float, float] = (1e-6, 1e6)) -> dict:
    """D_f through int_0^inf E_gamma(P||Q) f''(gamma) d gamma.

    The integral is taken in log gamma with Gauss-Legendre panels split at
    gamma = 1 and at every likelihood ratio of a discrete pair, so each
    panel sees a smooth integrand. For discrete pairs the two tails outside
    ``span`` are added in closed form; for continuous pairs they are dropped.
    """
    f = parse_fdiv(f) if isinstance(f, str) else f
    lo, hi = span
    discrete = _pair_kind(P, Q) == "discrete"
    ratios = []
    if discrete:
        _, p, q = _align(P, Q)
        ok = (p > 0) & (q > 0)
        ratios = (p[ok] / q[ok]).tolist()
        # widen the span so both tails are exactly linear or constant in gamma
        lo = min([lo] + [0.5 * r for r in ratios])
        hi = max([hi] + [2.0 * r for r in ratios])
    breaks = {math.log(lo), 0.0, math.log(hi)}
    for r in ratios:
        if lo < r < hi:
            breaks.add(math.log(r))
    edges = sorted(breaks)
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(1, int(math.ceil((b - a) / math.log(10) * panels_per_decade)))
        for j in range(k):
            pa = a + (b - a) * j / k
            pb = a + (b - a) * (j + 1) / k
            s = 0.5 * (pb - pa) * xg + 0.5 * (pa + pb)
            g = np.exp(s)
            e = np.array([e_gamma(P, Q, float(gi)) for gi in g])
            total += 0.5 * (pb - pa) * float(np.sum(wg * e * f.f2(g) * g))
    if discrete:
        # E_gamma = c0 gamma below lo and P(q = 0) above hi
        c0 = e_gamma(P, Q, lo) / lo
        total += c0 * (lo * float(f.f1(lo)) - float(f.f(lo)) + f.f0())
        c_inf = e_gamma(P, Q, hi)
        if c_inf > 0:
            total += c_inf * (f.slope_inf() - float(f.f1(hi)))
    direct = f_divergence(P, Q, f)
    return {"direct": direct, "integral": total, "abs_err": abs(direct - total)}


# -- pair plumbing ---------------------------------------------------------

def _pair_kind(P, Q) -> str:
    if isinstance(P, Discrete) and isinstance(Q, Discrete):
        return "discrete"
    if isinstance(P, Discrete) or isinstance(Q, Discrete):
        raise ValueError("cannot compare an atomic law with a continuous one; "
                         "convolve both with the same noise first")
    if isinstance(P, GaussMix) and isinstance(Q, GaussMix):
        return "gaussmix"
    return "grid"


def _align(P: Discrete, Q: Discrete):
    locs = np.union1d(P.locs, Q.locs)
    p = np.zeros(locs.size)
    q = np.zeros(locs.size)
    p[np.searchsorted(locs, P.locs)] = P.masses
    q[np.searchsorted(locs, Q.locs)] = Q.masses
    return locs, p, q


def _grid_of(D) -> np.ndarray:
    if isinstance(D, Gridded):
        return D.x
    a, b = D.extent(15.0)
    h = float(np.min(D.stds)) / 200.0
    return np.arange(a, b + h, h)


def _common_grid(P, Q):
    u = np.union1d(_grid_of(P), _grid_of(Q))
    return u, np.asarray(P.pdf(u)), np.asarray(Q.pdf(u))


# -- discrete channels -----------------------------------------------------

def _check_channel(K) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] < 1 or K.shape[1] < 1:
        raise ValueError("channel must be a 2-d row-stochastic matrix")
    if np.any(K < 0) or np.max(np.abs(K.sum(axis=1) - 1.0)) > 1e-9:
        raise ValueError("channel rows must be probability vectors")
    return K


def dobrushin_coefficient(K) -> float:
    """max over input pairs of TV between the two output rows."""
    K = _check_channel(K)
    if K.shape[0] == 1:
        return 0.0
    d = 0.5 * np.abs(K[:, None, :] - K[None, :, :]).sum(axis=2)
    return float(d.max())


def eta_chi2_discrete(K, px) -> float:
    """Squared second singular value of P_XY(x,y) / sqrt(P_X(x) P_Y(y))."""
    K = _check_channel(K)
    px = np.asarray(px, dtype=float)
    if px.shape != (K.shape[0],) or np.any(px <= 0) or abs(px.sum() - 1) > 1e-9:
        raise ValueError("input law must be strictly positive on every row and sum to 1")
    joint = px[:, None] * K
    py = joint.sum(axis=0)
    keep = py > 0
    B = joint[:, keep] / np.sqrt(px[:, None] * py[None, keep])
    s = np.linalg.svd(B, compute_uv=False)
    return float(s[1] ** 2) if s.size > 1 else 0.0


def bsc(delta: float) -> np.ndarray:
    return np.array([[1 - delta, delta], [delta, 1 - delta]])


# -- f_alpha contraction and non-contraction --------------------------------

def renyi_contraction_bound(alpha: float, a: float, t: float, eps: float) -> float:
    """Upper bound on the f_alpha Dobrushin curve of the unit Gaussian channel.

    Valid for alpha in (0, 1) and any eps > 0:
    t (1 - 2 Q(sqrt(a) t^{-(1+eps)/(2 alpha)})) + (1 + alpha - alpha^2) t^{1+eps}.
    """
    if not 0 < alpha < 1:
        raise ValueError("the f_alpha contraction bound needs alpha in (0, 1)")
    if not (a > 0 and eps > 0 and t > 0):
        raise ValueError("need a > 0, eps > 0 and t > 0")
    arg = math.sqrt(a) * t ** (-(1 + eps) / (2 * alpha))
    return t * (1 - 2 * special.qfunc(arg)) + (1 + alpha - alpha * alpha) * t ** (1 + eps)


def renyi_contraction_bound_opt(alpha: float, a: float, t: float,
                                eps_grid=None) -> tuple[float, float]:
    """Minimum of the bound over a grid of eps; returns (bound, eps)."""
    eps_grid = np.geomspace(1e-3, 10, 200) if eps_grid is None else eps_grid
    vals = [renyi_contraction_bound(alpha, a, t, float(e)) for e in eps_grid]
    i = int(np.argmin(vals))
    return vals[i], float(eps_grid[i])


def binary_falpha(alpha: float, p: float, q: float) -> float:
    """D_{f_alpha}(Bern(p) || Bern(q))."""
    P, Q = bernoulli(p), bernoulli(q)
    return f_divergence(P, Q, FDiv("falpha", alpha))


@dataclass(frozen=True, eq=False)
class Witness:
    P: Discrete
    Q: Discrete
    p: float
    q: float
    b: float


def noncontraction_witness(alpha: float, t: float, a: float, q: float) -> Witness:
    """Two-atom pair {0, b} whose f_alpha divergence barely shrinks under noise.

    P puts mass p at b, Q mass q, with b = sqrt(a/p) so that P spends the
    whole power budget a.  p = t/log(1/q) for alpha = 1 and
    p = q (t/q)^{1/alpha} for alpha > 1.
    """
    if not alpha >= 1:
        raise ValueError("non-contraction witnesses exist for alpha >= 1")
    if not (0 < q < 1 and t > 0 and a > 0):
        raise ValueError("need 0 < q < 1, t > 0 and a > 0")
    if alpha == 1:
        if not t < a / 8:
            raise ValueError("the alpha = 1 witness needs t < a/8")
        p = t / math.log(1 / q)
    else:
        p = q * (t / q) ** (1 / alpha)
    if not 0 < p < 1:
        raise ValueError(f"witness mass p = {p:g} falls outside (0, 1)")
    b = math.sqrt(a / p)
    P = Discrete([0.0, b], [1 - p, p])
    Q = Discrete([0.0, b], [1 - q, q])
    # both laws must respect the budget: E_P X^2 = a, E_Q X^2 = q b^2 <= a
    if q * b * b > a * (1 + 1e-12):
        raise ValueError(f"q = {q:g} too large: Q violates the power budget")
    return Witness(P, Q, p, q, b)


# -- smoothing by Gaussian-like noise --------------------------------------

def tv_w1_bound(noise: NoiseModel, w1: float) -> float:
    """TV(P * N, Q * N) <= P[|Z| <= W1(P, Q)/2] for symmetric unimodal noise."""
    if w1 < 0:
        raise ValueError("W1 distance must be nonnegative")
    ok = noise.is_symmetric_unimodal() if isinstance(noise, Gridded) else noise.symmetric_unimodal
    if not ok:
        raise ValueError(f"the TV-W1 bound needs symmetric unimodal noise, not {noise}")
    return float(noise.cdf(w1 / 2) - noise.cdf(-w1 / 2))


def w1_distance(P, Q) -> float:
    """int |F_P - F_Q| over the real line."""
    if isinstance(P, Discrete) and isinstance(Q, Discrete):
        locs, p, q = _align(P, Q)
        diff = np.cumsum(p - q)[:-1]
        return float(np.sum(np.abs(diff) * np.diff(locs)))
    if isinstance(Q, Discrete):
        P, Q = Q, P
    if isinstance(P, Discrete) and isinstance(Q, GaussMix):
        return _w1_atoms_mix(P, Q)
    if isinstance(P, Discrete):
        a, b = Q.extent() if hasattr(Q, "extent") else (Q.x[0], Q.x[-1])
        u = np.union1d(np.linspace(min(a, P.locs[0]), max(b, P.locs[-1]), 200001), P.locs)
        mid = 0.5 * (u[1:] + u[:-1])
        return float(np.sum(np.abs(P.cdf(mid) - np.asarray(Q.cdf(mid))) * np.diff(u)))
    u = np.union1d(_grid_of(P), _grid_of(Q))
    return float(np.trapezoid(np.abs(np.asarray(P.cdf(u)) - np.asarray(Q.cdf(u))), u))


def _w1_atoms_mix(P: Discrete, Q: GaussMix) -> float:
    # F_P is constant between atoms; integrate |c - F_Q| piecewise in closed
    # form, splitting at the point where F_Q crosses c.
    c = np.concatenate([[0.0], np.cumsum(P.masses)])
    c[-1] = 1.0
    edges = np.concatenate([[-math.inf], P.locs, [math.inf]])
    def A(x):
        return float(Q.cdf_integral(x)) if math.isfinite(x) else (0.0 if x < 0 else math.nan)

    def B(x):
        return float(Q.sf_integral(x)) if math.isfinite(x) else (0.0 if x > 0 else math.nan)

    total = 0.0
    for ci, a, b in zip(c, edges[:-1], edges[1:]):
        if ci == 0.0:
            total += A(b) - A(a)
            continue
        if ci == 1.0:
            total += B(a) - B(b)
            continue
        lo = float(Q.cdf(a)) if math.isfinite(a) else 0.0
        hi = float(Q.cdf(b)) if math.isfinite(b) else 1.0
        if lo >= ci:
            split = a
        elif hi <= ci:
            split = b
        else:
            ma, mb = Q.extent()
            ga = a if math.isfinite(a) else ma
            gb = b if math.isfinite(b) else mb
            split = optimize.brentq(lambda x: float(Q.cdf(x)) - ci, ga, gb, xtol=1e-14)
        # on [a, split] F_Q <= c, on [split, b] F_Q >= c
        if split > a:
            total += ci * (split - a) - (A(split) - A(a))
        if b > split:
            total += (1 - ci) * (b - split) - (B(split) - B(b))
    return total


def clt_smoothing_bound(m3: float, sigma2: float, n: int) -> float:
    """3 E|X|^3 / sqrt(2 pi sigma^2 n): TV of a smoothed normalized sum to its Gaussian limit."""
    if not (m3 >= 0 and sigma2 > 0 and n >= 1):
        raise ValueError("need E|X|^3 >= 0, sigma^2 > 0 and n >= 1")
    return 3.0 * m3 / math.sqrt(2 * math.pi * sigma2 * n)
