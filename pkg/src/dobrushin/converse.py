"""Converse bounds built on the TV Dobrushin curve.

Iterating the curve across a chain of n noisy stages bounds the
T-information T(W; X_n) = TV(P_{W X_n}, P_W x P_{X_n}); the helpers here
turn that into bounds on mutual information, correlation, computation
error with faulty gates, and the behavior of relays on binary trees.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from . import special
from .curve import CostFunction, DobrushinCurve, Power, ftv_gaussian
from .divergence import clt_smoothing_bound
from .noise import Gaussian, NoiseModel


# -- rate lemma ------------------------------------------------------------

def _check_decrement(h, grid=None) -> None:
    grid = np.geomspace(1e-9, 1.0, 400) if grid is None else grid
    vals = np.array([h(float(t)) for t in grid])
    if np.any(vals <= 0) or np.any(vals > grid * (1 + 1e-12)):
        raise ValueError("decrement h must satisfy 0 < h(t) <= t")
    if np.any(np.diff(vals) < -1e-12 * np.abs(vals[1:])):
        raise ValueError("decrement h must be nondecreasing")


def rate_integral(h, t: float, panels_per_decade: int = 10) -> float:
    """G(t) = int_t^1 dtau / h(tau), integrated in log tau.

    The integrand can grow like exp(1/t), so the range is split into short
    panels in log tau; G is inf once h underflows to 0 at the lower end.
    """
    if t >= 1.0:
        return 0.0
    if not h(t) > 0:
        return math.inf
    m = max(1, math.ceil(panels_per_decade * -math.log10(t)))
    edges = np.linspace(math.log(t), 0.0, m + 1)
    f = lambda u: math.exp(u) / h(math.exp(u))
    parts = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-11, limit=100)
        parts.append(val)
    total = math.fsum(parts)
    return total if math.isfinite(total) else math.inf


def rate_lemma_bound(h, n: float, tol: float = 1e-12, check: bool = True) -> float:
    """Bound t_n <= G^{-1}(n - 1) for t_{k+1} <= t_k - h(t_k), t_1 <= 1.

    G^{-1} is found by bisection on log t.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if check:
        _check_decrement(h)
    target = n - 1.0
    if target == 0:
        return 1.0
    lo, hi = -1.0, 0.0
    while rate_integral(h, math.exp(lo)) < target:
        lo *= 2.0
        if lo < -745:
            return 0.0
    # bisect on log t, then finish in t to reach the absolute tolerance
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rate_integral(h, math.exp(mid)) > target:
            lo = mid
        else:
            hi = mid
        if math.exp(hi) - math.exp(lo) < tol:
            break
    return math.exp(hi)


def iterate_decrement(h, n: int, t1: float = 1.0) -> np.ndarray:
    """t_1..t_n of the recursion t_{k+1} = t_k - h(t_k)."""
    out = np.empty(n)
    t = t1
    for k in range(n):
        out[k] = t
        t = t - h(t)
    return out


# -- decay of T-information along a chain ----------------------------------

def _scalar_curve(noise: NoiseModel, cost: CostFunction):
    """t -> F_TV(t) at unit budget, with a fast pure-float path for Gaussian noise."""
    if isinstance(noise, Gaussian):
        s = noise.sigma
        inv = _scalar_inv(cost)
        erfc = math.erfc
        root2 = math.sqrt(2.0)

        def F(t):
            if t <= 0.0:
                return 0.0
            u = inv(1.0 / t) / s
            return t * (1.0 - erfc(u / root2))
        return F
    curve = DobrushinCurve(noise, cost, 1.0)
    return lambda t: float(curve.upper(t)) if t > 0 else 0.0


def _scalar_inv(cost: CostFunction):
    if isinstance(cost, Power):
        e = 1.0 / cost.p
        return lambda y: y ** e
    return lambda y: float(cost.inv(y))


@dataclass
class DecayResult:
    n: np.ndarray
    t: np.ndarray
    bound: np.ndarray  # a * t_n
    a: float


def t_decay(noise: NoiseModel, cost: CostFunction, a: float, n_max: int) -> DecayResult:
    """Iterate t_{n+1} = t_n theta_c(2 M^{-1}(1/t_n)) from t_1 = 1.

    The bound on T(W; X_n) is a * t_n (budget-normalized units).
    """
    if n_max < 1 or a <= 0:
        raise ValueError("need n_max >= 1 and a > 0")
    F = _scalar_curve(noise, cost)
    t = np.empty(n_max)
    x = 1.0
    for k in range(n_max):
        t[k] = x
        x = F(x)
    return DecayResult(np.arange(1, n_max + 1), t, a * t, a)


def decay_decrement(noise: NoiseModel, cost: CostFunction):
    """h(t) = t (1 - theta_c(2 M^{-1}(1/t))), the per-stage loss of the curve.

    Computed from 1 - theta_c directly; t - F(t) would cancel to 0 long
    before h itself underflows.
    """
    if isinstance(noise, Gaussian):
        inv = _scalar_inv(cost)
        c = 1.0 / (noise.sigma * math.sqrt(2.0))
        return lambda t: t * math.erfc(inv(1.0 / t) * c) if t > 0 else 0.0
    curve = DobrushinCurve(noise, cost, 1.0)
    return lambda t: math.exp(curve.log_gap(t)) if t > 0 else 0.0


def decay_rate_bound(noise: NoiseModel, cost: CostFunction, a: float, n: float,
                     half_factor: bool = False) -> float:
    """Analytic cross-check: a * G^{-1}(n - 1) with G built from the curve.

    With ``half_factor`` the integrand carries an extra 1/2, i.e. G^{-1} is
    evaluated at 2(n - 1); this variant is reported for comparison only.
    """
    h = decay_decrement(noise, cost)
    m = 2.0 * (n - 1) + 1 if half_factor else n
    return a * rate_lemma_bound(h, m, check=False)


def claimed_rate(cost: CostFunction, n):
    """Asymptotic order of t_n for unit Gaussian noise and the given cost."""
    n = np.asarray(n, dtype=float)
    if isinstance(cost, Power):
        return np.log(n) ** (-cost.p / 2.0)
    if cost.to_dict()["family"] == "subexp":
        return np.exp(-np.sqrt(2.0 * cost.alpha * np.log(n)))
    return n ** (-2.0 * cost.alpha)


def rate_slope(res: DecayResult, cost: CostFunction, n_lo: int = 1000, n_hi: int | None = None,
               points: int = 200) -> float:
    """Slope of log t_n regressed on log(1/rate(n)); -1 means the rates match."""
    n_hi = int(res.n[-1]) if n_hi is None else n_hi
    ns = np.unique(np.geomspace(n_lo, n_hi, points).astype(int))
    y = np.log(res.t[ns - 1])
    x = -np.log(claimed_rate(cost, ns))
    return float(np.polyfit(x, y, 1)[0])


def t_information_bound(noise: NoiseModel, cost: CostFunction, a: float, n: float,
                        iterate_up_to: int = 10 ** 6) -> float:
    """min(1, a t_n): exact iteration when feasible, the rate lemma beyond."""
    if n <= iterate_up_to:
        return min(1.0, float(t_decay(noise, cost, a, int(n)).bound[-1]))
    return min(1.0, decay_rate_bound(noise, cost, a, n))


# -- information and correlation bounds ------------------------------------

def mi_bound_finite(T: float, m: int) -> float:
    """I(W; Y) <= T log(m - 1) + h(T) for W uniform-free on m values (nats)."""
    if not (0 <= T <= 1) or m < 2:
        raise ValueError("need T in [0, 1] and alphabet size m >= 2")
    return T * math.log(m - 1) + special.binary_entropy(T)


def chi2_tv_bound(T: float, p_min: float) -> dict:
    """chi^2 from T-information when every atom of the input has mass >= p_min."""
    if not (0 <= T <= 1 and 0 < p_min <= 1):
        raise ValueError("need T in [0, 1] and p_min in (0, 1]")
    c = T / p_min
    return {"chi2": c, "sqrt_chi2": math.sqrt(c)}


def mi_bound_chain(d: int, E: float, n: float, T_bound: float) -> float:
    """Mutual information bound (nats) after n stages of d-dimensional AWGN relays.

    Quantizes the output at scale eps with eps^2 = d^2 E / log n and splits
    the information into a quantization term, a tail term and the
    T-information of the quantized output.
    """
    if d < 1 or E <= 0 or n <= 1 or not 0 <= T_bound <= 1:
        raise ValueError("need d >= 1, E > 0, n > 1 and T in [0, 1]")
    L = math.log(n)
    u2 = L
    eps2 = d * d * E / L
    eps = math.sqrt(eps2)
    u = math.sqrt(u2)
    quant = 0.5 * d * math.log1p(eps2 / d)
    tail = d * d * E / (2 * u2) * math.log1p(u2 / d)
    info = T_bound * d * math.log1p(2 * u / eps) + special.binary_entropy(min(T_bound, 1.0))
    return quant + tail + info


def corr_bound_gaussian(I: float) -> float:
    """rho^2 <= 1 - exp(-2 I) for jointly Gaussian pairs (I in nats)."""
    if I < 0:
        raise ValueError("mutual information must be nonnegative")
    return float(np.clip(-math.expm1(-2 * I), 0.0, 1.0))


def corr_bound_moment(T: float, q: float, norm2q: float) -> float:
    """rho^2 <= 4 T^{1-1/q} ||W||_{2q}^2 (Hoelder) for unit-variance W."""
    if not (0 <= T <= 1 and q >= 1 and norm2q > 0):
        raise ValueError("need T in [0, 1], q >= 1 and a positive norm")
    return float(np.clip(4 * T ** (1 - 1 / q) * norm2q ** 2, 0.0, 1.0))


SUBGAUSS_T_MAX = math.exp(-2 / math.e)


def corr_bound_subgauss(T: float, psi2: float) -> float:
    """rho^2 <= 8 T ln(1/T) psi2^2 for sub-Gaussian W, valid for T < e^{-2/e}."""
    if not 0 < T < SUBGAUSS_T_MAX:
        raise ValueError(f"sub-Gaussian correlation bound needs 0 < T < {SUBGAUSS_T_MAX:.6f}")
    if psi2 <= 0:
        raise ValueError("psi2 norm must be positive")
    return float(np.clip(8 * T * math.log(1 / T) * psi2 ** 2, 0.0, 1.0))


def corr_bounds(T: float, variant: str, **kw) -> float:
    """Dispatch to the gaussian (I=...), moment (q=..., norm2q=...) or subgauss (psi2=...) bound."""
    if variant == "gaussian":
        return corr_bound_gaussian(kw["I"])
    if variant == "moment":
        return corr_bound_moment(T, kw["q"], kw["norm2q"])
    if variant == "subgauss":
        return corr_bound_subgauss(T, kw["psi2"])
    raise ValueError(f"unknown correlation bound variant {variant!r}")


def clt_bound(n: int, sigma: float, m3: float = 1.0) -> float:
    """3 E|X|^3 / sqrt(2 pi sigma^2 n), the smoothed CLT distance bound."""
    if n < 1 or sigma <= 0 or m3 < 1:
        raise ValueError("need n >= 1, sigma > 0 and third absolute moment >= 1")
    return clt_smoothing_bound(m3, sigma * sigma, n)


def linear_control_corr(sigma0_sq: float, E: float, n: int) -> float:
    """Best squared correlation through n AWGN stages with linear relays."""
    if sigma0_sq <= 0 or E <= 0 or n < 0:
        raise ValueError("need sigma0^2 > 0, E > 0 and n >= 0")
    return sigma0_sq / (1 + sigma0_sq) * (E / (1 + E)) ** n


def awgn_capacity(P: float, d: int = 1) -> float:
    """(d/2) ln(1 + P/d) nats."""
    if P < 0 or d < 1:
        raise ValueError("need P >= 0 and d >= 1")
    return 0.5 * d * math.log1p(P / d)


# -- noisy circuits --------------------------------------------------------

@dataclass
class CircuitResult:
    P: float
    k: int
    t_star: float
    error_lb: float
    residual: float


def _circuit_step(t: float, P: float, k: int) -> float:
    return float(ftv_gaussian(P, min(k * t, 1.0)))


def circuit_reaches(t: float, P: float, k: int) -> bool:
    """Whether F_TV(min(k t, 1)) >= t, decided without underflow.

    For k t <= 1 the inequality reads 2 k Q(sqrt(P/(k t))) <= k - 1, which
    is compared in log space.
    """
    if t <= 0:
        return True
    if k * t >= 1.0:
        return _circuit_step(t, P, k) >= t
    if k == 1:
        return False
    return math.log(2 * k) + float(special.log_qfunc(math.sqrt(P / (k * t)))) <= math.log(k - 1)


def circuit_error_bound(P: float, k: int) -> CircuitResult:
    """Largest t with F_TV(min(k t, 1), P) >= t, and the error bound (1 - t*)/2.

    F_TV is the unit-Gaussian curve at budget P; k is the gate fan-in.
    """
    if P <= 0 or k < 1 or int(k) != k:
        raise ValueError("need P > 0 and an integer fan-in k >= 1")
    k = int(k)
    F1 = _circuit_step(1.0, P, k)
    cands = [0.0]
    # t in (1/k, 1] is reachable iff F(1) > 1/k, i.e. 2 Q(sqrt P) < 1 - 1/k
    if k >= 2 and math.log(2.0) + float(special.log_qfunc(math.sqrt(P))) < math.log1p(-1.0 / k):
        cands.append(F1)
    if k >= 2:
        # for k t < 1 the set {F(k t) >= t} is (0, P / (k q^2)] with
        # q = Q^{-1}((k-1)/(2k))
        q = special.qinv((k - 1) / (2.0 * k))
        cands.append(min(1.0 / k, P / (k * q * q)) if q > 0 else 1.0 / k)
    t_star = max(cands)
    residual = abs(t_star - _circuit_step(t_star, P, k))
    return CircuitResult(P, k, t_star, (1 - t_star) / 2, residual)


def circuit_iterate(P: float, k: int, tol: float = 1e-12, max_iter: int = 10 ** 6) -> float:
    """Monotone iteration t <- F_TV(min(k t, 1)) from t = 1 (slow near 0)."""
    t = 1.0
    for _ in range(max_iter):
        nt = _circuit_step(t, P, k)
        if abs(nt - t) < tol:
            return nt
        t = nt
    return t


# -- relays on a binary tree -----------------------------------------------

@dataclass(frozen=True)
class TreeDesign:
    mu: float
    t: float
    p: float
    theta: float
    E_used: float
    tv_lower: float | None

    def to_dict(self):
        return asdict(self)


def tree_design(mu: float, t: float) -> TreeDesign:
    """Ternary relay on a binary tree with amplitude mu and threshold t mu.

    p is the stationary mass at +mu (and at -mu); theta is E[sigma_child |
    sigma_parent = 1] for the sign variable sigma.
    """
    if not (mu > 0 and 0.5 < t < 1):
        raise ValueError("need mu > 0 and threshold fraction t in (1/2, 1)")
    Q = special.qfunc
    a, b, c = Q((1 - t) * mu), Q(t * mu), Q((1 + t) * mu)
    p = b / (a + 2 * b - c)
    th = 1 - a - c
    lower = 2 * p * (1 - 1 / (4 * th * th)) if 2 * th * th > 1 else None
    return TreeDesign(mu, t, p, th, 2 * p * mu * mu, lower)


def tree_transition(d: TreeDesign) -> np.ndarray:
    """3x3 transition matrix over sigma in (-1, 0, 1)."""
    Q = special.qfunc
    mu, t = d.mu, d.t
    rows = []
    for s in (-1, 0, 1):
        up = Q((t - s) * mu)       # P[s mu + Z >= t mu]
        down = Q((t + s) * mu)     # P[s mu + Z <= -t mu]
        rows.append([down, 1 - up - down, up])
    return np.array(rows)


def tree_pair_count(n: int, u: int) -> int:
    """Unordered pairs at level n whose deepest common ancestor is at level u."""
    return 2 ** (u - 1) * 4 ** (n - u - 1)


@dataclass
class TreeMoments:
    mean: float
    second_moment_ub: float
    second_moment_exact: float
    tv_lb: float
    tv_lb_exact: float


def tree_moments(d: TreeDesign, n: int) -> TreeMoments:
    """Moments of S_n = sum of the 2^{n-1} level-n signs, given W = +1.

    ``second_moment_ub`` is the geometric-sum relaxation 2^n p + 2p (2 theta)^{2n}
    / ((2 theta)^2 - 1); the exact value sums theta^{2(n-u)} E[sigma^2] over
    leaf pairs grouped by common ancestor. The relaxation dominates the exact
    value only when theta^2 >= 3/4, so ``tv_lb`` (built on it) is a valid TV
    lower bound only there. ``tv_lb_exact`` uses the exact second moment and
    holds for every design.
    """
    if n < 1:
        raise ValueError("depth n must be at least 1")
    p, th = d.p, d.theta
    mean = 2 * p * (2 * th) ** (n - 1)
    g = (2 * th) ** 2
    ub = 2 ** n * p + (2 * p * (2 * th) ** (2 * n) / (g - 1) if g > 1 else math.inf)
    cross = sum(tree_pair_count(n, u) * th ** (2 * (n - u)) for u in range(1, n))
    exact = 2 ** (n - 1) * 2 * p + 2 * 2 * p * cross
    tv = (2 * mean) ** 2 / (4 * ub) if math.isfinite(ub) else 0.0
    return TreeMoments(mean, ub, exact, tv, mean * mean / exact)
