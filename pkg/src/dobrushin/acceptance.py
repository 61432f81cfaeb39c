"""The acceptance suite: one check per numbered criterion.

Each check returns a ``CriterionResult``; ``run`` executes a selection and
``format_line`` renders the one-line PASS/FAIL summary used by both the CLI
``verify`` command and the test suite.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import converse, mc
from .curve import DobrushinCurve, Power, SubExp, SubGauss, ftv_gaussian
from .divergence import (Discrete, GaussMix, bsc, convolve, dobrushin_coefficient,
                         eta_chi2_discrete, integral_representation, tv)
from .noise import Gaussian, Gridded, Laplace, Uniform


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float


def format_line(r: CriterionResult) -> str:
    tag = "PASS" if r.passed else "FAIL"
    return f"{tag} [{r.number:2d}] {r.name}: {r.detail} ({r.seconds:.2f} s)"


def _check(number: int, name: str):
    def deco(fn):
        def run(full: bool = False) -> CriterionResult:
            t0 = time.perf_counter()
            ok, detail = fn(full)
            return CriterionResult(number, name, bool(ok), detail, time.perf_counter() - t0)
        run.number = number
        run.criterion_name = name
        return run
    return deco


# ----------------------------------------------------------------------------

@_check(1, "gaussian theta closed form vs gridded quadrature")
def c01(full):
    t0 = time.perf_counter()
    z = np.arange(-9.0, 9.0 + 1e-9, 4e-3)
    g = Gridded.from_pdf(z, np.exp(-0.5 * z * z))
    x = np.arange(0.0, 10.0 + 5e-4, 1e-3)
    err = float(np.max(np.abs(g.theta(x) - Gaussian(1.0).theta(x))))
    dt = time.perf_counter() - t0
    return err <= 1e-6 and dt < 5.0, f"max|diff|={err:.3g} (tol 1e-6), {dt:.2f} s (limit 5 s)"


@_check(2, "curve sandwich equality and data processing")
def c02(full):
    t = np.linspace(0.0, 1.0, 1000)
    worst_gap, dp_bad, strict_bad, sat_pts = 0.0, 0, 0, 0
    for noise in (Gaussian(1.0), Laplace(1.0), Uniform(1.0)):
        for a in (0.5, 1.0, 4.0):
            c = DobrushinCurve(noise, Power(2.0), a)
            up, lo = c.upper(t), c.lower(t)
            worst_gap = max(worst_gap, float(np.max(np.abs(up - lo))))
            dp_bad += int(np.sum(up > t))
            tt = t[t >= 1e-3]
            # strictness is read off log(t - upper), which stays finite even
            # when t - upper is far below double precision
            strict = np.isfinite(c.log_gap(tt))
            # theta < 1 at the shift radius means the channel is unsaturated there
            unsat = np.isfinite(noise.log_theta_gap(c.shift(tt)))
            sat_pts += int(np.sum(~unsat))
            strict_bad += int(np.sum(strict != unsat))
            strict_bad += int(np.sum(~unsat & (c.upper(tt) != tt)))
            if not isinstance(noise, Uniform):
                strict_bad += int(np.sum(~strict))
    ok = worst_gap <= 1e-9 and dp_bad == 0 and strict_bad == 0
    return ok, (f"max|upper-lower|={worst_gap:.2g}, upper>t at {dp_bad} pts, "
                f"strictness mismatches={strict_bad}; uniform saturates at {sat_pts} pts "
                f"where upper=t exactly")


@_check(3, "scaling law of the gaussian curve")
def c03(full):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        t = rng.uniform(1e-6, 1.0)
        alpha = rng.uniform(0.01, 1.0 / t)
        a = rng.uniform(0.01, 10.0)
        lhs = ftv_gaussian(alpha * a, min(alpha * t, 1.0))
        rhs = alpha * ftv_gaussian(a, t)
        worst = max(worst, abs(lhs - rhs))
    return worst <= 1e-12, f"max|F(at,aa)-aF(t,a)|={worst:.3g} (tol 1e-12)"


TWO_POINT_CASES = [
    (Gaussian(1.0), 0.5, 1.0), (Gaussian(1.0), 0.1, 1.0), (Gaussian(1.0), 0.9, 4.0),
    (Gaussian(2.0), 0.3, 0.5), (Laplace(1.0), 0.5, 1.0), (Laplace(1.0), 0.2, 2.0),
    (Laplace(0.5), 0.8, 0.5), (Uniform(2.0), 0.5, 0.1), (Uniform(2.0), 0.3, 0.05),
    (Uniform(2.0), 0.9, 0.2),
]


def two_point_pair(t: float, x: float) -> tuple[Discrete, Discrete]:
    return Discrete([0.0, x], [1 - t, t]), Discrete([0.0, -x], [1 - t, t])


@_check(4, "two-point pairs attain the lower curve")
def c04(full):
    worst = 0.0
    for noise, t, a in TWO_POINT_CASES:
        c = DobrushinCurve(noise, Power(2.0), a)
        x = float(c.cost.inv(a / t))
        P, Q = two_point_pair(t, x)
        got = tv(convolve(P, noise), convolve(Q, noise))
        worst = max(worst, abs(got - float(c.lower(t))))
    return worst <= 1e-4, f"max|TV - lower|={worst:.3g} (tol 1e-4) over {len(TWO_POINT_CASES)} cases"


@_check(5, "integral representation of chi2, KL, H2")
def c05(full):
    t0 = time.perf_counter()
    P, Q = GaussMix([1.0], [1.0], [1.0]), GaussMix([0.0], [1.0], [1.0])
    closed = {"chi2": math.e - 1, "kl": 0.5, "hellinger2": 2 * (1 - math.exp(-1 / 8))}
    errs = {k: abs(integral_representation(P, Q, k)["integral"] - v) for k, v in closed.items()}
    dt = time.perf_counter() - t0
    worst = max(errs.values())
    return worst <= 1e-4 and dt < 10, f"max err={worst:.3g} (tol 1e-4), {dt:.2f} s (limit 10 s)"


@_check(6, "E_gamma contraction under gaussian noise")
def c06(full):
    pairs = 200 if full else 20
    rep = mc.verify_mate_contraction(pairs, Gaussian(1.0), Power(2.0), 1.0, seed=6)
    v = rep.estimates["max_violation"].value
    n = int(rep.estimates["checks"].value)
    return v <= 1e-6, f"max violation={v:.3g} (tol 1e-6) over {n} checks"


@_check(7, "rate lemma for h(t)=t^2")
def c07(full):
    t0 = time.perf_counter()
    n = np.arange(1, 10 ** 6 + 1)
    bad = 0
    for t1 in (1.0, 0.999, 0.5):
        tr = converse.iterate_decrement(lambda s: s * s, 10 ** 6, t1)
        bad += int(np.sum(tr > 1.0 / n))
    dt = time.perf_counter() - t0
    # three starts are run; the budget applies to each
    return bad == 0 and dt / 3 < 1.0, f"violations of t_n<=1/n: {bad}, {dt / 3:.2f} s per run (limit 1 s)"


@_check(8, "decay rate orders for power, sub-exponential, sub-gaussian costs")
def c08(full):
    parts, ok = [], True
    for cost in (Power(2.0), SubExp(1.0), SubGauss(1.0)):
        res = converse.t_decay(Gaussian(1.0), cost, 1.0, 10 ** 6)
        s = converse.rate_slope(res, cost, 10 ** 3, 10 ** 6)
        ok &= abs(s + 1) <= 0.2
        parts.append(f"{cost}: {s:.3f}")
    return ok, "slopes " + ", ".join(parts) + " within 20% of -1"


@_check(9, "BSC(0.1) contraction coefficients")
def c09(full):
    K = bsc(0.1)
    e_tv = dobrushin_coefficient(K)
    e_chi = eta_chi2_discrete(K, [0.5, 0.5])
    ok = abs(e_tv - 0.8) <= 1e-12 and abs(e_chi - 0.64) <= 1e-12
    return ok, f"eta_TV={e_tv!r}, eta_chi2={e_chi!r}"


@_check(10, "noisy circuit fixed points")
def c10(full):
    snr = np.geomspace(1e-2, 1e2, 50)
    r1 = [converse.circuit_error_bound(P, 1) for P in snr]
    r3 = [converse.circuit_error_bound(P, 3) for P in snr]
    zero = max(r.t_star for r in r1)
    ts = np.array([r.t_star for r in r3])
    mono = bool(np.all(np.diff(ts) >= 0))
    resid = max(r.residual for r in r1 + r3)
    ok = zero <= 1e-9 and mono and resid <= 1e-9
    return ok, f"max t*_1={zero:.3g}, t*_3 monotone={mono}, max residual={resid:.3g}"


def _relay_binary(workers=1):
    return mc.simulate_relay_binary(100, 2.0, mc.SimConfig(7, 10 ** 5, workers))


def _relay_linear(workers=1):
    return mc.simulate_relay_linear(1.0, 1.0, 5, mc.SimConfig(7, 10 ** 6, workers))


def _tree(workers=1):
    return mc.simulate_tree(converse.tree_design(10.0, 0.6), 12, mc.SimConfig(7, 10 ** 4, workers))


@_check(11, "binary relay chain")
def c11(full):
    rep = _relay_binary()
    f, pw = rep.estimates["flip_prob"], rep.estimates["power_max"]
    dt = rep.elapsed_ms / 1e3
    ok = f.value <= 0.01 + 3 * f.se and pw.value <= 2 + 3 * pw.se and dt < 30
    return ok, (f"flip={f.value:.4g} (se {f.se:.2g}) vs 0.01+3se, power={pw.value:.4g} "
                f"(se {pw.se:.2g}) vs 2+3se, {dt:.2f} s (limit 30 s)")


@_check(12, "linear relay correlation")
def c12(full):
    rep = _relay_linear()
    e = rep.estimates["rho2"]
    dt = rep.elapsed_ms / 1e3
    ok = e.within(0.015625) and dt < 30
    return ok, f"rho2={e.value:.6g} (se {e.se:.2g}) vs 0.015625 (3se band), {dt:.2f} s (limit 30 s)"


@_check(13, "tree broadcast moments and marginals")
def c13(full):
    rep = _tree()
    d = converse.tree_design(10.0, 0.6)
    target = 2 * d.p * (2 * d.theta) ** 11
    m = rep.estimates["mean_S_given_W"]
    margins = [v for k, v in rep.estimates.items() if k.startswith("marginal_")]
    bad = sum(not e.within(d.p) for e in margins)
    dt = rep.elapsed_ms / 1e3
    ok = m.within(target) and bad == 0 and dt < 120
    return ok, (f"E[S|W=1]={m.value:.4g} (se {m.se:.2g}) vs {target:.4g}, "
                f"{bad}/{len(margins)} marginals off, {dt:.2f} s (limit 120 s)")


@_check(14, "smoothed CLT for rademacher sums")
def c14(full):
    t0 = time.perf_counter()
    r = mc.clt_tv_exact(100, 1.0)
    dt = time.perf_counter() - t0
    ok = r.tv_exact <= 0.1196827 and r.tv_exact <= r.w1_bound and dt < 10
    return ok, (f"TV={r.tv_exact:.4g}, W1/sqrt(2pi)={r.w1_bound:.4g}, bound 0.1196827, "
                f"{dt:.2f} s (limit 10 s)")


@_check(15, "f_alpha non-contraction witnesses")
def c15(full):
    rep = mc.renyi_noncontraction_probe(2.0, 0.1, 2.0, (1e-2, 1e-3, 1e-4))
    r = rep.extra["ratios"]
    ok = r[-1] >= 0.9 and rep.extra["monotone"]
    return ok, f"ratios {', '.join(f'{v:.6f}' for v in r)}; need last >= 0.9 and nondecreasing"


@_check(16, "determinism across runs and thread counts")
def c16(full):
    threads = (1, 2, 4, 8) if full else (1, 4)
    same = True
    for f in (_relay_binary, _relay_linear, _tree):
        outs = {f(w).to_json() for w in threads for _ in range(2 if w == 1 else 1)}
        same &= len(outs) == 1
    return same, f"byte-identical reports for criteria 11-13 over threads {threads}"


CRITERIA = [c01, c02, c03, c04, c05, c06, c07, c08, c09, c10, c11, c12, c13, c14, c15, c16]


def run(numbers=None, full: bool = False, echo=None) -> list[CriterionResult]:
    out = []
    for c in CRITERIA:
        if numbers is not None and c.number not in numbers:
            continue
        try:
            r = c(full)
        except Exception as exc:  # a crash is a failure of that criterion
            r = CriterionResult(c.number, c.criterion_name, False, f"error: {exc!r}", 0.0)
        out.append(r)
        if echo is not None:
            echo(format_line(r))
    return out
