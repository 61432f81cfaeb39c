import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from dobrushin import divergence as dv
from dobrushin.curve import DobrushinCurve, Power, ftv_gaussian
from dobrushin.noise import Exponential, Gaussian, Gridded, Laplace, Uniform
from dobrushin.special import qfunc


def normal(mu=0.0, sd=1.0):
    return dv.GaussMix([mu], [sd], [1.0])


def e_gamma_ref(P, Q, gamma, lo=-40, hi=40):
    """int (p - gamma q)^+ - (1 - gamma)^+ by adaptive quadrature."""
    f = lambda x: max(float(P.pdf(x)[0]) - gamma * float(Q.pdf(x)[0]), 0.0)
    pts = np.linspace(lo, hi, 81)
    v = sum(integrate.quad(f, a, b, epsabs=1e-14, limit=200)[0] for a, b in zip(pts[:-1], pts[1:]))
    return v - max(1 - gamma, 0.0)


# -- E_gamma and TV ---------------------------------------------------------

@pytest.mark.parametrize("mu", [0.0, 0.1, 1.0, 2.0, 5.0, 12.0])
def test_tv_of_shifted_gaussians(mu):
    assert dv.tv(normal(), normal(mu)) == pytest.approx(1 - 2 * qfunc(mu / 2), abs=1e-14)


@pytest.mark.parametrize("gamma", [0.01, 0.3, 1.0, 2.0, 7.0])
@pytest.mark.parametrize("mu", [0.5, 2.0])
def test_e_gamma_equal_variance_closed_form(mu, gamma):
    # p > gamma q exactly to the right of x* = mu/2 + log(gamma)/mu
    xs = mu / 2 + math.log(gamma) / mu
    ref = qfunc(xs - mu) - gamma * qfunc(xs) - max(1 - gamma, 0.0)
    assert dv.e_gamma(normal(mu), normal(), gamma) == pytest.approx(ref, abs=1e-13)


@pytest.mark.parametrize("gamma", [0.2, 1.0, 3.0])
def test_e_gamma_unequal_variances_and_mixtures(gamma):
    P = dv.GaussMix([-1.0, 2.0], [0.5, 1.5], [0.3, 0.7])
    Q = normal(0.5, 1.2)
    assert dv.e_gamma(P, Q, gamma) == pytest.approx(e_gamma_ref(P, Q, gamma), abs=1e-9)
    assert dv.e_gamma(Q, P, gamma) == pytest.approx(e_gamma_ref(Q, P, gamma), abs=1e-9)


def test_e_gamma_on_gridded_pairs():
    x = np.linspace(-10, 10, 4001)
    P = Gridded.from_pdf(x, np.exp(-0.5 * (x - 1) ** 2))
    Q = Gridded.from_pdf(x, np.exp(-0.5 * x * x))
    assert dv.tv(P, Q) == pytest.approx(1 - 2 * qfunc(0.5), abs=1e-5)
    assert dv.e_gamma(P, Q, 2.0) == pytest.approx(dv.e_gamma(normal(1), normal(), 2.0), abs=1e-5)


def discrete_pairs():
    atoms = st.lists(st.integers(-6, 6), min_size=1, max_size=5, unique=True)
    return st.tuples(atoms, atoms, st.integers(0, 2 ** 31))


def make_pair(case):
    a, b, seed = case
    rng = np.random.default_rng(seed)
    return (dv.Discrete(np.array(a, float), rng.dirichlet(np.ones(len(a)))),
            dv.Discrete(np.array(b, float), rng.dirichlet(np.ones(len(b)))))


@settings(max_examples=80, deadline=None)
@given(discrete_pairs())
def test_e_gamma_shape_on_random_discrete_pairs(case):
    P, Q = make_pair(case)
    g = np.geomspace(1e-3, 1e3, 121)
    e = np.array([dv.e_gamma(P, Q, float(v)) for v in g])
    t = dv.tv(P, Q)
    assert np.all(e >= -1e-15)
    assert np.all(e <= np.minimum(1, g) * t + 1e-12)
    # int (p - gamma q)^+ is convex in gamma; the (1 - gamma)^+ offset is not
    gl = np.linspace(0.05, 5, 200)
    el = np.array([dv.e_gamma(P, Q, float(v)) + max(1 - v, 0.0) for v in gl])
    assert np.all(np.diff(el, 2) >= -1e-12)
    assert dv.e_gamma(P, Q, 1.0) == pytest.approx(0.5 * sum(abs(x) for x in _diff(P, Q)))


def _diff(P, Q):
    locs = sorted(set(P.locs.tolist()) | set(Q.locs.tolist()))
    pm = dict(zip(P.locs.tolist(), P.masses.tolist()))
    qm = dict(zip(Q.locs.tolist(), Q.masses.tolist()))
    return [pm.get(x, 0.0) - qm.get(x, 0.0) for x in locs]


def test_atomic_vs_continuous_is_rejected():
    with pytest.raises(ValueError, match="convolve"):
        dv.tv(dv.point_mass(0.0), normal())
    with pytest.raises(ValueError):
        dv.e_gamma(normal(), normal(), -1.0)


@pytest.mark.parametrize("gamma", [0.4, 1.7])
def test_e_gamma_derivative_gaussian(gamma):
    chk = dv.e_gamma_derivative_check(normal(1.0), normal(), gamma)
    assert chk["abs_err"] < 1e-7
    xs = 0.5 + math.log(gamma)
    assert chk["closed_form"] == pytest.approx((1.0 if gamma < 1 else 0.0) - qfunc(xs), abs=1e-12)


def test_e_gamma_derivative_discrete_uses_strict_inequality():
    P = dv.Discrete([0.0, 1.0], [0.5, 0.5])
    Q = dv.Discrete([0.0, 1.0], [0.25, 0.75])
    # dP/dQ is 2 at 0 and 2/3 at 1; at gamma = 2 the tie is excluded
    assert dv.e_gamma_derivative(P, Q, 2.0) == 0.0
    assert dv.e_gamma_derivative(P, Q, 1.5) == -0.25
    assert dv.e_gamma_derivative(P, Q, 0.5) == pytest.approx(0.0)


# -- f-divergences ------------------------------------------------------------

def kl_normal(m1, s1, m2, s2):
    return math.log(s2 / s1) + (s1 ** 2 + (m1 - m2) ** 2) / (2 * s2 ** 2) - 0.5


@pytest.mark.parametrize("m1,s1,m2,s2", [(1, 1, 0, 1), (0, 0.5, 1, 1.3), (3, 2, -1, 1.5)])
def test_kl_between_gaussians(m1, s1, m2, s2):
    assert dv.f_divergence(normal(m1, s1), normal(m2, s2), "kl") == pytest.approx(
        kl_normal(m1, s1, m2, s2), rel=1e-7)


def test_gaussian_closed_forms():
    P, Q = normal(1.0), normal()
    assert dv.f_divergence(P, Q, "chi2") == pytest.approx(math.e - 1, rel=1e-9)
    assert dv.hellinger2(P, Q) == pytest.approx(2 * (1 - math.exp(-1 / 8)), rel=1e-9)
    assert dv.f_divergence(P, Q, "renyi:2") == pytest.approx(math.e - 1, rel=1e-9)
    # f_alpha for alpha < 1: 1 - exp(-alpha (1 - alpha) mu^2 / 2)
    a = 0.3
    assert dv.f_divergence(P, Q, dv.FDiv("falpha", a)) == pytest.approx(
        1 - math.exp(-a * (1 - a) / 2), rel=1e-9)


def test_discrete_f_divergences_and_support_mismatch():
    P = dv.Discrete([0, 1, 2], [0.2, 0.5, 0.3])
    Q = dv.Discrete([0, 1, 2], [0.4, 0.4, 0.2])
    p, q = P.masses, Q.masses
    assert dv.f_divergence(P, Q, "kl") == pytest.approx(float(np.sum(p * np.log(p / q))))
    assert dv.f_divergence(P, Q, "chi2") == pytest.approx(float(np.sum((p - q) ** 2 / q)))
    R = dv.Discrete([0, 3], [0.5, 0.5])
    assert dv.f_divergence(R, Q, "kl") == math.inf
    assert dv.hellinger2(R, Q) == pytest.approx(
        (math.sqrt(0.5) - math.sqrt(0.4)) ** 2 + 0.4 + 0.2 + 0.5)


@settings(max_examples=25, deadline=None)
@given(discrete_pairs(), st.sampled_from(["kl", "chi2", "hellinger2", "falpha:0.5", "falpha:2"]))
def test_integral_representation_discrete(case, name):
    P, Q = make_pair(case)
    r = dv.integral_representation(P, Q, name)
    if not math.isfinite(r["direct"]):
        assert not set(P.locs.tolist()) <= set(Q.locs.tolist())
        assert r["integral"] == math.inf
        return
    assert r["integral"] == pytest.approx(r["direct"], abs=1e-10, rel=1e-10)


@pytest.mark.parametrize("name,ref", [("chi2", math.e - 1), ("kl", 0.5),
                                      ("hellinger2", 2 * (1 - math.exp(-1 / 8)))])
def test_integral_representation_gaussian(name, ref):
    r = dv.integral_representation(normal(1.0), normal(), name)
    assert r["integral"] == pytest.approx(ref, abs=1e-8)


# -- convolution -------------------------------------------------------------

@pytest.mark.parametrize("noise", [Laplace(1.0), Uniform(1.0), Exponential(2.0)], ids=str)
@pytest.mark.parametrize("x", [0.3, 1.2])
def test_convolved_point_masses_recover_theta(noise, x):
    P = dv.convolve(dv.point_mass(0.0), noise)
    Q = dv.convolve(dv.point_mass(x), noise)
    assert dv.tv(P, Q) == pytest.approx(float(noise.theta(x)), abs=2e-4)


def test_convolution_with_gaussian_stays_closed_form():
    P = dv.Discrete([0.0, 2.0], [0.25, 0.75])
    out = dv.convolve(P, Gaussian(0.5))
    assert isinstance(out, dv.GaussMix)
    assert np.array_equal(out.means, [0.0, 2.0]) and np.allclose(out.stds, 0.5)
    mix = dv.convolve(normal(1.0, 0.6), Gaussian(0.8))
    assert mix.stds[0] == pytest.approx(1.0)


def test_gridded_convolution_preserves_mass_and_mean():
    P = dv.Discrete([-1.0, 0.5, 3.0], [0.2, 0.5, 0.3])
    out = dv.convolve(P, Laplace(0.5))
    assert np.trapezoid(out.f, out.x) == pytest.approx(1.0, abs=1e-12)
    mean = np.trapezoid(out.x * out.f, out.x)
    assert mean == pytest.approx(float(np.dot(P.locs, P.masses)), abs=1e-6)
    mixed = dv.convolve(normal(0.0, 0.7), Laplace(0.5))
    assert np.trapezoid(mixed.f, mixed.x) == pytest.approx(1.0, abs=1e-9)


def test_convolve_refuses_coarse_truncation():
    with pytest.raises(ValueError):
        dv.convolve(dv.point_mass(), Laplace(1.0), tail=1e-3)


@settings(max_examples=20, deadline=None)
@given(discrete_pairs())
def test_e_gamma_contracts_through_gaussian_curve(case):
    P, Q = make_pair(case)
    a = max(P.mean_cost(Power(2.0)), Q.mean_cost(Power(2.0)), 1e-3)
    Pn, Qn = dv.convolve(P, Gaussian(1.0)), dv.convolve(Q, Gaussian(1.0))
    for g in (0.5, 1.0, 2.0):
        c = DobrushinCurve(Gaussian(1.0), Power(2.0), a * min(g, 1.0))
        assert dv.e_gamma(Pn, Qn, g) <= float(c.upper(min(dv.e_gamma(P, Q, g), 1.0))) + 1e-9


# -- channels ------------------------------------------------------------------

def test_bsc_coefficients():
    K = dv.bsc(0.1)
    assert dv.dobrushin_coefficient(K) == pytest.approx(0.8, abs=1e-12)
    assert dv.eta_chi2_discrete(K, [0.5, 0.5]) == pytest.approx(0.64, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(2, 5), st.integers(0, 2 ** 31))
def test_chi2_coefficient_below_tv_coefficient(nx, ny, seed):
    rng = np.random.default_rng(seed)
    K = rng.dirichlet(np.ones(ny), size=nx)
    px = rng.dirichlet(np.ones(nx))
    e_chi, e_tv = dv.eta_chi2_discrete(K, px), dv.dobrushin_coefficient(K)
    assert -1e-12 <= e_chi <= e_tv + 1e-12
    # a chi^2 ratio for a random perturbation never beats the coefficient
    q = rng.dirichlet(np.ones(nx))
    qy, py = q @ K, px @ K
    ratio = np.sum((qy - py) ** 2 / py) / np.sum((q - px) ** 2 / px)
    assert ratio <= e_chi + 1e-9


def test_channel_validation():
    with pytest.raises(ValueError):
        dv.dobrushin_coefficient([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(ValueError):
        dv.eta_chi2_discrete(dv.bsc(0.1), [1.0, 0.0])


# -- f_alpha bounds and witnesses -----------------------------------------------

@pytest.mark.parametrize("alpha", [0.3, 0.7])
@pytest.mark.parametrize("t", [1e-3, 0.05, 0.5])
def test_renyi_bound_dominates_tv_curve(alpha, t):
    b = dv.renyi_contraction_bound(alpha, 1.0, t, 0.5)
    assert b >= ftv_gaussian(1.0, t)
    opt, eps = dv.renyi_contraction_bound_opt(alpha, 1.0, t)
    assert opt <= b + 1e-15 and eps > 0


def test_renyi_bound_example_point():
    t = 0.01
    b = dv.renyi_contraction_bound(0.5, 1.0, t, 0.1)
    assert math.isfinite(b) and b < t + 0.02
    # optimizing eps brings the bound down to t but not below it
    opt, _ = dv.renyi_contraction_bound_opt(0.5, 1.0, t)
    assert opt == pytest.approx(t, rel=1e-9)


def test_renyi_bound_domain():
    with pytest.raises(ValueError):
        dv.renyi_contraction_bound(1.0, 1.0, 0.1, 0.5)
    with pytest.raises(ValueError):
        dv.renyi_contraction_bound(0.5, 1.0, 0.1, 0.0)


@pytest.mark.parametrize("alpha,q", [(1.0, 1e-3), (2.0, 1e-4), (3.0, 1e-3)])
def test_witness_respects_budget(alpha, q):
    w = dv.noncontraction_witness(alpha, 0.1, 2.0, q)
    assert w.P.mean_cost(Power(2.0)) == pytest.approx(2.0)
    assert w.Q.mean_cost(Power(2.0)) <= 2.0 * (1 + 1e-12)
    assert dv.f_divergence(w.P, w.Q, dv.FDiv("falpha", alpha)) > 0


def test_witness_domain():
    with pytest.raises(ValueError):
        dv.noncontraction_witness(0.5, 0.1, 2.0, 1e-3)
    with pytest.raises(ValueError):
        dv.noncontraction_witness(2.0, 0.1, 2.0, 0.5)


def test_binary_falpha():
    p, q = 0.3, 0.1
    assert dv.binary_falpha(2.0, p, q) == pytest.approx(p * p / q + (1 - p) ** 2 / (1 - q) - 1)


# -- W1 and smoothing -------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(discrete_pairs())
def test_w1_discrete_matches_scipy(case):
    P, Q = make_pair(case)
    ref = stats.wasserstein_distance(P.locs, Q.locs, P.masses, Q.masses)
    assert dv.w1_distance(P, Q) == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("mix", [normal(), dv.GaussMix([-1.0, 2.0], [0.4, 1.0], [0.6, 0.4])])
def test_w1_atoms_against_mixture(mix):
    P = dv.Discrete([-0.5, 0.0, 1.5], [0.3, 0.3, 0.4])
    f = lambda x: abs(float(P.cdf(x)) - float(mix.cdf(x)))
    pts = [-30, -0.5, 0.0, 1.5, 30]
    ref = sum(integrate.quad(f, a, b, epsabs=1e-14, limit=200)[0] for a, b in zip(pts[:-1], pts[1:]))
    assert dv.w1_distance(P, mix) == pytest.approx(ref, abs=1e-10)
    assert dv.w1_distance(mix, P) == pytest.approx(ref, abs=1e-10)


def test_tv_w1_bound_gaussian_and_domain():
    assert dv.tv_w1_bound(Gaussian(1.0), 2.0) == pytest.approx(1 - 2 * qfunc(1.0))
    with pytest.raises(ValueError):
        dv.tv_w1_bound(Exponential(1.0), 1.0)


@settings(max_examples=20, deadline=None)
@given(discrete_pairs())
def test_tv_after_smoothing_below_w1_bound(case):
    P, Q = make_pair(case)
    lhs = dv.tv(dv.convolve(P, Gaussian(1.0)), dv.convolve(Q, Gaussian(1.0)))
    assert lhs <= dv.tv_w1_bound(Gaussian(1.0), dv.w1_distance(P, Q)) + 1e-12


def test_clt_smoothing_bound_value():
    assert dv.clt_smoothing_bound(1.0, 1.0, 100) == pytest.approx(0.1196827, abs=1e-7)


def test_distribution_roundtrip():
    for d in (dv.Discrete([0, 1], [0.3, 0.7]), dv.GaussMix([0, 1], [1, 2], [0.5, 0.5]),
              Gridded(np.array([0.0, 1.0]), np.array([1.0, 1.0]))):
        back = dv.dist_from_dict(d.to_dict())
        assert back.to_dict() == d.to_dict()
    with pytest.raises(ValueError):
        dv.Discrete([0, 1], [0.5, 0.6])
    merged = dv.Discrete([1.0, 0.0, 1.0], [0.25, 0.5, 0.25])
    assert merged.locs.tolist() == [0.0, 1.0] and merged.masses.tolist() == [0.5, 0.5]
