import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from dobrushin.noise import (Exponential, Gaussian, Gridded, Laplace, ThetaCurve, Uniform,
                             concave_envelope, contraction_criterion, lb_curve, noise_from_dict,
                             parse_noise, theta_lb, upper_hull)

NAMED = [Gaussian(1.0), Gaussian(0.3), Laplace(0.7), Uniform(2.0), Exponential(1.5)]


def tv_by_quadrature(model, x):
    """1/2 int |f(z) - f(z - x)| dz, integrated piecewise between kinks."""
    lo, hi = model.extent(1e-16)
    pts = sorted({lo, hi, lo + x, hi + x, 0.0, x})
    f = lambda z: abs(float(model.pdf(z)) - float(model.pdf(z - x)))
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b > a:
            total += integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return 0.5 * total


@pytest.mark.parametrize("model", NAMED, ids=str)
@pytest.mark.parametrize("x", [0.05, 0.5, 1.0, 2.5, 6.0])
def test_closed_form_theta_matches_quadrature(model, x):
    assert float(model.theta(x)) == pytest.approx(tv_by_quadrature(model, x), abs=1e-9)


@pytest.mark.parametrize("model", NAMED, ids=str)
def test_theta_profile_basic_shape(model):
    x = np.linspace(0, 20, 401)
    th = np.asarray(model.theta(x))
    assert th[0] == 0.0
    assert np.all((th >= 0) & (th <= 1))
    assert np.all(np.diff(th) >= -1e-15)
    assert np.allclose(model.theta(-x), th)


def test_uniform_theta_saturates():
    u = Uniform(1.0)
    assert u.theta(0.25) == pytest.approx(0.25)
    assert u.theta(1.0) == 1.0
    assert u.theta(3.0) == 1.0


def triangle(n=801):
    x = np.linspace(-1.0, 1.0, n)
    return Gridded(x, 1.0 - np.abs(x))


@pytest.mark.parametrize("s", [0.0, 0.1, 0.37, 1.0, 1.6, 2.0, 3.0])
def test_gridded_theta_exact_for_piecewise_linear_density(s):
    # the triangle is exactly piecewise linear on the grid, so the gridded
    # value must match the continuous integral to quadrature accuracy
    tri = triangle()

    def f(z):
        return max(0.0, 1.0 - abs(z))
    g = lambda z: abs(f(z) - f(z - s))
    pts = sorted({-1.0, 0.0, 1.0, s - 1, s, s + 1, s / 2})
    ref = 0.5 * sum(integrate.quad(g, a, b, epsabs=1e-14)[0] for a, b in zip(pts[:-1], pts[1:]))
    assert float(tri.theta(s)) == pytest.approx(min(ref, 1.0), abs=1e-12)


def test_gridded_cdf_is_exact_integral_of_interpolant():
    tri = triangle(101)
    z = np.linspace(-1.2, 1.2, 37)
    ref = [integrate.quad(lambda v: float(tri.pdf(v)), -1.0, zz, points=[0.0])[0] if zz > -1 else 0.0
           for zz in z]
    assert np.allclose(tri.cdf(z), ref, atol=1e-12)


def test_gridded_validation():
    x = np.linspace(0, 1, 11)
    with pytest.raises(ValueError, match="increasing"):
        Gridded(x[::-1], np.ones(11))
    with pytest.raises(ValueError, match="nonnegative"):
        Gridded(x, np.r_[-1.0, np.full(10, 1.2)])
    with pytest.raises(ValueError, match="integrates"):
        Gridded(x, np.full(11, 2.0))
    g = Gridded(x, np.ones(11))
    with pytest.raises(ValueError):
        g.f[0] = 3.0


def test_gridded_from_pdf_normalizes_and_detects_symmetry():
    z = np.linspace(-6, 6, 1201)
    g = Gridded.from_pdf(z, np.exp(-0.5 * z * z))
    assert np.trapezoid(g.f, g.x) == pytest.approx(1.0, abs=1e-12)
    assert g.is_symmetric_unimodal()
    skew = Gridded.from_pdf(z, np.exp(-0.5 * (z - 1) ** 2))
    assert not skew.is_symmetric_unimodal()


def test_gridded_gaussian_tracks_closed_form():
    z = np.arange(-9.0, 9.0 + 1e-9, 4e-3)
    g = Gridded.from_pdf(z, np.exp(-0.5 * z * z))
    x = np.linspace(0, 10, 41)
    assert np.max(np.abs(g.theta(x) - Gaussian(1.0).theta(x))) < 1e-6


def brute_concave_majorant(px, py):
    """Least concave majorant at each sample point, by checking every chord."""
    out = py.copy()
    n = len(px)
    for i in range(n):
        for j in range(i + 1):
            for k in range(i, n):
                if px[k] == px[j]:
                    continue
                w = (px[i] - px[j]) / (px[k] - px[j])
                out[i] = max(out[i], (1 - w) * py[j] + w * py[k])
    return out


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=18), st.integers(0, 2 ** 31))
def test_upper_hull_matches_brute_force(ys, seed):
    rng = np.random.default_rng(seed)
    px = np.sort(rng.choice(np.arange(1, 200), size=len(ys), replace=False)).astype(float)
    py = np.array(ys)
    hx, hy = upper_hull(px, py)
    assert set(hx.tolist()) <= set(px.tolist())
    assert np.allclose(np.interp(px, hx, hy), brute_concave_majorant(px, py), atol=1e-12)


def test_concave_envelope_of_bimodal_profile():
    z = np.linspace(-6, 6, 1201)
    bimodal = Gridded.from_pdf(z, np.exp(-0.5 * ((z - 2.5) / 0.4) ** 2)
                               + np.exp(-0.5 * ((z + 2.5) / 0.4) ** 2))
    lb = lb_curve(bimodal, n=301)
    env = concave_envelope(lb)
    s = np.linspace(0, lb.x[-1], 500)
    e = np.asarray(env(s))
    assert env(0.0) == 0.0
    assert np.all(e >= np.asarray(lb(s)) - 1e-12)
    assert np.all(np.diff(e, 2) <= 1e-9)
    assert env.kind == "envelope" and lb.kind == "lb"
    assert env(1e6) <= 1.0


def test_theta_lb_gridded_dominates_theta_and_is_monotone():
    z = np.linspace(-6, 6, 601)
    bimodal = Gridded.from_pdf(z, np.exp(-0.5 * ((z - 2) / 0.5) ** 2)
                               + np.exp(-0.5 * ((z + 2) / 0.5) ** 2))
    on_grid = np.arange(0, 8, bimodal.step)
    lb = np.asarray(theta_lb(bimodal, on_grid))
    th = np.asarray(bimodal.theta(on_grid))
    assert np.all(lb >= th - 1e-15)
    # the profile dips once a shifted bump lands on the other one
    assert np.any(lb > th + 1e-3)
    off_grid = np.sort(np.random.default_rng(0).uniform(0, 14, 500))
    assert np.all(np.diff(np.asarray(theta_lb(bimodal, off_grid))) >= 0)
    assert theta_lb(bimodal, 0.0) == 0.0
    assert theta_lb(bimodal, 100.0) == pytest.approx(1.0, abs=1e-12)


def test_theta_lb_flat_on_dips_of_well_separated_bumps():
    # two unit bumps at +-5: theta dips near shift 10 while theta_lb stays flat
    z = np.linspace(-8, 8, 1601)
    two = Gridded.from_pdf(z, np.exp(-0.5 * (z - 5) ** 2) + np.exp(-0.5 * (z + 5) ** 2))
    s = np.arange(7.0, 12.0, two.step)
    th, lb = np.asarray(two.theta(s)), np.asarray(theta_lb(two, s))
    assert th.min() < th[0] - 0.1
    dip = th < lb - 1e-6
    assert np.any(dip)
    assert np.ptp(lb[dip]) < 1e-3


def test_thetacurve_holds_tail():
    c = ThetaCurve(np.array([0.0, 1.0]), np.array([0.0, 0.5]))
    assert c(2.0) == 0.5
    assert c(-0.5) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        ThetaCurve(np.array([1.0, 0.0]), np.array([0.0, 0.5]))


def test_contraction_criterion():
    g = contraction_criterion(Gaussian(1.0), 1.0)
    assert g["eta"] == pytest.approx(float(Gaussian(1.0).theta(1.0)))
    assert not g["saturated"]
    assert contraction_criterion(Uniform(1.0), 1.0)["saturated"]
    assert not contraction_criterion(Uniform(1.0), 0.9)["saturated"]
    with pytest.raises(ValueError):
        contraction_criterion(Gaussian(1.0), 0.0)


def test_log_theta_gap_stays_finite_past_double_precision():
    g = Gaussian(1.0)
    assert np.isfinite(g.log_theta_gap(200.0))
    assert float(g.theta(200.0)) == 1.0
    assert g.log_theta_gap(1.0) == pytest.approx(math.log(1 - float(g.theta(1.0))))
    assert Laplace(2.0).log_theta_gap(3.0) == pytest.approx(-0.75)
    assert Uniform(1.0).log_theta_gap(1.0) == -math.inf


@pytest.mark.parametrize("bad", ["gaussian:-1", "laplace:0", "cauchy:1", "uniform:nan"])
def test_parse_noise_rejects(bad):
    with pytest.raises(ValueError):
        parse_noise(bad)


def test_noise_serialization_roundtrip(tmp_path):
    for m in NAMED:
        assert noise_from_dict(m.to_dict()) == m
    tri = triangle(11)
    path = tmp_path / "tri.json"
    path.write_text(json.dumps(tri.to_dict()))
    back = parse_noise(f"gridded:{path}")
    assert np.array_equal(back.x, tri.x) and np.array_equal(back.f, tri.f)


@pytest.mark.parametrize("model", NAMED + [triangle(201)], ids=str)
def test_sampling_matches_cdf(model):
    rng = np.random.default_rng(11)
    z = model.sample(rng, 200_000)
    q = np.quantile(z, [0.1, 0.5, 0.9])
    assert np.allclose(np.asarray(model.cdf(q)), [0.1, 0.5, 0.9], atol=5e-3)


def test_module_level_ops_reject_negative_shifts():
    from dobrushin.noise import theta
    assert theta(Gaussian(1.0), 2.0) == pytest.approx(0.6826894921370859, rel=1e-15)
    assert theta(Laplace(1.0), 2.0) == pytest.approx(1 - math.exp(-1), rel=1e-15)
    with pytest.raises(ValueError):
        theta(Gaussian(1.0), -1.0)
    with pytest.raises(ValueError):
        theta_lb(Gaussian(1.0), -0.5)
