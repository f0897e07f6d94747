import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermolab import _kernels as K
from thermolab.geometry import ConformalTorus, FourierField2, PhasePoint
from thermolab.model import (BIG_K_GAUGE, KAPPA_TILDE_GAUGE, GaugeSpec, IntensityModel, System,
                             big_k, flip_intensity, gauge_curvatures, jets_numpy, kappa_p,
                             kappa_tilde, lambda_jet, named_system)

angles = st.floats(0.0, 6.3, allow_nan=False)
coefs = st.floats(-0.5, 0.5, allow_nan=False)
lam_terms = st.lists(
    st.tuples(st.integers(0, 2), st.sampled_from(["cos", "sin"]), st.integers(0, 2),
              st.integers(0, 2), st.sampled_from(["cc", "cs", "sc", "ss"]), coefs),
    min_size=1, max_size=4)


def lam_closed_form(ts, x, y, th):
    out = 0.0
    for k, trig, j, l, tag, c in ts:
        fx = math.cos if tag[0] == "c" else math.sin
        fy = math.cos if tag[1] == "c" else math.sin
        g = math.cos if trig == "cos" else math.sin
        if trig == "sin" and k == 0:
            continue
        out += c * fx(j * x) * fy(l * y) * g(k * th)
    return out


@given(lam_terms, angles, angles, angles)
def test_intensity_value_matches_terms(ts, x, y, th):
    m = IntensityModel.from_terms(ts)
    assert m(x, y, th) == pytest.approx(lam_closed_form(ts, x, y, th), abs=1e-12)


@given(lam_terms)
def test_intensity_terms_round_trip(ts):
    m = IntensityModel.from_terms(ts)
    assert IntensityModel.from_terms(m.terms(), m.theta_degree) == m


@given(lam_terms, angles, angles, angles)
def test_flip_intensity_is_minus_lambda_at_antipode(ts, x, y, th):
    m = IntensityModel.from_terms(ts)
    flipped = flip_intensity(m)
    assert flipped(x, y, th) == pytest.approx(-m(x, y, th + math.pi), abs=1e-12)
    assert flip_intensity(flipped) == m


def test_intensity_validation():
    with pytest.raises(ValueError):
        IntensityModel([])
    with pytest.raises(ValueError):
        IntensityModel.from_terms([(1, "tan", 0, 0, "cc", 1.0)])
    with pytest.raises(ValueError):
        IntensityModel.from_terms([(2, "cos", 0, 0, "cc", 1.0)], theta_degree=1)


def test_gauge_choices():
    assert GaugeSpec.zero().tag == "zero"
    assert GaugeSpec.scaled(0.5).tag == "scaled:0.5"
    assert KAPPA_TILDE_GAUGE == GaugeSpec.scaled(0.5)
    with pytest.raises(ValueError):
        GaugeSpec("weird")
    with pytest.raises(ValueError):
        GaugeSpec("custom")
    a = GaugeSpec.custom_series(IntensityModel.constant(1.0))
    b = GaugeSpec.custom_series(IntensityModel.constant(2.0))
    assert a != b


# closed forms on the flat torus


@given(angles, angles, angles)
def test_s1_curvatures_closed_form(x, y, th):
    # lambda = cos theta: K = 0, kappa_tilde = cos^2/2 - sin^2/4, kappa_0 = cos^2
    s, m = named_system("S1")
    p = PhasePoint(x, y, th)
    assert big_k(s, m, p) == pytest.approx(0.0, abs=1e-15)
    c, sn = math.cos(th), math.sin(th)
    assert kappa_tilde(s, m, p) == pytest.approx(0.5 * c * c - 0.25 * sn * sn, abs=1e-14)
    assert kappa_p(s, m, GaugeSpec.zero(), p) == pytest.approx(c * c, abs=1e-14)


@given(angles, angles, angles)
def test_s2_damped_curvature_is_minus_one(x, y, th):
    s, m = named_system("S2")
    assert kappa_tilde(s, m, PhasePoint(x, y, th)) == pytest.approx(-1.0, abs=1e-13)


@given(st.floats(-3, 3), angles, angles, angles)
def test_magnetic_constant_curvature(c, x, y, th):
    s, m = ConformalTorus.flat(), IntensityModel.constant(c)
    gc = gauge_curvatures(s, m, GaugeSpec.zero(), PhasePoint(x, y, th))
    assert gc.kappa_p == pytest.approx(c * c)
    assert gc.big_k == pytest.approx(c * c)
    assert gc.kappa_tilde == pytest.approx(c * c)


@settings(max_examples=30)
@given(lam_terms, angles, angles, angles, st.sampled_from([0.0, 0.5, 1.0]))
def test_kappa_p_formula_against_frame_derivatives(ts, x, y, th, c):
    """kappa_p = K - H lambda + lambda^2 + F(p) + p (p - V lambda), derivatives by differences."""
    surface = ConformalTorus(FourierField2.from_terms([(1, 1, "cs", 0.2)]))
    m = IntensityModel.from_terms(ts)
    gauge = GaugeSpec.scaled(c)
    sys_ = System(surface, m, gauge)
    jet = sys_.jet(x, y, th)
    h = 1e-5
    e = math.exp(-surface.f(x, y))
    _, fx, fy, _, _, _ = surface.f.jet(x, y)
    X = e * np.array([math.cos(th), math.sin(th), -fx * math.sin(th) + fy * math.cos(th)])
    H = e * np.array([-math.sin(th), math.cos(th), -(fx * math.cos(th) + fy * math.sin(th))])
    q = np.array([x, y, th])

    def d(fun, vec):
        return (fun(*(q + h * vec)) - fun(*(q - h * vec))) / (2 * h)

    def vlam(a, b, t):
        return (m(a, b, t + h) - m(a, b, t - h)) / (2 * h)

    lam = m(x, y, th)
    vl = vlam(x, y, th)
    p = c * vl
    gen = X + np.array([0.0, 0.0, lam])
    Fp = c * d(vlam, gen)
    Hl = d(m, H)
    kg = float(jet[K.J_KG])
    expected = kg - Hl + lam * lam + Fp + p * (p - vl)
    assert jet[K.J_KP] == pytest.approx(expected, abs=1e-5)


def test_lambda_jet_fields():
    s, m = named_system("S2")
    lj = lambda_jet(m, s, PhasePoint(0.0, 0.0, 0.3))
    assert lj.lam == pytest.approx(math.cos(0.6))
    assert lj.V == pytest.approx(-2 * math.sin(0.6))
    assert lj.VV == pytest.approx(-4 * math.cos(0.6))
    assert lj.H == 0.0 and lj.X == 0.0


@settings(max_examples=25, deadline=None)
@given(lam_terms, lam_terms, st.lists(angles, min_size=3, max_size=3),
       st.sampled_from(["zero", "scaled", "custom"]))
def test_numpy_jets_match_kernel(ts, gts, xyz, kind):
    surface = ConformalTorus(FourierField2.from_terms([(1, 0, "cc", 0.1), (2, 1, "ss", -0.05)]))
    m = IntensityModel.from_terms(ts)
    gauge = {"zero": GaugeSpec.zero(), "scaled": GaugeSpec.scaled(0.7),
             "custom": GaugeSpec.custom_series(IntensityModel.from_terms(gts))}[kind]
    sys_ = System(surface, m, gauge)
    x = np.array([xyz[0], 1.0])
    y = np.array([xyz[1], 2.0])
    t = np.array([xyz[2], 3.0])
    a = jets_numpy(sys_, x, y, t)
    b = K.jets_many(sys_.params(), x, y, t)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_jets_broadcast_shape():
    s, m = named_system("S3")
    out = System(s, m, BIG_K_GAUGE).jets(np.zeros((2, 3)), 0.0, np.linspace(0, 1, 3))
    assert out.shape == (2, 3, K.NJET)


def test_named_system_unknown():
    with pytest.raises(KeyError):
        named_system("S9")
