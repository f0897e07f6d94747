import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermolab import _kernels as K
from thermolab.cocycle import (KappaProfile, SigmaCovector, change_basis, cocycle_matrix,
                               damping_m, propagate_sigma, propagate_z, riccati_w, shift_slope,
                               slope_of, u_from_w, z_initial, z_solution)
from thermolab.flow import integrate_orbit
from thermolab.geometry import ConformalTorus, PhasePoint
from thermolab.model import KAPPA_TILDE_GAUGE, GaugeSpec, IntensityModel, System, named_system

ZERO = GaugeSpec.zero()
finite = st.floats(-10, 10, allow_nan=False)


@pytest.fixture(scope="module")
def s2_orbit():
    s, m = named_system("S2")
    return integrate_orbit(s, m, PhasePoint(0.4, 1.1, 0.3), (-8.0, 8.0), 1e-12, 1e-14)


def test_geodesic_cocycle_is_a_shear():
    s, m = named_system("S0")
    orbit = integrate_orbit(s, m, PhasePoint(0, 0, 1.0), 5.0)
    for t in (1.0, 5.0):
        np.testing.assert_allclose(cocycle_matrix(orbit, ZERO, t).matrix, [[1, 0], [-t, 1]],
                                   atol=1e-12)


def test_magnetic_cocycle_is_a_rotation():
    s, m = ConformalTorus.flat(), IntensityModel.constant(1.0)
    orbit = integrate_orbit(s, m, PhasePoint(0, 0, 0.2), 6.0)
    for t in (0.5, 3.0, 6.0):
        c, sn = math.cos(t), math.sin(t)
        np.testing.assert_allclose(cocycle_matrix(orbit, ZERO, t).matrix, [[c, sn], [-sn, c]],
                                   atol=1e-11)


@pytest.mark.parametrize("gauge", [ZERO, GaugeSpec.scaled(1.0), KAPPA_TILDE_GAUGE])
def test_determinant_is_damping_squared(s2_orbit, gauge):
    # det Psi_t = exp(-int V(lambda)) = cos(2 theta0) / cos(2 theta(t)) on S2, and
    # 2 theta(t) = gd(2t + s0) with cos(gd(s)) = sech(s)
    u0 = 0.6
    s0 = 2.0 * math.atanh(math.tan(0.5 * u0))
    for t in (-7.0, -1.0, 3.0, 7.0):
        cm = cocycle_matrix(s2_orbit, gauge, t)
        assert cm.det == pytest.approx(math.cos(u0) * math.cosh(2 * t + s0), rel=1e-9)
        assert cm.det == pytest.approx(damping_m(s2_orbit, t) ** 2, rel=1e-9)


def test_gamma_is_unimodular(s2_orbit):
    for t in np.linspace(-8, 8, 9):
        g = cocycle_matrix(s2_orbit, KAPPA_TILDE_GAUGE, t, "gamma")
        assert abs(g.det - 1.0) < 1e-9
        assert abs(np.linalg.det(g.matrix) - 1.0) < 1e-6 * max(1.0, np.abs(g.matrix).max() ** 2)
    with pytest.raises(ValueError):
        cocycle_matrix(s2_orbit, ZERO, 1.0, "gamma")
    with pytest.raises(ValueError):
        cocycle_matrix(s2_orbit, ZERO, 1.0, "delta")


@settings(max_examples=10)
@given(st.floats(-3.5, 3.5), st.floats(-3.5, 3.5))
def test_cocycle_property(s, t):
    surface, model = named_system("S3")
    orbit = integrate_orbit(surface, model, PhasePoint(0.7, 0.1, 2.0), (-8.0, 8.0), 1e-12, 1e-14)
    first = cocycle_matrix(orbit, ZERO, s).matrix
    second = cocycle_matrix(orbit, ZERO, t, start=s).matrix
    whole = cocycle_matrix(orbit, ZERO, s + t).matrix
    np.testing.assert_allclose(second @ first, whole, rtol=1e-8, atol=1e-8)


def test_propagate_sigma_matches_matrix(s2_orbit):
    xi = SigmaCovector(0.3, -1.2, ZERO)
    for t in (-4.0, 2.5):
        out = propagate_sigma(s2_orbit, ZERO, xi, t)
        mat = cocycle_matrix(s2_orbit, ZERO, t).matrix
        np.testing.assert_allclose([out.x, out.y], mat @ [0.3, -1.2], rtol=1e-10)
        assert out.t == t


def test_z_is_y_over_m(s2_orbit):
    xi = SigmaCovector(1.0, 0.5, KAPPA_TILDE_GAUGE)
    z0, zd0 = z_initial(s2_orbit, KAPPA_TILDE_GAUGE, xi)
    for t in (-5.0, 3.0, 6.0):
        y = propagate_sigma(s2_orbit, KAPPA_TILDE_GAUGE, xi, t).y
        z, _ = propagate_z(s2_orbit, z0, zd0, t)
        assert z * damping_m(s2_orbit, t) == pytest.approx(y, rel=1e-8)


@pytest.mark.parametrize("kappa,z", [(1.0, math.sin), (-1.0, math.sinh), (4.0, lambda t: 0.5 * math.sin(2 * t))])
def test_constant_profile_jacobi_solutions(kappa, z):
    sol = z_solution(KappaProfile.constant(kappa), 0.0, 1.0, 3.0)
    for t in (0.5, 1.5, 3.0):
        assert sol(t)[0] == pytest.approx(z(t), abs=1e-11)


def test_profile_evaluation():
    prof = KappaProfile(1.0, cos=(0.5,), sin=(0.0, 0.25), omega=2.0)
    t = 0.3
    assert prof(t) == pytest.approx(1 + 0.5 * math.cos(0.6) + 0.25 * math.sin(1.2))
    mean, omega, packed = prof.packed()
    assert (mean, omega, packed.shape) == (1.0, 2.0, (2, 2))


def test_riccati_closed_forms():
    # w' + w^2 + kappa = 0: kappa = -1, w0 = 0 gives tanh t; kappa = 1 gives -tan t
    res = riccati_w(KappaProfile.constant(-1.0), 0.0, 3.0)
    assert res.blowup_time is None
    assert res.solution(2.0)[0] == pytest.approx(math.tanh(2.0), abs=1e-12)
    res = riccati_w(KappaProfile.constant(1.0), 0.0, 3.0, cap=1e6)
    assert res.blowup_time == pytest.approx(math.pi / 2, abs=1e-5)
    assert res.values.shape == res.times.shape
    assert u_from_w(1.0, 2.0) == 0.0


@given(finite, finite, finite)
def test_slope_shift_algebra(s, p, q):
    assert shift_slope(shift_slope(s, p, q), q, p) == pytest.approx(s, abs=1e-9)
    assert shift_slope(s, p, p) == s


@given(finite, finite.filter(lambda y: y != 0))
def test_slope_of(x, y):
    assert slope_of(x, y) == x / y
    assert slope_of(x, 0.0) == math.inf


@given(finite, finite, st.floats(0, 6.28), st.floats(-2, 2))
def test_change_basis_preserves_lines(x, y, th, c):
    surface, model = named_system("S2")
    p = PhasePoint(0.0, 0.0, th)
    sys_ = System(surface, model)
    xi = SigmaCovector(x, y, ZERO, 0.0, p)
    new = GaugeSpec.scaled(c)
    out = change_basis(xi, new, sys_)
    vl = sys_.jet(0.0, 0.0, th)[K.J_VL]
    assert out.x == pytest.approx(x + c * vl * y, abs=1e-9)
    assert out.y == y
    back = change_basis(out, ZERO, sys_)
    assert back.x == pytest.approx(x, abs=1e-8)
    with pytest.raises(ValueError):
        change_basis(SigmaCovector(x, y, ZERO), new, sys_)


def test_basis_change_commutes_with_transport(s2_orbit):
    a = SigmaCovector(0.7, 0.2, ZERO, 0.0, s2_orbit.initial)
    b = change_basis(a, GaugeSpec.scaled(1.0), s2_orbit.system)
    ta = propagate_sigma(s2_orbit, ZERO, a, 3.0)
    tb = propagate_sigma(s2_orbit, GaugeSpec.scaled(1.0), b, 3.0)
    vl = s2_orbit.jets([3.0])[0][K.J_VL]
    assert tb.x == pytest.approx(ta.x + vl * ta.y, rel=1e-8)
    assert tb.y == pytest.approx(ta.y, rel=1e-8)


def test_cos_theta_invariant_circle():
    # on theta = pi/2: m(t) = e^{t/2}, and xi = (0, 1) in gauge V(lambda) has z = e^{-t/2}
    s, m = named_system("S1")
    orbit = integrate_orbit(s, m, PhasePoint(0.0, 0.0, math.pi / 2), (-4.0, 4.0))
    gauge = GaugeSpec.scaled(1.0)
    z0, zd0 = z_initial(orbit, gauge, SigmaCovector(0.0, 1.0, gauge))
    for t in (-3.0, 1.0, 4.0):
        assert damping_m(orbit, t) == pytest.approx(math.exp(t / 2), rel=1e-12)
        assert propagate_z(orbit, z0, zd0, t)[0] == pytest.approx(math.exp(-t / 2), rel=1e-10)


def test_cos_two_theta_invariant_circle_damping():
    s, m = named_system("S2")
    orbit = integrate_orbit(s, m, PhasePoint(1.0, 1.0, math.pi / 4), 5.0)
    assert damping_m(orbit, 5.0) == pytest.approx(math.exp(5.0), rel=1e-10)


def test_magnetic_damping_is_trivial_and_psi_equals_gamma():
    s, m = ConformalTorus.flat(), IntensityModel.from_terms([(0, "cos", 1, 0, "cc", 0.7)])
    orbit = integrate_orbit(s, m, PhasePoint(0.2, 0.3, 0.4), 6.0)
    assert damping_m(orbit, 6.0) == 1.0
    psi = cocycle_matrix(orbit, KAPPA_TILDE_GAUGE, 6.0)
    gamma = cocycle_matrix(orbit, KAPPA_TILDE_GAUGE, 6.0, "gamma")
    np.testing.assert_array_equal(psi.matrix, gamma.matrix)


def test_decaying_solution_and_riccati_bounds():
    prof = KappaProfile.constant(-1.0)
    for t in (1.0, 4.0):
        assert propagate_z(prof, 1.0, -1.0, t)[0] == pytest.approx(math.exp(-t), rel=1e-10)
    fixed = riccati_w(prof, -1.0, 5.0)
    np.testing.assert_allclose(fixed.values, -1.0, atol=1e-12)
    for w0 in (-0.99, -0.3, 0.5, 1.0):
        res = riccati_w(prof, w0, 10.0)
        assert res.blowup_time is None
        assert np.max(np.abs(res.values)) <= 1.0 + 1e-12


def test_zero_covector_and_geodesic_transport():
    s, m = named_system("S0")
    orbit = integrate_orbit(s, m, PhasePoint(0, 0, 0.5), 4.0)
    assert propagate_sigma(orbit, ZERO, SigmaCovector(0.0, 0.0), 4.0).norm() == 0.0
    out = propagate_sigma(orbit, ZERO, SigmaCovector(1.0, 0.0), 4.0)
    assert (out.x, out.y) == pytest.approx((1.0, -4.0), abs=1e-12)


def test_second_order_jacobi_residual():
    # y'' + V(lambda) y' + K y = 0 along propagated solutions
    s, m = named_system("S3")
    orbit = integrate_orbit(s, m, PhasePoint(0.7, 0.1, 2.0), (-1.0, 6.0), 1e-12, 1e-14)
    xi = SigmaCovector(0.4, 1.0, ZERO)
    h = 1e-2
    for t in (0.5, 2.0, 4.5):
        ym2, ym1, y0, yp1, yp2 = (propagate_sigma(orbit, ZERO, xi, t + k * h).y
                                  for k in (-2, -1, 0, 1, 2))
        yd = (ym2 - 8 * ym1 + 8 * yp1 - yp2) / (12 * h)
        ydd = (-ym2 + 16 * ym1 - 30 * y0 + 16 * yp1 - yp2) / (12 * h * h)
        jet = orbit.jets([t])[0]
        assert abs(ydd + jet[K.J_VL] * yd + jet[K.J_BIGK] * y0) < 1e-5


@settings(max_examples=10)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-5, 5))
def test_cross_representation_random(x, y, t):
    s, m = named_system("S3")
    orbit = integrate_orbit(s, m, PhasePoint(2.0, 1.0, 0.1), (-5.0, 5.0), 1e-12, 1e-14)
    xi = SigmaCovector(x, y, KAPPA_TILDE_GAUGE)
    z0, zd0 = z_initial(orbit, KAPPA_TILDE_GAUGE, xi)
    yt = propagate_sigma(orbit, KAPPA_TILDE_GAUGE, xi, t).y
    zt, _ = propagate_z(orbit, z0, zd0, t)
    assert abs(zt * damping_m(orbit, t) - yt) < 1e-8
