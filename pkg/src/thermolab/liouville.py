"""Liouville quadrature over SM and the integral inequalities it feeds."""
from dataclasses import dataclass
import math

import numpy as np

from . import _kernels as K
from .geometry import TWO_PI
from .model import System

EULER_CHARACTERISTIC = 0  # the torus


def _grid(n_x, n_y, n_theta):
    for n in (n_x, n_y, n_theta):
        if int(n) != n or n < 4:
            raise ValueError("grid sizes must be integers >= 4")
    x = TWO_PI * np.arange(n_x) / n_x
    y = TWO_PI * np.arange(n_y) / n_y
    th = TWO_PI * np.arange(n_theta) / n_theta
    return np.meshgrid(x, y, th, indexing="ij")


def _weighted_sum(values, weight, cell):
    # fsum is exact-rounded, so the result does not depend on summation order
    return math.fsum((np.asarray(values) * weight).ravel()) * cell


def liouville_integrate(surface, observable, n_x, n_y, n_theta):
    """Trapezoidal rule for int observable e^{2f} dx dy dtheta.

    ``observable`` maps broadcast arrays (x, y, theta) to values. On the
    uniform periodic grid this is spectrally accurate for trigonometric
    integrands.
    """
    X, Y, TH = _grid(n_x, n_y, n_theta)
    weight = np.exp(2.0 * surface.f(X, Y))
    vals = np.broadcast_to(np.asarray(observable(X, Y, TH), dtype=float), X.shape)
    cell = TWO_PI ** 3 / (n_x * n_y * n_theta)
    return _weighted_sum(vals, weight, cell)


@dataclass(frozen=True)
class HopfReport:
    gauge: str
    kappa_integral: float
    defect_integral: float
    margin: float
    euler_form: float
    max_abs_big_k: float
    grid: tuple

    @property
    def equality(self):
        return self.margin == 0.0


def hopf_check(surface, model, gauge, grid=(32, 32, 32)):
    """int kappa_p dmu against int (p - V(lambda))^2 dmu, plus the Euler-form value.

    The Euler-form value is 2 pi chi + int (lambda^2 - V(lambda)^2) dmu with
    chi = 0. ``max_abs_big_k`` is the largest |K| seen on the grid.
    """
    n_x, n_y, n_t = (int(n) for n in grid)
    X, Y, TH = _grid(n_x, n_y, n_t)
    jets = System(surface, model, gauge).jets(X, Y, TH)
    weight = np.exp(2.0 * jets[..., K.J_F])
    cell = TWO_PI ** 3 / (n_x * n_y * n_t)
    lhs = _weighted_sum(jets[..., K.J_KP], weight, cell)
    rhs = _weighted_sum((jets[..., K.J_P] - jets[..., K.J_VL]) ** 2, weight, cell)
    lam, vl = jets[..., K.J_LAM], jets[..., K.J_VL]
    euler = 2.0 * math.pi * EULER_CHARACTERISTIC + _weighted_sum(lam * lam - vl * vl, weight, cell)
    return HopfReport(gauge.tag, lhs, rhs, rhs - lhs, euler,
                      float(np.max(np.abs(jets[..., K.J_BIGK]))), (n_x, n_y, n_t))


def transported_volume(surface, model, p, t=1.0, size=0.01, rel_tol=1e-12, abs_tol=1e-14):
    """Liouville volume ratio of a small cube around ``p`` after time ``t``.

    Uses the central-difference Jacobian of the time-t map, so the ratio is
    det(D phi_t) e^{2f(end)} / e^{2f(start)}.
    """
    from .flow import integrate_orbit
    from .geometry import PhasePoint

    h = 0.5 * size
    base = np.array([p.x, p.y, p.theta])
    J = np.zeros((3, 3))
    for j in range(3):
        ends = []
        for sgn in (1.0, -1.0):
            q = base.copy()
            q[j] += sgn * h
            orbit = integrate_orbit(surface, model, PhasePoint(*q), t, rel_tol, abs_tol)
            ends.append(orbit.raw(float(t))[:3])
        J[:, j] = (ends[0] - ends[1]) / size
    end = integrate_orbit(surface, model, p, t, rel_tol, abs_tol).raw(float(t))
    w0 = math.exp(2.0 * float(surface.f(p.x, p.y)))
    w1 = math.exp(2.0 * float(surface.f(end[0], end[1])))
    return float(np.linalg.det(J)) * w1 / w0
