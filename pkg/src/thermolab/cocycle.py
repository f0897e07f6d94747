"""Lifted dynamics on the characteristic set: covectors, damping, cocycles, Riccati."""
from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernels as K
from .flow import OrbitSegment, check_status
from .geometry import PhasePoint
from .model import KAPPA_TILDE_GAUGE, GaugeSpec, System

LINEAR_REL_TOL = 1e-13
LINEAR_ABS_TOL = 1e-15
RENORM_DT = 1.0


@dataclass(frozen=True)
class KappaProfile:
    """Abstract curvature profile kappa(t) = mean + sum_n a_n cos(n w t) + b_n sin(n w t)."""

    mean: float
    cos: tuple = ()
    sin: tuple = ()
    omega: float = 1.0

    @classmethod
    def constant(cls, value):
        return cls(float(value))

    def packed(self):
        n = max(len(self.cos), len(self.sin), 1)
        prof = np.zeros((2, n))
        prof[0, :len(self.cos)] = self.cos
        prof[1, :len(self.sin)] = self.sin
        return (float(self.mean), float(self.omega), prof)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        val = self.mean + 0.0 * t
        for n, c in enumerate(self.cos, start=1):
            val = val + c * np.cos(n * self.omega * t)
        for n, s in enumerate(self.sin, start=1):
            val = val + s * np.sin(n * self.omega * t)
        return val


_FLAT = None


def _profile_params(profile):
    global _FLAT
    if _FLAT is None:
        from .geometry import ConformalTorus
        from .model import IntensityModel
        _FLAT = System(ConformalTorus.flat(), IntensityModel.zero())
    return _FLAT.params(profile=profile.packed())


# ---------------------------------------------------------------- covectors

@dataclass(frozen=True)
class SigmaCovector:
    """x beta + y phi_p, with phi_p = psi_lambda - p beta, anchored at orbit time t."""

    x: float
    y: float
    gauge: GaugeSpec = field(default_factory=GaugeSpec.zero)
    t: float = 0.0
    anchor: PhasePoint = None

    def line(self):
        return SigmaLine(slope_of(self.x, self.y), self.gauge, self.t, self.anchor)

    def norm(self):
        return abs(self.x) + abs(self.y)


@dataclass(frozen=True)
class SigmaLine:
    """Projective class of a covector; slope inf is the cohorizontal line."""

    slope: float
    gauge: GaugeSpec = field(default_factory=GaugeSpec.zero)
    t: float = 0.0
    anchor: PhasePoint = None

    @property
    def is_cohorizontal(self):
        return math.isinf(self.slope)

    def unit_covector(self):
        if self.is_cohorizontal:
            return SigmaCovector(1.0, 0.0, self.gauge, self.t, self.anchor)
        n = abs(self.slope) + 1.0
        return SigmaCovector(self.slope / n, 1.0 / n, self.gauge, self.t, self.anchor)


def slope_of(x, y):
    if y == 0.0:
        return math.inf
    return x / y


def shift_slope(slope, p_old, p_new):
    """Slope of the same line after replacing gauge p_old by p_new."""
    return slope + (p_new - p_old)


def gauge_value(system, gauge, p):
    if gauge.kind == "zero":
        return 0.0
    jet = system.with_gauge(gauge).jet(p.x, p.y, p.theta)
    return float(jet[K.J_P])


def change_basis(xi, new_gauge, system):
    """Re-express ``xi`` in the basis {beta, phi_p'}: x' = x + (p' - p) y."""
    if xi.anchor is None:
        raise ValueError("basis change needs the anchor state")
    dp = gauge_value(system, new_gauge, xi.anchor) - gauge_value(system, xi.gauge, xi.anchor)
    return SigmaCovector(xi.x + dp * xi.y, xi.y, new_gauge, xi.t, xi.anchor)


# ---------------------------------------------------------------- propagation

def _linear_solve(kind, P, t0, t1, y0, rel_tol, abs_tol, cap=np.inf, store=False):
    res = K.solve(kind, P, float(t0), float(t1), np.asarray(y0, dtype=float),
                  rel_tol, abs_tol, np.inf, cap, store, -1.0)
    check_status(res[0], res[1], "linear propagation")
    return res


def propagate_sigma(orbit, gauge, xi0, t, rel_tol=LINEAR_REL_TOL, abs_tol=LINEAR_ABS_TOL):
    """Solve x' = -p x + kappa_p y, y' = -x - (V(lambda) - p) y from xi0.t to t."""
    orbit.require(xi0.t, "anchor time")
    orbit.require(t)
    here = orbit.state(xi0.t)
    if xi0.anchor is not None and _mismatch(xi0.anchor, here):
        raise ValueError(f"covector anchored at {xi0.anchor}, orbit is at {here} for t = {xi0.t}")
    if xi0.gauge != gauge:
        xi0 = change_basis(SigmaCovector(xi0.x, xi0.y, xi0.gauge, xi0.t, here), gauge, orbit.system)
    res = _linear_solve(K.K_SIGMA, orbit.params(gauge), xi0.t, t, [xi0.x, xi0.y], rel_tol, abs_tol)
    x, y = res[2]
    return SigmaCovector(float(x), float(y), gauge, float(t), orbit.state(t))


def _mismatch(p, q, tol=1e-8):
    from .flow import phase_distance
    return phase_distance(p, q) > tol


def damping_m(orbit, t, start=0.0):
    """m(t) = exp(-1/2 int_start^t V(lambda)) from the orbit's quadrature state."""
    orbit.require(t)
    orbit.require(start)
    return float(np.exp(-0.5 * (orbit.raw(float(t))[3] - orbit.raw(float(start))[3])))


class ScalarSolution:
    """Dense solution of a low-dimensional linear or Riccati system."""

    def __init__(self, res, t0):
        self.status = res[0]
        self.t0 = t0
        self.t_reached = res[1]
        self.final = res[2].copy()
        self.dense = res[6:]
        self.steps = res[3]

    def __call__(self, t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = K.dense_eval(*self.dense, ts)
        return out[0] if np.ndim(t) == 0 else out

    @property
    def breakpoints(self):
        return self.dense[0]


def _z_params(source):
    if isinstance(source, OrbitSegment):
        return K.K_Z, source.params()
    if isinstance(source, KappaProfile):
        return K.K_Z_PROF, _profile_params(source)
    raise TypeError("source must be an OrbitSegment or a KappaProfile")


def z_solution(source, z0, zdot0, t_end, t_start=0.0, rel_tol=LINEAR_REL_TOL,
               abs_tol=LINEAR_ABS_TOL):
    """Dense solution of z'' + kappa_tilde z = 0 on [t_start, t_end]."""
    kind, P = _z_params(source)
    if isinstance(source, OrbitSegment):
        source.require(t_start)
        source.require(t_end)
    res = _linear_solve(kind, P, t_start, t_end, [z0, zdot0], rel_tol, abs_tol, store=True)
    return ScalarSolution(res, t_start)


def propagate_z(source, z0, zdot0, t, t_start=0.0, rel_tol=LINEAR_REL_TOL, abs_tol=LINEAR_ABS_TOL):
    """(z, z') at time t for the normalised Jacobi equation."""
    kind, P = _z_params(source)
    if isinstance(source, OrbitSegment):
        source.require(t_start)
        source.require(t)
    res = _linear_solve(kind, P, t_start, t, [z0, zdot0], rel_tol, abs_tol)
    return float(res[2][0]), float(res[2][1])


def z_initial(orbit, gauge, xi, t=0.0):
    """(z, z') at time t of the normalised Jacobi solution of covector ``xi``.

    Uses z = y / m with m(t) = 1 at the anchor and z' = -x + (p - V(lambda)/2) y.
    """
    jet = orbit.jets([t], gauge)[0]
    return xi.y, -xi.x + (jet[K.J_P] - 0.5 * jet[K.J_VL]) * xi.y


# ---------------------------------------------------------------- cocycle

@dataclass(frozen=True)
class CocycleMatrix:
    """Psi or Gamma over the orbit from ``start`` to ``start + t``.

    The solver carries the QR factors Q(phi) R with R = [[e^a, s e^a], [0, e^b]],
    so det = e^{a+b} / m^2 for Gamma (m = 1 for Psi) without cancellation.
    """

    matrix: np.ndarray
    t: float
    start: float
    gauge: GaugeSpec
    flavor: str
    log_det: float

    @property
    def det(self):
        return math.exp(self.log_det)


def _qr_state_to_matrix(phi, a, b, s):
    c, sn = math.cos(phi), math.sin(phi)
    q = np.array([[c, -sn], [sn, c]])
    r = np.array([[math.exp(a), s * math.exp(a)], [0.0, math.exp(b)]])
    return q @ r


def cocycle_matrix(orbit, gauge, t, flavor="psi", start=0.0, rel_tol=LINEAR_REL_TOL,
                   abs_tol=LINEAR_ABS_TOL):
    """Propagator of the covector system in ``gauge`` from start to start + t.

    Columns are the images of (1, 0) and (0, 1). Flavor "gamma" divides by
    the damping factor and requires the gauge V(lambda)/2.
    """
    if flavor not in ("psi", "gamma"):
        raise ValueError(f"flavor must be 'psi' or 'gamma', got {flavor!r}")
    if flavor == "gamma" and gauge != KAPPA_TILDE_GAUGE:
        raise ValueError("the gamma cocycle is defined in the gauge V(lambda)/2 only")
    end = start + t
    orbit.require(start, "start time")
    orbit.require(end)
    res = _linear_solve(K.K_SIGMA_QR, orbit.params(gauge), start, end, np.zeros(4), rel_tol, abs_tol)
    phi, a, b, s = res[2]
    mat = _qr_state_to_matrix(phi, a, b, s)
    log_det = a + b
    if flavor == "gamma":
        half_int = 0.5 * (orbit.raw(float(end))[3] - orbit.raw(float(start))[3])
        mat = mat * math.exp(half_int)  # divide by m = exp(-half_int)
        log_det += 2.0 * half_int
    return CocycleMatrix(mat, float(t), float(start), gauge, flavor, float(log_det))


# ---------------------------------------------------------------- Riccati

@dataclass
class RiccatiResult:
    solution: ScalarSolution
    blowup_time: float = None

    @property
    def times(self):
        return self.solution.breakpoints

    @property
    def values(self):
        return self.solution(self.times)[:, 0]


def riccati_w(source, w0, t_end, cap=1e6, t_start=0.0, rel_tol=LINEAR_REL_TOL,
              abs_tol=LINEAR_ABS_TOL):
    """Integrate w' + w^2 + kappa_tilde = 0; |w| > cap is reported as blow-up."""
    if isinstance(source, OrbitSegment):
        kind, P = K.K_W, source.params()
        source.require(t_end)
        source.require(t_start)
    elif isinstance(source, KappaProfile):
        kind, P = K.K_W_PROF, _profile_params(source)
    else:
        raise TypeError("source must be an OrbitSegment or a KappaProfile")
    res = K.solve(kind, P, float(t_start), float(t_end), np.array([float(w0)]), rel_tol, abs_tol,
                  np.inf, cap, True, -1.0)
    check_status(res[0], res[1], "Riccati integration")
    blow = float(res[1]) if res[0] == K.ST_CAP else None
    return RiccatiResult(ScalarSolution(res, t_start), blow)


def u_from_w(w, v_lambda):
    """u = w - V(lambda)/2, the log-derivative of y."""
    return w - 0.5 * v_lambda
