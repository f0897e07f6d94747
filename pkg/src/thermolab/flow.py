"""The thermostat flow on SM: orbits with dense output, exp map, flip checks."""
from dataclasses import dataclass
import math

import numpy as np

from . import _kernels as K
from .geometry import PhasePoint, angle_distance, wrap_angle
from .model import System, flip_intensity

DEFAULT_REL_TOL = 1e-9
DEFAULT_ABS_TOL = 1e-11


class IntegrationError(RuntimeError):
    """Step-size collapse or step budget exhausted; ``t_reached`` says where."""

    def __init__(self, message, t_reached):
        super().__init__(f"{message} (stopped at t = {t_reached:.17g})")
        self.t_reached = t_reached


_STATUS_TEXT = {K.ST_UNDERFLOW: "step size underflow", K.ST_MAXSTEPS: "step budget exhausted"}


def check_status(status, t_reached, what="integration"):
    if status < 0:
        raise IntegrationError(f"{what} failed: {_STATUS_TEXT.get(status, status)}", t_reached)


def _check_tolerances(rel_tol, abs_tol):
    if not (rel_tol > 0 and abs_tol > 0 and math.isfinite(rel_tol) and math.isfinite(abs_tol)):
        raise ValueError("tolerances must be positive and finite")


def _span(span):
    if np.isscalar(span):
        lo, hi = (0.0, float(span)) if span >= 0 else (float(span), 0.0)
    else:
        lo, hi = (float(s) for s in span)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > 0 or hi < 0:
        raise ValueError(f"span must be finite and contain 0, got {span!r}")
    return lo, hi


@dataclass(frozen=True)
class IntegratorStats:
    steps: int
    rejected: int
    rel_tol: float
    abs_tol: float


class OrbitSegment:
    """Dense trajectory of the flow through ``initial`` on [t_min, t_max].

    The stored state is (x, y, theta, int V(lambda)) with all three angles
    unwrapped; :meth:`state` reduces them mod 2 pi.
    """

    def __init__(self, system, initial, t_min, t_max, dense, stats):
        self.system = system
        self.initial = initial
        self.t_min = t_min
        self.t_max = t_max
        self.dense = dense
        self.stats = stats

    @property
    def surface(self):
        return self.system.surface

    @property
    def model(self):
        return self.system.model

    def contains(self, t, slack=1e-12):
        t = np.asarray(t, dtype=float)
        scale = slack * max(1.0, abs(self.t_min), abs(self.t_max))
        return bool(np.all((t >= self.t_min - scale) & (t <= self.t_max + scale)))

    def require(self, t, what="time"):
        if not self.contains(t):
            raise ValueError(f"{what} {t!r} outside orbit span [{self.t_min}, {self.t_max}]")

    def raw(self, t):
        """Unwrapped (x, y, theta, int V(lambda)) at scalar or array ``t``."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        self.require(ts.min() if ts.size else 0.0)
        self.require(ts.max() if ts.size else 0.0)
        out = K.dense_eval(*self.dense, ts)
        return out[0] if np.ndim(t) == 0 else out

    def state(self, t):
        x, y, th, _ = self.raw(float(t))
        return PhasePoint(float(x), float(y), float(th)).normalized()

    def states(self, ts):
        out = self.raw(np.asarray(ts, dtype=float))[:, :3].copy()
        return wrap_angle(out)

    def damping(self, t):
        """m(t) = exp(-1/2 int_0^t V(lambda))."""
        return np.exp(-0.5 * self.raw(t)[..., 3])

    def jets(self, ts, gauge=None):
        system = self.system if gauge is None else self.system.with_gauge(gauge)
        r = self.raw(np.atleast_1d(np.asarray(ts, dtype=float)))
        return system.jets(r[:, 0], r[:, 1], r[:, 2])

    def params(self, gauge=None, profile=None):
        system = self.system if gauge is None else self.system.with_gauge(gauge)
        return system.params(orbit=self.dense, profile=profile)


def generator(surface, model, p):
    """Chart components of F = X + lambda V at ``p``."""
    jet = System(surface, model).jet(p.x, p.y, p.theta)
    return np.array([jet[K.J_GX], jet[K.J_GY], jet[K.J_GT]])


def _solve_leg(P, y0, t_end, rel_tol, abs_tol, max_step):
    res = K.solve(K.K_ORBIT, P, 0.0, t_end, y0, rel_tol, abs_tol, max_step, np.inf, True, -1.0)
    where = f"orbit through (x, y, theta) = ({y0[0]:.17g}, {y0[1]:.17g}, {y0[2]:.17g})"
    check_status(res[0], res[1], where)
    return res


def integrate_system(system, v0, span, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL,
                     max_step=np.inf):
    _check_tolerances(rel_tol, abs_tol)
    lo, hi = _span(span)
    P = system.params()
    y0 = np.array([v0.x, v0.y, v0.theta, 0.0])
    parts = []
    steps = rejected = 0
    if lo < 0.0:
        res = _solve_leg(P, y0, lo, rel_tol, abs_tol, max_step)
        parts.append(res[6:])
        steps += res[3]
        rejected += res[4]
    if hi > 0.0 or lo == 0.0:
        res = _solve_leg(P, y0, hi, rel_tol, abs_tol, max_step)
        parts.append(res[6:])
        steps += res[3]
        rejected += res[4]
    if len(parts) == 1:
        dense = parts[0]
    else:
        (tb0, ba0, h0, c0), (tb1, ba1, h1, c1) = parts
        dense = (np.concatenate([tb0, tb1[1:]]), np.concatenate([ba0, ba1]),
                 np.concatenate([h0, h1]), np.concatenate([c0, c1]))
    if dense[3].shape[0] == 0:
        # zero-length span: a constant interpolant
        c = np.zeros((1, 5, 4))
        c[0, 0] = y0
        dense = (np.array([0.0, 1.0]), np.zeros(1), np.ones(1), c)
    return OrbitSegment(system, v0, lo, hi, dense, IntegratorStats(steps, rejected, rel_tol, abs_tol))


def integrate_orbit(surface, model, v0, span, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL,
                    max_step=np.inf):
    """Integrate the flow through ``v0`` over ``span`` (a length or a (t_min, t_max) pair)."""
    return integrate_system(System(surface, model), v0, span, rel_tol, abs_tol, max_step)


def phase_distance(p, q):
    """Euclidean distance on the 3-torus chart (all coordinates periodic)."""
    d = angle_distance(np.array([p.x, p.y, p.theta]), np.array([q.x, q.y, q.theta]))
    return float(np.sqrt(np.sum(d * d)))


def reverse_orbit_check(surface, model, v0, T, tol=1e-14):
    """Run forward T, flip, run the flipped system forward T, flip back.

    Returns the distance to ``v0``; the round trip is exact in exact arithmetic.
    ``tol`` is the integrator's relative tolerance. The flow is dissipative,
    so the return leg can stretch errors by roughly exp(T max|V(lambda)|).
    """
    if T <= 0:
        raise ValueError("T must be positive")
    forward = integrate_orbit(surface, model, v0, T, rel_tol=tol, abs_tol=tol * 1e-2)
    mid = forward.state(T).flipped()
    back = integrate_orbit(surface, flip_intensity(model), mid, T, rel_tol=tol, abs_tol=tol * 1e-2)
    return phase_distance(back.state(T).flipped(), v0.normalized())


def exp_map(surface, model, x0, y0, theta0, t, rel_tol=1e-11, abs_tol=1e-13):
    """Base point of the orbit at time t, as an unwrapped chart position."""
    if t < 0:
        raise ValueError("t must be non-negative")
    orbit = integrate_orbit(surface, model, PhasePoint(x0, y0, theta0), t, rel_tol, abs_tol)
    x, y = orbit.raw(float(t))[:2]
    return float(x), float(y)


class ExpJacobianProfile:
    """Central difference in theta0 of the exp map, as a function of t.

    The value is the component of d exp / d theta0 normal to the velocity,
    measured in the metric at the endpoint. It is signed so a zero shows up
    as a sign change; its absolute value is the size of the normal part.
    """

    def __init__(self, surface, model, x0, y0, theta0, t_max, eps=1e-5,
                 rel_tol=1e-12, abs_tol=1e-14):
        if eps <= 0:
            raise ValueError("eps must be positive")
        if t_max <= 0:
            raise ValueError("t_max must be positive")
        self.eps = eps
        self.t_max = t_max
        self.center = integrate_orbit(surface, model, PhasePoint(x0, y0, theta0), t_max, rel_tol, abs_tol)
        self.plus = integrate_orbit(surface, model, PhasePoint(x0, y0, theta0 + eps), t_max, rel_tol, abs_tol)
        self.minus = integrate_orbit(surface, model, PhasePoint(x0, y0, theta0 - eps), t_max, rel_tol, abs_tol)

    def __call__(self, t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        d = (self.plus.raw(ts)[:, :2] - self.minus.raw(ts)[:, :2]) / (2.0 * self.eps)
        c = self.center.raw(ts)
        ef = np.exp(self.center.surface.f(c[:, 0], c[:, 1]))
        val = ef * (-np.sin(c[:, 2]) * d[:, 0] + np.cos(c[:, 2]) * d[:, 1])
        return val[0] if np.ndim(t) == 0 else val


def exp_jacobian_fd(surface, model, x0, y0, theta0, t, eps=1e-5):
    """Normal part of d exp / d theta0 at time t (see :class:`ExpJacobianProfile`)."""
    if t <= 0:
        raise ValueError("t must be positive")
    return float(ExpJacobianProfile(surface, model, x0, y0, theta0, t, eps)(float(t)))
