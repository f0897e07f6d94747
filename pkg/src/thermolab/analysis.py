"""Conjugate points, Green bundles, Lyapunov exponents and domination."""
from dataclasses import dataclass
import math

import numpy as np

from . import _kernels as K
from ._parallel import map_ordered
from .cocycle import (LINEAR_ABS_TOL, LINEAR_REL_TOL, RENORM_DT, KappaProfile, SigmaCovector,
                      change_basis, z_solution)
from .flow import ExpJacobianProfile, OrbitSegment, check_status, integrate_system
from .geometry import TWO_PI, PhasePoint
from .model import GaugeSpec, System

SCAN_STEP = 0.05
BISECT_TOL = 1e-9
GREEN_SCHEDULE = (2.0, 4.0, 8.0, 16.0, 32.0)
GREEN_TOL = 1e-8
GREEN_REL_TOL = 1e-11
GREEN_ABS_TOL = 1e-13
FD_STEP = 1e-3


# ---------------------------------------------------------------- conjugate points

@dataclass(frozen=True)
class ConjugateReport:
    initial: PhasePoint
    time: float
    detector: str
    bracket: tuple = None
    residual: float = None

    @property
    def found(self):
        return self.time is not None


def _first_root(func, t_max, step, tol):
    """First sign change of ``func`` on (0, t_max], bisected to ``tol``."""
    n = int(math.ceil(t_max / step - 1e-12))
    ts = np.minimum(step * np.arange(1, n + 1), t_max)
    vals = np.asarray(func(ts), dtype=float)
    prev_t, prev_v = None, None
    for t, v in zip(ts, vals):
        if v == 0.0:
            return t, (t, t)
        if prev_v is not None and (v > 0) != (prev_v > 0):
            lo, hi, vlo = prev_t, t, prev_v
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                vm = float(func(np.array([mid]))[0])
                if vm == 0.0:
                    return mid, (mid, mid)
                if (vm > 0) == (vlo > 0):
                    lo, vlo = mid, vm
                else:
                    hi = mid
            return 0.5 * (lo + hi), (lo, hi)
        prev_t, prev_v = t, v
    return None, None


def first_conjugate_time(source, t_max, tol=BISECT_TOL, scan_step=SCAN_STEP):
    """First zero after 0 of z'' + kappa_tilde z = 0, z(0) = 0, z'(0) = 1.

    ``source`` is an orbit (kappa_tilde along it) or a :class:`KappaProfile`.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    sol = z_solution(source, 0.0, 1.0, t_max)
    t, bracket = _first_root(lambda ts: sol(ts)[:, 0], t_max, scan_step, tol)
    initial = source.initial if isinstance(source, OrbitSegment) else None
    residual = abs(float(sol(t)[0])) if t is not None else None
    return ConjugateReport(initial, t, "jacobi", bracket, residual)


def first_conjugate_time_exp(surface, model, p, t_max, eps=1e-5, tol=BISECT_TOL,
                             scan_step=SCAN_STEP):
    """First zero of the normal part of d exp / d theta0 along the orbit of ``p``."""
    prof = ExpJacobianProfile(surface, model, p.x, p.y, p.theta, t_max, eps)
    t, bracket = _first_root(prof, t_max, scan_step, tol)
    residual = abs(float(prof(t))) if t is not None else None
    return ConjugateReport(p, t, "exp-fd", bracket, residual)


def _conjugate_task(args):
    system, p, t_max, rel_tol, abs_tol = args
    orbit = integrate_system(system, p, t_max, rel_tol, abs_tol)
    return first_conjugate_time(orbit, t_max)


def conjugate_scan(surface, model, points, t_max, rel_tol=1e-9, abs_tol=1e-11, workers=None):
    system = System(surface, model)
    tasks = [(system, p, t_max, rel_tol, abs_tol) for p in points]
    return map_ordered(_conjugate_task, tasks, workers)


def random_states(n, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, TWO_PI, size=(n, 3))
    return [PhasePoint(*map(float, row)) for row in pts]


# ---------------------------------------------------------------- Green bundles

@dataclass(frozen=True)
class GreenEstimate:
    """Slopes x/y at time 0 of (1, 0) carried from +t0 (stable) or -t0 (unstable)."""

    anchor: PhasePoint
    side: str
    gauge: GaugeSpec
    t0s: tuple
    slopes: tuple
    zdots: tuple
    slope: float
    converged: bool
    conjugate: bool
    zero_gauge_slope: float
    monotone: bool
    gauge_value: float = 0.0

    def reflects(self, claimed_zero_gauge_slope, tol=1e-6):
        """True when the computed line is the mirror image s -> -s of a claimed line.

        Lines are compared in the zero gauge, where psi_lambda has slope 0.
        """
        s = self.zero_gauge_slope
        return abs(s - claimed_zero_gauge_slope) > tol and abs(s + claimed_zero_gauge_slope) <= tol


def _check_side(side):
    if side not in ("stable", "unstable"):
        raise ValueError(f"side must be 'stable' or 'unstable', got {side!r}")


def _transport(orbit, gauge, t_start, anchors, v0, rel_tol, abs_tol):
    P = orbit.params(gauge)
    res = K.transport(K.K_SIGMA, P, float(t_start), np.asarray(anchors, dtype=float),
                      np.asarray(v0, dtype=float), rel_tol, abs_tol, np.inf, RENORM_DT)
    check_status(res[0], t_start, "covector transport")
    return res[1], res[2]


def _qr_slope(phi, a, b, sig):
    """Slope of the first column of (Q R)^{-1}, with R = [[e^a, sig e^a], [0, e^b]]."""
    sn = math.sin(phi)
    if sn == 0.0:
        return math.inf
    return -math.exp(b - a) * math.cos(phi) / sn - sig


def green_slope(orbit, side, gauge, schedule=GREEN_SCHEDULE, tol=GREEN_TOL,
                rel_tol=GREEN_REL_TOL, abs_tol=GREEN_ABS_TOL):
    """Green-line slope at time 0 from a doubling schedule of horizons t0.

    For each t0 the slope is that of (1, 0) placed at +t0 (stable) or -t0
    (unstable) and carried back to time 0. All horizons share one pass: the
    image of (1, 0) is the first column of the inverse of the propagator
    from 0 to +-t0, which is integrated in QR-factored form so no entry
    over- or underflows.
    """
    _check_side(side)
    schedule = tuple(float(t) for t in schedule)
    if not schedule or any(t <= 0 for t in schedule) or list(schedule) != sorted(schedule):
        raise ValueError("schedule must be an increasing list of positive horizons")
    sign = 1.0 if side == "stable" else -1.0
    orbit.require(sign * max(schedule), "horizon")
    jet = orbit.jets([0.0], gauge)[0]
    p0, vl0 = jet[K.J_P], jet[K.J_VL]
    P = orbit.params(gauge)
    state = np.zeros(4)
    t, h0 = 0.0, -1.0
    slopes, zdots, t0s = [], [], []
    converged = conjugate = False
    for t0 in schedule:
        res = K.solve(K.K_SIGMA_QR, P, t, sign * t0, state, rel_tol, abs_tol, np.inf, np.inf,
                      False, h0)
        check_status(res[0], res[1], "covector transport")
        state, t, h0 = res[2], sign * t0, res[5]
        s = _qr_slope(*state)
        conjugate = conjugate or math.isinf(s)
        t0s.append(t0)
        slopes.append(s)
        zdots.append(p0 - 0.5 * vl0 - s)
        if len(slopes) >= 2 and abs(slopes[-1] - slopes[-2]) < tol:
            converged = True
            break
    diffs = np.diff(zdots)
    slack = 1e-12 * (1.0 + np.max(np.abs(zdots)))
    monotone = bool(np.all(sign * diffs >= -slack)) if np.all(np.isfinite(zdots)) else False
    s = slopes[-1]
    return GreenEstimate(
        anchor=orbit.initial, side=side, gauge=gauge, t0s=tuple(t0s), slopes=tuple(slopes),
        zdots=tuple(zdots), slope=s, converged=converged and not conjugate, conjugate=conjugate,
        zero_gauge_slope=s - p0, monotone=monotone, gauge_value=float(p0))


def green_slope_field(orbit, side, gauge, times, t0=32.0, rel_tol=GREEN_REL_TOL,
                      abs_tol=GREEN_ABS_TOL):
    """Green slopes at several orbit times from one long transport.

    The covector (1, 0) starts t0 beyond the farthest time and is carried
    through all of them. Returns (slopes, accumulated log-norms), both in
    the order of ``times``.
    """
    _check_side(side)
    times = np.asarray(times, dtype=float)
    order = np.argsort(-times if side == "stable" else times, kind="stable")
    anchors = times[order]
    start = anchors[0] + t0 if side == "stable" else anchors[0] - t0
    orbit.require(start, "transport start")
    vecs, logs = _transport(orbit, gauge, start, anchors, [1.0, 0.0], rel_tol, abs_tol)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(vecs[:, 1] != 0.0, vecs[:, 0] / vecs[:, 1], np.inf)
    slopes = np.empty_like(s)
    out_logs = np.empty_like(logs)
    slopes[order] = s
    out_logs[order] = logs
    return slopes, out_logs


def green_slope_function(orbit, side, gauge, t0=32.0):
    """Callable times -> Green slopes along ``orbit``."""
    return lambda ts: green_slope_field(orbit, side, gauge, ts, t0)[0]


# ---------------------------------------------------------------- Riccati checks

def _fd_stencil(times, h):
    times = np.asarray(times, dtype=float)
    return np.concatenate([times - 2 * h, times - h, times + h, times + 2 * h])


def _fd_derivative(vals, n, h):
    a, b, c, d = vals[:n], vals[n:2 * n], vals[2 * n:3 * n], vals[3 * n:]
    return (a - 8.0 * b + 8.0 * c - d) / (12.0 * h)


def _evaluate(slope, times):
    if callable(slope):
        return np.asarray(slope(np.asarray(times, dtype=float)), dtype=float)
    return np.full(np.shape(times), float(slope))


def riccati_residual(orbit, gauge, slope, times, h=FD_STEP):
    """max |r^2 + (V(lambda) - 2p) r + kappa_p - F(r)| over ``times``.

    ``slope`` is a constant or a callable times -> slopes; F(r) is the
    4th-order central difference along the orbit.
    """
    times = np.asarray(times, dtype=float)
    n = times.size
    r = _evaluate(slope, times)
    fr = _fd_derivative(_evaluate(slope, _fd_stencil(times, h)), n, h)
    jets = orbit.jets(times, gauge)
    res = r * r + (jets[:, K.J_VL] - 2.0 * jets[:, K.J_P]) * r + jets[:, K.J_KP] - fr
    return float(np.max(np.abs(res)))


def synthesize_zero_gauge(orbit, unstable_slope, times, h=FD_STEP):
    """max |kappa_q| for q = V(lambda) - r^u, with r^u taken in the gauge V(lambda).

    F(q) is a 4th-order central difference of q along the orbit.
    """
    times = np.asarray(times, dtype=float)
    n = times.size
    stencil = _fd_stencil(times, h)

    def q_at(ts):
        return orbit.jets(ts)[:, K.J_VL] - _evaluate(unstable_slope, ts)

    q = q_at(times)
    fq = _fd_derivative(q_at(stencil), n, h)
    jets = orbit.jets(times)
    kappa = jets[:, K.J_K0] + fq + q * (q - jets[:, K.J_VL])
    return float(np.max(np.abs(kappa)))


# ---------------------------------------------------------------- Lyapunov exponents

def lyapunov_along(orbit, xi0, t_end, renorm=RENORM_DT, rel_tol=LINEAR_REL_TOL,
                   abs_tol=LINEAR_ABS_TOL):
    """(1/T) log(|x(T)| + |y(T)|) / (|x(0)| + |y(0)|) for covector ``xi0`` at time 0."""
    if t_end == 0:
        raise ValueError("T must be non-zero")
    if renorm <= 0:
        raise ValueError("renormalisation interval must be positive")
    orbit.require(t_end)
    n0 = xi0.norm()
    if n0 == 0.0:
        raise ValueError("covector must be non-zero")
    P = orbit.params(xi0.gauge)
    res = K.transport(K.K_SIGMA, P, 0.0, np.array([float(t_end)]), np.array([xi0.x, xi0.y]),
                      rel_tol, abs_tol, np.inf, float(renorm))
    check_status(res[0], t_end, "covector transport")
    return float((res[2][0] - math.log(n0)) / abs(t_end))


def green_line_exponent(orbit, side, gauge, t_end, t0=32.0):
    """Finite-time exponent over [0, T] along the stable or unstable Green line.

    Forward propagation of a computed stable covector is ill-conditioned:
    any error off the line grows at the unstable rate. The stable exponent is
    therefore read from the backward transport of the stable line, using
    |Psi_T xi_s| = 1 / |Psi_{-T}(phi_T v) xi_s(phi_T v)| for unit covectors.
    Both transports run along their dominant direction.
    """
    if t_end <= 0:
        raise ValueError("T must be positive")
    _, logs = green_slope_field(orbit, side, gauge, [0.0, float(t_end)], t0)
    return float((logs[1] - logs[0]) / t_end)


def lyapunov_exponent(surface, model, v0, xi0, T, renorm=RENORM_DT, rel_tol=1e-10, abs_tol=1e-12):
    """Finite-time exponent of covector ``xi0`` (in its own gauge) over [0, T]."""
    if T <= 0:
        raise ValueError("T must be positive")
    orbit = integrate_system(System(surface, model), v0, T, rel_tol, abs_tol)
    return lyapunov_along(orbit, xi0, T, renorm)


# ---------------------------------------------------------------- grid scans

def grid_points(shape):
    """Uniform periodic grid of phase points, x slowest, theta fastest."""
    nx, ny, nt = shape
    xs = TWO_PI * np.arange(nx) / nx
    ys = TWO_PI * np.arange(ny) / ny
    ts = TWO_PI * np.arange(nt) / nt
    return [PhasePoint(float(x), float(y), float(t)) for x in xs for y in ys for t in ts]


@dataclass
class TransversalityResult:
    shape: tuple
    gauge: GaugeSpec
    stable: np.ndarray
    unstable: np.ndarray
    stable_zero: np.ndarray
    unstable_zero: np.ndarray
    converged: np.ndarray
    conjugate: np.ndarray
    monotone: np.ndarray
    min_gap: float
    min_gap_all: float
    continuity: float
    nonconverged: int

    @property
    def gap(self):
        return np.abs(self.stable - self.unstable)


def _green_task(args):
    system, p, gauge, schedule, tol, rel_tol, abs_tol = args
    horizon = max(schedule)
    orbit = integrate_system(system, p, (-horizon, horizon), rel_tol, abs_tol)
    s = green_slope(orbit, "stable", gauge, schedule, tol)
    u = green_slope(orbit, "unstable", gauge, schedule, tol)
    return (s.slope, u.slope, s.zero_gauge_slope, u.zero_gauge_slope, s.converged and u.converged,
            s.conjugate or u.conjugate, s.monotone and u.monotone)


def _neighbour_modulus(field, ok):
    worst = 0.0
    for axis in range(field.ndim):
        other = np.roll(field, -1, axis=axis)
        both = ok & np.roll(ok, -1, axis=axis)
        if np.any(both):
            worst = max(worst, float(np.max(np.abs(field - other)[both])))
    return worst


def transversality_scan(surface, model, shape, gauge, schedule=GREEN_SCHEDULE, tol=GREEN_TOL,
                        rel_tol=1e-9, abs_tol=1e-11, workers=None):
    """Stable and unstable Green slopes on a uniform grid, with gap and continuity."""
    shape = tuple(int(n) for n in shape)
    system = System(surface, model)
    tasks = [(system, p, gauge, tuple(schedule), tol, rel_tol, abs_tol) for p in grid_points(shape)]
    rows = map_ordered(_green_task, tasks, workers)
    cols = [np.array([r[i] for r in rows]).reshape(shape) for i in range(7)]
    rs, ru, rs0, ru0, conv, conj, mono = cols
    conv = conv.astype(bool)
    gap = np.abs(rs - ru)
    min_gap = float(np.min(gap[conv])) if np.any(conv) else math.nan
    cont = max(_neighbour_modulus(rs0, conv), _neighbour_modulus(ru0, conv))
    return TransversalityResult(shape, gauge, rs, ru, rs0, ru0, conv, conj.astype(bool),
                                mono.astype(bool), min_gap, float(np.min(gap)), cont,
                                int(np.size(conv) - np.count_nonzero(conv)))


def _kappa_w_task(args):
    system, p, h, t0, rel_tol, abs_tol, centre = args
    reach = t0 + 2 * h + 1.0
    orbit = integrate_system(system, p, (-reach, reach), rel_tol, abs_tol)
    times = np.array([0.0])
    stencil = _fd_stencil(times, h)
    both = np.concatenate([times, stencil])
    zero = GaugeSpec.zero()
    rs, _ = green_slope_field(orbit, "stable", zero, both, t0)
    ru, _ = green_slope_field(orbit, "unstable", zero, both, t0)
    if centre is not None:
        rs[0], ru[0] = centre
    w = -0.5 * (rs + ru)
    fw = _fd_derivative(w[1:], 1, h)[0]
    jet = orbit.jets([0.0])[0]
    kappa_w = jet[K.J_K0] + fw + w[0] * (w[0] - jet[K.J_VL])
    return kappa_w + 0.25 * (rs[0] - ru[0]) ** 2


def kappa_w_identity(surface, model, shape, stable_zero=None, unstable_zero=None, h=FD_STEP,
                     t0=32.0, rel_tol=1e-10, abs_tol=1e-12, workers=None):
    """max |kappa_w + (r^s - r^u)^2 / 4| with w = -(r^s + r^u)/2 in the zero gauge.

    Slope fields, when given, must be zero-gauge values on the same grid.
    F(w) uses Green slopes recomputed at flowed anchors t = +-h, +-2h.
    """
    shape = tuple(int(n) for n in shape)
    system = System(surface, model)
    pts = grid_points(shape)
    if (stable_zero is None) != (unstable_zero is None):
        raise ValueError("pass both slope fields or neither")
    if stable_zero is not None:
        cs = np.asarray(stable_zero, dtype=float).ravel()
        cu = np.asarray(unstable_zero, dtype=float).ravel()
        if cs.size != len(pts) or cu.size != len(pts):
            raise ValueError("slope fields do not match the grid")
        centres = list(zip(cs, cu))
    else:
        centres = [None] * len(pts)
    tasks = [(system, p, h, t0, rel_tol, abs_tol, c) for p, c in zip(pts, centres)]
    res = np.abs(np.array(map_ordered(_kappa_w_task, tasks, workers))).reshape(shape)
    return float(np.max(res)), res


@dataclass
class DominationFit:
    slope: float
    offset: float
    sample_slopes: np.ndarray
    times: np.ndarray
    log_a: np.ndarray


def _domination_task(args):
    system, p, T, t0, gauge, rel_tol, abs_tol = args
    orbit = integrate_system(system, p, (-t0, T + t0), rel_tol, abs_tol)
    times = np.arange(0, T + 1, dtype=float)
    _, ls = green_slope_field(orbit, "stable", gauge, times, t0)
    _, lu = green_slope_field(orbit, "unstable", gauge, times, t0)
    # |Psi_t xi_s| = 1 / |Psi_{-t} xi_s(phi_t v)| and |Psi_{-t} xi_u(phi_t v)| = 1 / |Psi_t xi_u|,
    # read off from transports that only ever run along the dominant direction
    log_a = -(ls[0] - ls[1:]) - (lu[1:] - lu[0])
    return log_a


def domination_estimate(surface, model, samples, T=20, t0=32.0, gauge=None, rel_tol=1e-10,
                        abs_tol=1e-12, workers=None):
    """Least-squares rate of log a(t), a(t) = |Psi_t xi_s| |Psi_{-t}(phi_t v) xi_u(phi_t v)|."""
    T = int(T)
    if T < 2:
        raise ValueError("T must be at least 2")
    gauge = gauge if gauge is not None else GaugeSpec.zero()
    system = System(surface, model)
    tasks = [(system, p, T, t0, gauge, rel_tol, abs_tol) for p in samples]
    rows = np.array(map_ordered(_domination_task, tasks, workers))
    times = np.arange(1, T + 1, dtype=float)
    per = np.array([np.polyfit(times, row, 1)[0] for row in rows])
    tt = np.tile(times, rows.shape[0])
    slope, offset = np.polyfit(tt, rows.ravel(), 1)
    return DominationFit(float(slope), float(offset), per, times, rows)


def green_covector(estimate):
    """Unit covector (|x| + |y| = 1) spanning the estimated Green line."""
    s = estimate.slope
    if math.isinf(s):
        return SigmaCovector(1.0, 0.0, estimate.gauge, 0.0, estimate.anchor)
    n = abs(s) + 1.0
    return SigmaCovector(s / n, 1.0 / n, estimate.gauge, 0.0, estimate.anchor)


__all__ = [
    "ConjugateReport", "GreenEstimate", "TransversalityResult", "DominationFit", "KappaProfile",
    "first_conjugate_time", "first_conjugate_time_exp", "conjugate_scan", "random_states",
    "green_slope", "green_slope_field", "green_slope_function", "riccati_residual",
    "synthesize_zero_gauge", "lyapunov_along", "green_line_exponent", "lyapunov_exponent",
    "grid_points",
    "transversality_scan", "kappa_w_identity", "domination_estimate", "green_covector",
    "change_basis",
]
