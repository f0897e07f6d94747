"""Intensities, gauges and the curvature gauges kappa_p, big K, kappa tilde."""
from dataclasses import dataclass, field
import numpy as np

from . import _kernels as K
from ._accel import USE_NUMBA
from .geometry import ConformalTorus, FourierField2


class IntensityModel:
    """lambda(x, y, theta) = sum_k a_k(x, y) cos(k theta) + b_k(x, y) sin(k theta)."""

    def __init__(self, a, b=None):
        a = list(a)
        if not a:
            raise ValueError("need at least the k = 0 coefficient")
        if b is None:
            b = [FourierField2.zero() for _ in a]
        b = list(b)
        if len(b) != len(a):
            raise ValueError("a and b must have the same length")
        self.a = tuple(a)
        # sin(0 theta) vanishes, so b_0 carries no information
        self.b = (FourierField2.zero(),) + tuple(b[1:])

    @property
    def theta_degree(self):
        return len(self.a) - 1

    @property
    def spatial_degree(self):
        return max(f.degree for f in self.a + self.b)

    @classmethod
    def zero(cls):
        return cls([FourierField2.zero()])

    @classmethod
    def constant(cls, value):
        return cls([FourierField2.constant(value)])

    @classmethod
    def from_terms(cls, terms, theta_degree=None):
        """Terms are ``(k, "cos"|"sin", j, l, basis_tag, coefficient)``."""
        terms = list(terms)
        kmax = max([int(t[0]) for t in terms], default=0)
        if theta_degree is not None:
            if theta_degree < kmax:
                raise ValueError(f"theta_degree {theta_degree} below highest mode {kmax}")
            kmax = theta_degree
        a_terms = [[] for _ in range(kmax + 1)]
        b_terms = [[] for _ in range(kmax + 1)]
        for k, trig, j, l, tag, value in terms:
            k = int(k)
            if k < 0:
                raise ValueError("theta mode must be non-negative")
            if trig == "cos":
                a_terms[k].append((j, l, tag, value))
            elif trig == "sin":
                b_terms[k].append((j, l, tag, value))
            else:
                raise ValueError(f"theta basis must be 'cos' or 'sin', got {trig!r}")
        a = [FourierField2.from_terms(t) for t in a_terms]
        b = [FourierField2.from_terms(t) for t in b_terms]
        return cls(a, b)

    @classmethod
    def fiber_mode(cls, m, amplitude=1.0, spatial=None, trig="cos"):
        """``spatial(x, y) + amplitude * cos(m theta)`` (or sin)."""
        a = [FourierField2.zero() for _ in range(m + 1)]
        b = [FourierField2.zero() for _ in range(m + 1)]
        target = a if trig == "cos" else b
        target[m] = FourierField2.constant(amplitude)
        if spatial is not None:
            a[0] = a[0] + spatial
        return cls(a, b)

    def terms(self):
        out = []
        for k, f in enumerate(self.a):
            out += [(k, "cos") + t for t in f.terms()]
        for k, f in enumerate(self.b):
            out += [(k, "sin") + t for t in f.terms()]
        return out

    def table(self, degree):
        """Array of shape (2, K+1, 4, D+1, D+1) for the kernels."""
        return np.stack([
            np.stack([f.padded(degree) for f in self.a]),
            np.stack([f.padded(degree) for f in self.b]),
        ])

    def magnetic_component(self):
        return self.a[0]

    def __call__(self, x, y, theta):
        theta = np.asarray(theta, dtype=float)
        out = 0.0
        for k, (fa, fb) in enumerate(zip(self.a, self.b)):
            out = out + fa(x, y) * np.cos(k * theta) + fb(x, y) * np.sin(k * theta)
        return out

    def __eq__(self, other):
        if not isinstance(other, IntensityModel):
            return NotImplemented
        if self.theta_degree != other.theta_degree:
            return False
        return all(p == q for p, q in zip(self.a + self.b, other.a + other.b))

    def __repr__(self):
        return f"IntensityModel(terms={self.terms()})"


def flip_intensity(model):
    """Intensity of the flipped system, -lambda(x, y, theta + pi)."""
    a = [f.scaled(-((-1) ** k)) for k, f in enumerate(model.a)]
    b = [f.scaled(-((-1) ** k)) for k, f in enumerate(model.b)]
    return IntensityModel(a, b)


@dataclass(frozen=True)
class GaugeSpec:
    """Gauge p: zero, c * V(lambda), or an explicit intensity-like series."""

    kind: str = "zero"
    factor: float = 0.0
    custom: IntensityModel = field(default=None, hash=False)

    def __post_init__(self):
        if self.kind not in ("zero", "scaled", "custom"):
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        if self.kind == "custom" and self.custom is None:
            raise ValueError("custom gauge needs a coefficient model")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def scaled(cls, factor):
        return cls("scaled", float(factor))

    @classmethod
    def custom_series(cls, model):
        return cls("custom", 0.0, model)

    @property
    def tag(self):
        if self.kind == "scaled":
            return f"scaled:{self.factor!r}"
        return self.kind

    @property
    def mode(self):
        return {"zero": K.GAUGE_ZERO, "scaled": K.GAUGE_SCALED, "custom": K.GAUGE_CUSTOM}[self.kind]


BIG_K_GAUGE = GaugeSpec.scaled(1.0)
KAPPA_TILDE_GAUGE = GaugeSpec.scaled(0.5)


@dataclass(frozen=True)
class LambdaJet:
    lam: float
    V: float
    VV: float
    H: float
    X: float
    F: float
    FV: float


@dataclass(frozen=True)
class GaugeCurvatures:
    kappa_p: float
    big_k: float
    kappa_tilde: float


class System:
    """Surface, intensity and gauge packed into kernel arrays."""

    def __init__(self, surface, model, gauge=None):
        self.surface = surface
        self.model = model
        self.gauge = gauge if gauge is not None else GaugeSpec.zero()
        gq_model = self.gauge.custom if self.gauge.kind == "custom" else IntensityModel.zero()
        d = max(surface.f.degree, model.spatial_degree, gq_model.spatial_degree)
        self.fc = surface.f.padded(d)
        self.lam = model.table(d)
        self.gq = gq_model.table(d)
        self.gq_model = gq_model

    def with_gauge(self, gauge):
        return System(self.surface, self.model, gauge)

    def params(self, orbit=None, profile=None):
        return K.make_params(self.fc, self.lam, self.gq, self.gauge.mode,
                             self.gauge.factor, orbit=orbit, profile=profile)

    def jet(self, x, y, theta):
        out = np.empty(K.NJET)
        K.point_jet(self.params(), float(x), float(y), float(theta), out)
        return out

    def jets(self, x, y, theta):
        """Jets on arrays of states, shape (..., NJET)."""
        x, y, theta = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float),
                                          np.asarray(theta, float))
        shape = x.shape
        xs, ys, ts = x.ravel(), y.ravel(), theta.ravel()
        if USE_NUMBA:
            res = K.jets_many(self.params(), xs, ys, ts)
        else:
            res = jets_numpy(self, xs, ys, ts)
        return res.reshape(shape + (K.NJET,))


def _series_numpy(model, x, y, theta):
    val = vx = vy = dv = dvx = dvy = vv = 0.0
    for k, (fa, fb) in enumerate(zip(model.a, model.b)):
        a, ax, ay = fa.jet(x, y)[:3]
        b, bx, by = fb.jet(x, y)[:3]
        ck, sk = np.cos(k * theta), np.sin(k * theta)
        val = val + a * ck + b * sk
        vx = vx + ax * ck + bx * sk
        vy = vy + ay * ck + by * sk
        dv = dv + k * (-a * sk + b * ck)
        dvx = dvx + k * (-ax * sk + bx * ck)
        dvy = dvy + k * (-ay * sk + by * ck)
        vv = vv - k * k * (a * ck + b * sk)
    z = np.zeros_like(theta)
    return tuple(np.asarray(v) + z for v in (val, vx, vy, dv, dvx, dvy, vv))


def jets_numpy(system, x, y, theta):
    """Vectorised numpy twin of the compiled point jet."""
    f, fx, fy, fxx, fyy, _ = system.surface.f.jet(x, y)
    f = f + np.zeros_like(theta)
    emf = np.exp(-f)
    kg = -emf * emf * (fxx + fyy)
    c, s = np.cos(theta), np.sin(theta)
    xth = -fx * s + fy * c
    hth = -(fx * c + fy * s)
    lv, lx, ly, vl, vlx, vly, vvl = _series_numpy(system.model, x, y, theta)
    xl = emf * (c * lx + s * ly + xth * vl)
    hl = emf * (-s * lx + c * ly + hth * vl)
    xvl = emf * (c * vlx + s * vly + xth * vvl)
    fl = xl + lv * vl
    fvl = xvl + lv * vvl
    g = system.gauge
    if g.kind == "zero":
        p = np.zeros_like(theta)
        fp = np.zeros_like(theta)
    elif g.kind == "scaled":
        p = g.factor * vl
        fp = g.factor * fvl
    else:
        q, qx, qy, vq = _series_numpy(system.gq_model, x, y, theta)[:4]
        p = q
        fp = emf * (c * qx + s * qy + xth * vq) + lv * vq

    def kap(pp, ff):
        return kg - hl + lv * lv + ff + pp * (pp - vl)

    out = np.empty(theta.shape + (K.NJET,))
    cols = {
        K.J_F: f, K.J_FX: fx, K.J_FY: fy, K.J_KG: kg, K.J_EMF: emf,
        K.J_LAM: lv, K.J_LX: lx, K.J_LY: ly, K.J_VL: vl, K.J_VVL: vvl,
        K.J_XL: xl, K.J_HL: hl, K.J_FL: fl, K.J_XVL: xvl, K.J_FVL: fvl,
        K.J_P: p, K.J_FP: fp, K.J_KP: kap(p, fp), K.J_BIGK: kap(vl, fvl),
        K.J_KT: kap(0.5 * vl, 0.5 * fvl), K.J_K0: kap(0.0, 0.0),
        K.J_GX: emf * c, K.J_GY: emf * s, K.J_GT: emf * xth + lv,
    }
    for j, v in cols.items():
        out[..., j] = v
    return out


def lambda_jet(model, surface, p):
    jet = System(surface, model).jet(p.x, p.y, p.theta)
    return LambdaJet(lam=jet[K.J_LAM], V=jet[K.J_VL], VV=jet[K.J_VVL], H=jet[K.J_HL],
                     X=jet[K.J_XL], F=jet[K.J_FL], FV=jet[K.J_FVL])


def gauge_eval(surface, model, gauge, p):
    """(p, F(p)) at a phase point."""
    jet = System(surface, model, gauge).jet(p.x, p.y, p.theta)
    return jet[K.J_P], jet[K.J_FP]


def kappa_p(surface, model, gauge, p):
    return float(System(surface, model, gauge).jet(p.x, p.y, p.theta)[K.J_KP])


def big_k(surface, model, p):
    return kappa_p(surface, model, BIG_K_GAUGE, p)


def kappa_tilde(surface, model, p):
    return kappa_p(surface, model, KAPPA_TILDE_GAUGE, p)


def gauge_curvatures(surface, model, gauge, p):
    jet = System(surface, model, gauge).jet(p.x, p.y, p.theta)
    return GaugeCurvatures(kappa_p=jet[K.J_KP], big_k=jet[K.J_BIGK], kappa_tilde=jet[K.J_KT])


# named systems used throughout the tests, the CLI and the acceptance suite

def flat_cos_theta():
    """lambda = cos(theta) on the flat torus: big K vanishes identically."""
    return ConformalTorus.flat(), IntensityModel.fiber_mode(1)


def flat_cos_m_theta(m=2, h=None):
    """lambda = h(x, y) + cos(m theta) on the flat torus."""
    return ConformalTorus.flat(), IntensityModel.fiber_mode(m, spatial=h)


def s3_spatial():
    return FourierField2.from_terms([(1, 0, "cc", 0.1)])


def named_system(name):
    if name == "S0":
        return ConformalTorus.flat(), IntensityModel.zero()
    if name == "S1":
        return flat_cos_theta()
    if name == "S2":
        return flat_cos_m_theta(2)
    if name == "S3":
        return flat_cos_m_theta(2, s3_spatial())
    raise KeyError(name)
