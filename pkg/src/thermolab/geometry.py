"""Conformally flat tori, their curvature, and the moving frame {X, H, V}."""
from dataclasses import dataclass
import math

import numpy as np

from ._kernels import BASIS_TAGS

TWO_PI = 2.0 * math.pi


class FourierField2:
    """Real trigonometric polynomial on the 2-torus with periods 2pi.

    ``coeffs[b, j, k]`` multiplies basis ``BASIS_TAGS[b]``: for "cs" that is
    cos(j x) sin(k y), and so on.
    """

    def __init__(self, coeffs):
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.ndim != 3 or coeffs.shape[0] != 4 or coeffs.shape[1] != coeffs.shape[2]:
            raise ValueError("coefficient table must have shape (4, D+1, D+1)")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        self.coeffs = coeffs
        self.coeffs.setflags(write=False)

    @classmethod
    def zero(cls, degree=0):
        return cls(np.zeros((4, degree + 1, degree + 1)))

    @classmethod
    def constant(cls, value):
        c = np.zeros((4, 1, 1))
        c[0, 0, 0] = value
        return cls(c)

    @classmethod
    def from_terms(cls, terms):
        """Build from ``(j, k, tag, coefficient)`` tuples; repeated terms add up."""
        terms = list(terms)
        degree = max([max(int(j), int(k)) for j, k, _, _ in terms], default=0)
        c = np.zeros((4, degree + 1, degree + 1))
        for j, k, tag, value in terms:
            j, k = int(j), int(k)
            if j < 0 or k < 0:
                raise ValueError(f"negative frequency in term {(j, k, tag, value)}")
            try:
                b = BASIS_TAGS.index(tag)
            except ValueError:
                raise ValueError(f"unknown basis tag {tag!r}; expected one of {BASIS_TAGS}") from None
            c[b, j, k] += float(value)
        return cls(c)

    @property
    def degree(self):
        return self.coeffs.shape[1] - 1

    def terms(self):
        out = []
        for b, j, k in zip(*np.nonzero(self.coeffs)):
            out.append((int(j), int(k), BASIS_TAGS[b], float(self.coeffs[b, j, k])))
        return out

    def padded(self, degree):
        if degree < self.degree:
            raise ValueError("cannot pad to a smaller degree")
        c = np.zeros((4, degree + 1, degree + 1))
        d1 = self.degree + 1
        c[:, :d1, :d1] = self.coeffs
        return c

    def is_zero(self):
        return not np.any(self.coeffs)

    def __add__(self, other):
        d = max(self.degree, other.degree)
        return FourierField2(self.padded(d) + other.padded(d))

    def __neg__(self):
        return FourierField2(-self.coeffs)

    def scaled(self, factor):
        return FourierField2(factor * self.coeffs)

    def jet(self, x, y):
        """Value and partials (f, f_x, f_y, f_xx, f_yy, f_xy), vectorised."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        j = np.arange(self.degree + 1)
        jx = x[..., None] * j
        ky = y[..., None] * j
        cx, sx, cy, sy = np.cos(jx), np.sin(jx), np.cos(ky), np.sin(ky)
        c0, c1, c2, c3 = self.coeffs

        def contract(a, bx, by):
            return np.einsum("jk,...j,...k->...", a, bx, by)

        v = contract(c0, cx, cy) + contract(c1, cx, sy) + contract(c2, sx, cy) + contract(c3, sx, sy)
        jj = j[:, None] * np.ones_like(j)[None, :]
        kk = jj.T
        vx = (contract(-c0 * jj, sx, cy) + contract(-c1 * jj, sx, sy)
              + contract(c2 * jj, cx, cy) + contract(c3 * jj, cx, sy))
        vy = (contract(-c0 * kk, cx, sy) + contract(c1 * kk, cx, cy)
              + contract(-c2 * kk, sx, sy) + contract(c3 * kk, sx, cy))
        lap_x = -(jj ** 2)
        lap_y = -(kk ** 2)
        vxx = (contract(c0 * lap_x, cx, cy) + contract(c1 * lap_x, cx, sy)
               + contract(c2 * lap_x, sx, cy) + contract(c3 * lap_x, sx, sy))
        vyy = (contract(c0 * lap_y, cx, cy) + contract(c1 * lap_y, cx, sy)
               + contract(c2 * lap_y, sx, cy) + contract(c3 * lap_y, sx, sy))
        jk = jj * kk
        vxy = (contract(c0 * jk, sx, sy) + contract(-c1 * jk, sx, cy)
               + contract(-c2 * jk, cx, sy) + contract(c3 * jk, cx, cy))
        return v, vx, vy, vxx, vyy, vxy

    def __call__(self, x, y):
        return self.jet(x, y)[0]

    def __eq__(self, other):
        if not isinstance(other, FourierField2):
            return NotImplemented
        d = max(self.degree, other.degree)
        return np.array_equal(self.padded(d), other.padded(d))

    def __repr__(self):
        return f"FourierField2(terms={self.terms()})"


@dataclass(frozen=True, eq=False)
class ConformalTorus:
    """Metric e^{2f}(dx^2 + dy^2) on [0, 2pi)^2."""

    f: FourierField2

    @classmethod
    def flat(cls):
        return cls(FourierField2.zero())

    def is_flat(self):
        return self.f.is_zero()


@dataclass(frozen=True)
class PhasePoint:
    """Point of SM: chart position (x, y) and fiber angle theta."""

    x: float
    y: float
    theta: float

    def normalized(self):
        return PhasePoint(wrap_angle(self.x), wrap_angle(self.y), wrap_angle(self.theta))

    def flipped(self):
        return PhasePoint(self.x, self.y, wrap_angle(self.theta + math.pi))

    def as_array(self):
        return np.array([self.x, self.y, self.theta], dtype=float)


@dataclass(frozen=True)
class FrameVectors:
    """Chart components over (d/dx, d/dy, d/dtheta)."""

    X: np.ndarray
    H: np.ndarray
    V: np.ndarray


def wrap_angle(a):
    """Reduce to [0, 2pi); values a hair below 0 would otherwise land on 2pi."""
    r = np.mod(a, TWO_PI)
    r = np.where(r >= TWO_PI, 0.0, r)
    return float(r) if np.ndim(r) == 0 else r


def angle_distance(a, b):
    """Distance between angles on the circle, in [0, pi]."""
    d = np.mod(np.asarray(a) - np.asarray(b) + math.pi, TWO_PI) - math.pi
    return np.abs(d)


def gaussian_curvature(surface, x, y):
    f, _, _, fxx, fyy, _ = surface.f.jet(x, y)
    return -np.exp(-2.0 * f) * (fxx + fyy)


def _frame_arrays(surface, x, y, theta):
    f, fx, fy, _, _, _ = surface.f.jet(x, y)
    e = np.exp(-f)
    c, s = np.cos(theta), np.sin(theta)
    X = np.stack([e * c, e * s, e * (-fx * s + fy * c)], axis=-1)
    H = np.stack([-e * s, e * c, -e * (fx * c + fy * s)], axis=-1)
    V = np.broadcast_to(np.array([0.0, 0.0, 1.0]), X.shape).copy()
    return X, H, V


def frame_at(surface, p):
    X, H, V = _frame_arrays(surface, p.x, p.y, p.theta)
    return FrameVectors(X=np.asarray(X), H=np.asarray(H), V=np.asarray(V))


# central-difference weights on offsets (-2, -1, 1, 2)
_STENCILS = {
    2: ((-1, -0.5), (1, 0.5)),
    4: ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)),
}


def _jacobian_fd(field, q, h, order):
    """d field / d(x, y, theta) at q by central differences: J[i, j] = d_j F^i."""
    J = np.zeros((3, 3))
    for j in range(3):
        for off, w in _STENCILS[order]:
            qq = q.copy()
            qq[j] += off * h
            J[:, j] += w * field(qq)
        J[:, j] /= h
    return J


def commutator_residual(surface, p, h, order=4):
    """Max-norm residuals of [V,X]-H, [V,H]+X, [X,H]-K V.

    Brackets use central differences of the frame fields with step ``h``;
    ``order`` picks the 3-point (2) or 5-point (4) stencil.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if order not in _STENCILS:
        raise ValueError("order must be 2 or 4")
    q = np.array([p.x, p.y, p.theta], dtype=float)

    def fX(r):
        return _frame_arrays(surface, r[0], r[1], r[2])[0]

    def fH(r):
        return _frame_arrays(surface, r[0], r[1], r[2])[1]

    X, H, V = _frame_arrays(surface, q[0], q[1], q[2])
    dX = _jacobian_fd(fX, q, h, order)
    dH = _jacobian_fd(fH, q, h, order)
    dV = np.zeros((3, 3))

    def bracket(A, dA, B, dB):
        return dB @ A - dA @ B

    k = gaussian_curvature(surface, q[0], q[1])
    r1 = bracket(V, dV, X, dX) - H
    r2 = bracket(V, dV, H, dH) + X
    r3 = bracket(X, dX, H, dH) - k * V
    return (float(np.max(np.abs(r1))), float(np.max(np.abs(r2))), float(np.max(np.abs(r3))))
