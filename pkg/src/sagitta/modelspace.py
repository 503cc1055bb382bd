"""Constant-curvature model spaces S^n_k.

Everything here is built on the distance modifying function ``m_k``, the
solution of ``y'' + k y = 1`` with ``y(0) = y'(0) = 0``.  With it the law of
cosines in every space form reads::

    m(c) = m(a) + m(b) - k m(a) m(b) - m'(a) m'(b) cos(alpha)

Points are stored in ambient coordinates of R^{n+1}:

* ``k > 0``: the sphere of radius ``1/sqrt(k)``;
* ``k < 0``: the upper sheet of ``<x, x>_L = -1/|k|`` with the time-like
  coordinate first;
* ``k = 0``: euclidean n-space, padded with a leading zero coordinate.

Under the bilinear form ``B_k`` (euclidean for ``k >= 0``, Minkowski for
``k < 0``) every model satisfies ``B_k(p - q, p - q) = 2 m_k(|pq|)``.  The
base point of every model is ``(1/sqrt|k|, 0, ..., 0)`` (the origin when
``k = 0``), and its tangent space is spanned by ``e_1, ..., e_n``.

Note on the collinear sum rule: three points on one geodesic realise the law
of cosines with ``alpha = pi``, which gives
``m(a + b) = m(a) + m(b) - k m(a) m(b) + m'(a) m'(b)``.  The same expression
with a minus sign in front of ``m'(a) m'(b)`` is the ``alpha = 0`` case and
equals ``m(|a - b|)``; it does not hold for ``m(a + b)`` (take ``k = 1``,
``a = b = pi/2``).
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from .errors import (
    InvalidArgumentError,
    InvalidDirectionError,
    InvalidPointError,
    InvalidTriangleError,
    NumericalDomainError,
)
from .rng import shard_sizes, stream

# |k| t^2 below this switches m_k to its power series (through t^8).
SERIES_THRESHOLD = 1e-8
ANGLE_CLAMP_TOL = 1e-9
POINT_TOL = 1e-12
DIRECTION_TOL = 1e-9


def check_curvature(k):
    k = float(k)
    if not np.isfinite(k):
        raise InvalidArgumentError(f"curvature must be finite, got {k!r}")
    return k


def space_form_diameter(k):
    """``pi/sqrt(k)`` for ``k > 0``, ``inf`` otherwise."""
    k = check_curvature(k)
    return np.pi / np.sqrt(k) if k > 0 else np.inf


def _series(k, t):
    t2 = t * t
    x = k * t2
    m = 0.5 * t2 * (1.0 - x / 12.0 + x * x / 360.0 - x**3 / 20160.0)
    dm = t * (1.0 - x / 6.0 + x * x / 120.0 - x**3 / 5040.0)
    ddm = 1.0 - x / 2.0 + x * x / 24.0 - x**3 / 720.0
    return m, dm, ddm


def mk_family(k, t):
    """Return ``(m_k(t), m_k'(t), m_k''(t))``.

    Works elementwise on arrays.  Closed forms use the half-angle expressions
    ``2 sin^2(x/2)/k`` and ``2 sinh^2(x/2)/|k|`` for ``m``; when
    ``|k| t^2 < SERIES_THRESHOLD`` the truncated power series is used instead
    so that the family is continuous across ``k = 0``.
    """
    k = check_curvature(k)
    t_arr = np.asarray(t, dtype=float)
    if np.isnan(t_arr).any():
        raise InvalidArgumentError("m_k evaluated at NaN")
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)

    m = np.empty_like(t_arr)
    dm = np.empty_like(t_arr)
    ddm = np.empty_like(t_arr)
    small = np.abs(k) * t_arr * t_arr < SERIES_THRESHOLD
    if small.any():
        m[small], dm[small], ddm[small] = _series(k, t_arr[small])
    big = ~small
    if big.any():
        tb = t_arr[big]
        s = np.sqrt(abs(k))
        x = s * tb
        if k > 0:
            m[big] = 2.0 * np.sin(0.5 * x) ** 2 / k
            dm[big] = np.sin(x) / s
            ddm[big] = np.cos(x)
        else:
            m[big] = 2.0 * np.sinh(0.5 * x) ** 2 / -k
            dm[big] = np.sinh(x) / s
            ddm[big] = np.cosh(x)
    if scalar:
        return float(m[0]), float(dm[0]), float(ddm[0])
    return m, dm, ddm


def mk(k, t):
    return mk_family(k, t)[0]


def _dm_array(k, t):
    # m_k' alone, for hot loops over float arrays
    x2 = k * t * t
    if k > 0:
        s = np.sqrt(k)
        out = np.sin(s * t) / s
    elif k < 0:
        s = np.sqrt(-k)
        out = np.sinh(s * t) / s
    else:
        return t.copy()
    small = np.abs(x2) < SERIES_THRESHOLD
    if small.any():
        out[small] = _series(k, t[small])[1]
    return out


def mk_prime(k, t):
    return mk_family(k, t)[1]


def mk_second(k, t):
    return mk_family(k, t)[2]


def mk_inverse(k, y, tol=ANGLE_CLAMP_TOL):
    """Invert ``m_k`` on its monotone branch ``[0, diam S^n_k]``."""
    k = check_curvature(k)
    y_arr = np.asarray(y, dtype=float)
    scalar = y_arr.ndim == 0
    y_arr = np.atleast_1d(y_arr).copy()
    top = 2.0 / k if k > 0 else np.inf
    scale = np.maximum(1.0, np.abs(y_arr))
    if (y_arr < -tol * scale).any() or (y_arr > top + tol * max(1.0, top)).any():
        raise NumericalDomainError("m_k value outside the range of m_k")
    y_arr = np.clip(y_arr, 0.0, top)
    if k > 0:
        s = np.sqrt(k)
        out = 2.0 / s * np.arcsin(np.minimum(1.0, np.sqrt(0.5 * k * y_arr)))
    elif k < 0:
        s = np.sqrt(-k)
        out = 2.0 / s * np.arcsinh(np.sqrt(-0.5 * k * y_arr))
    else:
        out = np.sqrt(2.0 * y_arr)
    return float(out[0]) if scalar else out


class Hinge(NamedTuple):
    side_a: float
    side_b: float
    angle: float


def _check_hinge(k, hinge):
    a, b, alpha = (float(v) for v in hinge)
    if a < 0 or b < 0 or not (0.0 <= alpha <= np.pi):
        raise InvalidArgumentError(f"invalid hinge {hinge!r}")
    diam = space_form_diameter(k)
    if a > diam * (1 + 1e-12) or b > diam * (1 + 1e-12):
        raise InvalidArgumentError("hinge side longer than the diameter of S^n_k")
    return a, b, alpha


def side_from_hinge(k, hinge):
    """Third side of the triangle with two sides and included angle in S^n_k.

    Uses ``m(c) = m(|a - b|) + 2 m'(a) m'(b) sin^2(alpha/2)``, which is the law
    of cosines rewritten so that nothing cancels when ``c`` is small.
    """
    k = check_curvature(k)
    a, b, alpha = _check_hinge(k, hinge)
    dma = mk_prime(k, a)
    dmb = mk_prime(k, b)
    m_c = mk(k, abs(a - b)) + 2.0 * dma * dmb * np.sin(0.5 * alpha) ** 2
    return mk_inverse(k, m_c)


def _half_angle_sq(k, a, b, c):
    dma = mk_prime(k, a)
    dmb = mk_prime(k, b)
    num = mk(k, c) - mk(k, np.abs(np.asarray(a) - np.asarray(b)))
    den = 2.0 * dma * dmb
    return num, den


def comparison_angle(k, a, b, c):
    """Angle opposite ``c`` in the comparison triangle with sides a, b, c."""
    k = check_curvature(k)
    a, b, c = float(a), float(b), float(c)
    if a <= 0 or b <= 0 or c < 0:
        raise InvalidTriangleError("comparison angle needs a, b > 0 and c >= 0")
    diam = space_form_diameter(k)
    if max(a, b, c) > diam * (1 + 1e-12):
        raise InvalidTriangleError("side longer than the diameter of S^n_k")
    num, den = _half_angle_sq(k, a, b, c)
    if den <= 0:
        raise InvalidTriangleError("degenerate hinge: angle is undetermined")
    s = num / den
    # cos(alpha) = 1 - 2 s; clamp only rounding-sized excursions
    cos_alpha = 1.0 - 2.0 * s
    if cos_alpha > 1 + ANGLE_CLAMP_TOL or cos_alpha < -1 - ANGLE_CLAMP_TOL:
        raise InvalidTriangleError(
            f"({a}, {b}, {c}) violates the triangle inequality in S^n_{k}"
        )
    s = min(max(s, 0.0), 1.0)
    return 2.0 * np.arcsin(np.sqrt(s))


def comparison_angles(k, a, b, c):
    """Vectorised comparison angles, clamped into ``[0, pi]``.

    Intended for finite metric spaces where triples may fail to have a
    comparison triangle; those are clamped instead of raising.  A hinge with
    ``m'(a) m'(b) = 0`` has no determined angle and is reported as ``pi/2``.
    """
    num, den = _half_angle_sq(k, a, b, c)
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.5)
    s = np.clip(s, 0.0, 1.0)
    return 2.0 * np.arcsin(np.sqrt(s))


# ---------------------------------------------------------------- points


def _sign_vector(k, dim):
    sig = np.ones(dim + 1)
    if k < 0:
        sig[0] = -1.0
    return sig


def bilinear(k, x, y):
    """The ambient form ``B_k(x, y)`` along the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    prod = x * y
    if k < 0:
        return prod[..., 1:].sum(axis=-1) - prod[..., 0]
    return prod.sum(axis=-1)


@dataclass(frozen=True, eq=False)
class ModelPoint:
    """A point of S^n_k in ambient coordinates (see module docstring)."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim != 1 or c.size < 3:
            raise InvalidPointError("ModelPoint needs n+1 >= 3 coordinates")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def dim(self):
        return self.coords.size - 1

    @classmethod
    def euclidean(cls, xs):
        """Point of euclidean space (k = 0) from its n coordinates."""
        return cls(np.concatenate([[0.0], np.asarray(xs, dtype=float)]))

    def __eq__(self, other):
        return isinstance(other, ModelPoint) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())

    def __repr__(self):
        return f"ModelPoint({np.array2string(self.coords, precision=6)})"


def point_residual(k, coords):
    """Relative violation of the model constraint."""
    x = np.asarray(coords, dtype=float)
    scale = max(1.0, float(np.sum(x * x)))
    if k == 0:
        return abs(x[0]) / np.sqrt(scale)
    return abs(float(bilinear(k, x, x)) - 1.0 / k) / max(scale, 1.0 / abs(k))


def validate_point(p, k):
    k = check_curvature(k)
    if point_residual(k, p.coords) > POINT_TOL:
        raise InvalidPointError(f"{p!r} does not lie on S^{p.dim}_{k}")
    if k < 0 and p.coords[0] <= 0:
        raise InvalidPointError("hyperboloid point must have positive time coordinate")
    return p


def base_coords(k, n):
    x = np.zeros(n + 1)
    if k != 0:
        x[0] = 1.0 / np.sqrt(abs(k))
    return x


def base_point(k, n):
    return ModelPoint(base_coords(k, n))


def ambient_distance(k, x, y):
    """Elementwise geodesic distance between ambient coordinate arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = x - y
    if k > 0:
        rad = 1.0 / np.sqrt(k)
        plus = x + y
        return 2.0 * rad * np.arctan2(
            np.sqrt(np.sum(diff * diff, axis=-1)), np.sqrt(np.sum(plus * plus, axis=-1))
        )
    if k == 0:
        return np.sqrt(np.sum(diff * diff, axis=-1))
    rad = 1.0 / np.sqrt(-k)
    chord = np.sqrt(np.maximum(bilinear(k, diff, diff), 0.0))
    return 2.0 * rad * np.arcsinh(chord / (2.0 * rad))


def pairwise_distances(k, X, Y=None, chunk=256):
    """Distance matrix between rows of ``X`` and rows of ``Y``."""
    X = np.asarray(X, dtype=float)
    Y = X if Y is None else np.asarray(Y, dtype=float)
    out = np.empty((X.shape[0], Y.shape[0]))
    for start in range(0, X.shape[0], chunk):
        block = X[start : start + chunk, None, :]
        out[start : start + chunk] = ambient_distance(k, block, Y[None, :, :])
    return out


def distance(p, q, k):
    """Geodesic distance between two model points."""
    validate_point(p, k)
    validate_point(q, k)
    if p.dim != q.dim:
        raise InvalidArgumentError("points of different dimension")
    if np.array_equal(p.coords, q.coords):
        return 0.0
    return float(ambient_distance(k, p.coords, q.coords))


def check_direction(k, p_coords, v, tol=DIRECTION_TOL):
    v = np.asarray(v, dtype=float)
    p_coords = np.asarray(p_coords, dtype=float)
    if v.shape != p_coords.shape:
        raise InvalidDirectionError("direction has the wrong length")
    if k == 0:
        tangent = abs(v[0])
    else:
        tangent = abs(float(bilinear(k, p_coords, v))) * np.sqrt(abs(k))
    if tangent > tol:
        raise InvalidDirectionError("direction is not tangent at the point")
    if abs(float(bilinear(k, v, v)) - 1.0) > tol:
        raise InvalidDirectionError("direction is not a unit vector")
    return v


def exp_coords(k, p_coords, v, t):
    """``m''(t) p + m'(t) v``: the unit-speed geodesic from p along v.

    Broadcasts over leading axes; ``t`` may be an array matching them.
    """
    _, dm, ddm = mk_family(k, np.asarray(t, dtype=float))
    dm = np.asarray(dm)[..., None]
    ddm = np.asarray(ddm)[..., None]
    p_coords = np.asarray(p_coords, dtype=float)
    if k == 0:
        return p_coords + dm * v
    return ddm * p_coords + dm * v


def geodesic_eval(p, direction, t, k):
    """Point at arc length ``t`` along the geodesic from ``p`` with unit
    tangent ``direction``."""
    k = check_curvature(k)
    validate_point(p, k)
    v = check_direction(k, p.coords, direction)
    return ModelPoint(exp_coords(k, p.coords, v, float(t)))


def log_coords(k, p_coords, x):
    """Unit initial direction(s) and distance(s) from ``p`` to rows of ``x``.

    Directions of coincident (or, for ``k > 0``, antipodal) points are
    undefined and returned as zero vectors.
    """
    x = np.asarray(x, dtype=float)
    p_coords = np.asarray(p_coords, dtype=float)
    if k == 0:
        w = x - p_coords
    else:
        coef = bilinear(k, x, p_coords) * k
        w = x - np.asarray(coef)[..., None] * p_coords
    norm = np.sqrt(np.maximum(bilinear(k, w, w), 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(norm[..., None] > 0, w / np.where(norm > 0, norm, 1.0)[..., None], 0.0)
    return u, ambient_distance(k, p_coords, x)


def isometry_to(k, target_coords):
    """Ambient map sending the base point to ``target``.

    A B_k-reflection for ``k != 0`` (an element of O(n+1) or O^+(n, 1)),
    a translation for ``k = 0``.  Returned as a function on coordinate arrays.
    """
    target = np.asarray(target_coords, dtype=float)
    n = target.size - 1
    base = base_coords(k, n)
    if k == 0:
        return lambda x: np.asarray(x, dtype=float) + target
    u = base - target
    uu = float(bilinear(k, u, u))
    if uu <= 1e-300:
        return lambda x: np.asarray(x, dtype=float)
    sig = _sign_vector(k, n)

    def apply(x):
        x = np.asarray(x, dtype=float)
        coef = (x * u * sig).sum(axis=-1) / uu
        return x - 2.0 * np.asarray(coef)[..., None] * u

    return apply


def tangent_frame(k, p_coords):
    """``(n+1, n)`` matrix whose columns are a B_k-orthonormal tangent basis."""
    p_coords = np.asarray(p_coords, dtype=float)
    n = p_coords.size - 1
    basis = np.zeros((n, n + 1))
    basis[:, 1:] = np.eye(n)
    if k == 0:
        return basis.T
    return isometry_to(k, p_coords)(basis).T


# ---------------------------------------------------------------- volumes


def unit_sphere_area(n):
    """Volume of the unit (n-1)-sphere, ``2 pi^{n/2} / Gamma(n/2)``."""
    return 2.0 * np.pi ** (n / 2.0) / special.gamma(n / 2.0)


def sphere_volume(k, n):
    """Volume of the whole space form S^n_k for ``k > 0``."""
    if k <= 0:
        raise InvalidArgumentError("only spheres (k > 0) have finite volume")
    return unit_sphere_area(n + 1) / k ** (n / 2.0)


def _check_radius(k, n, r):
    if n < 2:
        raise InvalidArgumentError("dimension must be at least 2")
    diam = space_form_diameter(k)
    if not (0 < r <= diam * (1 + 1e-12)) or not np.isfinite(r):
        raise InvalidArgumentError(f"radius {r} outside (0, diam S^n_k]")
    return min(float(r), diam)


def ball_volume(k, n, r, epsabs=1e-12, epsrel=1e-10):
    """Volume of a metric ball of radius ``r`` in S^n_k (adaptive quadrature)."""
    k = check_curvature(k)
    r = _check_radius(k, n, r)
    val, _ = integrate.quad(
        lambda t: mk_prime(k, t) ** (n - 1), 0.0, r, epsabs=epsabs, epsrel=epsrel, limit=200
    )
    return unit_sphere_area(n) * val


_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


class RadialCDF:
    """Distribution of the distance to the center of a uniform ball point.

    The density is proportional to ``m_k'(t)^{n-1}`` on ``[0, r]``.  The CDF is
    tabulated with per-cell Gauss-Legendre sums; inversion interpolates in
    ``F^{1/n}`` (which is nearly linear near the center) and is polished by two
    safeguarded Newton steps.
    """

    def __init__(self, k, n, r, cells=2048):
        self.k, self.n, self.r = k, n, r
        self.grid = np.linspace(0.0, r, cells + 1)
        lo, hi = self.grid[:-1], self.grid[1:]
        cell_mass = self._integral(lo, hi)
        cum = np.concatenate([[0.0], np.cumsum(cell_mass)])
        self.total = cum[-1]
        self.cdf = cum / self.total
        self.root = self.cdf ** (1.0 / n)

    def _density(self, t):
        return _dm_array(self.k, np.asarray(t, dtype=float)) ** (self.n - 1)

    def _integral(self, a, b):
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        nodes = mid[..., None] + half[..., None] * _GL_X
        return half * (self._density(nodes) * _GL_W).sum(axis=-1)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        t = np.interp(u ** (1.0 / self.n), self.root, self.grid)
        idx = np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, len(self.grid) - 2)
        lo, hi = self.grid[idx], self.grid[idx + 1]
        for _ in range(2):
            F = self.cdf[idx] + self._integral(lo, t) / self.total
            f = self._density(t) / self.total
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(f > 0, (F - u) / np.where(f > 0, f, 1.0), 0.0)
            t = np.clip(t - step, lo, hi)
        return t


def sample_ball_coords(k, n, center_coords, r, N, seed):
    """``(N, n+1)`` array of points uniform in the ball ``D(center, r)``."""
    k = check_curvature(k)
    r = _check_radius(k, n, r)
    if N < 1:
        raise InvalidArgumentError("need at least one sample")
    cdf = RadialCDF(k, n, r)
    frame = tangent_frame(k, center_coords)
    out = []
    for shard, size in enumerate(shard_sizes(N)):
        g = stream(seed, shard)
        t = cdf.ppf(g.random(size))
        d = g.standard_normal((size, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        out.append(exp_coords(k, center_coords, d @ frame.T, t))
    return np.concatenate(out)


def sample_uniform_ball(k, n, center, r, N, seed):
    """``N`` i.i.d. uniform points of ``D^n_k(center, r)`` as ModelPoints."""
    validate_point(center, k)
    if center.dim != n:
        raise InvalidArgumentError("center dimension does not match n")
    coords = sample_ball_coords(k, n, center.coords, r, N, seed)
    return [ModelPoint(c) for c in coords]
