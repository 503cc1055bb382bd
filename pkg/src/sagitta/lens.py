"""Lens regions ``L^n_k(h, r) = D(a1, r) & D(a2, r)`` with ``|a1 a2| = 2(r - h)``.

The lens is laid out symmetrically about the base point ``p`` of the model
(see :mod:`sagitta.modelspace`): the axis is the geodesic through ``p`` with
direction ``e_1``, the centers sit at arc length ``-(r-h)`` and ``r-h`` and the
points ``q1, q2`` at ``h`` and ``-h``.  The bisecting hyperplane ``H_0`` is
``{x_1 = 0}`` and the edge ``S_0 = dD(a1, r) & dD(a2, r)`` is an
(n-2)-sphere in it.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import InvalidArgumentError, InvalidPointError
from .modelspace import (
    ModelPoint,
    ambient_distance,
    ball_volume,
    base_coords,
    check_curvature,
    comparison_angle,
    exp_coords,
    log_coords,
    mk,
    mk_family,
    mk_inverse,
    sample_ball_coords,
    space_form_diameter,
    tangent_frame,
    unit_sphere_area,
    validate_point,
)
from .rng import stream

INTERIOR, D1, D2, S0, OUTSIDE = "interior", "D1", "D2", "S0", "outside"


def _axis_direction(n):
    e = np.zeros(n + 1)
    e[1] = 1.0
    return e


@dataclass(frozen=True)
class LensParams:
    n: int
    k: float
    h: float
    r: float
    a1: np.ndarray = field(init=False, repr=False)
    a2: np.ndarray = field(init=False, repr=False)
    p: np.ndarray = field(init=False, repr=False)
    q1: np.ndarray = field(init=False, repr=False)
    q2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        k = check_curvature(self.k)
        n, h, r = int(self.n), float(self.h), float(self.r)
        if n < 2:
            raise InvalidArgumentError("lens dimension must be at least 2")
        half = 0.5 * space_form_diameter(k)
        if not (0 < h <= r) or r > half * (1 + 1e-12):
            raise InvalidArgumentError(f"need 0 < h <= r <= diam/2, got h={h}, r={r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "r", min(r, half))
        o = base_coords(k, n)
        e = _axis_direction(n)
        pts = {
            "p": o,
            "a1": exp_coords(k, o, e, -(r - h)),
            "a2": exp_coords(k, o, e, r - h),
            "q1": exp_coords(k, o, e, h),
            "q2": exp_coords(k, o, e, -h),
        }
        for name, c in pts.items():
            c.setflags(write=False)
            object.__setattr__(self, name, c)

    @property
    def separation(self):
        return 2.0 * (self.r - self.h)

    @property
    def centers(self):
        return ModelPoint(self.a1), ModelPoint(self.a2)

    @property
    def axis_points(self):
        return ModelPoint(self.p), ModelPoint(self.q1), ModelPoint(self.q2)

    def edge_point(self, direction=2):
        """A point of the edge S_0, in the plane of e_1 and e_``direction``."""
        m_r, _, _ = mk_family(self.k, self.r)
        m_c, _, dd_c = mk_family(self.k, self.r - self.h)
        t0 = mk_inverse(self.k, (m_r - m_c) / dd_c)
        e = np.zeros(self.n + 1)
        e[direction] = 1.0
        return exp_coords(self.k, self.p, e, t0)


def _check_dim(L, x):
    validate_point(x, L.k)
    if x.dim != L.n:
        raise InvalidPointError(f"point of dimension {x.dim} in a lens of dimension {L.n}")
    return x.coords


def lens_contains(L, x, tol=1e-12):
    c = _check_dim(L, x)
    slack = tol * max(1.0, L.r)
    return bool(
        ambient_distance(L.k, c, L.a1) <= L.r + slack
        and ambient_distance(L.k, c, L.a2) <= L.r + slack
    )


def boundary_stratum(L, x, tol=1e-9):
    """Which of the constraints ``|x a_i| <= r`` are active within ``tol``."""
    c = _check_dim(L, x)
    d1 = ambient_distance(L.k, c, L.a1)
    d2 = ambient_distance(L.k, c, L.a2)
    if d1 > L.r + tol or d2 > L.r + tol:
        return OUTSIDE
    on1 = abs(d1 - L.r) <= tol
    on2 = abs(d2 - L.r) <= tol
    if on1 and on2:
        return S0
    if on1:
        return D1
    if on2:
        return D2
    return INTERIOR


def cap_cos_angle(L, t):
    """Cosine of the largest polar angle (about a1, from the axis toward a2)
    at which the point at distance t from a1 still lies within r of a2.

    From the law of cosines,
    ``cos phi* = 1 + (m(|t - D|) - m(r)) / (m'(t) m'(D))`` with ``D = 2(r-h)``,
    clamped to [-1, 1].  For ``D = 0`` every direction qualifies and the
    value is -1 (``phi* = pi``).
    """
    t = np.asarray(t, dtype=float)
    D = L.separation
    k = L.k
    if D == 0:
        return np.full(t.shape, -1.0) if t.ndim else -1.0
    m_r = mk(k, L.r)
    _, dm_D, _ = mk_family(k, D)
    m_diff = mk(k, np.abs(t - D))
    dm_t = mk_family(k, t)[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 1.0 + (m_diff - m_r) / (dm_t * dm_D)
    # t = 0: a1 itself is inside iff D <= r
    val = np.where(t == 0, np.where(D <= L.r, -1.0, 1.0), val)
    val = np.clip(val, -1.0, 1.0)
    return float(val) if val.ndim == 0 else val


def sin_power_integral(j, phi):
    """``W_j(phi) = int_0^phi sin^j`` by the reduction recurrence."""
    phi = np.asarray(phi, dtype=float)
    s, c = np.sin(phi), np.cos(phi)
    w_prev2 = phi
    w_prev1 = 1.0 - c
    if j == 0:
        return w_prev2
    if j == 1:
        return w_prev1
    w = None
    for i in range(2, j + 1):
        w = -(s ** (i - 1)) * c / i + (i - 1) / i * w_prev2
        w_prev2, w_prev1 = w_prev1, w
    return w


def lens_volume_quadrature(L, tol=1e-8):
    """Volume of the lens in polar coordinates about a1.

    ``vol = |S^{n-2}| int_0^r m'(t)^{n-1} W_{n-2}(phi*(t)) dt``; the integrand
    is a full sphere below ``t = r - D`` (handled in closed form through
    :func:`ball_volume`), empty below ``D - r`` and smooth in between.
    """
    n, k, r = L.n, L.k, L.r
    D = L.separation
    if D == 0:
        return ball_volume(k, n, r)
    lo = abs(r - D)
    total = ball_volume(k, n, lo) if D < r else 0.0

    def integrand(t):
        phi = np.arccos(cap_cos_angle(L, t))
        return mk_family(k, t)[1] ** (n - 1) * sin_power_integral(n - 2, phi)

    val, _ = integrate.quad(integrand, lo, r, epsabs=1e-14, epsrel=0.01 * tol, limit=200)
    return total + unit_sphere_area(n - 1) * val


def lens_volume_mc(L, N, seed):
    """Monte Carlo lens volume: ball volume times the acceptance fraction.

    Returns ``(estimate, stderr)`` with the binomial standard error.
    """
    if N < 1000:
        raise InvalidArgumentError("lens_volume_mc needs N >= 1000")
    X = sample_ball_coords(L.k, L.n, L.a1, L.r, N, seed)
    inside = ambient_distance(L.k, X, L.a2[None, :]) <= L.r
    return _fraction_estimate(ball_volume(L.k, L.n, L.r), inside)


def _fraction_estimate(volume, accepted):
    N = accepted.size
    frac = np.count_nonzero(accepted) / N
    return float(volume * frac), float(volume * np.sqrt(frac * (1.0 - frac) / N))


def dihedral_angle(L):
    """Interior angle of the lens along its edge S_0 (pi when h = r)."""
    if L.h == L.r:
        return np.pi
    return np.pi - comparison_angle(L.k, L.r, L.r, L.separation)


def c_constant(L):
    """Smallest integer strictly larger than ``2 pi / dihedral_angle``; 2 when h = r."""
    if L.h == L.r:
        return 2
    ratio = 2.0 * np.pi / dihedral_angle(L)
    # absorb rounding so that an exact integer ratio m gives m + 1
    return int(np.floor(ratio + 1e-9)) + 1


def edge_density_mc(L, rho, N, seed):
    """Fraction of a small ball about an edge point that lies in the lens.

    Tends to ``dihedral_angle / 2 pi`` as ``rho -> 0``.  Returns
    ``(fraction, stderr)``.
    """
    q = L.edge_point()
    X = sample_ball_coords(L.k, L.n, q, rho, N, seed)
    inside = (ambient_distance(L.k, X, L.a1[None, :]) <= L.r) & (
        ambient_distance(L.k, X, L.a2[None, :]) <= L.r
    )
    return _fraction_estimate(1.0, inside)


# ---------------------------------------------------------------- nets


def net_directions(k, base_coords_, points):
    """Unit tangent directions at ``base`` toward each net point, ``(m, n+1)``."""
    u, _ = log_coords(k, base_coords_, np.asarray(points, dtype=float))
    return u


def net_gap(k, base_coords_, points, n_dirs=100_000, seed=0):
    """Largest angle from a sampled direction to the nearest net direction."""
    base_coords_ = np.asarray(base_coords_, dtype=float)
    n = base_coords_.size - 1
    U = net_directions(k, base_coords_, points)
    frame = tangent_frame(k, base_coords_)
    # net directions expressed in the orthonormal frame
    Uf = U @ (frame * _form_signs(k, n)[:, None])
    g = stream(seed)
    V = g.standard_normal((n_dirs, n))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    best_cos = (V @ Uf.T).max(axis=1)
    return float(np.arccos(np.clip(best_cos.min(), -1.0, 1.0)))


def _form_signs(k, n):
    sig = np.ones(n + 1)
    if k < 0:
        sig[0] = -1.0
    return sig


@dataclass(frozen=True)
class NetSpec:
    """Points on the sphere ``S(base, R)`` whose directions form a pi/2-net."""

    k: float
    base: np.ndarray
    R: float
    points: np.ndarray
    certify: bool = True
    tol: float = 1e-6
    n_dirs: int = 100_000

    def __post_init__(self):
        k = check_curvature(self.k)
        base = np.array(self.base, dtype=float)
        pts = np.atleast_2d(np.array(self.points, dtype=float))
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "points", pts)
        if pts.shape[0] == 0 or pts.size == 0:
            raise InvalidArgumentError("net must contain at least one point")
        if pts.shape[1] != base.size:
            raise InvalidArgumentError("net points and base differ in dimension")
        if not (0 < self.R <= 0.5 * space_form_diameter(k) * (1 + 1e-12)):
            raise InvalidArgumentError("net radius must lie in (0, diam/2]")
        validate_point(ModelPoint(base), k)
        for c in pts:
            validate_point(ModelPoint(c), k)
        dev = np.abs(ambient_distance(k, pts, base[None, :]) - self.R)
        if dev.max() > 1e-12 * max(1.0, self.R):
            raise InvalidArgumentError("net point off the sphere S(base, R)")
        if self.certify:
            gap = net_gap(k, base, pts, n_dirs=self.n_dirs)
            if gap > 0.5 * np.pi + self.tol:
                raise InvalidArgumentError(f"not a pi/2-net: uncovered direction at angle {gap:.6f}")

    @classmethod
    def from_directions(cls, k, n, R, directions, **kw):
        """Net about the base point from unit vectors of R^n."""
        k = check_curvature(k)
        o = base_coords(k, n)
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        V = dirs @ tangent_frame(k, o).T
        return cls(k, o, R, exp_coords(k, o, V, R), **kw)


def net_intersection_volume_mc(net, r, N, seed):
    """Monte Carlo volume of the intersection of the balls ``D(c, r)``, c in the net.

    Samples uniformly in ``D(base, r)``, which contains the intersection for a
    pi/2-net.  Returns ``(estimate, stderr)``.
    """
    k = net.k
    n = net.base.size - 1
    X = sample_ball_coords(k, n, net.base, r, N, seed)
    idx = np.arange(N)
    for c in net.points:
        # only points still inside every earlier ball need testing
        idx = idx[ambient_distance(k, X[idx], c[None, :]) <= r]
    inside = np.zeros(N, dtype=bool)
    inside[idx] = True
    return _fraction_estimate(ball_volume(k, n, r), inside)
