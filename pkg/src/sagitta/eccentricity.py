"""Eccentricity, critical radii and sagittae of finite metric spaces.

For points p != q of a metric space the k-eccentricity of q relative to p is

    lambda_p(q) = sup_{x != q} (m(|px|) - m(|pq|)) / m(|qx|)

with ``m = m_k``.  In a space with curvature >= k it is finite exactly at the
critical points of ``dist(p, .)``, and then bounded by ``m''(|pq|)``.  On a
finite sample the supremum is always finite, so criticality is decided by that
bound up to a tolerance ``tau`` (default: twice the sample mesh).

The critical radius ``cri_p(q) = max(|pq|, r_lambda)`` uses the unique root of
``m'(r - h) / m'(r) = lambda`` (``h = |pq|``), the radius of the model disk
whose boundary sphere the ratio above is constant on.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InsufficientDataError,
    InvalidArgumentError,
    NumericalDomainError,
)
from .modelspace import (
    bilinear,
    check_curvature,
    comparison_angles,
    mk_second,
    space_form_diameter,
)

# nearest neighbours used for the cheap lower bound on lambda
PRUNE_NEIGHBORS = 16
_CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class EccentricityRecord:
    p: int
    q: int
    lam: float
    argmax: int
    r_lambda: float
    cri: float
    critical: bool
    tolerance: float


def default_tau(X):
    return 2.0 * X.mesh


def _check_pair(X, p, q):
    N = X.n_points
    if N < 3:
        raise InsufficientDataError("eccentricity needs at least three points")
    if not (0 <= p < N and 0 <= q < N):
        raise InvalidArgumentError(f"point index out of range: {p}, {q}")
    if p == q:
        raise InvalidArgumentError("eccentricity needs p != q")


def _eccentricities(X, k, p, qs):
    """lambda_p(q) and its lowest-index argmax for every q in ``qs``."""
    M = X.m_matrix(k)
    qs = np.asarray(qs, dtype=int)
    N = X.n_points
    lam = np.empty(qs.size)
    arg = np.empty(qs.size, dtype=int)
    step = max(1, _CHUNK_ENTRIES // N)
    for s in range(0, qs.size, step):
        qq = qs[s : s + step]
        rows = np.arange(qq.size)
        denom = M[qq].copy()
        denom[rows, qq] = 1.0
        ratio = (M[p][None, :] - M[p, qq][:, None]) / denom
        ratio[rows, qq] = -np.inf
        a = np.argmax(ratio, axis=1)
        arg[s : s + step] = a
        lam[s : s + step] = ratio[rows, a]
    return lam, arg


def eccentricity(X, k, p, q):
    """k-eccentricity of ``q`` relative to ``p`` by direct maximisation.

    Returns ``(lambda, argmax)``; ties go to the lowest index.
    """
    k = check_curvature(k)
    _check_pair(X, p, q)
    lam, arg = _eccentricities(X, k, p, [q])
    return float(lam[0]), int(arg[0])


def lambda_threshold(k, h):
    """Supremum of the ratio ``m'(r - h) / m'(r)`` over admissible r."""
    k = check_curvature(k)
    if not (0 < h < space_form_diameter(k)):
        raise InvalidArgumentError(f"h = {h} outside (0, diam S^n_k)")
    if k > 0:
        return np.inf
    return float(np.exp(-np.sqrt(-k) * h))


def rlambda_ratio(k, h, r):
    """``m'(r - h) / m'(r)``, evaluated without overflow; broadcasts."""
    h = np.asarray(h, dtype=float)
    r = np.asarray(r, dtype=float)
    if k == 0:
        return (r - h) / r
    s = np.sqrt(abs(k))
    a = s * (r - h)
    b = s * r
    if k > 0:
        return np.sin(a) / np.sin(b)
    # sinh(a)/sinh(b) = sign(a) e^{|a|-b} (1 - e^{-2|a|}) / (1 - e^{-2b})
    aa = np.abs(a)
    return np.sign(a) * np.exp(aa - b) * np.expm1(-2.0 * aa) / np.expm1(-2.0 * b)


def _ratio_scalar(k, h, r):
    # plain-float version of rlambda_ratio for the bisection loop
    s = math.sqrt(abs(k))
    a, b = s * (r - h), s * r
    if k > 0:
        return math.sin(a) / math.sin(b)
    aa = abs(a)
    return math.copysign(math.exp(aa - b) * math.expm1(-2.0 * aa) / math.expm1(-2.0 * b), a)


def solve_r_lambda(k, h, lam, max_iter=200):
    """Unique r in ``(0, diam S^n_k)`` with ``m'(r - h) / m'(r) = lam``.

    Bisection on the strictly increasing ratio, run down to floating point
    resolution.  Returns ``inf`` when ``lam`` reaches the threshold
    ``lambda_threshold(k, h)``; ``k = 0`` uses the closed form ``h/(1 - lam)``.
    """
    k = check_curvature(k)
    lam = float(lam)
    if np.isnan(lam):
        raise InvalidArgumentError("lambda is NaN")
    big = lambda_threshold(k, h)
    if lam < -1.0:
        raise NumericalDomainError(f"lambda = {lam} < -1 has no critical radius")
    if lam >= big:
        return np.inf
    if lam == -1.0:
        return 0.5 * h
    if lam == 0.0:
        return float(h)
    if k == 0:
        return h / (1.0 - lam)
    if k > 0:
        lo, hi = 0.0, space_form_diameter(k)
    else:
        lo, hi = 0.0, 2.0 * h
        while _ratio_scalar(k, h, hi) <= lam:
            lo, hi = hi, 2.0 * hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _ratio_scalar(k, h, mid) < lam:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_radius(X, k, p, q):
    """``max(|pq|, r_lambda)`` for ``lambda = lambda_p(q)``."""
    lam, _ = eccentricity(X, k, p, q)
    return _cri_from_lambda(k, X.dist[p, q], lam)


def _cri_from_lambda(k, h, lam):
    if lam <= 0:
        # r_lambda <= h whenever lambda <= 0
        return float(h)
    if h >= space_form_diameter(k):
        return np.inf
    return max(float(h), solve_r_lambda(k, h, lam))


def eccentricity_record(X, k, p, q, tau=None):
    k = check_curvature(k)
    tau = default_tau(X) if tau is None else float(tau)
    lam, arg = eccentricity(X, k, p, q)
    h = float(X.dist[p, q])
    if h < space_form_diameter(k):
        r_lam = solve_r_lambda(k, h, lam)
    else:
        # antipodal pair: the ratio m'(r - h)/m'(r) is identically -1
        r_lam = 0.5 * h if lam <= -1.0 else np.inf
    return EccentricityRecord(
        p=int(p),
        q=int(q),
        lam=lam,
        argmax=arg,
        r_lambda=r_lam,
        cri=_cri_from_lambda(k, h, lam),
        critical=bool(lam <= mk_second(k, h) + tau),
        tolerance=tau,
    )


def is_critical(X, k, p, q, tau=None):
    """Discrete criticality: ``lambda_p(q) <= m''(|pq|) + tau``."""
    tau = default_tau(X) if tau is None else float(tau)
    lam, _ = eccentricity(X, k, p, q)
    return bool(lam <= mk_second(k, X.dist[p, q]) + tau)


def critical_threshold(k, h, R):
    """Largest lambda with critical radius ``<= R`` at distance ``h``.

    ``max(h, r_lambda) <= R`` iff ``h <= R`` and ``lambda <= m'(R-h)/m'(R)``
    (the ratio is increasing in r); ``-inf`` when ``h > R``.
    """
    h = np.asarray(h, dtype=float)
    diam = space_form_diameter(k)
    if R >= diam:
        out = np.full(h.shape, np.inf)
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.asarray(rlambda_ratio(k, h, R), dtype=float).copy()
    out[h > R] = -np.inf
    return out


def _pair_thresholds(k, h, R, tau):
    return np.minimum(mk_second(k, h) + tau, critical_threshold(k, h, R))


def critical_candidates(X, k, p, h, r, tau=None, h_tol=None):
    """Indices q with q critical from p, ``|pq| <= h + h_tol``, cri <= r + tau.

    ``h_tol`` defaults to ``tau``.
    """
    k = check_curvature(k)
    if not (0 < h <= r):
        raise InvalidArgumentError("need 0 < h <= r")
    tau = default_tau(X) if tau is None else float(tau)
    h_tol = tau if h_tol is None else float(h_tol)
    d = X.dist[p]
    qs = np.flatnonzero((d <= h + h_tol) & (np.arange(X.n_points) != p))
    if qs.size == 0:
        return []
    thr = _pair_thresholds(k, d[qs], r + tau, tau)
    lam, _ = _eccentricities(X, k, p, qs)
    return [int(q) for q in qs[lam <= thr]]


def _coverage_angles(X, k, p, A):
    d = X.dist
    A = np.asarray(A, dtype=int)
    return comparison_angles(k, d[p, A][:, None], d[p][None, :], d[np.ix_(A, np.arange(X.n_points))])


def is_critical_to_set(X, k, p, A, tau=None):
    """True iff every x != p has a in A with comparison angle at p ``<= pi/2 + tau``."""
    A = sorted(set(int(a) for a in A))
    if not A:
        raise InvalidArgumentError("set A must be nonempty")
    if p in A:
        raise InvalidArgumentError("p must not belong to A")
    tau = default_tau(X) if tau is None else float(tau)
    covered = (_coverage_angles(X, k, p, A) <= 0.5 * np.pi + tau).any(axis=0)
    covered[p] = True
    return bool(covered.all())


def eccentricity_lower_bounds(X, k, K=PRUNE_NEIGHBORS):
    """``LB[p, q] <= lambda_p(q)``, the ratio maximised over K neighbours of q."""
    M = X.m_matrix(k)
    nn = X.nearest_neighbors(K)
    N = X.n_points
    LB = np.full((N, N), -np.inf)
    cols = np.arange(N)
    for j in range(nn.shape[1]):
        x = nn[:, j]
        # ratio at x = nn[q, j] for every p (rows) and q (columns)
        cand = (M[:, x] - M) / M[cols, x][None, :]
        np.maximum(LB, cand, out=LB)
    return LB


def _sagitta(X, k, r, tau, prune):
    k = check_curvature(k)
    tau = default_tau(X) if tau is None else float(tau)
    R = r + tau
    d = X.dist
    iu, ju = np.triu_indices(X.n_points, 1)
    sel = d[iu, ju] <= R
    iu, ju = iu[sel], ju[sel]
    h = d[iu, ju]
    thr = _pair_thresholds(k, h, R, tau)
    keep = thr > -np.inf
    if prune:
        LB = eccentricity_lower_bounds(X, k)
        keep &= (LB[iu, ju] <= thr) & (LB[ju, iu] <= thr)
    iu, ju, h, thr = iu[keep], ju[keep], h[keep], thr[keep]
    order = np.lexsort((ju, iu, h))
    for e in order:
        p, q = iu[e], ju[e]
        if _eccentricities(X, k, p, [q])[0][0] > thr[e]:
            continue
        if _eccentricities(X, k, q, [p])[0][0] <= thr[e]:
            return float(h[e]), int(p), int(q)
    return np.inf, None, None


def sagitta(X, k, r, tau=None, prune=True):
    """Smallest ``|pq|`` over mutually critical pairs with ``cri_p(q) <= r + tau``.

    ``inf`` when no pair qualifies.  ``prune=False`` evaluates every pair
    directly; the default discards pairs whose eccentricity already exceeds
    the threshold at one of the nearest neighbours of q.
    """
    return _sagitta(X, k, r, tau, prune)[0]


def sagitta_witness(X, k, r, tau=None, prune=True):
    """``(sagitta, p, q)``; the indices are ``None`` for an empty infimum."""
    return _sagitta(X, k, r, tau, prune)


def _modified_sagitta(X, k, r, tau, prune):
    k = check_curvature(k)
    tau = default_tau(X) if tau is None else float(tau)
    R = r + tau
    d = X.dist
    N = X.n_points
    LB = eccentricity_lower_bounds(X, k) if prune else None
    best, witness = np.inf, None
    cover_tol = 0.5 * np.pi + tau
    for p in range(N):
        dp = d[p]
        reach = min(R, best)
        qs = np.flatnonzero(dp <= reach)
        qs = qs[qs != p]
        if qs.size == 0:
            continue
        thr = _pair_thresholds(k, dp[qs], R, tau)
        if prune:
            sel = LB[p, qs] <= thr
            qs, thr = qs[sel], thr[sel]
            if qs.size == 0:
                continue
        lam, _ = _eccentricities(X, k, p, qs)
        crit = qs[lam <= thr]
        if crit.size == 0:
            continue
        crit = crit[np.lexsort((crit, dp[crit]))]
        hit = _ordered_coverage(_coverage_angles(X, k, p, crit) <= cover_tol, p)
        if hit is None:
            continue
        h_p = float(dp[crit[hit]])
        if h_p < best:
            best, witness = h_p, p
    return best, witness


def _ordered_coverage(covers, p):
    """Smallest row index by which every column (except p) is covered."""
    covers[:, p] = True
    any_cov = covers.any(axis=0)
    if not any_cov.all():
        return None
    first = np.argmax(covers, axis=0)
    return int(first.max())


def modified_sagitta(X, k, r, tau=None, prune=True):
    """Smallest h such that some p is critical to its candidate set A_{h,r}(p).

    ``h`` runs over the pairwise distances of X.  Candidates at distance at
    most ``h`` are taken without a tolerance on h (a tolerance there would
    shift the answer down by ``tau``); criticality and critical radii use
    ``tau`` as in :func:`critical_candidates`.
    """
    return _modified_sagitta(X, k, r, tau, prune)[0]


def modified_sagitta_witness(X, k, r, tau=None, prune=True):
    return _modified_sagitta(X, k, r, tau, prune)


def thales_ratio(k, p, q, x):
    """``(m(|px|) - m(|pq|)) / m(|qx|)`` for model points.

    Evaluated as ``B(q - x, 2p - x - q) / B(q - x, q - x)`` with the ambient
    form, which is the same quotient written without cancelling differences
    of m-values.
    """
    k = check_curvature(k)
    return float(thales_ratios(k, p.coords, q.coords, x.coords[None, :])[0])


def thales_ratios(k, p_coords, q_coords, X):
    """Vectorised :func:`thales_ratio` over rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    u = q_coords[None, :] - X
    den = bilinear(k, u, u)
    if np.any(den <= 0):
        raise InvalidArgumentError("thales ratio is undefined at x = q")
    return bilinear(k, u, 2.0 * p_coords[None, :] - X - q_coords[None, :]) / den
