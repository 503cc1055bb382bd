"""Finite metric spaces given by a distance matrix."""

from functools import cached_property

import numpy as np

from .errors import InsufficientDataError, InvalidArgumentError
from .modelspace import check_curvature, mk

SYMMETRY_TOL = 1e-12
TRIANGLE_TOL = 1e-9


class FiniteMetricSpace:
    """N points with a symmetric distance matrix.

    Parameters
    ----------
    dist : (N, N) array_like
        Pairwise distances.  Must be symmetric with zero diagonal and positive
        off-diagonal entries.
    labels : array_like, optional
        Per-point metadata, typically ambient coordinates ``(N, n+1)``.
    claimed_curvature, claimed_radius : float, optional
        Lower curvature bound and radius the space is known (or assumed) to
        have.  Only recorded, never verified.
    validate : bool
        Check the metric axioms on construction.
    full_check : bool
        Check the triangle inequality on all triples instead of a sample.
    """

    def __init__(
        self,
        dist,
        labels=None,
        claimed_curvature=None,
        claimed_radius=None,
        validate=True,
        full_check=False,
        n_triples=10_000,
    ):
        d = np.array(dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InvalidArgumentError("distance matrix must be square")
        d.setflags(write=False)
        self.dist = d
        self.labels = None if labels is None else np.asarray(labels)
        if self.labels is not None and len(self.labels) != d.shape[0]:
            raise InvalidArgumentError("one label per point expected")
        self.claimed_curvature = None if claimed_curvature is None else float(claimed_curvature)
        self.claimed_radius = None if claimed_radius is None else float(claimed_radius)
        if validate:
            self.check_axioms(n_triples=n_triples, full=full_check)

    @property
    def n_points(self):
        return self.dist.shape[0]

    def __len__(self):
        return self.n_points

    def __repr__(self):
        return (
            f"FiniteMetricSpace(n_points={self.n_points}, "
            f"claimed_curvature={self.claimed_curvature}, claimed_radius={self.claimed_radius})"
        )

    def check_axioms(self, n_triples=10_000, full=False, seed=0):
        """Raise if the matrix is not a metric; returns the worst triangle excess."""
        d = self.dist
        N = self.n_points
        if not np.isfinite(d).all():
            raise InvalidArgumentError("distances must be finite")
        scale = max(1.0, float(d.max(initial=0.0)))
        if np.abs(d - d.T).max(initial=0.0) > SYMMETRY_TOL * scale:
            raise InvalidArgumentError("distance matrix is not symmetric")
        if np.any(np.diag(d) != 0):
            raise InvalidArgumentError("distance matrix needs a zero diagonal")
        off = ~np.eye(N, dtype=bool)
        if N > 1 and not (d[off] > 0).all():
            raise InvalidArgumentError("distinct points must be at positive distance")
        excess = self.triangle_excess(n_triples=n_triples, full=full, seed=seed)
        if excess > TRIANGLE_TOL * scale:
            raise InvalidArgumentError(f"triangle inequality violated by {excess:.3g}")
        return excess

    def triangle_excess(self, n_triples=10_000, full=False, seed=0):
        """Largest ``d(i, j) - d(i, l) - d(l, j)`` over checked triples."""
        d = self.dist
        N = self.n_points
        if N < 3:
            return 0.0
        if full:
            worst = -np.inf
            for l in range(N):
                worst = max(worst, float((d - d[:, l, None] - d[None, l, :]).max()))
            return worst
        g = np.random.default_rng(seed)
        i, j, l = g.integers(0, N, size=(3, n_triples))
        return float((d[i, j] - d[i, l] - d[l, j]).max())

    @cached_property
    def mesh(self):
        """Largest nearest-neighbour distance; a covering-radius estimate."""
        if self.n_points < 2:
            raise InsufficientDataError("mesh needs at least two points")
        d = self.dist.copy()
        np.fill_diagonal(d, np.inf)
        return float(d.min(axis=1).max())

    @cached_property
    def diameter(self):
        return float(self.dist.max())

    @cached_property
    def radius(self):
        """``min_p max_x d(p, x)``."""
        return float(self.dist.max(axis=1).min())

    def m_matrix(self, k):
        """``m_k`` applied entrywise to the distance matrix (cached per k)."""
        k = check_curvature(k)
        cache = self.__dict__.setdefault("_m_cache", {})
        if k not in cache:
            M = mk(k, self.dist)
            M.setflags(write=False)
            cache.clear()
            cache[k] = M
        return cache[k]

    def nearest_neighbors(self, K):
        """Indices of the ``K`` nearest other points of every point, ``(N, K)``."""
        N = self.n_points
        K = min(K, N - 1)
        d = self.dist.copy()
        np.fill_diagonal(d, np.inf)
        idx = np.argpartition(d, K - 1, axis=1)[:, :K]
        return idx

    def scaled(self, s):
        """The same space with all distances multiplied by ``s``."""
        if s <= 0:
            raise InvalidArgumentError("scale must be positive")
        k = None if self.claimed_curvature is None else self.claimed_curvature / s**2
        r = None if self.claimed_radius is None else self.claimed_radius * s
        labels = None if self.labels is None else self.labels * s
        return FiniteMetricSpace(self.dist * s, labels, k, r, validate=False)

    def permuted(self, perm):
        perm = np.asarray(perm)
        labels = None if self.labels is None else self.labels[perm]
        return FiniteMetricSpace(
            self.dist[np.ix_(perm, perm)],
            labels,
            self.claimed_curvature,
            self.claimed_radius,
            validate=False,
        )
