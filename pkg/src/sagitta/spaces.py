"""Finite metric spaces sampled from model spaces and their quotients.

Round quotients (spheres, projective spaces, lens spaces ``S^n/Z_m``) get
exact distances.  Lens regions with boundary identifications get a graph
metric: sampled points joined by model geodesics no longer than a connection
radius, plus identification edges across the glued boundary.  Every graph
path is a path in the quotient, so graph distances never undercut the true
quotient distances and converge to them as the sample densifies.

Cyclic actions use block rotations: coordinates are grouped in consecutive
pairs and pair ``i`` is rotated by ``2 pi w_i / m``.
"""

from dataclasses import dataclass
from math import gcd

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra, shortest_path
from scipy.spatial import cKDTree

from .errors import ConnectivityError, InvalidActionError, InvalidArgumentError
from .lens import LensParams, lens_volume_quadrature
from .metric import FiniteMetricSpace
from .modelspace import (
    ModelPoint,
    ambient_distance,
    ball_volume,
    bilinear,
    check_curvature,
    check_direction,
    exp_coords,
    log_coords,
    pairwise_distances,
    sample_ball_coords,
    space_form_diameter,
    validate_point,
)
from .rng import derive_seed, stream

KINDS = ("sphere", "projective", "round_lens", "glued_lens", "purse")


@dataclass(frozen=True)
class QuotientSpec:
    """Parameters of a model quotient.

    ``weights`` are the integer rotation weights of the cyclic action: on all
    ``(n+1)/2`` coordinate pairs of S^n for ``round_lens``, on the ``(n-1)/2``
    pairs of the edge directions ``x_2..x_n`` for ``glued_lens``.  For
    ``glued_lens`` with ``m = 2`` and no weights the action is ``-1`` on the
    edge directions, which exists in every dimension.
    """

    kind: str
    n: int
    k: float
    m: int = 1
    weights: tuple = None
    h: float = None
    r: float = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown quotient kind {self.kind!r}")
        k = check_curvature(self.k)
        object.__setattr__(self, "k", k)
        if self.n < 2:
            raise InvalidArgumentError("dimension must be at least 2")
        if self.m < 1:
            raise InvalidActionError("order m must be positive")
        if self.kind in ("sphere", "projective", "round_lens") and k <= 0:
            raise InvalidArgumentError(f"{self.kind} needs k > 0")
        if self.kind == "round_lens":
            if self.n % 2 == 0:
                raise InvalidActionError("free cyclic actions on S^n need n odd")
            w = (1,) * ((self.n + 1) // 2) if self.weights is None else tuple(self.weights)
            self._set_weights(w, (self.n + 1) // 2)
        if self.kind in ("glued_lens", "purse"):
            if self.h is None or self.r is None:
                raise InvalidArgumentError(f"{self.kind} needs h and r")
            LensParams(self.n, k, self.h, self.r)
        if self.kind == "glued_lens":
            if self.m > 2 or self.weights is not None:
                if (self.n - 1) % 2:
                    raise InvalidActionError(
                        "rotation actions on the edge sphere need n odd when m > 2"
                    )
                w = (1,) * ((self.n - 1) // 2) if self.weights is None else tuple(self.weights)
                self._set_weights(w, (self.n - 1) // 2)

    def _set_weights(self, w, count):
        if len(w) != count:
            raise InvalidActionError(f"expected {count} weights, got {len(w)}")
        if any(gcd(int(x), self.m) != 1 for x in w):
            raise InvalidActionError(f"weights {w} do not give a free action of order {self.m}")
        object.__setattr__(self, "weights", tuple(int(x) for x in w))

    @property
    def lens(self):
        return LensParams(self.n, self.k, self.h, self.r)


def block_rotate(X, weights, m, power=1, start=0):
    """Rotate coordinate pairs ``(start + 2i, start + 2i + 1)`` by ``2 pi w_i power / m``."""
    Y = np.array(X, dtype=float, copy=True)
    for i, w in enumerate(weights):
        a = 2.0 * np.pi * w * power / m
        c, s = np.cos(a), np.sin(a)
        u, v = start + 2 * i, start + 2 * i + 1
        xu, xv = Y[..., u].copy(), Y[..., v].copy()
        Y[..., u] = c * xu - s * xv
        Y[..., v] = s * xu + c * xv
    return Y


def sample_sphere_coords(n, k, N, seed, symmetric=False):
    """Uniform points on S^n_k; ``symmetric`` appends the antipode of each draw."""
    k = check_curvature(k)
    if k <= 0:
        raise InvalidArgumentError("sphere samples need k > 0")
    half = N // 2 if symmetric else N
    if symmetric and N % 2:
        raise InvalidArgumentError("symmetric samples need an even N")
    g = stream(seed)
    X = g.standard_normal((half, n + 1))
    X /= np.linalg.norm(X, axis=1, keepdims=True) * np.sqrt(k)
    if symmetric:
        X = np.concatenate([X, -X])
    return X


def sample_sphere(n, k, N, seed, symmetric=False):
    """N uniform points on S^n_k with arc-length distances."""
    if N < 10:
        raise InvalidArgumentError("need at least 10 points")
    X = sample_sphere_coords(n, k, N, seed, symmetric)
    return FiniteMetricSpace(pairwise_distances(k, X), labels=X, claimed_curvature=k)


def sample_projective(n, k, N, seed):
    """Sphere sample with the antipodal quotient metric ``min(d, pi/sqrt(k) - d)``."""
    if N < 10:
        raise InvalidArgumentError("need at least 10 points")
    X = sample_sphere_coords(n, k, N, seed)
    d = pairwise_distances(k, X)
    d = np.minimum(d, space_form_diameter(k) - d)
    np.fill_diagonal(d, 0.0)
    return FiniteMetricSpace(
        d, labels=X, claimed_curvature=k, claimed_radius=0.5 * space_form_diameter(k)
    )


def round_lens_distances(k, m, weights, X, Y=None):
    """Quotient distances of S^n_k / Z_m: ``min_j d(x, psi^j y)``."""
    Y = X if Y is None else Y
    out = pairwise_distances(k, X, Y)
    for j in range(1, m):
        np.minimum(out, pairwise_distances(k, X, block_rotate(Y, weights, m, j)), out=out)
    return out


def sample_round_lens(spec, N, seed):
    """Sphere sample with the exact lens space quotient metric."""
    if spec.kind != "round_lens":
        raise InvalidArgumentError("sample_round_lens needs a round_lens spec")
    if N < 10:
        raise InvalidArgumentError("need at least 10 points")
    X = sample_sphere_coords(spec.n, spec.k, N, seed)
    d = round_lens_distances(spec.k, spec.m, spec.weights, X)
    np.fill_diagonal(d, 0.0)
    return FiniteMetricSpace(d, labels=X, claimed_curvature=spec.k)


def reflect_coords(k, X, normal, base):
    """Reflection across the totally geodesic hyperplane through ``base``
    orthogonal to the unit tangent ``normal``."""
    X = np.asarray(X, dtype=float)
    coef = bilinear(k, X - base, normal)
    return X - 2.0 * np.asarray(coef)[..., None] * normal


def reflect(point, normal, base, k):
    k = check_curvature(k)
    validate_point(point, k)
    validate_point(base, k)
    nu = check_direction(k, base.coords, normal)
    return ModelPoint(reflect_coords(k, point.coords, nu, base.coords))


def identification_map(spec, inverse=False):
    """The boundary gluing as a map on coordinate arrays.

    For ``glued_lens`` the map sends the face of ``a1`` onto the face of
    ``a2``; ``inverse=True`` gives the map back.  The purse reflection is an
    involution of each face.
    """
    n = spec.n
    if spec.kind == "purse":

        def phi(X):
            Y = np.array(X, dtype=float, copy=True)
            Y[..., n] *= -1.0
            return Y

        return phi
    if spec.kind != "glued_lens":
        raise InvalidArgumentError("only glued_lens and purse have boundary gluings")
    power = -1 if inverse else 1

    def phi(X):
        if spec.weights is not None:
            Y = block_rotate(X, spec.weights, spec.m, power, start=2)
        else:
            Y = np.array(X, dtype=float, copy=True)
            if spec.m == 2:
                Y[..., 2:] *= -1.0
        Y[..., 1] *= -1.0
        return Y

    return phi


def sample_lens_coords(L, N, seed):
    """N uniform points of the lens by rejection from ``D(a1, r)``."""
    acc = lens_volume_quadrature(L) / ball_volume(L.k, L.n, L.r)
    chunks, have, batch = [], 0, 0
    while have < N:
        size = int(np.ceil(1.1 * (N - have) / acc)) + 64
        X = sample_ball_coords(L.k, L.n, L.a1, L.r, size, derive_seed(seed, batch))
        X = X[ambient_distance(L.k, X, L.a2[None, :]) <= L.r]
        chunks.append(X)
        have += len(X)
        batch += 1
    return np.concatenate(chunks)[:N]


def _geometric_edges(k, X, radius):
    if k >= 0:
        # the euclidean chord is monotone in the geodesic distance
        chord = radius if k == 0 else 2.0 / np.sqrt(k) * np.sin(min(0.5 * np.sqrt(k) * radius, 0.5 * np.pi))
        pairs = cKDTree(X).query_pairs(chord * (1 + 1e-12), output_type="ndarray")
        i, j = pairs[:, 0], pairs[:, 1]
        w = ambient_distance(k, X[i], X[j])
    else:
        rows, cols, ws = [], [], []
        for s in range(0, len(X), 512):
            d = pairwise_distances(k, X[s : s + 512], X)
            a, b = np.nonzero(d <= radius)
            keep = a + s < b
            rows.append(a[keep] + s)
            cols.append(b[keep])
            ws.append(d[a[keep], b[keep]])
        i, j, w = np.concatenate(rows), np.concatenate(cols), np.concatenate(ws)
    keep = (w <= radius) & (w > 0)
    return i[keep], j[keep], w[keep]


class GluedQuotient:
    """Graph approximation of a lens region with glued boundary.

    Attributes
    ----------
    coords : (N, n+1) ndarray
        Sample points (ambient coordinates in the lens).
    graph : scipy.sparse.csr_matrix
        Symmetric weighted adjacency.
    n_identifications : int
        Number of gluing edges.
    """

    def __init__(self, spec, coords, graph, connect_radius, n_identifications):
        self.spec = spec
        self.coords = coords
        self.graph = graph
        self.connect_radius = connect_radius
        self.n_identifications = n_identifications

    @property
    def n_points(self):
        return len(self.coords)

    def distances_from(self, sources):
        return dijkstra(self.graph, directed=False, indices=np.asarray(sources, dtype=int))

    def metric_space(self):
        d = shortest_path(self.graph, method="D", directed=False)
        np.fill_diagonal(d, 0.0)
        return FiniteMetricSpace(d, labels=self.coords, claimed_curvature=self.spec.k)


def glued_quotient_graph(spec, N, connect_radius, seed, boundary_tol=None):
    """Sample the lens of ``spec`` and build the glued graph metric.

    A sample point ``u`` within ``boundary_tol`` (default
    ``connect_radius / 2``) of the face ``dD(a_i, r)`` is projected radially to
    ``b`` on that face; it is joined to the sample point ``v`` nearest the
    glued image ``Phi(b)`` by an edge of length ``|ub| + |Phi(b) v|``, the
    length of an actual path through the gluing.
    """
    L = spec.lens
    k, r = L.k, L.r
    if connect_radius <= 0:
        raise InvalidArgumentError("connect_radius must be positive")
    tol = 0.5 * connect_radius if boundary_tol is None else float(boundary_tol)
    X = sample_lens_coords(L, N, seed)
    i, j, w = _geometric_edges(k, X, connect_radius)

    tree = cKDTree(X)
    gi, gj, gw = [], [], []
    for center, other, inverse in ((L.a1, L.a2, False), (L.a2, L.a1, True)):
        phi = identification_map(spec, inverse)
        du = ambient_distance(k, X, center[None, :])
        near = np.flatnonzero(du >= r - tol)
        if near.size == 0:
            continue
        u_dir, _ = log_coords(k, center, X[near])
        B = exp_coords(k, center, u_dir, np.full(near.size, r))
        on_face = ambient_distance(k, B, other[None, :]) <= r * (1 + 1e-12)
        near, B = near[on_face], B[on_face]
        img = phi(B)
        _, cand = tree.query(img, k=min(8, len(X)))
        cand = np.atleast_2d(cand)
        dc = ambient_distance(k, img[:, None, :], X[cand])
        best = np.argmin(dc, axis=1)
        v = cand[np.arange(len(near)), best]
        weight = ambient_distance(k, X[near], B) + dc[np.arange(len(near)), best]
        keep = (v != near) & (weight > 0)
        gi.append(near[keep])
        gj.append(v[keep])
        gw.append(weight[keep])
    gi = np.concatenate(gi) if gi else np.empty(0, int)
    gj = np.concatenate(gj) if gj else np.empty(0, int)
    gw = np.concatenate(gw) if gw else np.empty(0)

    rows = np.concatenate([i, j, gi, gj])
    cols = np.concatenate([j, i, gj, gi])
    vals = np.concatenate([w, w, gw, gw])
    # duplicate entries keep the shortest edge
    order = np.lexsort((vals, cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    first = np.ones(rows.size, dtype=bool)
    first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    graph = coo_matrix((vals[first], (rows[first], cols[first])), shape=(N, N)).tocsr()

    n_comp, labels = connected_components(graph, directed=False)
    if n_comp > 1:
        sizes = np.bincount(labels)
        raise ConnectivityError(
            f"glued graph has {n_comp} components (largest {sizes.max()} of {N}); "
            "increase connect_radius or N",
            n_components=n_comp,
            sizes=sorted(sizes.tolist(), reverse=True),
        )
    return GluedQuotient(spec, X, graph, connect_radius, int(gi.size))


def glued_quotient_metric(spec, N, connect_radius, seed, boundary_tol=None):
    """All-pairs graph metric of :func:`glued_quotient_graph` as a FiniteMetricSpace."""
    return glued_quotient_graph(spec, N, connect_radius, seed, boundary_tol).metric_space()
