import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from sagitta.errors import ConnectivityError, InvalidActionError, InvalidArgumentError
from sagitta.modelspace import (
    ModelPoint,
    ambient_distance,
    base_point,
    pairwise_distances,
    space_form_diameter,
)
from sagitta.spaces import (
    QuotientSpec,
    block_rotate,
    glued_quotient_graph,
    identification_map,
    reflect,
    reflect_coords,
    round_lens_distances,
    sample_projective,
    sample_round_lens,
    sample_sphere,
    sample_sphere_coords,
)

HALF_PI = 0.5 * np.pi


class TestSpec:
    def test_round_lens_defaults(self):
        spec = QuotientSpec("round_lens", 3, 1.0, m=5)
        assert spec.weights == (1, 1)

    def test_even_dimension_rejected(self):
        with pytest.raises(InvalidActionError):
            QuotientSpec("round_lens", 2, 1.0, m=3)

    def test_non_free_weights(self):
        with pytest.raises(InvalidActionError):
            QuotientSpec("round_lens", 3, 1.0, m=4, weights=(1, 2))

    def test_glued_needs_lens(self):
        with pytest.raises(InvalidArgumentError):
            QuotientSpec("glued_lens", 3, 1.0, m=5)

    def test_unknown_kind(self):
        with pytest.raises(InvalidArgumentError):
            QuotientSpec("torus", 3, 1.0)

    def test_sphere_needs_positive_k(self):
        with pytest.raises(InvalidArgumentError):
            QuotientSpec("sphere", 2, -1.0)


class TestSamples:
    def test_sphere_diameter(self):
        X = sample_sphere(2, 1.0, 1000, 1)
        assert np.pi - 3 * X.mesh < X.diameter <= np.pi

    def test_sphere_distance_distribution(self):
        # on S^2 the distance to a fixed point has CDF (1 - cos t) / 2
        X = sample_sphere_coords(2, 1.0, 20_000, 2)
        d = ambient_distance(1.0, X, X[:1])[1:]
        assert stats.kstest(d, lambda t: 0.5 * (1 - np.cos(t))).pvalue > 0.01

    def test_deterministic(self):
        assert np.array_equal(sample_sphere(2, 1.0, 50, 3).dist, sample_sphere(2, 1.0, 50, 3).dist)

    def test_projective_bound(self):
        X = sample_projective(2, 4.0, 300, 4)
        assert X.diameter <= np.pi / 4 + 1e-15
        assert X.claimed_radius == pytest.approx(np.pi / 4)

    def test_round_lens_trivial_action(self):
        spec = QuotientSpec("round_lens", 3, 1.0, m=1)
        A = sample_round_lens(spec, 100, 5)
        B = sample_sphere(3, 1.0, 100, 5)
        assert np.allclose(A.dist, B.dist)

    def test_round_lens_antipodal(self):
        spec = QuotientSpec("round_lens", 3, 1.0, m=2)
        A = sample_round_lens(spec, 100, 6)
        B = sample_projective(3, 1.0, 100, 6)
        assert np.allclose(A.dist, B.dist, atol=1e-12)

    def test_orbit_points_at_zero_distance(self):
        X = sample_sphere_coords(3, 1.0, 5, 7)
        Y = block_rotate(X, (1, 1), 5, power=2)
        d = round_lens_distances(1.0, 5, (1, 1), X, Y)
        assert np.allclose(np.diag(d), 0.0, atol=1e-7)

    def test_block_rotate_isometry(self):
        X = sample_sphere_coords(3, 1.0, 20, 8)
        Y = block_rotate(X, (1, 2), 5)
        assert np.allclose(pairwise_distances(1.0, X), pairwise_distances(1.0, Y), atol=1e-12)
        Z = block_rotate(X, (1, 2), 5, power=5)
        assert np.allclose(Z, X, atol=1e-12)

    def test_odd_symmetric_rejected(self):
        with pytest.raises(InvalidArgumentError):
            sample_sphere_coords(2, 1.0, 11, 0, symmetric=True)


class TestReflection:
    @given(st.sampled_from([-1.0, 0.0, 1.0]), st.integers(0, 1000))
    @settings(max_examples=30)
    def test_involution_and_isometry(self, k, seed):
        rng = np.random.default_rng(seed)
        base = base_point(k, 3)
        nu = np.zeros(4)
        nu[1:] = rng.standard_normal(3)
        nu[1:] /= np.linalg.norm(nu[1:])
        X = sample_sphere_coords(3, 1.0, 6, seed) if k > 0 else None
        if X is None:
            X = np.array([base.coords + 0.0 for _ in range(6)])
            X[:, 1:] += rng.standard_normal((6, 3))
            if k < 0:
                X[:, 0] = np.sqrt(1 + (X[:, 1:] ** 2).sum(axis=1))
        Y = reflect_coords(k, X, nu, base.coords)
        assert np.allclose(reflect_coords(k, Y, nu, base.coords), X, atol=1e-12)
        assert np.allclose(pairwise_distances(k, X), pairwise_distances(k, Y), atol=1e-9)

    def test_fixed_hyperplane(self):
        base = base_point(1.0, 2)
        x = ModelPoint(np.array([0.0, 0.0, 1.0]))
        y = reflect(x, np.array([0.0, 1.0, 0.0]), base, 1.0)
        assert np.allclose(y.coords, x.coords)


class TestIdentification:
    def test_glued_maps_face_to_face(self):
        spec = QuotientSpec("glued_lens", 3, 1.0, m=5, h=np.pi / 5, r=HALF_PI)
        L = spec.lens
        phi, inv = identification_map(spec), identification_map(spec, inverse=True)
        # points of the face of a1 (the part of dD(a1, r) inside D(a2, r))
        X = sample_sphere_coords(3, 1.0, 4000, 9)
        face = X[
            (np.abs(ambient_distance(1.0, X, L.a1[None]) - L.r) < 0.05)
            & (ambient_distance(1.0, X, L.a2[None]) <= L.r)
        ]
        Y = phi(face)
        d1 = ambient_distance(1.0, Y, L.a2[None]) - L.r
        assert np.allclose(d1, ambient_distance(1.0, face, L.a1[None]) - L.r, atol=1e-12)
        assert np.allclose(inv(Y), face, atol=1e-12)

    def test_purse_involution(self):
        spec = QuotientSpec("purse", 2, 1.0, h=HALF_PI, r=HALF_PI)
        phi = identification_map(spec)
        X = sample_sphere_coords(2, 1.0, 10, 1)
        assert np.allclose(phi(phi(X)), X)

    def test_not_glued(self):
        with pytest.raises(InvalidArgumentError):
            identification_map(QuotientSpec("sphere", 2, 1.0))


@pytest.fixture(scope="module")
def lens5():
    spec = QuotientSpec("glued_lens", 3, 1.0, m=5, h=np.pi / 5, r=HALF_PI)
    return glued_quotient_graph(spec, 800, 0.5, 11)


class TestGluedGraph:
    def test_never_shorter_than_quotient(self, lens5):
        rng = np.random.default_rng(0)
        pairs = np.array([rng.choice(800, 2, replace=False) for _ in range(40)])
        D = lens5.distances_from(np.unique(pairs[:, 0]))
        src = np.unique(pairs[:, 0])
        g = D[np.searchsorted(src, pairs[:, 0]), pairs[:, 1]]
        exact = np.array(
            [round_lens_distances(1.0, 5, (-1, 1), lens5.coords[a][None], lens5.coords[b][None])[0, 0]
             for a, b in pairs]
        )
        assert np.all(g >= exact - 1e-9)
        assert np.median(g - exact) <= 2 * lens5.connect_radius

    def test_interior_pairs_match_model(self, lens5):
        L = lens5.spec.lens
        X = lens5.coords
        inner = np.flatnonzero(
            (ambient_distance(1.0, X, L.a1[None]) < L.r - 0.5)
            & (ambient_distance(1.0, X, L.a2[None]) < L.r - 0.5)
        )[:10]
        D = lens5.distances_from(inner)[:, inner]
        model = pairwise_distances(1.0, X[inner])
        assert np.all(D >= model - 1e-12)
        assert np.all(D - model <= lens5.connect_radius)

    def test_identifications_present(self, lens5):
        assert lens5.n_identifications > 0

    def test_disconnected_raises(self):
        spec = QuotientSpec("glued_lens", 3, 1.0, m=5, h=np.pi / 5, r=HALF_PI)
        with pytest.raises(ConnectivityError) as err:
            glued_quotient_graph(spec, 200, 0.02, 1)
        assert err.value.n_components > 1

    def test_purse_boundary_mirror(self):
        spec = QuotientSpec("purse", 2, 1.0, h=HALF_PI, r=HALF_PI)
        G = glued_quotient_graph(spec, 1500, 0.3, 3)
        L = spec.lens
        d = ambient_distance(1.0, G.coords, L.a1[None])
        edge = np.flatnonzero(d > L.r - 0.02)
        phi = identification_map(spec)
        i = edge[0]
        j = int(np.argmin(ambient_distance(1.0, G.coords, phi(G.coords[i])[None])))
        gd = G.distances_from([i])[0, j]
        # mirror images across the seam are one gluing edge apart
        assert gd < 0.1
        assert gd < ambient_distance(1.0, G.coords[i], G.coords[j])

    def test_metric_space(self):
        spec = QuotientSpec("glued_lens", 3, 1.0, m=3, h=np.pi / 3, r=HALF_PI)
        X = glued_quotient_graph(spec, 300, 0.6, 2).metric_space()
        assert X.n_points == 300
        assert X.diameter <= space_form_diameter(1.0)
