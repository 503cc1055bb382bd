import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sagitta import eccentricity as ecc
from sagitta.errors import InvalidArgumentError, NumericalDomainError
from sagitta.metric import FiniteMetricSpace
from sagitta.modelspace import (
    ModelPoint,
    base_coords,
    exp_coords,
    mk_prime,
    space_form_diameter,
    tangent_frame,
)
from sagitta.spaces import QuotientSpec, glued_quotient_metric, sample_projective, sample_sphere

HALF_PI = 0.5 * np.pi


@pytest.fixture(scope="module")
def sphere():
    return sample_sphere(2, 1.0, 800, 101, symmetric=True)


@pytest.fixture(scope="module")
def projective():
    return sample_projective(2, 1.0, 800, 102)


def line_space(xs):
    xs = np.asarray(xs, dtype=float)
    return FiniteMetricSpace(np.abs(xs[:, None] - xs[None, :]))


class TestEccentricity:
    def test_antipodal_is_minus_one(self, sphere):
        for p in (0, 17, 250):
            lam, _ = ecc.eccentricity(sphere, 1.0, p, p + 400)
            assert lam == pytest.approx(-1.0, abs=1e-9)

    def test_projective_cut_locus(self, projective):
        for p in (0, 33, 500):
            q = int(np.argmax(projective.dist[p]))
            lam, _ = ecc.eccentricity(projective, 1.0, p, q)
            assert abs(lam) <= 2 * projective.mesh
            assert lam <= 0

    def test_three_points_exact_zero(self):
        d = np.array([[0, 1.0, 1.0], [1.0, 0, 0.5], [1.0, 0.5, 0]])
        lam, arg = ecc.eccentricity(FiniteMetricSpace(d), 0.0, 0, 1)
        assert lam == 0.0 and arg == 2

    def test_ties_go_to_lowest_index(self):
        d = np.array([[0, 1, 2, 2.0], [1, 0, 1, 1.0], [2, 1, 0, 2.0], [2, 1, 2, 0]])
        lam, arg = ecc.eccentricity(FiniteMetricSpace(d), 0.0, 0, 1)
        assert arg == 2

    def test_bad_pair(self, sphere):
        with pytest.raises(InvalidArgumentError):
            ecc.eccentricity(sphere, 1.0, 3, 3)
        with pytest.raises(InvalidArgumentError):
            ecc.eccentricity(sphere, 1.0, 3, 10_000)

    def test_too_small(self):
        with pytest.raises(InvalidArgumentError):
            ecc.eccentricity(line_space([0, 1]), 0.0, 0, 1)

    def test_nonpositive_lambda_exactly_at_farthest_points(self, projective):
        # lambda <= 0 exactly when q is farthest from p
        X = projective
        for p in (0, 7):
            qs = np.array([q for q in range(X.n_points) if q != p])
            lam, _ = ecc._eccentricities(X, 1.0, p, qs)
            far = X.dist[p, qs] == X.dist[p].max()
            assert np.array_equal(lam <= 0, far)

    @given(st.sampled_from([0.5, 2.0, 3.0]), st.integers(0, 399))
    @settings(max_examples=15, deadline=None)
    def test_scaling_covariance(self, s, p):
        X = sample_sphere(2, 1.0, 200, 5)
        q = (p + 7) % 200
        Xs = X.scaled(s)
        a = ecc.eccentricity(X, 1.0, p % 200, q)[0]
        b = ecc.eccentricity(Xs, 1.0 / s**2, p % 200, q)[0]
        assert b == pytest.approx(a, abs=1e-9)

    def test_lower_bounds_below_truth(self, projective):
        LB = ecc.eccentricity_lower_bounds(projective, 1.0)
        rng = np.random.default_rng(0)
        for p, q in rng.integers(0, 800, size=(40, 2)):
            if p == q:
                continue
            assert LB[p, q] <= ecc.eccentricity(projective, 1.0, p, q)[0] + 1e-15


class TestThreshold:
    def test_values(self):
        assert ecc.lambda_threshold(1.0, 1.0) == np.inf
        assert ecc.lambda_threshold(0.0, 5.0) == 1.0
        assert ecc.lambda_threshold(-1.0, np.log(2)) == pytest.approx(0.5)

    def test_bad_h(self):
        with pytest.raises(InvalidArgumentError):
            ecc.lambda_threshold(1.0, 4.0)


class TestSolveRLambda:
    def test_flat_closed_form(self):
        assert ecc.solve_r_lambda(0.0, 1.0, 0.5) == 2.0

    @pytest.mark.parametrize("k", [-1.0, 0.0, 1.0])
    def test_zero_and_minus_one(self, k):
        assert ecc.solve_r_lambda(k, 0.7, 0.0) == 0.7
        assert ecc.solve_r_lambda(k, 0.7, -1.0) == 0.35

    def test_sphere_roundtrip(self):
        lam = np.sin(np.pi / 4) / np.sin(np.pi / 2)
        assert ecc.solve_r_lambda(1.0, np.pi / 4, lam) == pytest.approx(np.pi / 2, abs=1e-14)

    def test_threshold_gives_inf(self):
        assert ecc.solve_r_lambda(-1.0, 1.0, np.exp(-1.0)) == np.inf
        assert ecc.solve_r_lambda(0.0, 1.0, 1.0) == np.inf

    def test_below_minus_one(self):
        with pytest.raises(NumericalDomainError):
            ecc.solve_r_lambda(1.0, 1.0, -1.5)

    @given(
        st.sampled_from([-2.0, -0.5, 0.0, 0.5, 1.0, 2.0]),
        st.floats(0.02, 0.95),
        st.floats(0.0, 1.0, exclude_max=True),
    )
    def test_roundtrip(self, k, hu, u):
        d = space_form_diameter(k)
        h = hu * (d if np.isfinite(d) else 4.0)
        top = ecc.lambda_threshold(k, h)
        lam = -1 + u * (top + 1) if np.isfinite(top) else -1 + 30 * u
        r = ecc.solve_r_lambda(k, h, lam)
        assert np.isfinite(r)
        back = float(ecc.rlambda_ratio(k, h, r))
        assert abs(back - lam) <= 1e-10 * max(1.0, abs(lam))

    @given(st.sampled_from([-1.0, 1.0]), st.floats(0.1, 1.2))
    def test_monotone(self, k, h):
        lams = np.linspace(-0.99, 0.3, 30)
        rs = [ecc.solve_r_lambda(k, h, x) for x in lams]
        assert np.all(np.diff(rs) > 0)


class TestCriticalRadius:
    def test_farthest_point(self, projective):
        q = int(np.argmax(projective.dist[0]))
        assert ecc.critical_radius(projective, 1.0, 0, q) == projective.dist[0, q]

    def test_antipodal(self, sphere):
        rec = ecc.eccentricity_record(sphere, 1.0, 0, 400)
        assert rec.cri == pytest.approx(np.pi)
        assert rec.critical

    def test_flat_threshold_matches_solver(self):
        # cri <= R iff lambda <= critical_threshold
        h, R = 0.4, 1.0
        thr = float(ecc.critical_threshold(0.0, h, R))
        assert ecc.solve_r_lambda(0.0, h, thr) == pytest.approx(R)
        assert float(ecc.critical_threshold(0.0, 1.5, R)) == -np.inf


class TestCriticality:
    def test_antipode_critical(self, sphere):
        assert ecc.is_critical(sphere, 1.0, 5, 405)

    def test_quarter_distance_not_critical(self, sphere):
        d = sphere.dist[0]
        q = int(np.argmin(np.abs(d - HALF_PI)))
        assert not ecc.is_critical(sphere, 1.0, 0, q, tau=0.05)

    def test_mutually_maximal_points(self):
        X = line_space([0.0, 0.4, 1.0])
        assert ecc.is_critical(X, 0.0, 0, 2, tau=1e-12)
        assert ecc.is_critical(X, 0.0, 2, 0, tau=1e-12)

    def test_candidates_projective(self, projective):
        A = ecc.critical_candidates(projective, 1.0, 0, HALF_PI, HALF_PI)
        assert len(A) > 0
        assert np.all(projective.dist[0, A] >= HALF_PI - projective.mesh)

    def test_candidates_sphere_empty(self, sphere):
        assert ecc.critical_candidates(sphere, 1.0, 0, HALF_PI, HALF_PI, h_tol=0.0) == []

    def test_candidates_top_contains_farthest(self, projective):
        top = projective.diameter
        q = int(np.argmax(projective.dist[3]))
        assert q in ecc.critical_candidates(projective, 1.0, 3, top, top)

    def test_critical_to_antipodal_pair(self, sphere):
        assert ecc.is_critical_to_set(sphere, 1.0, 3, [10, 410])

    def test_not_critical_to_near_point(self, sphere):
        q = int(np.argsort(sphere.dist[3])[5])
        assert not ecc.is_critical_to_set(sphere, 1.0, 3, [q], tau=0.05)

    def test_segment_endpoints(self):
        X = line_space(np.linspace(0, 1, 11))
        assert ecc.is_critical_to_set(X, 0.0, 4, [0, 10], tau=1e-12)

    def test_set_errors(self, sphere):
        with pytest.raises(InvalidArgumentError):
            ecc.is_critical_to_set(sphere, 1.0, 3, [])
        with pytest.raises(InvalidArgumentError):
            ecc.is_critical_to_set(sphere, 1.0, 3, [3, 4])


class TestSagitta:
    def test_projective(self, projective):
        s = ecc.sagitta(projective, 1.0, HALF_PI)
        assert abs(s - HALF_PI) <= 2 * projective.mesh

    def test_sphere_empty(self, sphere):
        assert ecc.sagitta(sphere, 1.0, HALF_PI) == np.inf
        assert ecc.modified_sagitta(sphere, 1.0, HALF_PI) == np.inf

    def test_modified_projective(self, projective):
        s = ecc.modified_sagitta(projective, 1.0, HALF_PI)
        assert abs(s - HALF_PI) <= 2 * projective.mesh
        assert s <= ecc.sagitta(projective, 1.0, HALF_PI) + projective.mesh

    def test_permutation_invariant(self, projective):
        perm = np.random.default_rng(4).permutation(projective.n_points)
        Y = projective.permuted(perm)
        assert ecc.sagitta(Y, 1.0, HALF_PI) == ecc.sagitta(projective, 1.0, HALF_PI)
        assert ecc.modified_sagitta(Y, 1.0, HALF_PI) == ecc.modified_sagitta(projective, 1.0, HALF_PI)

    @given(st.integers(0, 10_000))
    @settings(max_examples=8, deadline=None)
    def test_pruning_matches_enumeration(self, seed):
        X = sample_projective(2, 1.0, 150, seed)
        assert ecc.sagitta_witness(X, 1.0, HALF_PI) == ecc.sagitta_witness(X, 1.0, HALF_PI, prune=False)
        assert ecc.modified_sagitta_witness(X, 1.0, HALF_PI) == ecc.modified_sagitta_witness(
            X, 1.0, HALF_PI, prune=False
        )

    def test_doubled_hemisphere_finite(self):
        spec = QuotientSpec("purse", 2, 1.0, h=HALF_PI, r=HALF_PI)
        X = glued_quotient_metric(spec, 400, 0.5, 7)
        s = ecc.modified_sagitta(X, 1.0, HALF_PI)
        assert np.isfinite(s) and s <= HALF_PI + ecc.default_tau(X)

    def test_radius_realiser_qualifies(self, projective):
        # h = r = rad X gives a finite value no larger than r
        r = projective.radius
        s = ecc.modified_sagitta(projective, 1.0, r)
        assert s <= r + ecc.default_tau(projective)


class TestThales:
    def _disk(self, k, r, h):
        o = base_coords(k, 2)
        e = np.array([0.0, 1.0, 0.0])
        p = exp_coords(k, o, e, r - h)
        q = exp_coords(k, o, e, r)
        ang = np.linspace(0.3, 2 * np.pi - 0.3, 50)
        V = np.stack([np.cos(ang), np.sin(ang)], axis=1) @ tangent_frame(k, o).T
        return p, q, exp_coords(k, o, V, np.full(50, r))

    def test_flat_circle(self):
        p, q, X = self._disk(0.0, 2.0, 0.5)
        f = ecc.thales_ratios(0.0, p, q, X)
        assert np.allclose(f, (2.0 - 0.5) / 2.0, atol=1e-12)

    def test_sphere_example(self):
        p, q, X = self._disk(1.0, HALF_PI, np.pi / 4)
        f = ecc.thales_ratios(1.0, p, q, X)
        assert np.allclose(f, np.sqrt(0.5), atol=1e-9)

    @given(st.sampled_from([-1.0, 0.0, 1.0]), st.floats(0.2, 1.4), st.floats(0.05, 0.95))
    def test_boundary_constant(self, k, r, hu):
        p, q, X = self._disk(k, r, r * hu)
        f = ecc.thales_ratios(k, p, q, X)
        expected = mk_prime(k, r - r * hu) / mk_prime(k, r)
        assert np.allclose(f, expected, atol=1e-9)

    def test_x_equals_p(self):
        p, q, _ = self._disk(1.0, 1.0, 0.4)
        assert ecc.thales_ratio(1.0, ModelPoint(p), ModelPoint(q), ModelPoint(p)) == pytest.approx(-1.0)

    def test_undefined_at_q(self):
        p, q, _ = self._disk(1.0, 1.0, 0.4)
        with pytest.raises(InvalidArgumentError):
            ecc.thales_ratios(1.0, p, q, q[None, :])
