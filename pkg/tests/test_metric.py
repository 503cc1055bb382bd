import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sagitta.errors import InvalidArgumentError
from sagitta.harness import fms
from sagitta.metric import FiniteMetricSpace
from sagitta.modelspace import mk
from sagitta.spaces import sample_sphere


def line_space(xs):
    xs = np.asarray(xs, dtype=float)
    return FiniteMetricSpace(np.abs(xs[:, None] - xs[None, :]))


class TestAxioms:
    def test_accepts_line(self):
        X = line_space([0, 1, 3, 7])
        assert X.n_points == 4
        assert X.diameter == 7
        assert X.radius == 4  # from x = 3

    def test_rejects_asymmetric(self):
        d = np.array([[0, 1.0], [2.0, 0]])
        with pytest.raises(InvalidArgumentError):
            FiniteMetricSpace(d)

    def test_rejects_triangle_violation(self):
        d = np.array([[0, 1, 5.0], [1, 0, 1.0], [5.0, 1, 0]])
        with pytest.raises(InvalidArgumentError):
            FiniteMetricSpace(d, full_check=True)

    def test_rejects_duplicate_points(self):
        d = np.array([[0, 0.0], [0.0, 0]])
        with pytest.raises(InvalidArgumentError):
            FiniteMetricSpace(d)

    def test_read_only(self):
        X = line_space([0, 1, 2])
        with pytest.raises(ValueError):
            X.dist[0, 1] = 5.0


class TestDerived:
    def test_mesh_is_max_nearest_neighbour(self):
        X = line_space([0, 1, 3, 7])
        assert X.mesh == 4

    def test_m_matrix(self):
        X = line_space([0, 1, 3])
        assert np.allclose(X.m_matrix(0.0), X.dist**2 / 2)
        assert np.allclose(X.m_matrix(-1.0), mk(-1.0, X.dist))

    def test_nearest_neighbors(self):
        X = line_space([0, 1, 3, 7])
        nn = X.nearest_neighbors(2)
        assert nn[0].tolist() == [1, 2]
        assert nn[3].tolist() == [2, 1]

    def test_scaled(self):
        X = line_space([0, 1, 3])
        Y = X.scaled(2.0)
        assert np.allclose(Y.dist, 2 * X.dist)

    @given(st.integers(0, 1000))
    @settings(max_examples=20, deadline=None)
    def test_permuted(self, seed):
        X = sample_sphere(2, 1.0, 40, seed)
        perm = np.random.default_rng(seed).permutation(40)
        Y = X.permuted(perm)
        assert np.array_equal(Y.dist, X.dist[np.ix_(perm, perm)])
        assert Y.mesh == pytest.approx(X.mesh)


class TestFms:
    def test_roundtrip_lossless(self, tmp_path):
        X = sample_sphere(2, 1.0, 50, 3)
        path = tmp_path / "x.fms"
        fms.write(path, X)
        Y = fms.read(path)
        assert np.array_equal(X.dist, Y.dist)
        assert Y.claimed_curvature == 1.0

    def test_header_and_comments(self):
        text = "FMS v1 3\n# a comment\ncurvature 0\n1\n2 1\n"
        X = fms.loads(text)
        assert X.dist[2, 0] == 2 and X.dist[2, 1] == 1
        assert X.claimed_curvature == 0.0

    def test_bad_header(self):
        with pytest.raises(InvalidArgumentError):
            fms.loads("FMS v2 2\n1\n")

    def test_wrong_count(self):
        with pytest.raises(InvalidArgumentError):
            fms.loads("FMS v1 3\n1\n2\n")

    def test_dumps_deterministic(self):
        X = line_space([0, 0.1, 0.30000000000000004])
        assert fms.dumps(X) == fms.dumps(X)
        assert "0.30000000000000004" in fms.dumps(X)
