from math import pi

import numpy as np
import pytest

from splinetd.errors import InvalidParam, OutOfDomain
from splinetd.geometry import Simplex, Triangulation, build_grid_triangulation
from splinetd.spline import (SplineFunction, SplineSpace, bernstein,
                             bnet_points, enumerate_multi_indices)

REFERENCE_THETA = [-pi, -pi / 2, 0.0, pi / 2, pi]
REFERENCE_THETADOT = [-2 * pi, -pi, 0.0, pi, 2 * pi]


@pytest.fixture(scope="module")
def grid_space():
    tri = build_grid_triangulation(REFERENCE_THETA, REFERENCE_THETADOT)
    return SplineSpace(tri, 4, 1)


def affine_coefficients(space, fn):
    """Coefficient vector whose entries are fn evaluated at the b-net points;
    reproduces fn exactly when fn is affine (linear precision)."""
    c = np.zeros(space.ahat)
    for j, simplex in enumerate(space.triangulation.simplices):
        for local, (_, point) in enumerate(bnet_points(simplex, space.degree)):
            c[j * space.dhat + local] = fn(point)
    return c


class TestMultiIndices:
    def test_degree2_matches_reference_order(self):
        assert enumerate_multi_indices(2, 2) == [
            (2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)]

    def test_degree1_univariate(self):
        assert enumerate_multi_indices(1, 1) == [(1, 0), (0, 1)]

    def test_degree4_bivariate(self):
        indices = enumerate_multi_indices(4, 2)
        assert len(indices) == 15
        assert indices[0] == (4, 0, 0)
        assert indices[-1] == (0, 0, 4)
        assert all(sum(k) == 4 for k in indices)

    def test_invalid_arguments(self):
        with pytest.raises(InvalidParam):
            enumerate_multi_indices(-1, 2)
        with pytest.raises(InvalidParam):
            enumerate_multi_indices(2, 0)


class TestBernstein:
    def test_vertex_value(self):
        assert bernstein((4, 0, 0), (1.0, 0.0, 0.0)) == pytest.approx(1.0)

    def test_edge_midpoint_closed_form(self):
        assert bernstein((1, 1, 0), (0.5, 0.5, 0.0)) == pytest.approx(0.5)

    def test_partition_of_unity_degree4(self):
        b = (0.2, 0.3, 0.5)
        total = sum(bernstein(k, b) for k in enumerate_multi_indices(4, 2))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_partition_of_unity_random(self, grid_space):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            b = rng.dirichlet([1.0, 1.0, 1.0])
            assert abs(grid_space.basis_values(b).sum() - 1.0) <= 1e-12


class TestBasisRow:
    def test_vertex_gives_single_unit_entry(self, grid_space):
        # An interior grid node; the tie-break picks one owning simplex and
        # the entry sits at that simplex's kappa = d*e_i slot.
        row = grid_space.basis_row([pi / 2, pi])
        dense = row.to_dense()
        assert np.count_nonzero(np.abs(dense) > 1e-12) == 1
        assert dense.max() == pytest.approx(1.0)
        local = np.argmax(np.abs(row.values) > 1e-12)
        kappa = grid_space.multi_indices[local]
        assert sorted(kappa) == [0, 0, 4]

    def test_entries_sum_to_one(self, grid_space):
        rng = np.random.default_rng(5)
        lo, hi = grid_space.triangulation.bounds
        for _ in range(50):
            row = grid_space.basis_row(rng.uniform(lo, hi))
            assert row.values.sum() == pytest.approx(1.0, abs=1e-10)
            assert len(row.values) == grid_space.dhat

    def test_facet_point_uses_lowest_simplex_block(self, grid_space):
        j, _ = grid_space.triangulation.locate([0.0, 0.5])
        row = grid_space.basis_row([0.0, 0.5])
        assert row.simplex_index == j
        owners = [k for k, s in enumerate(grid_space.triangulation.simplices)
                  if s.contains([0.0, 0.5])]
        assert j == min(owners)

    def test_out_of_domain_propagates(self, grid_space):
        with pytest.raises(OutOfDomain):
            grid_space.basis_row([10.0, 0.0])


class TestEvaluate:
    def test_all_ones_coefficients_give_one(self, grid_space):
        f = SplineFunction(grid_space, np.ones(grid_space.ahat))
        rng = np.random.default_rng(2)
        lo, hi = grid_space.triangulation.bounds
        for _ in range(100):
            assert f.evaluate(rng.uniform(lo, hi)) == pytest.approx(1.0)

    def test_linear_precision(self, grid_space):
        target = lambda p: 0.7 - 1.3 * p[0] + 0.25 * p[1]
        f = SplineFunction(grid_space, affine_coefficients(grid_space, target))
        rng = np.random.default_rng(3)
        lo, hi = grid_space.triangulation.bounds
        for _ in range(1000):
            x = rng.uniform(lo, hi)
            assert abs(f.evaluate(x) - target(x)) <= 1e-9

    def test_single_simplex_vertex_evaluation(self):
        tri = Triangulation([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])
        space = SplineSpace(tri, 2, 1)
        f = SplineFunction(space, np.array([1.0, 0, 0, 0, 0, 0]))
        assert f.evaluate([0.0, 0.0]) == pytest.approx(1.0)

    def test_coefficient_length_checked(self, grid_space):
        with pytest.raises(InvalidParam):
            SplineFunction(grid_space, np.zeros(3))


class TestDerivatives:
    def test_linear_function_has_constant_gradient(self, grid_space):
        f = SplineFunction(grid_space, affine_coefficients(
            grid_space, lambda p: 2.5 * p[0] - 0.75 * p[1]))
        rng = np.random.default_rng(4)
        lo, hi = grid_space.triangulation.bounds
        for _ in range(50):
            g = f.gradient(rng.uniform(lo, hi))
            assert np.allclose(g, [2.5, -0.75], atol=1e-9)

    def test_constant_function_has_zero_derivative(self, grid_space):
        f = SplineFunction(grid_space, np.full(grid_space.ahat, 3.0))
        assert f.directional_derivative([0.3, 0.4], [1.0, 2.0]) == pytest.approx(0.0, abs=1e-9)

    def _random_interior_points(self, space, rng, count):
        """Points comfortably inside a simplex so finite differences never
        straddle a facet."""
        points = []
        simplices = space.triangulation.simplices
        while len(points) < count:
            simplex = simplices[rng.integers(len(simplices))]
            w = rng.dirichlet([2.0, 2.0, 2.0])
            if w.min() > 0.05:
                points.append(simplex.point(w))
        return points

    def test_directional_derivative_against_finite_differences(self, grid_space):
        rng = np.random.default_rng(9)
        c = rng.standard_normal(grid_space.ahat)
        f = SplineFunction(grid_space, c)
        h = 1e-6 * 2 * pi
        for x in self._random_interior_points(grid_space, rng, 100):
            u = rng.standard_normal(2)
            u /= np.linalg.norm(u)
            fd = (f.evaluate(x + h * u) - f.evaluate(x - h * u)) / (2 * h)
            an = f.directional_derivative(x, u)
            assert an == pytest.approx(fd, rel=1e-5, abs=1e-7)

    def test_gradient_against_finite_differences(self, grid_space):
        rng = np.random.default_rng(10)
        c = rng.standard_normal(grid_space.ahat)
        f = SplineFunction(grid_space, c)
        h = 1e-6 * 2 * pi
        for x in self._random_interior_points(grid_space, rng, 100):
            grad = f.gradient(x)
            for axis in range(2):
                e = np.zeros(2)
                e[axis] = 1.0
                fd = (f.evaluate(x + h * e) - f.evaluate(x - h * e)) / (2 * h)
                assert grad[axis] == pytest.approx(fd, rel=1e-5, abs=1e-7)


class TestBnet:
    SIMPLEX = Simplex((0, 1, 2), np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 1.0]]))

    def test_pure_vertex_index_sits_on_vertex(self):
        points = dict(bnet_points(self.SIMPLEX, 4))
        assert np.allclose(points[(4, 0, 0)], [0.0, 0.0])

    def test_mixed_index_formula(self):
        points = dict(bnet_points(self.SIMPLEX, 4))
        expected = (2 * self.SIMPLEX.vertices[0] + self.SIMPLEX.vertices[1]
                    + self.SIMPLEX.vertices[2]) / 4
        assert np.allclose(points[(2, 1, 1)], expected)

    def test_degree4_layout_matches_reference_figure(self):
        # Net of a quartic on the triangle (0,0), (2,0), (1,1).
        expected = {
            (4, 0, 0): (0.0, 0.0), (3, 1, 0): (0.5, 0.0), (3, 0, 1): (0.25, 0.25),
            (2, 2, 0): (1.0, 0.0), (2, 1, 1): (0.75, 0.25), (2, 0, 2): (0.5, 0.5),
            (1, 3, 0): (1.5, 0.0), (1, 2, 1): (1.25, 0.25), (1, 1, 2): (1.0, 0.5),
            (1, 0, 3): (0.75, 0.75), (0, 4, 0): (2.0, 0.0), (0, 3, 1): (1.75, 0.25),
            (0, 2, 2): (1.5, 0.5), (0, 1, 3): (1.25, 0.75), (0, 0, 4): (1.0, 1.0),
        }
        points = bnet_points(self.SIMPLEX, 4)
        assert len(points) == 15
        for kappa, point in points:
            assert np.allclose(point, expected[kappa]), kappa


class TestSizes:
    def test_reference_space_sizes(self, grid_space):
        assert grid_space.dhat == 15
        assert grid_space.ahat == 480

    def test_continuity_bounds_checked(self, grid_space):
        tri = grid_space.triangulation
        with pytest.raises(InvalidParam):
            SplineSpace(tri, 4, 4)
        with pytest.raises(InvalidParam):
            SplineSpace(tri, 4, -1)

    def test_basis_row_dense_round_trip(self, grid_space):
        row = grid_space.basis_row([0.1, 0.2])
        dense = row.to_dense()
        c = np.arange(grid_space.ahat, dtype=float)
        assert row.dot(c) == pytest.approx(dense @ c)
