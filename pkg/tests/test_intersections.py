import math

import numpy as np
import pytest

from s2xs2.errors import CoaxialCircles
from s2xs2.hamiltonian import FlowParams, HamiltonianFunction, deform_surface
from s2xs2.intersections import (
    circle_circle_count,
    circle_circle_points,
    count_product_product,
    count_surface_product,
    counts_product_batch,
)
from s2xs2.rotations import GroupElement, Rotation, group_element_at, group_matrices
from s2xs2.surfaces import Circle, ProductTorusSurface, anti_diagonal, great_torus, latitude_torus


def bisection_circle_count(c1: Circle, c2: Circle, n=4096):
    """Independent oracle: count sign changes of the second plane constraint
    along a fine parameterization of the first circle."""
    s = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    f = c1.points(s) @ c2.axis - c2.offset
    signs = f > 0
    return int(np.count_nonzero(signs != np.roll(signs, 1)))


class TestCircleCircle:
    def test_two_great_circles(self):
        assert circle_circle_count(Circle([0, 0, 1], 0), Circle([1, 0, 0], 0)) == 2

    def test_disjoint_caps_on_antiparallel_axes(self):
        assert circle_circle_count(Circle([0, 0, 1], 0.9), Circle([0, 0, -1], 0.9)) == 0

    def test_parallel_distinct_planes(self):
        assert circle_circle_count(Circle([0, 0, 1], 0.2), Circle([0, 0, 1], 0.6)) == 0

    def test_mid_latitude_pair_against_discriminant_and_bisection(self):
        c1 = Circle([0, 0, 1], 0.5)
        c2 = Circle([1, 0, 0], 0.5)
        assert circle_circle_count(c1, c2) == 2
        assert bisection_circle_count(c1, c2) == 2

    def test_random_pairs_match_bisection_oracle(self):
        rng = np.random.default_rng(77)
        for _ in range(200):
            a1 = rng.normal(size=3)
            a2 = rng.normal(size=3)
            c1 = Circle(a1, rng.uniform(-0.95, 0.95))
            c2 = Circle(a2, rng.uniform(-0.95, 0.95))
            try:
                count = circle_circle_count(c1, c2)
            except CoaxialCircles:
                continue
            assert count == bisection_circle_count(c1, c2)

    def test_points_lie_on_both_circles(self):
        c1 = Circle([0.2, -0.3, 0.93], 0.4)
        c2 = Circle([0.9, 0.1, -0.4], -0.2)
        pts = circle_circle_points(c1, c2)
        assert len(pts) == circle_circle_count(c1, c2)
        for p in pts:
            assert abs(np.linalg.norm(p) - 1) < 1e-12
            assert abs(p @ c1.axis - c1.offset) < 1e-12
            assert abs(p @ c2.axis - c2.offset) < 1e-12

    def test_coincident_plane_raises(self):
        with pytest.raises(CoaxialCircles):
            circle_circle_count(Circle([0, 0, 1], 0.5), Circle([0, 0, 1], 0.5))
        with pytest.raises(CoaxialCircles):
            circle_circle_count(Circle([0, 0, 1], 0.5), Circle([0, 0, -1], -0.5))


class TestProductProduct:
    def test_great_pair_counts_four(self):
        g = group_element_at(7, 0)
        res = count_product_product(great_torus(), g, great_torus())
        assert res.count == 4
        assert len(res.points) == 4
        assert res.min_transversality > 1e-8

    def test_points_lie_on_both_surfaces(self):
        g = group_element_at(13, 2)
        n = latitude_torus(0.3, -0.2)
        l = latitude_torus(0.1, 0.4)
        res = count_product_product(n, g, l)
        moved1 = l.circle1.transform(g.first)
        moved2 = l.circle2.transform(g.second)
        for p in res.points:
            assert abs(p.first.coords @ n.circle1.axis - n.circle1.offset) < 1e-8
            assert abs(p.second.coords @ n.circle2.axis - n.circle2.offset) < 1e-8
            assert abs(p.first.coords @ moved1.axis - moved1.offset) < 1e-8
            assert abs(p.second.coords @ moved2.axis - moved2.offset) < 1e-8

    def test_antipodal_caps_give_zero(self):
        n = latitude_torus(0.9, 0.9)
        l = latitude_torus(0.9, 0.9)
        flip = Rotation.from_axis_angle([1, 0, 0], math.pi)
        g = GroupElement(flip, flip)
        assert count_product_product(n, g, l).count == 0

    def test_identity_on_equal_tori_is_coaxial(self):
        with pytest.raises(CoaxialCircles):
            count_product_product(great_torus(), GroupElement.identity(), great_torus())

    def test_batch_matches_scalar(self):
        n = latitude_torus(0.5, 0.5)
        l = great_torus()
        r1, r2 = group_matrices(21, 0, 200)
        counts, coaxial = counts_product_batch(n, r1, r2, l)
        assert not coaxial.any()
        for k in (0, 17, 63, 199):
            g = group_element_at(21, k)
            assert counts[k] == count_product_product(n, g, l).count


class TestContourCounter:
    def test_antidiagonal_against_split_axes(self):
        n = anti_diagonal()
        l = ProductTorusSurface(Circle([0, 0, 1], 0), Circle([1, 0, 0], 0))
        res = count_surface_product(n, GroupElement.identity(), l)
        assert res.count == 2
        found = sorted(round(p.first.coords[1]) for p in res.points)
        assert found == [-1, 1]  # z = -e_y and z = +e_y
        for p in res.points:
            assert np.abs(np.abs(p.first.coords) - [0, 1, 0]).max() < 1e-8
            assert np.abs(p.second.coords + p.first.coords).max() < 1e-8

    def test_grid_floor_enforced(self):
        with pytest.raises(ValueError):
            count_surface_product(anti_diagonal(), group_element_at(1, 0), great_torus(), grid=64)

    def test_undeformed_mesh_counts_four(self):
        mesh = deform_surface(HamiltonianFunction.zero(), great_torus(), FlowParams(0.5, 40), m=64)
        for k in range(5):
            g = group_element_at(33, k)
            res = count_surface_product(mesh, g, great_torus())
            assert res.count == 4

    def test_contour_agrees_with_analytic_on_product_tori(self):
        n = latitude_torus(0.4, -0.3)
        l = latitude_torus(0.2, 0.1)
        for k in range(40):
            g = group_element_at(71, k)
            analytic = count_product_product(n, g, l).count
            contour = count_surface_product(n, g, l).count
            assert contour == analytic

    def test_group_action_symmetry(self):
        n = latitude_torus(0.25, 0.55)
        l = great_torus()
        for k in range(10):
            g = group_element_at(101, k)
            direct = count_product_product(n, g, l).count
            moved = count_product_product(n.transform(g.inverse()), GroupElement.identity(), l)
            assert moved.count == direct
