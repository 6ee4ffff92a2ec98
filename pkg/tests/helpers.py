"""Shared construction helpers for the test suite."""

import numpy as np

from s2xs2.geometry import ProductPoint, SpherePoint, TangentVector, plane_from_invariants


def random_sphere_point(rng):
    v = rng.normal(size=3)
    return SpherePoint(v / np.linalg.norm(v))


def random_product_point(rng):
    return ProductPoint(random_sphere_point(rng), random_sphere_point(rng))


def random_tangent_vector(rng, x, scale=1.0):
    v1 = np.cross(x.first.coords, rng.normal(size=3))
    v2 = np.cross(x.second.coords, rng.normal(size=3))
    return TangentVector(scale * v1, scale * v2)


def random_lagrangian_plane(rng, x):
    """Uniformly scattered Lagrangian plane: cell angle plus isotropy rotations."""
    theta = rng.uniform(np.pi / 4, 3 * np.pi / 4)
    phi, psi = rng.uniform(0.0, 2 * np.pi, size=2)
    return plane_from_invariants(x, theta, theta - np.pi / 2, phi, psi)


def projector(plane):
    m = plane.matrix
    return m @ m.T
