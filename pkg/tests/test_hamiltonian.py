import math

import numpy as np
import pytest

from helpers import random_product_point, random_tangent_vector
from s2xs2.errors import DegreeTooHigh, StepSizeTooLarge
from s2xs2.geometry import symplectic_form
from s2xs2.hamiltonian import (
    FlowParams,
    HamiltonianFunction,
    deform_surface,
    flow_point,
    flow_points,
    hamiltonian_vector_field,
    pushforward,
)
from s2xs2.surfaces import great_torus, lagrangian_defect, volume

FOUR_PI_SQ = 4 * math.pi ** 2

H_HEIGHT = HamiltonianFunction({(0, 0, 1, 0, 0, 0): 1.0})          # z1
H_COUPLED = HamiltonianFunction({(0, 0, 1, 0, 0, 1): 1.0})         # z1 z2
H_MIXED = HamiltonianFunction({(0, 0, 1, 0, 0, 1): 0.3, (1, 0, 0, 0, 0, 0): 0.2})


def random_points(rng, n):
    x = rng.normal(size=(n, 6))
    x[:, :3] /= np.linalg.norm(x[:, :3], axis=1, keepdims=True)
    x[:, 3:] /= np.linalg.norm(x[:, 3:], axis=1, keepdims=True)
    return x


class TestHamiltonianFunction:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        H = HamiltonianFunction({
            (1, 1, 1, 0, 0, 0): 0.4,
            (0, 0, 2, 0, 0, 1): -0.7,
            (0, 0, 0, 0, 0, 0): 3.0,
            (1, 0, 0, 2, 0, 0): 0.2,
        })
        X = rng.normal(size=(50, 6))
        G = H.gradient(X)
        eps = 1e-6
        for j in range(6):
            step = np.zeros(6)
            step[j] = eps
            fd = (H.value(X + step) - H.value(X - step)) / (2 * eps)
            assert np.abs(fd - G[:, j]).max() < 1e-6

    def test_degree_cap(self):
        with pytest.raises(DegreeTooHigh):
            HamiltonianFunction({(2, 2, 0, 0, 0, 0): 1.0})

    def test_zero_collapses(self):
        H = HamiltonianFunction({(1, 0, 0, 0, 0, 0): 0.0})
        assert H.terms == {}


class TestVectorField:
    def test_constant_hamiltonian_gives_zero_field(self):
        rng = np.random.default_rng(3)
        x = random_product_point(rng)
        v = hamiltonian_vector_field(HamiltonianFunction({(0,) * 6: 5.0}), x)
        assert v.norm() == 0.0

    def test_height_field_is_axial_rotation(self):
        rng = np.random.default_rng(4)
        x = random_product_point(rng)
        v = hamiltonian_vector_field(H_HEIGHT, x)
        expected = np.cross([0, 0, 1.0], x.first.coords)
        assert np.abs(v.first - expected).max() < 1e-14
        assert np.abs(v.second).max() == 0.0

    def test_defining_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            x = random_product_point(rng)
            v = random_tangent_vector(rng, x)
            xh = hamiltonian_vector_field(H_MIXED, x)
            lhs = symplectic_form(x, xh, v)
            rhs = float(H_MIXED.gradient(x.ambient[None, :])[0] @ v.ambient)
            assert abs(lhs - rhs) < 1e-10


class TestFlow:
    def test_zero_hamiltonian_is_identity(self):
        rng = np.random.default_rng(6)
        x = random_product_point(rng)
        y = flow_point(HamiltonianFunction.zero(), x, FlowParams(1.0, 32))
        assert np.abs(y.ambient - x.ambient).max() < 1e-15

    def test_height_flow_rotates_first_factor(self):
        x = np.array([[1.0, 0, 0, 0, 1.0, 0]])
        y = flow_points(H_HEIGHT, x, FlowParams.for_time(math.pi / 2))[0]
        # z1 generates counterclockwise rotation about the z-axis at unit speed
        assert np.abs(y[:3] - [0, 1, 0]).max() < 1e-9
        assert np.abs(y[3:] - [0, 1, 0]).max() < 1e-15

    def test_energy_drift_plateaus_below_1e8(self):
        rng = np.random.default_rng(7)
        X = random_points(rng, 16)
        h0 = H_COUPLED.value(X)
        drifts = []
        for steps in (64, 128):
            Y = flow_points(H_COUPLED, X, FlowParams(1.0, steps))
            drifts.append(np.abs(H_COUPLED.value(Y) - h0).max())
        assert drifts[0] < 1e-8
        assert drifts[1] < 1e-8

    def test_points_stay_on_spheres(self):
        rng = np.random.default_rng(8)
        X = random_points(rng, 64)
        Y = flow_points(H_MIXED, X, FlowParams(0.5, 40))
        assert np.abs(np.linalg.norm(Y[:, :3], axis=1) - 1).max() < 1e-12
        assert np.abs(np.linalg.norm(Y[:, 3:], axis=1) - 1).max() < 1e-12

    def test_step_size_guard(self):
        big = HamiltonianFunction({(0, 0, 1, 0, 0, 0): 50.0})
        x = np.array([[1.0, 0, 0, 0, 0, 1.0]])
        with pytest.raises(StepSizeTooLarge):
            flow_points(big, x, FlowParams(0.8, 16))

    def test_flow_params_validation(self):
        with pytest.raises(ValueError):
            FlowParams(1.0, 8)       # too few steps
        with pytest.raises(ValueError):
            FlowParams(2.0, 16)      # dt too large
        assert FlowParams.for_time(0.5).dt <= 0.01


class TestDeformSurface:
    def test_zero_hamiltonian_preserves_volume(self):
        mesh = deform_surface(HamiltonianFunction.zero(), great_torus(), FlowParams(0.5, 40), m=128)
        assert volume(mesh) == pytest.approx(FOUR_PI_SQ, rel=1e-6)

    def test_isometric_flow_preserves_volume(self):
        rigid = deform_surface(H_HEIGHT, great_torus(), FlowParams(0.5, 40), m=128)
        frozen = deform_surface(HamiltonianFunction.zero(), great_torus(), FlowParams(0.5, 40), m=128)
        assert volume(rigid) == pytest.approx(FOUR_PI_SQ, rel=1e-6)
        # identical stencil bias: rotated and frozen meshes agree far tighter
        assert volume(rigid) == pytest.approx(volume(frozen), rel=1e-9)

    def test_coupled_flow_keeps_lagrangian_and_volume_bound(self):
        H = HamiltonianFunction({(0, 0, 1, 0, 0, 1): 0.3})
        mesh = deform_surface(H, great_torus(), FlowParams(0.5, 40), m=128)
        assert lagrangian_defect(mesh) < 1e-6
        assert volume(mesh) >= FOUR_PI_SQ - 1e-3

    def test_mesh_resolution_floor(self):
        with pytest.raises(ValueError):
            deform_surface(H_HEIGHT, great_torus(), FlowParams(0.5, 40), m=32)

    def test_lagrangian_persistence_battery(self):
        rng = np.random.default_rng(9)
        for _ in range(3):
            terms = {}
            for _ in range(3):
                exp = tuple(rng.multinomial(rng.integers(1, 4), np.ones(6) / 6))
                terms[exp] = rng.uniform(-0.3, 0.3)
            H = HamiltonianFunction(terms)
            mesh = deform_surface(H, great_torus(), FlowParams(0.5, 32), m=128)
            assert lagrangian_defect(mesh) < 1e-6


class TestSymplecticity:
    def test_pullback_error_scales_with_dt4(self):
        rng = np.random.default_rng(10)
        x = random_product_point(rng)
        u = random_tangent_vector(rng, x)
        v = random_tangent_vector(rng, x)
        base = symplectic_form(x, u, v)
        errs = []
        for steps in (40, 80):
            params = FlowParams(0.5, steps)
            y = flow_point(H_MIXED, x, params)
            du = pushforward(H_MIXED, x, u, params)
            dv = pushforward(H_MIXED, x, v, params)
            # finite-difference pushforwards are tangent only to O(eps^2)
            moved = symplectic_form_unchecked(y, du, dv)
            errs.append(abs(moved - base))
        assert errs[0] < 0.5 ** 4 / 40 ** 4 * 100 + 1e-7
        assert errs[1] < 1e-7


def symplectic_form_unchecked(x, u, v):
    return float(
        np.dot(x.first.coords, np.cross(u.first, v.first))
        + np.dot(x.second.coords, np.cross(u.second, v.second))
    )
