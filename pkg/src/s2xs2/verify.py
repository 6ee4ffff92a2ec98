"""Verification driver: Monte Carlo averages, quadrature identities, reports.

The quantities under test, for surfaces N and a product torus L:

* the group average of the transversal intersection count,
  integral = vol(G) * E[count] with vol(G) = (8 pi^2)^2;
* the angle-kernel identity  integral = 4 vol(L) * INT_N perim(x) dA(x),
  where perim(x) is the arc length of the ellipse attached to the normal
  plane of N at x (rhs_theorem6);
* the two-sided bounds  4 pi vol(N) vol(L) <= integral <= 16 vol(N) vol(L);
* the deformation chain  16 vol(rho(L)) vol(L) >= integral >= 4 vol(G), whose
  conclusion is vol(rho(L)) >= vol(L) = 4 pi^2 for Hamiltonian deformations.

Statistical acceptance is at z = 3 with explicit standard-error propagation;
purely deterministic identities use relative tolerances.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ChainViolation, ExcessiveDiscards, NotLagrangian, QuadratureNotConverged
from .geometry import orthonormal_pairs, structure_pairing_batch
from .hamiltonian import FlowParams, HamiltonianFunction, deform_surface
from .intersections import _CountingProblem, counts_product_batch
from .rotations import VOL_G, group_matrices
from .sigma import CellInvariants, ellipse_perimeter_batch, sigma_general
from .surfaces import (
    GraphSurface,
    MeshSurface,
    ProductTorusSurface,
    great_torus,
    lagrangian_defect,
    surface_quadrature,
    volume,
)

LAGRANGIAN_GATE = 1e-6
DISCARD_LIMIT = 0.01
Z_SCORE = 3.0
FOUR_PI_SQ = 4.0 * math.pi * math.pi
CHAIN_RHS = 4.0 * VOL_G  # = 256 pi^4


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample mean of the intersection count over Haar samples."""

    mean: float
    stderr: float
    sample_count: int
    discard_count: int

    @property
    def integral(self) -> float:
        """Unnormalized group integral: mean times vol(G)."""
        return self.mean * VOL_G


@dataclass(frozen=True)
class VerificationReport:
    name: str
    lhs: float
    rhs: object            # float, or (lower, upper) for bound reports
    stderr: float
    tolerance: float
    verdict: str           # "pass" | "fail"
    runtime_ms: float
    seed: int | None
    config: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def as_dict(self) -> dict:
        rhs = list(self.rhs) if isinstance(self.rhs, (tuple, list)) else self.rhs
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": rhs,
            "stderr": self.stderr,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "runtime_ms": self.runtime_ms,
            "seed": self.seed,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))


def _mean_stderr(counts):
    n = len(counts)
    mean = math.fsum(counts) / n
    if n > 1:
        var = math.fsum((c - mean) ** 2 for c in counts) / (n - 1)
    else:
        var = 0.0
    return mean, math.sqrt(var / n)


def mc_expected_count(n_surface, l_surface: ProductTorusSurface, samples: int, seed: int,
                      grid: int = 128, batch: int = 64,
                      force_contour: bool = False) -> MonteCarloEstimate:
    """Monte Carlo estimate of E[count(N, g L)] over Haar-distributed g.

    Product-torus N uses the closed-form factor counts; everything else goes
    through the contour counter.  Samples flagged as coaxial, non-transversal
    or grid-unstable are discarded and replaced deterministically (the stream
    index keeps advancing), with the discard rate capped at 1%.
    """
    if not isinstance(l_surface, ProductTorusSurface):
        raise ValueError("L must be a product torus")
    if samples < 1000:
        raise ValueError(f"samples must be >= 1000, got {samples}")
    analytic = isinstance(n_surface, ProductTorusSurface) and not force_contour
    problem = None if analytic else _CountingProblem(n_surface, l_surface, grid)

    counts = []
    discards = 0
    cursor = 0
    while len(counts) < samples:
        todo = min(batch, samples - len(counts))
        r1, r2 = group_matrices(seed, cursor, todo)
        cursor += todo
        if analytic:
            vals, coaxial = counts_product_batch(n_surface, r1, r2, l_surface)
            for c, bad in zip(vals, coaxial):
                if bad:
                    discards += 1
                else:
                    counts.append(float(c))
        else:
            for status, c, _, _ in problem.run_batch(r1, r2):
                if status == "ok":
                    counts.append(float(c))
                else:
                    discards += 1
        if discards > DISCARD_LIMIT * samples + 100:
            raise ExcessiveDiscards(f"{discards} discards against {samples} requested samples")
    counts = counts[:samples]
    if discards > DISCARD_LIMIT * samples:
        raise ExcessiveDiscards(f"{discards}/{samples} samples discarded")
    mean, stderr = _mean_stderr(counts)
    return MonteCarloEstimate(mean, stderr, samples, discards)


def _surface_defect(n_surface) -> float:
    return lagrangian_defect(n_surface, 4096)


def _perimeter_integral(n_surface, m: int) -> float:
    """INT_N perim(semiaxes(x)) dA by composite quadrature on the chart grids."""
    total = []
    for block in surface_quadrature(n_surface, m):
        t1, t2, bad = orthonormal_pairs(block["du"], block["dv"])
        c = structure_pairing_batch("J'", block["points"], t1, t2)
        s = np.sqrt(np.maximum(0.0, 1.0 - np.minimum(np.abs(c), 1.0) ** 2))
        per = ellipse_perimeter_batch((1.0 + s) / 2.0, (1.0 - s) / 2.0)
        weights = np.where(bad, 0.0, block["measure"])
        total.append(float(np.sum(weights * per)))
    return math.fsum(total)


def rhs_theorem6(n_surface, l_surface: ProductTorusSurface, m: int | None = None) -> float:
    """Kernel side of the intersection identity: 4 vol(L) INT_N perim(x) dA(x).

    For parametric N the quadrature is recomputed at grid 2m and the two
    levels must agree to 1e-6 relative; a mesh is integrated on its own node
    lattice (its resolution is part of the data).
    """
    if not isinstance(l_surface, ProductTorusSurface):
        raise ValueError("L must be a product torus")
    defect = _surface_defect(n_surface)
    if defect >= LAGRANGIAN_GATE:
        raise NotLagrangian(f"Lagrangian defect {defect:.3e} >= {LAGRANGIAN_GATE:.1e}")
    vol_l = volume(l_surface)
    if isinstance(n_surface, MeshSurface):
        return 4.0 * vol_l * _perimeter_integral(n_surface, n_surface.m)
    if m is None:
        m = 1024 if isinstance(n_surface, GraphSurface) else 64
    coarse = _perimeter_integral(n_surface, m)
    fine = _perimeter_integral(n_surface, 2 * m)
    if abs(fine - coarse) > 1e-6 * max(abs(fine), 1e-300):
        raise QuadratureNotConverged(
            f"surface quadrature at grids {m} and {2 * m} differ by "
            f"{abs(fine - coarse) / abs(fine):.3e} relative"
        )
    return 4.0 * vol_l * fine


def _normal_invariant_samples(surface, m: int):
    """Quadrature weights and normal-plane angle pairs (A, B) over a surface.

    The normal-plane angles are obtained from the tangent-plane pairings via
    the complement map (A, B) -> (pi - A, B), which represents the same
    unoriented plane orbit as an explicit orthogonal-complement construction
    (the kernel is invariant under the joint flip (A, B) -> (pi - A, pi - B)).
    """
    angles = []
    weights = []
    for block in surface_quadrature(surface, m):
        t1, t2, bad = orthonormal_pairs(block["du"], block["dv"])
        c_a = np.clip(structure_pairing_batch("J'", block["points"], t1, t2), -1.0, 1.0)
        c_b = np.clip(structure_pairing_batch("J", block["points"], t1, t2), -1.0, 1.0)
        a_n = np.arccos(-c_a)
        b_n = np.arccos(c_b)
        keep = (block["measure"] > 0.0) & ~bad
        angles.append(np.stack([a_n[keep], b_n[keep]], axis=1))
        weights.append(block["measure"][keep])
    return np.concatenate(angles, axis=0), np.concatenate(weights)


def kernel_rhs_general(n_surface, l_surface, m: int = 16,
                       kernel_rel_tol: float = 1e-6, kernel_max_level: int = 4096) -> float:
    """General kernel side: double surface quadrature of the angle kernel.

    Works for any supported surface pair (no Lagrangian or product hypothesis);
    the kernel is evaluated once per distinct invariant pair, so surfaces with
    constant invariants collapse to a single evaluation.  Slow path.
    """
    ang_n, w_n = _normal_invariant_samples(n_surface, m)
    ang_l, w_l = _normal_invariant_samples(l_surface, m)
    uniq_n, inv_n = np.unique(np.round(ang_n, 9), axis=0, return_inverse=True)
    uniq_l, inv_l = np.unique(np.round(ang_l, 9), axis=0, return_inverse=True)
    mass_n = np.bincount(inv_n, weights=w_n, minlength=len(uniq_n))
    mass_l = np.bincount(inv_l, weights=w_l, minlength=len(uniq_l))
    total = []
    for (a_n, b_n), wn in zip(uniq_n, mass_n):
        for (a_l, b_l), wl in zip(uniq_l, mass_l):
            inv = CellInvariants(0.5 * (a_n + b_n), 0.5 * (a_n - b_n),
                                 0.5 * (a_l + b_l), 0.5 * (a_l - b_l))
            total.append(wn * wl * sigma_general(inv, rel_tol=kernel_rel_tol,
                                                 max_level=kernel_max_level))
    return math.fsum(total)


def verify_poincare(n_surface, l_surface, samples: int, seed: int,
                    count_grid: int = 128, quad_grid: int | None = None,
                    rel_quad_tol: float = 1e-3, force_contour: bool = False,
                    name: str = "poincare-identity") -> VerificationReport:
    """Identity report: Monte Carlo integral against the kernel quadrature."""
    t0 = time.perf_counter()
    est = mc_expected_count(n_surface, l_surface, samples, seed,
                            grid=count_grid, force_contour=force_contour)
    rhs = rhs_theorem6(n_surface, l_surface, m=quad_grid)
    tol = Z_SCORE * est.stderr * VOL_G + rel_quad_tol * abs(rhs)
    verdict = "pass" if abs(est.integral - rhs) <= tol else "fail"
    return VerificationReport(
        name=name,
        lhs=est.integral,
        rhs=rhs,
        stderr=est.stderr,
        tolerance=tol,
        verdict=verdict,
        runtime_ms=(time.perf_counter() - t0) * 1e3,
        seed=seed,
        config={
            "samples": samples,
            "count_grid": count_grid,
            "mean": est.mean,
            "discards": est.discard_count,
        },
    )


def verify_prop4_bounds(n_surface, l_surface, samples: int, seed: int,
                        count_grid: int = 128, force_contour: bool = False,
                        quad_rel_tol: float = 1e-6,
                        name: str = "intersection-bounds") -> VerificationReport:
    """Bound report: 4 pi vol(N) vol(L) <= integral <= 16 vol(N) vol(L).

    Besides the z = 3 statistical band, the verdict allows quad_rel_tol of the
    upper bound for the deterministic volume-quadrature error, which decides
    the equality cases where the count variance vanishes.
    """
    t0 = time.perf_counter()
    defect = _surface_defect(n_surface)
    if defect >= LAGRANGIAN_GATE:
        raise NotLagrangian(f"Lagrangian defect {defect:.3e} >= {LAGRANGIAN_GATE:.1e}")
    est = mc_expected_count(n_surface, l_surface, samples, seed,
                            grid=count_grid, force_contour=force_contour)
    vol_n = volume(n_surface)
    vol_l = volume(l_surface)
    lower = 4.0 * math.pi * vol_n * vol_l
    upper = 16.0 * vol_n * vol_l
    stat = Z_SCORE * est.stderr * VOL_G
    slack = quad_rel_tol * upper
    verdict = "pass" if (lower - stat - slack <= est.integral <= upper + stat + slack) else "fail"
    return VerificationReport(
        name=name,
        lhs=est.integral,
        rhs=(lower, upper),
        stderr=est.stderr,
        tolerance=stat,
        verdict=verdict,
        runtime_ms=(time.perf_counter() - t0) * 1e3,
        seed=seed,
        config={
            "samples": samples,
            "count_grid": count_grid,
            "vol_n": vol_n,
            "vol_l": vol_l,
            "mean": est.mean,
            "discards": est.discard_count,
            "gap_lower": (est.integral - lower) / upper,
            "gap_upper": (upper - est.integral) / upper,
        },
    )


def verify_main_chain(hamiltonian: HamiltonianFunction, flow_time: float,
                      samples: int, seed: int, m: int = 128,
                      dt_target: float = 0.0125, count_grid: int = 128,
                      quad_rel_tol: float = 1e-6,
                      raise_on_violation: bool = False,
                      name: str = "volume-chain") -> VerificationReport:
    """Deformation chain report for the great torus L and a Hamiltonian flow.

    Computes rho(L), then checks A >= B >= C and vol(rho(L)) >= 4 pi^2 - 1e-3,
    where A = 16 vol(rho(L)) vol(L), B is the Monte Carlo group integral of
    the intersection count of (rho(L), L), and C = 4 vol(G) = 256 pi^4.  The
    inequality checks carry the z = 3 statistical band plus quad_rel_tol of C
    for the deterministic mesh-volume error, which decides the saturated
    (isometric) cases where the count variance vanishes.
    """
    t0 = time.perf_counter()
    torus = great_torus()
    params = FlowParams.for_time(flow_time, dt_target)
    deformed = deform_surface(hamiltonian, torus, params, m=m)
    vol_l = volume(torus)
    vol_rho = volume(deformed)
    defect = lagrangian_defect(deformed)
    est = mc_expected_count(deformed, torus, samples, seed, grid=count_grid)
    a = 16.0 * vol_rho * vol_l
    b = est.integral
    c = CHAIN_RHS
    stat = Z_SCORE * est.stderr * VOL_G
    slack = quad_rel_tol * c
    checks = {
        "a_ge_b": a >= b - stat - slack,
        "b_ge_c": b >= c - stat - slack,
        "volume_min": vol_rho >= FOUR_PI_SQ - 1e-3,
        "lagrangian": defect < LAGRANGIAN_GATE,
    }
    verdict = "pass" if all(checks.values()) else "fail"
    report = VerificationReport(
        name=name,
        lhs=vol_rho,
        rhs=FOUR_PI_SQ,
        stderr=est.stderr,
        tolerance=1e-3,
        verdict=verdict,
        runtime_ms=(time.perf_counter() - t0) * 1e3,
        seed=seed,
        config={
            "samples": samples,
            "mesh": m,
            "steps": params.steps,
            "flow_time": flow_time,
            "a": a,
            "b": b,
            "c": c,
            "stat_tolerance": stat,
            "defect": defect,
            "mean": est.mean,
            "discards": est.discard_count,
            "checks": checks,
        },
    )
    if raise_on_violation and verdict == "fail":
        raise ChainViolation(f"chain violated: A={a}, B={b}, C={c}", a, b, c)
    return report
