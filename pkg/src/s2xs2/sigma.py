"""Rotation-averaged angle kernel for pairs of 2-planes, and ellipse arc length.

The kernel averages the wedge-norm angle of two planes over the isotropy
torus.  With the planes put into angular normal form (one plane given by its
orthogonal-complement basis u'_i, the other directly by v_i),

    u'_1 = sin(t1) e1 + cos(t1) e3,    u'_2 = sin(t2) e2 + cos(t2) e4,
    v_1  = cos(s1) e1 - sin(s1) e3,    v_2  = cos(s2) e2 - sin(s2) e4,

the averaged pairing of the rotated wedges reduces algebraically to

    |K + P cos(phi) cos(psi) + Q sin(phi) sin(psi)|

for constants K, P, Q read off the basis components (see _kernel_coefficients).
The double integral over (phi, psi) in [0, 2pi)^2 is evaluated by a
tensor-product midpoint rule on dyadically refined grids with Richardson
extrapolation; kinks of the absolute value are measure zero and average out.

For a plane pair in which the first plane is Lagrangian and the second is the
normal plane of a product of curves, K = 0, P = cos^2, Q = sin^2, and the
integral equals 4 times the arc length of the ellipse with semiaxes
(sin^2, cos^2); the test suite sweeps that identity against the independent
AGM/quadrature perimeter below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import NegativeAxis, NotLagrangianNormal, QuadratureNotConverged
from .geometry import Bivector, ProductPoint, TangentPlane, structure_pairing

LAGRANGIAN_TOL = 1e-6
DEGENERATE_AXIS = 1e-8

_LEVELS = (512, 1024, 2048, 4096, 8192)
_CACHE_DIGITS = 12
_sigma_cache: dict = {}


@dataclass(frozen=True)
class CellInvariants:
    """Angle invariants (theta1, theta2, tau1, tau2) of a plane pair.

    The canonical range is 0 <= theta1 +- theta2 <= pi (same for tau); values
    outside it are accepted since the kernel extends smoothly and several
    reference evaluations use out-of-range representatives.
    """

    theta1: float
    theta2: float
    tau1: float
    tau2: float

    @property
    def in_cell(self) -> bool:
        return (
            0.0 <= self.theta1 + self.theta2 <= math.pi
            and 0.0 <= self.theta1 - self.theta2 <= math.pi
            and 0.0 <= self.tau1 + self.tau2 <= math.pi
            and 0.0 <= self.tau1 - self.tau2 <= math.pi
        )


@dataclass(frozen=True)
class EllipseSemiaxes:
    a: float
    b: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise NegativeAxis(f"semiaxes must be nonnegative, got ({self.a}, {self.b})")


def ellipse_perimeter(a: float, b: float) -> float:
    """Arc length of x^2/a^2 + y^2/b^2 = 1 via the AGM form of the complete
    elliptic integral of the second kind.

    Continuous in (a, b) including the degenerate cases: a circle of radius r
    gives 2 pi r, a segment (one axis zero) gives 4 times the other axis.
    """
    if a < 0 or b < 0:
        raise NegativeAxis(f"semiaxes must be nonnegative, got ({a}, {b})")
    big, small = (a, b) if a >= b else (b, a)
    if big < 1e-300:
        return 0.0
    if small / big < DEGENERATE_AXIS:
        # AGM loses accuracy here; the limit is exact
        return 4.0 * big
    m = 1.0 - (small / big) ** 2
    x, y, c = 1.0, math.sqrt(1.0 - m), math.sqrt(m)
    S = 0.5 * c * c
    p = 1.0
    for _ in range(64):
        x, y, c = 0.5 * (x + y), math.sqrt(x * y), 0.5 * (x - y)
        S += p * c * c
        p *= 2.0
        if c < 1e-18:
            break
    K = math.pi / (2.0 * x)
    return 4.0 * big * K * (1.0 - S)


def ellipse_perimeter_batch(a, b):
    """Vectorized AGM perimeter for equal-shape arrays of semiaxes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise NegativeAxis("semiaxes must be nonnegative")
    big = np.maximum(a, b)
    small = np.minimum(a, b)
    safe_big = np.where(big > 0, big, 1.0)
    degenerate = small / safe_big < DEGENERATE_AXIS
    m = 1.0 - (np.where(degenerate, 0.0, small) / safe_big) ** 2
    x = np.ones_like(m)
    y = np.sqrt(1.0 - m)
    S = 0.5 * m
    p = 1.0
    # quadratic convergence: 16 fixed iterations cover the admissible range
    for _ in range(16):
        c = 0.5 * (x - y)
        x, y = 0.5 * (x + y), np.sqrt(x * y)
        S += p * (c * c)
        p *= 2.0
    K = np.pi / (2.0 * x)
    out = 4.0 * big * K * (1.0 - S)
    return np.where(degenerate, 4.0 * big, out)


def ellipse_perimeter_quadrature(a: float, b: float) -> float:
    """Independent cross-check: adaptive quadrature of the arc-length integral."""
    if a < 0 or b < 0:
        raise NegativeAxis(f"semiaxes must be nonnegative, got ({a}, {b})")

    def speed(t):
        return math.hypot(a * math.cos(t), b * math.sin(t))

    val, _ = integrate.quad(speed, 0.0, math.pi / 2, epsabs=1e-13, epsrel=1e-13, limit=500)
    return 4.0 * val


def _normal_form_bases(inv: CellInvariants):
    """Explicit bases in angular normal form (4-dimensional model coordinates)."""
    t1, t2, s1, s2 = inv.theta1, inv.theta2, inv.tau1, inv.tau2
    u1 = np.array([math.sin(t1), 0.0, math.cos(t1), 0.0])
    u2 = np.array([0.0, math.sin(t2), 0.0, math.cos(t2)])
    v1 = np.array([math.cos(s1), 0.0, -math.sin(s1), 0.0])
    v2 = np.array([0.0, math.cos(s2), 0.0, -math.sin(s2)])
    return u1, u2, v1, v2


def _kernel_coefficients(inv: CellInvariants):
    """Constants (K, P, Q) of the reduced integrand.

    Expanding the Gram determinant of the rotated bases
    (phi in the e1-e2 plane against u', psi in the e3-e4 plane against v),
    the cos^2 and sin^2 terms collapse and only three constants survive:
    det = K + P cos(phi) cos(psi) + Q sin(phi) sin(psi).
    """
    u1, u2, v1, v2 = _normal_form_bases(inv)
    s1, c1 = u1[0], u1[2]
    s2, c2 = u2[1], u2[3]
    ct1, st1 = v1[0], -v1[2]
    ct2, st2 = v2[1], -v2[3]
    K = s1 * s2 * ct1 * ct2 + c1 * c2 * st1 * st2
    P = -(s1 * c2 * ct1 * st2 + c1 * s2 * st1 * ct2)
    Q = s1 * c2 * st1 * ct2 + c1 * s2 * ct1 * st2
    return K, P, Q


def _midpoint_level(K: float, P: float, Q: float, n: int) -> float:
    h = 2.0 * np.pi / n
    t = (np.arange(n) + 0.5) * h
    cos_t, sin_t = np.cos(t), np.sin(t)
    chunk = max(1, (1 << 22) // n)
    parts = []
    for i in range(0, n, chunk):
        M = K + P * np.outer(cos_t[i:i + chunk], cos_t) + Q * np.outer(sin_t[i:i + chunk], sin_t)
        parts.append(float(np.abs(M, out=M).sum()))
    return math.fsum(parts) * h * h


def sigma_general(inv: CellInvariants, rel_tol: float = 1e-8,
                  max_level: int = _LEVELS[-1]) -> float:
    """Rotation-averaged angle kernel for the plane pair with the given invariants.

    Tensor-product midpoint quadrature over the (phi, psi) torus, refined
    dyadically; successive Richardson extrapolations must agree to rel_tol or
    QuadratureNotConverged is raised.  Values lie in [0, (2 pi)^2].
    """
    K, P, Q = _kernel_coefficients(inv)
    lo, hi = sorted((abs(P), abs(Q)))
    key = (round(abs(K), _CACHE_DIGITS), round(lo, _CACHE_DIGITS),
           round(hi, _CACHE_DIGITS), rel_tol, max_level)
    hit = _sigma_cache.get(key)
    if hit is not None:
        return hit

    levels = [n for n in _LEVELS if n <= max_level]
    if len(levels) < 3:
        raise ValueError("max_level too small for a refinement check")
    I_prev = _midpoint_level(K, P, Q, levels[0])
    I_cur = _midpoint_level(K, P, Q, levels[1])
    R_prev = (4.0 * I_cur - I_prev) / 3.0
    for n in levels[2:]:
        I_prev, I_cur = I_cur, _midpoint_level(K, P, Q, n)
        R = (4.0 * I_cur - I_prev) / 3.0
        if abs(R - R_prev) <= rel_tol * max(abs(R), 1.0):
            _sigma_cache[key] = R
            return R
        R_prev = R
    raise QuadratureNotConverged(
        f"kernel quadrature for K={K:.6g}, P={P:.6g}, Q={Q:.6g} did not reach "
        f"relative agreement {rel_tol:.1e} by level {levels[-1]}"
    )


def sigma_general_reference(inv: CellInvariants, n: int = 256) -> float:
    """Literal evaluation of the averaged wedge pairing on an n x n midpoint grid.

    Builds the rotated bases and their wedges explicitly; used to validate the
    algebraic reduction behind sigma_general, not for production accuracy.
    """
    u1, u2, v1, v2 = _normal_form_bases(inv)
    h = 2.0 * np.pi / n
    t = (np.arange(n) + 0.5) * h
    wedge_u = np.empty((n, 6))
    wedge_v = np.empty((n, 6))
    for i, angle in enumerate(t):
        ca, sa = math.cos(angle), math.sin(angle)
        a = np.array([[ca, sa, 0, 0], [-sa, ca, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
        b = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, ca, sa], [0, 0, -sa, ca]])
        wedge_u[i] = Bivector.wedge(a @ u1, a @ u2).components
        wedge_v[i] = Bivector.wedge(b @ v1, b @ v2).components
    return float(np.abs(wedge_u @ wedge_v.T).sum()) * h * h


def semiaxes_from_normal_plane(x: ProductPoint, plane: TangentPlane) -> EllipseSemiaxes:
    """Ellipse semiaxes attached to the normal plane of a Lagrangian tangent plane.

    With s the sine of the plane's J' angle (which equals the J' angle of its
    orthogonal complement), returns ((1+s)/2, (1-s)/2).  The input must be the
    normal plane of a Lagrangian plane, i.e. itself Lagrangian for J.
    """
    c_j = abs(structure_pairing(plane, "J"))
    if c_j > LAGRANGIAN_TOL:
        raise NotLagrangianNormal(
            f"plane pairs with J at {c_j:.3e}; not the normal of a Lagrangian plane"
        )
    c = abs(structure_pairing(plane, "J'"))
    s = math.sqrt(max(0.0, 1.0 - min(c, 1.0) ** 2))
    return EllipseSemiaxes((1.0 + s) / 2.0, (1.0 - s) / 2.0)


def sigma_lagrangian_product(semiaxes: EllipseSemiaxes) -> float:
    """Kernel value for a Lagrangian plane against a product-of-curves normal plane.

    Equals 4 times the ellipse arc length; over the admissible semiaxes family
    (a + b = 1) the range is [4 pi, 16], with the minimum at the circle
    (1/2, 1/2) and the maximum at the degenerate cases (1, 0) and (0, 1).
    """
    return 4.0 * ellipse_perimeter(semiaxes.a, semiaxes.b)


def plane_cell_angles(plane: TangentPlane) -> tuple[float, float]:
    """Signed angular coordinates (A, B) of an oriented plane.

    A = arccos <J' t1, t2> and B = arccos <J t1, t2>, both in [0, pi].  For a
    plane in angular normal form with parameters (t1, t2) these are t1 + t2
    and t1 - t2.
    """
    ca = min(1.0, max(-1.0, structure_pairing(plane, "J'")))
    cb = min(1.0, max(-1.0, structure_pairing(plane, "J")))
    return float(np.arccos(ca)), float(np.arccos(cb))


def invariants_from_normal_planes(normal_n: TangentPlane, normal_l: TangentPlane) -> CellInvariants:
    """Cell invariants of a surface pair from their normal planes at a point pair."""
    a_n, b_n = plane_cell_angles(normal_n)
    a_l, b_l = plane_cell_angles(normal_l)
    return CellInvariants(
        theta1=0.5 * (a_n + b_n),
        theta2=0.5 * (a_n - b_n),
        tau1=0.5 * (a_l + b_l),
        tau2=0.5 * (a_l - b_l),
    )
