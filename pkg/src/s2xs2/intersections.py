"""Transversal intersection counting against products of circles.

For a product torus L and a group element g, a point x of a surface N lies on
g L iff the two scalar residuals

    f1(u, v) = <N1(u, v), g1 n1> - c1,      f2(u, v) = <N2(u, v), g2 n2> - c2

vanish, where (n_i, c_i) are the circle axes/offsets of L.  Product-torus N
admits a closed-form count (each factor pair is a circle-circle intersection
on a sphere); every other surface is counted by marching-squares extraction
of the f1 = 0 contour on a chart grid, sign-change detection of f2 along the
contour segments, two-variable Newton refinement, ambient deduplication, and
a transversality gate.  Counts are recomputed on the doubled grid and any
disagreement is reported as GridUnstable rather than silently resolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoaxialCircles, GridUnstable, NonTransversalSample
from .geometry import ProductPoint, orthonormal_pairs, subspace_angle
from .rotations import GroupElement
from .surfaces import TWO_PI, Circle, GraphSurface, ProductTorusSurface

COAXIAL_TOL = 1e-12
SAME_PLANE_TOL = 1e-9
DEDUP_RADIUS = 1e-6
NEWTON_TOL = 1e-11
RESIDUAL_ACCEPT = 1e-10
TRANSVERSALITY_MIN = 1e-8
MIN_COUNT_GRID = 128
GRAPH_COUNT_BAND = math.pi / 2 + 0.1  # per-chart seed band; the two bands cover the sphere


@dataclass(frozen=True)
class IntersectionResult:
    """Transversal intersection count with the found points.

    min_transversality is the smallest wedge angle between the tangent planes
    of the two surfaces over the found points (1.0 when there are none).
    """

    count: int
    points: tuple
    min_transversality: float


# ---------------------------------------------------------------------------
# analytic circle pair counting
# ---------------------------------------------------------------------------

def _circle_pair_data(c1: Circle, c2: Circle):
    gamma = float(np.dot(c1.axis, c2.axis))
    if abs(gamma) > 1.0 - COAXIAL_TOL:
        # parallel axes: coincident planes have no point count; distinct
        # parallel planes meet the sphere in disjoint circles
        sign = 1.0 if gamma > 0 else -1.0
        if abs(c2.offset - sign * c1.offset) <= SAME_PLANE_TOL:
            raise CoaxialCircles(f"coincident circle planes (gamma = {gamma!r})")
        return gamma, -math.inf
    disc = 1.0 - (c1.offset ** 2 + c2.offset ** 2 - 2.0 * c1.offset * c2.offset * gamma) / (1.0 - gamma ** 2)
    return gamma, disc


def circle_circle_count(c1: Circle, c2: Circle) -> int:
    """0, 1 or 2 intersection points of two circles on the unit sphere."""
    _, disc = _circle_pair_data(c1, c2)
    if disc > 0.0:
        return 2
    if disc == 0.0:
        return 1
    return 0


def circle_circle_points(c1: Circle, c2: Circle):
    """The intersection points (possibly empty) as unit 3-vectors."""
    gamma, disc = _circle_pair_data(c1, c2)
    if disc < 0.0:
        return []
    denom = 1.0 - gamma ** 2
    alpha = (c1.offset - c2.offset * gamma) / denom
    beta = (c2.offset - c1.offset * gamma) / denom
    base = alpha * c1.axis + beta * c2.axis
    if disc == 0.0:
        return [base / np.linalg.norm(base)]
    out_of_plane = math.sqrt(disc / denom) * np.cross(c1.axis, c2.axis)
    return [base + out_of_plane, base - out_of_plane]


def _circle_tangent(circle_axis, point):
    t = np.cross(circle_axis, point)
    return t / np.linalg.norm(t)


def _factor_tangent_rows(axis1, axis2, p, q):
    z = np.zeros(3)
    return np.stack([
        np.concatenate([_circle_tangent(axis1, p), z]),
        np.concatenate([z, _circle_tangent(axis2, q)]),
    ])


def count_product_product(n_surface: ProductTorusSurface, g: GroupElement,
                          l_surface: ProductTorusSurface) -> IntersectionResult:
    """Closed-form count for two product tori: the factor counts multiply."""
    moved1 = l_surface.circle1.transform(g.first)
    moved2 = l_surface.circle2.transform(g.second)
    pts1 = circle_circle_points(n_surface.circle1, moved1)
    pts2 = circle_circle_points(n_surface.circle2, moved2)
    points = []
    min_trans = 1.0
    for p in pts1:
        for q in pts2:
            x = ProductPoint.from_ambient(np.concatenate([p, q]))
            tn = _factor_tangent_rows(n_surface.circle1.axis, n_surface.circle2.axis, p, q)
            tl = _factor_tangent_rows(moved1.axis, moved2.axis, p, q)
            min_trans = min(min_trans, subspace_angle(tn, tl))
            points.append(x)
    return IntersectionResult(len(points), tuple(points), min_trans)


def counts_product_batch(n_surface: ProductTorusSurface, r1, r2,
                         l_surface: ProductTorusSurface):
    """Vectorized factor-count product over rotation batches (r1, r2: (S, 3, 3)).

    Returns (counts, coaxial_mask); coaxial samples carry count 0 and must be
    discarded by the caller.
    """
    counts = np.ones(r1.shape[0], dtype=int)
    coaxial = np.zeros(r1.shape[0], dtype=bool)
    for cn, cl, rot in ((n_surface.circle1, l_surface.circle1, r1),
                        (n_surface.circle2, l_surface.circle2, r2)):
        axes = rot @ cl.axis
        gamma = axes @ cn.axis
        parallel = np.abs(gamma) > 1.0 - COAXIAL_TOL
        same_plane = parallel & (np.abs(cl.offset - np.sign(gamma) * cn.offset) <= SAME_PLANE_TOL)
        coaxial |= same_plane
        safe = np.where(parallel, 0.0, gamma)
        disc = 1.0 - (cn.offset ** 2 + cl.offset ** 2 - 2.0 * cn.offset * cl.offset * safe) / (1.0 - safe ** 2)
        disc = np.where(parallel, -np.inf, disc)
        counts = counts * np.where(disc > 0, 2, np.where(disc == 0.0, 1, 0))
    return counts, coaxial


# ---------------------------------------------------------------------------
# contour counting on chart grids
# ---------------------------------------------------------------------------

class _ChartGrid:
    """Fixed evaluation grid of one chart at one resolution."""

    def __init__(self, surface, chart: int, m: int):
        ch = surface.charts[chart]
        if isinstance(surface, GraphSurface):
            u_lo, u_hi = 0.0, GRAPH_COUNT_BAND
        else:
            u_lo, u_hi = ch.u_min, ch.u_max
        self.chart = ch
        self.chart_index = chart
        self.u_nodes = np.linspace(u_lo, u_hi, m + 1)
        self.v_nodes = np.linspace(ch.v_min, ch.v_max, m + 1)
        U, V = np.meshgrid(self.u_nodes, self.v_nodes, indexing="ij")
        pts = surface.points(chart, U, V)
        self.p1 = pts[..., :3].reshape(-1, 3)
        self.p2 = pts[..., 3:].reshape(-1, 3)
        self.shape = U.shape

    def residuals(self, a1, a2, c1, c2):
        """f1, f2 on the grid for a batch of rotated axes; shapes (S, nu, nv).

        Along periodic directions the wrap row/column is overwritten with the
        opening one so sign bookkeeping is exact at the seam.
        """
        f1 = a1 @ self.p1.T
        f2 = a2 @ self.p2.T
        f1 -= c1
        f2 -= c2
        f1 = f1.reshape((-1,) + self.shape)
        f2 = f2.reshape((-1,) + self.shape)
        for f in (f1, f2):
            if self.chart.periodic_u:
                f[:, -1, :] = f[:, 0, :]
            if self.chart.periodic_v:
                f[:, :, -1] = f[:, :, 0]
        return f1, f2


_EDGES = ((0, 1), (1, 2), (3, 2), (0, 3))            # ab, bc, dc, ad
_CORNER_OFFSETS = ((0, 0), (1, 0), (1, 1), (0, 1))   # a, b, c, d


def _cell_seeds(f1c, f2c, iu, iv, u_nodes, v_nodes):
    """Newton seeds from one cell: marching-squares segments of f1 = 0 that
    carry a sign change of the interpolated f2 between their endpoints."""
    crossings = {}
    for edge in _EDGES:
        e0, e1 = edge
        fa, fb = f1c[e0], f1c[e1]
        if (fa > 0.0) == (fb > 0.0):
            continue
        t = fa / (fa - fb)
        (du0, dv0), (du1, dv1) = _CORNER_OFFSETS[e0], _CORNER_OFFSETS[e1]
        u = u_nodes[iu + du0] + t * (u_nodes[iu + du1] - u_nodes[iu + du0])
        v = v_nodes[iv + dv0] + t * (v_nodes[iv + dv1] - v_nodes[iv + dv0])
        crossings[edge] = (u, v, f2c[e0] + t * (f2c[e1] - f2c[e0]))
    if len(crossings) == 2:
        segments = [tuple(crossings.values())]
    elif len(crossings) == 4:
        # saddle: pair edges so each segment isolates one corner; the sign of
        # the cell-center average against corner a picks the topology
        if (f1c.mean() > 0.0) == (f1c[0] > 0.0):
            pairing = (((0, 1), (1, 2)), ((3, 2), (0, 3)))  # isolate b and d
        else:
            pairing = (((0, 1), (0, 3)), ((1, 2), (3, 2)))  # isolate a and c
        segments = [(crossings[e0], crossings[e1]) for e0, e1 in pairing]
    else:
        return []
    seeds = []
    for s0, s1 in segments:
        g0, g1 = s0[2], s1[2]
        if (g0 > 0.0) == (g1 > 0.0):
            continue
        t = g0 / (g0 - g1)
        seeds.append((s0[0] + t * (s1[0] - s0[0]), s0[1] + t * (s1[1] - s0[1])))
    return seeds


def _newton_refine(surface, chart_index, chart, U, V, a1, a2, c1, c2,
                   max_iter=30, fd_step=1e-6, max_step=0.5):
    """Vectorized damped Newton on (f1, f2) = 0 for seed arrays with per-seed axes.

    Returns (U, V, converged, jacobian_sigma_min)."""

    def clampwrap(u, v):
        if chart.periodic_u:
            u = np.mod(u, TWO_PI)
        else:
            u = np.clip(u, chart.u_min + 1e-9, chart.u_max - 1e-9)
        if chart.periodic_v:
            v = np.mod(v, TWO_PI)
        else:
            v = np.clip(v, chart.v_min + 1e-9, chart.v_max - 1e-9)
        return u, v

    def residual(u, v):
        pts = surface.points(chart_index, u, v)
        f1 = np.sum(pts[..., :3] * a1sub, axis=-1) - c1
        f2 = np.sum(pts[..., 3:] * a2sub, axis=-1) - c2
        return f1, f2

    U = np.array(U, dtype=float)
    V = np.array(V, dtype=float)
    U, V = clampwrap(U, V)
    n = U.shape[0]
    active = np.ones(n, dtype=bool)
    sig_min = np.zeros(n)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        u, v = U[idx], V[idx]
        a1sub, a2sub = a1[idx], a2[idx]
        f1, f2 = residual(u, v)
        f1u, f2u = residual(*clampwrap(u + fd_step, v))
        f1mu, f2mu = residual(*clampwrap(u - fd_step, v))
        f1v, f2v = residual(*clampwrap(u, v + fd_step))
        f1mv, f2mv = residual(*clampwrap(u, v - fd_step))
        j11 = (f1u - f1mu) / (2 * fd_step)
        j21 = (f2u - f2mu) / (2 * fd_step)
        j12 = (f1v - f1mv) / (2 * fd_step)
        j22 = (f2v - f2mv) / (2 * fd_step)
        det = j11 * j22 - j12 * j21
        singular = np.abs(det) < 1e-300
        det = np.where(singular, 1.0, det)
        du = np.clip((j22 * f1 - j12 * f2) / det, -max_step, max_step)
        dv = np.clip((-j21 * f1 + j11 * f2) / det, -max_step, max_step)
        t = j11 * j11 + j12 * j12 + j21 * j21 + j22 * j22
        root = np.sqrt(np.maximum(t * t - 4.0 * det * det, 0.0))
        sig_min[idx] = np.where(singular, 0.0, np.sqrt(np.maximum(0.5 * (t - root), 0.0)))
        U[idx], V[idx] = clampwrap(u - du, v - dv)
        done = ((np.maximum(np.abs(f1), np.abs(f2)) < NEWTON_TOL) & ~singular) | singular
        active[idx[done]] = False
    a1sub, a2sub = a1, a2
    f1, f2 = residual(U, V)
    converged = np.maximum(np.abs(f1), np.abs(f2)) < RESIDUAL_ACCEPT
    return U, V, converged, sig_min


def _dedup(points, quality):
    """Greedy ambient-radius clustering in a deterministic coordinate order."""
    if not points:
        return [], []
    arr = np.stack(points, axis=0)
    order = np.lexsort(arr.T[::-1])
    kept_pts, kept_q = [], []
    for idx in order:
        p = points[idx]
        if all(np.linalg.norm(p - kp) > DEDUP_RADIUS for kp in kept_pts):
            kept_pts.append(p)
            kept_q.append(quality[idx])
    return kept_pts, kept_q


class _CountingProblem:
    """Precomputed grids for counting many group samples against one (N, L)."""

    def __init__(self, n_surface, l_surface: ProductTorusSurface, m: int):
        if m < MIN_COUNT_GRID:
            raise ValueError(f"counting grid m must be >= {MIN_COUNT_GRID}, got {m}")
        self.n_surface = n_surface
        self.l_surface = l_surface
        self.m = m
        self.grids = {
            level: [_ChartGrid(n_surface, chart, level) for chart in range(len(n_surface.charts))]
            for level in (m, 2 * m)
        }

    def run_batch(self, r1, r2, collect_points=False):
        """Per-sample outcomes over a batch of group samples.

        Each outcome is (status, count, min_transversality, points) with
        status in {'ok', 'nontransversal', 'gridunstable'}; points is a list
        of ambient 6-vectors from the fine grid when collect_points is set.
        """
        S = r1.shape[0]
        a1 = r1 @ self.l_surface.circle1.axis
        a2 = r2 @ self.l_surface.circle2.axis
        c1 = self.l_surface.circle1.offset
        c2 = self.l_surface.circle2.offset
        coarse = self._count_level(self.grids[self.m], a1, a2, c1, c2, S)
        fine = self._count_level(self.grids[2 * self.m], a1, a2, c1, c2, S)
        out = []
        for s in range(S):
            ok0, count0, _, _ = coarse[s]
            ok1, count1, trans1, pts1 = fine[s]
            if not (ok0 and ok1):
                out.append(("nontransversal", 0, 0.0, []))
            elif count0 != count1:
                out.append(("gridunstable", 0, 0.0, []))
            else:
                out.append(("ok", count1, trans1, pts1 if collect_points else []))
        return out

    def _count_level(self, grids, a1, a2, c1, c2, S):
        roots = [[] for _ in range(S)]
        quality = [[] for _ in range(S)]
        failed = np.zeros(S, dtype=bool)
        for grid in grids:
            f1, f2 = grid.residuals(a1, a2, c1, c2)
            nu, nv = grid.shape[0] - 1, grid.shape[1] - 1
            s1 = f1 > 0.0
            s2 = f2 > 0.0
            act1 = np.zeros((S, nu, nv), dtype=bool)
            act2 = np.zeros_like(act1)
            for di, dj in _CORNER_OFFSETS[1:]:
                act1 |= s1[:, di:nu + di, dj:nv + dj] != s1[:, :nu, :nv]
                act2 |= s2[:, di:nu + di, dj:nv + dj] != s2[:, :nu, :nv]
            seeds_u, seeds_v, seed_sample = [], [], []
            for s, iu, iv in zip(*np.nonzero(act1 & act2)):
                cf1 = np.array([f1[s, iu + di, iv + dj] for di, dj in _CORNER_OFFSETS])
                cf2 = np.array([f2[s, iu + di, iv + dj] for di, dj in _CORNER_OFFSETS])
                for u, v in _cell_seeds(cf1, cf2, iu, iv, grid.u_nodes, grid.v_nodes):
                    seeds_u.append(u)
                    seeds_v.append(v)
                    seed_sample.append(s)
            if not seeds_u:
                continue
            sidx = np.array(seed_sample, dtype=int)
            U, V, converged, smin = _newton_refine(
                self.n_surface, grid.chart_index, grid.chart,
                np.array(seeds_u), np.array(seeds_v), a1[sidx], a2[sidx], c1, c2,
            )
            pts = self.n_surface.points(grid.chart_index, U, V)
            trans = self._transversality(grid.chart_index, U, V, pts, a1[sidx], a2[sidx])
            for k in range(U.shape[0]):
                s = sidx[k]
                if not converged[k]:
                    failed[s] = True
                    continue
                roots[s].append(pts[k])
                quality[s].append((float(smin[k]), float(trans[k])))
        out = []
        for s in range(S):
            if failed[s]:
                out.append((False, 0, 0.0, []))
                continue
            pts, qual = _dedup(roots[s], quality[s])
            if any(sig <= TRANSVERSALITY_MIN or tr <= TRANSVERSALITY_MIN for sig, tr in qual):
                out.append((False, 0, 0.0, []))
                continue
            min_trans = min((tr for _, tr in qual), default=1.0)
            out.append((True, len(pts), min_trans, pts))
        return out

    def _transversality(self, chart_index, U, V, pts, a1, a2):
        """Wedge angle between the N tangent plane and the moved-L tangent plane."""
        du, dv = self.n_surface.partials(chart_index, U, V)
        t1, t2, bad = orthonormal_pairs(du, dv)
        p = pts[:, :3]
        q = pts[:, 3:]
        l1 = np.cross(a1, p)
        l2 = np.cross(a2, q)
        n1 = np.linalg.norm(l1, axis=-1, keepdims=True)
        n2 = np.linalg.norm(l2, axis=-1, keepdims=True)
        degenerate = (n1[:, 0] < 1e-12) | (n2[:, 0] < 1e-12) | bad
        l1 = l1 / np.where(n1 > 0, n1, 1.0)
        l2 = l2 / np.where(n2 > 0, n2, 1.0)
        zeros = np.zeros_like(l1)
        rows = np.stack([
            t1, t2,
            np.concatenate([l1, zeros], axis=-1),
            np.concatenate([zeros, l2], axis=-1),
        ], axis=1)  # (k, 4, 6)
        gram = rows @ np.transpose(rows, (0, 2, 1))
        sigma = np.sqrt(np.clip(np.linalg.det(gram), 0.0, 1.0))
        return np.where(degenerate, 0.0, sigma)


def count_surface_product(n_surface, g: GroupElement, l_surface: ProductTorusSurface,
                          grid: int = MIN_COUNT_GRID) -> IntersectionResult:
    """Contour-based transversal count of N against g L, cross-checked at grid 2m."""
    problem = _CountingProblem(n_surface, l_surface, grid)
    (status, count, min_trans, pts), = problem.run_batch(
        g.first.matrix[None, :, :], g.second.matrix[None, :, :], collect_points=True
    )
    if status == "gridunstable":
        raise GridUnstable(f"count changed between grids {grid} and {2 * grid}")
    if status == "nontransversal":
        raise NonTransversalSample("an intersection point failed the transversality gate")
    points = tuple(ProductPoint.from_ambient(p) for p in pts)
    return IntersectionResult(count, points, float(min_trans))
