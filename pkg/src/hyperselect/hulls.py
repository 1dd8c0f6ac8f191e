"""Exact Euclidean geometry of small convex hulls.

A point's projection onto conv(G) lies in the relative interior of exactly
one face, so enumerating vertex subsets and solving each equality-constrained
least-squares problem gives the exact projection for small generator counts.
The per-subset solves are linear in the query, so batches are matmuls.
"""
from __future__ import annotations

import itertools

import numpy as np

GENERATOR_CAP = 12
_FEAS_TOL = 1e-12


class TooManyGenerators(ValueError):
    """Subset enumeration is exact but only affordable for small hulls."""


def dedupe_points(points, tol=1e-12):
    """Drop duplicate rows (within tol), preserving first-seen order."""
    points = np.atleast_2d(points)
    keep = []
    for i, p in enumerate(points):
        if all(np.linalg.norm(p - points[j]) > tol for j in keep):
            keep.append(i)
    return points[keep]


class HullProjector:
    """Exact L2 projection onto the convex hull of a few generator points."""

    def __init__(self, generators):
        g = dedupe_points(np.atleast_2d(np.asarray(generators, dtype=np.float64)))
        if len(g) > GENERATOR_CAP:
            raise TooManyGenerators(f"{len(g)} generators exceeds cap {GENERATOR_CAP}")
        self.generators = g
        self._faces = []
        for size in range(1, len(g) + 1):
            for subset in itertools.combinations(range(len(g)), size):
                gs = g[list(subset)]
                s = len(subset)
                kkt = np.zeros((s + 1, s + 1))
                kkt[:s, :s] = 2.0 * gs @ gs.T
                kkt[:s, s] = 1.0
                kkt[s, :s] = 1.0
                pinv = np.linalg.pinv(kkt)
                # lam = w @ p + b, linear in the query point p
                w = pinv[:s, :s] @ (2.0 * gs)
                b = pinv[:s, s]
                self._faces.append((gs, w, b))

    def project(self, points):
        """Projections and distances for a batch of query points.

        Returns (projections (m, dim), distances (m,)).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        m = len(pts)
        best_d2 = np.full(m, np.inf)
        best_proj = np.zeros_like(pts)
        for gs, w, b in self._faces:
            lam = pts @ w.T + b[None, :]
            feasible = (lam >= -_FEAS_TOL).all(axis=1)
            if not feasible.any():
                continue
            proj = lam @ gs
            d2 = ((proj - pts) ** 2).sum(axis=1)
            d2[~feasible] = np.inf
            better = d2 < best_d2
            best_d2[better] = d2[better]
            best_proj[better] = proj[better]
        return best_proj, np.sqrt(best_d2)

    def distances(self, points):
        return self.project(points)[1]

    def contains(self, points, tol=1e-9):
        return self.distances(points) <= tol


def monotone_chain(points):
    """Indices of the 2D convex hull vertices (Andrew's monotone chain)."""
    pts = np.atleast_2d(points)
    order = np.lexsort((pts[:, 1], pts[:, 0]))

    def cross(o, a, b):
        return (pts[a, 0] - pts[o, 0]) * (pts[b, 1] - pts[o, 1]) - (
            pts[a, 1] - pts[o, 1]
        ) * (pts[b, 0] - pts[o, 0])

    lower, upper = [], []
    for i in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= 1e-15:
            lower.pop()
        lower.append(i)
    for i in order[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= 1e-15:
            upper.pop()
        upper.append(i)
    hull = lower[:-1] + upper[:-1]
    return hull if hull else [int(order[0])]


def reduce_generators(points):
    """Minimal-ish generator list spanning the same hull (dims 1 and 2)."""
    pts = dedupe_points(points)
    if len(pts) <= 2:
        return pts
    dim = pts.shape[1]
    if dim == 1:
        return np.array([[pts[:, 0].min()], [pts[:, 0].max()]])
    if dim == 2:
        return pts[monotone_chain(pts)]
    if len(pts) > GENERATOR_CAP:
        raise TooManyGenerators("generator reduction beyond 2D is not implemented")
    return pts


def segment_ball_clip(a, b, center, radius):
    """Endpoints of [a, b] intersected with the closed ball B(center, radius),
    or None when the intersection is empty.  Exact (quadratic roots)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    u = b - a
    w = a - c
    qa = float(u @ u)
    if qa < 1e-30:  # degenerate segment
        return (a.copy(), b.copy()) if np.linalg.norm(w) <= radius else None
    qb = 2.0 * float(u @ w)
    qc = float(w @ w) - radius * radius
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0:
        return None
    root = np.sqrt(disc)
    t0 = (-qb - root) / (2.0 * qa)
    t1 = (-qb + root) / (2.0 * qa)
    lo, hi = max(t0, 0.0), min(t1, 1.0)
    if lo > hi:
        return None
    return a + lo * u, a + hi * u


def lattice_round(points, cell):
    """Snap points to the grid cell * Z^dim (deterministic net construction)."""
    return np.round(np.asarray(points) / cell) * cell
