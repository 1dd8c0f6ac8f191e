"""Partitions of unity and continuous selections on discrete domains.

Domains are finite metric grids standing in for a metric space X; set-valued
maps carry one convex value per grid point.  Values live in Euclidean
coordinates: a value is either the hull of a few generators or such a hull
intersected with a closed ball (the restricted maps of the dense family).
The selection iteration keeps two logged invariants at every grid point:
membership defect < 2^-(k+1) after round k and sup-step <= 2^-k between
consecutive rounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hulls import HullProjector, dedupe_points, lattice_round, segment_ball_clip
from .norms import NormSpec, l2
from .hyperspace import pairwise_distances


class NotACover(RuntimeError):
    """Some domain point lies in no cover element."""


class NetTooCoarse(RuntimeError):
    """The net misses a value set at the requested approximation scale."""


class IterationStall(RuntimeError):
    """A selection round could not cover the domain even after refinement."""


class DiscreteDomain:
    """Finite point grid with a metric; h is the max nearest-neighbor spacing."""

    def __init__(self, points, spec: NormSpec | None = None):
        self.points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        self.spec = spec if spec is not None else l2()
        d = pairwise_distances(self.points, self.points, self.spec)
        np.fill_diagonal(d, np.inf)
        self.pair_d = d
        if len(self.points) > 1:
            if float(d.min()) <= 0.0:
                raise ValueError("domain points must be pairwise distinct")
            self.mesh = float(d.min(axis=1).max())
        else:
            self.mesh = 0.0

    def __len__(self):
        return len(self.points)

    @property
    def dim(self):
        return self.points.shape[1]

    def adjacent_pairs(self):
        """Ordered index pairs at nearest-neighbor range (both directions)."""
        close = self.pair_d <= self.mesh * (1 + 1e-9)
        i, j = np.nonzero(close)
        return list(zip(i.tolist(), j.tolist()))


def grid_domain_1d(n=101, lo=0.0, hi=1.0, spec=None):
    return DiscreteDomain(np.linspace(lo, hi, n)[:, None], spec)


def grid_domain_2d(nx=11, ny=11, lo=0.0, hi=1.0, spec=None):
    xs = np.linspace(lo, hi, nx)
    ys = np.linspace(lo, hi, ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return DiscreteDomain(np.stack([gx.ravel(), gy.ravel()], axis=1), spec)


@dataclass
class OpenCover:
    """Cover elements as membership bitmaps over the domain points."""

    domain: DiscreteDomain
    bitmaps: np.ndarray  # (n_elements, n_points) bool

    def __post_init__(self):
        self.bitmaps = np.atleast_2d(np.asarray(self.bitmaps, dtype=bool))
        if self.bitmaps.shape[1] != len(self.domain):
            raise ValueError("bitmap length must match the domain size")

    @classmethod
    def from_balls(cls, domain, centers, radii):
        centers = np.atleast_2d(centers)
        radii = np.broadcast_to(np.asarray(radii, dtype=np.float64), (len(centers),))
        d = pairwise_distances(centers, domain.points, domain.spec)
        return cls(domain=domain, bitmaps=d < radii[:, None])

    def __len__(self):
        return len(self.bitmaps)


@dataclass
class PartitionOfUnity:
    cover: OpenCover
    values: np.ndarray  # (n_elements, n_points), rows sum to 1 pointwise
    max_active: int     # recorded local finiteness bound

    def support(self, i):
        return np.nonzero(self.values[i] > 0)[0]


def build_partition_of_unity(domain, cover):
    """Subordinate partition of unity from distance-to-complement bumps.

    g_n(x) = 2^-n min(1, d(x, X \\ U_n)) with n starting at 1, g = max_n g_n,
    f_n = max(0, g_n - g/2), rho_n = f_n / sum_m f_m.  Raises NotACover when
    g vanishes somewhere.  Supports satisfy supp rho_n inside U_n exactly,
    because d(x, X \\ U_n) = 0 off U_n on the grid.
    """
    bitmaps = cover.bitmaps
    n_pts = len(domain)
    dist_comp = np.empty((len(bitmaps), n_pts))
    for i, inside in enumerate(bitmaps):
        if inside.all():
            dist_comp[i] = np.inf
            continue
        d_to_comp = domain.pair_d[:, ~inside]
        dist_comp[i] = d_to_comp.min(axis=1)
        dist_comp[i][~inside] = 0.0
    weights = 0.5 ** np.arange(1, len(bitmaps) + 1)
    g_n = weights[:, None] * np.minimum(1.0, dist_comp)
    g = g_n.max(axis=0)
    uncovered = np.nonzero(g <= 0.0)[0]
    if uncovered.size:
        raise NotACover(f"domain point index {int(uncovered[0])} lies in no cover element")
    f_n = np.maximum(0.0, g_n - g[None, :] / 2.0)
    total = f_n.sum(axis=0)
    rho = f_n / total[None, :]
    max_active = int((rho > 0).sum(axis=0).max())
    return PartitionOfUnity(cover=cover, values=rho, max_active=max_active)


# ---------------------------------------------------------------------------
# convex values


class HullValue:
    """Convex hull of a few generator points, with exact projection."""

    def __init__(self, generators):
        self.generators = dedupe_points(np.atleast_2d(np.asarray(generators, dtype=np.float64)))
        self._projector = None

    @property
    def projector(self):
        if self._projector is None:
            self._projector = HullProjector(self.generators)
        return self._projector

    def project(self, points):
        return self.projector.project(points)

    def distances(self, points):
        return self.projector.distances(points)

    def any_point(self):
        return self.generators.mean(axis=0)


class BallRestrictedValue:
    """A hull intersected with a closed ball; projections via Dykstra.

    Both component projections are exact, and the alternating scheme with
    correction terms converges to the projection onto the intersection.
    """

    def __init__(self, hull: HullValue, center, radius, tol=1e-12, max_iter=500):
        self.hull = hull
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        self.tol = tol
        self.max_iter = max_iter
        self.generators = None  # no finite generator description

    def _project_ball(self, points):
        delta = points - self.center[None, :]
        norms = np.linalg.norm(delta, axis=1)
        scale = np.ones_like(norms)
        outside = norms > self.radius
        scale[outside] = self.radius / norms[outside]
        return self.center[None, :] + delta * scale[:, None]

    def project(self, points):
        queries = np.atleast_2d(np.asarray(points, dtype=np.float64))
        x = queries.copy()
        p = np.zeros_like(x)
        q = np.zeros_like(x)
        for _ in range(self.max_iter):
            y = self.hull.project(x + p)[0]
            p = x + p - y
            x_new = self._project_ball(y + q)
            q = y + q - x_new
            shift = np.linalg.norm(x_new - x, axis=1).max()
            x = x_new
            if shift < self.tol:
                break
        return x, np.linalg.norm(x - queries, axis=1)

    def distances(self, points):
        return self.project(points)[1]

    def any_point(self):
        return self.project(self.hull.any_point()[None, :])[0][0]


def restrict_value(value: HullValue, center, radius):
    """The value intersected with the closed ball B(center, radius).

    Point and segment values intersect exactly (quadratic clip); larger hulls
    fall back to the Dykstra-backed representation.
    """
    gens = value.generators
    if len(gens) == 1:
        return value
    if len(gens) == 2:
        clipped = segment_ball_clip(gens[0], gens[1], center, radius)
        if clipped is not None:
            return HullValue(np.stack(clipped))
    return BallRestrictedValue(value, center, radius)


class SetValuedMap:
    """One convex value per domain point, inside a common convex target C."""

    def __init__(self, domain, values, target, name="", slope_hint=4.0):
        self.domain = domain
        if len(values) != len(domain):
            raise ValueError("one value per domain point")
        self.values = [v if isinstance(v, (HullValue, BallRestrictedValue)) else HullValue(v)
                       for v in values]
        for v in self.values:
            if v.generators is not None and not bool(np.all(target.contains(v.generators))):
                raise ValueError("value generators must lie in the target set C")
        self.target = target
        self.name = name
        self.slope_hint = slope_hint

    def __len__(self):
        return len(self.values)

    def value_dim(self):
        return self.target.dim


class HullTarget:
    """The target convex set C given by finitely many generators."""

    def __init__(self, generators):
        self.generators = np.atleast_2d(np.asarray(generators, dtype=np.float64))
        self.dim = self.generators.shape[1]
        self._projector = HullProjector(self.generators)

    def project(self, points):
        return self._projector.project(np.atleast_2d(points))[0]

    def contains(self, points, tol=1e-9):
        return self._projector.distances(np.atleast_2d(points)) <= tol


# ---------------------------------------------------------------------------
# approximate selection from an explicit net

_MAX_ELEMENTS = 900


@dataclass
class SelectionResult:
    values: np.ndarray          # (n_points, dim)
    pou: PartitionOfUnity
    net: np.ndarray             # net points used as cover labels, in order
    defects: np.ndarray         # d(f(x), F(x)) per domain point


def _cover_from_bitmaps(domain, bitmaps, labels):
    keep = [i for i in range(len(bitmaps)) if bitmaps[i].any()]
    bitmaps = bitmaps[keep]
    labels = labels[keep]
    if len(bitmaps) > _MAX_ELEMENTS:
        covered = np.zeros(len(domain), dtype=bool)
        chosen = []
        for i in range(len(bitmaps)):
            new = bitmaps[i] & ~covered
            if new.any():
                chosen.append(i)
                covered |= bitmaps[i]
        bitmaps = bitmaps[chosen]
        labels = labels[chosen]
    return bitmaps, labels


def _lex_sort(points):
    order = np.lexsort(tuple(points[:, c] for c in range(points.shape[1] - 1, -1, -1)))
    return order


def approx_selection(F, eps, net):
    """Continuous eps-approximate selection f(x) = sum_i rho_i(x) v_i.

    The cover element of net point v is U_v = {x : d(v, F(x)) < eps}; the
    partition of unity is subordinate to it, so every active v at x lies
    within eps of the convex value and the combination inherits the bound.
    """
    net = np.atleast_2d(np.asarray(net, dtype=np.float64))
    if not bool(np.all(F.target.contains(net, tol=1e-9))):
        raise ValueError("net points must lie in the target set C")
    net = net[_lex_sort(net)]
    dists = np.stack([F.values[i].distances(net) for i in range(len(F))], axis=1)
    bitmaps = dists < eps
    bitmaps, net = _cover_from_bitmaps(F.domain, bitmaps, net)
    if len(bitmaps) == 0 or not bitmaps.any(axis=0).all():
        missing = np.nonzero(~bitmaps.any(axis=0))[0] if len(bitmaps) else [0]
        raise NetTooCoarse(f"no net point is eps-close to F at domain index {int(missing[0])}")
    pou = build_partition_of_unity(F.domain, OpenCover(F.domain, bitmaps))
    values = pou.values.T @ net
    defects = np.array([F.values[i].distances(values[i][None, :])[0] for i in range(len(F))])
    return SelectionResult(values=values, pou=pou, net=net, defects=defects)


# ---------------------------------------------------------------------------
# the selection iteration


@dataclass
class MichaelResult:
    values: np.ndarray
    rounds: list          # dicts: {"k", "max_defect", "max_step"}
    defects: np.ndarray

    def log_rows(self):
        return [dict(r) for r in self.rounds]


def _adaptive_net(F, anchors, cell):
    """Net points: value-hull projections of the anchors, snapped to the
    cell lattice and pulled back into C.  Deduped and lex-sorted."""
    dim = F.target.dim
    raw = np.empty((len(F), dim))
    for i in range(len(F)):
        anchor = anchors[i] if anchors is not None else F.values[i].any_point()
        raw[i] = F.values[i].project(anchor[None, :])[0][0]
    snapped = F.target.project(lattice_round(raw, cell))
    snapped = dedupe_points(snapped, tol=1e-12)
    return snapped[_lex_sort(snapped)]


def _selection_round(F, anchors, r, eps, cell):
    """One cover-and-average round; anchors=None drops the ball restriction.

    Active pairs require d(v, F(x)) < eps and, when anchored, that the hull
    projection of v stays within r of the anchor, which realizes the cover by
    fattened intersections F(x) and B(anchor, r) at net scale eps.
    """
    net = _adaptive_net(F, anchors, cell)
    n_pts, dim = len(F), F.target.dim
    bitmaps = np.zeros((len(net), n_pts), dtype=bool)
    for i in range(n_pts):
        proj, dist = F.values[i].project(net)
        ok = dist < eps
        if anchors is not None:
            ok &= np.linalg.norm(proj - anchors[i][None, :], axis=1) < r
        bitmaps[:, i][ok] = True
    bitmaps, net = _cover_from_bitmaps(F.domain, bitmaps, net)
    if len(bitmaps) == 0 or not bitmaps.any(axis=0).all():
        return None
    pou = build_partition_of_unity(F.domain, OpenCover(F.domain, bitmaps))
    return pou.values.T @ net


def michael_selection(F, tol=1e-3):
    """Iterated selection with logged defect and step invariants.

    Round k covers X by {x : F(x) meets B(f_k(x), 2^-(k+1)) near a net point}
    and averages net points through a partition of unity at scale 2^-(k+2).
    Margins (3/4 of each scale, lattice cell an eighth of the ball radius)
    make the cover guaranteed, the defect < 2^-(k+1) after round k, and the
    step bound sup_x |f_{k+1}(x) - f_k(x)| <= 2^-k hold exactly.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    k_cap = math.ceil(math.log2(1.0 / tol)) + 2
    rounds = []
    dim_sqrt = math.sqrt(F.target.dim)

    def run_round(anchors, r, eps, cell):
        values = _selection_round(F, anchors, r, eps, cell)
        if values is None:
            values = _selection_round(F, anchors, r, eps, cell / 2.0)  # one refinement
        return values

    eps1 = 0.75 * 0.25
    values = run_round(None, None, eps1, 0.25 / (8.0 * dim_sqrt))
    if values is None:
        raise IterationStall("initial approximate selection failed to cover the domain (k=1)")
    defects = np.array([F.values[i].distances(values[i][None, :])[0] for i in range(len(F))])
    rounds.append({"k": 0, "max_defect": float(defects.max()), "max_step": None})
    k = 1
    while 0.5 ** k >= tol:
        if k > k_cap:
            raise IterationStall(f"iteration cap {k_cap} exceeded")
        r = 0.5 ** (k + 1)
        eps = 0.75 * 0.5 ** (k + 2)
        cell = 0.5 ** (k + 4) / dim_sqrt
        new_values = run_round(values, r, eps, cell)
        if new_values is None:
            worst = int(np.argmax(defects))
            raise IterationStall(f"round k={k} left domain index {worst} uncovered")
        step = float(np.linalg.norm(new_values - values, axis=1).max())
        values = new_values
        defects = np.array([F.values[i].distances(values[i][None, :])[0] for i in range(len(F))])
        rounds.append({"k": k, "max_defect": float(defects.max()), "max_step": step})
        k += 1
    return MichaelResult(values=values, rounds=rounds, defects=defects)


# ---------------------------------------------------------------------------
# dense families of selections


@dataclass
class FamilyMember:
    net_index: int
    m: int
    p: int
    values: np.ndarray
    rounds: list
    restricted_count: int


def dense_selection_family(F, net, m_max, p_max, tol=1e-3):
    """Selections pinned near each net point at scales 1/m.

    For net point v_n and m, U_nm = {x : F(x) meets B(v_n, 1/m)} is open; its
    closed exhaustion C_nmp = {x : d(x, X \\ U_nm) >= 1/p} selects where the
    value is replaced by cl(F(x) intersect B(v_n, 1/m)).  Each modified map
    stays lower-continuous and gets its own selection.  Members are
    enumerated in lexicographic (n, m, p) order.
    """
    net = np.atleast_2d(np.asarray(net, dtype=np.float64))
    if not bool(np.all(F.target.contains(net, tol=1e-9))):
        raise ValueError("net points must lie in the target set C")
    base = None
    members = []
    for n in range(len(net)):
        value_dists = np.array([F.values[i].distances(net[n][None, :])[0] for i in range(len(F))])
        for m in range(1, m_max + 1):
            radius = 1.0 / m
            inside_u = value_dists < radius
            if inside_u.any():
                comp = ~inside_u
                if comp.any():
                    d_comp = F.domain.pair_d[:, comp].min(axis=1)
                    d_comp[comp] = 0.0
                else:
                    d_comp = np.full(len(F), np.inf)
            else:
                d_comp = np.zeros(len(F))
            for p in range(1, p_max + 1):
                pinned = d_comp >= 1.0 / p
                if not pinned.any():
                    if base is None:
                        base = michael_selection(F, tol=tol)
                    members.append(FamilyMember(n, m, p, base.values, base.rounds, 0))
                    continue
                new_values = [
                    restrict_value(F.values[i], net[n], radius) if pinned[i] else F.values[i]
                    for i in range(len(F))
                ]
                modified = SetValuedMap(F.domain, new_values, F.target,
                                        name=f"{F.name}|n={n},m={m},p={p}",
                                        slope_hint=F.slope_hint)
                sel = michael_selection(modified, tol=tol)
                members.append(FamilyMember(n, m, p, sel.values, sel.rounds,
                                            int(pinned.sum())))
    return members


def density_audit(members, F, metric=None):
    """Worst distance from any value generator to the nearest family member.

    metric(points_a, points_b) -> pairwise row distances; defaults to L2.
    Returns the audit gap and the per-point worst rows.
    """
    if metric is None:
        metric = lambda a, b: np.linalg.norm(a - b, axis=1)
    worst = 0.0
    rows = []
    for i in range(len(F)):
        gens = F.values[i].generators
        if gens is None:
            continue
        for w in gens:
            best = min(float(metric(mem.values[i][None, :], w[None, :])[0]) for mem in members)
            rows.append((i, w, best))
            worst = max(worst, best)
    return worst, rows


# ---------------------------------------------------------------------------
# lower-continuity surrogate


def check_lower_continuity(F, probes, slope=None, slack=1e-9):
    """Slope-bounded discrete surrogate of lower semicontinuity.

    ok iff d(v, F(x')) <= d(v, F(x)) + L d(x, x') + slack for every ordered
    adjacent pair (x, x') and probe v.  Reports the worst violation.
    """
    slope = F.slope_hint if slope is None else slope
    probes = np.atleast_2d(np.asarray(probes, dtype=np.float64))
    dist = np.stack([F.values[i].distances(probes) for i in range(len(F))], axis=0)
    worst = {"x": None, "x_prime": None, "probe": None, "defect": -np.inf}
    ok = True
    for i, j in F.domain.adjacent_pairs():
        budget = slope * F.domain.pair_d[i, j] + slack
        excess = dist[j] - dist[i] - budget
        a = int(np.argmax(excess))
        if excess[a] > worst["defect"]:
            worst = {"x": int(i), "x_prime": int(j), "probe": a, "defect": float(excess[a])}
        if excess[a] > 0:
            ok = False
    return {"ok": ok, "slope": slope, "worst": worst}


# ---------------------------------------------------------------------------
# bundled test maps


def _interval_value(lo, hi):
    return np.array([[lo], [hi]])


def bundled_maps(n1d=101, n2d=11):
    """Ten lower-continuous convex-valued maps used across tests and demos."""
    dom1 = grid_domain_1d(n1d)
    dom2 = grid_domain_2d(n2d, n2d)
    unit1 = HullTarget(np.array([[0.0], [1.0]]))
    unit2 = HullTarget(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    xs1 = dom1.points[:, 0]
    maps = []

    maps.append(SetValuedMap(dom1, [_interval_value(0.0, 1.0) for _ in xs1], unit1,
                             name="constant-interval", slope_hint=1.0))
    maps.append(SetValuedMap(dom1, [_interval_value(x, 1.0) for x in xs1], unit1,
                             name="sliding-left-end", slope_hint=2.0))
    maps.append(SetValuedMap(dom1, [_interval_value(0.0, max(x, 0.2)) for x in xs1], unit1,
                             name="growing-right-end", slope_hint=2.0))
    maps.append(SetValuedMap(dom1, [np.array([[0.5 + 0.4 * np.sin(2 * np.pi * x)]]) for x in xs1],
                             unit1, name="sine-singleton", slope_hint=4.0))
    maps.append(SetValuedMap(
        dom1,
        [_interval_value(max(0.0, 0.5 + 0.3 * np.sin(2 * np.pi * x) - 0.2),
                         min(1.0, 0.5 + 0.3 * np.sin(2 * np.pi * x) + 0.2)) for x in xs1],
        unit1, name="sine-band", slope_hint=4.0))
    maps.append(SetValuedMap(dom1, [_interval_value(abs(x - 0.5), 1.0 - 0.2 * abs(x - 0.5))
                                    for x in xs1], unit1, name="vee-band", slope_hint=2.0))

    pts2 = dom2.points
    maps.append(SetValuedMap(
        dom2, [np.array([[p[0], 0.0], [p[0], 1.0]]) for p in pts2], unit2,
        name="vertical-segment", slope_hint=2.0))

    def rotating(p):
        theta = 0.5 * np.pi * p[0]
        c, s = 0.3 * np.cos(theta), 0.3 * np.sin(theta)
        return np.array([[0.5 - c, 0.5 - s], [0.5 + c, 0.5 + s]])

    maps.append(SetValuedMap(dom2, [rotating(p) for p in pts2], unit2,
                             name="rotating-segment", slope_hint=2.0))
    maps.append(SetValuedMap(
        dom2,
        [np.array([[0.2, 0.2], [0.8, 0.2], [0.5, 0.2 + 0.6 * max(p[0], 0.05)]]) for p in pts2],
        unit2, name="rising-triangle", slope_hint=2.0))
    maps.append(SetValuedMap(dom2, [unit2.generators for _ in pts2], unit2,
                             name="constant-square", slope_hint=1.0))
    return maps


def jump_map(n1d=101):
    """The discontinuous witness: F(x) = {0} for x < 1/2, {1} afterwards."""
    dom1 = grid_domain_1d(n1d)
    unit1 = HullTarget(np.array([[0.0], [1.0]]))
    vals = [np.array([[0.0]]) if x < 0.5 else np.array([[1.0]]) for x in dom1.points[:, 0]]
    return SetValuedMap(dom1, vals, unit1, name="jump", slope_hint=4.0)
