"""Finite-dimensional normed spaces, dual norms, probe metrics, sampled sets.

Vectors and matrices are plain numpy arrays (float64 or complex128); a vector
is its coordinate array, dim = len(coords).  JSON serialization writes complex
scalars as [re, im] pairs so files stay language-neutral.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


class DimensionMismatch(ValueError):
    """Input shapes do not match the space they are used in."""


class UnsupportedNorm(ValueError):
    """Norm spec does not apply to this input kind or operation."""


class OutsideUnitBall(ValueError):
    """Probe metrics only accept arguments from the operator-norm unit ball."""


class EmptySet(ValueError):
    """Sampled sets stand for nonempty closed sets and must carry points."""


UNIT_TOL = 1e-12
BALL_SLACK = 1e-9

VECTOR_KINDS = ("l1", "l2", "linf")
PROBE_KINDS = ("probe_weak", "probe_strong", "probe_strong_star")
MATRIX_KINDS = ("operator", "trace") + PROBE_KINDS


def dyadic_weights(length):
    """Weights 2^-n for n = 1..length (indexing starts at 1, not 0)."""
    return 0.5 ** np.arange(1, length + 1)


def _diagonal_pairs(length):
    # fixed surjection m -> (k_m, l_m): walk the anti-diagonals of N x N
    pairs = []
    for total in itertools.count(0):
        for k in range(total + 1):
            pairs.append((k, total - k))
            if len(pairs) == length:
                return np.array(pairs, dtype=np.int64)


def _integer_sphere(dim, total):
    # Integer vectors with 1-norm exactly `total`, emitted in the same
    # lexicographic order as scanning [-total, total]^dim, but the scan is a
    # budget-pruned recursion so high dimensions stay tractable.
    vec = [0] * dim

    def rec(pos, budget):
        remaining = dim - pos - 1
        if remaining == 0:
            for c in (-budget, budget) if budget else (0,):
                vec[pos] = c
                yield tuple(vec)
            vec[pos] = 0
            return
        for c in range(-min(total, budget), min(total, budget) + 1):
            rest = budget - abs(c)
            if rest > remaining * total:
                continue
            vec[pos] = c
            yield from rec(pos + 1, rest)
        vec[pos] = 0

    yield from rec(0, total)


def _rational_directions(dim, count):
    """Unit vectors with rational coordinates, in a fixed enumeration order.

    Integer vectors are walked by increasing 1-norm then lexicographically;
    scalar multiples of an already-emitted direction are skipped.
    """
    out, seen = [], set()
    for total in itertools.count(1):
        for z in _integer_sphere(dim, total):
            v = np.array(z, dtype=np.float64)
            v /= np.linalg.norm(v)
            key = tuple(np.round(v, 12))
            if key in seen:
                continue
            seen.add(key)
            out.append(v)
            if len(out) == count:
                return out


@dataclass(frozen=True)
class ProbeSequence:
    """Ordered finite list of unit probe vectors plus the weak-form pairing."""

    vectors: np.ndarray  # (length, dim), rows of norm 1 within 1e-12
    pairing: np.ndarray  # (length, 2), index pairs (k_m, l_m) into vectors

    def __post_init__(self):
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise ValueError("probe vectors must be unit vectors within 1e-12")
        if self.pairing.shape != (len(self.vectors), 2):
            raise DimensionMismatch("pairing must assign one (k,l) per probe index")
        if self.pairing.min() < 0 or self.pairing.max() >= len(self.vectors):
            raise ValueError("pairing indices out of range")

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.vectors)


def make_probe_sequence(dim, length, seed=0):
    """Deterministic probe sequence: standard basis first, then a fixed
    enumeration of rational-direction unit vectors, truncated at `length`.

    A nonzero seed swaps the rational tail for seeded random unit vectors;
    either way the output is a pure function of (dim, length, seed).
    """
    rows = [np.eye(dim)[i] for i in range(min(dim, length))]
    extra = length - len(rows)
    if extra > 0:
        if seed == 0:
            rows.extend(_rational_directions(dim, extra))
        else:
            rng = np.random.default_rng(seed)
            g = rng.standard_normal((extra, dim))
            rows.extend(g / np.linalg.norm(g, axis=1, keepdims=True))
    vectors = np.array(rows[:length], dtype=np.float64)
    return ProbeSequence(vectors=vectors, pairing=_diagonal_pairs(length))


@dataclass(frozen=True)
class NormSpec:
    """Tagged norm choice; probe kinds carry their probe sequence and weights."""

    kind: str
    probes: ProbeSequence | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in VECTOR_KINDS + MATRIX_KINDS:
            raise UnsupportedNorm(f"unknown norm kind {self.kind!r}")
        if self.kind in PROBE_KINDS:
            if self.probes is None:
                raise UnsupportedNorm(f"{self.kind} needs a probe sequence")
            w = self.weights if self.weights is not None else dyadic_weights(len(self.probes))
            if len(w) != len(self.probes):
                raise DimensionMismatch("one weight per probe")
            if np.any(w <= 0) or w.sum() > 2.0 + UNIT_TOL:
                raise ValueError("weights must be positive and sum to at most 2")
            object.__setattr__(self, "weights", np.asarray(w, dtype=np.float64))
        elif self.probes is not None or self.weights is not None:
            raise UnsupportedNorm(f"{self.kind} takes no probes or weights")


def l1():
    return NormSpec("l1")


def l2():
    return NormSpec("l2")


def linf():
    return NormSpec("linf")


def operator_norm():
    return NormSpec("operator")


def trace_norm():
    return NormSpec("trace")


def probe_weak(probes, weights=None):
    return NormSpec("probe_weak", probes=probes, weights=weights)


def probe_strong(probes, weights=None):
    return NormSpec("probe_strong", probes=probes, weights=weights)


def probe_strong_star(probes, weights=None):
    return NormSpec("probe_strong_star", probes=probes, weights=weights)


def _check_square(x, kind):
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatch(f"{kind} norm needs a square matrix, got shape {x.shape}")
    return x


def eval_norm(x, spec):
    """Norm of a vector or matrix under `spec`.

    l1/l2/linf read the flattened coordinates; operator and trace norms are
    the largest and the summed singular value; the probe kinds are the
    weighted probe sums (strong-* uses (||x xi|| + ||x* xi||)/2 per probe so
    every probe kind is dominated by the operator norm times the weight sum).
    """
    x = np.asarray(x)
    if spec.kind in VECTOR_KINDS:
        flat = np.abs(x.ravel())
        if spec.kind == "l1":
            return float(flat.sum())
        if spec.kind == "l2":
            return float(np.sqrt((flat * flat).sum()))
        return float(flat.max()) if flat.size else 0.0
    x = _check_square(x, spec.kind)
    if spec.kind == "operator":
        return float(np.linalg.norm(x, 2))
    if spec.kind == "trace":
        return float(np.linalg.svd(x, compute_uv=False).sum())
    probes = spec.probes
    if probes.dim != x.shape[0]:
        raise DimensionMismatch("probe dimension does not match the matrix")
    w = spec.weights
    if spec.kind == "probe_weak":
        k, l = probes.pairing[:, 0], probes.pairing[:, 1]
        images = x @ probes.vectors[k].T  # column m = x xi_{k_m}
        vals = np.abs(np.einsum("md,dm->m", probes.vectors[l].conj(), images))
        return float(np.dot(w, vals))
    images = x @ probes.vectors.T.astype(x.dtype)
    strong = np.linalg.norm(images, axis=0)
    if spec.kind == "probe_strong":
        return float(np.dot(w, strong))
    adj_images = x.conj().T @ probes.vectors.T.astype(x.dtype)
    adj = np.linalg.norm(adj_images, axis=0)
    return float(np.dot(w, (strong + adj) / 2.0))


_DUAL_OF = {"l1": "linf", "linf": "l1", "l2": "l2"}


def dual_kind(kind):
    if kind not in _DUAL_OF:
        raise UnsupportedNorm(f"dual norm only defined for l1/l2/linf, got {kind!r}")
    return _DUAL_OF[kind]


def eval_dual_norm(omega, spec):
    """Norm of the functional `omega` as an element of the dual space.

    `spec` names the norm of the underlying space, so the value is the
    sup of |<omega, x>| over its unit ball: l1 <-> linf, l2 self-dual.
    """
    return eval_norm(omega, NormSpec(dual_kind(spec.kind)))


def operator_distance(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b), 2))


def probe_metric(a, b, spec):
    """Probe pseudometric d(a, b) = rho(a - b) on the operator-norm unit ball."""
    if spec.kind not in PROBE_KINDS:
        raise UnsupportedNorm("probe_metric needs a probe norm spec")
    a, b = np.asarray(a), np.asarray(b)
    for m in (a, b):
        if np.linalg.norm(m, 2) > 1.0 + BALL_SLACK:
            raise OutsideUnitBall("probe metrics are calibrated on the unit ball only")
    return eval_norm(a - b, spec)


@dataclass(frozen=True)
class SubspaceBall:
    """Exact descriptor: unit ball of span(basis rows) under `ball_spec`."""

    basis: np.ndarray  # (k, dim) rows, linearly independent
    ball_spec: NormSpec

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.basis))
        object.__setattr__(self, "basis", b)
        if np.linalg.matrix_rank(b) < b.shape[0]:
            raise ValueError("subspace basis rows must be independent")


@dataclass(frozen=True)
class DiscFamily:
    """Exact descriptor: the disc {lam * direction : |lam| <= radius}."""

    direction: np.ndarray
    radius: float
    complex_scalars: bool = True

    def __post_init__(self):
        object.__setattr__(self, "direction", np.asarray(self.direction))
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")


@dataclass(frozen=True)
class SampledSet:
    """Finite stand-in for a nonempty closed set: samples plus shape flags."""

    points: np.ndarray  # (count, dim)
    convex: bool = False
    balanced: bool = False
    exact: SubspaceBall | DiscFamily | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points))
        if pts.size == 0:
            raise EmptySet("a sampled set must contain at least one point")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)


def _pairwise_norms(diffs, spec):
    # diffs: (..., dim) batch of difference vectors, vector norms only
    if spec.kind == "l1":
        return np.abs(diffs).sum(axis=-1)
    if spec.kind == "l2":
        return np.sqrt((np.abs(diffs) ** 2).sum(axis=-1))
    if spec.kind == "linf":
        return np.abs(diffs).max(axis=-1)
    return np.array([eval_norm(d, spec) for d in diffs.reshape(-1, diffs.shape[-1])]).reshape(diffs.shape[:-1])


def distances_to_points(x, points, spec):
    """Vector of spec-distances from x to each row of points."""
    x = np.asarray(x)
    points = np.atleast_2d(points)
    if points.shape[1] != x.shape[0]:
        raise DimensionMismatch("point dimension mismatch")
    return _pairwise_norms(points - x[None, :], spec)


def _zoom_minimize(batch_objective, center, radius, step_target, canon=None):
    """Coarse-to-fine grid minimization of a convex objective over a box.

    center: (k,) start, radius: scalar box half-width.  Each level lays a
    9-per-axis grid, keeps the best point and shrinks the box to twice the
    cell size, until the cell size drops below step_target.  k <= 3.

    canon maps a raw grid point to the feasible representative the
    objective actually evaluated; recentring on it keeps the search from
    drifting along a constraint plateau where the objective is flat.
    """
    center = np.asarray(center, dtype=np.float64)
    k = center.shape[0]
    if k > 3:
        raise UnsupportedNorm("exact refinement supports descriptor dimension <= 3")
    best_val = float(batch_objective(center[None, :])[0])
    best = center.copy()
    while True:
        axes = [np.linspace(-radius, radius, 9)] * k
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k) + best
        vals = batch_objective(grid)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best = grid[i] if canon is None else np.asarray(canon(grid[i]), dtype=np.float64)
        cell = 2.0 * radius / 8.0
        if cell <= step_target:
            return best_val, best
        radius = 2.0 * cell


def _refine_subspace_ball(x, ball, spec):
    basis = ball.basis
    if np.iscomplexobj(basis) or np.iscomplexobj(x):
        basis = basis.astype(np.complex128)
        k2 = 2 * basis.shape[0]
        if k2 > 3:
            return None

        def objective(cs):
            coeff = cs[:, 0::2] + 1j * cs[:, 1::2]
            pts = coeff @ basis
            feas = _pairwise_norms(pts, ball.ball_spec) <= 1.0 + BALL_SLACK
            vals = _pairwise_norms(pts - x[None, :], spec)
            vals[~feas] = np.inf
            return vals

        start = np.zeros(k2)
    else:
        if basis.shape[0] > 3:
            return None

        def objective(cs):
            pts = cs @ basis
            feas = _pairwise_norms(pts, ball.ball_spec) <= 1.0 + BALL_SLACK
            vals = _pairwise_norms(pts - x[None, :], spec)
            vals[~feas] = np.inf
            return vals

        start = np.zeros(basis.shape[0])
    scale = max(1.0, 2.0 * eval_norm(np.asarray(x), spec))
    val, _ = _zoom_minimize(objective, start, scale, 1e-4)
    return val


def _refine_disc(x, disc, spec):
    d = disc.direction

    if disc.complex_scalars:
        # lambda in Cartesian coordinates, projected radially onto the disc.
        def to_disc(cs):
            cs = np.atleast_2d(cs)
            lam = cs[:, 0] + 1j * cs[:, 1]
            mags = np.abs(lam)
            over = mags > disc.radius
            if over.any():
                lam = np.where(over, lam * (disc.radius / np.maximum(mags, 1e-300)), lam)
            return lam

        def objective(cs):
            lam = to_disc(cs)
            return _pairwise_norms(lam[:, None] * d[None, :] - x[None, :], spec)

        def canon(c):
            lam = to_disc(c[None, :])[0]
            return np.array([lam.real, lam.imag])

        val, _ = _zoom_minimize(objective, np.array([0.0, 0.0]), disc.radius + 1e-9,
                                1e-4, canon=canon)
    else:
        def objective(cs):
            lam = np.clip(cs[:, 0], -disc.radius, disc.radius)
            return _pairwise_norms(lam[:, None] * d[None, :] - x[None, :], spec)

        val, _ = _zoom_minimize(objective, np.array([0.0]), disc.radius + 1e-9, 1e-4,
                                canon=lambda c: np.clip(c, -disc.radius, disc.radius))
    return val


def min_distance_oracle(x, sset, spec):
    """Distance from x to a sampled set: min over samples, then local grid
    refinement over the exact descriptor (step <= 1e-4) when one is present."""
    x = np.asarray(x)
    base = float(distances_to_points(x, sset.points, spec).min())
    if sset.exact is None:
        return base
    if isinstance(sset.exact, SubspaceBall):
        refined = _refine_subspace_ball(x, sset.exact, spec)
    else:
        refined = _refine_disc(x, sset.exact, spec)
    if refined is None:
        return base
    return min(base, refined)


# ---------------------------------------------------------------------------
# JSON helpers: complex scalars as [re, im] pairs

def array_to_json(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        stacked = np.stack([a.real, a.imag], axis=-1)
        return stacked.tolist()
    return a.tolist()

def array_from_json(obj, complex_scalars=False):
    a = np.asarray(obj, dtype=np.float64)
    if complex_scalars:
        if a.shape[-1] != 2:
            raise ValueError("complex arrays serialize as trailing [re, im] pairs")
        return a[..., 0] + 1j * a[..., 1]
    return a


def sampled_set_to_json(sset):
    doc = {
        "complex": bool(np.iscomplexobj(sset.points)),
        "points": array_to_json(sset.points),
        "flags": {"convex": sset.convex, "balanced": sset.balanced},
    }
    ex = sset.exact
    if isinstance(ex, SubspaceBall):
        doc["exact"] = {
            "kind": "subspace_ball",
            "complex": bool(np.iscomplexobj(ex.basis)),
            "basis": array_to_json(ex.basis),
            "ball_spec": ex.ball_spec.kind,
        }
    elif isinstance(ex, DiscFamily):
        doc["exact"] = {
            "kind": "disc_family",
            "complex": bool(np.iscomplexobj(ex.direction)),
            "direction": array_to_json(ex.direction),
            "radius": ex.radius,
            "complex_scalars": ex.complex_scalars,
        }
    return doc


def sampled_set_from_json(doc):
    exact = None
    ex = doc.get("exact")
    if ex is not None:
        if ex["kind"] == "subspace_ball":
            exact = SubspaceBall(array_from_json(ex["basis"], ex["complex"]),
                                 NormSpec(ex["ball_spec"]))
        else:
            exact = DiscFamily(array_from_json(ex["direction"], ex["complex"]),
                               ex["radius"], ex.get("complex_scalars", True))
    return SampledSet(points=array_from_json(doc["points"], doc.get("complex", False)),
                      convex=doc["flags"]["convex"], balanced=doc["flags"]["balanced"],
                      exact=exact)
