"""Norm evaluation, dual norms, probe metrics, and the distance oracle.

Expected values are frozen from independent hand computations noted inline;
random sweeps use fixed seeds so failures are reproducible.
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperselect.norms import (
    BALL_SLACK,
    DiscFamily,
    DimensionMismatch,
    EmptySet,
    NormSpec,
    OutsideUnitBall,
    ProbeSequence,
    SampledSet,
    SubspaceBall,
    UnsupportedNorm,
    dual_kind,
    dyadic_weights,
    eval_dual_norm,
    eval_norm,
    l1,
    l2,
    linf,
    make_probe_sequence,
    min_distance_oracle,
    operator_distance,
    operator_norm,
    probe_metric,
    probe_strong,
    probe_strong_star,
    probe_weak,
    trace_norm,
)


def _basis_probes(dim, length):
    vectors = np.array([np.eye(dim)[i % dim] for i in range(length)])
    pairing = np.zeros((length, 2), dtype=np.int64)
    # anti-diagonal walk of N x N, same surjection the default sequence uses
    m = 0
    for total in range(length):
        for k in range(total + 1):
            if m < length:
                pairing[m] = (k % length, (total - k) % length)
                m += 1
    return ProbeSequence(vectors=vectors, pairing=pairing[:length])


# ---------------------------------------------------------------------------
# frozen single values


def test_sup_norm_coordinate_maximum():
    assert eval_norm(np.array([1.0, -2.0, 3.0]), linf()) == 3.0


def test_trace_norm_of_identity():
    # singular values 1, 1
    assert eval_norm(np.eye(2), trace_norm()) == pytest.approx(2.0, abs=1e-12)


def test_strong_star_single_matrix_unit():
    # x = e11 in M4, probes = standard basis: only xi_1 contributes,
    # (||x xi_1|| + ||x* xi_1||)/2 = 1 at weight 1/2 -> 0.5
    probes = make_probe_sequence(4, 4)
    x = np.zeros((4, 4))
    x[0, 0] = 1.0
    assert eval_norm(x, probe_strong_star(probes)) == pytest.approx(0.5, abs=1e-12)


def test_weak_metric_single_cross_term():
    # pairing walks (0,0),(0,1),(1,0),(1,1); only <e1, e12 e2> = 1 is nonzero,
    # it sits at m = 3 (weights start at 1/2), so the value is 2^-3
    probes = make_probe_sequence(2, 4)
    e12 = np.array([[0.0, 1.0], [0.0, 0.0]])
    val = probe_metric(e12, np.zeros((2, 2)), probe_weak(probes))
    assert val == pytest.approx(0.125, abs=1e-12)


def test_dual_norm_frozen_values():
    assert eval_dual_norm(np.array([1.0, -2.0, 3.0]), l1()) == 3.0
    assert eval_dual_norm(np.array([3.0, 4.0]), l2()) == pytest.approx(5.0, abs=1e-12)
    assert eval_dual_norm(np.array([1.0, 1.0, -1.0]), linf()) == 3.0


def test_dual_kind_pairing():
    assert dual_kind("l1") == "linf"
    assert dual_kind("linf") == "l1"
    assert dual_kind("l2") == "l2"
    with pytest.raises(UnsupportedNorm):
        dual_kind("operator")


def test_probe_metric_identity_of_indiscernibles():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((3, 3))
    a /= max(1.0, np.linalg.norm(a, 2))
    spec = probe_strong_star(make_probe_sequence(3, 6))
    assert probe_metric(a, a, spec) == 0.0


# ---------------------------------------------------------------------------
# spec-level invariants


@pytest.mark.parametrize("spec_name", ["l1", "l2", "linf", "operator", "trace",
                                       "probe_weak", "probe_strong", "probe_strong_star"])
def test_homogeneity_random_sweep(spec_name):
    rng = np.random.default_rng(11)
    dim = 4
    if spec_name in ("l1", "l2", "linf"):
        spec = NormSpec(spec_name)
        draw = lambda: rng.standard_normal(dim)
    else:
        probes = make_probe_sequence(dim, 6)
        if spec_name in ("operator", "trace"):
            spec = NormSpec(spec_name)
        else:
            spec = NormSpec(spec_name, probes=probes)
        draw = lambda: rng.standard_normal((dim, dim))
    for _ in range(200):
        v = draw()
        lam = rng.standard_normal() * 3.0
        lhs = eval_norm(lam * v, spec)
        rhs = abs(lam) * eval_norm(v, spec)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, rhs)


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(-8, 8, allow_nan=False),
       coords=st.lists(st.floats(-5, 5, allow_nan=False, allow_infinity=False),
                       min_size=1, max_size=6))
def test_homogeneity_property(lam, coords):
    v = np.array(coords)
    for spec in (l1(), l2(), linf()):
        lhs = eval_norm(lam * v, spec)
        rhs = abs(lam) * eval_norm(v, spec)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, rhs)


def test_dual_norm_dominates_and_matches_sampled_sup():
    # predual unit-ball sup sampled with norm-boundary points plus the
    # polytope extreme points (signed basis vectors, sign vectors), which
    # makes the l1/linf suprema exact and the l2 one dense at dim <= 4
    rng = np.random.default_rng(5)
    for spec in (l1(), l2(), linf()):
        for _ in range(67):
            dim = int(rng.integers(2, 5))
            omega = rng.standard_normal(dim) * 2.0
            g = rng.standard_normal((10_000, dim))
            norms = np.array([eval_norm(row, spec) for row in g])
            boundary = g / norms[:, None]
            extremes = np.concatenate([np.eye(dim), -np.eye(dim),
                                       np.array(list(np.ndindex(*(2,) * dim))) * 2.0 - 1.0])
            ok = np.array([eval_norm(row, spec) <= 1 + 1e-9 for row in extremes])
            samples = np.concatenate([boundary, extremes[ok]])
            sampled = float(np.abs(samples @ omega).max())
            exact = eval_dual_norm(omega, spec)
            assert exact >= sampled - 1e-12
            assert exact - sampled <= 2e-2


def test_probe_metric_dominated_by_operator_distance():
    rng = np.random.default_rng(7)
    probes = make_probe_sequence(3, 8)
    specs = [probe_weak(probes), probe_strong(probes), probe_strong_star(probes)]
    for _ in range(100):
        a, b = rng.standard_normal((2, 3, 3))
        a /= max(1.0, np.linalg.norm(a, 2))
        b /= max(1.0, np.linalg.norm(b, 2))
        for spec in specs:
            assert probe_metric(a, b, spec) <= 2.0 * operator_distance(a, b) + 1e-12


def test_probe_metric_triangle_inequality():
    rng = np.random.default_rng(13)
    spec = probe_strong_star(make_probe_sequence(3, 6))
    for _ in range(100):
        a, b, c = rng.standard_normal((3, 3, 3))
        for m in (a, b, c):
            m /= max(1.0, np.linalg.norm(m, 2))
        dac = probe_metric(a, c, spec)
        assert dac <= probe_metric(a, b, spec) + probe_metric(b, c, spec) + 1e-12


def test_probe_metric_rejects_points_outside_ball():
    spec = probe_strong_star(make_probe_sequence(2, 4))
    with pytest.raises(OutsideUnitBall):
        probe_metric(3.0 * np.eye(2), np.zeros((2, 2)), spec)


# ---------------------------------------------------------------------------
# probe sequences


def test_probe_sequence_rows_are_unit_and_deterministic():
    for seed in (0, 9):
        p1 = make_probe_sequence(3, 12, seed=seed)
        p2 = make_probe_sequence(3, 12, seed=seed)
        assert np.array_equal(p1.vectors, p2.vectors)
        assert np.all(np.abs(np.linalg.norm(p1.vectors, axis=1) - 1.0) <= 1e-12)


def test_probe_sequence_prefix_stability():
    short = make_probe_sequence(3, 8)
    long = make_probe_sequence(3, 16)
    assert np.array_equal(long.vectors[:8], short.vectors)


def test_probe_sequence_rejects_non_unit_rows():
    with pytest.raises(ValueError):
        ProbeSequence(vectors=np.array([[2.0, 0.0]]), pairing=np.array([[0, 0]]))


def test_weights_must_be_positive_and_bounded():
    probes = make_probe_sequence(2, 3)
    with pytest.raises(ValueError):
        NormSpec("probe_strong", probes=probes, weights=np.array([1.0, 1.0, 0.5]))
    with pytest.raises(DimensionMismatch):
        NormSpec("probe_strong", probes=probes, weights=np.array([0.5, 0.25]))


def test_dyadic_weights_start_at_one_half():
    w = dyadic_weights(4)
    assert np.allclose(w, [0.5, 0.25, 0.125, 0.0625])


# ---------------------------------------------------------------------------
# sampled sets and the distance oracle


def test_sampled_set_must_be_nonempty():
    with pytest.raises(EmptySet):
        SampledSet(points=np.zeros((0, 2)))


def test_distance_to_own_sample_is_zero():
    pts = np.array([[0.0, 1.0], [2.0, 3.0]])
    sset = SampledSet(points=pts)
    assert min_distance_oracle(np.array([2.0, 3.0]), sset, l2()) == 0.0


def test_distance_to_origin_singleton():
    sset = SampledSet(points=np.array([[0.0, 0.0]]))
    assert min_distance_oracle(np.array([3.0, 4.0]), sset, l2()) == 5.0


def _diagonal_ball_samples():
    ts = np.linspace(-1.0, 1.0, 41)
    pts = np.stack([ts, ts], axis=1)
    exact = SubspaceBall(basis=np.array([[1.0, 1.0]]) / 2.0, ball_spec=linf())
    return SampledSet(points=pts, convex=True, balanced=True, exact=exact)


def test_refined_distance_to_diagonal_segment():
    # min over t of max(|1 - t|, |t|) = 1/2, attained at t = 1/2
    sset = _diagonal_ball_samples()
    val = min_distance_oracle(np.array([1.0, 0.0]), sset, linf())
    assert val == pytest.approx(0.5, abs=1e-4)


def test_refined_distance_interior_disc_point_is_zero():
    # a point strictly inside the disc must come back at ~0 even though the
    # coarse samples sit on a polar grid away from it
    d = np.zeros(6, dtype=np.complex128)
    d[0] = 1.0
    disc = DiscFamily(direction=d, radius=1.0, complex_scalars=True)
    angles = np.exp(2j * np.pi * np.arange(16) / 16)
    pts = np.concatenate([r * angles[:, None] * d[None, :] for r in (1.0, 0.5)])
    sset = SampledSet(points=pts, convex=True, balanced=True, exact=disc)
    x = (1.0 / 6.0) * np.exp(1j * 0.37) * d
    assert min_distance_oracle(x, sset, l1()) <= 1e-3


def test_operator_norm_requires_square_input():
    with pytest.raises(DimensionMismatch):
        eval_norm(np.ones((2, 3)), operator_norm())


def test_probe_kind_requires_probes():
    with pytest.raises(UnsupportedNorm):
        NormSpec("probe_strong_star")
    with pytest.raises(UnsupportedNorm):
        NormSpec("l2", weights=np.array([1.0]))
