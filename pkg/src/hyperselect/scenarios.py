"""Runnable experiment scenarios behind the command-line entry point.

Each scenario reads a flat key=value config, runs one of the package's
pipelines deterministically, and writes CSV/JSON files whose bytes depend
only on the config and the seed.  All floats are rendered with %.12g and
JSON keys are sorted, so a rerun with the same inputs reproduces the files
exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .norms import (
    array_to_json,
    dyadic_weights,
    eval_norm,
    l1,
    l2,
    linf,
    make_probe_sequence,
    probe_strong_star,
)
from .duality import (
    DualityMismatch,
    Subspace,
    convergence_gap,
    counterexample_ball,
    counterexample_limit_disc,
    counterexample_subspace,
    exact_support,
    is_subspace_ball,
    quotient_routes,
    subspace_from_spanning,
)
from .selection import (
    DiscreteDomain,
    HullValue,
    SetValuedMap,
    approx_selection,
    bundled_maps,
    check_lower_continuity,
    dense_selection_family,
    density_audit,
    jump_map,
    michael_selection,
)
from .algebras import (
    SubsetSeq,
    adjoint_modulus,
    build_fS,
    default_strong_spec,
    marechal_pseudometric,
    operator_norm,
    rotated_diagonal_algebra,
)
from .borel import DepthInsufficient, bundled_borel_instances, pfin_census, sigma2_reduce


class ConfigError(ValueError):
    """Bad scenario configuration: unknown key, wrong type, out of range."""


# ---------------------------------------------------------------------------
# config parsing and deterministic writers


def parse_config_file(path):
    """Flat key=value lines; '#' starts a comment, blanks are skipped."""
    raw = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    return raw


def _resolve(params, defaults):
    unknown = sorted(set(params) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    out = {}
    for key, default in defaults.items():
        if key not in params:
            out[key] = default
            continue
        raw = params[key]
        try:
            if isinstance(default, bool):
                if raw.lower() not in ("true", "false"):
                    raise ValueError("expected true or false")
                out[key] = raw.lower() == "true"
            elif isinstance(default, int):
                out[key] = int(raw)
            elif isinstance(default, float):
                out[key] = float(raw)
            else:
                out[key] = raw
        except ValueError as err:
            raise ConfigError(f"config key {key}: {err}") from None
    return out


def _float_list(raw, key):
    try:
        values = tuple(float(part) for part in raw.split(",") if part.strip())
    except ValueError as err:
        raise ConfigError(f"config key {key}: {err}") from None
    if not values:
        raise ConfigError(f"config key {key}: empty list")
    return values


def _int_list(raw, key):
    return tuple(int(v) if float(v) == int(v) else _bad_int(key) for v in _float_list(raw, key))


def _bad_int(key):
    raise ConfigError(f"config key {key}: expected integers")


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    f = float(value)
    if f == 0.0:
        f = 0.0  # normalize -0.0
    return "%.12g" % f


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return Path(path)


def _round_floats(obj):
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(_fmt(float(obj)))
    return obj


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(_round_floats(obj), sort_keys=True, indent=2) + "\n")
    return Path(path)


# ---------------------------------------------------------------------------
# duality: the two-route quotient distance sweep


_DUALITY_DEFAULTS = {
    "dim": 4,
    "trials": 50,
    "norms": "l2,l1,linf",
    "tol_l2": 1e-6,
    "tol_polyhedral": 2e-3,
}

_NORM_FACTORY = {"l1": l1, "l2": l2, "linf": linf}


def run_duality(params, seed, out):
    cfg = _resolve(params, _DUALITY_DEFAULTS)
    kinds = tuple(k.strip() for k in cfg["norms"].split(",") if k.strip())
    for kind in kinds:
        if kind not in _NORM_FACTORY:
            raise ConfigError(f"unknown norm kind {kind!r}")
    if cfg["dim"] < 2:
        raise ConfigError("dim must be at least 2")
    if cfg["dim"] > 8 and any(k in ("l1", "linf") for k in kinds):
        raise ConfigError("polyhedral duality sweeps are capped at dim 8")
    rng = np.random.default_rng(seed)
    rows = []
    summary = {}
    for kind in kinds:
        spec = _NORM_FACTORY[kind]()
        tol = cfg["tol_l2"] if kind == "l2" else cfg["tol_polyhedral"]
        worst = 0.0
        for trial in range(cfg["trials"]):
            k = int(rng.integers(1, cfg["dim"]))
            V = subspace_from_spanning(rng.standard_normal((k, cfg["dim"])),
                                       ambient=spec, side="primal")
            x = rng.standard_normal(cfg["dim"])
            primal, dual = quotient_routes(x, V, spec)
            diff = abs(primal - dual)
            worst = max(worst, diff)
            rows.append((trial, kind, primal, dual, diff))
            if diff > tol:
                raise DualityMismatch(
                    f"{kind} trial {trial}: primal {primal:.9g} vs dual {dual:.9g}"
                    f" exceeds tol {tol:g}")
        summary[kind] = {"trials": cfg["trials"], "max_abs_diff": worst, "tol": tol}
    return [
        _write_csv(out / "duality.csv",
                   ("trial", "norm", "primal", "dual", "abs_diff"), rows),
        _write_json(out / "summary.json", {"per_norm": summary, "seed": seed}),
    ]


# ---------------------------------------------------------------------------
# counterexample: the non-ball limit of subspace balls


_COUNTEREXAMPLE_DEFAULTS = {
    "terms": 16,
    "trunc_dim": 0,  # 0 means terms + 2
    "probe_count": 8,
    "scales": "0.5,0.75",
    "tol": 1e-3,
    "angles": 64,
}


def run_counterexample(params, seed, out):
    cfg = _resolve(params, _COUNTEREXAMPLE_DEFAULTS)
    terms = cfg["terms"]
    trunc = cfg["trunc_dim"] if cfg["trunc_dim"] else terms + 2
    if terms < 1 or trunc <= terms:
        raise ConfigError("need terms >= 1 and trunc_dim > terms")
    if not 1 <= cfg["probe_count"] <= trunc:
        raise ConfigError("probe_count must lie in [1, trunc_dim]")
    scales = _float_list(cfg["scales"], "scales")
    space = l1()  # the sets live in the dual of little-l1, probed in sup norm

    limit = counterexample_limit_disc(trunc, angles=cfg["angles"])
    verdict = is_subspace_ball(limit, scales, tol=cfg["tol"], spec=space)
    witness = verdict["witness"]
    files = [_write_json(out / "witness.json", {
        "ok": verdict["ok"],
        "defect": verdict["defect"],
        "scale": None if witness is None else witness[0],
        "rescaled_point": None if witness is None else array_to_json(witness[1]),
    })]

    probes = np.eye(trunc)[:cfg["probe_count"]]
    weights = dyadic_weights(cfg["probe_count"])
    limit_vals = np.array([exact_support(limit.exact, p) for p in probes])
    limit_span = Subspace(basis=np.eye(trunc)[:1].astype(np.complex128),
                          ambient=linf(), side="dual")
    rows = []
    for n in range(1, terms + 1):
        ball = counterexample_ball(n, trunc, angles=cfg["angles"])
        ok_n = is_subspace_ball(ball, scales, tol=cfg["tol"], spec=space)["ok"]
        vals = np.array([exact_support(ball.exact, p) for p in probes])
        weighted_gap = float(np.dot(weights, np.abs(vals - limit_vals)))
        V_n = counterexample_subspace(n, trunc)
        fixed_gap = convergence_gap([V_n], limit_span, probes)[0]
        escape = np.vstack([probes, np.eye(trunc)[n]])
        escape_gap = convergence_gap([V_n], limit_span, escape)[0]
        rows.append((n, ok_n, weighted_gap, fixed_gap, escape_gap))
    files.append(_write_csv(
        out / "counterexample.csv",
        ("n", "ball_ok", "weighted_gap", "fixed_probe_gap", "escaping_probe_gap"),
        rows))
    return files


# ---------------------------------------------------------------------------
# selection: the iteration decay log and the dense family audit


_SELECTION_DEFAULTS = {
    "map": "sliding-left-end",
    "n1d": 101,
    "n2d": 11,
    "tol": 1e-3,
    "eps": 0.25,
    "net": "0,0.25,0.5,0.75,1",
    "m_max": 2,
    "p_max": 2,
    "family_tol": 1e-2,
    "check_jump": True,
}


def _scenario_net(F, raw, key):
    if F.target.dim == 1:
        return np.array(_float_list(raw, key))[:, None]
    gens = F.target.generators
    return np.vstack([gens, gens.mean(axis=0)])


def run_selection(params, seed, out):
    cfg = _resolve(params, _SELECTION_DEFAULTS)
    suite = {F.name: F for F in bundled_maps(cfg["n1d"], cfg["n2d"])}
    if cfg["map"] not in suite:
        raise ConfigError(f"unknown map {cfg['map']!r}; choose from "
                          f"{', '.join(sorted(suite))}")
    F = suite[cfg["map"]]

    probes = np.vstack([F.target.generators, F.target.generators.mean(axis=0)[None, :]])
    continuity = check_lower_continuity(F, probes)
    report = {"map": cfg["map"], "continuity": continuity}
    if cfg["check_jump"]:
        jump = jump_map(cfg["n1d"])
        jp = np.vstack([jump.target.generators,
                        jump.target.generators.mean(axis=0)[None, :]])
        report["jump_rejected"] = not check_lower_continuity(jump, jp)["ok"]
    files = [_write_json(out / "continuity.json", report)]

    result = michael_selection(F, tol=cfg["tol"])
    decay_rows = []
    for entry in result.rounds:
        k = entry["k"]
        decay_rows.append((k, entry["max_defect"],
                           "" if entry["max_step"] is None else entry["max_step"],
                           "" if k == 0 else 0.5 ** k))
    files.append(_write_csv(out / "decay.csv",
                            ("k", "max_defect", "max_step", "step_bound"), decay_rows))
    sel_rows = [tuple(F.domain.points[i]) + tuple(result.values[i]) + (result.defects[i],)
                for i in range(len(F))]
    x_cols = tuple(f"x{j}" for j in range(F.domain.points.shape[1]))
    f_cols = tuple(f"f{j}" for j in range(result.values.shape[1]))
    files.append(_write_csv(out / "selection.csv",
                            x_cols + f_cols + ("defect",), sel_rows))

    net = _scenario_net(F, cfg["net"], "net")
    approx = approx_selection(F, cfg["eps"], net)
    approx_rows = [tuple(F.domain.points[i]) + tuple(approx.values[i]) + (approx.defects[i],)
                   for i in range(len(F))]
    files.append(_write_csv(out / "approx.csv",
                            x_cols + f_cols + ("defect",), approx_rows))

    audit_rows = []
    member_rows = []
    for m_used in sorted({max(1, cfg["m_max"] // 2), cfg["m_max"]}):
        members = dense_selection_family(F, net, m_used, cfg["p_max"],
                                         tol=cfg["family_tol"])
        gap, _ = density_audit(members, F)
        audit_rows.append((m_used, cfg["p_max"], len(members), gap,
                           1.0 / m_used + 2.0 * cfg["family_tol"]))
        if m_used == cfg["m_max"]:
            member_rows = [(i, mem.net_index, mem.m, mem.p, mem.restricted_count)
                           for i, mem in enumerate(members)]
    files.append(_write_csv(out / "family_audit.csv",
                            ("m_max", "p_max", "members", "audit_gap", "bound"),
                            audit_rows))
    files.append(_write_csv(out / "family.csv",
                            ("member", "net_index", "m", "p", "restricted_count"),
                            member_rows))
    return files


# ---------------------------------------------------------------------------
# marechal: support convergence curves plus the dense-family demo on a
# parameter grid of algebras


def matrix_unit_probes(n, count):
    """Trace-norm-one probe matrices: matrix units in diagonal-band order,
    cycled when count exceeds n^2, so longer lists extend shorter ones."""
    pairs = sorted(((k, l) for k in range(n) for l in range(n)),
                   key=lambda kl: (kl[0] + kl[1], kl[0]))
    out = []
    for m in range(count):
        k, l = pairs[m % len(pairs)]
        e = np.zeros((n, n), dtype=np.complex128)
        e[k, l] = 1.0
        out.append(e)
    return out


_SQRT2 = math.sqrt(2.0)


def sym_to_coords(m):
    """Isometric coordinates (x00, x11, sqrt2 x01) of a real symmetric 2x2;
    Euclidean distance of coordinates equals Frobenius distance."""
    m = np.asarray(m)
    return np.array([m[0, 0].real, m[1, 1].real, _SQRT2 * m[0, 1].real])


def coords_to_sym(v):
    return np.array([[v[0], v[2] / _SQRT2], [v[2] / _SQRT2, v[1]]])


class SpectralBallTarget:
    """Operator-norm unit ball of real symmetric 2x2 matrices in isometric
    coordinates.  Projection clips eigenvalues to [-1, 1], which is the
    Frobenius-nearest point and hence the Euclidean projection in these
    coordinates."""

    def __init__(self):
        self.dim = 3

    def project(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = np.empty_like(pts)
        for r, v in enumerate(pts):
            w, q = np.linalg.eigh(coords_to_sym(v))
            out[r] = sym_to_coords((q * np.clip(w, -1.0, 1.0)) @ q.T)
        return out

    def contains(self, points, tol=1e-9):
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.array([np.abs(np.linalg.eigvalsh(coords_to_sym(v))).max() <= 1.0 + tol
                         for v in pts])


def rotated_ball_map(count, theta_max):
    """F(theta) = symmetric part of the unit ball of the rotated diagonal
    algebra A_theta, an exact square with vertices +-I and +-D_theta in
    isometric coordinates."""
    thetas = np.linspace(0.0, theta_max, count)
    domain = DiscreteDomain(thetas[:, None])
    eye = sym_to_coords(np.eye(2))
    values = []
    for t in thetas:
        c, s = math.cos(t), math.sin(t)
        u = np.array([[c, -s], [s, c]])
        d = sym_to_coords(u @ np.diag([1.0, -1.0]) @ u.T)
        values.append(HullValue(np.array([eye, -eye, d, -d])))
    return SetValuedMap(domain, values, SpectralBallTarget(),
                        name="rotated-algebra-ball", slope_hint=4.0), thetas


_MARECHAL_DEFAULTS = {
    "theta_count": 16,
    "theta_max": math.pi / 8,
    "probe_count": 8,
    "hw_points": 7,
    "hw_theta_max": math.pi / 4,
    "hw_m_max": 2,
    "hw_p_max": 4,
    "hw_tol": 1e-2,
}


def run_marechal(params, seed, out):
    cfg = _resolve(params, _MARECHAL_DEFAULTS)
    if cfg["theta_count"] < 2 or cfg["hw_points"] < 2:
        raise ConfigError("need at least two grid points")
    probes = matrix_unit_probes(2, cfg["probe_count"])
    reference = rotated_diagonal_algebra(0.0)
    thetas = np.linspace(0.0, cfg["theta_max"], cfg["theta_count"])
    curve_rows = [(t, marechal_pseudometric(rotated_diagonal_algebra(t), reference, probes))
                  for t in thetas]
    files = [_write_csv(out / "curve.csv", ("theta", "pseudometric"), curve_rows)]

    F, grid = rotated_ball_map(cfg["hw_points"], cfg["hw_theta_max"])
    # The net must sit within 1/m of every audited generator, and the rotated
    # vertices drift with theta, so the net carries each grid value's corners.
    gens = np.unique(np.round(np.concatenate([v.generators for v in F.values]), 12), axis=0)
    net = np.concatenate([np.zeros((1, gens.shape[1])), gens])
    members = dense_selection_family(F, net, cfg["hw_m_max"], cfg["hw_p_max"],
                                     tol=cfg["hw_tol"])
    member_rows = []
    for i, mem in enumerate(members):
        for j, t in enumerate(grid):
            member_rows.append((i, mem.net_index, mem.m, mem.p, t) + tuple(mem.values[j]))
    files.append(_write_csv(
        out / "hw_family.csv",
        ("member", "net_index", "m", "p", "theta", "v0", "v1", "v2"), member_rows))

    ss_spec = probe_strong_star(make_probe_sequence(2, cfg["probe_count"]))
    audit_rows = []
    worst_l2 = worst_ss = 0.0
    for j, t in enumerate(grid):
        for g, w in enumerate(F.values[j].generators):
            best_l2 = min(float(np.linalg.norm(mem.values[j] - w)) for mem in members)
            target_mat = coords_to_sym(w)
            best_ss = min(eval_norm(coords_to_sym(mem.values[j]) - target_mat, ss_spec)
                          for mem in members)
            audit_rows.append((t, g, best_l2, best_ss))
            worst_l2 = max(worst_l2, best_l2)
            worst_ss = max(worst_ss, best_ss)
    files.append(_write_csv(out / "hw_audit.csv",
                            ("theta", "generator", "audit_l2", "audit_strong_star"),
                            audit_rows))
    files.append(_write_json(out / "summary.json", {
        "curve_max": max(r[1] for r in curve_rows),
        "curve_min": min(r[1] for r in curve_rows),
        "family_members": len(members),
        "audit_bound_l2": 1.0 / cfg["hw_m_max"] + 2.0 * cfg["hw_tol"],
        "worst_audit_l2": worst_l2,
        "worst_audit_strong_star": worst_ss,
    }))
    return files


# ---------------------------------------------------------------------------
# finiteness: adjoint continuity modulus against block size


_FINITENESS_DEFAULTS = {
    "m": 4,
    "block_sizes": "1,2,4",
    "eps_list": "0.05,0.1,0.2,0.4",
    "sample_count": 300,
    "probe_count": 8,
    "witness_count": 6,
}


def block_subsets(m, size):
    """S_n = the contiguous block of `size` indices containing n."""
    return SubsetSeq(m, tuple(
        frozenset(range((n // size) * size, min(m, (n // size) * size + size)))
        for n in range(m)))


def run_finiteness(params, seed, out):
    cfg = _resolve(params, _FINITENESS_DEFAULTS)
    sizes = _int_list(cfg["block_sizes"], "block_sizes")
    if any(not 1 <= b <= cfg["m"] for b in sizes):
        raise ConfigError("block sizes must lie in [1, m]")
    eps_list = _float_list(cfg["eps_list"], "eps_list")
    spec = default_strong_spec(cfg["m"] ** 2, cfg["probe_count"])
    rows = []
    witness_rows = []
    for size in sizes:
        algebra, _ = build_fS(block_subsets(cfg["m"], size))
        for eps, delta in adjoint_modulus(algebra, eps_list,
                                          sample_count=cfg["sample_count"],
                                          seed=seed, spec=spec):
            rows.append((eps, delta, size))
        for idx in range(min(cfg["witness_count"], algebra.dim)):
            unit = algebra.hs_basis[idx]
            nb = operator_norm(unit)
            witness_rows.append((size, idx, eval_norm(unit / nb, spec)))
    return [
        _write_csv(out / "finiteness.csv", ("eps", "delta", "block_size"), rows),
        _write_csv(out / "witnesses.csv",
                   ("block_size", "unit_index", "rho_strong"), witness_rows),
    ]


# ---------------------------------------------------------------------------
# borel: the two-depth Pfin census table


_BOREL_DEFAULTS = {
    "d": 8,
    "d2": 16,
    "count": 10,
    "prefix_len": 4,
    "frontier_policy": "record",
}


def run_borel(params, seed, out):
    cfg = _resolve(params, _BOREL_DEFAULTS)
    if cfg["frontier_policy"] not in ("record", "fail"):
        raise ConfigError("frontier_policy must be record or fail")
    if not cfg["prefix_len"] < cfg["d"] <= cfg["d2"]:
        raise ConfigError("need prefix_len < d <= d2")
    shallow = bundled_borel_instances(cfg["d"], cfg["count"], cfg["prefix_len"])
    deep = bundled_borel_instances(cfg["d2"], cfg["count"], cfg["prefix_len"])
    rows = []
    certified = frontier = 0
    for inst_s, inst_d in zip(shallow, deep):
        assert inst_s["name"] == inst_d["name"]
        expected = inst_s["expected"]
        try:
            m1 = sigma2_reduce(inst_s["trees"], inst_s["x"])
            m2 = sigma2_reduce(inst_d["trees"], inst_d["x"])
        except DepthInsufficient:
            if cfg["frontier_policy"] == "fail":
                raise
            rows.append((inst_s["name"], expected, "", "", "DepthInsufficient",
                         expected == "depth_insufficient"))
            frontier += 1
            continue
        census = pfin_census(m1, deeper=m2)
        verdict = census["verdict"]
        match = verdict == ("CertifiedFinite" if expected == "in" else "GrowingWithDepth")
        if not match:
            raise RuntimeError(
                f"census verdict {verdict} contradicts analytic membership"
                f" for {inst_s['name']}")
        certified += 1
        rows.append((inst_s["name"], expected, int(m1.sum()), int(m2.sum()),
                     verdict, match))
    files = [
        _write_csv(out / "borel.csv",
                   ("name", "expected", "support_d", "support_d2", "verdict", "match"),
                   rows),
        _write_json(out / "summary.json", {
            "depths": [cfg["d"], cfg["d2"]],
            "certified": certified,
            "frontier": frontier,
        }),
    ]
    return files


SCENARIOS = {
    "duality": run_duality,
    "counterexample": run_counterexample,
    "selection": run_selection,
    "marechal": run_marechal,
    "finiteness": run_finiteness,
    "borel": run_borel,
}
