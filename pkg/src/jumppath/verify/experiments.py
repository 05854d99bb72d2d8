"""The six statistical experiments.

Each ``run_*`` takes a :class:`Scenario` and returns a :class:`Report` whose
checks are computed from estimates alone. Pathwise properties (nesting,
tube radius, domain size) are checked per replica on shared seeds, so they
are exact rather than statistical.
"""

from __future__ import annotations

import math

import numpy as np

from ..estimate import (
    EstimateError,
    TubeSpec,
    endpoint_samples,
    estimate_hitting_prob,
    estimate_mean_exit_time,
    exit_horizon,
    exit_time_samples,
    occupation_samples,
    summarize,
    summarize_binomial,
    tube_distances,
)
from ..geometry import Domain, GeometryError, cube_grid_union, is_subset
from ..simulate import SimConfig, simulate_paths
from .report import ConfigError, Report, Scenario
from .stats import ks_pvalue, loglog_slope

SLOPE_TOL = 0.3
EXPONENT_TOL = 0.25
KS_LEVEL = 0.01
HITTING_BAND = 10.0
SHAPE_BAND = 20.0
CENTER_BAND = 10.0
PLATEAU_BAND = 1.1


def _origin(scn: Scenario) -> np.ndarray:
    return np.asarray(scn.opt("center", np.zeros(scn.kernel.d)), dtype=float).reshape(scn.kernel.d)


def _unit(d: int) -> np.ndarray:
    e = np.zeros(d)
    e[0] = 1.0
    return e


def _positive(rep: Report, name: str, res):
    rep.check(name, "positivity", res.ci95[0] > 0, res.mean, res.ci95[0], res.ci95[1])


# ---------------------------------------------------------------------------
# on-diagonal density decay
# ---------------------------------------------------------------------------


def run_density_decay(scn: Scenario, workers: int = 1) -> Report:
    """Small-time slope, large-time plateau, off-diagonal envelope, killed-density positivity."""
    small = tuple(float(t) for t in scn.grid)
    if len(small) < 3:
        raise ConfigError(f"{scn.name}: density decay needs at least 3 grid times, got {len(small)}")
    plateau = tuple(float(t) for t in scn.opt("plateau", (1.0, 2.0, 4.0)))
    off_times = tuple(float(t) for t in scn.opt("offdiag_times", (0.025, 0.05, 0.1, 0.2)))
    if any(t <= 0 for t in small + plateau + off_times):
        raise ConfigError(f"{scn.name}: times must be positive")
    if max(off_times) > 0.2:
        raise ConfigError(f"{scn.name}: off-diagonal times must lie in (0, 0.2]")
    h = float(scn.opt("h", 0.05))
    p = scn.kernel
    d = p.d
    x = _origin(scn)
    y_off = x + float(scn.opt("offdiag_distance", 0.5)) * _unit(d)
    if np.linalg.norm(y_off - x) < 1 / 16:
        raise ConfigError(f"{scn.name}: off-diagonal point must be at distance >= 1/16")

    times = sorted(set(small + plateau + off_times))
    ends = endpoint_samples(p, x, times, scn.n, scn.seed, eps_min=scn.eps_min, workers=workers)
    col = {t: j for j, t in enumerate(times)}

    def dens(t, y):
        ball = Domain.ball(y, h)
        return summarize_binomial(ball.contains(ends[:, col[t], :]), scale=1.0 / ball.volume())

    rep = Report(scn.name)
    diag = [rep.record(f"p(t={t:g},x,x)", dens(t, x)) for t in small]
    slope = loglog_slope(small, [r.mean for r in diag])
    target = -d / p.alpha
    rep.check(
        "small-time slope", "slope-in-range", abs(slope - target) <= SLOPE_TOL, slope, target - SLOPE_TOL,
        target + SLOPE_TOL, f"expected {target:g}",
    )

    flat = [rep.record(f"p(t={t:g},x,x)", dens(t, x)) for t in plateau]
    vals = [r.mean for r in flat]
    ratio = max(vals) / min(vals) if min(vals) > 0 else math.inf
    rep.check("large-time plateau max/min", "band", ratio <= PLATEAU_BAND, ratio, hi=PLATEAU_BAND)
    growth = max(vals) / vals[0] if vals[0] > 0 else math.inf
    rep.check(f"no growth after t={plateau[0]:g}", "bound", growth <= PLATEAU_BAND, growth, hi=PLATEAU_BAND)

    off = [rep.record(f"p(t={t:g},x,y)", dens(t, y_off)) for t in off_times]
    ov = [r.mean for r in off]
    rep.check(
        "off-diagonal decreases as t decreases", "monotonicity", all(a < b for a, b in zip(ov, ov[1:])),
        detail=f"|x-y|={np.linalg.norm(y_off - x):g}",
    )

    # killed density p^B(1/2, x, x) for B the unit ball around x
    t_k = float(scn.opt("killed_time", 0.5))
    B = Domain.ball(x, float(scn.opt("killed_radius", 1.0)))
    cfg = SimConfig(scn.eps_min, t_k, stop_domain=B, seed=scn.seed + 1)
    batch = simulate_paths(p, x, cfg, n=scn.n)
    ball = Domain.ball(x, h)
    alive = ~batch.exited & ball.contains(batch.final_positions())
    killed = rep.record(f"pB(t={t_k:g},x,x)", summarize_binomial(alive, scale=1.0 / ball.volume()))
    _positive(rep, "killed density positive", killed)
    return rep


# ---------------------------------------------------------------------------
# exit-time scaling
# ---------------------------------------------------------------------------


def run_exit_scaling(scn: Scenario, workers: int = 1) -> Report:
    radii = tuple(float(r) for r in scn.grid)
    if len(radii) < 2:
        raise ConfigError(f"{scn.name}: exit scaling needs at least 2 radii, got {len(radii)}")
    if any(r <= 0 for r in radii) or list(radii) != sorted(radii):
        raise ConfigError(f"{scn.name}: radii must be positive and increasing")
    p = scn.kernel
    d = p.d
    x = _origin(scn)
    frac = float(scn.opt("offset", 0.7))
    big = Domain.ball(x, radii[-1])
    horizon = scn.opt("horizon") or exit_horizon(p, x, big, scn.seed, scn.eps_min)

    rep = Report(scn.name)
    centre, means = [], []
    for r in radii:
        s = exit_time_samples(p, x, Domain.ball(x, r), scn.n, scn.seed, eps_min=scn.eps_min, horizon=horizon,
                              workers=workers)
        res = rep.record(f"E tau(r={r:g}) centre", summarize(s, censored_frac=float(np.mean(s >= horizon))))
        _positive(rep, f"positive r={r:g} centre", res)
        centre.append(s)
        means.append(res.mean)
    bad = sum(int(np.sum(a > b)) for a, b in zip(centre, centre[1:]))
    ordered = all(a <= b for a, b in zip(means, means[1:]))
    rep.check("monotone in r (shared seeds)", "monotonicity", bad == 0 and ordered, bad, detail="pathwise violations")

    ratios = []
    for r, m in zip(radii, means):
        z = x + frac * r * _unit(d)
        s = exit_time_samples(p, z, Domain.ball(x, r), scn.n, scn.seed, eps_min=scn.eps_min, horizon=horizon,
                              workers=workers)
        res = rep.record(f"E tau(r={r:g}) off-centre {frac:g}r", summarize(s, censored_frac=float(np.mean(s >= horizon))))
        _positive(rep, f"positive r={r:g} off-centre", res)
        ratios.append(m / res.mean if res.mean > 0 else math.inf)
    worst = max(ratios)
    rep.check("centre/off-centre ratio", "band", worst <= CENTER_BAND, worst, hi=CENTER_BAND)

    slope = loglog_slope(radii, means)
    a, b = p.alpha, 2 * p.alpha / d
    ok = abs(slope - a) <= EXPONENT_TOL or abs(slope - b) <= EXPONENT_TOL
    rep.check(
        "fitted exponent", "slope-in-range", ok, slope,
        detail=f"alpha={a:g} (diff {slope - a:+.3f}); 2alpha/d={b:g} (diff {slope - b:+.3f})",
    )
    return rep


# ---------------------------------------------------------------------------
# hitting probabilities
# ---------------------------------------------------------------------------


def run_hitting_linearity(scn: Scenario, workers: int = 1) -> Report:
    fracs = tuple(float(f) for f in scn.grid)
    if len(fracs) < 2:
        raise ConfigError(f"{scn.name}: hitting linearity needs at least 2 volumes")
    p = scn.kernel
    d = p.d
    x = _origin(scn)
    confine = Domain.ball(x, float(scn.opt("confine_radius", 1.0)))
    c = x + float(scn.opt("target_offset", 0.25)) * _unit(d)
    unit_vol = Domain.ball(c, 1.0).volume()
    kw = dict(eps_min=scn.eps_min, workers=workers)

    rep = Report(scn.name)
    per_vol = []
    for f in fracs:
        vol = f * confine.volume()
        target = Domain.ball(c, (vol / unit_vol) ** (1.0 / d))
        if not is_subset(target, confine):
            raise ConfigError(f"{scn.name}: target of volume fraction {f:g} leaves the confining ball")
        res = rep.record(f"P(hit |A|={f:g}|B|)", estimate_hitting_prob(p, x, target, confine, scn.n, scn.seed, **kw))
        _positive(rep, f"positive |A|={f:g}|B|", res)
        per_vol.append(res.mean / vol)
    band = max(per_vol) / min(per_vol) if min(per_vol) > 0 else math.inf
    rep.check("estimate/|A| band", "band", band <= HITTING_BAND, band, hi=HITTING_BAND)

    n_small = int(scn.opt("trivial_n", 200))
    null = estimate_hitting_prob(p, x, Domain.ball(c, 0.0), confine, n_small, scn.seed, **kw)
    rep.check("|A| = 0 never hit", "exact", null.mean == 0.0, null.mean)
    full = estimate_hitting_prob(p, x, confine, confine, n_small, scn.seed, **kw)
    rep.check("target = confine always hit", "exact", full.mean == 1.0, full.mean)
    return rep


# ---------------------------------------------------------------------------
# occupation times
# ---------------------------------------------------------------------------


def _same_volume_shapes(x, R, frac, d, cells):
    side = R * frac ** (1.0 / d)
    radius = (frac * R**d / Domain.ball(x, 1.0).volume()) ** (1.0 / d)
    shift = x + (0.5 * R - 0.5 * side - 0.05 * R) * _unit(d)
    return {
        "solid cube": Domain.cube(x, side),
        "shifted cube": Domain.cube(shift, side),
        "ball": Domain.ball(x, radius),
        "scattered cubes": cube_grid_union(x, R, frac, cells),
    }


def run_occupation_theorem(scn: Scenario, workers: int = 1) -> Report:
    fracs = tuple(float(f) for f in scn.grid)
    if not fracs or any(not 0 < f <= 1 for f in fracs) or list(fracs) != sorted(fracs):
        raise ConfigError(f"{scn.name}: volume fractions must be increasing values in (0, 1]")
    p = scn.kernel
    d = p.d
    x = _origin(scn)
    R = float(scn.opt("R", 1.0))
    Q = Domain.cube(x, R)
    starts = [np.asarray(s, dtype=float).reshape(d) for s in scn.opt("starts", [x])]
    for s in starts:
        if s not in Domain.cube(x, R / 2):
            raise ConfigError(f"{scn.name}: start {s.tolist()} is outside Q(x0, R/2)")
    nested = [Domain.cube(x, R * f ** (1.0 / d)) for f in fracs]
    shapes = _same_volume_shapes(x, R, float(scn.opt("shape_fraction", 0.1)), d, int(scn.opt("cells", 4)))
    for name, s in shapes.items():
        if not is_subset(s, Q):
            raise ConfigError(f"{scn.name}: {name} is not inside Q")
    sets = nested + list(shapes.values()) + [Q]

    rep = Report(scn.name)
    for k, s0 in enumerate(starts):
        tag = f"start {k}"
        horizon = exit_horizon(p, s0, Q, scn.seed, scn.eps_min)
        occ = occupation_samples(p, s0, Q, sets, scn.n, scn.seed, eps_min=scn.eps_min, horizon=horizon,
                                 workers=workers)
        nest = [rep.record(f"{tag} |B|/R^d={f:g}", summarize(occ[:, j])) for j, f in enumerate(fracs)]
        for f, res in zip(fracs, nest):
            _positive(rep, f"{tag} positive |B|/R^d={f:g}", res)
        viol = int(np.sum(np.diff(occ[:, : len(fracs)], axis=1) < 0))
        means_ok = all(a.mean <= b.mean for a, b in zip(nest, nest[1:]))
        rep.check(f"{tag} nested monotone", "monotonicity", viol == 0 and means_ok, viol, detail="pathwise violations")

        base = len(fracs)
        shape_res = {}
        for j, name in enumerate(shapes):
            shape_res[name] = rep.record(f"{tag} {name}", summarize(occ[:, base + j]))
        lowest = min(shape_res.values(), key=lambda r: r.mean)
        _positive(rep, f"{tag} min over same-volume shapes", lowest)
        a, b = shape_res["solid cube"].mean, shape_res["scattered cubes"].mean
        ratio = max(a, b) / min(a, b) if min(a, b) > 0 else math.inf
        rep.check(f"{tag} scattered vs solid ratio", "band", ratio < SHAPE_BAND, ratio, hi=SHAPE_BAND)

        whole = summarize(occ[:, -1])
        exit_est = estimate_mean_exit_time(p, s0, Q, scn.n, scn.seed, eps_min=scn.eps_min, horizon=horizon,
                                           workers=workers)
        rep.check(f"{tag} B = Q gives mean exit time", "exact", whole.mean == exit_est.mean, whole.mean,
                  detail=f"exit={exit_est.mean!r}")
    return rep


# ---------------------------------------------------------------------------
# support theorem
# ---------------------------------------------------------------------------


def default_tubes(d: int, x0) -> dict:
    """Segment, L-shape and polygonal quarter arc, each over [0, 1] with legs of length 0.25."""
    x0 = np.asarray(x0, dtype=float)
    e1 = _unit(d)
    e2 = np.roll(e1, 1) if d > 1 else e1
    arc = [(k / 8, x0 + 0.25 * (np.sin(np.pi / 2 * k / 8) * e1 + (1 - np.cos(np.pi / 2 * k / 8)) * e2))
           for k in range(9)]
    return {
        "segment": [(0.0, x0), (1.0, x0 + 0.25 * e1)],
        "L-shape": [(0.0, x0), (0.5, x0 + 0.25 * e1), (1.0, x0 + 0.25 * e1 + 0.25 * e2)],
        "arc": arc,
    }


def run_support_theorem(scn: Scenario, workers: int = 1) -> Report:
    p = scn.kernel
    x = _origin(scn)
    eps = float(scn.opt("epsilon", 0.25))
    eps_grid = sorted(set(float(e) for e in scn.grid) | {eps})
    tubes = scn.opt("tubes") or default_tubes(p.d, x)
    rep = Report(scn.name)
    for name, wps in tubes.items():
        try:
            tube = TubeSpec.from_waypoints(wps, eps)
        except (EstimateError, ValueError) as e:
            raise ConfigError(f"{scn.name}: tube {name!r}: {e}") from e
        if len(tube.start) != p.d:
            raise ConfigError(f"{scn.name}: tube {name!r} has the wrong dimension")
        dist = tube_distances(p, tube, scn.n, scn.seed, eps_min=scn.eps_min, workers=workers)
        res = rep.record(f"{name} eps={eps:g}", summarize_binomial(dist < eps))
        _positive(rep, f"{name} tube probability", res)
        inside = np.stack([dist < e for e in eps_grid], axis=1)
        viol = int(np.sum(inside[:, :-1] & ~inside[:, 1:]))
        probs = inside.mean(axis=0)
        ok = viol == 0 and bool(np.all(np.diff(probs) >= 0))
        rep.check(f"{name} monotone in eps", "monotonicity", ok, viol,
                  detail=" ".join(f"{e:g}:{q:.4f}" for e, q in zip(eps_grid, probs)))
        if name == "L-shape" or len(tubes) == 1:
            wide = summarize_binomial(dist < 10.0)
            rep.record(f"{name} eps=10", wide)
            rep.check(f"{name} eps=10 near certain", "bound", wide.mean >= 0.99, wide.mean, lo=0.99)
    return rep


# ---------------------------------------------------------------------------
# layered construction
# ---------------------------------------------------------------------------


def run_meyer_equivalence(scn: Scenario, workers: int = 1) -> Report:
    betas = tuple(float(b) for b in scn.grid)
    if not betas:
        raise ConfigError(f"{scn.name}: need at least one beta")
    for b in betas:
        if not scn.eps_min < b < 1:
            raise ConfigError(f"{scn.name}: beta={b:g} must lie in (eps_min={scn.eps_min:g}, 1)")
    p = scn.kernel
    d = p.d
    x = _origin(scn)
    dom = Domain.ball(x, float(scn.opt("radius", 0.3)))
    kw = dict(eps_min=scn.eps_min, horizon=math.inf, workers=workers)

    rep = Report(scn.name)
    direct = exit_time_samples(p, x, dom, scn.n, scn.seed, **kw)
    rep.record("direct exit time", summarize(direct))
    # the layered samples use a different seed so the two samples are independent
    for k, b in enumerate(betas):
        layered = exit_time_samples(p, x, dom, scn.n, scn.seed + 1 + k, beta=b, **kw)
        rep.record(f"layered exit time beta={b:g}", summarize(layered))
        pv = ks_pvalue(direct, layered)
        rep.check(f"KS beta={b:g}", "ks-test", pv > KS_LEVEL, pv, lo=KS_LEVEL)

    # exactly one inserted jump before t0, landing near z
    zlen = float(scn.opt("z_length", 0.4))
    delta = float(scn.opt("delta", 0.1))
    t0 = float(scn.opt("t0", 0.1))
    beta = zlen / 2
    if not scn.eps_min < beta < 1:
        raise ConfigError(f"{scn.name}: |z|/2 must exceed eps_min")
    z = x + zlen * _unit(d)
    batch = simulate_paths(p, x, SimConfig(scn.eps_min, t0, seed=scn.seed + 100), n=scn.n, beta=beta)
    n_large = np.bincount(batch.path_index, weights=batch.large, minlength=len(batch))
    landed = np.zeros(len(batch), dtype=bool)
    ev = np.flatnonzero(batch.large)
    landed[batch.path_index[ev]] = Domain.ball(z, delta).contains(batch.positions[ev])
    one = rep.record("one inserted jump landing in B(z,delta)", summarize_binomial((n_large == 1) & landed))
    _positive(rep, "one inserted jump event", one)

    cfg0 = SimConfig(scn.eps_min, 0.0, stop_domain=dom, seed=scn.seed)
    a = simulate_paths(p, x, cfg0, n=8)
    b = simulate_paths(p, x, cfg0, n=8, beta=betas[0])
    same = (a.times.size == b.times.size == 8 and np.array_equal(a.positions, b.positions)
            and not b.large.any())
    rep.check("t_max = 0 degenerate agreement", "exact", same)
    return rep


RUNS = {
    "density-decay": run_density_decay,
    "exit-scaling": run_exit_scaling,
    "hitting-linearity": run_hitting_linearity,
    "occupation-theorem": run_occupation_theorem,
    "support-theorem": run_support_theorem,
    "meyer-equivalence": run_meyer_equivalence,
}


def run_scenario(scn: Scenario, workers: int = 1) -> Report:
    try:
        fn = RUNS[scn.run]
    except KeyError:
        raise ConfigError(f"unknown experiment {scn.run!r}") from None
    try:
        return fn(scn, workers)
    except (GeometryError, EstimateError) as e:
        raise ConfigError(f"{scn.name}: {e}") from e
