"""Monte Carlo estimators with error bars.

Every estimator reduces to a per-replica value computed on independent paths
(replica ``i`` always reads stream ``(seed, i)``), then a compensated mean.
Replicas are processed in fixed-size blocks that may be farmed out to worker
processes; the block layout does not depend on the worker count, so results
are identical for any ``workers``.
"""

from __future__ import annotations

import functools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import functionals as fn
from .geometry import Domain, EmptySet, Region, WholeSpace, is_subset
from .kernel import KernelParams, default_eps_min
from .simulate import SimConfig, simulate_paths

Z95 = 1.959963984540054
BLOCK = 2048
PILOT_PATHS = 100
PILOT_FACTOR = 50.0
PILOT_CAP = 10.0
CENSOR_FLAG = 1e-3
PILOT_SEED_SALT = 0x9E3779B97F4A7C15

CSV_HEADER = "scenario,estimator,params_hash,mean,std_error,n,ci_lo,ci_hi,censored_frac,elapsed"


class EstimateError(ValueError):
    pass


@dataclass(frozen=True)
class EstimateResult:
    mean: float
    std_error: float
    n: int
    ci95: tuple
    elapsed: float = 0.0
    censored_frac: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def censored(self) -> bool:
        """True when more than 0.1% of the paths hit the horizon."""
        return self.censored_frac > CENSOR_FLAG

    def excludes_zero(self) -> bool:
        return self.ci95[0] > 0.0

    def csv_row(self, scenario: str, estimator: str, params_hash: str) -> str:
        vals = [
            scenario,
            estimator,
            params_hash,
            repr(self.mean),
            repr(self.std_error),
            str(self.n),
            repr(self.ci95[0]),
            repr(self.ci95[1]),
            repr(self.censored_frac),
            f"{self.elapsed:.3f}",
        ]
        return ",".join(vals)


@dataclass(frozen=True)
class TubeSpec:
    """Polygon through ``(time, point)`` waypoints starting at time 0, plus a radius."""

    times: tuple
    points: tuple
    epsilon: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        p = np.asarray(self.points, dtype=float)
        p = p.reshape(t.size, -1)
        if t.size < 1 or t[0] != 0.0:
            raise EstimateError("tube waypoints must start at time 0")
        if np.any(np.diff(t) <= 0):
            raise EstimateError("tube waypoint times must be strictly increasing")
        if not np.all(np.isfinite(p)):
            raise EstimateError("tube waypoints must be finite")
        if not self.epsilon > 0:
            raise EstimateError("tube radius must be positive")
        object.__setattr__(self, "times", tuple(t.tolist()))
        object.__setattr__(self, "points", tuple(map(tuple, p.tolist())))

    @classmethod
    def from_waypoints(cls, waypoints, epsilon: float) -> "TubeSpec":
        times, points = zip(*waypoints)
        return cls(tuple(times), tuple(np.atleast_1d(np.asarray(p, dtype=float)).tolist() for p in points), epsilon)

    @property
    def start(self) -> np.ndarray:
        return np.asarray(self.points[0])

    @property
    def t0(self) -> float:
        return self.times[-1]

    def phi(self, s) -> np.ndarray:
        p = np.asarray(self.points)
        return np.array([np.interp(s, self.times, p[:, k]) for k in range(p.shape[1])])


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


def wilson_interval(k: int, n: int, z: float = Z95):
    if n <= 0:
        raise EstimateError("need n > 0")
    p = k / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    # the bounds are exactly 0 and 1 at the extremes; avoid rounding residue
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


def summarize(values, elapsed: float = 0.0, censored_frac: float = 0.0, **meta) -> EstimateResult:
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        raise EstimateError("need at least 2 replicas")
    mean = math.fsum(values) / n
    var = math.fsum((values - mean) ** 2) / (n - 1)
    se = math.sqrt(var / n)
    return EstimateResult(mean, se, n, (mean - Z95 * se, mean + Z95 * se), elapsed, censored_frac, meta)


def summarize_binomial(hits, elapsed: float = 0.0, scale: float = 1.0, **meta) -> EstimateResult:
    """Proportion with binomial error; Wilson interval when either count is below 5.

    ``scale`` multiplies mean, error and interval (used for densities).
    """
    hits = np.asarray(hits, dtype=bool)
    n = hits.size
    if n < 2:
        raise EstimateError("need at least 2 replicas")
    k = int(hits.sum())
    p = k / n
    se = math.sqrt(p * (1 - p) / n)
    if k < 5 or n - k < 5:
        lo, hi = wilson_interval(k, n)
    else:
        lo, hi = max(0.0, p - Z95 * se), min(1.0, p + Z95 * se)
    return EstimateResult(p * scale, se * scale, n, (lo * scale, hi * scale), elapsed, 0.0, dict(meta, hits=k))


# ---------------------------------------------------------------------------
# replica fan-out
# ---------------------------------------------------------------------------


def replica_values(func, n: int, workers: int = 1) -> np.ndarray:
    """Concatenate ``func(replica_block)`` over fixed blocks of ``range(n)``."""
    blocks = [np.arange(i, min(i + BLOCK, n)) for i in range(0, n, BLOCK)]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(func, blocks))
    else:
        parts = [func(b) for b in blocks]
    return np.concatenate(parts)


def _check_n(n: int):
    if int(n) != n or n < 2:
        raise EstimateError(f"n must be an integer >= 2, got {n}")


def _eps(params, eps_min):
    return default_eps_min(params) if eps_min is None else eps_min


def _point(params, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (params.d,):
        raise EstimateError(f"point must have dimension {params.d}")
    return x


# ---------------------------------------------------------------------------
# exit times
# ---------------------------------------------------------------------------


def _exit_block(reps, params, x, dom, eps_min, horizon, seed, beta):
    cfg = SimConfig(eps_min, horizon, stop_domain=dom, seed=seed)
    b = simulate_paths(params, x, cfg, replicas=reps, beta=beta)
    return np.where(b.exited, b.t_final, horizon)


def _inside(params, x, dom):
    x = _point(params, x)
    if x not in dom:
        raise EstimateError("start point must lie inside the domain")
    return x


def exit_horizon(params, x, dom, seed, eps_min=None, cap: float = PILOT_CAP) -> float:
    """50 x the mean exit time of 100 pilot paths (each censored at ``cap``)."""
    _inside(params, x, dom)
    eps_min = _eps(params, eps_min)
    pilot_seed = (int(seed) + PILOT_SEED_SALT) % 2**64
    vals = _exit_block(np.arange(PILOT_PATHS), params, _point(params, x), dom, eps_min, cap, pilot_seed, None)
    return PILOT_FACTOR * float(np.mean(vals))


def exit_time_samples(
    params: KernelParams,
    x,
    dom: Region,
    n: int,
    seed: int,
    *,
    eps_min: Optional[float] = None,
    horizon: Optional[float] = None,
    beta: Optional[float] = None,
    workers: int = 1,
) -> np.ndarray:
    """Exit times (censored at the horizon) of ``n`` replicas; ``beta`` selects the layered sampler."""
    _check_n(n)
    x = _inside(params, x, dom)
    eps_min = _eps(params, eps_min)
    if horizon is None:
        horizon = exit_horizon(params, x, dom, seed, eps_min)
    func = functools.partial(
        _exit_block, params=params, x=x, dom=dom, eps_min=eps_min, horizon=horizon, seed=seed, beta=beta
    )
    return replica_values(func, n, workers)


def estimate_mean_exit_time(
    params: KernelParams,
    x,
    dom: Region,
    n: int,
    seed: int,
    *,
    eps_min: Optional[float] = None,
    horizon: Optional[float] = None,
    workers: int = 1,
) -> EstimateResult:
    """Mean of the exit time from ``dom`` started at ``x``.

    Paths still inside at the horizon contribute the horizon; the censored
    fraction is reported.
    """
    t0 = time.perf_counter()
    _check_n(n)
    eps_min = _eps(params, eps_min)
    if horizon is None:
        horizon = exit_horizon(params, x, dom, seed, eps_min)
    vals = exit_time_samples(params, x, dom, n, seed, eps_min=eps_min, horizon=horizon, workers=workers)
    cens = float(np.mean(vals >= horizon))
    return summarize(vals, time.perf_counter() - t0, cens, horizon=horizon)


# ---------------------------------------------------------------------------
# hitting probabilities
# ---------------------------------------------------------------------------


def _hit_block(reps, params, x, target, confine, eps_min, seed):
    cfg = SimConfig(eps_min, math.inf, stop_domain=confine, seed=seed)
    b = simulate_paths(params, x, cfg, replicas=reps)
    # a start inside the open target counts as an immediate hit
    return ~np.isnan(fn.batch_hitting_time(b, target)) | target.contains(b.positions[b.first])


def estimate_hitting_prob(
    params: KernelParams,
    x,
    target: Region,
    confine: Region,
    n: int,
    seed: int,
    *,
    eps_min: Optional[float] = None,
    workers: int = 1,
) -> EstimateResult:
    """P(target is hit before the path leaves ``confine``)."""
    t0 = time.perf_counter()
    _check_n(n)
    x = _point(params, x)
    if x not in confine:
        raise EstimateError("start point must lie inside the confining domain")
    if not is_subset(target, confine):
        raise EstimateError("target must be contained in the confining domain")
    if not math.isfinite(confine.volume()):
        raise EstimateError("confining domain must be bounded")
    func = functools.partial(
        _hit_block, params=params, x=x, target=target, confine=confine, eps_min=_eps(params, eps_min), seed=seed
    )
    hits = replica_values(func, n, workers)
    return summarize_binomial(hits, time.perf_counter() - t0, target_volume=target.volume())


# ---------------------------------------------------------------------------
# occupation times
# ---------------------------------------------------------------------------


def _occupation_block(reps, params, x, Q, sets, eps_min, horizon, seed):
    cfg = SimConfig(eps_min, horizon, stop_domain=Q, seed=seed)
    b = simulate_paths(params, x, cfg, replicas=reps)
    return np.column_stack([fn.batch_occupation_time(b, s, b.t_final) for s in sets])


def occupation_samples(
    params: KernelParams,
    x,
    Q: Domain,
    sets,
    n: int,
    seed: int,
    *,
    eps_min: Optional[float] = None,
    horizon: Optional[float] = None,
    workers: int = 1,
) -> np.ndarray:
    """Occupation times of each set before the exit from ``Q``; shape (n, len(sets)).

    All sets are evaluated on the same paths.
    """
    _check_n(n)
    x = _point(params, x)
    if not isinstance(Q, Domain) or Q.shape != "cube":
        raise EstimateError("occupation times are taken before the exit from a cube Q(x0, R)")
    if x not in Domain.cube(Q.center, Q.extent / 2):
        raise EstimateError("start point must lie in Q(x0, R/2)")
    for s in sets:
        if not is_subset(s, Q):
            raise EstimateError("occupation set must be contained in Q")
    eps_min = _eps(params, eps_min)
    if horizon is None:
        horizon = exit_horizon(params, x, Q, seed, eps_min)
    func = functools.partial(
        _occupation_block, params=params, x=x, Q=Q, sets=tuple(sets), eps_min=eps_min, horizon=horizon, seed=seed
    )
    return replica_values(func, n, workers)


def estimate_occupation(
    params: KernelParams,
    x,
    Q: Domain,
    B: Region,
    n: int,
    seed: int,
    *,
    eps_min: Optional[float] = None,
    horizon: Optional[float] = None,
    workers: int = 1,
) -> EstimateResult:
    """Expected time spent in ``B`` before leaving the cube ``Q``."""
    t0 = time.perf_counter()
    eps_min = _eps(params, eps_min)
    x = _point(params, x)
    if horizon is None:
        horizon = exit_horizon(params, x, Q, seed, eps_min)
    vals = occupation_samples(params, x, Q, [B], n, seed, eps_min=eps_min, horizon=horizon, workers=workers)[:, 0]
    return summarize(vals, time.perf_counter() - t0, horizon=horizon)


# ---------------------------------------------------------------------------
# resolvent
# ---------------------------------------------------------------------------


def _resolvent_block(reps, params, x, C, lam, T, eps_min, seed):
    cfg = SimConfig(eps_min, T, seed=seed)
    b = simulate_paths(params, x, cfg, replicas=reps)
    return fn.batch_discounted_occupation(b, C, lam, T)


def estimate_resolvent(
    params: KernelParams,
    x,
    C: Region,
    lam: float,
    n: int,
    seed: int,
    *,
    tol: float = 1e-4,
    eps_min: Optional[float] = None,
    workers: int = 1,
) -> EstimateResult:
    """E^x of the integral of exp(-lam t) 1_C(X_t) over t >= 0.

    Paths run to T = ln(1/tol)/lam; the neglected tail is at most tol/lam and
    is added to the upper end of the interval.
    """
    t0 = time.perf_counter()
    if not lam > 0:
        raise EstimateError("lambda must be positive")
    if not 0 < tol < 1:
        raise EstimateError("tol must lie in (0, 1)")
    _check_n(n)
    x = _point(params, x)
    T = math.log(1.0 / tol) / lam
    if isinstance(C, EmptySet):
        vals = np.zeros(n)
    else:
        func = functools.partial(
            _resolvent_block, params=params, x=x, C=C, lam=lam, T=T, eps_min=_eps(params, eps_min), seed=seed
        )
        vals = replica_values(func, n, workers)
    res = summarize(vals, time.perf_counter() - t0, horizon=T, tail=tol / lam)
    lo, hi = res.ci95
    hi = math.nextafter(hi + tol / lam, math.inf)
    return EstimateResult(res.mean, res.std_error, res.n, (lo, hi), res.elapsed, 0.0, res.meta)


# ---------------------------------------------------------------------------
# transition density
# ---------------------------------------------------------------------------


def _endpoint_block(reps, params, x, times, eps_min, seed):
    cfg = SimConfig(eps_min, max(times), seed=seed)
    b = simulate_paths(params, x, cfg, replicas=reps)
    return np.stack([b.positions_at(t) for t in times], axis=1)


def endpoint_samples(params, x, times, n, seed, *, eps_min=None, workers=1) -> np.ndarray:
    """X_t for each t in ``times`` on shared paths; shape (n, len(times), d)."""
    x = _point(params, x)
    func = functools.partial(
        _endpoint_block, params=params, x=x, times=tuple(float(t) for t in times), eps_min=_eps(params, eps_min), seed=seed
    )
    return replica_values(func, n, workers)


def density_estimates(
    params: KernelParams,
    times,
    x,
    y,
    n: int,
    h: float = 0.05,
    seed: int = 0,
    *,
    eps_min: Optional[float] = None,
    workers: int = 1,
) -> list:
    """Ball-kernel estimates of p(t, x, y) for several t from one set of paths."""
    t0 = time.perf_counter()
    times = [float(t) for t in times]
    if not times or min(times) <= 0:
        raise EstimateError("times must be positive")
    if not h > 0:
        raise EstimateError("bandwidth must be positive")
    if int(n) != n or n < 1000:
        raise EstimateError("density estimates need n >= 1000")
    y = _point(params, y)
    ball = Domain.ball(y, h)
    ends = endpoint_samples(params, x, times, n, seed, eps_min=eps_min, workers=workers)
    elapsed = time.perf_counter() - t0
    return [
        summarize_binomial(ball.contains(ends[:, j, :]), elapsed, scale=1.0 / ball.volume(), h=h, t=t)
        for j, t in enumerate(times)
    ]


def estimate_density(params, t, x, y, n, h=0.05, seed=0, *, eps_min=None, workers=1) -> EstimateResult:
    """(fraction of endpoints X_t in B(y, h)) / |B(y, h)|; the O(h) smoothing bias is not modelled."""
    return density_estimates(params, [t], x, y, n, h, seed, eps_min=eps_min, workers=workers)[0]


# ---------------------------------------------------------------------------
# tubes
# ---------------------------------------------------------------------------


def _tube_block(reps, params, tube, eps_min, seed):
    cfg = SimConfig(eps_min, tube.t0, seed=seed)
    b = simulate_paths(params, tube.start, cfg, replicas=reps)
    return fn.batch_tube_distance(b, tube.times, tube.points)


def tube_distances(params, tube: TubeSpec, n: int, seed: int, *, eps_min=None, workers=1) -> np.ndarray:
    """sup over s <= t0 of |X_s - phi(s)| for each replica."""
    _check_n(n)
    if len(tube.start) != params.d:
        raise EstimateError("tube dimension does not match the kernel")
    func = functools.partial(_tube_block, params=params, tube=tube, eps_min=_eps(params, eps_min), seed=seed)
    return replica_values(func, n, workers)


def estimate_tube_probability(
    params: KernelParams,
    tube: TubeSpec,
    n: int,
    seed: int,
    *,
    start=None,
    eps_min: Optional[float] = None,
    workers: int = 1,
) -> EstimateResult:
    """P(sup over s <= t0 of |X_s - phi(s)| < epsilon) for paths started at phi(0)."""
    t0 = time.perf_counter()
    if start is not None and not np.array_equal(np.atleast_1d(np.asarray(start, dtype=float)), tube.start):
        raise EstimateError("paths must start at the first tube waypoint")
    dist = tube_distances(params, tube, n, seed, eps_min=eps_min, workers=workers)
    return summarize_binomial(dist < tube.epsilon, time.perf_counter() - t0, epsilon=tube.epsilon)


__all__ = [
    "CSV_HEADER",
    "EstimateError",
    "EstimateResult",
    "TubeSpec",
    "WholeSpace",
    "density_estimates",
    "endpoint_samples",
    "estimate_density",
    "estimate_hitting_prob",
    "estimate_mean_exit_time",
    "estimate_occupation",
    "estimate_resolvent",
    "estimate_tube_probability",
    "exit_horizon",
    "exit_time_samples",
    "occupation_samples",
    "replica_values",
    "summarize",
    "summarize_binomial",
    "tube_distances",
    "wilson_interval",
]
