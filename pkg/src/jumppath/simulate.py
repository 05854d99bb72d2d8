"""Exact simulation of the truncated jump process.

Direct simulation proposes jumps from the isotropic dominating kernel
``kappa2 |w|^(-d-alpha)`` on ``eps_min <= |w| < 1`` and thins them with
probability ``a(x, x+w) / kappa2``. The layered construction simulates only
jumps below ``beta`` the same way and inserts big jumps whenever the
accumulated big-jump compensator crosses an independent unit exponential.

Replicas run in lockstep. Replica ``i`` reads its k-th proposal from counter
``(i, k)`` of the master seed, so a path never depends on the batch it was
generated in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import Region
from .kernel import (
    KernelParams,
    MAX_PROPOSALS,
    default_eps_min,
    direction_columns,
    directions,
    large_jump_rate,
    radial_quantile,
)
from .paths import Path, PathBatch
from .rng import TAG_CLOCK, TAG_LARGE, TAG_STEP, CounterRNG

CHUNK = 4096


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Simulation controls. ``t_max`` may be infinite only when ``stop_domain`` is set."""

    eps_min: float
    t_max: float
    stop_domain: Optional[Region] = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.eps_min < 1.0:
            raise SimulationError(f"eps_min must lie in (0, 1), got {self.eps_min}")
        if not self.t_max >= 0:
            raise SimulationError(f"t_max must be >= 0, got {self.t_max}")
        if math.isinf(self.t_max) and self.stop_domain is None:
            raise SimulationError("an infinite horizon needs a stop domain")
        if not 0 <= int(self.seed) < 2**64:
            raise SimulationError(f"seed must fit in 64 bits, got {self.seed}")

    @classmethod
    def default(cls, params: KernelParams, t_max: float, **kw) -> "SimConfig":
        return cls(default_eps_min(params), t_max, **kw)

    def replace(self, **kw) -> "SimConfig":
        fields = dict(eps_min=self.eps_min, t_max=self.t_max, stop_domain=self.stop_domain, seed=self.seed)
        fields.update(kw)
        return SimConfig(**fields)


@dataclass
class MeyerState:
    """Per-replica layering state: current clock level and accumulated compensator."""

    beta: float
    clocks: np.ndarray
    compensator: np.ndarray


def _start(params: KernelParams, x0, cfg: SimConfig) -> np.ndarray:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (params.d,):
        raise SimulationError(f"start point must have shape ({params.d},), got {x0.shape}")
    if cfg.stop_domain is not None and x0 not in cfg.stop_domain:
        raise SimulationError(f"start point {x0.tolist()} is not inside the stop domain")
    return x0


def _large_jumps(params, x, beta, rng, reps, step):
    k, d = x.shape
    out = np.empty((k, d))
    pending = np.arange(k)
    ncol = 2 + direction_columns(d)
    attempt = 0
    while pending.size:
        u = rng.uniforms(reps[pending], step, TAG_LARGE + attempt, ncol)
        r = radial_quantile(u[:, 0], beta, 1.0, params.alpha)
        w = r[:, None] * directions(d, u[:, 2:])
        xp = x[pending]
        ok = u[:, 1] * params.kappa2 < params.a(xp, xp + w)
        out[pending[ok]] = w[ok]
        pending = pending[~ok]
        attempt += 1
        if pending.size and attempt >= MAX_PROPOSALS:
            raise RuntimeError(f"large-jump rejection exceeded {MAX_PROPOSALS} proposals")
    return out


def _run(params: KernelParams, x0, cfg: SimConfig, replicas, beta: Optional[float]) -> PathBatch:
    x0 = _start(params, x0, cfg)
    d = params.d
    rng = CounterRNG(cfg.seed)
    reps = np.asarray(replicas, dtype=np.uint64).reshape(-1)
    m = reps.size
    meyer = beta is not None
    hi = beta if meyer else 1.0
    lo = cfg.eps_min
    lam_small = params.dominating_rate(lo, hi)
    ncol = 3 + direction_columns(d)

    pos = np.tile(x0, (m, 1))
    t = np.zeros(m)
    t_final = np.full(m, float(cfg.t_max))
    exited = np.zeros(m, dtype=bool)
    if meyer:
        state = MeyerState(beta, -np.log(rng.uniforms(reps, 0, TAG_CLOCK, 1)[:, 0]), np.zeros(m))
        # big-jump rate at each replica's current position; refreshed after moves
        big_rate = np.asarray(large_jump_rate(params, pos, beta), dtype=float)

    ev_i = [np.arange(m)]
    ev_t = [np.zeros(m)]
    ev_x = [pos.copy()]
    ev_l = [np.zeros(m, dtype=bool)]

    act = np.arange(m)
    step = 0
    while act.size:
        u = rng.uniforms(reps[act], step, TAG_STEP, ncol)
        dt = -np.log(u[:, 0]) / lam_small
        if meyer:
            lam = big_rate[act]
            to_clock = (state.clocks[act] - state.compensator[act]) / lam
            insert = to_clock < dt
            dt = np.where(insert, to_clock, dt)
        t_old = t[act]
        t_new = np.maximum(t_old + dt, np.nextafter(t_old, np.inf))
        alive = t_new <= cfg.t_max
        act, u, t_new = act[alive], u[alive], t_new[alive]
        if not act.size:
            break
        t[act] = t_new
        x = pos[act]

        r = radial_quantile(u[:, 1], lo, hi, params.alpha)
        w = r[:, None] * directions(d, u[:, 3:])
        moved = u[:, 2] * params.kappa2 < params.a(x, x + w)
        if meyer:
            insert = insert[alive]
            lam = lam[alive]
            moved &= ~insert
            ci = act[~insert]
            state.compensator[ci] += lam[~insert] * dt[alive][~insert]
            if insert.any():
                ii = act[insert]
                w[insert] = _large_jumps(params, x[insert], beta, rng, reps[ii], step)
                state.compensator[ii] = 0.0
                state.clocks[ii] = -np.log(rng.uniforms(reps[ii], step + 1, TAG_CLOCK, 1)[:, 0])
                moved |= insert

        if moved.any():
            mi = act[moved]
            newx = x[moved] + w[moved]
            pos[mi] = newx
            if meyer and params.constant is None:
                big_rate[mi] = large_jump_rate(params, newx, beta)
            ev_i.append(mi)
            ev_t.append(t_new[moved])
            ev_x.append(newx)
            ev_l.append(insert[moved] if meyer else np.zeros(mi.size, dtype=bool))
            if cfg.stop_domain is not None:
                out = ~cfg.stop_domain.contains(newx)
                if out.any():
                    gone = mi[out]
                    exited[gone] = True
                    t_final[gone] = t_new[moved][out]
                    act = act[~np.isin(act, gone, assume_unique=True)]
        step += 1

    idx = np.concatenate(ev_i)
    order = np.argsort(idx, kind="stable")
    counts = np.bincount(idx, minlength=m)
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return PathBatch(
        np.concatenate(ev_t)[order],
        np.concatenate(ev_x)[order],
        offsets,
        t_final,
        exited,
        np.concatenate(ev_l)[order],
        reps,
    )


def simulate_paths(
    params: KernelParams,
    x0,
    cfg: SimConfig,
    replicas: Optional[Sequence[int]] = None,
    n: Optional[int] = None,
    beta: Optional[float] = None,
) -> PathBatch:
    """Simulate many replicas; ``replicas`` defaults to ``range(n)``.

    With ``beta`` set, uses the big-jump layering instead of direct thinning.
    """
    if replicas is None:
        if n is None:
            raise SimulationError("give either replicas or n")
        replicas = np.arange(n)
    replicas = np.asarray(replicas, dtype=np.int64)
    if beta is not None and not cfg.eps_min < beta < 1.0:
        raise SimulationError(f"need eps_min < beta < 1, got eps_min={cfg.eps_min}, beta={beta}")
    parts = [_run(params, x0, cfg, replicas[i : i + CHUNK], beta) for i in range(0, replicas.size, CHUNK)]
    return parts[0] if len(parts) == 1 else PathBatch.concatenate(parts)


def simulate_path(params: KernelParams, x0, cfg: SimConfig, replica: int = 0) -> Path:
    """One path from the stream ``(cfg.seed, replica)``."""
    return simulate_paths(params, x0, cfg, replicas=[replica])[0]


def meyer_compose(params: KernelParams, x0, beta: float, cfg: SimConfig, replica: int = 0) -> Path:
    """One path built by the big-jump layering with cutoff ``beta``."""
    return simulate_paths(params, x0, cfg, replicas=[replica], beta=beta)[0]
