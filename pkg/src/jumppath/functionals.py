"""Exact pathwise functionals of piecewise-constant paths.

Single-path versions take a :class:`Path`; the ``batch_*`` versions work on a
:class:`PathBatch` with segment arithmetic and return one value per path.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .geometry import Region
from .paths import Path, PathBatch

NOT_EXITED = None
NOT_HIT = None


class FunctionalError(ValueError):
    pass


def _as_batch(path: Path) -> PathBatch:
    return PathBatch(
        path.times,
        path.positions,
        np.array([0, len(path)], dtype=np.int64),
        np.array([path.t_final]),
        np.array([path.stop_reason == "domain-exited"]),
        path.large,
        np.zeros(1, dtype=np.uint64),
    )


def _first_flagged(batch: PathBatch, flag: np.ndarray) -> np.ndarray:
    """Index of the first flagged event per path, -1 if none."""
    big = np.iinfo(np.int64).max
    key = np.where(flag, np.arange(flag.size), big)
    first = np.minimum.reduceat(key, batch.first)
    return np.where(first == big, -1, first)


def batch_first_exit(batch: PathBatch, dom: Region):
    """(exit times, exit positions) per path; NaN where the path stays inside."""
    inside = dom.contains(batch.positions)
    if not np.all(inside[batch.first]):
        raise FunctionalError("every path must start inside the domain")
    k = _first_flagged(batch, ~inside)
    hit = k >= 0
    times = np.full(len(batch), np.nan)
    pos = np.full((len(batch), batch.d), np.nan)
    times[hit] = batch.times[k[hit]]
    pos[hit] = batch.positions[k[hit]]
    return times, pos


def batch_hitting_time(batch: PathBatch, target: Region) -> np.ndarray:
    """First event time t > 0 with X_t in target, per path; NaN if none by t_final.

    The start event is skipped, so a path starting in the target reports the
    first later event that is still (or again) inside it.
    """
    inside = target.contains(batch.positions)
    inside[batch.first] = False
    k = _first_flagged(batch, inside)
    return np.where(k >= 0, batch.times[np.maximum(k, 0)], np.nan)


def _runs(batch: PathBatch, inset: np.ndarray):
    """Maximal runs of consecutive in-set events: (path, start time, end time)."""
    n_ev = inset.size
    prev_in = np.zeros(n_ev, dtype=bool)
    prev_in[1:] = inset[:-1]
    prev_in[batch.first] = False
    next_in = np.zeros(n_ev, dtype=bool)
    next_in[:-1] = inset[1:]
    next_in[batch.last] = False
    starts = np.flatnonzero(inset & ~prev_in)
    ends = np.flatnonzero(inset & ~next_in)
    nxt = batch.next_times()
    return batch.path_index[starts], batch.times[starts], nxt[ends]


def batch_occupation_time(batch: PathBatch, region: Region, until) -> np.ndarray:
    """Time spent in ``region`` on [0, until) per path (``until`` scalar or per path).

    Each maximal run of consecutive in-region holding intervals contributes
    its end minus its start, so a path that never leaves the region before
    ``until`` returns ``until`` exactly.
    """
    until = np.broadcast_to(np.asarray(until, dtype=float), (len(batch),))
    if np.any(until > batch.t_final) or np.any(np.isnan(until)):
        raise FunctionalError("until must not exceed t_final")
    path, s, e = _runs(batch, region.contains(batch.positions))
    u = until[path]
    contrib = np.maximum(np.minimum(e, u) - s, 0.0)
    return np.bincount(path, weights=contrib, minlength=len(batch))


def batch_discounted_occupation(batch: PathBatch, region: Region, lam: float, until) -> np.ndarray:
    """Integral of exp(-lam t) 1_region(X_t) over [0, until), in closed form per run."""
    until = np.broadcast_to(np.asarray(until, dtype=float), (len(batch),))
    if np.any(until > batch.t_final):
        raise FunctionalError("until must not exceed t_final")
    path, s, e = _runs(batch, region.contains(batch.positions))
    e = np.minimum(e, until[path])
    contrib = np.where(e > s, (np.exp(-lam * s) - np.exp(-lam * e)) / lam, 0.0)
    return np.bincount(path, weights=contrib, minlength=len(batch))


def batch_tube_distance(batch: PathBatch, waypoint_times, waypoints) -> np.ndarray:
    """sup over s <= t0 of |X_s - phi(s)| per path, phi the polygon through the waypoints.

    On each piece where both X (constant) and phi (affine) are smooth the
    distance is convex, so the sup is attained at piece endpoints.
    """
    wt = np.asarray(waypoint_times, dtype=float)
    wp = np.asarray(waypoints, dtype=float).reshape(wt.size, -1)
    t0 = wt[-1]
    if np.any(batch.t_final < t0):
        raise FunctionalError("paths must be simulated up to the tube horizon")
    out = np.empty(len(batch))
    for i in range(len(batch)):
        s, e = batch.offsets[i], batch.offsets[i + 1]
        et = batch.times[s:e]
        keep = et <= t0
        et = et[keep]
        ex = batch.positions[s:e][keep]
        grid = np.union1d(et, wt)
        # position held on [grid[j], grid[j+1]) and at t0
        xi = ex[np.searchsorted(et, grid, side="right") - 1]
        phi = np.column_stack([np.interp(grid, wt, wp[:, k]) for k in range(wp.shape[1])])
        left = np.linalg.norm(xi - phi, axis=1)
        right = np.linalg.norm(xi[:-1] - phi[1:], axis=1)
        out[i] = max(left.max(), right.max() if right.size else 0.0)
    return out


# ---------------------------------------------------------------------------
# single-path API
# ---------------------------------------------------------------------------


def first_exit(path: Path, dom: Region):
    """(exit time, exit position), or None if the path stays in ``dom`` through t_final."""
    if path.x0 not in dom:
        raise FunctionalError("path must start inside the domain")
    t, x = batch_first_exit(_as_batch(path), dom)
    if math.isnan(t[0]):
        return NOT_EXITED
    return float(t[0]), x[0]


def hitting_time(path: Path, target: Region) -> Optional[float]:
    t = batch_hitting_time(_as_batch(path), target)[0]
    return None if math.isnan(t) else float(t)


def occupation_time(path: Path, region: Region, until: float) -> float:
    return float(batch_occupation_time(_as_batch(path), region, until)[0])
