"""Piecewise-constant sample paths and ragged batches of them."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

HORIZON = "horizon-reached"
EXITED = "domain-exited"


@dataclass(frozen=True, eq=False)
class Path:
    """Right-continuous pure-jump path: ``X_t = positions[i]`` for ``times[i] <= t < times[i+1]``.

    ``large`` flags jumps inserted by the big-jump layering (all False for
    direct simulation).
    """

    times: np.ndarray
    positions: np.ndarray
    t_final: float
    stop_reason: str = HORIZON
    large: Optional[np.ndarray] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos.reshape(times.size, -1)
        if times.size == 0 or pos.shape[0] != times.size:
            raise ValueError("path needs at least one event and one position per event")
        if times[0] != 0.0:
            raise ValueError("paths start at time 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("event times must be strictly increasing")
        if self.t_final < times[-1]:
            raise ValueError("t_final precedes the last event")
        if self.stop_reason not in (HORIZON, EXITED):
            raise ValueError(f"unknown stop reason {self.stop_reason!r}")
        large = np.zeros(times.size, dtype=bool) if self.large is None else np.asarray(self.large, dtype=bool)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "t_final", float(self.t_final))
        object.__setattr__(self, "large", large)

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    @property
    def x0(self) -> np.ndarray:
        return self.positions[0]

    def __len__(self) -> int:
        return self.times.size

    def position_at(self, t: float) -> np.ndarray:
        if not 0.0 <= t <= self.t_final:
            raise ValueError(f"t={t} outside [0, {self.t_final}]")
        return self.positions[np.searchsorted(self.times, t, side="right") - 1]

    def jumps(self) -> np.ndarray:
        """Displacements Delta X at each jump time (shape (len-1, d))."""
        return np.diff(self.positions, axis=0)

    def to_csv(self, fh=None, comment: Optional[str] = None) -> str:
        """Write ``t,x1,...,xd`` rows; a final row at t_final if it is past the last event."""
        buf = io.StringIO() if fh is None else fh
        if comment:
            buf.write(f"# {comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(self.d)])
        for t, x in zip(self.times, self.positions):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in x])
        if self.t_final > self.times[-1]:
            w.writerow([repr(self.t_final)] + [repr(float(v)) for v in self.positions[-1]])
        return buf.getvalue() if fh is None else ""


@dataclass(frozen=True, eq=False)
class PathBatch:
    """Paths stored back to back; path ``i`` owns events ``offsets[i]:offsets[i+1]``."""

    times: np.ndarray
    positions: np.ndarray
    offsets: np.ndarray
    t_final: np.ndarray
    exited: np.ndarray
    large: np.ndarray
    replicas: np.ndarray

    def __len__(self) -> int:
        return self.t_final.size

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    @property
    def path_index(self) -> np.ndarray:
        """Owning path of every event."""
        return np.repeat(np.arange(len(self)), np.diff(self.offsets))

    @property
    def first(self) -> np.ndarray:
        return self.offsets[:-1]

    @property
    def last(self) -> np.ndarray:
        return self.offsets[1:] - 1

    def next_times(self) -> np.ndarray:
        """End of each event's holding interval (the next event time, or t_final)."""
        nxt = np.empty_like(self.times)
        nxt[:-1] = self.times[1:]
        nxt[self.last] = self.t_final
        return nxt

    def jump_counts(self) -> np.ndarray:
        return np.diff(self.offsets) - 1

    def final_positions(self) -> np.ndarray:
        return self.positions[self.last]

    def positions_at(self, t: float) -> np.ndarray:
        """X_t for every path (requires t <= t_final for all paths)."""
        if np.any(self.t_final < t):
            raise ValueError("some paths stop before the requested time")
        counts = np.bincount(self.path_index, weights=self.times <= t, minlength=len(self))
        return self.positions[self.first + counts.astype(np.int64) - 1]

    def __getitem__(self, i: int) -> Path:
        i = int(i)
        if i < 0:
            i += len(self)
        s, e = self.offsets[i], self.offsets[i + 1]
        return Path(
            self.times[s:e],
            self.positions[s:e],
            float(self.t_final[i]),
            EXITED if self.exited[i] else HORIZON,
            self.large[s:e],
        )

    def __iter__(self) -> Iterator[Path]:
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def concatenate(cls, batches) -> "PathBatch":
        batches = list(batches)
        shifts = np.cumsum([0] + [b.times.size for b in batches[:-1]])
        offsets = np.concatenate(
            [np.zeros(1, dtype=np.int64)] + [b.offsets[1:] + s for b, s in zip(batches, shifts)]
        )
        return cls(
            np.concatenate([b.times for b in batches]),
            np.concatenate([b.positions for b in batches]),
            offsets,
            np.concatenate([b.t_final for b in batches]),
            np.concatenate([b.exited for b in batches]),
            np.concatenate([b.large for b in batches]),
            np.concatenate([b.replicas for b in batches]),
        )
