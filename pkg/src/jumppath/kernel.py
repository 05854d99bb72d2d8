"""Truncated alpha-stable-like jump kernels.

A kernel is ``J(x, y) = a(x, y) |y - x|^(-d-alpha)`` for ``|y - x| < 1`` and zero
otherwise, with a symmetric modulation ``a`` taking values in
``[kappa1, kappa2]``.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gamma, roots_legendre

log = logging.getLogger(__name__)

DEFAULT_QUADRATURE_NODES = 2048
MAX_PROPOSALS = 10**6

_clamp_warned: set[str] = set()


class KernelError(ValueError):
    """Invalid kernel parameters or arguments."""


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


# ---------------------------------------------------------------------------
# Modulations. Callables taking broadcastable point arrays x, y of shape
# (..., d) and returning values of shape (...).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantModulation:
    value: float
    name: str = "isotropic"

    def __call__(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        shape = np.broadcast_shapes(x.shape, y.shape)[:-1]
        return np.full(shape, float(self.value))


@dataclass(frozen=True)
class Checkerboard:
    """kappa1 or kappa2 according to the parity of floor(2 x_1) + floor(2 y_1)."""

    kappa1: float
    kappa2: float
    name: str = "checkerboard"
    symmetric = True

    def __call__(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        parity = (np.floor(2.0 * x[..., 0]) + np.floor(2.0 * y[..., 0])) % 2
        return np.where(parity == 0, self.kappa1, self.kappa2)

    def rate(self, x, lo, hi, alpha):
        """Exact shell rate in one dimension (None otherwise: use quadrature)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 1:
            return None
        x = x[:, 0]
        cx = np.floor(2.0 * x)
        total = np.zeros_like(x)
        for k in range(-3, 4):
            j = cx + k
            weight = np.where((cx + j) % 2 == 0, self.kappa1, self.kappa2)
            # landing cell [j/2, (j+1)/2): r-intervals to the right and left of x
            for ra, rb in ((j / 2 - x, (j + 1) / 2 - x), (x - (j + 1) / 2, x - j / 2)):
                a = np.clip(ra, lo, hi)
                b = np.clip(rb, lo, hi)
                total += np.where(b > a, weight * (a ** -alpha - b ** -alpha) / alpha, 0.0)
        return total


@dataclass(frozen=True)
class DirectionWeighted:
    """Interpolates kappa1 -> kappa2 with cos^2 of the jump angle to the first axis.

    Invariant under ``w -> -w``, hence symmetric in ``(x, y)``. In one dimension
    every jump is axial and the value is ``kappa2``.
    """

    kappa1: float
    kappa2: float
    name: str = "direction-weighted"
    symmetric = True

    def rate(self, x, lo, hi, alpha):
        # the mean of cos^2 over the unit sphere is 1/d
        d = np.asarray(x).shape[-1]
        level = self.kappa1 + (self.kappa2 - self.kappa1) / d
        return np.full(np.asarray(x).shape[0], level * isotropic_mass(d, alpha, lo, hi))

    def __call__(self, x, y):
        w = np.asarray(y) - np.asarray(x)
        r2 = np.einsum("...i,...i->...", w, w)
        with np.errstate(invalid="ignore", divide="ignore"):
            c2 = np.where(r2 > 0, w[..., 0] ** 2 / np.where(r2 > 0, r2, 1.0), 1.0)
        return self.kappa1 + (self.kappa2 - self.kappa1) * c2


BUILTIN_MODULATIONS = ("isotropic", "checkerboard", "direction-weighted")


@dataclass(frozen=True)
class KernelParams:
    """Kernel constants plus modulation. Immutable; safe to share across workers.

    ``modulation=None`` means the isotropic kernel ``a = kappa1``.
    """

    d: int
    alpha: float
    kappa1: float = 1.0
    kappa2: float = 1.0
    modulation: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise KernelError(f"dimension must be a positive integer, got {self.d}")
        if not 0.0 < self.alpha < 2.0:
            raise KernelError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not 0.0 < self.kappa1 <= self.kappa2:
            raise KernelError(
                f"need 0 < kappa1 <= kappa2, got kappa1={self.kappa1}, kappa2={self.kappa2}"
            )
        object.__setattr__(self, "d", int(self.d))

    @classmethod
    def builtin(cls, d, alpha, kappa1=1.0, kappa2=1.0, modulation="isotropic") -> "KernelParams":
        if modulation == "isotropic":
            mod = None
        elif modulation == "checkerboard":
            mod = Checkerboard(kappa1, kappa2)
        elif modulation == "direction-weighted":
            mod = DirectionWeighted(kappa1, kappa2)
        else:
            raise KernelError(
                f"unknown modulation {modulation!r}; expected one of {', '.join(BUILTIN_MODULATIONS)}"
            )
        return cls(d, alpha, kappa1, kappa2, mod)

    @property
    def modulation_name(self) -> str:
        if self.modulation is None:
            return "isotropic"
        return getattr(self.modulation, "name", type(self.modulation).__name__)

    @property
    def constant(self) -> Optional[float]:
        """The modulation value if it is constant, else None."""
        if self.modulation is None:
            return self.kappa1
        if isinstance(self.modulation, ConstantModulation):
            return min(max(self.modulation.value, self.kappa1), self.kappa2)
        return None

    @property
    def sigma(self) -> float:
        return sphere_area(self.d)

    def describe(self) -> str:
        return (
            f"d={self.d} alpha={self.alpha!r} kappa1={self.kappa1!r} "
            f"kappa2={self.kappa2!r} modulation={self.modulation_name}"
        )

    def params_hash(self) -> str:
        return hashlib.sha256(self.describe().encode()).hexdigest()[:12]

    def a(self, x, y) -> np.ndarray:
        """Symmetrized modulation clamped to [kappa1, kappa2]."""
        c = self.constant
        if c is not None:
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            return np.full(np.broadcast_shapes(x.shape, y.shape)[:-1], c)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if getattr(self.modulation, "symmetric", False):
            raw = np.asarray(self.modulation(x, y), dtype=float)
        else:
            raw = 0.5 * (np.asarray(self.modulation(x, y), dtype=float) + np.asarray(self.modulation(y, x), dtype=float))
        clipped = np.clip(raw, self.kappa1, self.kappa2)
        if self.modulation_name not in _clamp_warned and np.any(clipped != raw):
            _clamp_warned.add(self.modulation_name)
            log.warning(
                "modulation %s left [kappa1, kappa2]; values clamped", self.modulation_name
            )
        return clipped

    def dominating_rate(self, lo: float, hi: float) -> float:
        """kappa2 * sigma * (lo^-alpha - hi^-alpha) / alpha: proposal rate on [lo, hi)."""
        return self.kappa2 * isotropic_mass(self.d, self.alpha, lo, hi)


def isotropic_mass(d: int, alpha: float, lo: float, hi: float) -> float:
    """Integral of |w|^(-d-alpha) over lo <= |w| < hi."""
    return sphere_area(d) * (lo ** (-alpha) - hi ** (-alpha)) / alpha


def default_eps_min(params: KernelParams, qv_tol: float = 1e-4) -> float:
    """Largest cutoff whose discarded quadratic variation rate is at most ``qv_tol``.

    The discarded rate is bounded by kappa2 * sigma * eps^(2-alpha) / (2-alpha).
    """
    a = params.alpha
    return (qv_tol * (2.0 - a) / (params.kappa2 * params.sigma)) ** (1.0 / (2.0 - a))


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != d:
        raise KernelError(f"point has dimension {x.shape[-1]}, kernel has d={d}")
    return x


def eval_kernel(params: KernelParams, x, y):
    """J(x, y). Raises KernelError on the diagonal."""
    x = _as_points(x, params.d)
    y = _as_points(y, params.d)
    r = np.linalg.norm(y - x, axis=-1)
    if np.any(r == 0):
        raise KernelError("kernel is singular on the diagonal x == y")
    val = np.where(r < 1.0, params.a(x, y) * r ** (-params.d - params.alpha), 0.0)
    return float(val) if np.ndim(val) == 0 else val


# ---------------------------------------------------------------------------
# quadrature for jump rates of non-constant modulations
# ---------------------------------------------------------------------------


def _sphere_points(d: int, n: int) -> np.ndarray:
    if d == 1:
        return np.array([[-1.0], [1.0]])
    if d == 2:
        ang = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if d == 3:
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        phi = np.pi * (3.0 - math.sqrt(5.0)) * i
        s = np.sqrt(1.0 - z * z)
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    from scipy.stats import norm, qmc

    u = qmc.Sobol(d, scramble=True, seed=0).random(n)
    z = norm.ppf(u)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _quadrature_rule(d: int, alpha: float, lo: float, hi: float, nodes: int):
    """Displacements W (M, d) and weights (M,) with sum w f(W) ~ int f(w)|w|^(-d-alpha)."""
    n_dir = {1: 2, 2: 64, 3: 128}.get(d, 256)
    n_dir = min(n_dir, max(2, nodes // 4)) if d > 1 else 2
    n_rad = max(4, nodes // n_dir)
    dirs = _sphere_points(d, n_dir)
    s, ws = roots_legendre(n_rad)
    a, b = math.log(lo), math.log(hi)
    s = 0.5 * (b - a) * s + 0.5 * (b + a)
    ws = 0.5 * (b - a) * ws
    r = np.exp(s)
    radial_w = ws * np.exp(-alpha * s)
    W = (r[None, :, None] * dirs[:, None, :]).reshape(-1, d)
    w = np.broadcast_to(radial_w[None, :] * (sphere_area(d) / n_dir), (n_dir, n_rad)).reshape(-1)
    return W, w


def jump_rate(
    params: KernelParams,
    x,
    lo: float,
    hi: float,
    nodes: int = DEFAULT_QUADRATURE_NODES,
    exact: bool = True,
):
    """Integral of J(x, x + w) over lo <= |w| < hi, for one point or an (m, d) array.

    Constant modulations are integrated analytically, as are modulations that
    supply a ``rate`` hook (unless ``exact=False``); everything else uses a
    product rule with ``nodes`` points.
    """
    x = _as_points(x, params.d)
    single = x.ndim == 1
    xs = x.reshape(-1, params.d)
    c = params.constant
    hook = getattr(params.modulation, "rate", None) if exact else None
    out = None
    if c is not None:
        out = np.full(xs.shape[0], c * isotropic_mass(params.d, params.alpha, lo, hi))
    elif hook is not None:
        out = hook(xs, lo, hi, params.alpha)
    if out is None:
        out = quadrature_rate(params, xs, lo, hi, nodes)
    return float(out[0]) if single else out


def quadrature_rate(params: KernelParams, xs, lo: float, hi: float, nodes: int = DEFAULT_QUADRATURE_NODES):
    W, w = _quadrature_rule(params.d, params.alpha, lo, hi, nodes)
    xs = np.asarray(xs, dtype=float).reshape(-1, params.d)
    out = np.empty(xs.shape[0])
    block = max(1, 2**20 // W.shape[0])
    for i in range(0, xs.shape[0], block):
        xb = xs[i : i + block, None, :]
        out[i : i + block] = params.a(xb, xb + W[None, :, :]) @ w
    return out


def large_jump_rate(params: KernelParams, x, beta: float, nodes: int = DEFAULT_QUADRATURE_NODES):
    """Total intensity of jumps of size in [beta, 1) from x."""
    if not 0.0 < beta < 1.0:
        raise KernelError(f"beta must lie in (0, 1), got {beta}")
    return jump_rate(params, x, beta, 1.0, nodes)


# ---------------------------------------------------------------------------
# displacement proposals
# ---------------------------------------------------------------------------


def radial_quantile(u, lo: float, hi: float, alpha: float):
    """Inverse CDF of the density proportional to r^(-1-alpha) on [lo, hi)."""
    a_lo = lo ** (-alpha)
    a_hi = hi ** (-alpha)
    r = (a_lo - np.asarray(u) * (a_lo - a_hi)) ** (-1.0 / alpha)
    return np.clip(r, lo, np.nextafter(hi, 0.0))


def directions(d: int, u: np.ndarray) -> np.ndarray:
    """Uniform unit vectors from uniform columns ``u`` (d=1: one column; else 2*ceil(d/2))."""
    if d == 1:
        return np.where(u[:, :1] < 0.5, -1.0, 1.0)
    from .rng import normals_from_uniforms

    z = normals_from_uniforms(u, d)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def direction_columns(d: int) -> int:
    return 1 if d == 1 else 2 * ((d + 1) // 2)


def sample_large_jump(
    params: KernelParams,
    x,
    beta: float,
    rng: np.random.Generator,
    size: Optional[int] = None,
    max_proposals: int = MAX_PROPOSALS,
):
    """Draw displacements w from J(x, x+w) dw restricted to beta <= |w| < 1, normalized.

    Proposals come from the isotropic density; each is kept with probability
    a(x, x+w) / kappa2.
    """
    if not 0.0 < beta < 1.0:
        raise KernelError(f"beta must lie in (0, 1), got {beta}")
    x = _as_points(x, params.d)
    m = 1 if size is None else int(size)
    d = params.d
    out = np.empty((m, d))
    pending = np.arange(m)
    proposals = 0
    ncol = direction_columns(d)
    while pending.size:
        k = pending.size
        r = radial_quantile(rng.random(k), beta, 1.0, params.alpha)
        w = r[:, None] * directions(d, rng.random((k, ncol)))
        ok = rng.random(k) * params.kappa2 < params.a(x, x + w)
        out[pending[ok]] = w[ok]
        pending = pending[~ok]
        proposals += k
        if pending.size and proposals >= max_proposals * m:
            raise RuntimeError(
                f"large-jump rejection exceeded {max_proposals} proposals; check the modulation"
            )
    return out[0] if size is None else out
