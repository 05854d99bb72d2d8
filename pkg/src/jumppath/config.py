"""INI run configuration with line-numbered diagnostics.

Parsing is delegated to :mod:`configparser`; a side index of section and key
line numbers lets value errors point at the offending line.
"""

from __future__ import annotations

import configparser
import hashlib
import os
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .estimate import TubeSpec
from .geometry import Domain, EmptySet, Region, WholeSpace
from .kernel import BUILTIN_MODULATIONS, KernelError, KernelParams, default_eps_min
from .simulate import SimConfig, SimulationError

SEED_ENV = "JUMPPATH_SEED"
_SECTION = re.compile(r"^\s*\[([^\]]+)\]")
_KEY = re.compile(r"^\s*([^=:\s#;\[][^=:]*?)\s*[=:]")
_MISSING = object()


class ConfigError(ValueError):
    pass


class RunConfig:
    """A parsed configuration file."""

    def __init__(self, text: str, source: str = "<config>"):
        self.text = text
        self.source = source
        self._cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        try:
            self._cp.read_string(text, source=source)
        except configparser.Error as e:
            raise ConfigError(f"{source}: {e}".replace("\n", " ")) from e
        self._lines = {}
        section = None
        for no, line in enumerate(text.splitlines(), start=1):
            m = _SECTION.match(line)
            if m:
                section = m.group(1).strip()
                self._lines[(section, None)] = no
                continue
            m = _KEY.match(line)
            if m and section is not None:
                self._lines.setdefault((section, m.group(1).strip().lower()), no)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from e
        return cls(text, str(path))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()[:12]

    def sections(self):
        return self._cp.sections()

    def has(self, section: str, key: Optional[str] = None) -> bool:
        if key is None:
            return self._cp.has_section(section)
        return self._cp.has_option(section, key)

    def where(self, section: str, key: Optional[str] = None) -> str:
        no = self._lines.get((section, key.lower() if key else None))
        if no is None:
            no = self._lines.get((section, None))
        return f"{self.source}:{no}" if no else self.source

    def error(self, section, key, msg) -> ConfigError:
        return ConfigError(f"{self.where(section, key)}: {msg}")

    def raw(self, section: str, key: str, default=_MISSING) -> Optional[str]:
        if not self._cp.has_section(section):
            if default is _MISSING:
                raise ConfigError(f"{self.source}: missing section [{section}] (needed for key '{key}')")
            return default
        if not self._cp.has_option(section, key):
            if default is _MISSING:
                raise self.error(section, None, f"[{section}] is missing required key '{key}'")
            return default
        return self._cp.get(section, key).strip()

    def get(self, section, key, conv=str, default=_MISSING):
        val = self.raw(section, key, default)
        if val is default and default is not _MISSING:
            return default
        try:
            return conv(val)
        except (ValueError, TypeError, KernelError, SimulationError) as e:
            raise self.error(section, key, f"bad value for '{key}': {e}") from None

    def keys(self, section: str):
        return list(self._cp[section].keys()) if self._cp.has_section(section) else []


# ---------------------------------------------------------------------------
# value converters
# ---------------------------------------------------------------------------


def to_float(s: str) -> float:
    return float(s)


def to_int(s: str) -> int:
    v = float(s)
    if v != int(v):
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def to_floats(s: str) -> tuple:
    parts = [p for p in re.split(r"[,\s]+", s.strip()) if p]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def to_region(s: str, d: int) -> Region:
    """``whole``, ``empty``, or ``ball|cube <c1,...,cd> <extent>``."""
    words = s.split()
    if words == ["whole"]:
        return WholeSpace(d)
    if words == ["empty"]:
        return EmptySet(d)
    if len(words) != 3 or words[0] not in ("ball", "cube"):
        raise ValueError(f"expected 'ball|cube <center> <extent>', 'whole' or 'empty', got {s!r}")
    c = to_floats(words[1])
    if len(c) != d:
        raise ValueError(f"center has {len(c)} coordinates, dimension is {d}")
    return Domain(words[0], c, float(words[2]))


def to_point(s: str, d: int) -> np.ndarray:
    c = to_floats(s)
    if len(c) != d:
        raise ValueError(f"point has {len(c)} coordinates, dimension is {d}")
    return np.asarray(c)


def to_waypoints(s: str, d: int) -> list:
    """``t:x1,...,xd; t:x1,...,xd; ...``."""
    out = []
    for item in (p for p in s.split(";") if p.strip()):
        t, _, pt = item.partition(":")
        if not pt:
            raise ValueError(f"waypoint {item.strip()!r} must look like 't:x1,...,xd'")
        out.append((float(t), to_point(pt, d)))
    if not out:
        raise ValueError("no waypoints")
    return out


def to_seed(s) -> int:
    v = int(str(s).strip(), 0)
    if not 0 <= v < 2**64:
        raise ValueError("seed must fit in 64 bits")
    return v


# ---------------------------------------------------------------------------
# typed views
# ---------------------------------------------------------------------------


def kernel_from(cfg: RunConfig, section: str = "kernel", base: Optional[KernelParams] = None) -> KernelParams:
    """KernelParams from ``section``; keys absent there fall back to ``base`` when given."""

    def pick(key, conv, fallback):
        if base is not None and not cfg.has(section, key):
            return fallback
        return cfg.get(section, key, conv)

    d = pick("dimension", to_int, base.d if base else None)
    alpha = pick("alpha", to_float, base.alpha if base else None)
    k1 = cfg.get(section, "kappa1", to_float, base.kappa1 if base else 1.0)
    k2 = cfg.get(section, "kappa2", to_float, base.kappa2 if base else k1)
    mod = cfg.get(section, "modulation", str, base.modulation_name if base else "isotropic")
    if mod not in BUILTIN_MODULATIONS:
        raise cfg.error(section, "modulation", f"modulation must be one of {', '.join(BUILTIN_MODULATIONS)}")
    try:
        return KernelParams.builtin(d, alpha, k1, k2, mod)
    except (KernelError, ValueError) as e:
        msg = str(e)
        key = next((k for k in ("dimension", "alpha", "kappa1") if msg.startswith(k) or f" {k} " in msg), None)
        raise cfg.error(section, key, f"invalid kernel: {msg}") from None


def seed_from(cfg: Optional[RunConfig], sections=("sim",), flag=None, default: int = 0) -> int:
    """Seed precedence: command-line flag, then the environment, then the first config section with a seed."""
    if flag is not None:
        try:
            return to_seed(flag)
        except ValueError as e:
            raise ConfigError(f"--seed {flag!r}: {e}") from None
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return to_seed(env)
        except ValueError as e:
            raise ConfigError(f"{SEED_ENV}={env!r}: {e}") from None
    if isinstance(sections, str):
        sections = (sections,)
    for sec in sections:
        if cfg is not None and cfg.has(sec, "seed"):
            return cfg.get(sec, "seed", to_seed)
    return default


@dataclass(frozen=True)
class SimSection:
    kernel: KernelParams
    sim: SimConfig
    x0: np.ndarray
    replicas: int
    beta: Optional[float]


def sim_from(cfg: RunConfig, seed: int) -> SimSection:
    kp = kernel_from(cfg)
    d = kp.d
    eps = cfg.get("sim", "eps_min", to_float, None)
    if eps is None:
        eps = default_eps_min(kp)
    t_max = cfg.get("sim", "t_max", to_float)
    dom = cfg.get("sim", "stop_domain", lambda s: to_region(s, d), None)
    try:
        sc = SimConfig(eps, t_max, stop_domain=dom, seed=seed)
    except SimulationError as e:
        raise cfg.error("sim", None, str(e)) from None
    x0 = cfg.get("sim", "x0", lambda s: to_point(s, d), None)
    if x0 is None:
        x0 = np.zeros(d)
    reps = cfg.get("sim", "replicas", to_int, 1)
    if reps < 1:
        raise cfg.error("sim", "replicas", "replicas must be >= 1")
    beta = cfg.get("sim", "beta", to_float, None)
    return SimSection(kp, sc, x0, reps, beta)


def tube_from(cfg: RunConfig, section: str, d: int) -> TubeSpec:
    wps = cfg.get(section, "waypoints", lambda s: to_waypoints(s, d))
    eps = cfg.get(section, "epsilon", to_float)
    try:
        return TubeSpec.from_waypoints(wps, eps)
    except ValueError as e:
        raise cfg.error(section, "waypoints", str(e)) from None
