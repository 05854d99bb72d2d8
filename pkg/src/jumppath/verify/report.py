"""Scenario definitions and verification reports."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

from ..estimate import EstimateResult
from ..kernel import KernelParams

CHECK_KINDS = ("positivity", "monotonicity", "slope-in-range", "ks-test", "band", "exact", "bound")
REPORT_HEADER = ["scenario", "item", "kind", "passed", "value", "ci_lo", "ci_hi", "detail"]


class ConfigError(ValueError):
    """Scenario configuration that cannot produce a meaningful experiment."""


@dataclass(frozen=True)
class Scenario:
    """One named experiment.

    ``run`` selects the experiment, ``grid`` is the swept parameter and
    ``options`` carries run-specific geometry and thresholds.
    """

    name: str
    run: str
    kernel: KernelParams
    n: int
    seed: int = 0
    eps_min: float = 0.01
    grid: tuple = ()
    options: dict = field(default_factory=dict)
    criteria: tuple = ()

    def opt(self, key, default=None):
        return self.options.get(key, default)

    def replace(self, **kw) -> "Scenario":
        vals = {f: getattr(self, f) for f in self.__dataclass_fields__}
        vals.update(kw)
        return Scenario(**vals)


@dataclass(frozen=True)
class Check:
    name: str
    kind: str
    passed: bool
    value: float = math.nan
    lo: float = math.nan
    hi: float = math.nan
    detail: str = ""


@dataclass
class Report:
    scenario: str
    checks: list = field(default_factory=list)
    estimates: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name, kind, passed, value=math.nan, lo=math.nan, hi=math.nan, detail="") -> Check:
        if kind not in CHECK_KINDS:
            raise ValueError(f"unknown check kind {kind!r}")
        c = Check(name, kind, bool(passed), float(value), float(lo), float(hi), detail)
        self.checks.append(c)
        return c

    def record(self, label: str, res: EstimateResult) -> EstimateResult:
        self.estimates.append((label, res))
        return res

    def rows(self):
        for label, r in self.estimates:
            yield [self.scenario, label, "estimate", "", _num(r.mean), _num(r.ci95[0]), _num(r.ci95[1]),
                   f"se={_num(r.std_error)} n={r.n} censored={_num(r.censored_frac)}"]
        for c in self.checks:
            yield [self.scenario, c.name, c.kind, "pass" if c.passed else "FAIL", _num(c.value), _num(c.lo),
                   _num(c.hi), c.detail]

    def summary(self) -> str:
        lines = [f"[{'PASS' if self.passed else 'FAIL'}] {self.scenario}"]
        for c in self.checks:
            mark = "ok " if c.passed else "BAD"
            extra = f" ({c.detail})" if c.detail else ""
            lines.append(f"  {mark} {c.name}: {_num(c.value)}{extra}")
        return "\n".join(lines)


def _num(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def reports_csv(reports, comment: Optional[str] = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for rep in reports:
        w.writerows(rep.rows())
    return buf.getvalue()


def reports_summary(reports) -> str:
    body = "\n".join(r.summary() for r in reports)
    ok = all(r.passed for r in reports)
    return f"{body}\noverall: {'PASS' if ok else 'FAIL'}"
