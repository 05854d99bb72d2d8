"""The default desk-scale suite: one scenario per experiment."""

from __future__ import annotations

from ..kernel import KernelParams
from .report import Scenario

SCENARIO_NAMES = (
    "density-decay",
    "exit-scaling",
    "hitting-linearity",
    "occupation-theorem",
    "support-theorem",
    "meyer-equivalence",
)


def default_suite(seed: int = 20240607) -> list:
    iso1 = KernelParams(1, 1.0)
    iso2 = KernelParams(2, 1.0)
    return [
        Scenario("density-decay", "density-decay", iso1, n=50_000, seed=seed,
                 grid=(0.02, 0.04, 0.08, 0.16), options={"plateau": (1.0, 2.0, 4.0)}),
        Scenario("exit-scaling", "exit-scaling", iso1, n=4000, seed=seed + 1, grid=(0.05, 0.1, 0.2, 0.4)),
        Scenario("hitting-linearity", "hitting-linearity", iso1, n=100_000, seed=seed + 2,
                 grid=(0.001, 0.004, 0.016)),
        Scenario("occupation-theorem", "occupation-theorem",
                 KernelParams.builtin(2, 1.0, 0.5, 1.5, "direction-weighted"), n=2000, seed=seed + 3,
                 grid=(0.05, 0.1, 0.2, 0.4, 0.8),
                 options={"starts": [(0.0, 0.0), (0.2, 0.0), (-0.15, 0.15)]}),
        # small intensity so a unit-time tube of radius 0.25 is not a rare event
        Scenario("support-theorem", "support-theorem", KernelParams(2, 1.0, 0.1, 0.1), n=10_000, seed=seed + 4,
                 grid=(0.15, 0.35)),
        Scenario("meyer-equivalence", "meyer-equivalence", iso2, n=2000, seed=seed + 5, grid=(0.25, 0.5, 0.75)),
    ]
