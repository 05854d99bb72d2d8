"""Monte Carlo simulation of symmetric pure-jump processes with truncated stable-like kernels."""

from .estimate import (
    EstimateError,
    EstimateResult,
    TubeSpec,
    density_estimates,
    estimate_density,
    estimate_hitting_prob,
    estimate_mean_exit_time,
    estimate_occupation,
    estimate_resolvent,
    estimate_tube_probability,
    exit_time_samples,
    wilson_interval,
)
from .functionals import first_exit, hitting_time, occupation_time
from .geometry import Difference, Domain, EmptySet, Region, Union, WholeSpace, cube_grid_union
from .kernel import (
    Checkerboard,
    ConstantModulation,
    DirectionWeighted,
    KernelError,
    KernelParams,
    default_eps_min,
    eval_kernel,
    large_jump_rate,
    sample_large_jump,
)
from .paths import Path, PathBatch
from .rng import CounterRNG
from .simulate import SimConfig, SimulationError, meyer_compose, simulate_path, simulate_paths

__version__ = "0.1.0"
