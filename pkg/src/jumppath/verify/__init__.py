"""Statistical experiments for the process construction and its path properties."""

from .experiments import (
    RUNS,
    default_tubes,
    run_density_decay,
    run_exit_scaling,
    run_hitting_linearity,
    run_meyer_equivalence,
    run_occupation_theorem,
    run_scenario,
    run_support_theorem,
)
from .report import ConfigError, Report, Scenario, reports_csv, reports_summary
from .stats import ks_pvalue, loglog_slope, poisson_chisquare
from .suite import SCENARIO_NAMES, default_suite
