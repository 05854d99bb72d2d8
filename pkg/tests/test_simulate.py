import math

import numpy as np
import pytest
from scipy import stats

from jumppath import Domain, KernelParams, SimConfig, SimulationError, meyer_compose, simulate_path, simulate_paths
from jumppath.estimate import exit_time_samples
from jumppath.kernel import jump_rate
from jumppath.paths import EXITED, HORIZON
from jumppath.verify import poisson_chisquare

ISO1 = KernelParams(1, 1.0)
ISO2 = KernelParams(2, 1.0)


def test_config_validation():
    for bad in [dict(eps_min=0.0, t_max=1), dict(eps_min=1.0, t_max=1), dict(eps_min=0.1, t_max=-1),
                dict(eps_min=0.1, t_max=math.inf), dict(eps_min=0.1, t_max=1, seed=-3)]:
        with pytest.raises(SimulationError):
            SimConfig(**bad)
    assert SimConfig(0.1, math.inf, stop_domain=Domain.ball([0], 1)).t_max == math.inf


def test_zero_horizon():
    p = simulate_path(ISO1, [0.3], SimConfig(0.01, 0.0))
    assert len(p) == 1 and p.t_final == 0.0 and p.stop_reason == HORIZON
    q = meyer_compose(ISO1, [0.3], 0.5, SimConfig(0.01, 0.0))
    assert len(q) == 1 and not q.large.any()


def test_start_outside_domain_rejected():
    with pytest.raises(SimulationError):
        simulate_path(ISO1, [2.0], SimConfig(0.01, 1.0, stop_domain=Domain.ball([0], 1)))
    with pytest.raises(SimulationError):
        simulate_path(ISO1, [0.0, 0.0], SimConfig(0.01, 1.0))


def test_beta_must_exceed_eps_min():
    for beta in (0.01, 0.005, 1.0):
        with pytest.raises(SimulationError):
            meyer_compose(ISO1, [0.0], beta, SimConfig(0.01, 1.0))


def test_jump_count_is_poisson_198():
    b = simulate_paths(ISO1, [0.0], SimConfig(0.01, 1.0, seed=11), n=10_000)
    counts = b.jump_counts()
    lam = 2 * (100 - 1)
    assert abs(counts.mean() - lam) < 3 * math.sqrt(lam / 10_000)
    assert poisson_chisquare(counts, lam)[1] > 0.01


def test_displacements_in_range():
    b = simulate_paths(KernelParams.builtin(2, 1.3, 1, 2, "direction-weighted"), [0.0, 0.0],
                       SimConfig(0.01, 0.2, seed=2), n=300)
    for path in b:
        r = np.linalg.norm(path.jumps(), axis=1)
        assert np.all((r >= 0.01 * (1 - 1e-12)) & (r < 1.0))
        assert np.all(np.diff(path.times) > 0)


def test_determinism_and_batch_independence():
    cfg = SimConfig(0.02, 0.5, seed=77)
    a = simulate_paths(ISO2, [0.0, 0.0], cfg, n=50)
    b = simulate_paths(ISO2, [0.0, 0.0], cfg, n=50)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.positions, b.positions)
    single = simulate_path(ISO2, [0.0, 0.0], cfg, replica=37)
    assert np.array_equal(single.times, a[37].times) and np.array_equal(single.positions, a[37].positions)
    other = simulate_paths(ISO2, [0.0, 0.0], cfg.replace(seed=78), n=50)
    assert not np.array_equal(other.times[:60], a.times[:60])


def test_stop_domain_paths_are_prefixes():
    cfg = SimConfig(0.01, 2.0, seed=5)
    free = simulate_paths(ISO1, [0.0], cfg, n=200)
    dom = Domain.ball([0.0], 0.3)
    stopped = simulate_paths(ISO1, [0.0], cfg.replace(stop_domain=dom), n=200)
    for f, s in zip(free, stopped):
        k = len(s)
        assert np.array_equal(f.times[:k], s.times) and np.array_equal(f.positions[:k], s.positions)
        if s.stop_reason == EXITED:
            assert s.positions[-1] not in dom and np.all(dom.contains(s.positions[:-1]))
            assert s.t_final == s.times[-1]


def test_direct_first_jump_time_matches_modulated_rate():
    p = KernelParams.builtin(1, 1.0, 1.0, 3.0, "checkerboard")
    x = np.array([0.1])
    lam = float(np.atleast_1d(jump_rate(p, x[None, :], 0.05, 1.0))[0])
    b = simulate_paths(p, x, SimConfig(0.05, 0.5, seed=3), n=20_000)
    assert np.all(b.jump_counts() > 0)
    first = b.times[b.first + 1]
    assert abs(first.mean() - 1 / lam) < 4 * (1 / lam) / math.sqrt(len(first))
    assert stats.kstest(first, "expon", args=(0, 1 / lam)).pvalue > 0.001


def test_layered_inserted_jumps_are_poisson_2():
    b = simulate_paths(ISO1, [0.0], SimConfig(0.01, 1.0, seed=21), n=10_000, beta=0.5)
    k = np.bincount(b.path_index, weights=b.large, minlength=len(b))
    assert abs(k.mean() - 2.0) < 0.05
    assert poisson_chisquare(k.astype(int), 2.0)[1] > 0.01
    big = np.abs(np.diff(b.positions[:, 0]))[b.large[1:]]
    assert np.all((big >= 0.5) & (big < 1.0))


@pytest.mark.parametrize("beta", [0.25, 0.5, 0.75])
def test_layered_exit_law_matches_direct(beta):
    dom = Domain.ball([0.0, 0.0], 0.3)
    a = exit_time_samples(ISO2, [0.0, 0.0], dom, 2000, 1, eps_min=0.01, horizon=math.inf)
    b = exit_time_samples(ISO2, [0.0, 0.0], dom, 2000, 2, eps_min=0.01, horizon=math.inf, beta=beta)
    assert stats.ks_2samp(a, b).pvalue > 0.01


@pytest.mark.parametrize("params,x,radius", [
    (KernelParams.builtin(1, 1.0, 1.0, 2.0, "checkerboard"), [0.1], 0.6),
    (KernelParams.builtin(2, 1.0, 1.0, 2.0, "direction-weighted"), [0.0, 0.0], 0.5),
])
def test_layered_matches_direct_for_modulated_kernels(params, x, radius):
    dom = Domain.ball(x, radius)
    a = exit_time_samples(params, x, dom, 2000, 11, eps_min=0.01, horizon=math.inf)
    b = exit_time_samples(params, x, dom, 2000, 12, eps_min=0.01, horizon=math.inf, beta=0.5)
    assert stats.ks_2samp(a, b).pvalue > 0.01
