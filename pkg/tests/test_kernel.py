import logging
import math

import numpy as np
import pytest
from scipy import integrate

from jumppath import KernelError, KernelParams, eval_kernel, large_jump_rate, sample_large_jump
from jumppath.kernel import (
    Checkerboard,
    ConstantModulation,
    DirectionWeighted,
    MAX_PROPOSALS,
    default_eps_min,
    isotropic_mass,
    jump_rate,
    quadrature_rate,
    radial_quantile,
    sphere_area,
)

ISO1 = KernelParams(1, 1.0)
MODULATED = [
    KernelParams.builtin(1, 1.0, 1.0, 2.0, "checkerboard"),
    KernelParams.builtin(2, 1.0, 1.0, 2.0, "checkerboard"),
    KernelParams.builtin(2, 0.7, 0.5, 3.0, "direction-weighted"),
    KernelParams.builtin(3, 1.5, 1.0, 2.0, "direction-weighted"),
]


def test_validation():
    for bad in [dict(d=0, alpha=1), dict(d=1, alpha=0), dict(d=1, alpha=2), dict(d=1, alpha=1, kappa1=2, kappa2=1),
                dict(d=1, alpha=1, kappa1=0)]:
        with pytest.raises(KernelError):
            KernelParams(**bad)
    with pytest.raises(KernelError):
        KernelParams.builtin(1, 1.0, modulation="swirl")


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_eval_kernel_examples():
    assert eval_kernel(ISO1, [0.0], [2.0]) == 0.0
    assert eval_kernel(ISO1, [0.0], [0.5]) == pytest.approx(4.0)
    assert eval_kernel(ISO1, [0.0], [1.0]) == 0.0
    with pytest.raises(KernelError):
        eval_kernel(ISO1, [0.3], [0.3])


@pytest.mark.parametrize("p", [ISO1] + MODULATED)
def test_symmetry_and_bounds_on_random_pairs(p):
    rng = np.random.default_rng(0)
    x = rng.uniform(-2, 2, (10_000, p.d))
    w = rng.normal(size=(10_000, p.d))
    w *= (rng.uniform(0.001, 0.999, 10_000) / np.linalg.norm(w, axis=1))[:, None]
    y = x + w
    jxy = eval_kernel(p, x, y)
    assert np.array_equal(jxy, eval_kernel(p, y, x))
    r = np.linalg.norm(w, axis=1) ** (-p.d - p.alpha)
    assert np.all(jxy >= p.kappa1 * r * (1 - 1e-12))
    assert np.all(jxy <= p.kappa2 * r * (1 + 1e-12))


def test_user_modulation_is_symmetrized_and_clamped(caplog):
    def lopsided(x, y):
        return 5.0 * (np.asarray(x)[..., 0] > np.asarray(y)[..., 0])

    p = KernelParams(1, 1.0, 1.0, 2.0, lopsided)
    with caplog.at_level(logging.WARNING, logger="jumppath"):
        a = p.a(np.array([[0.5]]), np.array([[0.0]]))
        b = p.a(np.array([[0.0]]), np.array([[0.5]]))
    assert a == b == 2.0
    assert any("clamped" in r.message for r in caplog.records)


def test_large_jump_rate_example():
    # 2 * integral of r^-2 over [0.5, 1)
    assert large_jump_rate(ISO1, [0.0], 0.5) == pytest.approx(2.0)
    quad = 2 * integrate.quad(lambda r: r**-2, 0.5, 1.0)[0]
    assert large_jump_rate(ISO1, [0.0], 0.5) == pytest.approx(quad, rel=1e-12)


def test_large_jump_rate_vanishes_as_beta_to_one():
    rates = [large_jump_rate(ISO1, [0.0], b) for b in (0.9, 0.99, 0.999, 1 - 1e-9)]
    assert rates == sorted(rates, reverse=True)
    assert rates[-1] < 1e-7


def test_large_jump_rate_domain():
    for b in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(KernelError):
            large_jump_rate(ISO1, [0.0], b)


@pytest.mark.parametrize("p", MODULATED)
def test_large_jump_rate_two_sided_bound(p):
    rng = np.random.default_rng(1)
    xs = rng.uniform(-1, 1, (25, p.d))
    lam = np.atleast_1d(large_jump_rate(p, xs, 0.5))
    c4 = p.kappa1 * isotropic_mass(p.d, p.alpha, 0.5, 1.0)
    c5 = p.kappa2 * isotropic_mass(p.d, p.alpha, 0.5, 1.0)
    assert np.all(lam >= c4 * (1 - 1e-9)) and np.all(lam <= c5 * (1 + 1e-9))


def test_checkerboard_d1_rate_in_expected_interval():
    p = KernelParams.builtin(1, 1.0, 1.0, 2.0, "checkerboard")
    lam = np.atleast_1d(large_jump_rate(p, np.linspace(-1, 1, 41)[:, None], 0.5))
    assert np.all((lam >= 2.0) & (lam <= 4.0))


@pytest.mark.parametrize("p", MODULATED[:3])
def test_exact_rate_hooks_agree_with_quadrature(p):
    xs = np.array([[0.13] + [0.0] * (p.d - 1), [-0.4] + [0.21] * (p.d - 1)])
    exact = np.atleast_1d(jump_rate(p, xs, 0.3, 1.0))
    quad = np.atleast_1d(quadrature_rate(p, xs, 0.3, 1.0, nodes=1 << 16))
    assert np.allclose(exact, quad, rtol=2e-3)


@pytest.mark.parametrize("p", [ISO1] + MODULATED)
def test_large_jump_rate_monotone_in_beta(p):
    x = np.full((1, p.d), 0.1)
    rates = [float(np.atleast_1d(large_jump_rate(p, x, b))[0]) for b in np.linspace(0.05, 0.95, 19)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_radial_quantile_inverts_cdf():
    u = np.linspace(0.001, 0.999, 50)
    r = radial_quantile(u, 0.5, 1.0, 1.0)
    # CDF of density ~ r^-2 on [0.5, 1): (2 - 1/r) / (2 - 1)
    assert np.allclose((2 - 1 / r) / 1.0, u)
    assert np.all(r < 1.0)


def test_sample_large_jump_tail_probability():
    w = sample_large_jump(ISO1, [0.0], 0.5, np.random.default_rng(3), size=100_000)
    r = np.abs(w[:, 0])
    assert r.min() >= 0.5 and r.max() < 1.0
    assert np.mean(r >= 0.75) == pytest.approx(1 / 3, abs=0.01)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_sample_large_jump_isotropic_mean_zero(d):
    p = KernelParams(d, 1.2)
    w = sample_large_jump(p, np.zeros(d), 0.3, np.random.default_rng(d), size=100_000)
    se = w.std(axis=0) / np.sqrt(len(w))
    assert np.all(np.abs(w.mean(axis=0)) < 3 * se)


def test_sample_large_jump_radial_cdf_dkw_band():
    p = KernelParams(2, 0.8)
    n = 20_000
    w = sample_large_jump(p, [0.0, 0.0], 0.4, np.random.default_rng(8), size=n)
    r = np.sort(np.linalg.norm(w, axis=1))
    # radial marginal density is proportional to r^(d-1) r^(-d-alpha) = r^(-1-alpha)
    z = integrate.quad(lambda s: s ** (-1.8), 0.4, 1.0)[0]
    cdf = np.array([integrate.quad(lambda s: s ** (-1.8), 0.4, v)[0] / z for v in r[::200]])
    emp = (np.arange(0, n, 200) + 1) / n
    band = math.sqrt(math.log(2 / 0.01) / (2 * n))
    assert np.max(np.abs(emp - cdf)) < band + 1.0 / n


def test_sample_large_jump_modulated_law():
    # checkerboard in d=1: the landing cell parity decides the weight
    p = KernelParams.builtin(1, 1.0, 1.0, 2.0, "checkerboard")
    x = np.array([0.1])
    w = sample_large_jump(p, x, 0.5, np.random.default_rng(4), size=50_000)[:, 0]
    # oracle: quadrature of J(x, x + w) restricted to w in [0.5, 0.75)
    J = lambda v: float(p.a(x[None, :], (x + v)[None, :])[0]) * abs(v) ** -2  # noqa: E731
    pts = [-0.6, 0.4, 0.9]
    mass = lambda a, b: integrate.quad(J, a, b, points=[q for q in pts if a < q < b])[0]  # noqa: E731
    total = mass(-1, -0.5) + mass(0.5, 1)
    prob = mass(0.5, 0.75) / total
    emp = np.mean((w >= 0.5) & (w < 0.75))
    assert abs(emp - prob) < 4 * math.sqrt(prob * (1 - prob) / w.size)


def test_sample_large_jump_retry_cap():
    def tiny(x, y):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y))[:-1])

    # clamped to kappa1 > 0, so acceptance is kappa1/kappa2; a tiny cap must trip
    p = KernelParams(1, 1.0, 1e-9, 1.0, tiny)
    with pytest.raises(RuntimeError):
        sample_large_jump(p, [0.0], 0.5, np.random.default_rng(0), max_proposals=10)
    assert MAX_PROPOSALS == 10**6


def test_constant_modulation_and_hooks():
    p = KernelParams(2, 1.0, 0.5, 2.0, ConstantModulation(1.5))
    assert p.constant == 1.5
    assert large_jump_rate(p, [0.0, 0.0], 0.5) == pytest.approx(1.5 * isotropic_mass(2, 1.0, 0.5, 1.0))
    assert Checkerboard(1, 2).symmetric and DirectionWeighted(1, 2).symmetric


def test_default_eps_min_meets_quadratic_variation_budget():
    for p in [ISO1, KernelParams(2, 1.5, 1, 3), KernelParams(3, 0.5)]:
        eps = default_eps_min(p)
        qv = p.kappa2 * p.sigma * eps ** (2 - p.alpha) / (2 - p.alpha)
        assert 0 < eps < 1 and qv <= 1e-4 * (1 + 1e-9)


def test_params_are_picklable():
    import pickle

    for p in [ISO1] + MODULATED:
        q = pickle.loads(pickle.dumps(p))
        assert q.describe() == p.describe()
