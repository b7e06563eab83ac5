import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from nullctrl import spectral_models as sm
from nullctrl.errors import IllConditionedError
from nullctrl.inequalities import turan_constant
from nullctrl.lr_engine import sine_mass_matrix_mp
from nullctrl.lti_control import moment_matrix


@pytest.fixture(scope="module")
def heat():
    return sm.HeatInteriorModel(64)


@pytest.fixture(scope="module")
def burgers16():
    return sm.BurgersModel(16)


def test_first_mode_decay(heat):
    y0 = np.zeros(64)
    y0[0] = 1.0
    for T in (0.01, 0.1, 1.0):
        y = sm.heat_propagate(heat, y0, [], T)
        assert y[0] == pytest.approx(math.exp(-math.pi ** 2 * T), rel=1e-12)
        assert np.all(y[1:] == 0)
    assert not np.any(sm.heat_propagate(heat, np.zeros(64), [], 0.3))


def test_modal_exactness(heat):
    y0 = np.ones(64)
    T = 1e-3
    y = sm.heat_propagate(heat, y0, [], T)
    ref = np.array([float(mp.exp(-(mp.mpf(j) * mp.pi) ** 2 * T)) for j in range(1, 65)])
    assert np.max(np.abs(y / ref - 1)) < 1e-12


def test_high_mode_dissipation(heat):
    rng = np.random.default_rng(0)
    k = 5
    y0 = rng.standard_normal(64)
    y0[:k] = 0.0
    T = 0.02
    y = sm.heat_propagate(heat, y0, [], T)
    assert np.linalg.norm(y) <= math.exp(-((k + 1) * math.pi) ** 2 * T) * np.linalg.norm(y0) * (1 + 1e-12)


def test_duhamel_against_quad():
    lam = np.array([1.0, 50.0, 400.0])
    mu = np.array([0.0, 50.0, 3.0, -4.0])
    t = 0.3
    D = sm.duhamel(lam, mu, t)
    for i, a in enumerate(lam):
        for j, b in enumerate(mu):
            ref = quad(lambda s: math.exp(-a * (t - s) - b * s), 0, t, epsabs=0, epsrel=1e-13)[0]
            assert D[i, j] == pytest.approx(ref, rel=1e-11)


def test_low_mode_control_zero(heat):
    assert sm.heat_low_mode_control(heat, np.zeros(64), 3, 0.1).is_zero


def test_low_mode_control_full_observation():
    full = sm.HeatInteriorModel(16, ((0.0, 1.0),))
    assert np.allclose(full.gram, np.eye(16), atol=1e-13)
    rng = np.random.default_rng(1)
    y0 = rng.standard_normal(16)
    T, k = 0.2, 4
    seg = sm.heat_low_mode_control(full, y0, k, T)
    # c_j(t) = -(y_j / T) e^{-lam_j t}
    ref = math.sqrt(sum((y0[j] / T) ** 2 * quad(lambda t: math.exp(-2 * full.eigs[j] * t), 0, T)[0]
                        for j in range(k)))
    assert seg.cost() == pytest.approx(ref, rel=1e-10)
    assert seg.cost() <= np.linalg.norm(y0[:k]) / math.sqrt(T)


def test_low_mode_control_kills_modes_independent_oracle(heat):
    y0 = np.zeros(64)
    y0[1] = 1.0
    T = 0.1
    seg = sm.heat_low_mode_control(heat, y0, 3, T)
    yT = sm.ode_propagate(heat.eigs, y0, [seg])
    assert np.max(np.abs(yT[:3])) <= 1e-8
    assert np.allclose(yT, sm.heat_propagate(heat, y0, [seg]), atol=1e-12)


def test_float_gram_refuses_ill_conditioning():
    m = sm.HeatInteriorModel(64, ((0.5, 1.0),), extended=False)
    sm.heat_low_mode_control(m, np.ones(64), 4, 0.1)
    with pytest.raises(IllConditionedError):
        sm.heat_low_mode_control(m, np.ones(64), 12, 0.1)


@pytest.mark.parametrize("iv", [((0.5, 1.0),), ((0.2, 0.3),), ((0.05, 0.1), (0.7, 0.75))])
def test_turan_backed_conditioning(iv):
    C, _ = turan_constant(sum(b - a for a, b in iv))
    for k in range(1, 11):
        with mp.workdps(60):
            ev = mp.eigsy(mp.matrix(sine_mass_matrix_mp(k, iv)), eigvals_only=True)
            cond = float(max(ev) / min(ev))
        assert cond <= C ** (2 * k)
        if cond < 1e8:  # float eigensolver loses ~eps*cond
            m = sm.HeatInteriorModel(16, iv)
            assert m.low_gram_cond(k) == pytest.approx(cond, rel=1e-6)


def test_segment_cost_against_quadrature(heat):
    rng = np.random.default_rng(3)
    seg = sm.heat_low_mode_control(heat, rng.standard_normal(64), 3, 0.05)
    # |u(t)|^2 = c(t)^T G_k c(t) with c = Ginv e(t)
    _, Ginv = sm._interior_oracle(64, heat.omega, 3)
    Gk = heat.gram[:3, :3]

    def density(t):
        c = Ginv @ (seg.amps * np.exp(-seg.rates * t))
        return float(c @ Gk @ c)

    ref = math.sqrt(quad(density, 0, 0.05, epsrel=1e-12)[0])
    assert seg.cost() == pytest.approx(ref, rel=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 0.2), st.floats(0.01, 0.2), st.integers(1, 5), st.integers(0, 10 ** 6))
def test_heat_composition(tau, t, k, seed):
    heat = sm.HeatInteriorModel(32)
    rng = np.random.default_rng(seed)
    y0 = rng.standard_normal(32)
    seg = sm.heat_low_mode_control(heat, y0, k, tau)
    whole = sm.heat_propagate(heat, y0, [seg], tau + t)
    split = sm.heat_propagate(heat, sm.heat_propagate(heat, y0, [seg]), [], t)
    assert np.linalg.norm(whole - split) <= 1e-10 * (1 + np.linalg.norm(y0))


def test_boundary_examples():
    bm = sm.HeatBoundaryModel(8)
    assert sm.boundary_low_mode_control(bm, np.zeros(8), 3, 1.0).is_zero
    y0 = np.zeros(8)
    y0[0] = 1.0
    seg = sm.boundary_low_mode_control(bm, y0, 1, 1.0)
    M11 = (math.e ** 2 - 1) / 2
    assert seg.amps[0] == pytest.approx((-1.0 / bm.inputs[0]) / M11, rel=1e-12)


def test_boundary_k4_moments_vanish():
    bm = sm.HeatBoundaryModel(8)
    rng = np.random.default_rng(8)
    y0 = rng.standard_normal(8)
    k, T = 4, 0.5
    seg = sm.boundary_low_mode_control(bm, y0, k, T)
    u = lambda t: float(np.sum(seg.amps * np.exp(-seg.rates * t)))
    for j in range(1, k + 1):
        mom = quad(lambda t: math.exp(j * j * t) * u(t), 0, T, epsrel=1e-12)[0]
        assert mom == pytest.approx(-y0[j - 1] / bm.inputs[j - 1], rel=1e-7, abs=1e-9)
    yT = sm.ode_propagate(bm.eigs, y0, [seg])
    assert np.max(np.abs(yT[:k])) < 1e-7 * np.linalg.norm(y0)
    assert seg.cost() <= sm.boundary_cost_bound(k, T, y0)
    # closed-form cost a^T M a
    M = moment_matrix(k, T)
    assert seg.cost() == pytest.approx(math.sqrt(seg.amps @ M @ seg.amps), rel=1e-10)


def test_kolmogorov_examples():
    assert sm.kolmogorov_multiplier(1.0, 0.0, 1.0) == pytest.approx(math.exp(-1))
    assert sm.kolmogorov_multiplier(1.0, 1.0, 0.0) == pytest.approx(math.exp(-1 / 3))
    assert sm.KOLMOGOROV_C0 == pytest.approx((4 - math.sqrt(13)) / 6)


@pytest.mark.parametrize("t", [0.1, 1.0, 2.0])
def test_kolmogorov_bound_and_ode(t):
    xi, zeta = sm.frequency_grid(64)
    m = sm.kolmogorov_multiplier(t, xi, zeta)
    bound = np.exp(-sm.KOLMOGOROV_C0 * (t * zeta ** 2 + t ** 3 * xi ** 2))
    assert np.max(m / bound) <= 1 + 1e-12
    ode = sm.kolmogorov_ode_multiplier(t, xi, zeta).reshape(xi.shape)
    assert np.max(np.abs(ode - m)) <= 1e-8


def test_kolmogorov_decay_grid():
    rng = np.random.default_rng(0)
    y = rng.standard_normal((16, 16))
    xi, zeta = sm.frequency_grid(16)
    out = sm.kolmogorov_decay(y, 0.5)
    k2 = xi ** 2 + zeta ** 2
    # coefficients above |k| = 4 decay at least as the radial bound
    mask = k2 >= 16
    assert np.all(np.abs(out[mask]) <= np.abs(y[mask]) * sm.kolmogorov_decay_bound(4.0, 0.5) * (1 + 1e-12))


def test_burgers_zero(burgers16):
    assert not np.any(sm.burgers_propagate(burgers16, np.zeros(16), [], 0.1))


def test_burgers_small_data_close_to_heat(burgers16):
    prev = None
    for eps in (1e-2, 1e-3):
        y0 = np.zeros(16)
        y0[0] = eps
        yb = sm.burgers_propagate(burgers16, y0, [], 0.1)
        yh = eps * math.exp(-math.pi ** 2 * 0.1)
        gap = np.linalg.norm(yb - np.eye(16)[0] * yh)
        assert gap <= 10 * eps ** 2
        if prev is not None:
            assert gap / eps ** 2 == pytest.approx(prev, rel=0.05)
        prev = gap / eps ** 2


def test_burgers_advection_conserves_energy(burgers16):
    rng = np.random.default_rng(1)
    for _ in range(5):
        y = rng.standard_normal(16)
        assert abs(y @ burgers16.advection(y)) <= 1e-10 * (y @ y) ** 1.5


def test_burgers_advection_against_quadrature(burgers16):
    y = np.zeros(16)
    y[0], y[1] = 0.7, -0.3

    def v(x):
        return math.sqrt(2) * (y[0] * math.sin(math.pi * x) + y[1] * math.sin(2 * math.pi * x))

    def vx(x):
        return math.sqrt(2) * math.pi * (y[0] * math.cos(math.pi * x) + 2 * y[1] * math.cos(2 * math.pi * x))

    adv = burgers16.advection(y)
    for j in (1, 2, 3, 5):
        ref = quad(lambda x: v(x) * vx(x) * math.sqrt(2) * math.sin(j * math.pi * x), 0, 1, epsabs=1e-13, limit=200)[0]
        assert adv[j - 1] == pytest.approx(ref, abs=1e-12)


def test_burgers_energy_identity():
    model = sm.BurgersModel(32)
    rng = np.random.default_rng(2)
    y0 = 0.1 * rng.standard_normal(32) / np.arange(1, 33)
    seg = sm.heat_low_mode_control(model.heat, y0, 3, 0.05)
    dt = model.step
    assert abs(sm.burgers_energy_defect(model, y0, [seg], 0.1)) <= 10 * dt * dt
    assert abs(sm.burgers_energy_defect(model, y0, [], 0.05)) <= 10 * dt * dt


def test_burgers_composition(burgers16):
    rng = np.random.default_rng(4)
    y0 = 0.05 * rng.standard_normal(16)
    seg = sm.heat_low_mode_control(burgers16.heat, y0, 2, 0.04)
    whole = sm.burgers_propagate(burgers16, y0, [seg, sm.ExpSegment(0.03)])
    split = sm.burgers_propagate(burgers16, sm.burgers_propagate(burgers16, y0, [seg]), [sm.ExpSegment(0.03)])
    assert np.linalg.norm(whole - split) <= 1e-12


def test_burgers_second_order_in_dt():
    rng = np.random.default_rng(6)
    y0 = 0.5 * rng.standard_normal(8)
    T = 0.05
    ref = sm.burgers_propagate(sm.BurgersModel(8, dt=T / 4096), y0, [], T)
    e1 = np.linalg.norm(sm.burgers_propagate(sm.BurgersModel(8, dt=T / 64), y0, [], T) - ref)
    e2 = np.linalg.norm(sm.burgers_propagate(sm.BurgersModel(8, dt=T / 128), y0, [], T) - ref)
    assert 3.0 < e1 / e2 < 5.0


def test_quadratic_gap_zero_and_scaling(burgers16):
    g, budget = sm.quadratic_gap(burgers16, np.zeros(16), [], 0.1)
    assert g == 0.0 and math.isnan(budget)
    rng = np.random.default_rng(5)
    y0 = rng.standard_normal(16) / np.arange(1, 17)
    seg = sm.heat_low_mode_control(burgers16.heat, rng.standard_normal(16), 3, 0.05)
    seg = seg.scaled(1 / seg.cost())
    ratios = [sm.quadratic_gap(burgers16, e * y0, [seg.scaled(e)], 0.05)[0] / e ** 2 for e in (1e-1, 1e-2, 1e-3)]
    assert max(ratios) / min(ratios) <= 3.0


def test_gap_within_calibrated_budget(burgers16):
    C = sm.calibrate_gap_constant(burgers16, samples=32, seed=0)
    model = burgers16.with_gap_constant(C)
    rng = np.random.default_rng(123)
    for _ in range(100):
        y0, hist = sm.random_small_data(model, rng, 1e-2, 0.1)
        gap, budget = sm.quadratic_gap(model, y0, hist, 0.1)
        assert gap <= budget


def test_field_csv_and_norms(heat):
    f = heat.field(np.eye(64)[1])
    assert f.to_csv().splitlines()[0] == "mode,coefficient"
    assert f.l2() == 1.0
    assert f.h1() == pytest.approx(2 * math.pi)
    assert f.hm1() == pytest.approx(1 / (2 * math.pi))
