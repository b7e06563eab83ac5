import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from nullctrl import inequalities as iq
from nullctrl.errors import BandLimitError, EmptySetError


def test_remez_trivial_and_linear():
    one = iq.poly_sample([1.0])
    lhs, rhs = iq.remez_check(one, iq.MeasurableSet1D(((0.3, 0.4),)), 0)
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(1.0)
    lhs, rhs = iq.remez_check(iq.poly_sample([0.0, 1.0]), iq.MeasurableSet1D(((0.0, 0.5),)), 1)
    assert lhs == pytest.approx(1.0)
    assert rhs == pytest.approx(8 * math.e, rel=1e-9)


def test_remez_chebyshev_random_sets():
    # T5 mapped to [0,1]
    cheb = np.polynomial.chebyshev.Chebyshev([0, 0, 0, 0, 0, 1], domain=[0, 1]).convert(kind=np.polynomial.Polynomial)
    f = iq.poly_sample(cheb.coef)
    rng = np.random.default_rng(5)
    for _ in range(100):
        om = iq.random_intervals(rng, 0.3)
        lhs, rhs = iq.remez_check(f, om, 5)
        assert lhs <= rhs * (1 + 1e-9)


def test_remez_nested_monotone():
    f = iq.poly_sample([0.2, -1.0, 3.0, -2.0])
    sets = [((0.4, 0.5),), ((0.3, 0.55),), ((0.1, 0.9),)]
    rhs = [iq.remez_check(f, iq.MeasurableSet1D(s), 3)[1] for s in sets]
    assert rhs[0] >= rhs[1] >= rhs[2]


def test_remez_empty_set():
    with pytest.raises(ValueError):
        iq.MeasurableSet1D(((0.5, 0.5),))


def test_sup_grid_against_dense_grid():
    f = iq.trig_sample([0.0, 0.3, -0.2], [0.0, 1.0, 0.5])
    dense = np.max(np.abs(f(np.linspace(0, 1, 200001))))
    assert iq.sup_abs_1d(f, [(0.0, 1.0)]) == pytest.approx(dense, rel=1e-9)


def test_remez_multi_examples():
    one = iq.tensor_sample(iq.poly_sample([1.0]), iq.poly_sample([1.0]))
    lhs, rhs = iq.remez_check_multi(one, [((0.2, 0.3), (0.4, 0.6))], 0, 2)
    assert lhs == pytest.approx(1.0) and lhs <= rhs
    xy = iq.tensor_sample(iq.poly_sample([0.0, 1.0]), iq.poly_sample([0.0, 1.0]))
    lhs, rhs = iq.remez_check_multi(xy, [((0.0, 0.5), (0.0, 0.5))], 1, 2)
    assert lhs == pytest.approx(1.0, rel=1e-9) and lhs <= rhs


def test_remez_l2_form_trig_tensor():
    rng = np.random.default_rng(11)
    for _ in range(50):
        fx = iq.trig_sample(rng.standard_normal(3), rng.standard_normal(3))
        fy = iq.trig_sample(rng.standard_normal(3), rng.standard_normal(3))
        lo = rng.uniform(0, 0.6, 2)
        box = [((lo[0], lo[0] + 0.3), (lo[1], lo[1] + 0.3))]
        lhs, rhs = iq.remez_check_multi(iq.tensor_sample(fx, fy), box, 2, 2, form="l2")
        assert lhs <= rhs * (1 + 1e-9)


def test_l2_norm_against_quad():
    f = iq.trig_sample([0.5, 1.0], [0.0, -0.7])
    ref = math.sqrt(quad(lambda x: f(np.array([x]))[0] ** 2, 0.2, 0.7)[0])
    assert iq.l2_norm(f, iq.as_boxset(iq.MeasurableSet1D(((0.2, 0.7),)), 1)) == pytest.approx(ref, rel=1e-12)


def test_turan_examples():
    r, _ = iq.turan_ratio([1.0], iq.MeasurableSet1D(((0.0, 1.0),)))
    assert r == pytest.approx(1.0, abs=1e-12)
    r, _ = iq.turan_ratio([1.0], iq.MeasurableSet1D(((0.25, 0.75),)))
    assert r == pytest.approx(math.sqrt(2 * math.pi / (math.pi + 2)), rel=1e-12)


def test_sine_mass_matrix_against_quad():
    iv = ((0.1, 0.3), (0.6, 0.65))
    G = iq.sine_mass_matrix(4, iv)
    for i, j in ((1, 1), (1, 3), (4, 2)):
        ref = sum(quad(lambda x: 2 * math.sin(i * math.pi * x) * math.sin(j * math.pi * x), a, b)[0]
                  for a, b in iv)
        assert G[i - 1, j - 1] == pytest.approx(ref, abs=1e-13)


def test_turan_growth_linear_in_n():
    om = iq.MeasurableSet1D(((0.1, 0.4),))
    C, _ = iq.turan_constant(om.measure)
    rng = np.random.default_rng(0)
    ns = np.arange(1, 13)
    logs = []
    for n in ns:
        worst = 0.0
        for _ in range(20):
            r, b = iq.turan_ratio(rng.standard_normal(n), om)
            assert r <= b
            worst = max(worst, r)
        logs.append(math.log(worst))
    slope = np.polyfit(ns, logs, 1)[0]
    assert slope <= math.log(C)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8), st.floats(-1e3, 1e3).filter(lambda x: abs(x) > 1e-3))
def test_turan_scaling_invariance(a, lam):
    a = np.asarray(a)
    if np.linalg.norm(a) < 1e-3:
        return
    om = iq.MeasurableSet1D(((0.2, 0.5),))
    r1, _ = iq.turan_ratio(a, om)
    r2, _ = iq.turan_ratio(lam * a, om)
    assert r2 == pytest.approx(r1, rel=1e-10)


@pytest.mark.parametrize("k", [2, 6, 10])
def test_turan_conditioning(k):
    # cond of the restricted Gram matrix against Turan's constant, in extended precision
    for iv in (((0.5, 1.0),), ((0.1, 0.2),), ((0.0, 0.05), (0.6, 0.65))):
        om = iq.MeasurableSet1D(iv)
        C, _ = iq.turan_constant(om.measure)
        with mp.workdps(60):
            G = mp.matrix(k, k)
            for i in range(1, k + 1):
                for j in range(1, k + 1):
                    s = mp.mpf(0)
                    for a, b in iv:
                        a, b = mp.mpf(a), mp.mpf(b)
                        d = (i - j) * mp.pi
                        t = (i + j) * mp.pi
                        s += ((b - a) if i == j else (mp.sin(d * b) - mp.sin(d * a)) / d) \
                            - (mp.sin(t * b) - mp.sin(t * a)) / t
                    G[i - 1, j - 1] = s
            ev = mp.eigsy(G, eigvals_only=True)
            cond = max(ev) / min(ev)
        assert cond <= C ** (2 * k)


def test_bernstein_examples():
    for N in (1.0, 3.0, 7.0):
        # sin(Nx) = (e^{iNx} - e^{-iNx}) / 2i
        lhs, rhs = iq.bernstein_check([N, -N], [0.5j * -1, 0.5j], N, (1,))
        assert lhs == pytest.approx(rhs, rel=1e-14)
    lhs, rhs = iq.bernstein_check([0.5, 1.0], [1.0, 2.0], 1.0, (0,))
    assert lhs == pytest.approx(rhs)
    with pytest.raises(BandLimitError):
        iq.bernstein_check([2.0], [1.0], 1.0, (1,))


def test_bernstein_random_second_derivative():
    rng = np.random.default_rng(2)
    for _ in range(100):
        N = rng.uniform(1, 10)
        xi = rng.uniform(-N, N, 6)
        c = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        lhs, rhs = iq.bernstein_check(xi, c, N, (2,))
        assert lhs <= rhs * (1 + 1e-9)


def test_ls_full_set_ratio_one():
    full = iq.ThickSet1D(1.0, ((0.0, 1.0),))
    assert full.gamma == pytest.approx(1.0)
    for N, w in iq.ls_ratio_scan([1, 2, 4], full, trials=5):
        assert w == pytest.approx(1.0, rel=1e-9)


def test_ls_constants_ratio():
    half = iq.ThickSet1D(1.0)
    assert half.gamma == pytest.approx(0.5, abs=2e-3)
    (N, w), = iq.ls_ratio_scan([0.0], half, trials=3)
    assert w == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_ls_scan_log_affine():
    ts = iq.ThickSet1D(1.0)
    scan = iq.ls_ratio_scan([1, 2, 4, 8], ts, trials=50, seed=0)
    ws = [w for _, w in scan]
    assert all(np.isfinite(ws))
    _, _, r2 = iq.log_affine_fit([N * ts.a for N, _ in scan], ws)
    assert r2 >= 0.9


def test_sobolev_examples():
    lhs, rhs = iq.sobolev_check(iq.poly_sample([3.0]), 1)
    assert lhs == pytest.approx(9.0) and rhs == pytest.approx(18.0)
    lhs, rhs = iq.sobolev_check(iq.trig_sample([0.0, 0.0], [0.0, 1.0]), 1)
    assert lhs == pytest.approx(1.0, rel=1e-9)
    assert rhs == pytest.approx(2 * (0.5 + 2 * math.pi ** 2), rel=1e-9)


def test_sobolev_2d_random():
    rng = np.random.default_rng(4)
    for _ in range(50):
        f = iq.tensor_sample(iq.trig_sample(rng.standard_normal(3), rng.standard_normal(3)),
                             iq.trig_sample(rng.standard_normal(3), rng.standard_normal(3)))
        lhs, rhs = iq.sobolev_check(f, 2)
        assert lhs <= rhs * (1 + 1e-9)


def test_gautschi_examples():
    ni, b = iq.gautschi_bound([5.0])
    assert ni == pytest.approx(1.0) and b == pytest.approx(1.0)
    ni, b = iq.gautschi_bound([0.0, 1.0])
    assert ni == pytest.approx(math.sqrt((3 + math.sqrt(5)) / 2), rel=1e-12)
    assert b == pytest.approx(2 * math.sqrt(2), rel=1e-12)


def test_gautschi_random_disk():
    rng = np.random.default_rng(9)
    for _ in range(100):
        n = int(rng.integers(1, 9))
        z = np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
        ni, b = iq.gautschi_bound(z)
        V = np.vander(z, increasing=True)
        ref = np.linalg.svd(np.linalg.inv(V), compute_uv=False)[0]
        assert ni == pytest.approx(ref, rel=1e-6)
        assert ni <= b * (1 + 1e-9)


def test_suites_have_no_violations():
    for rows in (iq.remez_suite(42, 20), iq.turan_suite(42), iq.bernstein_suite(42, 20),
                 iq.sobolev_suite(42, 10), iq.gautschi_suite(42, 100)):
        assert rows and all(r.ok for r in rows)


def test_margins_csv_records_seed():
    text = iq.rows_to_csv(iq.gautschi_suite(7, 5), 7)
    lines = text.splitlines()
    assert lines[0] == "# seed=7"
    assert lines[1] == "check,parameter,lhs,rhs,margin"


def test_empty_set_errors():
    with pytest.raises(EmptySetError):
        iq.remez_check_multi(iq.poly_sample([1.0]), [((0.2, 0.2),)], 0, 1)
