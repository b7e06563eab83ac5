import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nullctrl import ode_core as oc
from nullctrl import tangent_method as tm
from nullctrl.errors import BasinEscapeError, OutOfBallError


def test_make_variation_examples():
    e2 = tm.make_variation("jakubczyk-e2")
    assert e2.order == 2 and np.allclose(e2.direction, [0, 1 / 3, 0])
    assert np.allclose(e2(1.0)([0.0, 0.5, 1.0]).ravel(), [2.0, 0.0, -2.0])
    e3m = tm.make_variation("jakubczyk-e3", -1)
    assert e3m.order == 4 and e3m.direction[2] == pytest.approx(-29 / 120120)
    with pytest.raises(ValueError):
        tm.make_variation("nope")
    assert tm.make_variation("constant")(0.0).duration == 0.0


@pytest.fixture(scope="module")
def jak():
    return oc.jakubczyk()


def test_estimate_orders(jak):
    e2 = tm.estimate_order(jak, tm.make_variation("jakubczyk-e2"), substeps=256)
    assert e2.k_hat == 2 and e2.xi_hat[1] == pytest.approx(1 / 3, rel=1e-3)
    e3 = tm.estimate_order(jak, tm.make_variation("jakubczyk-e3"), substeps=512)
    assert e3.k_hat == 4 and e3.xi_hat[2] == pytest.approx(tm.E3_COEFF, rel=0.05)
    assert e3.to_csv().splitlines()[0] == "T,abs_y1,abs_y2,abs_y3,local_slope"


def test_constant_on_integrator_is_order_one():
    est = tm.estimate_order(oc.scalar_integrator(), tm.make_variation("constant", dim=1), substeps=16)
    assert est.k_hat == 1 and est.xi_hat[0] == pytest.approx(1.0, rel=1e-10)


def _square_basis(r):
    # order-2 basis with directions +-r e_i; only the decomposition is exercised
    fams = [tm.ControlVariationFamily(2, s * r * np.eye(2)[i], lambda T: oc.ControlSignal.zero(T))
            for s in (1, -1) for i in range(2)]
    return tm.TangentBasis(fams, r, 2)


def test_convex_decompose_examples():
    b = _square_basis(0.4)
    assert np.all(tm.convex_decompose(b, np.zeros(2)) == 0)
    lam = tm.convex_decompose(b, np.array([0.2, 0.0]))
    # -z = -(r/2) e1 is carried by the minus slot
    assert lam[2] == pytest.approx(0.5 ** 0.5) and np.count_nonzero(lam) == 1
    with pytest.raises(OutOfBallError):
        tm.convex_decompose(b, np.array([0.5, 0.0]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.integers(1, 6))
def test_convex_identity(z, k):
    z = np.asarray(z)
    r = 2.0
    fams = [None] * 6
    b = tm.TangentBasis(fams, r, k)
    lam = tm.convex_decompose(b, z)
    dirs = np.vstack([r * np.eye(3), -r * np.eye(3)])
    assert np.allclose(lam ** k @ dirs, -z, atol=1e-12)


@pytest.fixture(scope="module")
def basis():
    return tm.jakubczyk_basis()


def test_basis_common_order_and_budget(basis):
    assert basis.order == 4 and basis.dim == 3
    for f in basis.families:
        assert abs(np.linalg.norm(f.direction) - basis.r) <= 1e-12 * basis.r
        for T in (0.7, 0.2, 0.01):
            assert f(T).norm_l1() <= T * (1 + 1e-12)
            assert f(T).duration == pytest.approx(T)


def test_single_move_zero_and_bound(jak, basis):
    Tz, u, y = tm.single_move(jak, basis, np.zeros(3))
    assert Tz == 0.0 and not np.any(y)
    z = np.array([0.0, 1e-6, 0.0])
    Tz, u, y = tm.single_move(jak, basis, z)
    C = 2 * 56.79
    assert np.linalg.norm(y) <= C * 1e-6 ** 1.25
    assert Tz <= C * 1e-6 ** 0.25
    assert u.norm_l1() <= Tz * (1 + 1e-12)


def test_lift_examples():
    Ji = oc.jakubczyk_int()
    lift = tm.lift_direction(Ji, tm.make_variation("jakubczyk-e3", 1, dim=4),
                             tm.make_variation("jakubczyk-e3", -1, dim=4))
    assert lift.order == 9 and not lift.degenerate
    assert np.allclose(lift.direction, [0, 0, 0, tm.E3_COEFF], atol=1e-12)
    ch = oc.integrator_chain(2)
    cl = tm.lift_direction(ch, tm.make_variation("constant", 1, dim=2), tm.make_variation("constant", -1, dim=2))
    assert cl.order == 3 and np.allclose(cl.direction, [0, 1], atol=1e-9)
    est = tm.estimate_order(ch, cl, np.geomspace(0.2, 0.02, 6), substeps=64)
    assert est.k_hat == 3 and est.xi_hat[1] == pytest.approx(1.0, rel=0.05)
    flat = tm.lift_direction(oc.jakubczyk(), tm.make_variation("jakubczyk-e3", 1),
                             tm.make_variation("jakubczyk-e3", -1))
    assert flat.degenerate
    with pytest.raises(ValueError):
        tm.lift_direction(ch, tm.make_variation("constant", 1, dim=2), tm.make_variation("constant", 1, dim=2))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.5), st.floats(1e-4, 1e-2))
def test_families_continuous_in_T(T, h):
    for kind in ("constant", "jakubczyk-e2", "jakubczyk-e3"):
        f = tm.make_variation(kind)
        d = oc.l1_distance(f(T), f(T + h))
        # polynomial coefficients are bounded by 10: L1 distance grows at most linearly in h
        assert d <= 40.0 * h


def test_concatenation_adds_displacements(jak):
    e2 = tm.make_variation("jakubczyk-e2")
    errs = []
    for T in (0.1, 0.05, 0.025):
        y = oc.flow(jak, np.zeros(3), oc.concat_all([e2(T), e2(T)]), substeps=128)
        errs.append(np.linalg.norm(y - 2 * T * T * e2.direction))
    # error is higher order than T^2
    assert errs[1] / errs[0] < 0.2 and errs[2] / errs[1] < 0.2


def test_drive_zero_and_basin(jak, basis):
    res = tm.stlnc_drive(jak, basis, np.zeros(3), 1e-9)
    assert res.steps == 0 and res.terminal == 0.0 and res.total_time == 0.0
    rng = np.random.default_rng(0)
    for _ in range(3):
        z = rng.standard_normal(3)
        z *= 1e-11 / np.linalg.norm(z)
        res = tm.stlnc_drive(jak, basis, z, 1e-13)
        assert res.terminal <= 1e-13
        assert all(c <= 2.0 ** -4 for c in res.contractions)
        assert res.control.norm_l1() <= res.total_time * (1 + 1e-9)
    with pytest.raises(BasinEscapeError):
        tm.stlnc_drive(jak, basis, np.array([1e-3, 0, 0]), 1e-9, basin=1e-5)


def test_calibration_csv(jak, basis):
    cal = tm.calibrate_move(jak, basis, radii=[1e-7, 1e-9, 1e-11], samples=3)
    assert cal.C > 0
    # contraction improves like |z|^(1/4): below 1/2 by 1e-9, below 1/16 only by 1e-11
    assert np.all(np.diff(cal.worst_ratio) < 0)
    assert cal.r_cal == pytest.approx(1e-9) and cal.r_q == pytest.approx(1e-11)
    assert cal.to_csv().splitlines()[0] == "radius,worst_contraction"
