import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vsgss.errors import ConvergenceError, SingularError
from vsgss.model import Dispatch, MachineOperatingPoint, default_base_case
from vsgss.powerflow import (
    PowerFlowMatrix,
    build_a_coeffs,
    build_k_matrix,
    machine_power,
    solve_machine,
    solve_operating_point,
)


def fd_jacobian(v, th, vb, R, X, h=1e-6):
    """Central differences of the nonlinear power flow in (theta, v, v_b)."""
    J = np.empty((2, 3))
    x0 = np.array([th, v, vb])
    for j in range(3):
        xp, xm = x0.copy(), x0.copy()
        xp[j] += h
        xm[j] -= h
        fp = np.array(machine_power(xp[1], xp[0], xp[2], R, X))
        fm = np.array(machine_power(xm[1], xm[0], xm[2], R, X))
        J[:, j] = (fp - fm) / (2 * h)
    return J


def closed_form_r0(p, q, vb, X):
    # v cos(th) = vb + X q / vb, v sin(th) = X p / vb
    a, b = vb + X * q / vb, X * p / vb
    return math.hypot(a, b), math.atan2(b, a)


def test_base_operating_point():
    t0 = time.perf_counter()
    op = solve_operating_point(default_base_case())
    assert time.perf_counter() - t0 < 1.0
    for v, th in ((op.v_v0, op.theta_v0), (op.v_s0, op.theta_s0)):
        assert v == pytest.approx(1.1045, abs=5e-5)
        assert th == pytest.approx(0.0907, abs=5e-5)
    v_ref, th_ref = closed_form_r0(0.5, 0.5, 1.0, 0.2)
    assert op.v_v0 == pytest.approx(v_ref, abs=1e-12)
    assert op.theta_v0 == pytest.approx(th_ref, abs=1e-12)


def test_alternate_dispatch_closed_form():
    v, th, _ = solve_machine(0.5, 0.25, 1.0, 0.0, 0.2)
    assert v == pytest.approx(1.054751, abs=1e-6)
    assert th == pytest.approx(0.094952, abs=1e-6)
    p, q = machine_power(v, th, 1.0, 0.0, 0.2)
    assert abs(p - 0.5) <= 1e-10 and abs(q - 0.25) <= 1e-10


@pytest.mark.parametrize("R, X", [(0.0, 0.2), (0.1, 0.3), (0.05, 0.1)])
def test_zero_power(R, X):
    v, th, _ = solve_machine(0.0, 0.0, 1.03, R, X)
    assert v == 1.03 and th == 0.0


def test_residual_and_idempotence():
    for p, q, R in ((0.5, 0.5, 0.0), (0.8, -0.2, 0.07), (0.3, 0.4, 0.02)):
        v, th, _ = solve_machine(p, q, 1.0, R, 0.2)
        pp, qq = machine_power(v, th, 1.0, R, 0.2)
        assert max(abs(pp - p), abs(qq - q)) <= 1e-10
        _, _, it = solve_machine(p, q, 1.0, R, 0.2, guess=(v, th))
        assert it <= 1


def test_symmetry():
    op = solve_operating_point(default_base_case())
    assert (op.v_v0, op.theta_v0) == (op.v_s0, op.theta_s0)


def test_infeasible_dispatch_reports_residual():
    with pytest.raises((ConvergenceError, SingularError)) as exc:
        solve_machine(0.1, -10.0, 1.0, 0.0, 0.2)
    if isinstance(exc.value, ConvergenceError):
        assert exc.value.residual > 0


def test_iteration_cap():
    with pytest.raises(ConvergenceError) as exc:
        solve_machine(0.5, 0.5, 1.0, 0.0, 0.2, max_iter=1)
    assert "did not converge" in str(exc.value)
    assert exc.value.residual is not None


def test_k_base_case():
    op = solve_operating_point(default_base_case()).machine("vsg")
    k = build_k_matrix(default_base_case().vsg, op).k
    # with R = 0: K11 = v cos(th) / X exactly
    expected = np.array([[5.5, 0.45267873, 0.5], [-0.5, 4.97946603, -4.5]])
    assert np.allclose(k, expected, atol=1e-8)
    assert np.allclose(k, fd_jacobian(op.v0, op.theta0, op.v_b0, 0.0, 0.2), atol=1e-6)
    assert k[0, 0] > 0 and k[1, 0] < 0


def test_k_trivial_point():
    k = build_k_matrix(default_base_case().vsg, MachineOperatingPoint(1.0, 0.0, 1.0)).k
    assert np.allclose(k, [[5, 0, 0], [0, 5, -5]], atol=1e-15)


def test_k_matches_finite_differences_random():
    rng = np.random.default_rng(1234)
    t0 = time.perf_counter()
    for _ in range(100):
        R, X = rng.uniform(0, 0.3), rng.uniform(0.05, 0.5)
        v, vb = rng.uniform(0.8, 1.3), rng.uniform(0.8, 1.2)
        th = rng.uniform(-1.2, 1.2)
        k = build_k_matrix(default_base_case().vsg.replace(R=R, X=X), MachineOperatingPoint(v, th, vb)).k
        assert np.max(np.abs(k - fd_jacobian(v, th, vb, R, X))) <= 1e-6
    assert time.perf_counter() - t0 < 5.0


def test_a_coeffs_base_case():
    op = solve_operating_point(default_base_case()).machine("vsg")
    k = build_k_matrix(default_base_case().vsg, op)
    a = build_a_coeffs(k)
    assert a.a_p == pytest.approx(-0.020408163, abs=1e-9)
    assert a.a_q == pytest.approx(-0.224489796, abs=1e-9)
    assert a.a_v == pytest.approx(1.127077655, abs=1e-9)
    # dv_b from the A coefficients satisfies both linearized rows
    rng = np.random.default_rng(5)
    for _ in range(5):
        dp, dq, dv = rng.normal(size=3)
        dvb = a.a_p * dp + a.a_q * dq + a.a_v * dv
        K = k.k
        # eliminate dtheta from the active row, check the reactive row
        dth = (dp - K[0, 1] * dv - K[0, 2] * dvb) / K[0, 0]
        assert K[1, 0] * dth + K[1, 1] * dv + K[1, 2] * dvb == pytest.approx(dq, abs=1e-12)


def test_a_coeffs_trivial():
    a = build_a_coeffs(PowerFlowMatrix([[5, 0, 0], [0, 5, -5]]))
    assert (a.a_p, a.a_q, a.a_v) == (0.0, -0.2, 1.0)


def test_a_coeffs_singular():
    with pytest.raises(SingularError) as exc:
        build_a_coeffs(PowerFlowMatrix([[2, 1, 1], [4, 3, 2]]))
    assert "0.0" in str(exc.value)


def test_solver_reuses_k_columns():
    # one Newton step from a nearby guess must shrink the error quadratically
    v, th, _ = solve_machine(0.5, 0.5, 1.0, 0.0, 0.2)
    _, _, it = solve_machine(0.5, 0.5, 1.0, 0.0, 0.2, guess=(v + 1e-3, th - 1e-3))
    assert it <= 3


@settings(max_examples=100, deadline=None)
@given(p=st.floats(-0.9, 0.9), q=st.floats(-0.5, 0.9), vb=st.floats(0.9, 1.1),
       R=st.floats(0, 0.2), X=st.floats(0.05, 0.4))
def test_solver_property(p, q, vb, R, X):
    v, th, _ = solve_machine(p, q, vb, R, X)
    pp, qq = machine_power(v, th, vb, R, X)
    assert max(abs(pp - p), abs(qq - q)) <= 1e-10
    assert v > 0 and abs(th) < math.pi / 2
