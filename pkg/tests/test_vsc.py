import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.interpolate import pade

from pmdstab import vsc as vscmod
from pmdstab.cases import table_vsc
from pmdstab.elements import rl_series_admittance, rl_series_impedance, shunt_cap_admittance
from pmdstab.errors import VscSingularError
from pmdstab.netmodel import OperatingPoint
from pmdstab.vsc import aggregate_converter, pade_delay, vsc_admittance

W1 = 2 * math.pi * 50


def block_diagram_oracle(p, omega1, s):
    """Straight-line composition of the control loops at theta0 = 0.

    Every signal is written as a pair of row maps acting on (dv, di); the
    output filter then closes dv = v_conv + Z_c di.
    """
    op = p.operating_point
    assert op.theta0 == 0.0
    v0 = np.array([op.v0_q, op.v0_d])
    i0 = np.array([op.ic0_q, op.ic0_d])
    zc0 = np.array([[p.R_c, omega1 * p.L_c], [-omega1 * p.L_c, p.R_c]])
    vconv0 = v0 - zc0 @ i0
    eye, zero = np.eye(2), np.zeros((2, 2))

    pll = (p.kp_pll + p.ki_pll / s) / s
    # theta = -pll * vc_d and vc_d = dv_d + v0_q * theta
    theta_v = np.array([0.0, -pll / (1 + pll * v0[0])])
    theta_i = np.zeros(2)
    vc_v = eye + np.outer([-v0[1], v0[0]], theta_v)
    vc_i = zero
    ic_v = np.outer([-i0[1], i0[0]], theta_v)
    ic_i = eye

    def power(a_vc, a_ic, which):
        if which == "p":
            return 1.5 * (i0 @ a_vc + v0 @ a_ic)
        return 1.5 * (np.array([i0[1], -i0[0]]) @ a_vc + np.array([-v0[1], v0[0]]) @ a_ic)

    kpq = p.kp_ol if p.kp_olq is None else p.kp_olq
    kiq = p.ki_ol if p.ki_olq is None else p.ki_olq
    f_olp = p.kp_ol + p.ki_ol / s
    f_olq = kpq + kiq / s
    f_il = p.kp_il + p.ki_il / s
    h_v = p.k_ffv / (1 + p.tau_ffv * s)
    x = p.tau_fd * s
    c = [math.factorial(10 - k) * math.factorial(5)
         / (math.factorial(10) * math.factorial(k) * math.factorial(5 - k)) for k in range(6)]
    f_d = sum(ck * (-x) ** k for k, ck in enumerate(c)) / sum(ck * x ** k for k, ck in enumerate(c))

    ir_v = -np.vstack([f_olp * power(vc_v, ic_v, "p"), f_olq * power(vc_v, ic_v, "q")])
    ir_i = -np.vstack([f_olp * power(vc_i, ic_i, "p"), f_olq * power(vc_i, ic_i, "q")])
    wl = p.k_dec * omega1 * p.L_c
    k_ic = np.array([[f_il, -wl], [wl, f_il]])
    vr_v = h_v * vc_v - f_il * ir_v + k_ic @ ic_v
    vr_i = h_v * vc_i - f_il * ir_i + k_ic @ ic_i
    g_c = np.array([vconv0[1], -vconv0[0]])
    vg_v = f_d * vr_v + np.outer(g_c, theta_v)
    vg_i = f_d * vr_i + np.outer(g_c, theta_i)
    zc = rl_series_impedance(p.R_c, p.L_c, omega1, s)
    return np.linalg.solve(vg_i + zc, eye - vg_v)


def test_pade_zero_delay():
    assert pade_delay(0.0, 2j * np.pi * 1234.0) == 1.0


def test_pade_all_pass_at_1khz():
    assert abs(abs(pade_delay(1.25e-4, 2j * np.pi * 1000)) - 1) <= 1e-9


def test_pade_small_phase():
    w = 2 * np.pi * 100
    assert np.angle(pade_delay(1.25e-4, 1j * w)) == pytest.approx(-w * 1.25e-4, abs=1e-6)


def test_pade_coefficients_match_scipy():
    taylor = [(-1) ** k / math.factorial(k) for k in range(11)]
    num, den = pade(taylor, 5, 5)
    c = vscmod.pade_coefficients()
    x = 0.37 + 0.2j
    assert pade_delay(1.0, x) == pytest.approx(num(x) / den(x), rel=1e-12)
    assert c[0] == 1.0 and c[1] == pytest.approx(0.5)


def test_pade_negative_delay_rejected():
    with pytest.raises(ValueError):
        pade_delay(-1e-3, 1j)


@given(w=st.floats(1.0, 1e6), tau=st.floats(0, 1e-3))
def test_pade_all_pass_property(w, tau):
    assert abs(abs(pade_delay(tau, 1j * w)) - 1) <= 1e-9


def test_table_params_match_block_oracle():
    s = 2j * np.pi * 1192
    y = vsc_admittance(table_vsc(0.25), W1, s)
    ref = block_diagram_oracle(table_vsc(0.25), W1, s)
    assert np.all(np.isfinite(y))
    assert np.linalg.norm(y - ref) <= 1e-9 * np.linalg.norm(ref)


@given(f=st.floats(0.5, 5000), q_d=st.floats(0, 1), iq=st.floats(-500, 500),
       idd=st.floats(-500, 500), vd=st.floats(-50, 50), k_dec=st.floats(0, 1))
def test_loaded_operating_points_match_block_oracle(f, q_d, iq, idd, vd, k_dec):
    op = OperatingPoint(ic0_q=iq, ic0_d=idd, v0_d=vd)
    p = dataclasses.replace(table_vsc(q_d), operating_point=op, k_dec=k_dec,
                            kp_olq=2e-6, ki_olq=0.002)
    s = 2j * np.pi * f
    y = vsc_admittance(p, W1, s)
    ref = block_diagram_oracle(p, W1, s)
    assert np.linalg.norm(y - ref) <= 1e-8 * np.linalg.norm(ref)


def zero_gain_params(q_d=0.3):
    return dataclasses.replace(table_vsc(q_d), kp_pll=0.0, ki_pll=0.0, kp_ol=0.0, ki_ol=0.0,
                               kp_il=0.0, ki_il=0.0, k_ffv=0.0, k_dec=0.0)


def test_zero_gains_reduce_to_filter():
    rng = np.random.default_rng(11)
    f = rng.uniform(1, 5000, 20)
    s = 2j * np.pi * f
    p = zero_gain_params()
    y = vsc_admittance(p, W1, s)
    ref = rl_series_admittance(p.R_c, p.L_c, W1, s)
    err = np.linalg.norm(y - ref, axis=(-1, -2)) / np.linalg.norm(ref, axis=(-1, -2))
    assert err.max() <= 1e-10


def test_no_load_power_rows():
    """With i0 = 0 the active power only sees the current, through v0_q."""
    A, _ = vscmod._system(table_vsc(), W1, np.array([2j * np.pi * 300]))
    row = int(np.flatnonzero(A[0, :, vscmod._P] == 1)[0])
    np.testing.assert_array_equal(A[0, row, vscmod._VC:vscmod._VC + 2], 0)
    np.testing.assert_allclose(A[0, row, vscmod._IC:vscmod._IC + 2],
                               [-1.5 * table_vsc().operating_point.v0_q, 0])


@given(f=st.floats(0.5, 5000), q_d=st.floats(0, 1))
def test_vsc_conjugate_symmetry(f, q_d):
    s = 2j * np.pi * f
    p = table_vsc(q_d)
    np.testing.assert_allclose(vsc_admittance(p, W1, -s), np.conj(vsc_admittance(p, W1, s)),
                               rtol=1e-10, atol=1e-14)


def test_vsc_continuity():
    p = table_vsc(0.5)
    y0 = vsc_admittance(p, W1, 2j * np.pi * 1000)
    deltas = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    diffs = [np.linalg.norm(vsc_admittance(p, W1, 2j * np.pi * (1000 + d)) - y0) for d in deltas]
    ratios = np.array(diffs[:-1]) / np.array(diffs[1:])
    assert np.all((ratios > 8) & (ratios < 12))


def test_vsc_vector_shape():
    s = 2j * np.pi * np.arange(1.0, 7.0).reshape(3, 2)
    assert vsc_admittance(table_vsc(), W1, s).shape == (3, 2, 2, 2)


def test_singular_controller_reported():
    with pytest.raises(VscSingularError, match="s=0"):
        vsc_admittance(zero_gain_params(), W1, 0.0)


def test_aggregate_identity():
    s = 2j * np.pi * 700
    y = vsc_admittance(table_vsc(), W1, s)
    out = aggregate_converter(y, np.zeros((2, 2)), np.zeros((2, 2)))
    np.testing.assert_allclose(out, y, rtol=1e-14)


@pytest.mark.parametrize("f", [1192.0, 37.0, 2500.0])
def test_aggregate_equals_internal_node_elimination(f):
    """Series branch to an internal node carrying the converter and its cap."""
    s = 2j * np.pi * f
    y_v = vsc_admittance(table_vsc(0.5), W1, s)
    y_c = shunt_cap_admittance(141.471e-6, W1, s)
    y_t = rl_series_admittance(0.00557, 0.184e-3, W1, s)
    # two-node admittance: outer node 0, internal node 1
    full = np.block([[y_t, -y_t], [-y_t, y_t + y_c + y_v]])
    schur = full[:2, :2] - full[:2, 2:] @ np.linalg.solve(full[2:, 2:], full[2:, :2])
    agg = aggregate_converter(y_v, y_c, rl_series_impedance(0.00557, 0.184e-3, W1, s))
    assert np.linalg.norm(agg - schur) <= 1e-10 * np.linalg.norm(schur)
