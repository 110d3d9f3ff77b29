"""Small-signal dq admittance of a grid-following VSC.

The controller (PLL, P/Q outer loops, inner current loop with voltage
feed-forward and wL decoupling, control delay) and the output filter
R_c, L_c are written as one linear relation among the small-signal
variables.  At each frequency the internal variables are eliminated by a
dense complex solve, leaving

    delta_i = Y_vsc(s) @ delta_v

with both vectors in the global dq frame and ``delta_i`` the current drawn
from the bus by the converter, so Y_vsc stamps as a plain shunt.

dq quantities are peak-valued, hence the 3/2 factor in the power terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elements import inv2
from .errors import AggregationError, VscSingularError
from .netmodel import VscParams

PADE_ORDER = 5


def pade_coefficients(order=PADE_ORDER):
    """Coefficients c_k of the [n/n] Pade approximant of exp(-x).

    exp(-x) ~ sum c_k (-x)^k / sum c_k x^k, lowest power first.
    """
    n = order
    return np.array([
        math.factorial(2 * n - k) * math.factorial(n)
        / (math.factorial(2 * n) * math.factorial(k) * math.factorial(n - k))
        for k in range(n + 1)
    ])


def pade_delay(tau, s, order=PADE_ORDER):
    """[n/n] Pade rational approximation of exp(-tau*s)."""
    if tau < 0:
        raise ValueError("delay must be non-negative")
    x = tau * np.asarray(s, dtype=complex)
    c = pade_coefficients(order)
    num = np.polynomial.polynomial.polyval(-x, c)
    den = np.polynomial.polynomial.polyval(x, c)
    return num / den


def _pi(kp, ki, s):
    return kp + ki / s


@dataclass
class ControllerBlocks:
    F_olp: np.ndarray
    F_olq: np.ndarray
    F_il: np.ndarray
    F_pll: np.ndarray
    H_v: np.ndarray
    F_D: np.ndarray
    rot: np.ndarray       # global -> local rotation at theta0
    rot_inv: np.ndarray   # local -> global


def controller_blocks(p: VscParams, s) -> ControllerBlocks:
    s = np.asarray(s, dtype=complex)
    kpq, kiq = p.olq_gains
    th = p.operating_point.theta0
    c, sn = math.cos(th), math.sin(th)
    return ControllerBlocks(
        F_olp=_pi(p.kp_ol, p.ki_ol, s),
        F_olq=_pi(kpq, kiq, s),
        F_il=_pi(p.kp_il, p.ki_il, s),
        F_pll=_pi(p.kp_pll, p.ki_pll, s),
        H_v=p.k_ffv / (1.0 + p.tau_ffv * s),
        F_D=pade_delay(p.tau_fd, s),
        rot=np.array([[c, -sn], [sn, c]]),
        rot_inv=np.array([[c, sn], [-sn, c]]),
    )


# unknown layout of the per-frequency linear system
_I = 0      # global converter current (q, d)
_TH = 2     # PLL angle deviation
_VC = 3     # local PCC voltage
_IC = 5     # local converter current
_P = 7      # active power (then reactive power at 8)
_IR = 9     # current reference
_VH = 11    # filtered feed-forward voltage
_VR = 13    # voltage reference, local
_VCC = 15   # delayed converter voltage, local
_VCG = 17   # converter voltage, global
_N = 19


def _system(p: VscParams, omega1: float, s):
    """Assemble A x = B dv for every frequency; shapes (F, 19, 19), (F, 19, 2)."""
    s = np.asarray(s, dtype=complex).ravel()
    nf = s.size
    cb = controller_blocks(p, s)
    op = p.operating_point
    v0 = np.array([op.v0_q, op.v0_d])
    i0 = np.array([op.ic0_q, op.ic0_d])
    Rc, Lc = p.R_c, p.L_c
    z0 = np.array([[Rc, omega1 * Lc], [-omega1 * Lc, Rc]])
    vc0 = v0 - z0 @ i0  # converter terminal voltage at the operating point, local
    th = op.theta0
    c, sn = math.cos(th), math.sin(th)
    # d/d(theta) of (rotation @ x0), expressed with local-frame operating values
    g_v = np.array([-v0[1], v0[0]])
    g_i = np.array([-i0[1], i0[0]])
    g_c = np.array([-vc0[0] * sn + vc0[1] * c, -vc0[0] * c - vc0[1] * sn])

    A = np.zeros((nf, _N, _N), dtype=complex)
    B = np.zeros((nf, _N, 2), dtype=complex)
    r = 0
    # local voltage: vc = rot v + g_v th
    for k in range(2):
        A[:, r, _VC + k] = 1
        A[:, r, _TH] = -g_v[k]
        B[:, r, :] = cb.rot[k]
        r += 1
    # PLL: the PI output is a frequency deviation, so th = -(F_pll / s) vc_d
    A[:, r, _TH] = 1
    A[:, r, _VC + 1] = cb.F_pll / s
    r += 1
    # local current: ic = rot i + g_i th
    for k in range(2):
        A[:, r, _IC + k] = 1
        A[:, r, _I:_I + 2] = -cb.rot[k]
        A[:, r, _TH] = -g_i[k]
        r += 1
    # small-signal powers
    vq, vd = v0
    iq, id_ = i0
    A[:, r, _P] = 1
    A[:, r, _VC:_VC + 2] = [-1.5 * iq, -1.5 * id_]
    A[:, r, _IC:_IC + 2] = [-1.5 * vq, -1.5 * vd]
    r += 1
    A[:, r, _P + 1] = 1
    A[:, r, _VC:_VC + 2] = [-1.5 * id_, 1.5 * iq]
    A[:, r, _IC:_IC + 2] = [1.5 * vd, -1.5 * vq]
    r += 1
    # outer loops: ir_q = -F_olp p, ir_d = -F_olq q
    A[:, r, _IR] = 1
    A[:, r, _P] = cb.F_olp
    r += 1
    A[:, r, _IR + 1] = 1
    A[:, r, _P + 1] = cb.F_olq
    r += 1
    # voltage feed-forward filter
    for k in range(2):
        A[:, r, _VH + k] = 1
        A[:, r, _VC + k] = -cb.H_v
        r += 1
    # inner loop: vr = vh - F_il ir + [[F_il, -w L], [w L, F_il]] ic
    wl = p.k_dec * omega1 * Lc
    for k in range(2):
        A[:, r, _VR + k] = 1
        A[:, r, _VH + k] = -1
        A[:, r, _IR + k] = cb.F_il
        A[:, r, _IC + k] = -cb.F_il
        A[:, r, _IC + 1 - k] = wl if k == 0 else -wl
        r += 1
    # control delay
    for k in range(2):
        A[:, r, _VCC + k] = 1
        A[:, r, _VR + k] = -cb.F_D
        r += 1
    # converter voltage to global frame: vcg = rot_inv vcc + g_c th
    for k in range(2):
        A[:, r, _VCG + k] = 1
        A[:, r, _VCC:_VCC + 2] = -cb.rot_inv[k]
        A[:, r, _TH] = -g_c[k]
        r += 1
    # output filter: v = vcg + Z_c(s) i
    for k in range(2):
        A[:, r, _VCG + k] = 1
        A[:, r, _I + k] = Rc + Lc * s
        A[:, r, _I + 1 - k] = omega1 * Lc if k == 0 else -omega1 * Lc
        B[:, r, k] = 1
        r += 1
    assert r == _N
    return A, B


def vsc_admittance(params: VscParams, omega1: float, s, name="vsc"):
    """Y_vsc(s) for scalar or array ``s``; shape ``np.shape(s) + (2, 2)``."""
    shape = np.shape(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        A, B = _system(params, omega1, s)
    finite = np.all(np.isfinite(A), axis=(-1, -2))
    x = None
    if finite.all():
        try:
            x = np.linalg.solve(A, B)
        except np.linalg.LinAlgError:
            pass
    ok = np.all(np.isfinite(x), axis=(-1, -2)) if x is not None else finite & False
    if not ok.all():
        bad = int(np.flatnonzero(~ok)[0])
        if not finite.all():
            bad = int(np.flatnonzero(~finite)[0])
        elif x is None:
            for k in range(A.shape[0]):
                if np.linalg.matrix_rank(A[k]) < _N:
                    bad = k
                    break
        s_flat = np.asarray(s, dtype=complex).ravel()
        cond = np.linalg.cond(A[bad]) if finite[bad] else np.inf
        raise VscSingularError(
            f"converter '{name}': internal controller system singular at "
            f"s={s_flat[bad]:.6g} (condition estimate {cond:.3g})")
    y = x[:, _I:_I + 2, :]
    return y.reshape(shape + (2, 2))


def aggregate_converter(y_vsc, y_shunt, z_series):
    """Merge a converter with its shunt filter and series branch.

    Returns [(Z_vsc || Z_shunt) + Z_series]^-1, evaluated as
    (I + Y_p Z_series)^-1 Y_p with Y_p = Y_vsc + Y_shunt so that a zero
    series impedance is allowed.
    """
    y_p = np.asarray(y_vsc) + np.asarray(y_shunt)
    eye = np.broadcast_to(np.eye(2), y_p.shape)
    m = eye + y_p @ np.asarray(z_series)
    try:
        m_inv = inv2(m, what="(I + Y_parallel Z_series)")
    except Exception as exc:
        raise AggregationError(f"aggregation failed: {exc}") from None
    return m_inv @ y_p
