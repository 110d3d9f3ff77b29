"""dq-frame 2x2 blocks of passive elements.

All evaluators accept a scalar or an array of complex frequencies ``s``
(rad/s) and return an array of shape ``np.shape(s) + (2, 2)`` laid out as
``[[qq, qd], [dq, dd]]``.  ``omega1`` is the fundamental 2*pi*f_base.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularElementError
from .netmodel import PiCable, RlSeries, ShuntCap


def _block(diag, off):
    """Build [[diag, off], [-off, diag]] with broadcasting."""
    diag, off = np.broadcast_arrays(np.asarray(diag, dtype=complex),
                                    np.asarray(off, dtype=complex))
    out = np.empty(diag.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = diag
    out[..., 1, 1] = diag
    out[..., 0, 1] = off
    out[..., 1, 0] = -off
    return out


def inv2(m, what="block"):
    """Closed-form inverse of a stack of 2x2 matrices."""
    a, b = m[..., 0, 0], m[..., 0, 1]
    c, d = m[..., 1, 0], m[..., 1, 1]
    det = a * d - b * c
    scale = np.maximum(np.abs(m).max(axis=(-1, -2)), np.finfo(float).tiny)
    bad = np.abs(det) <= 1e-14 * scale ** 2
    if np.any(bad):
        raise SingularElementError(f"singular 2x2 {what}")
    out = np.empty_like(m)
    out[..., 0, 0] = d / det
    out[..., 0, 1] = -b / det
    out[..., 1, 0] = -c / det
    out[..., 1, 1] = a / det
    return out


def rl_series_impedance(R, L, omega1, s):
    s = np.asarray(s, dtype=complex)
    return _block(R + L * s, omega1 * L)


def rl_series_admittance(R, L, omega1, s, name="rl_series"):
    """Admittance of a series R-L branch: inverse of [[R+Ls, w1 L], [-w1 L, R+Ls]]."""
    z = rl_series_impedance(R, L, omega1, s)
    try:
        return inv2(z, what=f"impedance of '{name}'")
    except SingularElementError:
        bad = np.atleast_1d(np.asarray(s))
        raise SingularElementError(
            f"element '{name}' (R={R}, L={L}) is singular on the requested "
            f"frequencies (e.g. s={complex(bad.flat[0])})") from None


def shunt_cap_admittance(C, omega1, s):
    s = np.asarray(s, dtype=complex)
    return _block(C * s, C * omega1)


def pi_cable_expand(cable: PiCable):
    """Split a pi-section into its RL branch and two half-capacitance shunts."""
    half = cable.C_total / 2.0
    return (
        RlSeries(f"{cable.name}.rl", cable.from_bus, cable.to_bus, cable.R, cable.L),
        ShuntCap(f"{cable.name}.c_from", cable.from_bus, half),
        ShuntCap(f"{cable.name}.c_to", cable.to_bus, half),
    )


def measured_table_admittance(f_hz, y, s):
    """Linear interpolation of a tabulated admittance at s = j*2*pi*f.

    Negative frequencies use the conjugate of the mirrored entry; outside
    the table the end rows are held.
    """
    s = np.asarray(s, dtype=complex)
    f = s.imag / (2 * np.pi)
    table = np.asarray(y, dtype=complex).reshape(-1, 2, 2)
    grid = np.asarray(f_hz, dtype=float)
    fa = np.abs(f)
    out = np.empty(f.shape + (2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            re = np.interp(fa, grid, table[:, i, j].real)
            im = np.interp(fa, grid, table[:, i, j].imag)
            out[..., i, j] = re + 1j * np.where(f < 0, -im, im)
    return out
