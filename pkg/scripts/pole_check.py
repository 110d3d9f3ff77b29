"""Locate the unstable closed-loop pole of Case I directly in the s-plane.

The closed-loop poles are the zeros of det Y_T(s).  Around a small box
near the resonance the argument principle counts zeros minus poles; when
the count is one, the contour integral of s d(log det) gives the zero's
position, which a few secant steps then polish.  The result is compared
with the growth rate that the modal-damping assessment infers from the
jw-axis sweep alone.

Usage: python3 scripts/pole_check.py [q_d]
"""

import sys

import numpy as np

from pmdstab import cases
from pmdstab.assembly import assemble
from pmdstab.modal import sweep
from pmdstab.pmd import pmd_assess


def det_yt(model, s):
    return np.linalg.det(assemble(model, np.atleast_1d(s)).y_t)


def box(re0, re1, w0, w1, n=4000):
    t = np.linspace(0, 1, n, endpoint=False)
    return np.concatenate([
        re0 + (re1 - re0) * t + 1j * w0,
        re1 + 1j * (w0 + (w1 - w0) * t),
        re1 - (re1 - re0) * t + 1j * w1,
        re0 + 1j * (w1 - (w1 - w0) * t),
    ])


def locate(model, re0, re1, f0, f1):
    s = box(re0, re1, 2 * np.pi * f0, 2 * np.pi * f1)
    d = det_yt(model, s)
    dlog = np.log(np.roll(d, -1) / d)  # principal branch, small steps
    winding = dlog.imag.sum() / (2 * np.pi)
    if round(winding) != 1:
        raise SystemExit(f"box holds {winding:.3f} net zeros, expected one")
    mid = 0.5 * (s + np.roll(s, -1))
    z = (mid * dlog).sum() / (2j * np.pi)
    # secant polish on det Y_T
    a, b = z, z + 1e-3
    fa, fb = det_yt(model, a)[0], det_yt(model, b)[0]
    for _ in range(30):
        if fb == fa:
            break
        a, b = b, b - fb * (b - a) / (fb - fa)
        fa, fb = fb, det_yt(model, b)[0]
        if abs(b - a) < 1e-10 * abs(b):
            break
    return b


def main(q_d=0.5):
    model = cases.case1(q_d_vsc2=q_d)
    pole = locate(model, 0.2, 20.0, 1185.0, 1197.0)
    print(f"closed-loop pole: sigma = {pole.real:+.4f} 1/s, f = {pole.imag / (2 * np.pi):.3f} Hz")
    rep = pmd_assess(sweep(model))
    for p in rep.points:
        if abs(p.f_peak - pole.imag / (2 * np.pi)) < 10:
            print(f"modal damping:    sigma = {p.sigma_estimate:+.4f} 1/s, f_x = {p.f_x:.3f} Hz "
                  f"({p.verdict})")


if __name__ == "__main__":
    main(float(sys.argv[1]) if len(sys.argv) > 1 else 0.5)
