"""Bisect the delay fraction at which a converter first destabilises a case.

Case I and Case II(a) vary VSC2, Case II(b) varies VSC1.

Usage: python3 scripts/qd_threshold.py {case1,case2a,case2b} [--lo 0.2] [--hi 0.8]
"""

import argparse

from pmdstab import cases
from pmdstab.modal import sweep
from pmdstab.pmd import UNSTABLE, pmd_assess

BUILDERS = {
    "case1": lambda q: cases.case1(q_d_vsc2=q),
    "case2a": lambda q: cases.case2a(q_d_vsc2=q),
    "case2b": lambda q: cases.case2b(q_d_vsc1=q),
}


def unstable(builder, q):
    rep = pmd_assess(sweep(builder(q)))
    return rep.verdict == UNSTABLE, rep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("case", choices=sorted(BUILDERS))
    ap.add_argument("--lo", type=float, default=0.2)
    ap.add_argument("--hi", type=float, default=0.8)
    ap.add_argument("--tol", type=float, default=0.005)
    args = ap.parse_args()
    build = BUILDERS[args.case]
    lo, hi = args.lo, args.hi
    if unstable(build, lo)[0] or not unstable(build, hi)[0]:
        raise SystemExit(f"no stable-to-unstable transition in [{lo}, {hi}]")
    while hi - lo > args.tol:
        mid = 0.5 * (lo + hi)
        if unstable(build, mid)[0]:
            hi = mid
        else:
            lo = mid
    _, rep = unstable(build, hi)
    f = ", ".join(f"{p.f_x:.1f} Hz" for p in rep.unstable_points)
    print(f"{args.case}: stable at q_d={lo:.4f}, unstable at q_d={hi:.4f} ({f})")


if __name__ == "__main__":
    main()
