"""Run every study case through both criteria and print a verdict table.

Covers Case I under its three grouping options, Case II(a) and the
Case II(b) approximation of the 14-bus system, at the baseline delay and
at the delay that destabilises each case.  Pass ``--out DIR`` to also
write the full analysis outputs of each row.

Usage: python3 scripts/reproduce_cases.py [--out DIR]
"""

import argparse
import json
from pathlib import Path

from pmdstab import cases
from pmdstab.assembly import apply_grouping
from pmdstab.gnc import gnc_assess
from pmdstab.modal import sweep
from pmdstab.plots import modal_impedance_svg, nyquist_svg
from pmdstab.pmd import pmd_assess


def studies():
    for q in (0.25, 0.5):
        base = cases.case1(q_d_vsc2=q)
        for go, d in cases.CASE1_GROUPINGS.items():
            yield f"case1 {go} q_d={q}", apply_grouping(base, d)
    for q in (0.25, 0.45):
        yield f"case2a q_d={q}", cases.case2a(q_d_vsc2=q)
    for q in (0.25, 0.6):
        base = cases.case2b(q_d_vsc1=q)
        for go, d in cases.CASE2B_GROUPINGS.items():
            yield f"case2b {go} q_d1={q}", apply_grouping(base, d)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()
    print(f"{'study':<24} {'pmd':<9} {'f_unstable [Hz]':<18} {'gnc':<9} {'cw':>4}")
    for label, model in studies():
        res = sweep(model)
        pmd = pmd_assess(res)
        gnc = gnc_assess(model)
        f_un = ", ".join(f"{p.f_x:.1f}" for p in pmd.unstable_points) or "-"
        print(f"{label:<24} {pmd.verdict:<9} {f_un:<18} {gnc.verdict:<9} "
              f"{gnc.total_clockwise:>+4d}")
        if args.out:
            d = args.out / label.replace(" ", "_").replace("=", "")
            d.mkdir(parents=True, exist_ok=True)
            doc = {"pmd": pmd.to_dict(), "gnc": gnc.to_dict()}
            (d / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
            for p in pmd.unstable_points:
                (d / f"mode_{p.mode_id:02d}.svg").write_text(
                    modal_impedance_svg(res.trace(p.mode_id), [p]))
            (d / "nyquist.svg").write_text(nyquist_svg(gnc.loci))


if __name__ == "__main__":
    main()
