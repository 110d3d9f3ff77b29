"""Write the reference networks and grouping files into networks/.

    python3 scripts/build_networks.py [outdir]
"""

import json
import sys
from pathlib import Path

from pmdstab import cases
from pmdstab.netmodel import serialize_network


def grouping_doc(directives):
    return json.dumps({"groupings": [
        {k: v for k, v in dict(vsc=d.vsc, shunt=d.shunt, series=d.series, name=d.name).items()
         if v is not None} for d in directives]}, indent=2) + "\n"


def main(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    networks = {
        "case1.json": cases.case1(),
        "case2a.json": cases.case2a(),
        "case2b_ieee14_approx.json": cases.case2b(),
        "passive_feeder.json": cases.passive_feeder(),
        "single_bus.json": cases.single_bus(),
    }
    for name, model in networks.items():
        (out / name).write_text(serialize_network(model) + "\n")
    for go in ("GO2", "GO3"):
        (out / f"case1_{go.lower()}.json").write_text(grouping_doc(cases.CASE1_GROUPINGS[go]))
    (out / "case2b_go2.json").write_text(grouping_doc(cases.CASE2B_GROUPINGS["GO2"]))
    for p in sorted(out.iterdir()):
        print(p)


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "networks")
