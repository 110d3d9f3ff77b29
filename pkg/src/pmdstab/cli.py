"""Command-line entry point.

Exit status: 0 stable, 2 unstable, 3 marginal or indeterminate, 1 error.
Errors print one line ``pmdstab: error: <code>: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .assembly import apply_grouping, assemble, dump_yt_csv, parse_grouping
from .errors import ParameterPathError, PmdStabError
from .gnc import GncReport, gnc_assess, loci_csv
from .modal import FrequencyGrid, modes_csv, sweep
from .netmodel import fingerprint, load_network, with_parameter
from .plots import modal_impedance_svg, nyquist_svg
from .pmd import MARGINAL, STABLE, UNSTABLE, PmdConfig, StabilityReport, pmd_assess

log = logging.getLogger("pmdstab")

EXIT_STABLE, EXIT_ERROR, EXIT_UNSTABLE, EXIT_MARGINAL = 0, 1, 2, 3
EXIT_OF = {STABLE: EXIT_STABLE, UNSTABLE: EXIT_UNSTABLE, MARGINAL: EXIT_MARGINAL}


@dataclass
class AnalyzeConfig:
    network: Path
    grid: FrequencyGrid = field(default_factory=FrequencyGrid)
    criteria: tuple = ("pmd", "gnc")
    grouping: Optional[Path] = None
    out: Path = Path("out")
    emit_csv: bool = True
    emit_svg: bool = True
    overrides: tuple = ()  # (path, value) pairs

    def __post_init__(self):
        if not self.criteria:
            raise ValueError("at least one criterion is required")


def combine_verdicts(verdicts: Sequence[str]) -> str:
    """Worst case over criteria: unstable beats marginal beats stable."""
    vs = set(verdicts)
    if UNSTABLE in vs:
        return UNSTABLE
    if vs - {STABLE}:
        return MARGINAL
    return STABLE


def exit_code(verdict: str) -> int:
    return EXIT_OF.get(verdict, EXIT_MARGINAL)


def _load_model(cfg: AnalyzeConfig):
    model = load_network(cfg.network)
    for path, value in cfg.overrides:
        model = with_parameter(model, path, value)
    directives = []
    if cfg.grouping is not None:
        try:
            text = Path(cfg.grouping).read_text()
        except FileNotFoundError:
            raise PmdStabError(f"grouping file '{cfg.grouping}' not found", "io.not_found")
        directives = parse_grouping(text)
    return model, directives, apply_grouping(model, directives)


def _evaluate(model, cfg: AnalyzeConfig):
    pmd_rep: Optional[StabilityReport] = None
    gnc_rep: Optional[GncReport] = None
    result = None
    if "pmd" in cfg.criteria:
        result = sweep(model, cfg.grid)
        pmd_rep = pmd_assess(result, PmdConfig())
    if "gnc" in cfg.criteria:
        gnc_rep = gnc_assess(model, cfg.grid)
    verdicts = [r.verdict for r in (pmd_rep, gnc_rep) if r is not None]
    return result, pmd_rep, gnc_rep, combine_verdicts(verdicts)


def _report(cfg, model, directives, pmd_rep, gnc_rep, verdict) -> dict:
    g = cfg.grid
    doc = {
        "tool": "pmdstab",
        "version": __version__,
        "network": {"file": Path(cfg.network).name, "fingerprint": fingerprint(model),
                    "buses": list(model.buses)},
        "grouping": [dict(vsc=d.vsc, shunt=d.shunt, series=d.series, name=d.name)
                     for d in directives],
        "overrides": [{"path": p, "value": v} for p, v in cfg.overrides],
        "grid": {"f_min": g.f_min, "f_max": g.f_max, "step": g.step,
                 "refine_factor": g.refine_factor, "refine_window_hz": g.refine_window_hz},
        "criteria": {},
        "verdict": verdict,
        "exit_code": exit_code(verdict),
    }
    if pmd_rep is not None:
        doc["criteria"]["pmd"] = pmd_rep.to_dict()
    if gnc_rep is not None:
        doc["criteria"]["gnc"] = gnc_rep.to_dict()
    if pmd_rep is not None and gnc_rep is not None:
        doc["criteria_agree"] = pmd_rep.verdict == gnc_rep.verdict
    return doc


def run_analyze(cfg: AnalyzeConfig) -> int:
    _, directives, model = _load_model(cfg)
    result, pmd_rep, gnc_rep, verdict = _evaluate(model, cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = _report(cfg, model, directives, pmd_rep, gnc_rep, verdict)
    (out / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if cfg.emit_csv:
        if result is not None:
            (out / "modes.csv").write_text(modes_csv(result))
        if gnc_rep is not None:
            (out / "loci.csv").write_text(loci_csv(gnc_rep.loci))
    if cfg.emit_svg:
        plots = out / "plots"
        plots.mkdir(exist_ok=True)
        if result is not None:
            by_mode = {}
            for p in pmd_rep.points:
                by_mode.setdefault(p.mode_id, []).append(p)
            for mode_id, pts in sorted(by_mode.items()):
                (plots / f"mode_{mode_id:02d}.svg").write_text(
                    modal_impedance_svg(result.trace(mode_id), pts))
        if gnc_rep is not None:
            (plots / "nyquist.svg").write_text(nyquist_svg(gnc_rep.loci))
    print(_summary(pmd_rep, gnc_rep, verdict))
    return exit_code(verdict)


def _summary(pmd_rep, gnc_rep, verdict) -> str:
    lines = []
    if pmd_rep is not None:
        lines.append(f"pmd: {pmd_rep.verdict}")
        lines.append(f"  {'mode':>4} {'f_peak':>9} {'f_x':>9} {'re_at_x':>11} {'k_x':>11}  verdict")
        for p in pmd_rep.points:
            fx = f"{p.f_x:9.2f}" if p.f_x is not None else f"{'-':>9}"
            re = f"{p.re_at_x:11.4g}" if p.re_at_x is not None else f"{'-':>11}"
            k = f"{p.k_x:11.4g}" if p.k_x is not None else f"{'-':>11}"
            lines.append(f"  {p.mode_id:>4} {p.f_peak:9.2f} {fx} {re} {k}  {p.verdict}")
    if gnc_rep is not None:
        lines.append(f"gnc: {gnc_rep.verdict} (clockwise encirclements {gnc_rep.total_clockwise}, "
                     f"per locus {[c for c in gnc_rep.counts if c]})")
    lines.append(f"verdict: {verdict}")
    return "\n".join(lines)


def run_param_sweep(cfg: AnalyzeConfig, path: str, values: Sequence[float]) -> str:
    """Stability map over one parameter; CSV ``value,verdict,f_unstable_hz``."""
    base, directives, _ = _load_model(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "verdict", "f_unstable_hz"])
    for v in values:
        model = apply_grouping(with_parameter(base, path, v), directives)
        _, pmd_rep, _, verdict = _evaluate(model, cfg)
        f_un = ""
        if pmd_rep is not None and pmd_rep.unstable_points:
            f_un = f"{min(p.f_peak for p in pmd_rep.unstable_points):.1f}"
        w.writerow([repr(float(v)), verdict, f_un])
    return buf.getvalue()


def _grid(args) -> FrequencyGrid:
    return FrequencyGrid(args.fmin, args.fmax, args.step, args.refine)


def _criteria(name: str) -> tuple:
    return ("pmd", "gnc") if name == "both" else (name,)


def _override(text: str):
    path, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected PATH=VALUE, got '{text}'")
    try:
        return path.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: '{value}'") from None


def _values(text: str) -> list:
    items = [t for t in text.replace(" ", "").split(",") if t]
    try:
        return [float(t) for t in items]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pmdstab", description=(
        "Small-signal stability of converter-dominated networks by modal impedance "
        "damping and the generalized Nyquist criterion."))
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, outputs=True):
        p.add_argument("network", type=Path, help="network file (JSON)")
        p.add_argument("--fmin", type=float, default=1.0, help="lowest frequency [Hz]")
        p.add_argument("--fmax", type=float, default=3000.0, help="highest frequency [Hz]")
        p.add_argument("--step", type=float, default=1.0, help="base frequency step [Hz]")
        p.add_argument("--refine", type=int, default=10,
                       help="step subdivision near resonances (1 disables)")
        p.add_argument("--criterion", choices=("pmd", "gnc", "both"), default="both")
        p.add_argument("--grouping", type=Path, help="grouping directive file (JSON)")
        p.add_argument("--set", dest="overrides", type=_override, action="append", default=[],
                       metavar="PATH=VALUE", help="override a numeric field, e.g. vsc2.q_d=0.5")

    p = sub.add_parser("analyze", help="assess stability and write report, CSV and plots")
    common(p)
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--csv", dest="csv", action="store_true", default=True,
                   help="write modes.csv / loci.csv (default)")
    p.add_argument("--no-csv", dest="csv", action="store_false")
    p.add_argument("--svg", dest="svg", action="store_true", default=True,
                   help="write SVG plots (default)")
    p.add_argument("--no-plots", dest="svg", action="store_false")

    p = sub.add_parser("param-sweep", help="stability map over one parameter")
    common(p)
    p.add_argument("--param", required=True, help="parameter path, e.g. vsc2.q_d")
    p.add_argument("--values", type=_values, required=True,
                   help="comma-separated values (may be empty)")
    p.add_argument("--out", type=Path, help="CSV file (default: stdout)")

    p = sub.add_parser("validate", help="parse and validate a network file")
    p.add_argument("network", type=Path)

    p = sub.add_parser("dump-yt", help="write Y_T per frequency as CSV")
    p.add_argument("network", type=Path)
    p.add_argument("--fmin", type=float, default=1.0)
    p.add_argument("--fmax", type=float, default=3000.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--grouping", type=Path)
    p.add_argument("--out", type=Path, help="CSV file (default: stdout)")
    return ap


def _config(args) -> AnalyzeConfig:
    return AnalyzeConfig(
        network=args.network,
        grid=_grid(args),
        criteria=_criteria(args.criterion),
        grouping=args.grouping,
        out=getattr(args, "out", None) or Path("out"),
        emit_csv=getattr(args, "csv", True),
        emit_svg=getattr(args, "svg", True),
        overrides=tuple(args.overrides),
    )


def _write(text: str, dest: Optional[Path]):
    if dest is None:
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text)


def _dispatch(args) -> int:
    if args.command == "analyze":
        return run_analyze(_config(args))
    if args.command == "param-sweep":
        cfg = _config(args)
        _write(run_param_sweep(cfg, args.param, args.values), args.out)
        return EXIT_STABLE
    if args.command == "validate":
        model = load_network(args.network)
        print(f"ok {len(model.buses)} buses, {len(model.elements)} elements, "
              f"fingerprint {fingerprint(model)}")
        return EXIT_STABLE
    if args.command == "dump-yt":
        model = load_network(args.network)
        if args.grouping is not None:
            model = apply_grouping(model, parse_grouping(Path(args.grouping).read_text()))
        freqs = FrequencyGrid(args.fmin, args.fmax, args.step).frequencies()
        _write(dump_yt_csv(assemble(model, 2j * np.pi * freqs), freqs), args.out)
        return EXIT_STABLE
    raise AssertionError(args.command)


def _fail(code: str, message: str) -> int:
    one_line = " ".join(str(message).split())
    print(f"pmdstab: error: {code}: {one_line}", file=sys.stderr)
    return EXIT_ERROR


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="pmdstab: %(levelname)s: %(message)s")
    try:
        return _dispatch(args)
    except ParameterPathError as exc:
        return _fail(exc.code or "cli.parameter_path", exc)
    except PmdStabError as exc:
        return _fail(exc.code or "error", exc)
    except FileNotFoundError as exc:
        return _fail("io.not_found", exc)
    except OSError as exc:
        return _fail("io.error", exc)
    except ValueError as exc:
        return _fail("cli.invalid_argument", exc)


if __name__ == "__main__":
    sys.exit(main())
