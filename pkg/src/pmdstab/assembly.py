"""Nodal admittance matrices by the voltage-node method.

Buses are laid out in declaration order, each as a (q, d) pair, so the
matrices are 2n x 2n.  Converters, grid equivalents, tabulated devices and
aggregated converters go to Y_S; every other element goes to Y_N.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import elements as el
from .errors import GroupingError
from .netmodel import (AggregatedConverter, GridEquivalent, MeasuredTable, NetworkModel,
                       PiCable, RlSeries, ShuntCap, Transformer, Vsc, element_buses)
from .vsc import aggregate_converter, vsc_admittance

log = logging.getLogger(__name__)

EXTERNAL = (Vsc, GridEquivalent, MeasuredTable, AggregatedConverter)


@dataclass
class SystemMatrices:
    y_n: np.ndarray
    y_s: np.ndarray
    bus_order: tuple
    s: np.ndarray

    @property
    def y_t(self) -> np.ndarray:
        return self.y_n + self.y_s

    @cached_property
    def z_n(self) -> np.ndarray:
        cond = np.linalg.cond(self.y_n)
        if np.any(cond > 1e12):
            log.warning("Y_N ill-conditioned (max condition number %.3g)", np.max(cond))
        return np.linalg.inv(self.y_n)


def shunt_admittance(element, omega1, s):
    """2x2 admittance of a one-port element (shape s.shape + (2, 2))."""
    if isinstance(element, ShuntCap):
        return el.shunt_cap_admittance(element.C, omega1, s)
    if isinstance(element, GridEquivalent):
        return el.rl_series_admittance(element.R, element.L, omega1, s, element.name)
    if isinstance(element, RlSeries):
        return el.rl_series_admittance(element.R, element.L, omega1, s, element.name)
    if isinstance(element, Vsc):
        return vsc_admittance(element.params, omega1, s, element.name)
    if isinstance(element, MeasuredTable):
        return el.measured_table_admittance(element.f_hz, element.y, s)
    if isinstance(element, AggregatedConverter):
        y_vsc = vsc_admittance(element.vsc.params, omega1, s, element.vsc.name)
        y_sh = el.shunt_cap_admittance(element.shunt.C, omega1, s)
        z_se = el.rl_series_impedance(element.series.R, element.series.L, omega1, s)
        return aggregate_converter(y_vsc, y_sh, z_se)
    raise TypeError(f"not a one-port element: {element!r}")


def _add(mat, i, j, block):
    mat[..., 2 * i:2 * i + 2, 2 * j:2 * j + 2] += block


def assemble(model: NetworkModel, s) -> SystemMatrices:
    """Y_N, Y_S for scalar or array ``s``; matrices have shape s.shape + (2n, 2n)."""
    s_arr = np.asarray(s, dtype=complex)
    n = len(model.buses)
    w1 = model.omega1
    y_n = np.zeros(s_arr.shape + (2 * n, 2 * n), dtype=complex)
    y_s = np.zeros_like(y_n)
    idx = {b: k for k, b in enumerate(model.buses)}

    def branch(a, b, y):
        i = idx[a]
        _add(y_n, i, i, y)
        if b is not None:
            j = idx[b]
            _add(y_n, j, j, y)
            _add(y_n, i, j, -y)
            _add(y_n, j, i, -y)

    for e in model.elements:
        if isinstance(e, PiCable):
            rl, c_a, c_b = el.pi_cable_expand(e)
            branch(rl.from_bus, rl.to_bus, el.rl_series_admittance(rl.R, rl.L, w1, s_arr, e.name))
            branch(c_a.bus, None, el.shunt_cap_admittance(c_a.C, w1, s_arr))
            branch(c_b.bus, None, el.shunt_cap_admittance(c_b.C, w1, s_arr))
        elif isinstance(e, (RlSeries, Transformer)):
            branch(e.from_bus, e.to_bus, el.rl_series_admittance(e.R, e.L, w1, s_arr, e.name))
        elif isinstance(e, ShuntCap):
            branch(e.bus, None, el.shunt_cap_admittance(e.C, w1, s_arr))
        elif isinstance(e, EXTERNAL):
            _add(y_s, idx[e.bus], idx[e.bus], shunt_admittance(e, w1, s_arr))
        else:
            raise TypeError(f"unknown element {e!r}")
    return SystemMatrices(y_n=y_n, y_s=y_s, bus_order=tuple(model.buses), s=s_arr)


# ------------------------------------------------------------------ grouping


@dataclass(frozen=True)
class GroupingDirective:
    """Merge ``vsc`` with its ``shunt`` filter and ``series`` branch.

    The three must share an interior bus that nothing else touches; that
    bus is eliminated and the aggregate lands on the far end of the
    series branch.
    """

    vsc: str
    shunt: str
    series: str
    name: Optional[str] = None


def parse_grouping(text: str) -> list:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GroupingError(f"grouping file syntax error at line {exc.lineno} "
                            f"column {exc.colno}: {exc.msg}", "parse.syntax") from exc
    if not isinstance(doc, dict) or set(doc) != {"groupings"} or not isinstance(
            doc["groupings"], list):
        raise GroupingError("grouping file must be {\"groupings\": [...]}")
    out = []
    for k, d in enumerate(doc["groupings"]):
        if not isinstance(d, dict) or not {"vsc", "shunt", "series"} <= set(d) or not set(
                d) <= {"vsc", "shunt", "series", "name"}:
            raise GroupingError(f"groupings[{k}]: need keys vsc, shunt, series (name optional)")
        out.append(GroupingDirective(d["vsc"], d["shunt"], d["series"], d.get("name")))
    return out


def _apply_one(model: NetworkModel, d: GroupingDirective) -> NetworkModel:
    try:
        vsc, shunt, series = (model.element(n) for n in (d.vsc, d.shunt, d.series))
    except KeyError as exc:
        raise GroupingError(f"grouping references unknown element {exc}") from None
    if not isinstance(vsc, Vsc) or not isinstance(shunt, ShuntCap) or not isinstance(
            series, (Transformer, RlSeries)) or series.to_bus is None:
        raise GroupingError(f"grouping {d}: expected a vsc, a shunt_cap and a two-bus "
                            "transformer/rl_series")
    interior = vsc.bus
    if shunt.bus != interior or interior not in (series.from_bus, series.to_bus):
        raise GroupingError(f"grouping {d}: elements do not meet at one interior bus")
    outer = series.to_bus if series.from_bus == interior else series.from_bus
    chosen = {vsc.name, shunt.name, series.name}
    others = [e for e in model.elements
              if e.name not in chosen and interior in element_buses(e)]
    if others:
        raise GroupingError(f"grouping {d}: bus '{interior}' also carries "
                            f"{[e.name for e in others]}")
    if interior in model.injections:
        raise GroupingError(f"grouping {d}: bus '{interior}' carries an injection")
    agg = AggregatedConverter(d.name or f"{vsc.name}_b", outer, vsc, shunt, series)
    elements = []
    for e in model.elements:
        if e.name == vsc.name:
            elements.append(agg)
        elif e.name not in chosen:
            elements.append(e)
    return dataclasses.replace(
        model,
        buses=tuple(b for b in model.buses if b != interior),
        elements=tuple(elements),
    )


def apply_grouping(model: NetworkModel, directives) -> NetworkModel:
    """Apply grouping directives in order; empty directives return ``model``."""
    for d in directives:
        model = _apply_one(model, d)
    return model


def eliminated_buses(model: NetworkModel, directives) -> list:
    out = []
    for d in directives:
        out.append(model.element(d.vsc).bus)
        model = _apply_one(model, d)
    return out


def kron_reduce(y, keep):
    """Schur complement of ``y`` onto the row/column indices ``keep``."""
    y = np.asarray(y)
    n = y.shape[-1]
    keep = np.asarray(keep)
    drop = np.setdiff1d(np.arange(n), keep)
    y_kk = y[..., keep[:, None], keep]
    y_kd = y[..., keep[:, None], drop]
    y_dk = y[..., drop[:, None], keep]
    y_dd = y[..., drop[:, None], drop]
    return y_kk - y_kd @ np.linalg.solve(y_dd, y_dk)


def kron_equivalence_error(model: NetworkModel, directives, s) -> np.ndarray:
    """Relative mismatch between grouped Y_T and the Kron-reduced ungrouped Y_T."""
    grouped = apply_grouping(model, directives)
    gone = set(eliminated_buses(model, directives))
    keep = [2 * k + c for k, b in enumerate(model.buses) if b not in gone for c in (0, 1)]
    y_full = assemble(model, s).y_t
    y_red = kron_reduce(y_full, keep)
    y_grp = assemble(grouped, s).y_t
    num = np.linalg.norm(y_grp - y_red, axis=(-2, -1))
    den = np.linalg.norm(y_red, axis=(-2, -1))
    return num / den


def dump_yt_csv(matrices: SystemMatrices, freqs_hz) -> str:
    """Y_T per frequency as CSV: f_hz then row-major re,im pairs."""
    y_t = matrices.y_t
    if y_t.ndim == 2:
        y_t = y_t[None]
    n = y_t.shape[-1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["f_hz"]
    for i in range(n):
        for j in range(n):
            header += [f"re_{i}_{j}", f"im_{i}_{j}"]
    w.writerow(header)
    for f, m in zip(np.atleast_1d(freqs_hz), y_t):
        row = [repr(float(f))]
        for z in m.ravel():
            row += [repr(float(z.real)), repr(float(z.imag))]
        w.writerow(row)
    return buf.getvalue()


def check_singular(matrices: SystemMatrices, threshold=1e12):
    """Indices of samples whose Y_T is numerically singular."""
    y_t = matrices.y_t
    cond = np.linalg.cond(y_t if y_t.ndim > 2 else y_t[None])
    return np.flatnonzero(~np.isfinite(cond) | (cond > threshold))

