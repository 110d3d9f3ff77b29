"""Declarative network description: types, JSON schema, validation.

A network file is a JSON object with exactly the keys ``f_base_hz``,
``buses``, ``elements`` and ``injections``.  Every numeric field is in SI
units (ohm, henry, farad, second, volt, ampere, radian).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .errors import NetworkParseError, NetworkValidationError, ParameterPathError

# 690 V line-to-line rms expressed as a phase peak value.
DEFAULT_V_PEAK = 690.0 * math.sqrt(2.0 / 3.0)


@dataclass(frozen=True)
class OperatingPoint:
    """Linearisation point of a converter, in its local dq frame."""

    v0_q: float = DEFAULT_V_PEAK
    v0_d: float = 0.0
    ic0_q: float = 0.0
    ic0_d: float = 0.0
    theta0: float = 0.0


@dataclass(frozen=True)
class VscParams:
    kp_pll: float
    ki_pll: float
    kp_ol: float
    ki_ol: float
    kp_il: float
    ki_il: float
    tau_ffv: float
    tau_sw: float
    q_d: float
    R_c: float
    L_c: float
    # reactive-power loop overrides; None means "same as kp_ol/ki_ol"
    kp_olq: Optional[float] = None
    ki_olq: Optional[float] = None
    # gain on the voltage feed-forward path and on the wL cross-decoupling
    k_ffv: float = 1.0
    k_dec: float = 1.0
    operating_point: OperatingPoint = field(default_factory=OperatingPoint)

    @property
    def tau_fd(self) -> float:
        return self.q_d * self.tau_sw

    @property
    def olq_gains(self) -> tuple[float, float]:
        kp = self.kp_ol if self.kp_olq is None else self.kp_olq
        ki = self.ki_ol if self.ki_olq is None else self.ki_olq
        return kp, ki


@dataclass(frozen=True)
class RlSeries:
    name: str
    from_bus: str
    to_bus: Optional[str]  # None = ground
    R: float
    L: float


@dataclass(frozen=True)
class ShuntCap:
    name: str
    bus: str
    C: float


@dataclass(frozen=True)
class PiCable:
    name: str
    from_bus: str
    to_bus: str
    R: float
    L: float
    C_total: float


@dataclass(frozen=True)
class Transformer:
    name: str
    from_bus: str
    to_bus: str
    R: float
    L: float


@dataclass(frozen=True)
class GridEquivalent:
    name: str
    bus: str
    R: float
    L: float


@dataclass(frozen=True)
class Vsc:
    name: str
    bus: str
    params: VscParams


@dataclass(frozen=True)
class MeasuredTable:
    """Tabulated 2x2 admittance, linearly interpolated in frequency.

    ``y`` holds one row per frequency: (qq, qd, dq, dd) as complex numbers.
    """

    name: str
    bus: str
    f_hz: tuple
    y: tuple


@dataclass(frozen=True)
class AggregatedConverter:
    """A converter merged with its shunt filter and series branch."""

    name: str
    bus: str
    vsc: Vsc
    shunt: ShuntCap
    series: Union[Transformer, RlSeries]


Element = Union[RlSeries, ShuntCap, PiCable, Transformer, GridEquivalent, Vsc,
                MeasuredTable, AggregatedConverter]

KINDS = {
    "rl_series": RlSeries,
    "shunt_cap": ShuntCap,
    "pi_cable": PiCable,
    "transformer": Transformer,
    "grid_equivalent": GridEquivalent,
    "vsc": Vsc,
    "measured_table": MeasuredTable,
    "aggregated_converter": AggregatedConverter,
}
KIND_OF = {cls: kind for kind, cls in KINDS.items()}


@dataclass(frozen=True)
class NetworkModel:
    base_frequency_hz: float
    buses: tuple
    elements: tuple
    injections: tuple
    description: str = field(default="", compare=False)

    @property
    def omega1(self) -> float:
        return 2.0 * math.pi * self.base_frequency_hz

    def bus_index(self, bus: str) -> int:
        return self.buses.index(bus)

    def element(self, name: str) -> Element:
        for el in self.elements:
            if el.name == name:
                return el
        raise KeyError(name)


def element_buses(el: Element) -> list:
    if isinstance(el, (RlSeries, PiCable, Transformer)):
        return [b for b in (el.from_bus, el.to_bus) if b is not None]
    return [el.bus]


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    element: Optional[str]
    field: str
    code: str
    message: str

    def __str__(self):
        where = self.element if self.element is not None else "<network>"
        return f"{where}.{self.field}: {self.message}"


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def _check_vsc_params(name, p: VscParams, out: list):
    for f in dataclasses.fields(p):
        if f.name == "operating_point":
            continue
        v = getattr(p, f.name)
        if v is None:
            continue
        if not _finite(v):
            out.append(Violation(name, f.name, "nonfinite", f"{f.name} must be finite"))
    for f in dataclasses.fields(p.operating_point):
        v = getattr(p.operating_point, f.name)
        if not _finite(v):
            out.append(Violation(name, f"operating_point.{f.name}", "nonfinite",
                                 f"{f.name} must be finite"))
    if _finite(p.kp_il) and p.kp_il <= 0:
        out.append(Violation(name, "kp_il", "vsc_gain", "kp_il must be > 0"))
    if _finite(p.ki_il) and p.ki_il <= 0:
        out.append(Violation(name, "ki_il", "vsc_gain", "ki_il must be > 0"))
    for fname in ("tau_ffv", "tau_sw", "q_d", "R_c", "L_c"):
        v = getattr(p, fname)
        if _finite(v) and v < 0:
            out.append(Violation(name, fname, "negative_value", f"{fname} must be >= 0"))


def _check_element(el, buses: set, out: list):
    name = el.name
    for b in element_buses(el):
        if b not in buses:
            out.append(Violation(name, "bus", "unknown_bus", f"unknown bus '{b}'"))
    if isinstance(el, (RlSeries, Transformer, PiCable)) and el.from_bus == el.to_bus:
        out.append(Violation(name, "to", "same_bus", "branch must connect two distinct buses"))
    for fname, label in (("R", "resistance"), ("L", "inductance"),
                         ("C", "capacitance"), ("C_total", "capacitance")):
        if hasattr(el, fname):
            v = getattr(el, fname)
            if not _finite(v):
                out.append(Violation(name, fname, "nonfinite", f"{fname} must be finite"))
            elif v < 0:
                out.append(Violation(name, fname, "negative_value", f"negative {label} {v!r}"))
    if isinstance(el, Vsc):
        _check_vsc_params(name, el.params, out)
    if isinstance(el, MeasuredTable):
        if len(el.f_hz) < 2 or len(el.f_hz) != len(el.y):
            out.append(Violation(name, "y", "measured_table",
                                 "need >= 2 rows and one row per frequency"))
        elif any(b <= a for a, b in zip(el.f_hz, el.f_hz[1:])):
            out.append(Violation(name, "f_hz", "measured_table", "frequencies must increase"))
    if isinstance(el, AggregatedConverter):
        for sub in (el.vsc, el.shunt, el.series):
            _check_element(sub, buses | {el.bus} | set(element_buses(sub)), out)


def validate(model: NetworkModel) -> list:
    """Return every invariant violation; an empty list means valid."""
    out: list = []
    if not _finite(model.base_frequency_hz) or model.base_frequency_hz <= 0:
        out.append(Violation(None, "f_base_hz", "base_frequency", "base frequency must be > 0"))
    buses = set(model.buses)
    if len(buses) != len(model.buses):
        out.append(Violation(None, "buses", "duplicate_bus", "duplicate bus id"))
    names = [el.name for el in model.elements]
    if len(set(names)) != len(names):
        out.append(Violation(None, "elements", "duplicate_name", "duplicate element name"))
    for el in model.elements:
        _check_element(el, buses, out)
    if not model.injections:
        out.append(Violation(None, "injections", "no_injection",
                             "at least one bus must carry a Norton injection"))
    for b in model.injections:
        if b not in buses:
            out.append(Violation(None, "injections", "unknown_bus", f"unknown bus '{b}'"))
    return out


# ------------------------------------------------------------------- parsing

_ELEMENT_FIELDS = {
    # kind: (required, optional) json keys besides kind/name
    "rl_series": (("from", "R", "L"), ("to",)),
    "shunt_cap": (("bus", "C"), ()),
    "pi_cable": (("from", "to", "R", "L", "C_total"), ()),
    "transformer": (("from", "to", "R", "L"), ()),
    "grid_equivalent": (("bus", "R", "L"), ()),
    "vsc": (("bus", "params"), ()),
    "measured_table": (("bus", "f_hz", "y"), ()),
    "aggregated_converter": (("bus", "vsc", "shunt", "series"), ()),
}
_VSC_REQUIRED = ("kp_pll", "ki_pll", "kp_ol", "ki_ol", "kp_il", "ki_il",
                 "tau_ffv", "tau_sw", "q_d", "R_c", "L_c")
_VSC_OPTIONAL = ("kp_olq", "ki_olq", "k_ffv", "k_dec", "operating_point")
_OP_KEYS = tuple(f.name for f in dataclasses.fields(OperatingPoint))


def _keys(obj, required, optional, where):
    if not isinstance(obj, dict):
        raise NetworkParseError(f"{where}: expected an object", "parse.type")
    for k in obj:
        if k not in required and k not in optional:
            raise NetworkParseError(f"{where}: unknown key '{k}'", "parse.unknown_key")
    for k in required:
        if k not in obj:
            raise NetworkParseError(f"{where}: missing required field '{k}'",
                                    "parse.missing_field")


def _num(obj, key, where):
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise NetworkParseError(f"{where}: field '{key}' must be a number", "parse.type")
    return float(v)


def _str(obj, key, where):
    v = obj[key]
    if not isinstance(v, str):
        raise NetworkParseError(f"{where}: field '{key}' must be a string", "parse.type")
    return v


def _parse_params(obj, where) -> VscParams:
    _keys(obj, _VSC_REQUIRED, _VSC_OPTIONAL, where)
    kw = {k: _num(obj, k, where) for k in _VSC_REQUIRED}
    for k in ("kp_olq", "ki_olq", "k_ffv", "k_dec"):
        if k in obj:
            kw[k] = _num(obj, k, where)
    if "operating_point" in obj:
        op = obj["operating_point"]
        _keys(op, (), _OP_KEYS, where + ".operating_point")
        kw["operating_point"] = OperatingPoint(
            **{k: _num(op, k, where + ".operating_point") for k in op})
    return VscParams(**kw)


def _parse_table(obj, where):
    f = obj["f_hz"]
    rows = obj["y"]
    if not isinstance(f, list) or not isinstance(rows, list):
        raise NetworkParseError(f"{where}: f_hz and y must be arrays", "parse.type")
    f_hz = tuple(float(x) for x in f)
    y = []
    for r in rows:
        if not isinstance(r, list) or len(r) != 8:
            raise NetworkParseError(f"{where}: each y row needs 8 numbers "
                                    "(qq, qd, dq, dd as re, im pairs)", "parse.type")
        y.append(tuple(complex(float(r[2 * k]), float(r[2 * k + 1])) for k in range(4)))
    return f_hz, tuple(y)


def _parse_element(obj, index, where=None) -> Element:
    where = where or f"elements[{index}]"
    if not isinstance(obj, dict):
        raise NetworkParseError(f"{where}: expected an object", "parse.type")
    if "kind" not in obj:
        raise NetworkParseError(f"{where}: missing required field 'kind'", "parse.missing_field")
    kind = obj["kind"]
    if kind not in _ELEMENT_FIELDS:
        raise NetworkParseError(f"{where}: unknown element kind '{kind}'", "parse.unknown_kind")
    required, optional = _ELEMENT_FIELDS[kind]
    _keys(obj, ("kind",) + required, ("name",) + optional, where)
    name = _str(obj, "name", where) if "name" in obj else f"{kind}{index}"
    if kind == "rl_series":
        to = obj.get("to")
        if to is not None and not isinstance(to, str):
            raise NetworkParseError(f"{where}: field 'to' must be a string or null", "parse.type")
        if to == "ground":
            to = None
        return RlSeries(name, _str(obj, "from", where), to,
                        _num(obj, "R", where), _num(obj, "L", where))
    if kind == "shunt_cap":
        return ShuntCap(name, _str(obj, "bus", where), _num(obj, "C", where))
    if kind == "pi_cable":
        return PiCable(name, _str(obj, "from", where), _str(obj, "to", where),
                       _num(obj, "R", where), _num(obj, "L", where), _num(obj, "C_total", where))
    if kind == "transformer":
        return Transformer(name, _str(obj, "from", where), _str(obj, "to", where),
                           _num(obj, "R", where), _num(obj, "L", where))
    if kind == "grid_equivalent":
        return GridEquivalent(name, _str(obj, "bus", where),
                              _num(obj, "R", where), _num(obj, "L", where))
    if kind == "vsc":
        return Vsc(name, _str(obj, "bus", where), _parse_params(obj["params"], where + ".params"))
    if kind == "measured_table":
        f_hz, y = _parse_table(obj, where)
        return MeasuredTable(name, _str(obj, "bus", where), f_hz, y)
    # aggregated_converter
    parts = [_parse_element(obj[k], index, f"{where}.{k}") for k in ("vsc", "shunt", "series")]
    if not (isinstance(parts[0], Vsc) and isinstance(parts[1], ShuntCap)
            and isinstance(parts[2], (Transformer, RlSeries))):
        raise NetworkParseError(f"{where}: aggregated_converter needs vsc, shunt_cap and "
                                "transformer/rl_series parts", "parse.type")
    return AggregatedConverter(name, _str(obj, "bus", where), *parts)


def network_from_dict(doc) -> NetworkModel:
    _keys(doc, ("f_base_hz", "buses", "elements", "injections"), ("description",), "network")
    if not isinstance(doc.get("description", ""), str):
        raise NetworkParseError("network: 'description' must be a string", "parse.type")
    for k in ("buses", "elements", "injections"):
        if not isinstance(doc[k], list):
            raise NetworkParseError(f"network: '{k}' must be an array", "parse.type")
    for k in ("buses", "injections"):
        if not all(isinstance(b, str) for b in doc[k]):
            raise NetworkParseError(f"network: '{k}' must hold string ids", "parse.type")
    model = NetworkModel(
        base_frequency_hz=_num(doc, "f_base_hz", "network"),
        buses=tuple(doc["buses"]),
        elements=tuple(_parse_element(e, i) for i, e in enumerate(doc["elements"])),
        injections=tuple(doc["injections"]),
        description=doc.get("description", ""),
    )
    violations = validate(model)
    if violations:
        v = violations[0]
        err = NetworkParseError(str(v), f"parse.{v.code}")
        err.violations = violations
        raise err
    return model


def parse_network(text: str) -> NetworkModel:
    """Parse a JSON network document; raises NetworkParseError on any defect."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkParseError(
            f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}",
            "parse.syntax") from exc
    return network_from_dict(doc)


def load_network(path) -> NetworkModel:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise NetworkParseError(f"no such file: {path}", "io.not_found") from exc
    return parse_network(text)


# ------------------------------------------------------------- serialisation


def _params_to_dict(p: VscParams) -> dict:
    d = {k: getattr(p, k) for k in _VSC_REQUIRED}
    for k in ("kp_olq", "ki_olq"):
        if getattr(p, k) is not None:
            d[k] = getattr(p, k)
    d["k_ffv"] = p.k_ffv
    d["k_dec"] = p.k_dec
    d["operating_point"] = dataclasses.asdict(p.operating_point)
    return d


def element_to_dict(el: Element) -> dict:
    kind = KIND_OF[type(el)]
    d = {"kind": kind, "name": el.name}
    if isinstance(el, RlSeries):
        d.update({"from": el.from_bus, "to": el.to_bus, "R": el.R, "L": el.L})
    elif isinstance(el, ShuntCap):
        d.update({"bus": el.bus, "C": el.C})
    elif isinstance(el, PiCable):
        d.update({"from": el.from_bus, "to": el.to_bus, "R": el.R, "L": el.L,
                  "C_total": el.C_total})
    elif isinstance(el, Transformer):
        d.update({"from": el.from_bus, "to": el.to_bus, "R": el.R, "L": el.L})
    elif isinstance(el, GridEquivalent):
        d.update({"bus": el.bus, "R": el.R, "L": el.L})
    elif isinstance(el, Vsc):
        d.update({"bus": el.bus, "params": _params_to_dict(el.params)})
    elif isinstance(el, MeasuredTable):
        d.update({"bus": el.bus, "f_hz": list(el.f_hz),
                  "y": [[c for z in row for c in (z.real, z.imag)] for row in el.y]})
    elif isinstance(el, AggregatedConverter):
        d.update({"bus": el.bus, "vsc": element_to_dict(el.vsc),
                  "shunt": element_to_dict(el.shunt), "series": element_to_dict(el.series)})
    return d


def network_to_dict(model: NetworkModel, with_description: bool = True) -> dict:
    d = {
        "f_base_hz": model.base_frequency_hz,
        "buses": list(model.buses),
        "elements": [element_to_dict(el) for el in model.elements],
        "injections": list(model.injections),
    }
    if with_description and model.description:
        d["description"] = model.description
    return d


def serialize_network(model: NetworkModel) -> str:
    return json.dumps(network_to_dict(model), indent=2)


def fingerprint(model: NetworkModel) -> str:
    canon = json.dumps(network_to_dict(model, with_description=False), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# ------------------------------------------------------- parameter addressing


def with_parameter(model: NetworkModel, path: str, value: float) -> NetworkModel:
    """Return a copy of ``model`` with one numeric field replaced.

    ``path`` is ``<element>.<field>``; for converters the field may live on
    the params or the operating point (``vsc2.q_d``, ``vsc2.v0_q``), and
    ``f_base_hz`` addresses the base frequency.
    """
    if path == "f_base_hz":
        return dataclasses.replace(model, base_frequency_hz=float(value))
    name, _, fname = path.partition(".")
    if not fname:
        raise ParameterPathError(f"unknown parameter path '{path}'")
    try:
        el = model.element(name)
    except KeyError:
        raise ParameterPathError(f"unknown parameter path '{path}': no element '{name}'")
    fname = fname.removeprefix("params.").removeprefix("operating_point.")
    if isinstance(el, Vsc):
        p = el.params
        if fname in {f.name for f in dataclasses.fields(p)} and fname != "operating_point":
            new = dataclasses.replace(el, params=dataclasses.replace(p, **{fname: float(value)}))
        elif fname in _OP_KEYS:
            op = dataclasses.replace(p.operating_point, **{fname: float(value)})
            new = dataclasses.replace(el, params=dataclasses.replace(p, operating_point=op))
        else:
            raise ParameterPathError(f"unknown parameter path '{path}'")
    elif fname in ("R", "L", "C", "C_total") and hasattr(el, fname):
        new = dataclasses.replace(el, **{fname: float(value)})
    else:
        raise ParameterPathError(f"unknown parameter path '{path}'")
    elements = tuple(new if e is el else e for e in model.elements)
    out = dataclasses.replace(model, elements=elements)
    bad = validate(out)
    if bad:
        raise NetworkValidationError(bad)
    return out
