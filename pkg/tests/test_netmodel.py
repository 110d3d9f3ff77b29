import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmdstab import cases
from pmdstab.errors import NetworkParseError, NetworkValidationError, ParameterPathError
from pmdstab.netmodel import (AggregatedConverter, GridEquivalent, MeasuredTable, NetworkModel,
                              ShuntCap, Transformer, Vsc, fingerprint, load_network,
                              network_to_dict, parse_network, serialize_network, validate,
                              with_parameter)

MINIMAL = {
    "f_base_hz": 50,
    "buses": ["b1"],
    "elements": [{"kind": "grid_equivalent", "name": "g", "bus": "b1", "R": 0.01, "L": 1e-4}],
    "injections": ["b1"],
}


def doc(**changes):
    d = json.loads(json.dumps(MINIMAL))
    d.update(changes)
    return json.dumps(d)


def test_minimal_document():
    m = parse_network(json.dumps(MINIMAL))
    assert m.buses == ("b1",)
    assert len(m.elements) == 1
    assert isinstance(m.elements[0], GridEquivalent)
    assert m.omega1 == pytest.approx(2 * 3.141592653589793 * 50)


def test_case1_document_shape(networks_dir):
    m = load_network(networks_dir / "case1.json")
    assert len(m.buses) == 3
    assert len(m.elements) == 7
    kinds = sorted(type(e).__name__ for e in m.elements)
    assert kinds == ["GridEquivalent", "ShuntCap", "ShuntCap", "Transformer", "Transformer",
                     "Vsc", "Vsc"]


def test_unknown_bus_rejected():
    text = doc(elements=[{"kind": "shunt_cap", "name": "c", "bus": "b9", "C": 1e-6}])
    with pytest.raises(NetworkParseError, match="unknown bus") as exc:
        parse_network(text)
    assert exc.value.code == "parse.unknown_bus"


@pytest.mark.parametrize("text, code", [
    ("{", "parse.syntax"),
    (doc(elements=[{"kind": "flux_capacitor", "name": "x", "bus": "b1"}]), "parse.unknown_kind"),
    (doc(elements=[{"kind": "shunt_cap", "name": "x", "bus": "b1"}]), "parse.missing_field"),
    (doc(elements=[{"kind": "shunt_cap", "name": "x", "bus": "b1", "C": -1e-6}]),
     "parse.negative_value"),
    (doc(extra=1), "parse.unknown_key"),
])
def test_parse_error_codes(text, code):
    with pytest.raises(NetworkParseError) as exc:
        parse_network(text)
    assert exc.value.code == code


def test_syntax_error_reports_position():
    with pytest.raises(NetworkParseError, match="line 1 column"):
        parse_network('{"f_base_hz": }')


def test_validate_case1_clean():
    assert validate(cases.case1()) == []


def test_validate_negative_capacitance():
    m = cases.case1()
    bad = NetworkModel(m.base_frequency_hz, m.buses,
                       m.elements + (ShuntCap("cneg", "b1", -1e-6),), m.injections)
    v = validate(bad)
    assert [x.code for x in v] == ["negative_value"]
    assert v[0].element == "cneg" and "capacitance" in v[0].message


def test_validate_no_injection():
    m = cases.case1()
    v = validate(NetworkModel(m.base_frequency_hz, m.buses, m.elements, ()))
    assert [x.code for x in v] == ["no_injection"]


def test_validate_same_bus_branch_and_duplicates():
    m = NetworkModel(50.0, ("a", "a"), (Transformer("t", "a", "a", 1.0, 1e-3),
                                        Transformer("t", "a", "a", 1.0, 1e-3)), ("a",))
    codes = {x.code for x in validate(m)}
    assert {"duplicate_bus", "duplicate_name", "same_bus"} <= codes


@pytest.mark.parametrize("name", ["case1.json", "case2a.json", "case2b_ieee14_approx.json",
                                  "passive_feeder.json", "single_bus.json"])
def test_shipped_roundtrip(networks_dir, name):
    m = load_network(networks_dir / name)
    again = parse_network(serialize_network(m))
    assert again == m
    assert fingerprint(again) == fingerprint(m)
    assert validate(m) == []
    assert m.description


@pytest.mark.parametrize("name, builder", [
    ("case1.json", cases.case1), ("case2a.json", cases.case2a),
    ("case2b_ieee14_approx.json", cases.case2b), ("passive_feeder.json", cases.passive_feeder),
    ("single_bus.json", cases.single_bus),
])
def test_shipped_files_match_builders(networks_dir, name, builder):
    assert load_network(networks_dir / name) == builder()


def test_description_ignored_by_fingerprint():
    m = cases.case1()
    d = network_to_dict(m)
    d["description"] = "something else"
    assert fingerprint(parse_network(json.dumps(d))) == fingerprint(m)


def test_measured_table_and_aggregate_roundtrip():
    p = cases.table_vsc()
    m = NetworkModel(50.0, ("a", "b"), (
        GridEquivalent("g", "a", 0.01, 1e-4),
        Transformer("t", "a", "b", 0.01, 1e-4),
        MeasuredTable("meas", "b", (1.0, 10.0), ((1 + 1j, 0, 0, 1 - 1j), (2, 0.5j, -0.5j, 2))),
        AggregatedConverter("agg", "a", Vsc("v", "x", p), ShuntCap("c", "x", 1e-4),
                            Transformer("tr", "x", "a", 0.01, 1e-4)),
    ), ("a",))
    assert validate(m) == []
    assert parse_network(serialize_network(m)) == m


def test_with_parameter_paths():
    m = cases.case1()
    m2 = with_parameter(m, "vsc2.q_d", 0.5)
    assert m2.element("vsc2").params.q_d == 0.5
    assert m.element("vsc2").params.q_d == 0.25
    assert with_parameter(m, "vsc1.v0_q", 400.0).element("vsc1").params.operating_point.v0_q == 400
    assert with_parameter(m, "cc1.C", 1e-4).element("cc1").C == 1e-4
    assert with_parameter(m, "f_base_hz", 60).base_frequency_hz == 60


@pytest.mark.parametrize("path", ["nope.q_d", "vsc2.bogus", "vsc2", "cc1.R"])
def test_with_parameter_bad_path(path):
    with pytest.raises(ParameterPathError):
        with_parameter(cases.case1(), path, 1.0)


def test_with_parameter_rejects_invalid_value():
    with pytest.raises(NetworkValidationError):
        with_parameter(cases.case1(), "cc1.C", -1.0)


@given(q=st.floats(0, 1), r=st.floats(0, 10), c=st.floats(0, 1e-2), v=st.floats(-1e3, 1e3))
def test_roundtrip_property(q, r, c, v):
    m = with_parameter(cases.case1(), "vsc2.q_d", q)
    m = with_parameter(m, "tl1.R", r)
    m = with_parameter(m, "cc2.C", c)
    m = with_parameter(m, "vsc1.v0_d", v)
    again = parse_network(serialize_network(m))
    assert again == m
    assert validate(again) == []
