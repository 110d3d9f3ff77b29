import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmdstab import cases
from pmdstab.assembly import (GroupingDirective, apply_grouping, assemble, check_singular,
                              dump_yt_csv, kron_equivalence_error, kron_reduce, parse_grouping)
from pmdstab.elements import rl_series_admittance, shunt_cap_admittance
from pmdstab.errors import GroupingError
from pmdstab.netmodel import AggregatedConverter, NetworkModel, RlSeries, ShuntCap
from pmdstab.vsc import vsc_admittance

W1 = 2 * math.pi * 50
S = 2j * math.pi * 1192


def blk(m, i, j):
    return m[..., 2 * i:2 * i + 2, 2 * j:2 * j + 2]


def test_single_shunt_cap():
    m = NetworkModel(50.0, ("a",), (ShuntCap("c", "a", 1e-4),), ("a",))
    sm = assemble(m, S)
    np.testing.assert_array_equal(sm.y_t, shunt_cap_admittance(1e-4, W1, S))
    np.testing.assert_array_equal(sm.y_s, 0)


def test_case1_stamps():
    m = cases.case1(q_d_vsc2=0.5)
    sm = assemble(m, S)
    y_tl = rl_series_admittance(cases.R_TL, cases.L_TL, W1, S)
    y_cc = shunt_cap_admittance(cases.C_C, W1, S)
    np.testing.assert_allclose(blk(sm.y_n, 0, 0), 2 * y_tl)
    np.testing.assert_allclose(blk(sm.y_n, 0, 1), -y_tl)
    np.testing.assert_allclose(blk(sm.y_n, 0, 2), -y_tl)
    np.testing.assert_allclose(blk(sm.y_n, 1, 1), y_tl + y_cc)
    np.testing.assert_array_equal(blk(sm.y_n, 1, 2), 0)
    y_g = rl_series_admittance(0.001, 0.05e-3, W1, S)
    y_s_ref = np.zeros((6, 6), complex)
    y_s_ref[0:2, 0:2] = y_g
    y_s_ref[2:4, 2:4] = vsc_admittance(cases.table_vsc(0.25), W1, S)
    y_s_ref[4:6, 4:6] = vsc_admittance(cases.table_vsc(0.5), W1, S)
    np.testing.assert_allclose(sm.y_s, y_s_ref, rtol=1e-14)
    np.testing.assert_array_equal(sm.y_t, sm.y_n + sm.y_s)


def test_case2a_pattern():
    m = cases.case2a()
    sm = assemble(m, S)
    cl = m.element("cl1")
    y_rl = rl_series_admittance(cl.R, cl.L, W1, S)
    y_half = shunt_cap_admittance(cl.C_total / 2, W1, S)
    y_tl = rl_series_admittance(cases.R_TL, cases.L_TL, W1, S)
    # b2 sees two cables, two cable-end halves and the transformer
    np.testing.assert_allclose(blk(sm.y_n, 1, 1), 2 * y_rl + 2 * y_half + y_tl)
    np.testing.assert_allclose(blk(sm.y_n, 1, 2), -y_tl)
    np.testing.assert_allclose(blk(sm.y_n, 1, 3), -y_rl)
    nz = [(i, j) for i in range(7) for j in range(7) if np.any(blk(sm.y_n, i, j) != 0)]
    expected = {(i, i) for i in range(7)} | {(0, 1), (1, 3), (3, 5), (1, 2), (3, 4), (5, 6)}
    expected |= {(j, i) for i, j in expected}
    assert set(nz) == expected


@pytest.mark.parametrize("model", [cases.case1(), cases.case2a(), cases.passive_feeder()])
def test_structure_invariants(model):
    sm = assemble(model, 2j * np.pi * np.array([13.0, 777.0]))
    n = len(model.buses)
    for i in range(n):
        for j in range(n):
            if i != j:
                np.testing.assert_array_equal(blk(sm.y_s, i, j), 0)
                np.testing.assert_array_equal(blk(sm.y_n, i, j), blk(sm.y_n, j, i))


def test_floating_branch_singular_detected():
    m = NetworkModel(50.0, ("a", "b"), (RlSeries("r", "a", "b", 0.1, 1e-3),), ("a",))
    sm = assemble(m, 2j * np.pi * np.array([10.0, 100.0]))
    assert list(check_singular(sm)) == [0, 1]


def test_empty_grouping_identity():
    m = cases.case1()
    assert apply_grouping(m, []) is m


def test_case1_go2_structure():
    m = apply_grouping(cases.case1(q_d_vsc2=0.5), cases.CASE1_GROUPINGS["GO2"])
    assert m.buses == ("b1", "b2")
    agg = [e for e in m.elements if isinstance(e, AggregatedConverter)]
    assert len(agg) == 1 and agg[0].bus == "b1"
    sm = assemble(m, S)
    y_tl = rl_series_admittance(cases.R_TL, cases.L_TL, W1, S)
    np.testing.assert_allclose(blk(sm.y_n, 0, 0), y_tl)
    np.testing.assert_allclose(blk(sm.y_n, 0, 1), -y_tl)
    assert np.any(blk(sm.y_s, 0, 0) != 0) and np.any(blk(sm.y_s, 1, 1) != 0)


def test_case2b_go2_order_drop():
    m = cases.case2b()
    g = apply_grouping(m, cases.CASE2B_GROUPINGS["GO2"])
    assert assemble(m, S).y_t.shape == (30, 30)
    assert assemble(g, S).y_t.shape == (28, 28)


@pytest.mark.parametrize("directive, match", [
    (GroupingDirective("vsc2", "cc2", "nope"), "unknown element"),
    (GroupingDirective("cc2", "cc2", "tl2"), "expected a vsc"),
    (GroupingDirective("vsc2", "cc1", "tl2"), "interior bus"),
    (GroupingDirective("vsc2", "cc2", "tl1"), "interior bus"),
])
def test_grouping_errors(directive, match):
    with pytest.raises(GroupingError, match=match):
        apply_grouping(cases.case1(), [directive])


def test_grouping_rejects_shared_bus():
    m = cases.case1()
    m = NetworkModel(m.base_frequency_hz, m.buses, m.elements + (ShuntCap("x", "b3", 1e-6),),
                     m.injections)
    with pytest.raises(GroupingError, match="also carries"):
        apply_grouping(m, cases.CASE1_GROUPINGS["GO2"])


def test_parse_grouping_files(networks_dir):
    d = parse_grouping((networks_dir / "case1_go2.json").read_text())
    assert d == cases.CASE1_GROUPINGS["GO2"]
    with pytest.raises(GroupingError):
        parse_grouping('{"groupings": [{"vsc": "v"}]}')
    with pytest.raises(GroupingError):
        parse_grouping("[")


@pytest.mark.parametrize("builder, go", [
    (lambda: cases.case1(q_d_vsc2=0.5), cases.CASE1_GROUPINGS["GO2"]),
    (lambda: cases.case1(q_d_vsc2=0.5), cases.CASE1_GROUPINGS["GO3"]),
    (cases.case2b, cases.CASE2B_GROUPINGS["GO2"]),
])
def test_kron_equivalence(builder, go):
    f = np.linspace(1, 3000, 97)
    err = kron_equivalence_error(builder(), go, 2j * np.pi * f)
    assert err.max() <= 1e-10


@given(seed=st.integers(0, 2**32 - 1))
def test_kron_reduce_matches_block_inverse(seed):
    """Schur complement equals the inverse of the kept block of the inverse."""
    rng = np.random.default_rng(seed)
    y = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)) + 6 * np.eye(6)
    keep = [0, 1, 4, 5]
    red = kron_reduce(y, keep)
    np.testing.assert_allclose(np.linalg.inv(np.linalg.inv(y)[np.ix_(keep, keep)]), red,
                               rtol=1e-9, atol=1e-12)


def test_dump_yt_csv_layout():
    m = cases.single_bus()
    f = np.array([10.0, 20.0])
    sm = assemble(m, 2j * np.pi * f)
    lines = dump_yt_csv(sm, f).splitlines()
    assert lines[0] == "f_hz,re_0_0,im_0_0,re_0_1,im_0_1,re_1_0,im_1_0,re_1_1,im_1_1"
    vals = [float(x) for x in lines[2].split(",")]
    assert vals[0] == 20.0
    assert complex(vals[3], vals[4]) == sm.y_t[1, 0, 1]


def test_z_n_inverse():
    sm = assemble(cases.passive_feeder(), 2j * np.pi * 333.0)
    np.testing.assert_allclose(sm.z_n @ sm.y_n, np.eye(8), atol=1e-10)
