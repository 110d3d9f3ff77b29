"""Builders for the reference networks shipped under ``networks/``.

Component values follow the 690 V test systems with a 2 kHz switching
converter.  The grid-equivalent impedance and, for the 15-bus system, the
ohmic scaling of the per-unit line data are chosen here (they are not part
of the published data); see the README for the rationale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .assembly import GroupingDirective
from .netmodel import (GridEquivalent, NetworkModel, PiCable, RlSeries, ShuntCap, Transformer,
                       Vsc, VscParams)

F_BASE = 50.0
W1 = 2 * math.pi * F_BASE

# converter filter, transformer and cable data
R_C, L_C, C_C = 0.0112, 0.358e-3, 141.471e-6
R_TL, L_TL = 0.00557, 0.184e-3
R_CL, L_CL, C_CL = 9.773e-4, 0.00182e-3, 82.28e-6  # per km; C_CL per line end


def table_vsc(q_d: float = 0.25) -> VscParams:
    return VscParams(kp_pll=0.0163, ki_pll=0.326, kp_ol=4.0825e-6, ki_ol=0.00408,
                     kp_il=0.358, ki_il=11.25, tau_ffv=0.010, tau_sw=5e-4, q_d=q_d,
                     R_c=R_C, L_c=L_C)


@dataclass(frozen=True)
class GridConfig:
    R: float = 0.001
    L: float = 0.05e-3


def case1(q_d_vsc2: float = 0.25, q_d_vsc1: float = 0.25,
          grid: GridConfig = GridConfig()) -> NetworkModel:
    """Three buses: grid at b1, two converters behind transformers at b2, b3."""
    return NetworkModel(F_BASE, ("b1", "b2", "b3"), (
        GridEquivalent("g", "b1", grid.R, grid.L),
        Transformer("tl1", "b1", "b2", R_TL, L_TL),
        Transformer("tl2", "b1", "b3", R_TL, L_TL),
        ShuntCap("cc1", "b2", C_C),
        ShuntCap("cc2", "b3", C_C),
        Vsc("vsc1", "b2", table_vsc(q_d_vsc1)),
        Vsc("vsc2", "b3", table_vsc(q_d_vsc2)),
    ), ("b1",), description=(
        "Two converters behind transformers on a stiff grid. The grid equivalent "
        f"(R={grid.R} ohm, L={grid.L} H) is an assumed value."))


CASE1_GROUPINGS = {
    "GO1": [],
    "GO2": [GroupingDirective("vsc2", "cc2", "tl2")],
    "GO3": [GroupingDirective("vsc1", "cc1", "tl1")],
}


def case2a(q_d_vsc2: float = 0.25, cable_km: float = 2.0,
           grid: GridConfig = GridConfig()) -> NetworkModel:
    """Seven buses: three converters in a string, 2 km pi-section cables between them."""
    els = [GridEquivalent("g", "b1", grid.R, grid.L)]
    for k, (a, b) in enumerate([("b1", "b2"), ("b2", "b4"), ("b4", "b6")], 1):
        els.append(PiCable(f"cl{k}", a, b, R_CL * cable_km, L_CL * cable_km,
                           2 * C_CL * cable_km))
    for k, (a, b) in enumerate([("b2", "b3"), ("b4", "b5"), ("b6", "b7")], 1):
        els.append(Transformer(f"tl{k}", a, b, R_TL, L_TL))
        els.append(ShuntCap(f"cc{k}", b, C_C))
        els.append(Vsc(f"vsc{k}", b, table_vsc(q_d_vsc2 if k == 2 else 0.25)))
    desc = (f"Three converters on a string of {cable_km} km pi-section cables. Cable data are "
            "per km: R and L are scaled by length and C_total holds both line-end "
            "capacitances (2 x 82.28 uF per km), i.e. the per-end value is assumed to be "
            "per km and is doubled for the two ends.")
    return NetworkModel(F_BASE, tuple(f"b{i}" for i in range(1, 8)), tuple(els), ("b1",),
                        description=desc)


# IEEE 14-bus branch data: from, to, r, x, b (per unit)
IEEE14_BRANCHES = (
    (1, 2, 0.01938, 0.05917, 0.0528), (1, 5, 0.05403, 0.22304, 0.0492),
    (2, 3, 0.04699, 0.19797, 0.0438), (2, 4, 0.05811, 0.17632, 0.0340),
    (2, 5, 0.05695, 0.17388, 0.0346), (3, 4, 0.06701, 0.17103, 0.0128),
    (4, 5, 0.01335, 0.04211, 0.0), (4, 7, 0.0, 0.20912, 0.0), (4, 9, 0.0, 0.55618, 0.0),
    (5, 6, 0.0, 0.25202, 0.0), (6, 11, 0.09498, 0.19890, 0.0),
    (6, 12, 0.12291, 0.25581, 0.0), (6, 13, 0.06615, 0.13027, 0.0),
    (7, 8, 0.0, 0.17615, 0.0), (7, 9, 0.0, 0.11001, 0.0), (9, 10, 0.03181, 0.08450, 0.0),
    (9, 14, 0.12711, 0.27038, 0.0), (10, 11, 0.08205, 0.19207, 0.0),
    (12, 13, 0.22092, 0.19988, 0.0), (13, 14, 0.17093, 0.34802, 0.0),
)
IEEE14_SHUNT_B = {9: 0.19}


@dataclass(frozen=True)
class Ieee14Config:
    z_base: float = 1.5          # ohm per unit impedance
    x_machine: float = 0.25      # machine equivalents at buses 2, 3, 6 (pu)
    x_over_r_lossless: float = 30.0  # resistance given to lossless branches
    machine_x_over_r: float = 40.0


def case2b(q_d_vsc1: float = 0.25, q_d_vsc2: float = 0.25,
           cfg: Ieee14Config = Ieee14Config(),
           grid: GridConfig = GridConfig()) -> NetworkModel:
    """Approximate 15-bus system: IEEE 14-bus topology, converter 1 at bus 3 via bus 15,
    converter 2 at bus 8."""
    zb = cfg.z_base
    els = [GridEquivalent("g", "b1", grid.R, grid.L)]
    for b in (2, 3, 6):
        L = cfg.x_machine * zb / W1
        els.append(GridEquivalent(f"gen{b}", f"b{b}", W1 * L / cfg.machine_x_over_r, L))
    for a, b, r, x, bsh in IEEE14_BRANCHES:
        R = (r if r > 0 else x / cfg.x_over_r_lossless) * zb
        L = x * zb / W1
        name = f"{a}_{b}"
        if bsh > 0:
            els.append(PiCable(f"line{name}", f"b{a}", f"b{b}", R, L, bsh / zb / W1))
        elif r == 0:
            els.append(Transformer(f"tr{name}", f"b{a}", f"b{b}", R, L))
        else:
            els.append(RlSeries(f"line{name}", f"b{a}", f"b{b}", R, L))
    for b, bsh in IEEE14_SHUNT_B.items():
        els.append(ShuntCap(f"cap{b}", f"b{b}", bsh / zb / W1))
    els += [
        Transformer("tl1", "b3", "b15", R_TL, L_TL),
        ShuntCap("cc1", "b15", C_C),
        Vsc("vsc1", "b15", table_vsc(q_d_vsc1)),
        ShuntCap("cc2", "b8", C_C),
        Vsc("vsc2", "b8", table_vsc(q_d_vsc2)),
    ]
    desc = ("Approximate 15-bus system on the IEEE 14-bus topology. Per-unit branch data are "
            f"scaled with z_base={zb} ohm; lossless branches get R=X/{cfg.x_over_r_lossless}; "
            f"machine equivalents x={cfg.x_machine} pu at buses 2, 3, 6. These are assumptions, "
            "not published data.")
    return NetworkModel(F_BASE, tuple(f"b{i}" for i in range(1, 16)), tuple(els), ("b1",),
                        description=desc)


CASE2B_GROUPINGS = {
    "GO1": [],
    "GO2": [GroupingDirective("vsc1", "cc1", "tl1")],
}


def passive_feeder() -> NetworkModel:
    """Converter-free radial feeder with cable capacitance and RL loads."""
    return NetworkModel(F_BASE, ("b1", "b2", "b3", "b4"), (
        GridEquivalent("g", "b1", 0.002, 0.1e-3),
        PiCable("c12", "b1", "b2", 0.004, 0.02e-3, 300e-6),
        PiCable("c23", "b2", "b3", 0.006, 0.03e-3, 400e-6),
        Transformer("t34", "b3", "b4", R_TL, L_TL),
        ShuntCap("cap4", "b4", 200e-6),
        RlSeries("load3", "b3", None, 0.5, 1e-3),
        RlSeries("load4", "b4", None, 0.8, 2e-3),
    ), ("b1",), description="Converter-free radial feeder used as a passive reference.")


def single_bus(q_d: float = 0.25, grid: GridConfig = GridConfig(R=0.002, L=0.2e-3),
               C: float = C_C) -> NetworkModel:
    """One converter with its filter capacitor on a grid equivalent."""
    return NetworkModel(F_BASE, ("pcc",), (
        GridEquivalent("g", "pcc", grid.R, grid.L),
        ShuntCap("cf", "pcc", C),
        Vsc("vsc", "pcc", table_vsc(q_d)),
    ), ("pcc",), description="One converter with its filter capacitor on a grid equivalent.")

