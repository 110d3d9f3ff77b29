"""Generalized Nyquist comparator on the open loop L = Z_N Y_S.

The eigenvalues of L(j 2 pi f) are tracked over the positive frequency
range, mirrored to negative frequencies by conjugation and closed into
loops.  Encirclements of (-1, 0) are counted by accumulating the argument
of 1 + lambda along each loop, clockwise counted positive.

Closure policy.  Near s = 0 and at the top of the range L is close to a
real matrix, so its eigenvalues are real or come in conjugate pairs.  A
branch therefore continues, through s = 0 or through infinity, into the
mirrored half of the branch carrying the conjugate value; loci are built
by chaining branches that way.  The sweep adds a short logarithmic tail
below f_min and extends f_max until every locus is inside |lambda| < 0.1
or to the right of Re(lambda) = -1, so the closing segments cannot pass
around (-1, 0).
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from scipy.optimize import linear_sum_assignment

from .assembly import assemble
from .errors import MarginalCrossingError
from .modal import FrequencyGrid, _track
from .netmodel import NetworkModel, fingerprint

log = logging.getLogger(__name__)

YN_COND_LIMIT = 1e12
MARGINAL_EPS = 1e-12


@dataclass(frozen=True)
class GncConfig:
    low_tail_hz: float = 1e-3      # lowest frequency of the closure tail
    low_tail_points: int = 12
    closure_radius: float = 0.1
    max_extend_hz: float = 1e5
    extend_points_per_decade: int = 200
    max_step_arg: float = np.pi / 2  # bound on sum |d arg| per contour step
    max_passes: int = 40
    indent_hz: float = 1e-3


@dataclass
class EigenLocus:
    """One closed eigenlocus.

    A locus is a cycle of tracked branches: the mirrored (negative
    frequency) half of one branch continues into the positive half of the
    branch it meets near s = 0, which continues at the top of the range into
    the mirrored half of the next branch, until the cycle closes.  Most
    loci consist of a single branch and its own mirror image.
    """

    locus_id: int
    f_hz: np.ndarray       # signed contour parameter of each point
    values: np.ndarray     # eigenvalue of L at each point
    branch: np.ndarray     # tracked branch each point belongs to
    encirclements: int = 0

    @property
    def branches(self) -> list:
        return sorted(set(int(b) for b in self.branch))


def mirror_mismatch(loci) -> float:
    """Largest |lambda(-f) - conj(lambda(+f))| over all branches of ``loci``."""
    pos = {}
    for lc in loci:
        for f, z, b in zip(lc.f_hz, lc.values, lc.branch):
            if f > 0:
                pos[(int(b), float(f))] = z
    worst = 0.0
    for lc in loci:
        for f, z, b in zip(lc.f_hz, lc.values, lc.branch):
            if f < 0:
                worst = max(worst, abs(z - np.conj(pos[(int(b), float(-f))])))
    return worst


@dataclass
class GncReport:
    verdict: str
    loci: list
    total_clockwise: int
    det_winding: int
    f_top_hz: float
    caveats: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    model_fingerprint: str = ""

    @property
    def counts(self) -> list:
        return [lc.encirclements for lc in self.loci]

    def to_dict(self) -> dict:
        return {
            "criterion": "gnc",
            "verdict": self.verdict,
            "total_clockwise": self.total_clockwise,
            "per_locus": self.counts,
            "det_winding": self.det_winding,
            "f_top_hz": self.f_top_hz,
            "caveats": self.caveats,
            "diagnostics": self.diagnostics,
            "model_fingerprint": self.model_fingerprint,
        }


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def count_encirclements(values) -> int:
    """Clockwise encirclements of (-1, 0) by the closed polygon ``values``.

    Accepts an EigenLocus or an ordered array of points; the last point is
    joined back to the first.
    """
    pts = np.asarray(values.values if isinstance(values, EigenLocus) else values)
    w = 1.0 + pts
    if np.any(np.abs(w) < MARGINAL_EPS):
        k = int(np.argmin(np.abs(w)))
        raise MarginalCrossingError(f"locus passes through (-1, 0) at point {k}")
    ang = np.angle(w)
    d = _wrap(np.diff(np.append(ang, ang[0])))
    return int(round(-d.sum() / (2 * np.pi)))


def _open_loop(model: NetworkModel, s):
    """Eigen-data of L at complex frequencies ``s`` plus the condition of Y_N."""
    m = assemble(model, np.asarray(s))
    cond = np.linalg.cond(m.y_n)
    ok = np.isfinite(cond) & (cond <= YN_COND_LIMIT)
    n = m.y_n.shape[-1]
    w = np.full((len(cond), n), np.nan + 0j)
    v = np.full((len(cond), n, n), np.nan + 0j)
    t = v.copy()
    det = np.full(len(cond), np.nan + 0j)
    if np.any(ok):
        loop = np.linalg.solve(m.y_n[ok], m.y_s[ok])
        w[ok], vv = np.linalg.eig(loop)
        vv = vv / np.linalg.norm(vv, axis=-2, keepdims=True)
        v[ok] = vv
        t[ok] = np.linalg.inv(vv)
        det[ok] = np.linalg.det(np.eye(n) + loop)
    return w, v, t, det, cond


class _Contour:
    """Samples of L along the upper half of the Nyquist contour.

    Points are indexed by a real parameter p (Hz).  On the imaginary axis
    s = j 2 pi p; within ``indent_hz`` of a frequency where Y_N is singular
    the contour follows a small right-hand semicircle instead, so
    imaginary-axis poles of L are kept outside the enclosed region.
    """

    def __init__(self, model, indent_hz):
        self.model = model
        self.indent = indent_hz
        self.poles = []
        self.p = np.empty(0)
        self.w = self.v = self.t = self.det = None
        self.diagnostics = []

    def s_of(self, p):
        p = np.asarray(p, dtype=float)
        s = 2j * np.pi * p
        for fp in self.poles:
            near = np.abs(p - fp) < self.indent
            phi = np.arcsin(np.clip((p[near] - fp) / self.indent, -1.0, 1.0))
            s[near] = 2j * np.pi * fp + 2 * np.pi * self.indent * np.exp(1j * phi)
        return s

    def _add_pole(self, fp):
        self.poles.append(fp)
        self.diagnostics.append(f"Y_N singular at f={fp:.6g} Hz; contour indented "
                                f"by {self.indent:g} Hz to the right")
        keep = np.abs(self.p - fp) >= self.indent
        self.p = self.p[keep]
        if self.w is not None:
            self.w, self.v, self.t, self.det = (a[keep] for a in (self.w, self.v, self.t,
                                                                  self.det))
        arc = fp + self.indent * np.sin(np.linspace(-np.pi / 2, np.pi / 2, 9))
        self.add(arc)

    def add(self, params):
        params = np.setdiff1d(np.asarray(params, dtype=float), self.p)
        if params.size == 0:
            return
        w, v, t, det, cond = _open_loop(self.model, self.s_of(params))
        bad = ~np.isfinite(cond) | (cond > YN_COND_LIMIT)
        if np.any(bad):
            good = ~bad
            self._merge(params[good], w[good], v[good], t[good], det[good])
            for fp in params[bad]:
                if all(abs(fp - q) >= self.indent for q in self.poles):
                    self._add_pole(float(fp))
            return
        self._merge(params, w, v, t, det)

    def _merge(self, params, w, v, t, det):
        if self.w is None:
            self.p, self.w, self.v, self.t, self.det = params, w, v, t, det
        else:
            self.p = np.concatenate([self.p, params])
            self.w = np.concatenate([self.w, w])
            self.v = np.concatenate([self.v, v])
            self.t = np.concatenate([self.t, t])
            self.det = np.concatenate([self.det, det])
        order = np.argsort(self.p)
        self.p, self.w, self.v, self.t, self.det = (
            self.p[order], self.w[order], self.v[order], self.t[order], self.det[order])

    def tracked(self):
        if len(self.p) < 2:
            return self.w
        lam, _, _, _, _ = _track(self.w, self.v, self.t)
        return lam


def _closure_ok(lam_top, radius):
    return bool(np.all(np.abs(lam_top) < radius) or np.all(lam_top.real > -1.0))


def _extend_top(contour: _Contour, f_top: float, cfg: GncConfig, diagnostics):
    """Push the top frequency up decade by decade until the closure is harmless."""
    while True:
        lam = contour.tracked()
        if _closure_ok(lam[-1], cfg.closure_radius):
            return f_top
        if f_top >= cfg.max_extend_hz:
            diagnostics.append(
                f"high-frequency closure not verified up to {f_top:.6g} Hz "
                f"(max |lambda| {np.max(np.abs(lam[-1])):.3g})")
            return f_top
        new_top = min(f_top * 10.0, cfg.max_extend_hz)
        n = max(int(cfg.extend_points_per_decade * np.log10(new_top / f_top)), 2)
        contour.add(np.geomspace(f_top, new_top, n + 1)[1:])
        f_top = new_top


def _refine(contour: _Contour, cfg: GncConfig, diagnostics):
    for _ in range(cfg.max_passes):
        lam = contour.tracked()
        d = np.abs(_wrap(np.diff(np.angle(1.0 + lam), axis=0))).sum(axis=1)
        bad = np.flatnonzero(d >= cfg.max_step_arg)
        if bad.size == 0:
            return lam
        p = contour.p
        mids = 0.5 * (p[bad] + p[bad + 1])
        mids = mids[(mids > p[bad]) & (mids < p[bad + 1])]
        if mids.size == 0:
            break
        contour.add(mids)
    diagnostics.append("argument refinement did not converge; winding counts may be unreliable")
    return contour.tracked()


def open_loop_sweep(model: NetworkModel, grid: FrequencyGrid = FrequencyGrid(),
                    config: GncConfig = GncConfig()):
    """Tracked eigenloci of L over the closed contour.

    Returns (loci, det_values, f_top, diagnostics).  Each branch is
    sampled over -f_top ... -f_low, f_low ... f_top; ``det_values`` follows
    the same parameter once.
    """
    contour = _Contour(model, config.indent_hz)
    base = grid.frequencies()
    tail = np.empty(0)
    if config.low_tail_hz < grid.f_min:
        tail = np.geomspace(config.low_tail_hz, grid.f_min, config.low_tail_points + 1)[:-1]
    contour.add(np.concatenate([tail, base]))
    if contour.w is None or len(contour.p) == 0:
        raise MarginalCrossingError("no usable open-loop samples: Y_N singular everywhere")
    diagnostics = []
    f_top = _extend_top(contour, float(base[-1]), config, diagnostics)
    lam = _refine(contour, config, diagnostics)
    diagnostics = contour.diagnostics + diagnostics
    loci = _close_loci(contour.p, lam)
    det_all = np.concatenate([np.conj(contour.det[::-1]), contour.det])
    return loci, det_all, f_top, diagnostics


def _join(a):
    """For each branch value a_i, the branch j whose conjugate a_j* is closest."""
    cost = np.abs(a[:, None] - np.conj(a)[None, :])
    _, cols = linear_sum_assignment(cost)
    return cols


def _close_loci(p, lam) -> list:
    """Chain the mirrored and positive halves of every branch into closed loci."""
    n = lam.shape[1]
    low_prev = _join(lam[0])    # positive branch i starts where mirrored branch low_prev[i] ends
    low_next = np.empty(n, dtype=int)
    low_next[low_prev] = np.arange(n)
    top_next = _join(lam[-1])   # positive branch i ends where mirrored branch top_next[i] starts
    seen = set()
    loci = []
    for start in range(n):
        if start in seen:
            continue
        f_parts, v_parts, b_parts = [], [], []
        j = start
        while True:
            seen.add(j)
            i = int(low_next[j])
            f_parts += [-p[::-1], p]
            v_parts += [np.conj(lam[::-1, j]), lam[:, i]]
            b_parts += [np.full(len(p), j), np.full(len(p), i)]
            j = int(top_next[i])
            if j == start:
                break
        loci.append(EigenLocus(len(loci), np.concatenate(f_parts), np.concatenate(v_parts),
                               np.concatenate(b_parts)))
    return loci


def det_winding(det_values) -> int:
    """Clockwise winding of det(I + L) around 0 along the closed contour."""
    d = np.asarray(det_values)
    if np.any(np.abs(d) < MARGINAL_EPS):
        raise MarginalCrossingError("det(I + L) vanishes on the contour")
    ang = np.angle(d)
    inc = _wrap(np.diff(np.append(ang, ang[0])))
    return int(round(-inc.sum() / (2 * np.pi)))


CAVEAT_RHP = ("GNC verdict assumes the open loop L = Z_N Y_S has no right-half-plane "
              "poles; this is not verified. Aggregated converters can introduce such "
              "poles; compare against the modal-impedance criterion.")


def gnc_assess(model: NetworkModel, grid: FrequencyGrid = FrequencyGrid(),
               config: GncConfig = GncConfig()) -> GncReport:
    loci, det_vals, f_top, diagnostics = open_loop_sweep(model, grid, config)
    for lc in loci:
        lc.encirclements = count_encirclements(lc)
    total = sum(lc.encirclements for lc in loci)
    dw = det_winding(det_vals)
    caveats = [CAVEAT_RHP]
    if dw != total:
        caveats.append(f"det(I+L) winding {dw} differs from the per-locus sum {total}")
    if f_top > grid.f_max:
        caveats.append(f"contour extended to {f_top:.6g} Hz for closure")
    return GncReport(
        verdict="unstable" if total > 0 else "stable",
        loci=loci,
        total_clockwise=total,
        det_winding=dw,
        f_top_hz=f_top,
        caveats=caveats,
        diagnostics=diagnostics,
        model_fingerprint=fingerprint(model),
    )


def loci_csv(loci) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["f_hz", "locus_id", "re", "im"])
    for lc in loci:
        for f, z in zip(lc.f_hz, lc.values):
            w.writerow([repr(float(f)), lc.locus_id, repr(float(z.real)), repr(float(z.imag))])
    return buf.getvalue()
