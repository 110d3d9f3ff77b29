"""Positive-mode-damping assessment of tracked modal impedances.

For every peak of |lambda_z| the nearest zero crossing of Im{lambda_z}
is located.  With ``re`` the real part there and ``k`` the slope of the
imaginary part (per rad/s), the mode is stable when re * k < 0 and
unstable when re * k > 0; re / k estimates the real part of the
underlying pole pair.

The crossing is bracketed from sign changes of the sampled Im{lambda_z}
and then evaluated on a local cubic interpolant of 1/lambda_z, which
stays accurate when the resonance is narrower than the grid step.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks as _scipy_find_peaks

from .modal import ModeTrace, SweepResult, refine_block
from .netmodel import fingerprint

STABLE = "stable"
UNSTABLE = "unstable"
MARGINAL = "marginal"
NON_RESONANT = "non-resonant"


@dataclass(frozen=True)
class PmdConfig:
    # prominence threshold in ohm; None means prominence_factor * median |lambda_z|
    prominence: Optional[float] = None
    prominence_factor: float = 3.0
    window_hz: float = 50.0
    tol: float = 1e-9
    refine: bool = True


@dataclass
class ResonancePoint:
    mode_id: int
    f_peak: float
    f_x: Optional[float]
    re_at_x: Optional[float]
    k_x: Optional[float]
    verdict: str
    sigma_estimate: Optional[float] = None
    abs_peak: Optional[float] = None
    n_crossings: int = 0
    dominant_bus: Optional[str] = None
    tracking_flagged: bool = False
    diagnostic: str = ""

    @property
    def within_validity(self) -> bool:
        """True when |sigma| << omega_x, the regime the criterion is built for."""
        if self.sigma_estimate is None or self.f_x is None:
            return False
        return abs(self.sigma_estimate) < 0.05 * 2 * np.pi * self.f_x


@dataclass
class StabilityReport:
    points: list
    verdict: str
    model_fingerprint: str = ""
    grid: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def unstable_points(self) -> list:
        return [p for p in self.points if p.verdict == UNSTABLE]

    def to_dict(self) -> dict:
        return {
            "criterion": "pmd",
            "verdict": self.verdict,
            "model_fingerprint": self.model_fingerprint,
            "grid": self.grid,
            "config": self.config,
            "modes": [asdict(p) for p in self.points],
        }


def classify(re_at_x: float, k_x: float, tol: float = 1e-9) -> str:
    prod = re_at_x * k_x
    if prod > tol:
        return UNSTABLE
    if prod < -tol:
        return STABLE
    return MARGINAL


def system_verdict(points) -> str:
    verdicts = {p.verdict for p in points}
    if UNSTABLE in verdicts:
        return UNSTABLE
    if MARGINAL in verdicts:
        return MARGINAL
    return STABLE


def find_peaks(trace: ModeTrace, prominence: Optional[float] = None,
               prominence_factor: float = 3.0) -> list:
    """Interior local maxima of |lambda_z| whose prominence exceeds the threshold."""
    mag = np.abs(trace.lambda_z)
    if len(mag) < 3:
        return []
    if prominence is None:
        prominence = prominence_factor * float(np.median(mag))
    idx, _ = _scipy_find_peaks(mag, prominence=prominence)
    return [float(trace.f_hz[i]) for i in idx]


def _crossings(f, im):
    """Interpolated frequencies where Im changes sign (exact zeros included)."""
    out = []
    for j in range(len(f) - 1):
        a, b = im[j], im[j + 1]
        if a == 0.0:
            out.append(float(f[j]))
        elif a * b < 0:
            out.append(float(f[j] + (f[j + 1] - f[j]) * a / (a - b)))
    if len(f) and im[-1] == 0.0:
        out.append(float(f[-1]))
    return sorted(set(out))


def _polish(f, z, f_lin):
    """Crossing, real part and slope from a local cubic through 1/lambda_z.

    Across a sharp resonance lambda_z itself varies on the scale of the
    damping, so straight-line interpolation between samples is biased.  Its
    reciprocal lambda_y only varies on the scale of the resonance frequency
    and is interpolated almost exactly by a cubic through the four samples
    around the bracket.  Returns None when that is not possible.
    """
    if len(f) < 4:
        return None
    j = int(np.clip(np.searchsorted(f, f_lin), 1, len(f) - 1))
    lo = int(np.clip(j - 2, 0, len(f) - 4))
    idx = np.arange(lo, lo + 4)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = 1.0 / z[idx]
    if not np.all(np.isfinite(y)):
        return None
    h = float(f[j] - f[j - 1])
    x = (f[idx] - f[j - 1]) / h
    coef = np.linalg.solve(np.vander(x, 4), y)
    dcoef = np.polyder(coef)
    a, b = 0.0, 1.0
    ya, yb = np.polyval(coef, a).imag, np.polyval(coef, b).imag
    if ya == 0.0:
        x0 = a
    elif yb == 0.0:
        x0 = b
    elif ya * yb < 0:
        x0 = brentq(lambda t: np.polyval(coef, t).imag, a, b, xtol=1e-14)
    else:
        return None
    y0 = np.polyval(coef, x0)
    dy = np.polyval(dcoef, x0) / h  # per Hz
    if y0 == 0:
        return None
    zx = 1.0 / y0
    dz = -dy / y0 ** 2
    return float(f[j - 1] + x0 * h), float(zx.real), float(dz.imag / (2 * np.pi))


def resonance_point(trace: ModeTrace, f_peak: float, window: float = 50.0,
                    tol: float = 1e-9, buses=None) -> ResonancePoint:
    """Evaluate the criterion at the Im-crossing nearest to ``f_peak``."""
    f = np.asarray(trace.f_hz, dtype=float)
    z = np.asarray(trace.lambda_z)
    sel = (f >= f_peak - window) & (f <= f_peak + window)
    fw, zw = f[sel], z[sel]
    k_peak = int(np.argmin(np.abs(f - f_peak)))
    abs_peak = float(np.abs(z[k_peak]))
    dom = trace.dominant_bus[k_peak]
    dom_name = buses[int(dom)] if buses is not None else str(int(dom))
    flagged = bool(np.any(np.asarray(trace.ambiguous)[sel]))
    xs = _crossings(fw, zw.imag)
    if not xs:
        return ResonancePoint(trace.mode_id, f_peak, None, None, None, NON_RESONANT,
                              abs_peak=abs_peak, dominant_bus=dom_name,
                              tracking_flagged=flagged,
                              diagnostic=f"no Im zero crossing within +/-{window:g} Hz")
    f_x = min(xs, key=lambda x: abs(x - f_peak))
    polished = _polish(f, z, f_x)
    if polished is not None:
        f_x, re_x, k_x = polished
    else:
        j = int(np.clip(np.searchsorted(f, f_x), 1, len(f) - 1))
        h = float(f[j] - f[j - 1])
        im_hi = np.interp(f_x + h, f, z.imag)
        im_lo = np.interp(f_x - h, f, z.imag)
        k_x = float((im_hi - im_lo) / (2 * h * 2 * np.pi))
        re_x = float(np.interp(f_x, f, z.real))
    verdict = classify(re_x, k_x, tol)
    sigma = re_x / k_x if k_x != 0 else None
    diag = ""
    if len(xs) > 1:
        diag = f"{len(xs)} crossings in window; nearest to the peak taken"
    return ResonancePoint(trace.mode_id, f_peak, f_x, re_x, k_x, verdict, sigma, abs_peak,
                          len(xs), dom_name, flagged, diag)


def _refine_window(result: SweepResult, coarse: ResonancePoint):
    g = result.grid
    lo, hi = coarse.f_peak - g.refine_window_hz, coarse.f_peak + g.refine_window_hz
    if coarse.f_x is not None:
        lo = min(lo, coarse.f_x - 2 * g.step)
        hi = max(hi, coarse.f_x + 2 * g.step)
    return lo, hi


def _merge_windows(windows):
    merged = []
    for lo, hi in sorted(windows):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return merged


def _refined_point(result: SweepResult, fine: ModeTrace, coarse: ResonancePoint,
                   cfg: PmdConfig) -> ResonancePoint:
    # the refined peak sits within one coarse step of the coarse one
    near = np.abs(fine.f_hz - coarse.f_peak) <= result.grid.step
    f_peak = coarse.f_peak
    if np.any(near):
        f_peak = float(fine.f_hz[np.flatnonzero(near)[np.argmax(np.abs(fine.lambda_z[near]))]])
    point = resonance_point(fine, f_peak, cfg.window_hz, cfg.tol, result.model.buses)
    if point.f_x is None and coarse.f_x is not None:
        return coarse
    point.tracking_flagged = point.tracking_flagged or coarse.tracking_flagged
    return point


def pmd_assess(result: SweepResult, config: PmdConfig = PmdConfig()) -> StabilityReport:
    """Apply peak detection and the damping rule to every trace of a sweep."""
    coarse = []
    for trace in result.traces:
        for f_peak in find_peaks(trace, config.prominence, config.prominence_factor):
            coarse.append(resonance_point(trace, f_peak, config.window_hz, config.tol,
                                          result.model.buses))
    g = result.grid
    if config.refine and g.refine_factor > 1 and coarse:
        windows = [_refine_window(result, c) for c in coarse]
        blocks = [(lo, hi, refine_block(result, lo, hi))
                  for lo, hi in _merge_windows(windows)]
        points = []
        for c, (lo, hi) in zip(coarse, windows):
            block = next(b for blo, bhi, b in blocks if blo <= lo and hi <= bhi)
            fine = block.trace(c.mode_id)
            sel = (fine.f_hz >= lo - 1e-9) & (fine.f_hz <= hi + 1e-9)
            fine = ModeTrace(c.mode_id, fine.f_hz[sel], fine.lambda_z[sel],
                             fine.dominant_bus[sel], fine.confidence[sel], fine.ambiguous[sel])
            points.append(_refined_point(result, fine, c, config))
    else:
        points = coarse
    points.sort(key=lambda p: (p.f_peak, p.mode_id))
    return StabilityReport(
        points=points,
        verdict=system_verdict(points),
        model_fingerprint=fingerprint(result.model),
        grid={"f_min": g.f_min, "f_max": g.f_max, "step": g.step,
              "refine_factor": g.refine_factor, "refine_window_hz": g.refine_window_hz},
        config=asdict(config),
    )
