"""Resonance mode analysis over a frequency sweep.

At every s = j*2*pi*f the system matrix Y_T is diagonalised as
Y_T = L diag(lambda_y) T with T = L^-1; the modal impedances are
lambda_z = 1 / lambda_y.  Eigenvalues are then stitched into continuous
traces by eigenvector overlap.
"""

from __future__ import annotations

import csv
import io
import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .assembly import assemble
from .errors import EigenError, PmdStabError, SweepError
from .netmodel import NetworkModel

log = logging.getLogger(__name__)

AMBIGUITY_GAP = 0.1
DEFECTIVE_COND = 1e8
# below this overlap the eigenvector match is considered lost
WEAK_OVERLAP = 0.5


@dataclass(frozen=True)
class FrequencyGrid:
    f_min: float = 1.0
    f_max: float = 3000.0
    step: float = 1.0
    refine_factor: int = 10
    refine_window_hz: float = 20.0

    def __post_init__(self):
        if not (self.f_min > 0 and self.step > 0 and self.f_max >= self.f_min):
            raise ValueError(f"invalid frequency grid {self}")
        if self.refine_factor < 1:
            raise ValueError("refine_factor must be >= 1")

    def frequencies(self) -> np.ndarray:
        n = int(np.floor((self.f_max - self.f_min) / self.step + 1e-9)) + 1
        return self.f_min + self.step * np.arange(n)

    @property
    def fine_step(self) -> float:
        return self.step / self.refine_factor


@dataclass
class ModalDecomposition:
    f_hz: float
    lambda_y: np.ndarray
    right: np.ndarray  # columns are right eigenvectors (L)
    left: np.ndarray   # rows are left eigenvectors (T), T @ L = I

    @property
    def lambda_z(self) -> np.ndarray:
        return 1.0 / self.lambda_y


def eig_complex(m, f_hz: Optional[float] = None):
    """Eigenvalues, right vectors (unit columns) and left vectors with T @ L = I."""
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise EigenError(f"non-finite matrix at f={f_hz} Hz")
    try:
        w, v = scipy.linalg.eig(m, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenError(f"eigenvalue iteration did not converge at f={f_hz} Hz: {exc}") from exc
    v = v / np.linalg.norm(v, axis=0)
    cond = np.linalg.cond(v)
    if cond > DEFECTIVE_COND:
        warnings.warn(f"nearly defective matrix at f={f_hz} Hz "
                      f"(eigenvector condition {cond:.3g})", RuntimeWarning, stacklevel=2)
    t = np.linalg.solve(v, np.eye(len(w)))
    return w, v, t


def _eig_batch(y, freqs):
    """Batched decomposition: (F, N) eigenvalues, (F, N, N) unit right vectors, left."""
    try:
        w, v = np.linalg.eig(y)
    except np.linalg.LinAlgError:
        # locate the failing sample for a useful message
        for k, m in enumerate(y):
            eig_complex(m, float(freqs[k]))
        raise
    v = v / np.linalg.norm(v, axis=-2, keepdims=True)
    t = np.linalg.inv(v)
    return w, v, t


def decompose(model: NetworkModel, f_hz: float) -> ModalDecomposition:
    y_t = assemble(model, 2j * np.pi * f_hz).y_t
    w, v, t = eig_complex(y_t, f_hz)
    return ModalDecomposition(f_hz, w, v, t)


@dataclass
class ModeTrace:
    mode_id: int
    f_hz: np.ndarray
    lambda_z: np.ndarray
    dominant_bus: np.ndarray
    confidence: np.ndarray  # overlap with the previous sample (1.0 at the start)
    ambiguous: np.ndarray   # bool per sample

    @property
    def flagged(self) -> bool:
        return bool(np.any(self.ambiguous))


@dataclass
class SweepResult:
    model: NetworkModel
    grid: FrequencyGrid
    f_hz: np.ndarray
    y_t: np.ndarray        # (F, N, N)
    lambda_y: np.ndarray   # (F, N) in tracked order
    right: np.ndarray      # (F, N, N) in tracked order
    left: np.ndarray       # (F, N, N) in tracked order
    confidence: np.ndarray  # (F, N)
    ambiguous: np.ndarray   # (F, N)
    traces: list = field(default_factory=list)

    @property
    def lambda_z(self) -> np.ndarray:
        return 1.0 / self.lambda_y

    def decomposition(self, k: int) -> ModalDecomposition:
        return ModalDecomposition(float(self.f_hz[k]), self.lambda_y[k], self.right[k],
                                  self.left[k])

    def trace(self, mode_id: int) -> ModeTrace:
        return self.traces[mode_id]


def _match(t_prev, v_next, lam_prev, lam_next):
    """Assignment of next eigenpairs to previous traces.

    Returns (perm, overlap, ambiguous) with next index perm[i] assigned to
    trace i.
    """
    # T_prev @ L_next tends to a permutation matrix as the step shrinks
    ov = np.abs(t_prev @ v_next)
    rows, cols = linear_sum_assignment(-ov)
    perm = np.empty(len(rows), dtype=int)
    perm[rows] = cols
    got = ov[np.arange(len(perm)), perm]
    ambiguous = np.zeros(len(perm), dtype=bool)
    if len(perm) > 1:
        srt = np.sort(ov, axis=1)
        second = srt[:, -2]
        ambiguous = (got - second) < AMBIGUITY_GAP
    weak = got < WEAK_OVERLAP
    if np.any(weak):
        # fall back to nearest-eigenvalue matching for the weakly matched traces
        scale = np.maximum(np.abs(lam_prev)[:, None], np.abs(lam_next)[None, :])
        dist = np.abs(lam_prev[:, None] - lam_next[None, :]) / np.maximum(scale, 1e-300)
        free_rows = np.flatnonzero(weak)
        free_cols = perm[free_rows]
        sub = dist[np.ix_(free_rows, free_cols)]
        r2, c2 = linear_sum_assignment(sub)
        perm[free_rows[r2]] = free_cols[c2]
        ambiguous[free_rows] = True
        got = ov[np.arange(len(perm)), perm]
    return perm, got, ambiguous


def _track(lam, v, t, start=None):
    """Reorder eigen-data along the first axis so columns form continuous traces.

    ``start`` optionally gives (t_prev, lam_prev) to continue an existing
    tracking from outside the block.
    """
    nf, n = lam.shape
    lam = lam.copy()
    v = v.copy()
    t = t.copy()
    conf = np.ones((nf, n))
    amb = np.zeros((nf, n), dtype=bool)
    if start is None:
        k0 = 1
        t_prev, lam_prev = t[0], lam[0]
    else:
        k0 = 0
        t_prev, lam_prev = start
    for k in range(k0, nf):
        perm, got, ambiguous = _match(t_prev, v[k], lam_prev, lam[k])
        lam[k] = lam[k][perm]
        v[k] = v[k][:, perm]
        t[k] = t[k][perm, :]
        conf[k] = got
        amb[k] = ambiguous
        t_prev, lam_prev = t[k], lam[k]
    return lam, v, t, conf, amb


def _assemble_yt(model, freqs):
    try:
        return assemble(model, 2j * np.pi * np.asarray(freqs)).y_t
    except PmdStabError as exc:
        lo, hi = float(np.min(freqs)), float(np.max(freqs))
        raise type(exc)(f"{exc} (sweep {lo:g}-{hi:g} Hz)", exc.code) from exc


def sweep(model: NetworkModel, grid: FrequencyGrid = FrequencyGrid()) -> SweepResult:
    """Decompose Y_T at every grid frequency and track modes across the grid."""
    freqs = grid.frequencies()
    y_t = _assemble_yt(model, freqs)
    if not np.all(np.isfinite(y_t)):
        bad = np.flatnonzero(~np.all(np.isfinite(y_t), axis=(1, 2)))[0]
        raise SweepError(f"non-finite Y_T at f={freqs[bad]:g} Hz")
    lam, v, t = _eig_batch(y_t, freqs)
    result = SweepResult(model, grid, freqs, y_t, lam, v, t,
                         np.ones(lam.shape), np.zeros(lam.shape, dtype=bool))
    result.traces = track_modes(result)
    return result


def bus_weights(right, left, n_bus):
    """Participation |L_ki T_ik| per mode, summed over each bus's q,d rows.

    ``right``/``left`` may carry leading batch axes; returns (..., modes, buses).
    """
    p = np.abs(right * np.swapaxes(left, -1, -2))  # [..., k, i]
    p = p.reshape(p.shape[:-2] + (n_bus, 2, p.shape[-1])).sum(axis=-2)
    p = np.swapaxes(p, -1, -2)
    return p / p.sum(axis=-1, keepdims=True)


def participation(decomp: ModalDecomposition, mode: int) -> np.ndarray:
    """Normalised per-bus participation weights of one mode."""
    n_bus = decomp.right.shape[0] // 2
    return bus_weights(decomp.right, decomp.left, n_bus)[mode]


def track_modes(result: SweepResult) -> list:
    """Reorder the sweep's eigen-data into continuous traces; returns ModeTrace list."""
    if len(result.f_hz) >= 2:
        lam, v, t, conf, amb = _track(result.lambda_y, result.right, result.left)
        result.lambda_y, result.right, result.left = lam, v, t
        result.confidence, result.ambiguous = conf, amb
    n_bus = result.y_t.shape[-1] // 2
    dom = np.argmax(bus_weights(result.right, result.left, n_bus), axis=-1)  # (F, N)
    traces = []
    for i in range(result.lambda_y.shape[1]):
        traces.append(ModeTrace(i, result.f_hz, 1.0 / result.lambda_y[:, i], dom[:, i],
                                result.confidence[:, i], result.ambiguous[:, i]))
    return traces


@dataclass
class RefinedBlock:
    """All modes re-sampled on a fine grid, tracking continued from a coarse sample."""

    f_hz: np.ndarray        # includes the coarse starting sample first
    lambda_y: np.ndarray    # (F, N)
    dominant_bus: np.ndarray
    confidence: np.ndarray
    ambiguous: np.ndarray

    def trace(self, mode_id: int) -> ModeTrace:
        return ModeTrace(mode_id, self.f_hz, 1.0 / self.lambda_y[:, mode_id],
                         self.dominant_bus[:, mode_id], self.confidence[:, mode_id],
                         self.ambiguous[:, mode_id])


def refine_block(result: SweepResult, f_lo: float, f_hi: float,
                 step: Optional[float] = None) -> RefinedBlock:
    """Re-sample every trace on a finer grid over [f_lo, f_hi].

    Tracking restarts from the nearest coarse sample at or below ``f_lo`` so
    refined column i continues coarse trace i.
    """
    step = step or result.grid.fine_step
    f = result.f_hz
    f_lo = max(f_lo, f[0])
    f_hi = min(f_hi, f[-1])
    k0 = max(int(np.searchsorted(f, f_lo, side="right") - 1), 0)
    start_f = f[k0]
    n = int(np.floor((f_hi - start_f) / step + 1e-9))
    fine = start_f + step * np.arange(1, n + 1)
    fine = fine[fine <= f_hi + 1e-9]
    lam0 = result.lambda_y[k0:k0 + 1]
    dom0 = np.array([[tr.dominant_bus[k0] for tr in result.traces]])
    n_modes = lam0.shape[1]
    if len(fine) == 0:
        return RefinedBlock(f[k0:k0 + 1], lam0, dom0, np.ones((1, n_modes)),
                            np.zeros((1, n_modes), dtype=bool))
    y_t = _assemble_yt(result.model, fine)
    lam, v, t = _eig_batch(y_t, fine)
    lam, v, t, conf, amb = _track(lam, v, t, start=(result.left[k0], result.lambda_y[k0]))
    n_bus = y_t.shape[-1] // 2
    dom = np.argmax(bus_weights(v, t, n_bus), axis=-1)
    return RefinedBlock(
        np.concatenate([[start_f], fine]),
        np.concatenate([lam0, lam]),
        np.concatenate([dom0, dom]),
        np.concatenate([np.ones((1, n_modes)), conf]),
        np.concatenate([np.zeros((1, n_modes), dtype=bool), amb]),
    )


def refine_trace(result: SweepResult, mode_id: int, f_lo: float, f_hi: float,
                 step: Optional[float] = None) -> ModeTrace:
    """Re-sample one trace on a finer grid over [f_lo, f_hi]."""
    return refine_block(result, f_lo, f_hi, step).trace(mode_id)


def modes_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["f_hz", "mode_id", "re_lambda_z", "im_lambda_z", "abs_lambda_z",
                "dominant_bus"])
    buses = result.model.buses
    for tr in result.traces:
        for f, z, b in zip(tr.f_hz, tr.lambda_z, tr.dominant_bus):
            w.writerow([repr(float(f)), tr.mode_id, repr(float(z.real)), repr(float(z.imag)),
                        repr(float(abs(z))), buses[int(b)]])
    return buf.getvalue()


def smallest_singular_value(y_t) -> np.ndarray:
    return np.linalg.svd(y_t, compute_uv=False)[..., -1]
