"""Reference computations that share no code path with the package under test
beyond network assembly."""

from __future__ import annotations

import numpy as np

from pmdstab.assembly import assemble
from pmdstab.modal import ModeTrace
from pmdstab.netmodel import GridEquivalent, NetworkModel, RlSeries, ShuntCap


def make_trace(f, z, mode_id=0):
    n = len(f)
    return ModeTrace(mode_id, np.asarray(f, float), np.asarray(z, complex), np.zeros(n, int),
                     np.ones(n), np.zeros(n, bool))


def pole_pair_trace(sigma, f0, gain=1.0, step=0.1, span=500.0):
    """Modal impedance of a single pole pair: gain * s / ((s - p)(s - p*)), p = sigma + j w0."""
    p = sigma + 2j * np.pi * f0
    f = np.arange(max(step, f0 - span), f0 + span + step / 2, step)
    s = 2j * np.pi * f
    return make_trace(f, gain * s / ((s - p) * (s - np.conj(p))))


def random_passive_network(rng: np.random.Generator, n_bus: int) -> NetworkModel:
    """Random meshed RLC network with a grid equivalent at the first bus.

    A random spanning tree plus a few chords of lossy RL lines, shunt
    capacitors on a random subset of buses and RL loads to ground.
    """
    buses = tuple(f"n{k}" for k in range(n_bus))
    els = [GridEquivalent("grid", buses[0], rng.uniform(1e-3, 5e-2),
                          rng.uniform(2e-5, 5e-4))]

    def line(name, a, b):
        L = rng.uniform(1e-5, 5e-4)
        xr = rng.uniform(2, 20)
        return RlSeries(name, a, b, 2 * np.pi * 50 * L / xr, L)

    for k in range(1, n_bus):
        els.append(line(f"l{k}", buses[int(rng.integers(0, k))], buses[k]))
    for c in range(int(rng.integers(0, n_bus // 2 + 1))):
        a, b = rng.choice(n_bus, 2, replace=False)
        els.append(line(f"x{c}", buses[a], buses[b]))
    for k in range(n_bus):
        if rng.random() < 0.6:
            els.append(ShuntCap(f"c{k}", buses[k], rng.uniform(1e-5, 5e-4)))
        if rng.random() < 0.4:
            els.append(RlSeries(f"load{k}", buses[k], None, rng.uniform(0.2, 5.0),
                                rng.uniform(1e-4, 1e-2)))
    return NetworkModel(50.0, buses, tuple(els), (buses[0],))


def eig2(m):
    """Closed-form eigenvalues of a stack of 2x2 matrices."""
    tr = m[..., 0, 0] + m[..., 1, 1]
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    root = np.sqrt(tr * tr / 4 - det)
    return np.stack([tr / 2 + root, tr / 2 - root], axis=-1)


def continue_pairs(lam):
    """Order each row so it continues the previous row (nearest-neighbour)."""
    out = lam.copy()
    for k in range(1, len(out)):
        keep = np.abs(out[k] - out[k - 1]).sum()
        swap = np.abs(out[k, ::-1] - out[k - 1]).sum()
        if swap < keep:
            out[k] = out[k, ::-1]
    return out


def pnd_single_bus(model: NetworkModel, f_min=1.0, f_max=3000.0, step=0.05,
                   factor=3.0, window=50.0):
    """Positive-net-damping verdicts of a one-bus network, computed directly.

    Sequence impedances come from closed-form 2x2 eigenvalues on a fine
    grid; at each prominent |Z| peak the sign of Re Z at the nearest
    Im-zero crossing is compared with the direction Im Z crosses zero.
    Returns a sorted list of (verdict, crossing frequency).
    """
    from scipy.signal import find_peaks

    assert len(model.buses) == 1
    f = np.arange(f_min, f_max + step / 2, step)
    lam = continue_pairs(eig2(assemble(model, 2j * np.pi * f).y_t))
    out = []
    for z in (1 / lam).T:
        mag = np.abs(z)
        peaks, _ = find_peaks(mag, prominence=factor * np.median(mag))
        for k in peaks:
            lo = max(int(k - window / step), 0)
            hi = min(int(k + window / step), len(f) - 1)
            js = [j for j in range(lo, hi) if z[j].imag * z[j + 1].imag < 0]
            if not js:
                continue
            j = min(js, key=lambda c: abs(c - k))
            rising = z[j + 1].imag > z[j].imag
            damping_positive = (z[j].real + z[j + 1].real) > 0
            stable = damping_positive != rising
            out.append(("stable" if stable else "unstable", float(f[j])))
    return sorted(out, key=lambda t: t[1])


def det_yt_winding(model: NetworkModel, re0, re1, w0, w1, n=4000) -> float:
    """Counter-clockwise winding of det Y_T(s) around a box in the s-plane.

    Equals (closed-loop zeros) minus (poles of Y_T) inside the box.  The
    left edge should stay clear of the jw axis where converter integrators
    make the phase turn too quickly to sample.
    """
    t = np.linspace(0, 1, n, endpoint=False)
    s = np.concatenate([
        re0 + (re1 - re0) * t + 1j * w0,
        re1 + 1j * (w0 + (w1 - w0) * t),
        re1 - (re1 - re0) * t + 1j * w1,
        re0 + 1j * (w1 - (w1 - w0) * t),
    ])
    d = np.concatenate([np.linalg.det(assemble(model, c).y_t)
                        for c in np.array_split(s, max(1, len(s) // 2000))])
    step = np.angle(np.roll(d, -1) / d)
    assert np.abs(step).max() < np.pi / 2, "box contour under-sampled"
    return float(step.sum() / (2 * np.pi))
