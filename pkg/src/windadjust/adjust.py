"""Spectral subtraction of interpolated noise levels from target-node energies.

Log-scale subtraction divides by the noise estimate, so background windows
follow a fixed chi-squared law whatever the momentary noise power. Power
subtraction is kept for comparison: its output distribution still depends
on the noise power.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .noisefit import NoiseEstimate, noise_power
from .wpt import EnergyFrames, NodeId

MODES = ("log_subtraction", "power_subtraction")


def log_spectral_subtract(energy, noise_log_power, floor=True):
    """``max(1, energy / exp(noise_log_power))``; ``floor=False`` skips the max."""
    energy = np.asarray(energy, dtype=float)
    ratio = energy * np.exp(-np.asarray(noise_log_power, dtype=float))
    out = np.maximum(ratio, 1.0) if floor else ratio
    return float(out) if out.ndim == 0 else out


def power_spectral_subtract(energy, noise_power):
    """``max(0, energy - noise_power)``."""
    out = np.maximum(np.asarray(energy, dtype=float) - np.asarray(noise_power, dtype=float), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class AdjustedSeries:
    """Adjusted energies of one node, one value per window.

    For log subtraction ``values`` is the window's summed squared
    coefficients divided by the per-coefficient noise power, i.e. chi-squared
    with ``df`` degrees of freedom under pure noise.
    """

    node: NodeId
    values: np.ndarray
    mode: str
    window_start: np.ndarray
    window_length: np.ndarray
    raw_energy: np.ndarray
    noise_power: np.ndarray
    df: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["window_start", "raw_energy", "noise_estimate", "adjusted"])
        for row in zip(self.window_start, self.raw_energy, self.noise_power, self.values):
            w.writerow([f"{row[0]:.6f}"] + [f"{v:.9g}" for v in row[1:]])
        return buf.getvalue()


def _estimate_array(frames: EnergyFrames, estimates, node, method):
    if isinstance(estimates, np.ndarray):
        if estimates.shape != (len(frames),):
            raise ValueError(f"{estimates.shape[0]} estimates for {len(frames)} windows")
        return estimates, method or "OLS"
    estimates = list(estimates)
    if len(estimates) != len(frames):
        raise ValueError(f"{len(estimates)} estimates for {len(frames)} windows")
    starts = np.array([e.window_start for e in estimates], dtype=float)
    if not np.allclose(starts, frames.start, rtol=0, atol=1e-9):
        raise ValueError("noise estimates are not aligned with the frame windows")
    for e in estimates:
        if e.node != node:
            raise ValueError(f"estimate for node {e.node} given for node {node}")
    methods = {e.method for e in estimates} or {"OLS"}
    if len(methods) > 1:
        raise ValueError("mixed estimation methods in one series")
    return np.array([e.log_power for e in estimates], dtype=float), methods.pop()


def adjust_target_series(frames: EnergyFrames, estimates, node: NodeId,
                         mode="log_subtraction", floor=True, meta=None,
                         method=None) -> AdjustedSeries:
    """Subtract per-window noise estimates from ``node``'s window energies.

    ``estimates`` is a sequence of :class:`NoiseEstimate` aligned with the
    frames by ``window_start``, or a plain array of log powers whose origin is
    given by ``method`` (default ``"OLS"``). Least-squares log powers are
    recentred by the log-mean offset before use, any other method is taken
    as the log noise power itself; see :func:`windadjust.noisefit.noise_power`.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    n = np.asarray(frames.n_coeffs, dtype=float)
    wlen = n * 2 ** frames.level / frames.sample_rate
    if len(frames) == 0:
        empty = np.zeros(0)
        return AdjustedSeries(node, empty, mode, empty, empty, empty, empty, empty, dict(meta or {}))
    logp, method = _estimate_array(frames, estimates, node, method)
    sigma2 = noise_power(logp, n, method)
    energy = frames.energy(node)
    if mode == "log_subtraction":
        values = log_spectral_subtract(energy, np.log(sigma2), floor=floor)
    else:
        values = power_spectral_subtract(energy, n * sigma2)
    info = {"method": method, "mode": mode, "floor": floor}
    info.update(meta or {})
    return AdjustedSeries(node, np.atleast_1d(values), mode, frames.start.copy(), wlen,
                          energy, sigma2, n.copy(), info)


def estimates_for(batch, node: NodeId):
    """Per-window :class:`NoiseEstimate` objects from a :class:`~windadjust.noisefit.BatchFit`."""
    vals = batch.interpolate([node])[:, 0]
    return [NoiseEstimate(node, float(v), float(s), batch.method)
            for v, s in zip(vals, batch.frames.start)]
