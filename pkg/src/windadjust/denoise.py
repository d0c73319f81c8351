"""Wavelet packet soft-thresholding with time-varying noise estimates.

The adaptive modes fit a log-log spectrum model to every window's leaf
energies and use ``sqrt(exp(fit))`` at each node as that window's noise
SD; the constant mode uses one robust SD per node for the whole input.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .audio import AudioBuffer, as_buffer
from .noisefit import FitConfig, fit_frames
from .wpt import EnergyFrames, centre_frequencies, safe_log, window_coeffs, \
    windowed_node_energies, wpt_forward, wpt_inverse, MIN_WINDOW_COEFFS

MODES = ("constant_mad", "adaptive_ols", "adaptive_qr")
MAD_CONST = 0.6745
CLIP_LEVEL = 1.0


def _default_fit():
    return FitConfig(fit_band=(0.0, float("inf")))


@dataclass(frozen=True)
class DenoiseConfig:
    """Shrinkage settings.

    ``lam`` defaults to 3 for ``constant_mad`` and 1 for the adaptive
    modes. ``mad`` picks the constant-mode scale: ``"mean"`` (mean absolute
    deviation about the median) or ``"median"`` (classical MAD). The fit
    method is taken from ``mode``; the rest of ``fit`` (degree, band, tau,
    bias) is used as given.
    """

    mode: str = "adaptive_qr"
    lam: float = None
    window: float = 0.1
    fit: FitConfig = field(default_factory=_default_fit)
    mad: str = "mean"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.lam is None:
            object.__setattr__(self, "lam", 3.0 if self.mode == "constant_mad" else 1.0)
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.window > 0:
            raise ValueError(f"window must be positive, got {self.window}")
        if self.mad not in ("mean", "median"):
            raise ValueError(f"mad must be 'mean' or 'median', got {self.mad!r}")

    @property
    def method(self):
        return {"adaptive_ols": "OLS", "adaptive_qr": "QR"}.get(self.mode)


def soft_threshold(coeff, sigma, lam):
    """``sign(c) * max(0, |c| - lam * sigma)``."""
    c = np.asarray(coeff, dtype=float)
    if np.any(np.asarray(sigma) < 0):
        raise ValueError("sigma must be >= 0")
    mag = np.abs(c) - lam * np.asarray(sigma, dtype=float)
    out = np.where(mag > 0, np.sign(c) * mag, 0.0)
    return float(out) if out.ndim == 0 else out


def mad_sigma(coeffs) -> float:
    """``sum |Y - median(Y)| / (0.6745 n)``: mean absolute deviation about the median.

    For Gaussian data this converges to ``sqrt(2/pi) / 0.6745 = 1.183`` times
    the SD; :func:`mad_sigma_median` is the classically calibrated variant.
    """
    y = np.asarray(coeffs, dtype=float).ravel()
    if y.size < 2:
        raise ValueError(f"need at least 2 coefficients, got {y.size}")
    return float(np.mean(np.abs(y - np.median(y))) / MAD_CONST)


def mad_sigma_median(coeffs) -> float:
    """``median |Y - median(Y)| / 0.6745``."""
    y = np.asarray(coeffs, dtype=float).ravel()
    if y.size < 2:
        raise ValueError(f"need at least 2 coefficients, got {y.size}")
    return float(np.median(np.abs(y - np.median(y))) / MAD_CONST)


@dataclass
class DenoiseResult:
    """Denoised audio plus the noise SDs used.

    ``sigma`` is (windows, nodes); for the constant mode it has one row.
    """

    audio: AudioBuffer
    sigma: np.ndarray
    window_start: np.ndarray
    config: DenoiseConfig

    def sigma_summary(self) -> dict:
        s = self.sigma
        return {
            "n_windows": int(s.shape[0]),
            "node_median": [float(v) for v in np.median(s, axis=0)],
            "window_median": [float(v) for v in np.median(s, axis=1)],
            "min": float(s.min()),
            "max": float(s.max()),
        }


def _whole_input_frames(tree, m_min=MIN_WINDOW_COEFFS) -> EnergyFrames:
    n_valid = tree.length // 2 ** tree.depth
    if n_valid < m_min:
        raise ValueError(f"input too short: {n_valid} coefficients per node, need {m_min}")
    e = np.mean(tree.leaves[:, :n_valid] ** 2, axis=1)
    return EnergyFrames(safe_log(e)[None, :], np.zeros(1), np.array([n_valid]),
                        centre_frequencies(tree.depth, tree.sample_rate), tree.depth,
                        tree.sample_rate, n_valid * 2 ** tree.depth / tree.sample_rate, n_valid)


def adaptive_sigma(tree, cfg: DenoiseConfig):
    """Per-window, per-node noise SD from the fitted spectrum; (sigma, starts, block)."""
    m = window_coeffs(cfg.window, tree.sample_rate, tree.depth)
    frames = windowed_node_energies(tree, cfg.window) if m <= tree.length // 2 ** tree.depth else None
    if frames is None or len(frames) == 0:
        frames = _whole_input_frames(tree)
        m = frames.window_coeffs
    batch = fit_frames(frames, cfg.fit, cfg.method)
    logp = batch.predict(frames.centre_freqs) + batch.bias()[:, None]
    return np.sqrt(np.exp(logp)), frames.start, m


def constant_sigma(tree, cfg: DenoiseConfig) -> np.ndarray:
    fn = mad_sigma if cfg.mad == "mean" else mad_sigma_median
    n_valid = max(2, tree.length // 2 ** tree.depth)
    return np.array([[fn(row[:n_valid]) for row in tree.leaves]])


def denoise(x, wavelet="sym8", depth=5, cfg: DenoiseConfig = None,
            sample_rate=None) -> DenoiseResult:
    """Soft-threshold the leaf coefficients and reconstruct; see :func:`denoise_file`."""
    cfg = cfg or DenoiseConfig()
    buf = as_buffer(x, sample_rate)
    tree = wpt_forward(buf, wavelet, depth)
    T = tree.leaf_length
    if cfg.mode == "constant_mad":
        sigma = constant_sigma(tree, cfg)
        starts, block = np.zeros(1), T
    else:
        sig_wk, starts, block = adaptive_sigma(tree, cfg)
        sigma = sig_wk
    thresh = np.ascontiguousarray(cfg.lam * sigma.T)
    leaves = _core.soft_threshold_blocks(np.ascontiguousarray(tree.leaves), thresh, block)
    out = wpt_inverse(tree.with_leaves(np.asarray(leaves)))
    return DenoiseResult(AudioBuffer(out.samples, buf.sample_rate, buf.subtype), sigma,
                         np.asarray(starts, dtype=float), cfg)


def denoise_file(x, wavelet="sym8", depth=5, cfg: DenoiseConfig = None,
                 sample_rate=None) -> AudioBuffer:
    """Denoised copy of ``x`` with the same length and sample rate.

    Only leaf coefficients are thresholded; each window's noise SD is applied
    to all of that window's coefficients. No gain is applied here; see
    :func:`limit_peak` for output to clipping formats.
    """
    return denoise(x, wavelet, depth, cfg, sample_rate).audio


def limit_peak(buf: AudioBuffer, level=CLIP_LEVEL):
    """Scale ``buf`` down to ``level`` peak if it would clip; returns ``(buf, gain)``."""
    peak = float(np.max(np.abs(buf.samples))) if len(buf) else 0.0
    if peak <= level:
        return buf, 1.0
    gain = level / peak
    return buf.with_samples(buf.samples * gain), gain


def sidecar_json(result: DenoiseResult, gain=1.0, provenance=None) -> str:
    doc = {"mode": result.config.mode, "lambda": result.config.lam,
           "window_s": result.config.window, "output_gain": gain,
           "sigma": result.sigma_summary()}
    if provenance is not None:
        doc["provenance"] = provenance
    return json.dumps(doc, indent=2, sort_keys=True)
