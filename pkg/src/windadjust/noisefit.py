"""Short-term log-log spectrum models fitted to subband energies.

For each analysis window the log mean energies of the leaf nodes are
regressed on a polynomial in log centre frequency, either by least squares
or by quantile regression, and the fitted curve is evaluated at the target
node(s) to estimate the broadband noise level there.

Under a Gaussian 1/f noise model the log of a mean of ``n`` squared
coefficients has mean ``log(sigma^2) + psi(n/2) + log(2/n)`` and variance
``zeta(2, n/2)`` (Hurwitz zeta), independent of frequency; the functions
:func:`log_chi2_mean` and :func:`log_chi2_var` give these constants.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special
from scipy.ndimage import uniform_filter1d

from . import _core
from .audio import as_buffer
from .wpt import EnergyFrames, NodeId, node_centre_frequency

log = logging.getLogger(__name__)

METHODS = ("OLS", "QR")

QR_EPS = 1e-6
QR_TOL = 1e-8
QR_MAX_ITER = 200
SSE_FLOOR = 1e-12

LOG_CHI2_1_MEAN = float(special.digamma(0.5) + np.log(2.0))  # -1.27036...
LOG_CHI2_1_VAR = float(np.pi ** 2 / 2)


def log_chi2_mean(df):
    """``E log chi2_df = psi(df/2) + log 2``."""
    return special.digamma(np.asarray(df, dtype=float) / 2) + np.log(2.0)


def log_chi2_var(df):
    """``Var log chi2_df = zeta(2, df/2)``."""
    return special.zeta(2.0, np.asarray(df, dtype=float) / 2)


def log_mean_energy_offset(n):
    """Mean of ``log(chi2_n / n)``: the bias of a log mean energy of ``n`` coefficients."""
    n = np.asarray(n, dtype=float)
    return log_chi2_mean(n) - np.log(n)


@dataclass(frozen=True)
class FitConfig:
    """Settings for the per-window spectrum fit.

    ``bias_adjust`` is added to every interpolated log power; ``"auto"``
    shifts quantile fits by :func:`qr_bias_correction` for each window's
    coefficient count (and is 0 for least squares). ``exclude_nodes`` are the
    target node(s), which never enter the regression.
    """

    degree: int = 3
    fit_band: tuple = (150.0, 6000.0)
    method: str = "OLS"
    tau: float = 0.2
    bias_adjust: float = 0.0
    exclude_nodes: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError(f"degree must be an integer >= 1, got {self.degree}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0 < self.tau < 1:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.tau >= 0.5:
            log.warning("tau=%g >= 0.5 loses robustness to loud contamination", self.tau)
        if self.bias_adjust != "auto":
            object.__setattr__(self, "bias_adjust", float(self.bias_adjust))
        lo, hi = self.fit_band
        if not 0 <= lo < hi:
            raise ValueError(f"invalid fit band {self.fit_band}")
        object.__setattr__(self, "fit_band", (float(lo), float(hi)))
        object.__setattr__(self, "exclude_nodes", frozenset(self.exclude_nodes))

    def included(self, centre_freqs, level, sample_rate) -> np.ndarray:
        """Boolean mask of nodes entering the regression."""
        lo, hi = self.fit_band
        nyq = sample_rate / 2.0
        if hi > nyq:
            hi = nyq
        f = np.asarray(centre_freqs)
        mask = (f >= lo) & (f <= hi)
        for node in self.exclude_nodes:
            if node.level == level:
                mask[node.index - 1] = False
        need = self.degree + 2
        if mask.sum() < need:
            raise ValueError(
                f"only {int(mask.sum())} nodes in the fit band after exclusions; "
                f"degree {self.degree} needs at least {need}"
            )
        return mask


@dataclass
class SpectrumFit:
    """One window's fitted log-log spectrum.

    ``beta`` holds coefficients of ``1, log f, (log f)**2, ...`` (natural
    log, Hz). Evaluation goes through the centred basis kept alongside, which
    is numerically identical but better conditioned.
    """

    beta: np.ndarray
    method: str
    n_points: int
    sse: float
    aicc: float
    window_start: float = 0.0
    converged: bool = True
    n_iter: int = 0
    perfect_fit: bool = False
    centre: float = 0.0
    scale: float = 1.0
    beta_scaled: np.ndarray = None

    @property
    def degree(self) -> int:
        return len(self.beta) - 1

    def predict(self, freqs) -> np.ndarray:
        logf = np.log(np.asarray(freqs, dtype=float))
        if self.beta_scaled is None:
            return np.polynomial.polynomial.polyval(logf, self.beta)
        u = (logf - self.centre) / self.scale
        return np.polynomial.polynomial.polyval(u, self.beta_scaled)


@dataclass(frozen=True)
class NoiseEstimate:
    node: NodeId
    log_power: float
    window_start: float
    method: str


def design_row(f, degree: int) -> np.ndarray:
    """``[1, log f, ..., (log f)**degree]``."""
    f = float(f)
    if not f > 0:
        raise ValueError(f"frequency must be positive, got {f}")
    return np.log(f) ** np.arange(degree + 1)


def _aicc(sse, n, degree):
    k = degree + 2
    sse = np.maximum(sse, SSE_FLOOR)
    with np.errstate(divide="ignore", invalid="ignore"):
        m2ll = n * (np.log(2 * np.pi * sse / n) + 1)
        pen = np.where(n - k - 1 > 0, 2.0 * k * n / (n - k - 1), np.inf)
    return m2ll + pen


def aicc(fit: SpectrumFit) -> float:
    """Small-sample corrected AIC of a Gaussian polynomial fit.

    ``k = degree + 2`` parameters (coefficients and variance); the variance
    is the MLE ``sse / n`` with ``sse`` floored at 1e-12.
    """
    k = fit.degree + 2
    if fit.n_points <= k + 1:
        raise ValueError(f"AICc needs more than {k + 1} points, got {fit.n_points}")
    return float(_aicc(fit.sse, fit.n_points, fit.degree))


class BatchFit:
    """Fits of one polynomial model to every window of an :class:`EnergyFrames`.

    Attributes are stacked over windows: ``beta_scaled`` (W, d), ``sse``,
    ``aicc``, ``converged`` and ``n_iter`` (W,).
    """

    def __init__(self, frames: EnergyFrames, cfg: FitConfig, method=None):
        method = method or cfg.method
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        self.cfg = cfg
        self.method = method
        self.frames = frames
        self.mask = cfg.included(frames.centre_freqs, frames.level, frames.sample_rate)
        logf = np.log(frames.centre_freqs[self.mask])
        self.n_points = int(self.mask.sum())
        self.centre = float(logf.mean())
        half_range = float(np.ptp(logf)) / 2
        self.scale = half_range if half_range > 0 else 1.0
        X = np.vander((logf - self.centre) / self.scale, cfg.degree + 1, increasing=True)
        if np.linalg.matrix_rank(X) < cfg.degree + 1:
            raise ValueError("rank-deficient design: fewer distinct frequencies "
                             f"than degree + 1 = {cfg.degree + 1}")
        self.X = X
        Y = np.ascontiguousarray(frames.log_energy[:, self.mask], dtype=float)
        W = Y.shape[0]
        if W == 0:
            self.beta_scaled = np.zeros((0, cfg.degree + 1))
            self.converged = np.zeros(0, dtype=bool)
            self.n_iter = np.zeros(0, dtype=int)
        elif method == "OLS":
            self.beta_scaled = np.linalg.lstsq(X, Y.T, rcond=None)[0].T
            self.converged = np.ones(W, dtype=bool)
            self.n_iter = np.zeros(W, dtype=int)
        else:
            beta, iters, conv = _core.irls_quantile(X, Y, cfg.tau, QR_EPS, QR_TOL, QR_MAX_ITER)
            self.beta_scaled = np.asarray(beta)
            self.converged = np.asarray(conv, dtype=bool)
            self.n_iter = np.asarray(iters, dtype=int)
            if not self.converged.all():
                log.debug("quantile fit did not converge in %d of %d windows",
                          int((~self.converged).sum()), W)
        resid = Y - self.beta_scaled @ X.T
        raw_sse = (resid ** 2).sum(axis=1)
        self.perfect = raw_sse < SSE_FLOOR
        self.sse = np.maximum(raw_sse, SSE_FLOOR)
        self.aicc = _aicc(self.sse, self.n_points, cfg.degree)

    def __len__(self):
        return self.beta_scaled.shape[0]

    @property
    def beta(self) -> np.ndarray:
        """Coefficients in the raw ``log f`` basis, (W, d)."""
        return np.array([_unscale(b, self.centre, self.scale) for b in self.beta_scaled])

    def predict(self, freqs) -> np.ndarray:
        """Fitted log energies at ``freqs`` for every window, (W, len(freqs))."""
        u = (np.log(np.atleast_1d(np.asarray(freqs, dtype=float))) - self.centre) / self.scale
        V = np.vander(u, self.cfg.degree + 1, increasing=True)
        return self.beta_scaled @ V.T

    def interpolate(self, nodes) -> np.ndarray:
        """Noise log power (with ``bias_adjust``) at each node, (W, len(nodes))."""
        sr = self.frames.sample_rate
        f = [node_centre_frequency(n, sr) for n in nodes]
        return self.predict(f) + self.bias()[:, None]

    def bias(self) -> np.ndarray:
        """Per-window additive correction implied by ``cfg.bias_adjust``."""
        W = len(self)
        if self.cfg.bias_adjust != "auto":
            return np.full(W, self.cfg.bias_adjust)
        if self.method == "OLS":
            return np.zeros(W)
        n = self.frames.n_coeffs
        table = {m: qr_bias_correction(self.cfg.tau, m) for m in np.unique(n)}
        return np.array([table[m] for m in n], dtype=float)

    def fit(self, i) -> SpectrumFit:
        return SpectrumFit(
            beta=_unscale(self.beta_scaled[i], self.centre, self.scale),
            method=self.method,
            n_points=self.n_points,
            sse=float(self.sse[i]),
            aicc=float(self.aicc[i]),
            window_start=float(self.frames.start[i]),
            converged=bool(self.converged[i]),
            n_iter=int(self.n_iter[i]),
            perfect_fit=bool(self.perfect[i]),
            centre=self.centre,
            scale=self.scale,
            beta_scaled=self.beta_scaled[i].copy(),
        )

    def fits(self) -> list:
        return [self.fit(i) for i in range(len(self))]


def _unscale(beta_scaled, centre, scale):
    # p(u) with u = (x - centre) / scale, re-expressed in powers of x
    P = np.polynomial.Polynomial
    return P(beta_scaled)(P([-centre / scale, 1.0 / scale])).coef[:len(beta_scaled)]


def _as_frames(frame_or_frames, sample_rate=None):
    if isinstance(frame_or_frames, EnergyFrames):
        return frame_or_frames
    frames = frame_or_frames if isinstance(frame_or_frames, (list, tuple)) else [frame_or_frames]
    if sample_rate is None:
        # node frequencies fix the Nyquist frequency: f_K = F_N (K - 1/2) / K
        f = frames[0].centre_freqs
        K = len(f)
        sample_rate = 2 * f[-1] * K / (K - 0.5)
    return EnergyFrames.from_frames(frames, sample_rate)


def fit_frames(frames, cfg: FitConfig, method=None) -> BatchFit:
    """Fit every window at once; see :class:`BatchFit`."""
    return BatchFit(_as_frames(frames), cfg, method)


def fit_ols(frame, cfg: FitConfig) -> SpectrumFit:
    """Least-squares polynomial fit of one window's log energies."""
    return BatchFit(_as_frames(frame), cfg, "OLS").fit(0)


def fit_quantile(frame, cfg: FitConfig) -> SpectrumFit:
    """Check-loss (quantile ``cfg.tau``) polynomial fit by smoothed IRLS.

    Weights are ``tau / |r|`` above the curve and ``(1 - tau) / |r|`` below,
    with ``|r|`` floored at 1e-6; iteration stops when no coefficient moves by
    more than 1e-8 or after 200 steps (``converged`` is then False).
    """
    return BatchFit(_as_frames(frame), cfg, "QR").fit(0)


def interpolate_noise(fit: SpectrumFit, node: NodeId, sample_rate, cfg: FitConfig) -> NoiseEstimate:
    f = node_centre_frequency(node, sample_rate)
    bias = cfg.bias_adjust
    if bias == "auto":
        if fit.method == "OLS":
            bias = 0.0
        else:
            raise ValueError("bias_adjust='auto' needs the window size; use BatchFit.interpolate")
    value = float(fit.predict([f])[0]) + bias
    return NoiseEstimate(node, value, fit.window_start, fit.method)


def noise_power(log_power, n_coeffs, method="OLS"):
    """Linear noise power per coefficient from an interpolated log energy.

    Least-squares fits estimate the mean of a log mean energy, which sits
    ``psi(n/2) + log(2/n)`` below the log of the power; that offset is removed.
    Quantile fits are returned as-is (use ``bias_adjust`` to correct them).
    """
    log_power = np.asarray(log_power, dtype=float)
    if method == "OLS":
        log_power = log_power - log_mean_energy_offset(n_coeffs)
    return np.exp(log_power)


def qr_bias_correction(tau, n_coeffs):
    """Additive correction moving a clean-noise tau-quantile fit to the log power."""
    from .metrics import chi2_quantile
    return float(-np.log(chi2_quantile(tau, n_coeffs) / n_coeffs))


def select_degree(frames, degrees=range(1, 7), cfg: FitConfig = None) -> int:
    """Polynomial degree with the smallest mean AICc over all windows.

    Every candidate degree is fitted by least squares on the same node set.
    """
    frames = _as_frames(frames)
    if len(frames) == 0:
        raise ValueError("select_degree needs at least one frame")
    cfg = cfg or FitConfig()
    degrees = list(degrees)
    if not degrees:
        raise ValueError("no candidate degrees")
    # the node set must not depend on the degree, so validate with the largest
    replace(cfg, degree=max(degrees)).included(
        frames.centre_freqs, frames.level, frames.sample_rate)
    scores = [np.mean(BatchFit(frames, replace(cfg, degree=d), "OLS").aicc) for d in degrees]
    return degrees[int(np.argmin(scores))]


def smoothed_periodogram(x, smooth_bins=7, sample_rate=None, downsample=1):
    """Daniell-smoothed periodogram.

    Returns ``(freqs, power)`` where ``power[k] = |X_k|**2 / N`` smoothed by a
    flat kernel of ``smooth_bins`` (odd) bins, so that white noise of variance
    ``s**2`` has a flat spectrum at ``s**2``. ``downsample`` keeps every n-th bin.
    """
    if smooth_bins < 1 or smooth_bins % 2 == 0:
        raise ValueError(f"smooth_bins must be a positive odd integer, got {smooth_bins}")
    buf = as_buffer(x, sample_rate)
    n = len(buf)
    spec = np.abs(np.fft.rfft(buf.samples)) ** 2 / n
    freqs = np.fft.rfftfreq(n, 1.0 / buf.sample_rate)
    smooth = uniform_filter1d(spec, smooth_bins, mode="mirror")
    return freqs[::downsample], smooth[::downsample]
