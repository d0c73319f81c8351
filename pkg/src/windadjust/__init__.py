"""Short-term noise spectrum models for wind-robust audio detection and denoising."""
from ._core import BACKEND
from ._version import __version__
from .adjust import AdjustedSeries, adjust_target_series, log_spectral_subtract, \
    power_spectral_subtract
from .audio import AudioBuffer, WavFormatError, read_wav, write_wav
from .denoise import DenoiseConfig, denoise, denoise_file, mad_sigma, mad_sigma_median, \
    soft_threshold
from .detect import DetectionSegment, DetectorConfig, detect_segments, run_pipeline, \
    threshold_for_alpha
from .metrics import EvalReport, chi2_cdf, chi2_quantile, score_detections, si_sdr, snr
from .noisefit import FitConfig, NoiseEstimate, SpectrumFit, aicc, fit_frames, fit_ols, \
    fit_quantile, interpolate_noise, select_degree, smoothed_periodogram
from .synth import Gust, MixSpec, NoiseSpec, gen_contaminated_energies, gen_onef_noise, mix_at_snr
from .wavelets import Wavelet, get_wavelet
from .wpt import EnergyFrames, NodeId, SubbandEnergyFrame, WptTree, windowed_node_energies, \
    wpt_forward, wpt_inverse

__all__ = [
    "BACKEND", "__version__",
    "AdjustedSeries", "adjust_target_series", "log_spectral_subtract", "power_spectral_subtract",
    "AudioBuffer", "WavFormatError", "read_wav", "write_wav",
    "DenoiseConfig", "denoise", "denoise_file", "mad_sigma", "mad_sigma_median", "soft_threshold",
    "DetectionSegment", "DetectorConfig", "detect_segments", "run_pipeline", "threshold_for_alpha",
    "EvalReport", "chi2_cdf", "chi2_quantile", "score_detections", "si_sdr", "snr",
    "FitConfig", "NoiseEstimate", "SpectrumFit", "aicc", "fit_frames", "fit_ols", "fit_quantile",
    "interpolate_noise", "select_degree", "smoothed_periodogram",
    "Gust", "MixSpec", "NoiseSpec", "gen_contaminated_energies", "gen_onef_noise", "mix_at_snr",
    "Wavelet", "get_wavelet",
    "EnergyFrames", "NodeId", "SubbandEnergyFrame", "WptTree", "windowed_node_energies",
    "wpt_forward", "wpt_inverse",
]
