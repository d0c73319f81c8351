"""Synthetic test material with known ground truth.

Power-law ("1/f^alpha") Gaussian noise with gust envelopes, contaminated
energy samples, and simple bird-call-like signals for mixtures.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer

RAMP_S = 0.05
F_REF = 1000.0


@dataclass(frozen=True)
class Gust:
    start: float
    duration: float
    gain_db: float

    @property
    def end(self):
        return self.start + self.duration


@dataclass(frozen=True)
class NoiseSpec:
    """Power-law noise with time-varying level.

    The noise PSD is ``base_power * (f / 1 kHz) ** -alpha`` relative to white
    noise of variance ``base_power``; each gust multiplies the power by
    ``10 ** (gain_db / 10)`` over its interval, with 50 ms linear ramps on the
    amplitude.
    """

    alpha: float = 1.0
    base_power: float = 1.0
    gusts: tuple = ()
    seed: int = 0
    duration: float = 10.0
    sample_rate: float = 16000.0

    def __post_init__(self):
        gusts = tuple(g if isinstance(g, Gust) else Gust(*g) for g in self.gusts)
        object.__setattr__(self, "gusts", gusts)
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.base_power > 0:
            raise ValueError("base_power must be positive")
        for g in gusts:
            if g.start < 0 or g.duration <= 0 or g.end > self.duration + 1e-9:
                raise ValueError(f"gust {g} lies outside [0, {self.duration}] s")


def gust_envelope(gusts, n, sample_rate, ramp=RAMP_S) -> np.ndarray:
    """Amplitude envelope (1 outside gusts)."""
    t = np.arange(n) / sample_rate
    env = np.ones(n)
    for g in gusts:
        gain = 10 ** (g.gain_db / 20)
        r = min(ramp, g.duration / 2)
        shape = np.clip(np.minimum(t - g.start, g.end - t) / r, 0.0, 1.0)
        env *= 1.0 + (gain - 1.0) * shape
    return env


def shape_spectrum(white, alpha, sample_rate):
    n = len(white)
    spec = np.fft.rfft(white)
    f = np.fft.rfftfreq(n, 1.0 / sample_rate)
    gain = np.zeros_like(f)
    gain[1:] = (f[1:] / F_REF) ** (-alpha / 2)
    return np.fft.irfft(spec * gain, n)


def gen_onef_noise(spec: NoiseSpec) -> AudioBuffer:
    rng = np.random.default_rng(spec.seed)
    n = int(round(spec.duration * spec.sample_rate))
    x = shape_spectrum(rng.standard_normal(n), spec.alpha, spec.sample_rate)
    x *= np.sqrt(spec.base_power)
    x *= gust_envelope(spec.gusts, n, spec.sample_rate)
    return AudioBuffer(x, spec.sample_rate)


@dataclass
class MixSpec:
    snr_db: float
    signal: AudioBuffer
    noise: AudioBuffer
    alignment: int = 0

    def __post_init__(self):
        if self.signal.sample_rate != self.noise.sample_rate:
            raise ValueError("signal and noise sample rates differ")
        if self.alignment < 0 or self.alignment + len(self.signal) > len(self.noise):
            raise ValueError("signal does not fit within the noise at this offset")


def mix_gain(spec: MixSpec) -> float:
    s = spec.signal.samples
    seg = spec.noise.samples[spec.alignment:spec.alignment + len(s)]
    es = float(np.dot(s, s))
    if es <= 0:
        raise ValueError("signal has zero energy; SNR is undefined")
    en = float(np.dot(seg, seg))
    return float(np.sqrt(en / es * 10 ** (spec.snr_db / 10)))


def mix_at_snr(spec: MixSpec, return_reference=False):
    """``noise + g * signal`` with ``g`` setting the overlap-region SNR to ``snr_db``.

    With ``return_reference`` the scaled, zero-padded clean signal is also
    returned (the reference for SNR metrics).
    """
    g = mix_gain(spec)
    ref = np.zeros(len(spec.noise))
    ref[spec.alignment:spec.alignment + len(spec.signal)] = g * spec.signal.samples
    mix = AudioBuffer(spec.noise.samples + ref, spec.noise.sample_rate, spec.noise.subtype)
    if return_reference:
        return mix, AudioBuffer(ref, spec.noise.sample_rate)
    return mix


def gen_contaminated_energies(n, epsilon, clean_scale=1.0, z_shift=20.0, seed=0,
                              return_mask=False):
    """Energies from ``clean_scale * chi2_1``, a fraction ``epsilon`` raised by
    ``z_shift`` log units (the contaminating component)."""
    if not 0 <= epsilon < 1:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    rng = np.random.default_rng(seed)
    clean = clean_scale * rng.chisquare(1, size=n)
    mask = rng.random(n) < epsilon
    out = np.where(mask, clean * np.exp(z_shift), clean)
    return (out, mask) if return_mask else out


# -- signals ---------------------------------------------------------------

def _hann_edges(n, ramp_n):
    env = np.ones(n)
    ramp_n = min(ramp_n, n // 2)
    if ramp_n > 0:
        w = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp_n) / ramp_n)
        env[:ramp_n] = w
        env[n - ramp_n:] = w[::-1]
    return env


def tone_burst(freq, start, duration, total, sample_rate=16000.0, amplitude=1.0,
               ramp=0.01) -> AudioBuffer:
    """Sinusoid switched on over ``[start, start + duration]`` in a ``total`` s buffer."""
    n = int(round(total * sample_rate))
    x = np.zeros(n)
    i0 = int(round(start * sample_rate))
    i1 = min(n, int(round((start + duration) * sample_rate)))
    t = np.arange(i1 - i0) / sample_rate
    x[i0:i1] = amplitude * np.sin(2 * np.pi * freq * t) * _hann_edges(i1 - i0, int(ramp * sample_rate))
    return AudioBuffer(x, sample_rate)


def chirp(f0, f1, duration, sample_rate=16000.0, amplitude=1.0) -> np.ndarray:
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    phase = 2 * np.pi * (f0 * t + (f1 - f0) * t ** 2 / (2 * duration))
    return amplitude * np.sin(phase) * _hann_edges(n, max(1, n // 8))


@dataclass(frozen=True)
class CallSpec:
    """Sequence of frequency-modulated syllables with a few harmonics."""

    f_low: float = 1800.0
    f_high: float = 3200.0
    syllable: float = 0.12
    gap: float = 0.08
    n_syllables: int = 8
    harmonics: tuple = (1.0, 0.3)
    seed: int = 0


def call_sequence(spec: CallSpec, sample_rate=16000.0) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    parts = []
    for _ in range(spec.n_syllables):
        f0 = rng.uniform(spec.f_low, spec.f_high)
        f1 = rng.uniform(spec.f_low, spec.f_high)
        syl = sum(a * chirp(f0 * (h + 1), f1 * (h + 1), spec.syllable, sample_rate)
                  for h, a in enumerate(spec.harmonics)
                  if max(f0, f1) * (h + 1) < sample_rate / 2)
        parts.append(syl)
        parts.append(np.zeros(int(round(spec.gap * sample_rate))))
    return np.concatenate(parts)


@dataclass(frozen=True)
class SceneSpec:
    """Clean foreground made of bird-call-like sequences placed at random times."""

    duration: float = 10.0
    sample_rate: float = 16000.0
    n_calls: int = 4
    rich: bool = False
    seed: int = 0


def gen_scene(spec: SceneSpec):
    """Returns ``(AudioBuffer, intervals)`` with the call intervals in seconds.

    ``rich`` scenes add overlapping calls across a wider frequency range,
    including low-frequency ones, to mimic a dawn chorus.
    """
    rng = np.random.default_rng(spec.seed)
    sr = spec.sample_rate
    n = int(round(spec.duration * sr))
    x = np.zeros(n)
    intervals = []
    n_calls = spec.n_calls * (3 if spec.rich else 1)
    for i in range(n_calls):
        if spec.rich:
            lo = rng.uniform(600, 4500)
        else:
            lo = rng.uniform(1500, 3500)
        cs = CallSpec(f_low=lo, f_high=lo * rng.uniform(1.1, 1.6),
                      syllable=rng.uniform(0.05, 0.2), gap=rng.uniform(0.03, 0.15),
                      n_syllables=int(rng.integers(3, 10)),
                      seed=int(rng.integers(2 ** 31)))
        call = call_sequence(cs, sr) * rng.uniform(0.3, 1.0)
        if len(call) >= n:
            call = call[:n - 1]
        start = int(rng.integers(0, n - len(call)))
        x[start:start + len(call)] += call
        intervals.append((start / sr, (start + len(call)) / sr))
    return AudioBuffer(x, sr), sorted(intervals)
