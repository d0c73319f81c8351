"""Mono audio container and WAV I/O."""
from __future__ import annotations

import logging
import os
import tempfile
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

log = logging.getLogger(__name__)


class WavFormatError(ValueError):
    """Unreadable or unsupported WAV file."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono float samples plus sample rate (Hz).

    ``subtype`` records the on-disk encoding ("PCM_16" or "FLOAT") so that
    writers can preserve the input bit depth.
    """

    samples: np.ndarray
    sample_rate: float
    subtype: str = "FLOAT"

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1:
            raise ValueError("AudioBuffer holds mono audio; got an array of shape "
                             f"{x.shape}")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def with_samples(self, samples) -> "AudioBuffer":
        return AudioBuffer(samples, self.sample_rate, self.subtype)


def as_buffer(x, sample_rate=None) -> AudioBuffer:
    if isinstance(x, AudioBuffer):
        return x
    if sample_rate is None:
        raise ValueError("sample_rate is required when passing a raw array")
    return AudioBuffer(np.asarray(x, dtype=float), sample_rate)


def read_wav(path) -> AudioBuffer:
    """Read 16-bit PCM or 32-bit float WAV; stereo is averaged to mono."""
    if not os.path.isfile(path):
        raise WavFormatError(f"{path}: no such file")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except Exception as exc:  # scipy raises assorted types on malformed headers
        raise WavFormatError(f"{path}: cannot read WAV ({exc or type(exc).__name__})") from exc
    if data.dtype == np.int16:
        subtype = "PCM_16"
        x = data.astype(float) / 32768.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        subtype = "FLOAT"
        x = data.astype(float)
    else:
        raise WavFormatError(f"{path}: unsupported sample format {data.dtype}; "
                             "expected 16-bit PCM or 32-bit float")
    if x.ndim == 2:
        log.warning("%s: %d channels downmixed to mono by averaging",
                    path, x.shape[1])
        x = x.mean(axis=1)
    if x.size == 0:
        return AudioBuffer(np.zeros(0), rate, subtype)
    return AudioBuffer(x, rate, subtype)


def encode(buf: AudioBuffer, subtype=None):
    subtype = subtype or buf.subtype
    if subtype == "PCM_16":
        return np.clip(np.round(buf.samples * 32768.0), -32768, 32767).astype(np.int16)
    if subtype == "FLOAT":
        return buf.samples.astype(np.float32)
    raise ValueError(f"unsupported subtype {subtype!r}")


def write_wav(path, buf: AudioBuffer, subtype=None):
    """Write atomically: a temp file in the target directory is renamed into place."""
    data = encode(buf, subtype)
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(suffix=".wav.tmp", dir=directory)
    os.close(fd)
    try:
        rate = int(round(buf.sample_rate))
        wavfile.write(tmp, rate, data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
