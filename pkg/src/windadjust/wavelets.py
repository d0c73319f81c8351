"""Orthonormal two-channel filter pairs used by the packet transform."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._filters import DMEY_LO, SYM8_LO

_LOWPASS = {"sym8": SYM8_LO, "dmey": DMEY_LO}

WAVELET_NAMES = tuple(_LOWPASS)


@dataclass(frozen=True)
class Wavelet:
    """Conjugate quadrature mirror filter pair.

    ``highpass[n] = (-1)**n * lowpass[L-1-n]``; both are read-only arrays.
    """

    name: str
    lowpass: np.ndarray = field(repr=False)
    highpass: np.ndarray = field(repr=False)

    @property
    def length(self) -> int:
        return len(self.lowpass)


def qmf(lowpass) -> np.ndarray:
    lo = np.asarray(lowpass, dtype=float)
    return lo[::-1] * (-1.0) ** np.arange(len(lo))


def get_wavelet(name: str | Wavelet = "sym8") -> Wavelet:
    if isinstance(name, Wavelet):
        return name
    try:
        lo = np.array(_LOWPASS[name], dtype=float)
    except KeyError:
        raise ValueError(
            f"unknown wavelet {name!r}; choose one of {', '.join(WAVELET_NAMES)}"
        ) from None
    hi = qmf(lo)
    lo.setflags(write=False)
    hi.setflags(write=False)
    return Wavelet(name, lo, hi)
