"""Wavelet packet decomposition with frequency-ordered nodes.

Every level splits every node with the periodized orthonormal filter pair,
so each level is an orthogonal transform of the (padded) input. Nodes are
stored in frequency order: index ``k`` (1-based) of level ``j`` covers
``[F_N (k-1) / 2**j, F_N k / 2**j]``. The filterbank's natural order differs
from this because a highpass split mirrors the spectrum of its branch; the
natural index of frequency position ``k-1`` is the Gray code of ``k-1``.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .audio import AudioBuffer, as_buffer
from .wavelets import Wavelet, get_wavelet

MAX_DEPTH = 14
LOG_FLOOR = -745.0
MIN_WINDOW_COEFFS = 16


@dataclass(frozen=True, order=True)
class NodeId:
    level: int
    index: int

    def __post_init__(self):
        if self.level < 1:
            raise ValueError(f"node level must be >= 1, got {self.level}")
        if not 1 <= self.index <= 2 ** self.level:
            raise ValueError(
                f"node index {self.index} outside 1..{2 ** self.level} at level {self.level}"
            )

    def band(self, sample_rate):
        nyq = sample_rate / 2.0
        width = nyq / 2 ** self.level
        return (self.index - 1) * width, self.index * width

    def __str__(self):
        return f"({self.level},{self.index})"

    @classmethod
    def parse(cls, text: str) -> "NodeId":
        """Parse ``"j,k"`` or ``"(j,k)"``."""
        j, k = text.strip().strip("()").split(",")
        return cls(int(j), int(k))


def gray_code(n):
    n = np.asarray(n)
    return n ^ (n >> 1)


def node_centre_frequency(node: NodeId, sample_rate) -> float:
    return (sample_rate / 2.0) * (node.index - 0.5) / 2 ** node.level


def centre_frequencies(level: int, sample_rate) -> np.ndarray:
    k = np.arange(1, 2 ** level + 1)
    return (sample_rate / 2.0) * (k - 0.5) / 2 ** level


@dataclass
class WptTree:
    """Packet coefficients for levels ``0..depth``.

    ``levels[j]`` is a ``(2**j, n_j)`` array in frequency order; ``levels[0]``
    is the padded input. ``length`` is the number of input samples before
    padding and ``leaf_length`` the number of coefficients per leaf series.
    """

    depth: int
    sample_rate: float
    wavelet: Wavelet
    levels: list = field(repr=False)
    length: int

    @property
    def leaves(self) -> np.ndarray:
        return self.levels[self.depth]

    @property
    def leaf_length(self) -> int:
        return self.leaves.shape[1]

    def node(self, node: NodeId) -> np.ndarray:
        if node.level > self.depth:
            raise ValueError(f"node {node} deeper than tree depth {self.depth}")
        return self.levels[node.level][node.index - 1]

    def with_leaves(self, leaves) -> "WptTree":
        """Copy holding only the (replaced) leaf level, ready for inversion."""
        leaves = np.asarray(leaves, dtype=float)
        if leaves.shape != self.leaves.shape:
            raise ValueError(f"leaf array shape {leaves.shape} != {self.leaves.shape}")
        levels = [None] * self.depth + [leaves]
        return WptTree(self.depth, self.sample_rate, self.wavelet, levels, self.length)


def _check_depth(depth):
    if int(depth) != depth or depth < 1:
        raise ValueError(f"depth must be an integer >= 1, got {depth}")
    if depth > MAX_DEPTH:
        raise ValueError(f"depth {depth} > {MAX_DEPTH} gives degenerate bands")


def wpt_forward(x, wavelet="sym8", depth=5, sample_rate=None) -> WptTree:
    """Decompose a mono signal into ``2**depth`` frequency-ordered subbands.

    Parameters
    ----------
    x : AudioBuffer or array_like
        Mono waveform. A raw array needs ``sample_rate``.
    wavelet : str or Wavelet
        ``"sym8"`` (default) or ``"dmey"``.
    depth : int
        Number of levels, 1..14.

    Lengths that are not a multiple of ``2**depth`` are padded by symmetric
    reflection; :func:`wpt_inverse` trims the padding again.
    """
    buf = as_buffer(x, sample_rate)
    _check_depth(depth)
    w = get_wavelet(wavelet)
    n = len(buf)
    block = 2 ** depth
    if n < block:
        raise ValueError(f"signal of {n} samples too short for depth {depth} "
                         f"(needs at least {block})")
    pad = (-n) % block
    sig = np.pad(buf.samples, (0, pad), mode="symmetric") if pad else buf.samples
    cur = np.ascontiguousarray(sig, dtype=float)[None, :]
    levels = [cur.copy()]
    lo, hi = w.lowpass, w.highpass
    for j in range(1, depth + 1):
        a, d = _core.analysis_step(cur, lo, hi)
        nxt = np.empty((2 * a.shape[0], a.shape[1]))
        nxt[0::2] = a
        nxt[1::2] = d
        cur = nxt
        levels.append(cur[gray_code(np.arange(2 ** j))])
    return WptTree(depth, float(buf.sample_rate), w, levels, n)


def wpt_inverse(tree: WptTree) -> AudioBuffer:
    """Reconstruct the waveform from the leaf level of ``tree``."""
    leaves = tree.levels[tree.depth] if len(tree.levels) == tree.depth + 1 else None
    if leaves is None or np.shape(leaves)[0] != 2 ** tree.depth:
        raise ValueError("tree has no complete leaf level")
    leaves = np.asarray(leaves, dtype=float)
    cur = np.empty_like(leaves)
    cur[gray_code(np.arange(2 ** tree.depth))] = leaves
    lo, hi = tree.wavelet.lowpass, tree.wavelet.highpass
    for _ in range(tree.depth):
        cur = _core.synthesis_step(np.ascontiguousarray(cur[0::2]),
                                   np.ascontiguousarray(cur[1::2]), lo, hi)
    return AudioBuffer(cur[0, :tree.length], tree.sample_rate)


@dataclass(frozen=True)
class SubbandEnergyFrame:
    """Log mean energies of all leaf nodes in one analysis window."""

    start: float
    log_energy: np.ndarray
    centre_freqs: np.ndarray
    n_coeffs: int
    level: int


@dataclass
class EnergyFrames(Sequence):
    """Per-window node log-energies for a whole signal.

    Behaves as a sequence of :class:`SubbandEnergyFrame`; the stacked arrays
    are used directly by the batched fitting code.

    Attributes
    ----------
    log_energy : (W, K) array
        ``log(mean(Y**2))`` per window and leaf node, floored at -745.
    start : (W,) array
        Window start times in seconds.
    n_coeffs : (W,) int array
        Coefficients averaged per node in each window (the last window may
        be shorter).
    """

    log_energy: np.ndarray
    start: np.ndarray
    n_coeffs: np.ndarray
    centre_freqs: np.ndarray
    level: int
    sample_rate: float
    window: float
    window_coeffs: int

    def __len__(self):
        return self.log_energy.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return SubbandEnergyFrame(float(self.start[i]), self.log_energy[i],
                                  self.centre_freqs, int(self.n_coeffs[i]), self.level)

    def node_index(self, node: NodeId) -> int:
        if node.level != self.level:
            raise ValueError(f"node {node} is not on the leaf level {self.level}")
        return node.index - 1

    def energy(self, node: NodeId) -> np.ndarray:
        """Summed squared coefficients of ``node`` per window."""
        k = self.node_index(node)
        return np.exp(self.log_energy[:, k]) * self.n_coeffs

    @classmethod
    def from_frames(cls, frames, sample_rate, window=float("nan")):
        frames = list(frames)
        f0 = frames[0]
        return cls(np.array([f.log_energy for f in frames], dtype=float),
                   np.array([f.start for f in frames], dtype=float),
                   np.array([f.n_coeffs for f in frames], dtype=int),
                   np.asarray(f0.centre_freqs, dtype=float), f0.level,
                   float(sample_rate), window, int(f0.n_coeffs))


def safe_log(e):
    e = np.asarray(e, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.log(np.where(e > 0, e, 0.0))
    return np.maximum(out, LOG_FLOOR)


def window_coeffs(window, sample_rate, depth) -> int:
    return int(round(window * sample_rate / 2 ** depth))


def windowed_node_energies(tree: WptTree, window: float) -> EnergyFrames:
    """Average squared leaf coefficients over consecutive windows of ``window`` s.

    A trailing partial window is kept only if at least half full. Only leaf
    coefficients that lie within the unpadded signal are used.
    """
    m = window_coeffs(window, tree.sample_rate, tree.depth)
    if m < MIN_WINDOW_COEFFS:
        raise ValueError(
            f"window of {window} s holds {m} coefficients per node at depth "
            f"{tree.depth}; need at least {MIN_WINDOW_COEFFS}"
        )
    n_valid = tree.length // 2 ** tree.depth
    sq = tree.leaves[:, :n_valid] ** 2
    n_full = n_valid // m
    rem = n_valid - n_full * m
    sums = sq[:, :n_full * m].reshape(sq.shape[0], n_full, m).sum(axis=2).T
    counts = np.full(n_full, m)
    if rem and 2 * rem >= m:
        sums = np.vstack([sums, sq[:, n_full * m:].sum(axis=1)])
        counts = np.append(counts, rem)
    K = 2 ** tree.depth
    sums = sums.reshape(-1, K)
    step = m * 2 ** tree.depth / tree.sample_rate
    return EnergyFrames(
        log_energy=safe_log(sums / counts[:, None]) if len(counts) else np.zeros((0, K)),
        start=np.arange(len(counts)) * step,
        n_coeffs=counts.astype(int),
        centre_freqs=centre_frequencies(tree.depth, tree.sample_rate),
        level=tree.depth,
        sample_rate=tree.sample_rate,
        window=float(window),
        window_coeffs=m,
    )


CHUNK_SAMPLES = 2 ** 20


def chunked_energies(x, wavelet="sym8", depth=5, window=0.1, sample_rate=None,
                     chunk=CHUNK_SAMPLES) -> EnergyFrames:
    """:func:`windowed_node_energies` computed over bounded-memory chunks.

    Each chunk is extended by one window on both sides so that boundary
    wrap-around of the periodized transform stays outside the kept windows.
    Signals no longer than ``chunk`` are processed in one piece.
    """
    buf = as_buffer(x, sample_rate)
    n = len(buf)
    if n <= chunk:
        return windowed_node_energies(wpt_forward(buf, wavelet, depth), window)
    m = window_coeffs(window, buf.sample_rate, depth)
    wsamp = m * 2 ** depth
    step = max(wsamp, chunk // wsamp * wsamp)
    parts = []
    for s in range(0, n, step):
        a, b = max(0, s - wsamp), min(n, s + step + wsamp)
        tree = wpt_forward(buf.samples[a:b], wavelet, depth, buf.sample_rate)
        fr = windowed_node_energies(tree, window)
        first = (s - a) // wsamp
        keep = slice(first, first + step // wsamp)
        parts.append((fr.log_energy[keep], fr.start[keep] + a / buf.sample_rate,
                      fr.n_coeffs[keep]))
        last = fr
    return EnergyFrames(
        log_energy=np.vstack([p[0] for p in parts]),
        start=np.concatenate([p[1] for p in parts]),
        n_coeffs=np.concatenate([p[2] for p in parts]),
        centre_freqs=last.centre_freqs, level=depth, sample_rate=float(buf.sample_rate),
        window=float(window), window_coeffs=m,
    )
