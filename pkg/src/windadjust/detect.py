"""Energy detector on adjusted target-node series with chi-squared thresholds.

A window is active when its adjusted energy exceeds the ``1 - alpha``
quantile of chi-squared with as many degrees of freedom as the window has
coefficients; active windows closer than ``max_gap`` are merged and
segments shorter than ``min_duration`` dropped.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .adjust import AdjustedSeries, adjust_target_series
from .audio import as_buffer
from .metrics import chi2_quantile
from .noisefit import FitConfig, fit_frames
from .provenance import config_hash
from .wpt import CHUNK_SAMPLES, EnergyFrames, NodeId, chunked_energies, safe_log

BASELINE_QUANTILE = 0.2


@dataclass(frozen=True)
class DetectorConfig:
    """Detector settings.

    ``min_duration`` and ``max_gap`` default to two windows and one window.
    ``window`` is also the noise-fit window.
    """

    alpha: float = 0.01
    min_duration: float = None
    max_gap: float = None
    window: float = 0.1
    target_nodes: frozenset = field(default_factory=frozenset)
    threshold_scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.window > 0:
            raise ValueError(f"window must be positive, got {self.window}")
        if self.min_duration is not None and self.min_duration < 0:
            raise ValueError(f"min_duration must be >= 0, got {self.min_duration}")
        if self.max_gap is not None and self.max_gap < 0:
            raise ValueError(f"max_gap must be >= 0, got {self.max_gap}")
        if not self.threshold_scale > 0:
            raise ValueError("threshold_scale must be positive")
        nodes = frozenset(NodeId.parse(n) if isinstance(n, str) else n for n in self.target_nodes)
        object.__setattr__(self, "target_nodes", nodes)

    @property
    def min_duration_s(self) -> float:
        return 2 * self.window if self.min_duration is None else float(self.min_duration)

    @property
    def max_gap_s(self) -> float:
        return self.window if self.max_gap is None else float(self.max_gap)


@dataclass(frozen=True)
class DetectionSegment:
    start: float
    end: float
    peak_adjusted_energy: float
    mean_adjusted_energy: float
    node: NodeId

    @property
    def duration(self):
        return self.end - self.start


def threshold_for_alpha(alpha, df=1) -> float:
    """``1 - alpha`` quantile of chi-squared with ``df`` degrees of freedom."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return chi2_quantile(1.0 - alpha, df)


def active_windows(series: AdjustedSeries, cfg: DetectorConfig) -> np.ndarray:
    if len(series) == 0:
        return np.zeros(0, dtype=bool)
    dfs = np.asarray(series.df, dtype=int)
    thr = {d: cfg.threshold_scale * threshold_for_alpha(cfg.alpha, d) for d in np.unique(dfs)}
    return series.values > np.array([thr[d] for d in dfs])


def detect_segments(series: AdjustedSeries, cfg: DetectorConfig) -> list:
    """Segments of active windows, sorted and non-overlapping."""
    act = active_windows(series, cfg)
    idx = np.flatnonzero(act)
    if idx.size == 0:
        return []
    starts = np.asarray(series.window_start, dtype=float)
    ends = starts + np.asarray(series.window_length, dtype=float)
    groups = [[idx[0], idx[0]]]
    tol = 1e-9
    for i in idx[1:]:
        if starts[i] - ends[groups[-1][1]] <= cfg.max_gap_s + tol:
            groups[-1][1] = i
        else:
            groups.append([i, i])
    out = []
    for a, b in groups:
        s, e = float(starts[a]), float(ends[b])
        if e - s + tol < cfg.min_duration_s:
            continue
        vals = series.values[a:b + 1]
        out.append(DetectionSegment(s, e, float(vals.max()), float(vals.mean()), series.node))
    return out


def baseline_log_power(frames: EnergyFrames, node: NodeId, q=BASELINE_QUANTILE) -> float:
    """Constant noise log power for the unadjusted detector.

    Taken from the ``q`` quantile of the node's window mean energies and
    rescaled by the matching quantile of ``chi2_n / n``, so that quiet stretches
    of stationary noise give an unbiased level.
    """
    n = int(np.median(frames.n_coeffs))
    mean_e = np.exp(frames.log_energy[:, frames.node_index(node)])
    level = np.quantile(mean_e, q) / (chi2_quantile(q, n) / n)
    return float(safe_log(level))


def node_series(frames: EnergyFrames, fit_cfg: FitConfig, det_cfg: DetectorConfig,
                adjust=True) -> list:
    """One :class:`AdjustedSeries` per target node, in node order."""
    nodes = sorted(det_cfg.target_nodes)
    if not nodes:
        raise ValueError("no target nodes configured")
    for node in nodes:
        if node.level != frames.level:
            raise ValueError(f"target node {node} is not on the leaf level {frames.level}")
    fit_cfg = replace(fit_cfg, exclude_nodes=fit_cfg.exclude_nodes | frozenset(nodes))
    meta = {"config_hash": config_hash({"fit": fit_cfg, "detect": det_cfg, "adjust": adjust})}
    if len(frames) == 0:
        return [adjust_target_series(frames, [], nd, meta=meta) for nd in nodes]
    if adjust:
        batch = fit_frames(frames, fit_cfg)
        logp = batch.interpolate(nodes)
        return [adjust_target_series(frames, logp[:, j], node, meta=meta, method=batch.method)
                for j, node in enumerate(nodes)]
    return [adjust_target_series(frames, np.full(len(frames), baseline_log_power(frames, node)),
                                 node, meta=meta, method="constant")
            for node in nodes]


def run_pipeline(x, wavelet="sym8", depth=5, fit_cfg: FitConfig = None,
                 det_cfg: DetectorConfig = None, adjust=True, sample_rate=None,
                 chunk=CHUNK_SAMPLES) -> list:
    """Detections for every target node, sorted by start time then node.

    ``adjust=False`` runs the unadjusted baseline, which thresholds the same
    statistic against a single noise level for the whole input.
    """
    fit_cfg = fit_cfg or FitConfig()
    det_cfg = det_cfg or DetectorConfig()
    buf = as_buffer(x, sample_rate)
    if len(buf) == 0:
        return []
    frames = chunked_energies(buf, wavelet, depth, det_cfg.window, chunk=chunk)
    if len(frames) == 0:
        return []
    segs = []
    for s in node_series(frames, fit_cfg, det_cfg, adjust):
        segs.extend(detect_segments(s, det_cfg))
    return sorted(segs, key=lambda g: (g.start, g.node))


def segments_csv(rows) -> str:
    """``rows`` is an iterable of ``(file_name, DetectionSegment)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["file", "start_s", "end_s", "peak", "mean", "node"])
    for name, s in rows:
        w.writerow([name, f"{s.start:.6f}", f"{s.end:.6f}", f"{s.peak_adjusted_energy:.6g}",
                    f"{s.mean_adjusted_energy:.6g}", str(s.node)])
    return buf.getvalue()


def segments_json(rows, provenance=None) -> str:
    doc = {"detections": [
        {"file": name, "start_s": round(s.start, 6), "end_s": round(s.end, 6),
         "peak": s.peak_adjusted_energy, "mean": s.mean_adjusted_energy, "node": str(s.node)}
        for name, s in rows]}
    if provenance is not None:
        doc["provenance"] = provenance
    return json.dumps(doc, indent=2, sort_keys=True)
