"""Evaluation measures and chi-squared distribution functions."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy import optimize, special

DB_CAP = 120.0
_TINY = 1e-12


def chi2_cdf(x, df):
    """Regularized lower incomplete gamma ``P(df/2, x/2)``; 0 for ``x <= 0``."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    x = np.asarray(x, dtype=float)
    out = special.gammainc(df / 2.0, np.maximum(x, 0.0) / 2.0)
    return float(out) if out.ndim == 0 else out


def chi2_quantile(p, df):
    """Inverse of :func:`chi2_cdf` by a bracketed (Brent) root search."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    hi = max(1.0, float(df))
    while chi2_cdf(hi, df) < p:
        hi *= 2
    lo = 0.0
    return optimize.brentq(lambda x: chi2_cdf(x, df) - p, lo, hi,
                           xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _db(num, den):
    val = 10 * np.log10(max(num, _TINY) / max(den, _TINY))
    return float(np.clip(val, -DB_CAP, DB_CAP))


def _pair(reference, estimate):
    x = np.asarray(getattr(reference, "samples", reference), dtype=float)
    y = np.asarray(getattr(estimate, "samples", estimate), dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    ra, rb = getattr(reference, "sample_rate", None), getattr(estimate, "sample_rate", None)
    if ra is not None and rb is not None and ra != rb:
        raise ValueError(f"sample rate mismatch: {ra} vs {rb}")
    return x, y


def snr(reference, estimate) -> float:
    """``10 log10(sum x^2 / sum (x - xhat)^2)`` in dB, capped at +/-120 dB."""
    x, y = _pair(reference, estimate)
    return _db(np.dot(x, x), np.sum((x - y) ** 2))


def si_sdr(reference, estimate) -> float:
    """Scale-invariant SDR: the reference is rescaled by ``<xhat,x>/<x,x>`` first."""
    x, y = _pair(reference, estimate)
    ex = np.dot(x, x)
    if ex <= 0:
        raise ValueError("SI-SDR needs a nonzero reference")
    target = (np.dot(y, x) / ex) * x
    return _db(np.dot(target, target), np.sum((target - y) ** 2))


@dataclass
class EvalReport:
    snr_noisy_db: float
    snr_denoised_db: float
    snr_improvement_db: float
    si_sdr_noisy_db: float
    si_sdr_denoised_db: float
    si_sdr_improvement_db: float
    name: str = ""

    @classmethod
    def from_signals(cls, clean, noisy, denoised, name=""):
        a, b = snr(clean, noisy), snr(clean, denoised)
        c, d = si_sdr(clean, noisy), si_sdr(clean, denoised)
        return cls(a, b, b - a, c, d, d - c, name)


METRIC_FIELDS = tuple(f.name for f in fields(EvalReport) if f.name != "name")


def aggregate(reports) -> dict:
    """Mean and standard error of every metric (``None`` where undefined)."""
    out = {"n": len(reports)}
    for f in METRIC_FIELDS:
        v = np.array([getattr(r, f) for r in reports], dtype=float)
        out[f] = {"mean": float(v.mean()) if v.size else None,
                  "se": float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else None}
    return out


def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("name",) + METRIC_FIELDS)
    for r in reports:
        w.writerow([r.name] + [f"{getattr(r, f):.6f}" for f in METRIC_FIELDS])
    return buf.getvalue()


def reports_json(reports, provenance=None) -> str:
    doc = {"reports": [asdict(r) for r in reports], "aggregate": aggregate(reports)}
    if provenance is not None:
        doc["provenance"] = provenance
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)


@dataclass
class DetectionScore:
    precision: float
    recall: float
    f_score: float
    true_positives: int
    false_positives: int
    false_negatives: int
    fp_per_second: float
    precision_undefined: bool = False


def _interval(seg):
    if hasattr(seg, "start"):
        return float(seg.start), float(seg.end)
    return float(seg[0]), float(seg[1])


def score_detections(found, truth, duration=None) -> DetectionScore:
    """Event-level scoring with greedy one-to-one matching.

    A found segment matches the earliest unmatched truth segment that it
    overlaps by at least half the shorter of the two. With nothing found,
    precision is 1 by convention and ``precision_undefined`` is set.
    ``fp_per_second`` needs ``duration`` (seconds of audio), else it is NaN.
    """
    found = sorted(_interval(s) for s in found)
    truth = sorted(_interval(s) for s in truth)
    used = [False] * len(truth)
    tp = 0
    for fs, fe in found:
        for i, (ts, te) in enumerate(truth):
            if used[i]:
                continue
            overlap = min(fe, te) - max(fs, ts)
            shorter = min(fe - fs, te - ts)
            if shorter > 0 and overlap >= 0.5 * shorter:
                used[i] = True
                tp += 1
                break
    fp = len(found) - tp
    fn = len(truth) - tp
    undefined = len(found) == 0
    precision = 1.0 if undefined else tp / len(found)
    recall = tp / len(truth) if truth else 1.0
    f = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    rate = fp / duration if duration else float("nan")
    return DetectionScore(precision, recall, f, tp, fp, fn, rate, undefined)
