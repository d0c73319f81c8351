"""Command-line interface: ``windadjust {detect,denoise,spectra,synth,eval}``.

Exit codes: 0 success, 1 processing error, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import partial
from pathlib import Path

import numpy as np

from . import config as cfgmod
from ._version import __version__
from .audio import AudioBuffer, WavFormatError, read_wav, write_wav
from .config import ConfigError
from .denoise import denoise, limit_peak, sidecar_json
from .detect import node_series, detect_segments, segments_csv, segments_json
from .metrics import EvalReport, reports_csv, reports_json, score_detections
from .noisefit import fit_frames, select_degree, smoothed_periodogram
from .provenance import provenance_block
from .synth import MixSpec, gen_onef_noise, gen_scene, mix_at_snr
from .wpt import chunked_energies

log = logging.getLogger("windadjust")

EXIT_OK, EXIT_PROCESSING, EXIT_USAGE = 0, 1, 2

_COMMON = ("wavelet", "depth", "window", "seed")


class UsageError(Exception):
    pass


def _write_text(path, text):
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(suffix=".tmp", dir=os.path.dirname(os.path.abspath(path)))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _subset(values, prefixes):
    return {k: v for k, v in values.items()
            if k in _COMMON or any(k.startswith(p + ".") for p in prefixes)}


# -- argument parsing --------------------------------------------------------

def _add_common(p, inputs=True):
    if inputs:
        p.add_argument("inputs", nargs="+", help="mono WAV files")
    p.add_argument("-o", "--output-dir", default=".", help="directory for outputs")
    p.add_argument("-c", "--config", help="key = value configuration file")
    p.add_argument("--wavelet", help="sym8 or dmey")
    p.add_argument("--depth", type=int, help="packet tree depth")
    p.add_argument("--window", type=float, help="analysis window (s)")
    p.add_argument("-j", "--jobs", type=int, default=1, help="worker processes")


def _flag(p, flag, key, **kw):
    """Option stored under config key ``key``; help text comes from the schema."""
    kw.setdefault("help", cfgmod.SCHEMA[key].help)
    if "choices" not in kw and kw.get("action") is None:
        kw.setdefault("metavar", key.rsplit(".", 1)[-1].upper())
    p.add_argument(flag, dest=key, **kw)


def _add_fit(p):
    _flag(p, "--degree", "fit.degree", type=int)
    _flag(p, "--method", "fit.method", type=str.upper, choices=("OLS", "QR"))
    _flag(p, "--tau", "fit.tau", type=float)
    _flag(p, "--bias-adjust", "fit.bias_adjust")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="windadjust",
                                 description="Wind-robust detection and denoising of field audio.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect events in target nodes")
    _add_common(p)
    _add_fit(p)
    _flag(p, "--alpha", "detect.alpha", type=float)
    _flag(p, "--target-nodes", "detect.target_nodes", metavar="NODES")
    _flag(p, "--min-duration", "detect.min_duration", type=float)
    _flag(p, "--max-gap", "detect.max_gap", type=float)
    _flag(p, "--threshold-scale", "detect.threshold_scale", type=float)
    p.add_argument("--no-adjust", action="store_const", const=False, dest="detect.adjust",
                   help="unadjusted baseline: one noise level for the whole file")
    p.add_argument("--series", action="store_true", help="also write adjusted series CSV")

    p = sub.add_parser("denoise", help="wavelet shrinkage denoising")
    _add_common(p)
    _add_fit(p)
    _flag(p, "--mode", "denoise.mode", choices=("constant_mad", "adaptive_ols", "adaptive_qr"))
    _flag(p, "--lambda", "denoise.lambda", type=float)
    _flag(p, "--mad", "denoise.mad", choices=("mean", "median"))

    p = sub.add_parser("spectra", help="per-window node spectra, fits and AICc")
    _add_common(p)
    p.add_argument("--degrees", default="1-6", help="degree range, e.g. '1-6'")
    _flag(p, "--tau", "fit.tau", type=float)
    p.add_argument("--periodogram", action="store_true",
                   help="add smoothed-periodogram log power at node centres")

    p = sub.add_parser("synth", help="generate test audio with ground truth")
    _add_common(p, inputs=False)
    p.add_argument("--name", default="synth", help="output file stem")
    _flag(p, "--seed", "seed", type=int)
    _flag(p, "--alpha", "noise.alpha", type=float)
    _flag(p, "--duration", "synth.duration", type=float)
    _flag(p, "--sample-rate", "synth.sample_rate", type=float)
    _flag(p, "--gusts", "noise.gusts", metavar="GUSTS")
    _flag(p, "--calls", "scene.n_calls", type=int, metavar="N")
    _flag(p, "--snr", "scene.snr_db", type=float, metavar="DB")

    p = sub.add_parser("eval", help="score denoising and detections")
    p.add_argument("--reference", required=True, help="clean reference WAV")
    p.add_argument("--noisy", required=True, help="noisy input WAV")
    p.add_argument("--denoised", required=True, help="denoised output WAV")
    p.add_argument("--detections", help="detections CSV to score")
    p.add_argument("--truth", help="ground-truth manifest JSON (from synth)")
    p.add_argument("-o", "--output", help="report JSON path (default stdout)")
    return ap


def _values(args, prefixes):
    file_values = cfgmod.load(args.config) if getattr(args, "config", None) else {}
    over = {k: v for k, v in vars(args).items() if k in cfgmod.SCHEMA}
    return _subset(cfgmod.resolve(file_values, over), prefixes)


def _check_io(args):
    for path in getattr(args, "inputs", []):
        if not os.path.isfile(path):
            raise UsageError(f"input not found: {path}")
    stems = [Path(p).stem for p in getattr(args, "inputs", [])]
    if len(set(stems)) != len(stems):
        raise UsageError("input file names must be distinct (outputs are named by stem)")
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory not writable: {out}")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    return out


def _map(fn, items, jobs):
    """Apply ``fn`` to each item; results come back in input order."""
    if jobs == 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items))


def _guarded(fn, item):
    try:
        return True, fn(item)
    except (WavFormatError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        msg = str(exc)
        return False, msg if msg.startswith(str(item[0])) else f"{item[0]}: {msg}"


def _safe(fn):
    return partial(_guarded, fn)


def _report(results):
    status = EXIT_OK
    for ok, payload in results:
        if not ok:
            print(f"error: {payload}", file=sys.stderr)
            status = EXIT_PROCESSING
    return status


# -- detect --------------------------------------------------------------------

def _detect_one(item):
    path, values, out_dir, write_series = item
    buf = read_wav(path)
    fit_cfg, det_cfg = cfgmod.fit_config(values), cfgmod.detector_config(values)
    if not det_cfg.target_nodes:
        raise ValueError("no target nodes given (detect.target_nodes / --target-nodes)")
    name = Path(path).name
    stem = Path(out_dir) / Path(path).stem
    segs, series = [], []
    if len(buf):
        frames = chunked_energies(buf, values["wavelet"], values["depth"], det_cfg.window)
        if len(frames):
            series = node_series(frames, fit_cfg, det_cfg, values["detect.adjust"])
            for s in series:
                segs.extend(detect_segments(s, det_cfg))
    segs.sort(key=lambda g: (g.start, g.node))
    rows = [(name, s) for s in segs]
    prov = provenance_block(values, [path], values["seed"])
    _write_text(f"{stem}.detections.csv", segments_csv(rows))
    _write_text(f"{stem}.detections.json", segments_json(rows, prov))
    if write_series:
        for s in series:
            _write_text(f"{stem}.series_{s.node.level}_{s.node.index}.csv", s.to_csv())
    return len(segs)


def cmd_detect(args):
    values = _values(args, ("fit", "detect"))
    out = _check_io(args)
    cfgmod.fit_config(values)
    det_cfg = cfgmod.detector_config(values)
    if not det_cfg.target_nodes:
        raise UsageError("no target nodes given (detect.target_nodes / --target-nodes)")
    off = [str(n) for n in sorted(det_cfg.target_nodes) if n.level != values["depth"]]
    if off:
        raise UsageError(f"target nodes {', '.join(off)} are not on the leaf level {values['depth']}")
    items = [(p, values, str(out), args.series) for p in args.inputs]
    return _report(_map(_safe(_detect_one), items, args.jobs))


# -- denoise -------------------------------------------------------------------

def _denoise_one(item):
    path, values, out_dir = item
    buf = read_wav(path)
    cfg = cfgmod.denoise_config(values)
    res = denoise(buf, values["wavelet"], values["depth"], cfg)
    audio, gain = limit_peak(res.audio) if buf.subtype == "PCM_16" else (res.audio, 1.0)
    stem = Path(out_dir) / Path(path).stem
    write_wav(f"{stem}.denoised.wav", audio, buf.subtype)
    prov = provenance_block(values, [path], values["seed"])
    _write_text(f"{stem}.denoised.json", sidecar_json(res, gain, prov))
    return gain


def cmd_denoise(args):
    values = _values(args, ("fit", "denoise"))
    out = _check_io(args)
    cfgmod.denoise_config(values)
    items = [(p, values, str(out)) for p in args.inputs]
    return _report(_map(_safe(_denoise_one), items, args.jobs))


# -- spectra -------------------------------------------------------------------

def _parse_degrees(text):
    try:
        if "-" in text:
            a, b = text.split("-")
            degs = list(range(int(a), int(b) + 1))
        else:
            degs = [int(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"invalid --degrees {text!r}") from None
    if not degs or min(degs) < 1:
        raise UsageError(f"invalid --degrees {text!r}")
    return degs


def _g(v):
    return f"{v:.10g}"


def _spectra_one(item):
    path, values, out_dir, degrees, periodogram = item
    buf = read_wav(path)
    depth, window = values["depth"], values["window"]
    frames = chunked_energies(buf, values["wavelet"], depth, window)
    if len(frames) == 0:
        raise ValueError("input shorter than half an analysis window")
    base = cfgmod.fit_config(values)
    stem = Path(out_dir) / Path(path).stem
    sr = buf.sample_rate

    cols = ["window_start", "node", "centre_hz", "log_energy"]
    pg = None
    if periodogram:
        cols.append("periodogram_log_power")
        wsamp = frames.window_coeffs * 2 ** depth
        pg = np.empty_like(frames.log_energy)
        for w, start in enumerate(frames.start):
            i0 = int(round(start * sr))
            f, p = smoothed_periodogram(buf.samples[i0:i0 + wsamp], 7, sr)
            pg[w] = np.log(np.maximum(np.interp(frames.centre_freqs, f, p), 1e-300))
    s = io.StringIO()
    w = csv.writer(s, lineterminator="\n")
    w.writerow(cols)
    for i, start in enumerate(frames.start):
        for k, fc in enumerate(frames.centre_freqs):
            row = [f"{start:.6f}", f"({depth},{k + 1})", _g(fc), _g(frames.log_energy[i, k])]
            if pg is not None:
                row.append(_g(pg[i, k]))
            w.writerow(row)
    _write_text(f"{stem}.spectra.csv", s.getvalue())

    maxd = max(degrees)
    s = io.StringIO()
    w = csv.writer(s, lineterminator="\n")
    w.writerow(["window_start", "method", "degree", "slope"]
               + [f"beta_{i}" for i in range(maxd + 1)] + ["sse", "aicc", "converged"])
    mean_aicc = {}
    for method in ("OLS", "QR"):
        for d in degrees:
            batch = fit_frames(frames, replace(base, degree=d, method=method))
            if method == "OLS":
                mean_aicc[d] = float(np.mean(batch.aicc))
            betas = batch.beta
            for i in range(len(batch)):
                b = list(betas[i]) + [None] * (maxd - d)
                w.writerow([f"{frames.start[i]:.6f}", method, d, _g(betas[i][1])]
                           + ["" if v is None else _g(v) for v in b]
                           + [_g(batch.sse[i]), _g(batch.aicc[i]), int(batch.converged[i])])
    _write_text(f"{stem}.fits.csv", s.getvalue())

    chosen = select_degree(frames, degrees, replace(base, method="OLS"))
    s = io.StringIO()
    w = csv.writer(s, lineterminator="\n")
    w.writerow(["degree", "mean_aicc", "selected"])
    for d in degrees:
        w.writerow([d, _g(mean_aicc[d]), int(d == chosen)])
    _write_text(f"{stem}.aicc.csv", s.getvalue())
    doc = {"selected_degree": chosen, "n_windows": len(frames),
           "provenance": provenance_block(values, [path], values["seed"])}
    _write_text(f"{stem}.spectra.json", json.dumps(doc, indent=2, sort_keys=True))
    return chosen


def cmd_spectra(args):
    values = _values(args, ("fit",))
    out = _check_io(args)
    cfgmod.fit_config(values)
    degrees = _parse_degrees(args.degrees)
    items = [(p, values, str(out), degrees, args.periodogram) for p in args.inputs]
    return _report(_map(_safe(_spectra_one), items, args.jobs))


# -- synth ---------------------------------------------------------------------

def cmd_synth(args):
    values = _values(args, ("noise", "synth", "scene"))
    out = _check_io(args)
    spec = cfgmod.noise_spec(values)
    noise = gen_onef_noise(spec)
    subtype = values["synth.subtype"]
    stem = out / args.name
    manifest = {
        "sample_rate": spec.sample_rate,
        "duration": spec.duration,
        "alpha": spec.alpha,
        "gusts": [{"start": g.start, "end": g.end, "gain_db": g.gain_db} for g in spec.gusts],
        "calls": [],
        "files": {"mixture": f"{args.name}.wav"},
    }
    mix = noise
    if values["scene.n_calls"] > 0:
        clean, intervals = gen_scene(cfgmod.scene_spec(values))
        mix, ref = mix_at_snr(MixSpec(values["scene.snr_db"], clean, noise), return_reference=True)
        manifest["calls"] = [{"start": a, "end": b} for a, b in intervals]
        manifest["snr_db"] = values["scene.snr_db"]
        manifest["files"].update(reference=f"{args.name}.clean.wav",
                                 noise=f"{args.name}.noise.wav")
        write_wav(f"{stem}.clean.wav", AudioBuffer(ref.samples, ref.sample_rate), subtype)
        write_wav(f"{stem}.noise.wav", noise, subtype)
    write_wav(f"{stem}.wav", AudioBuffer(mix.samples, mix.sample_rate), subtype)
    manifest["provenance"] = provenance_block(values, [], values["seed"])
    _write_text(f"{stem}.json", json.dumps(manifest, indent=2, sort_keys=True))
    return EXIT_OK


# -- eval ----------------------------------------------------------------------

def _read_detections(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return [(float(r["start_s"]), float(r["end_s"])) for r in csv.DictReader(fh)]


def _read_truth(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return [(c["start"], c["end"]) for c in doc.get("calls", [])]


def cmd_eval(args):
    for p in (args.reference, args.noisy, args.denoised, args.detections, args.truth):
        if p is not None and not os.path.isfile(p):
            raise UsageError(f"input not found: {p}")
    if (args.detections is None) != (args.truth is None):
        raise UsageError("--detections and --truth go together")
    ref, noisy, den = (read_wav(p) for p in (args.reference, args.noisy, args.denoised))
    report = EvalReport.from_signals(ref, noisy, den, Path(args.denoised).name)
    inputs = [args.reference, args.noisy, args.denoised]
    doc = json.loads(reports_json([report]))
    if args.detections:
        inputs += [args.detections, args.truth]
        sc = score_detections(_read_detections(args.detections), _read_truth(args.truth),
                              ref.duration)
        doc["detection"] = {k: (None if isinstance(v, float) and np.isnan(v) else v)
                            for k, v in vars(sc).items()}
    doc["provenance"] = provenance_block({}, inputs, None)
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        _write_text(args.output, text)
        _write_text(str(Path(args.output).with_suffix(".csv")), reports_csv([report]))
    else:
        print(text)
    return EXIT_OK


COMMANDS = {"detect": cmd_detect, "denoise": cmd_denoise, "spectra": cmd_spectra,
            "synth": cmd_synth, "eval": cmd_eval}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WavFormatError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROCESSING


if __name__ == "__main__":
    sys.exit(main())
