"""Acceptance criteria, one test each.

Every criterion records a one-line PASS/FAIL summary that is printed at the
end of the pytest run (see ``conftest.py``) or when this file is executed
directly.
"""
import hashlib
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from windadjust.adjust import adjust_target_series
from windadjust.audio import AudioBuffer
from windadjust.cli import main as cli_main
from windadjust.denoise import DenoiseConfig, denoise_file
from windadjust.detect import DetectorConfig, active_windows, node_series, run_pipeline
from windadjust.metrics import EvalReport, chi2_cdf, chi2_quantile, score_detections
from windadjust.noisefit import FitConfig, NoiseEstimate, fit_frames, select_degree
from windadjust.synth import (Gust, MixSpec, NoiseSpec, SceneSpec, gen_contaminated_energies,
                              gen_onef_noise, gen_scene, mix_at_snr, tone_burst)
from windadjust.wpt import (EnergyFrames, NodeId, centre_frequencies, chunked_energies,
                            node_centre_frequency, windowed_node_energies, wpt_forward,
                            wpt_inverse)

SR = 16000.0
RESULTS = {}
CRITERIA = {}


def criterion(num, title):
    def wrap(fn):
        CRITERIA[num] = (title, fn)
        return fn
    return wrap


def record(num, ok, detail):
    title = CRITERIA[num][0]
    RESULTS[num] = f"ACCEPTANCE #{num:<2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    return ok


# -- 1 -------------------------------------------------------------------------

@criterion(1, "WPT round trip and energy conservation")
def crit_wpt_round_trip():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst_rec = worst_energy = 0.0
    for i in range(50):
        n = 2 ** int(rng.integers(12, 17))
        wavelet = ("sym8", "dmey")[i % 2]
        depth = int(rng.integers(3, 9))
        x = rng.standard_normal(n)
        tree = wpt_forward(x, wavelet, depth, SR)
        y = wpt_inverse(tree).samples
        worst_rec = max(worst_rec, np.linalg.norm(y - x) / np.linalg.norm(x))
        e = np.sum(tree.leaves ** 2)
        worst_energy = max(worst_energy, abs(e - np.dot(x, x)) / np.dot(x, x))
    elapsed = time.perf_counter() - t0
    ok = worst_rec < 1e-8 and worst_energy < 1e-6 and elapsed < 30
    return ok, (f"max rel L2 error {worst_rec:.1e}, max energy error {worst_energy:.1e}, "
                f"{elapsed:.1f} s")


# -- 2 -------------------------------------------------------------------------

@criterion(2, "log-chi2 moments")
def crit_log_chi2():
    z = np.random.default_rng(7).standard_normal(100_000)
    y = np.log(z ** 2)
    m, v = y.mean(), y.var()
    ok = abs(m + 1.27036) <= 0.02 and abs(v - 4.9348) <= 0.1
    return ok, f"mean {m:.4f} (target -1.27036), variance {v:.4f} (target 4.9348)"


# -- 3 -------------------------------------------------------------------------

@criterion(3, "spectral slope recovery")
def crit_slope():
    t0 = time.perf_counter()
    parts, ok = [], True
    for i, alpha in enumerate((0.5, 1.0, 2.0)):
        x = gen_onef_noise(NoiseSpec(alpha=alpha, duration=20.0, seed=30 + i))
        fr = windowed_node_energies(wpt_forward(x, "sym8", 5), 0.1)
        b = fit_frames(fr, FitConfig(degree=1))
        est = -float(np.mean(b.beta[:, 1]))
        ok &= len(b) == 200 and abs(est - alpha) <= 0.1
        parts.append(f"alpha {alpha} -> {est:.3f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    return ok, ", ".join(parts) + f" ({elapsed:.1f} s)"


# -- 4 -------------------------------------------------------------------------

def _single_node_frames(energy, node):
    W = len(energy)
    log_e = np.zeros((W, 32))
    log_e[:, node.index - 1] = np.log(energy)
    return EnergyFrames(log_e, np.arange(W) * 0.1, np.ones(W, int), centre_frequencies(5, SR),
                        5, SR, 0.1, 1)


@criterion(4, "tail formulas after power and log subtraction")
def crit_tails():
    lam, n, node = 3.84, 100_000, NodeId(5, 9)
    rng = np.random.default_rng(4)
    parts, ok = [], True
    for c in (1.0, 3.0, 5.0):
        fr = _single_node_frames(c * rng.chisquare(1, n), node)
        est = [NoiseEstimate(node, float(np.log(c)), float(s), "QR") for s in fr.start]
        p_pow = np.mean(adjust_target_series(fr, est, node, "power_subtraction").values > lam)
        p_log = np.mean(adjust_target_series(fr, est, node, "log_subtraction").values > lam)
        expected = 1 - chi2_cdf((lam + c) / c, 1)
        ok &= abs(p_pow - expected) <= 0.01 and abs(p_log - 0.05) <= 0.01
        parts.append(f"c={c:g}: power {p_pow:.4f} vs {expected:.4f}, log {p_log:.4f}")
    return ok, "; ".join(parts)


# -- 5 -------------------------------------------------------------------------

@criterion(5, "contaminated quantile")
def crit_contaminated():
    # depth 7 gives 94 fitted subbands, enough to keep the finite-sample bias
    # of the quantile estimator well inside the tolerance
    level, W, tau = 7, 500, 0.2
    f = centre_frequencies(level, SR)
    truth = 3.0 - np.log(f)
    parts, ok = [], True
    for eps in (0.1, 0.3):
        e = gen_contaminated_energies(W * len(f), eps, seed=int(eps * 100)).reshape(W, len(f))
        fr = EnergyFrames(truth + np.log(e), np.arange(W) * 0.1, np.ones(W, int), f, level, SR,
                          0.1, 1)
        b = fit_frames(fr, FitConfig(degree=1, tau=tau), "QR")
        target = truth[b.mask] + np.log(chi2_quantile(tau / (1 - eps), 1))
        err = np.abs(b.predict(f[b.mask]).mean(axis=0) - target).max()
        ok &= err <= 0.1
        parts.append(f"eps={eps}: max |error| {err:.3f}")
    return ok, ", ".join(parts) + " log units"


# -- 6 -------------------------------------------------------------------------

_BAND_U = np.log(np.linspace(150, 6000, 200) / 1000)


def _random_cubic(rng, span=6.0):
    """Cubic in log frequency with a 6 log-unit (26 dB) range over 150 Hz to 6 kHz."""
    beta = np.array([0.0, -rng.uniform(0.5, 2), rng.choice([-1, 1]) * rng.uniform(0.5, 1.5),
                     rng.choice([-1, 1]) * rng.uniform(0.3, 0.8)])
    return beta * span / np.ptp(np.polynomial.polynomial.polyval(_BAND_U, beta))


def _shaped_noise(beta, seed, seconds=5.0):
    r = np.random.default_rng(seed)
    n = int(seconds * SR)
    X = np.fft.rfft(r.standard_normal(n))
    u = np.log(np.clip(np.fft.rfftfreq(n, 1 / SR), 150.0, 8000.0) / 1000)
    g = np.exp(0.5 * np.polynomial.polynomial.polyval(u, beta))
    g[0] = 0.0
    return AudioBuffer(np.fft.irfft(X * g, n), SR)


def _log_chi2_frames(beta, seed, W=50, n=50):
    f = centre_frequencies(5, SR)
    r = np.random.default_rng(seed)
    y = np.polynomial.polynomial.polyval(np.log(f / 1000), beta) + np.log(r.chisquare(n, (W, 32)) / n)
    return EnergyFrames(y, np.arange(W) * 0.1, np.full(W, n), f, 5, SR, 0.1, n)


@criterion(6, "AICc degree selection")
def crit_aicc():
    rates = {}
    for label, source in (("spectra", "frames"), ("dmey audio", "dmey"), ("sym8 audio", "sym8")):
        rng = np.random.default_rng(6)
        hits = {"cubic": 0, "linear": 0}
        for t in range(100):
            for kind, want in (("cubic", 3), ("linear", 1)):
                beta = _random_cubic(rng) if kind == "cubic" else np.array([0.0, -rng.uniform(0, 2.5)])
                if source == "frames":
                    fr = _log_chi2_frames(beta, 1000 * t + want)
                else:
                    fr = chunked_energies(_shaped_noise(beta, 1000 * t + want), source, 5, 0.1)
                hits[kind] += select_degree(fr, range(1, 7)) == want
        rates[label] = hits
    ok = all(rates[k][kind] >= 90 for k in ("spectra", "dmey audio") for kind in ("cubic", "linear"))
    detail = ", ".join(f"{k}: cubic->3 {v['cubic']}%, linear->1 {v['linear']}%" for k, v in rates.items())
    return ok, detail + " (sym8 audio reported, not asserted)"


# -- 7 -------------------------------------------------------------------------

def _gust_noise(duration, rng):
    gusts, t = [], 1.0
    while t < duration - 5:
        d = rng.uniform(1, 4)
        gusts.append(Gust(t, d, rng.uniform(5, 15)))
        t += d + rng.uniform(2, 8)
    return gen_onef_noise(NoiseSpec(alpha=1.0, gusts=tuple(gusts), seed=3, duration=duration))


def _add_bursts(noise, node, rng, snr_db=10.0):
    """One-second tones at the node centre every ~10 s, SNR measured against in-band noise."""
    sr, x = noise.sample_rate, noise.samples.copy()
    lo, hi = node.band(sr)
    X = np.fft.rfft(noise.samples)
    f = np.fft.rfftfreq(len(noise), 1 / sr)
    inband = np.fft.irfft(np.where((f >= lo) & (f < hi), X, 0), len(noise))
    fc, truth = node_centre_frequency(node, sr), []
    for s in np.arange(3, noise.duration - 3, 10.0):
        s += rng.uniform(-1, 1)
        i0, i1 = int(s * sr), int((s + 1) * sr)
        tb = tone_burst(fc, s, 1.0, noise.duration, sr).samples
        gain = np.sqrt(np.mean(inband[i0:i1] ** 2) * 10 ** (snr_db / 10) / np.mean(tb[i0:i1] ** 2))
        x += gain * tb
        truth.append((s, s + 1.0))
    return AudioBuffer(x, sr), truth


@criterion(7, "detector calibration and wind robustness")
def crit_detector():
    t0 = time.perf_counter()
    duration, node = 600.0, NodeId(5, 9)
    rng = np.random.default_rng(1)
    noise = _gust_noise(duration, rng)
    det = DetectorConfig(alpha=0.01, target_nodes={node})
    frames = chunked_energies(noise, "sym8", 5, det.window)
    fp_adj = int(active_windows(node_series(frames, FitConfig(), det, True)[0], det).sum())
    fp_raw = int(active_windows(node_series(frames, FitConfig(), det, False)[0], det).sum())
    mix, truth = _add_bursts(noise, node, rng)
    segs = run_pipeline(mix, "sym8", 5, FitConfig(), det)
    recall = score_detections([(s.start, s.end) for s in segs], truth, duration).recall
    elapsed = time.perf_counter() - t0
    ok = fp_raw >= 5 * max(fp_adj, 1) and recall >= 0.9 and elapsed < 300
    return ok, (f"false-positive windows unadjusted {fp_raw} vs adjusted {fp_adj} of {len(frames)}, "
                f"burst recall {recall:.2f} ({len(truth)} bursts), {elapsed:.0f} s for 10 min")


# -- 8 -------------------------------------------------------------------------

MODES = ("constant_mad", "adaptive_ols", "adaptive_qr")


def _sparse_gusts(seed, duration=10.0, alpha=1.5):
    r = np.random.default_rng(seed)
    gusts, s = [], 0.5
    while s < duration - 1.5:
        d = r.uniform(0.4, 1.5)
        gusts.append(Gust(s, min(d, duration - 0.1 - s), r.uniform(12, 15)))
        s += d + r.uniform(1.5, 4)
    return gen_onef_noise(NoiseSpec(alpha=alpha, duration=duration, gusts=tuple(gusts),
                                    seed=seed + 100))


@criterion(8, "denoising ordering")
def crit_denoise():
    levels, trials = (12.0, 0.0, -12.0), 20
    snr = {m: [] for m in MODES}
    sdr = {m: [] for m in MODES}
    per_level = {}
    for level in levels:
        for t in range(trials):
            noise = _sparse_gusts(t)
            scene, _ = gen_scene(SceneSpec(duration=10.0, n_calls=4, seed=5000 + t))
            mix, ref = mix_at_snr(MixSpec(level, scene, noise), return_reference=True)
            for m in MODES:
                rep = EvalReport.from_signals(ref, mix, denoise_file(mix, cfg=DenoiseConfig(mode=m)), "x")
                snr[m].append(rep.snr_improvement_db)
                sdr[m].append(rep.si_sdr_improvement_db)
        per_level[level] = {m: np.mean(snr[m][-trials:]) for m in MODES}
    s = {m: float(np.mean(v)) for m, v in snr.items()}
    d = {m: float(np.mean(v)) for m, v in sdr.items()}
    ok = (s["adaptive_qr"] >= s["adaptive_ols"] > s["constant_mad"] + 3
          and d["adaptive_qr"] >= d["adaptive_ols"] > d["constant_mad"])
    lv = "; ".join(f"{k:+g} dB: " + "/".join(f"{per_level[k][m]:.2f}" for m in MODES) for k in levels)
    return ok, (f"mean SNR gain const/OLS/QR {s['constant_mad']:.2f}/{s['adaptive_ols']:.2f}/"
                f"{s['adaptive_qr']:.2f} dB, SI-SDR gain {d['constant_mad']:.2f}/"
                f"{d['adaptive_ols']:.2f}/{d['adaptive_qr']:.2f} dB over {len(levels) * trials} "
                f"mixtures (per level SNR gain {lv})")


# -- 9 -------------------------------------------------------------------------

@criterion(9, "chi2 quantile table")
def crit_chi2():
    q = chi2_quantile(0.95, 1)
    p = np.concatenate([[1e-6, 1 - 1e-6], np.linspace(1e-3, 1 - 1e-3, 49)])
    worst = max(abs(chi2_cdf(chi2_quantile(pi, df), df) - pi) for df in range(1, 65) for pi in p)
    ok = abs(q - 3.8415) <= 1e-3 and worst <= 1e-8
    return ok, f"chi2_quantile(0.95, 1) = {q:.5f}, max |cdf(quantile(p)) - p| = {worst:.1e}"


# -- 10 ------------------------------------------------------------------------

def _run_all_subcommands(root):
    syn = root / "syn"
    cmds = [["synth", "-o", str(syn), "--name", "s", "--seed", "5", "--duration", "4",
             "--gusts", "1:1:12", "--calls", "2", "--snr", "0"]]
    wav = str(syn / "s.wav")
    cmds += [["detect", wav, "-o", str(root / "detect"), "--target-nodes", "5,9;5,10", "--series"],
             ["spectra", wav, "-o", str(root / "spectra"), "--periodogram"]]
    cmds += [["denoise", wav, "-o", str(root / m), "--mode", m] for m in MODES]
    cmds += [["eval", "--reference", str(syn / "s.clean.wav"), "--noisy", wav,
              "--denoised", str(root / "adaptive_qr" / "s.denoised.wav"),
              "-o", str(root / "eval" / "report.json")]]
    codes = [cli_main(c) for c in cmds]
    digests = {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
               for p in sorted(root.rglob("*")) if p.is_file()}
    return codes, digests


@criterion(10, "determinism")
def crit_determinism():
    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        codes_a, da = _run_all_subcommands(Path(a))
        codes_b, db = _run_all_subcommands(Path(b))
    kinds = sorted({Path(k).suffix for k in da})
    ok = set(codes_a + codes_b) == {0} and da == db and len(da) > 0
    return ok, f"{len(da)} output files ({', '.join(kinds)}) byte-identical across two runs"


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_acceptance(num):
    ok, detail = CRITERIA[num][1]()
    record(num, ok, detail)
    assert ok, RESULTS[num]


if __name__ == "__main__":
    failed = 0
    for num in sorted(CRITERIA):
        ok, detail = CRITERIA[num][1]()
        record(num, ok, detail)
        print(RESULTS[num], flush=True)
        failed += not ok
    sys.exit(1 if failed else 0)
