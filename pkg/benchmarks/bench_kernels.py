"""Compare the compiled kernels with the numpy fallback.

Times each kernel on typical shapes and the two end-to-end paths (detection
and adaptive denoising) with each backend swapped in.

    python benchmarks/bench_kernels.py [--seconds 60] [--repeat 5]
"""
import argparse
import timeit
from contextlib import contextmanager

import numpy as np

from windadjust import _core
from windadjust.denoise import DenoiseConfig, denoise_file
from windadjust.detect import DetectorConfig, run_pipeline
from windadjust.noisefit import QR_EPS, QR_MAX_ITER, QR_TOL
from windadjust.synth import NoiseSpec, gen_onef_noise
from windadjust.wavelets import get_wavelet
from windadjust.wpt import NodeId

NAMES = ("analysis_step", "synthesis_step", "irls_quantile", "soft_threshold_blocks")


@contextmanager
def use_backend(mod):
    saved = {n: getattr(_core, n) for n in NAMES}
    try:
        for n in NAMES:
            setattr(_core, n, getattr(mod, n))
        yield
    finally:
        for n, f in saved.items():
            setattr(_core, n, f)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def cases(seconds):
    rng = np.random.default_rng(0)
    sr = 16000
    n = int(seconds * sr)
    w = get_wavelet("sym8")
    lo, hi = np.ascontiguousarray(w.lowpass), np.ascontiguousarray(w.highpass)
    x = rng.standard_normal((16, n // 16))
    a, d = rng.standard_normal((2, 16, n // 32))
    f = np.linspace(-1.5, 1.5, 23)
    X = np.vander(f, 4, increasing=True)
    Y = rng.standard_normal((int(seconds * 10), 23)) + np.log(rng.chisquare(1, (int(seconds * 10), 23)))
    leaves = rng.standard_normal((32, n // 32))
    thresh = np.abs(rng.standard_normal((32, int(seconds * 10))))
    audio = gen_onef_noise(NoiseSpec(alpha=1.0, duration=seconds, gusts=((1, 2, 12),), seed=1))
    det = DetectorConfig(target_nodes={NodeId(5, 9)})
    return {
        "analysis_step (16 rows)": lambda: _core.analysis_step(x, lo, hi),
        "synthesis_step (16 rows)": lambda: _core.synthesis_step(a, d, lo, hi),
        f"irls_quantile ({Y.shape[0]} windows)": lambda: _core.irls_quantile(X, Y, 0.2, QR_EPS, QR_TOL, QR_MAX_ITER),
        "soft_threshold_blocks": lambda: _core.soft_threshold_blocks(leaves, thresh, 50),
        "detect pipeline": lambda: run_pipeline(audio, det_cfg=det),
        "denoise adaptive_qr": lambda: denoise_file(audio, cfg=DenoiseConfig()),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seconds", type=float, default=60.0, help="audio length for the workloads")
    ap.add_argument("--repeat", type=int, default=5, help="timing repeats (best is reported)")
    args = ap.parse_args(argv)
    if _core.compiled is None:
        print("compiled kernels not built; only the numpy backend is timed")
    backends = [("numpy", _core.fallback)]
    if _core.compiled is not None:
        backends.append(("compiled", _core.compiled))
    work = cases(args.seconds)
    times = {}
    for label, mod in backends:
        with use_backend(mod):
            for name, fn in work.items():
                times[name, label] = best(fn, args.repeat)
    print(f"{'workload':<34}" + "".join(f"{b:>12}" for b, _ in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for name in work:
        row = f"{name:<34}" + "".join(f"{times[name, b] * 1e3:>10.1f}ms" for b, _ in backends)
        if len(backends) == 2:
            row += f"{times[name, 'numpy'] / times[name, 'compiled']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
