import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from windadjust.adjust import AdjustedSeries
from windadjust.audio import AudioBuffer
from windadjust.detect import (DetectionSegment, DetectorConfig, active_windows,
                               baseline_log_power, detect_segments, node_series, run_pipeline,
                               segments_csv, segments_json, threshold_for_alpha)
from windadjust.noisefit import FitConfig
from windadjust.synth import NoiseSpec, gen_onef_noise, tone_burst
from windadjust.wpt import NodeId, chunked_energies, node_centre_frequency

SR = 16000.0
NODE = NodeId(5, 9)


def series(values, window=0.1, df=1, node=NODE):
    v = np.asarray(values, dtype=float)
    W = len(v)
    return AdjustedSeries(node, v, "log_subtraction", np.arange(W) * window, np.full(W, window),
                          v, np.ones(W), np.full(W, df))


def burst_scene(alpha=0.0, snr_db=10.0, seed=0, duration=6.0, bursts=((2.0, 1.0),)):
    """White or 1/f noise plus tone bursts at the target node centre, SNR measured in band."""
    noise = gen_onef_noise(NoiseSpec(alpha=alpha, duration=duration, seed=seed))
    f0 = node_centre_frequency(NODE, SR)
    fr = chunked_energies(noise, "sym8", 5, 0.1)
    band_power = float(np.mean(np.exp(fr.log_energy[:, NODE.index - 1])))
    amp = np.sqrt(2 * band_power * 10 ** (snr_db / 10))
    x = noise.samples.copy()
    for start, dur in bursts:
        x += tone_burst(f0, start, dur, duration, SR, amp).samples
    return AudioBuffer(x, SR)


class TestConfig:
    def test_defaults(self):
        c = DetectorConfig()
        assert c.min_duration_s == pytest.approx(0.2) and c.max_gap_s == pytest.approx(0.1)

    @pytest.mark.parametrize("kw", [dict(alpha=0), dict(alpha=1), dict(window=0),
                                    dict(min_duration=-1), dict(max_gap=-0.1),
                                    dict(threshold_scale=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            DetectorConfig(**kw)

    def test_node_strings(self):
        assert DetectorConfig(target_nodes={"5,9"}).target_nodes == frozenset({NODE})


class TestThreshold:
    def test_examples(self):
        assert threshold_for_alpha(0.05) == pytest.approx(3.841, abs=1e-3)
        assert threshold_for_alpha(0.5) == pytest.approx(0.4549, abs=1e-4)
        assert threshold_for_alpha(1 - 1e-12) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("df", [1, 8, 50])
    def test_matches_scipy(self, df):
        assert threshold_for_alpha(0.01, df) == pytest.approx(stats.chi2.ppf(0.99, df), rel=1e-8)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
    def test_out_of_range(self, alpha):
        with pytest.raises(ValueError):
            threshold_for_alpha(alpha)


class TestSegments:
    def test_calibration_rate(self):
        v = np.random.default_rng(0).chisquare(1, 10_000)
        act = active_windows(series(v), DetectorConfig(alpha=0.01, min_duration=0))
        assert act.mean() == pytest.approx(0.01, abs=0.005)

    @pytest.mark.parametrize("alpha", [0.1, 0.01])
    @pytest.mark.parametrize("df", [1, 20])
    def test_calibration_binomial_ci(self, alpha, df):
        W = 10_000
        v = np.random.default_rng(df).chisquare(df, W)
        k = active_windows(series(v, df=df), DetectorConfig(alpha=alpha)).sum()
        lo, hi = stats.binom.interval(0.99, W, alpha)
        assert lo <= k <= hi

    def test_constant_below_threshold(self):
        assert detect_segments(series(np.full(50, 2.0)), DetectorConfig()) == []

    def test_merge_and_min_duration(self):
        v = np.ones(20)
        v[[2, 3, 5]] = 100.0   # one-window gap merges
        v[10] = 100.0          # single window is too short
        v[14:17] = 100.0
        segs = detect_segments(series(v), DetectorConfig(alpha=0.01))
        assert [(round(s.start, 6), round(s.end, 6)) for s in segs] == [(0.2, 0.6), (1.4, 1.7)]
        assert segs[0].peak_adjusted_energy == 100.0
        assert segs[0].mean_adjusted_energy == pytest.approx(301.0 / 4)  # the merged gap window counts

    def test_threshold_scale(self):
        v = np.full(5, 5.0)
        assert detect_segments(series(v), DetectorConfig(alpha=0.05))
        assert not detect_segments(series(v), DetectorConfig(alpha=0.05, threshold_scale=2.0))

    @given(st.lists(st.floats(0, 30), min_size=1, max_size=80),
           st.sampled_from([0.0, 0.1, 0.3]), st.sampled_from([0.0, 0.1, 0.25]))
    def test_invariants(self, vals, gap, min_dur):
        cfg = DetectorConfig(alpha=0.05, max_gap=gap, min_duration=min_dur)
        segs = detect_segments(series(vals), cfg)
        for s in segs:
            assert s.end > s.start and s.duration >= min_dur - 1e-9
            assert isinstance(s, DetectionSegment)
        for a, b in zip(segs, segs[1:]):
            assert a.end <= b.start and b.start - a.end > gap

    @given(st.lists(st.floats(0, 30), min_size=1, max_size=80),
           st.floats(0.001, 0.5), st.floats(0.001, 0.5))
    def test_alpha_monotone(self, vals, a1, a2):
        lo, hi = sorted((a1, a2))
        s = series(vals)
        assert active_windows(s, DetectorConfig(alpha=lo)).sum() <= \
            active_windows(s, DetectorConfig(alpha=hi)).sum()


class TestPipeline:
    def test_tone_burst_localised(self):
        x = burst_scene()
        cfg = DetectorConfig(alpha=0.01, window=0.5, target_nodes={NODE})
        segs = run_pipeline(x, det_cfg=cfg)
        assert len(segs) == 1
        assert 1.5 <= segs[0].start <= 2.5 and 2.5 <= segs[0].end <= 3.5
        assert segs[0].node == NODE

    def test_stationary_noise_adjusted_equals_unadjusted(self):
        x = burst_scene(snr_db=15.0, duration=10.0, seed=3,
                        bursts=((1.0, 1.0), (4.0, 0.5), (7.2, 1.5)))
        cfg = DetectorConfig(alpha=0.001, window=0.1, target_nodes={NODE})
        a = run_pipeline(x, det_cfg=cfg)
        b = run_pipeline(x, det_cfg=cfg, adjust=False)
        assert [(s.start, s.end) for s in a] == [(s.start, s.end) for s in b]
        assert len(a) == 3

    def test_gusts_inflate_unadjusted_false_alarms(self):
        gusts = ((2.0, 2.0, 15.0), (7.0, 1.5, 12.0), (12.0, 3.0, 15.0))
        noise = gen_onef_noise(NoiseSpec(alpha=1.0, duration=16.0, gusts=gusts, seed=4))
        cfg = DetectorConfig(alpha=0.01, target_nodes={NODE}, min_duration=0)
        fr = chunked_energies(noise, "sym8", 5, 0.1)
        adj, = node_series(fr, FitConfig(), cfg, adjust=True)
        raw, = node_series(fr, FitConfig(), cfg, adjust=False)
        assert active_windows(raw, cfg).sum() >= 5 * max(1, active_windows(adj, cfg).sum())

    def test_empty_audio(self):
        cfg = DetectorConfig(target_nodes={NODE})
        assert run_pipeline(AudioBuffer(np.zeros(0), SR), det_cfg=cfg) == []

    def test_no_targets(self):
        with pytest.raises(ValueError, match="target"):
            run_pipeline(burst_scene(), det_cfg=DetectorConfig())

    def test_target_off_leaf_level(self):
        with pytest.raises(ValueError):
            run_pipeline(burst_scene(), det_cfg=DetectorConfig(target_nodes={NodeId(4, 3)}))

    def test_sorted_by_start_then_node(self):
        x = burst_scene(snr_db=20)
        cfg = DetectorConfig(alpha=0.001, target_nodes={NODE, NodeId(5, 10), NodeId(5, 8)})
        segs = run_pipeline(x, det_cfg=cfg)
        assert segs == sorted(segs, key=lambda s: (s.start, s.node))

    def test_series_metadata_hash(self):
        fr = chunked_energies(burst_scene(), "sym8", 5, 0.1)
        cfg = DetectorConfig(target_nodes={NODE})
        a, = node_series(fr, FitConfig(), cfg)
        b, = node_series(fr, FitConfig(), DetectorConfig(target_nodes={NODE}, alpha=0.02))
        assert a.meta["method"] == "OLS" and a.meta["config_hash"] != b.meta["config_hash"]

    def test_baseline_level_for_white_noise(self):
        noise = gen_onef_noise(NoiseSpec(alpha=0.0, duration=20.0, seed=6))
        fr = chunked_energies(noise, "sym8", 5, 0.1)
        # an orthonormal transform keeps unit per-coefficient power in every node
        assert baseline_log_power(fr, NODE) == pytest.approx(0.0, abs=0.05)


class TestExport:
    def _rows(self):
        x = burst_scene(snr_db=15)
        cfg = DetectorConfig(alpha=0.01, target_nodes={NODE})
        return [("a.wav", s) for s in run_pipeline(x, det_cfg=cfg)]

    def test_csv_is_deterministic(self):
        a, b = segments_csv(self._rows()), segments_csv(self._rows())
        assert a == b
        assert a.splitlines()[0] == "file,start_s,end_s,peak,mean,node"
        assert a.splitlines()[1].startswith("a.wav,")

    def test_json_with_provenance(self):
        doc = json.loads(segments_json(self._rows(), {"config_hash": "x"}))
        assert doc["provenance"] == {"config_hash": "x"}
        assert doc["detections"][0]["node"] == "(5,9)"
