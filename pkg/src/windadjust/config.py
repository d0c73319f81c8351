"""Flat ``key = value`` configuration files with a typed schema.

Lines are ``key = value``; ``#`` starts a comment. Keys use dotted
sections (``fit.degree``, ``detect.alpha``). Values are validated on
load and :func:`dumps` writes them back in a form that loads to the same
values.
"""
from __future__ import annotations

from dataclasses import dataclass

from .denoise import MODES as DENOISE_MODES, DenoiseConfig
from .detect import DetectorConfig
from .noisefit import METHODS, FitConfig
from .synth import Gust, NoiseSpec, SceneSpec
from .wavelets import WAVELET_NAMES
from .wpt import NodeId


class ConfigError(ValueError):
    """Invalid configuration file or value."""


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _nodes(text):
    if isinstance(text, (set, frozenset, list, tuple)):
        return frozenset(n if isinstance(n, NodeId) else NodeId.parse(n) for n in text)
    parts = [p for p in str(text).replace(" ", "").split(";") if p]
    return frozenset(NodeId.parse(p) for p in parts)


def _fmt_nodes(nodes):
    return ";".join(f"{n.level},{n.index}" for n in sorted(nodes))


def _gusts(text):
    if isinstance(text, (list, tuple)):
        return tuple(g if isinstance(g, Gust) else Gust(*map(float, g)) for g in text)
    out = []
    for part in str(text).replace(" ", "").split(";"):
        if part:
            a, b, c = part.split(":")
            out.append(Gust(float(a), float(b), float(c)))
    return tuple(out)


def _fmt_gusts(gusts):
    return ";".join(f"{g.start!r}:{g.duration!r}:{g.gain_db!r}" for g in gusts)


def _bias(text):
    if str(text).strip().lower() == "auto":
        return "auto"
    return float(text)


def _opt_float(text):
    if text is None or str(text).strip().lower() in ("", "none", "default"):
        return None
    return float(text)


@dataclass(frozen=True)
class Key:
    name: str
    parse: object
    default: object
    help: str
    choices: tuple = None
    fmt: object = None

    def convert(self, raw):
        try:
            value = self.parse(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.name}: {exc}") from None
        if self.choices is not None and value not in self.choices:
            raise ConfigError(f"{self.name}: {value!r} is not one of {', '.join(map(str, self.choices))}")
        return value

    def format(self, value):
        if self.fmt is not None:
            return self.fmt(value)
        if value is None:
            return "none"
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(value)
        return str(value)


_KEYS = [
    Key("wavelet", str, "sym8", "wavelet name", WAVELET_NAMES),
    Key("depth", int, 5, "packet tree depth"),
    Key("window", float, 0.1, "analysis window in seconds"),
    Key("seed", int, 0, "random seed"),
    Key("fit.degree", int, 3, "polynomial degree of the log-log spectrum model"),
    Key("fit.method", str.upper, "OLS", "fit method", METHODS),
    Key("fit.tau", float, 0.2, "quantile for QR fits"),
    Key("fit.band_low", float, 150.0, "lowest node centre frequency used in fits (Hz)"),
    Key("fit.band_high", float, 6000.0, "highest node centre frequency used in fits (Hz)"),
    Key("fit.bias_adjust", _bias, 0.0, "added to log noise estimates, or 'auto'"),
    Key("detect.alpha", float, 0.01, "false-alarm rate per window"),
    Key("detect.min_duration", _opt_float, None, "shortest segment kept (s); default two windows"),
    Key("detect.max_gap", _opt_float, None, "largest gap merged (s); default one window"),
    Key("detect.target_nodes", _nodes, frozenset(), "target nodes as 'j,k;j,k'", None, _fmt_nodes),
    Key("detect.threshold_scale", float, 1.0, "multiplier on the chi-squared threshold"),
    Key("detect.adjust", _bool, True, "apply noise adjustment"),
    Key("denoise.mode", str, "adaptive_qr", "shrinkage mode", DENOISE_MODES),
    Key("denoise.lambda", _opt_float, None, "threshold multiplier; default by mode"),
    Key("denoise.mad", str, "mean", "constant-mode scale estimator", ("mean", "median")),
    Key("denoise.band_low", float, 0.0, "lowest node centre frequency in denoising fits (Hz)"),
    Key("denoise.band_high", float, float("inf"), "highest node centre frequency in denoising fits (Hz)"),
    Key("noise.alpha", float, 1.0, "spectral exponent"),
    Key("noise.base_power", float, 1.0, "noise power outside gusts"),
    Key("noise.gusts", _gusts, (), "gusts as 'start:duration:gain_db;...'", None, _fmt_gusts),
    Key("synth.duration", float, 10.0, "signal duration (s)"),
    Key("synth.sample_rate", float, 16000.0, "sample rate (Hz)"),
    Key("synth.subtype", str, "FLOAT", "WAV sample format", ("FLOAT", "PCM_16")),
    Key("scene.n_calls", int, 0, "bird-call sequences to mix in (0 for noise only)"),
    Key("scene.rich", _bool, False, "dense, wide-band foreground"),
    Key("scene.snr_db", float, 0.0, "mixture SNR in dB"),
]
SCHEMA = {k.name: k for k in _KEYS}


def defaults() -> dict:
    return {k.name: k.default for k in _KEYS}


def parse_text(text, source="<config>") -> dict:
    """Validated values present in ``text`` (no defaults filled in)."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            out[key] = SCHEMA[key].convert(raw)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return out


def load(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_text(text, str(path))


def dumps(values: dict) -> str:
    lines = []
    for key in sorted(values):
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        lines.append(f"{key} = {SCHEMA[key].format(values[key])}")
    return "\n".join(lines) + "\n"


def resolve(file_values=None, overrides=None) -> dict:
    """Defaults, then file values, then non-``None`` overrides (CLI flags)."""
    out = defaults()
    out.update(file_values or {})
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        out[key] = SCHEMA[key].convert(value) if isinstance(value, str) else value
    return out


def _build(factory, **kwargs):
    try:
        return factory(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def fit_config(v: dict) -> FitConfig:
    return _build(FitConfig, degree=v["fit.degree"], method=v["fit.method"], tau=v["fit.tau"],
                  fit_band=(v["fit.band_low"], v["fit.band_high"]),
                  bias_adjust=v["fit.bias_adjust"])


def detector_config(v: dict) -> DetectorConfig:
    return _build(DetectorConfig, alpha=v["detect.alpha"], min_duration=v["detect.min_duration"],
                  max_gap=v["detect.max_gap"], window=v["window"],
                  target_nodes=v["detect.target_nodes"],
                  threshold_scale=v["detect.threshold_scale"])


def denoise_config(v: dict) -> DenoiseConfig:
    fit = _build(FitConfig, degree=v["fit.degree"], tau=v["fit.tau"],
                 fit_band=(v["denoise.band_low"], v["denoise.band_high"]),
                 bias_adjust=v["fit.bias_adjust"])
    return _build(DenoiseConfig, mode=v["denoise.mode"], lam=v["denoise.lambda"],
                  window=v["window"], fit=fit, mad=v["denoise.mad"])


def noise_spec(v: dict) -> NoiseSpec:
    return _build(NoiseSpec, alpha=v["noise.alpha"], base_power=v["noise.base_power"],
                  gusts=v["noise.gusts"], seed=v["seed"], duration=v["synth.duration"],
                  sample_rate=v["synth.sample_rate"])


def scene_spec(v: dict) -> SceneSpec:
    return _build(SceneSpec, duration=v["synth.duration"], sample_rate=v["synth.sample_rate"],
                  n_calls=v["scene.n_calls"], rich=v["scene.rich"], seed=v["seed"] + 1)
