"""Run configuration: a small sectioned TOML document.

Canonical layout (every key except ``seed``, ``n_trials`` and the four
``[settings.*].theta`` values has a default)::

    seed = 42
    n_trials = 100000
    chsh_minus = "ab'"

    [source]            omega0, sigma_omega, amplitude_scale, amplitude_mode,
                        alpha_mode, alpha_fixed, tap_reflectance,
                        pd_threshold, pd_efficiency
    [detector]          defaults shared by both arms (optional)
    [detector_a]        gain, noise_sigma, discriminator_threshold,
    [detector_b]        subtract_pedestal
    [settings]          selection, fixed_pair, scan_channel, scan_start,
                        scan_end, drift_rate_a, drift_rate_b
    [settings.a]        theta, path_delay, lo_amplitude
    [settings.a_prime]  (same keys)
    [settings.b]
    [settings.b_prime]
    [output]            dir

Angles may be written as numbers (radians) or as strings such as
``"pi/2"``, ``"-3pi/4"`` or ``"0.25*pi"``.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, fields, replace

import numpy as np
import tomli

from .detector import DetectorConfig
from .experiment import ChannelSetting, ExperimentConfig, SettingsSchedule
from .source import SourceConfig
from .statistics import _minus_index
from .streams import MAX_SEED

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "dump_config", "apply_overrides", "ENV_PREFIX"]

ENV_PREFIX = "HBELL_"

_PAIR_KEYS = ("a", "a_prime", "b", "b_prime")
_PI_RE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    experiment: ExperimentConfig
    n_trials: int
    seed: int
    out_dir: str = "out"
    chsh_minus: tuple[int, int] = (0, 1)

    def __post_init__(self):
        if not isinstance(self.n_trials, int) or self.n_trials < 1:
            raise ConfigError("n_trials must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        try:
            object.__setattr__(self, "chsh_minus", _minus_index(self.chsh_minus))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"chsh_minus: {exc}") from None


def _angle(value, key):
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected an angle, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
        m = _PI_RE.match(value)
        if m:
            coef = m.group(1)
            num = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
            den = float(m.group(2)) if m.group(2) else 1.0
            return num * np.pi / den
    raise ConfigError(f"{key}: cannot read angle {value!r}")


def _number(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _take(table: dict, spec: dict, section: str) -> dict:
    """Convert the keys of ``table`` with the per-key converters in ``spec``."""
    out = {}
    for key, value in table.items():
        name = f"{section}.{key}" if section else key
        if key not in spec:
            raise ConfigError(f"unknown key {name!r}")
        out[key] = spec[key](value, name)
    return out


def _string(value, key):
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def _boolean(value, key):
    if not isinstance(value, bool):
        raise ConfigError(f"{key}: expected true/false, got {value!r}")
    return value


def _pair(value, key):
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) for v in value)):
        raise ConfigError(f"{key}: expected two integers")
    return tuple(value)


_SOURCE = {
    "omega0": _number, "sigma_omega": _number, "amplitude_scale": _number,
    "amplitude_mode": _string, "alpha_mode": _string, "alpha_fixed": _angle,
    "tap_reflectance": _number, "pd_threshold": _number, "pd_efficiency": _number,
}
_DETECTOR = {
    "gain": _number, "noise_sigma": _number,
    "discriminator_threshold": _number, "subtract_pedestal": _boolean,
}
_SETTINGS = {
    "selection": _string, "fixed_pair": _pair, "scan_channel": _string,
    "scan_start": _angle, "scan_end": _angle, "drift_rate_a": _number, "drift_rate_b": _number,
}
_CHANNEL = {"theta": _angle, "path_delay": _number, "lo_amplitude": _number}
_TOP = {"seed", "n_trials", "chsh_minus", "source", "detector", "detector_a", "detector_b", "settings", "output"}


def _section(doc: dict, name: str) -> dict:
    table = doc.get(name, {})
    if not isinstance(table, dict):
        raise ConfigError(f"{name!r} must be a section")
    return table


def _build(cls, kwargs, section):
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def _seed(value):
    if isinstance(value, str) and value.strip().isdigit():
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"seed: expected an unsigned integer, got {value!r}")
    if not 0 <= value <= MAX_SEED:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return value


def config_from_dict(doc: dict, require_seed: bool = True) -> RunConfig:
    for key in doc:
        if key not in _TOP:
            raise ConfigError(f"unknown key {key!r}")

    source = _build(SourceConfig, _take(_section(doc, "source"), _SOURCE, "source"), "source")

    shared = _take(_section(doc, "detector"), _DETECTOR, "detector")
    detectors = []
    for arm in ("detector_a", "detector_b"):
        kwargs = dict(shared, **_take(_section(doc, arm), _DETECTOR, arm))
        detectors.append(_build(DetectorConfig, kwargs, arm))

    settings_doc = dict(_section(doc, "settings"))
    channels = {}
    for key in _PAIR_KEYS:
        if key not in settings_doc:
            raise ConfigError(f"missing section [settings.{key}]")
        table = settings_doc.pop(key)
        if not isinstance(table, dict):
            raise ConfigError(f"settings.{key} must be a section")
        kwargs = _take(table, _CHANNEL, f"settings.{key}")
        if "theta" not in kwargs:
            raise ConfigError(f"missing key 'settings.{key}.theta'")
        kwargs["theta_set"] = kwargs.pop("theta")
        channels[key] = _build(ChannelSetting, kwargs, f"settings.{key}")
    schedule = _build(SettingsSchedule, dict(channels, **_take(settings_doc, _SETTINGS, "settings")), "settings")

    output = _take(_section(doc, "output"), {"dir": _string}, "output")

    if "n_trials" not in doc:
        raise ConfigError("missing key 'n_trials'")
    n_trials = doc["n_trials"]
    if isinstance(n_trials, bool) or not isinstance(n_trials, int) or n_trials < 1:
        raise ConfigError("n_trials must be a positive integer")
    if "seed" in doc:
        seed = _seed(doc["seed"])
    elif require_seed:
        raise ConfigError("missing key 'seed' (no default seed is ever chosen)")
    else:
        seed = 0
    minus = doc.get("chsh_minus", "ab'")
    if not isinstance(minus, (str, list)):
        raise ConfigError("chsh_minus: expected a setting-pair name such as \"ab'\"")

    experiment = ExperimentConfig(schedule, source, detectors[0], detectors[1])
    return RunConfig(experiment, n_trials, seed, output.get("dir", "out"), minus)


def parse_config(text: str, require_seed: bool = True) -> RunConfig:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    return config_from_dict(doc, require_seed=require_seed)


def load_config(path, require_seed: bool = True) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), require_seed=require_seed)


def apply_overrides(cfg: RunConfig, seed=None, n_trials=None, out_dir=None, environ=None) -> RunConfig:
    """Command-line values win over ``HBELL_SEED``/``HBELL_N_TRIALS``/``HBELL_OUT``,
    which win over the file."""
    env = os.environ if environ is None else environ
    changes = {}
    for key, flag, conv in (("seed", seed, _seed), ("n_trials", n_trials, int), ("out_dir", out_dir, str)):
        env_key = ENV_PREFIX + ("OUT" if key == "out_dir" else key.upper())
        value = flag if flag is not None else env.get(env_key)
        if value is not None:
            try:
                changes[key] = conv(value)
            except ValueError:
                raise ConfigError(f"{key}: bad value {value!r}") from None
    return replace(cfg, **changes) if changes else cfg


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value) if np.isfinite(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, tuple):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if hasattr(value, "value"):  # enums
        return _fmt(value.value)
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def dump_config(cfg: RunConfig) -> str:
    """Canonical text form; ``parse_config(dump_config(c)) == c``."""
    exp = cfg.experiment
    seed = str(cfg.seed) if cfg.seed < 2**63 else f'"{cfg.seed}"'
    names = {v: k for k, v in (("ab", (0, 0)), ("ab'", (0, 1)), ("a'b", (1, 0)), ("a'b'", (1, 1)))}
    lines = [f"seed = {seed}", f"n_trials = {cfg.n_trials}", f"chsh_minus = {_fmt(names[cfg.chsh_minus])}", ""]

    def section(title, obj, rename=None):
        lines.append(f"[{title}]")
        for f in fields(obj):
            value = getattr(obj, f.name)
            if value is None or f.name in {"a", "a_prime", "b", "b_prime"}:
                continue
            lines.append(f"{(rename or {}).get(f.name, f.name)} = {_fmt(value)}")
        lines.append("")

    section("source", exp.source)
    section("detector_a", exp.detector_a)
    section("detector_b", exp.detector_b)
    section("settings", exp.settings)
    for key in _PAIR_KEYS:
        section(f"settings.{key}", getattr(exp.settings, key), {"theta_set": "theta"})
    lines += ["[output]", f"dir = {_fmt(cfg.out_dir)}", ""]
    return "\n".join(lines)
