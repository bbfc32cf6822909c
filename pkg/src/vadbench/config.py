"""Run configuration: key=value config files with command-line overrides.

Config files are UTF-8 text, one `key = value` per line, `#` comments.
Every violation is collected and reported together rather than failing on
the first.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from .corpus import NOISE_TYPES, SNR_LEVELS_DB


@dataclass
class RunConfig:
    master_seed: int = 12345
    sample_rate: int = 16000
    window_seconds: float = 0.025
    hop_seconds: float = 0.010
    snr_levels_db: tuple[float, ...] = SNR_LEVELS_DB
    noise_types: tuple[str, ...] = NOISE_TYPES
    silence_ratio: float = 0.25
    stride: int = 1
    workers: int = 1
    feature_kind: str = "mfcc"
    mel_filters: int = 24
    gt_filters: int = 64
    fft_size: int = 512
    preemphasis: float = 0.97
    context_left: int = 9
    context_right: int = 19
    hidden_units: tuple[int, ...] = (512, 512)
    learning_rate: float = 0.001
    batch_size: int = 512
    max_epochs: int = 50
    babble_streams: int = 6
    lpc_order: int = 12
    # noise split plan: how many sources feed each split, seconds per source
    train_sources: int = 18
    train_seconds_per_source: float = 200.0
    val_sources: int = 2
    val_seconds_per_source: float = 300.0
    test_sources: int = 2
    test_seconds_per_source: float = 300.0
    # speaker screening gates for noise-source corpora
    min_speaker_snr_db: float = 15.0
    min_speech_fraction: float = 0.90
    min_speech_seconds: float = 600.0

    def validate(self) -> list[str]:
        """All violations, empty when the config is usable."""
        errors = []
        if self.sample_rate <= 0:
            errors.append(f"sample_rate must be positive, got {self.sample_rate}")
        if not 0.0 < self.hop_seconds <= self.window_seconds:
            errors.append(
                f"need 0 < hop_seconds <= window_seconds, got hop={self.hop_seconds} "
                f"window={self.window_seconds}")
        if not self.snr_levels_db:
            errors.append("snr_levels_db must not be empty")
        if not self.noise_types:
            errors.append("noise_types must not be empty")
        if len(set(self.noise_types)) != len(self.noise_types):
            errors.append("noise_types contains duplicates")
        if not 0.0 <= self.silence_ratio <= 10.0:
            errors.append(f"silence_ratio out of range [0, 10]: {self.silence_ratio}")
        if self.stride < 1:
            errors.append(f"stride must be >= 1, got {self.stride}")
        if self.workers < 1:
            errors.append(f"workers must be >= 1, got {self.workers}")
        if self.feature_kind not in ("mfcc", "gfcc"):
            errors.append(f"feature_kind must be mfcc or gfcc, got {self.feature_kind!r}")
        for name in ("mel_filters", "gt_filters", "fft_size", "batch_size",
                     "babble_streams", "lpc_order", "context_left", "context_right"):
            value = getattr(self, name)
            if int(value) < 1 and name not in ("context_left", "context_right"):
                errors.append(f"{name} must be >= 1, got {value}")
            elif name in ("context_left", "context_right") and int(value) < 0:
                errors.append(f"{name} must be >= 0, got {value}")
        if self.fft_size < int(round(self.window_seconds * self.sample_rate)):
            errors.append("fft_size smaller than the analysis window")
        if not 0.0 <= self.preemphasis < 1.0:
            errors.append(f"preemphasis out of range [0, 1): {self.preemphasis}")
        if not self.hidden_units:
            errors.append("hidden_units must not be empty")
        if self.learning_rate <= 0:
            errors.append(f"learning_rate must be positive, got {self.learning_rate}")
        if not 1 <= self.max_epochs <= 50:
            errors.append(f"max_epochs must be in [1, 50], got {self.max_epochs}")
        for name in ("train_sources", "val_sources", "test_sources"):
            if getattr(self, name) < 1:
                errors.append(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("train_seconds_per_source", "val_seconds_per_source",
                     "test_seconds_per_source", "min_speech_seconds"):
            if getattr(self, name) <= 0:
                errors.append(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.min_speech_fraction <= 1.0:
            errors.append(
                f"min_speech_fraction out of range [0, 1]: {self.min_speech_fraction}")
        return errors

    def to_file_text(self) -> str:
        lines = []
        for spec in fields(self):
            value = getattr(self, spec.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            lines.append(f"{spec.name} = {value}")
        return "\n".join(lines) + "\n"


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Raw key/value strings from a config file."""
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _coerce(key: str, value: Any, default: Any) -> Any:
    """Coerce a raw string (or argparse value) to the field's default type."""
    if isinstance(default, tuple):
        element = type(default[0]) if default else str
        if isinstance(value, str):
            parts = [v.strip() for v in value.split(",") if v.strip()]
        else:
            parts = list(value)
        return tuple(element(v) for v in parts)
    if isinstance(value, str):
        return type(default)(value)
    return type(default)(value)


def load_config(path: str | Path | None = None,
                overrides: dict[str, Any] | None = None) -> RunConfig:
    """Build a RunConfig from defaults, an optional file, then overrides.

    Override values may be pre-typed (from argparse) or strings; None means
    "not given". Unknown keys, un-parseable values, and range violations are
    collected and raised together as one ConfigError.
    """
    defaults = RunConfig()
    known = {spec.name for spec in fields(RunConfig)}
    errors: list[str] = []
    merged: dict[str, Any] = {}

    def apply(source: dict[str, Any], origin: str) -> None:
        for key, value in source.items():
            if value is None:
                continue
            if key not in known:
                errors.append(f"{origin}: unknown config key {key!r}")
                continue
            try:
                merged[key] = _coerce(key, value, getattr(defaults, key))
            except (ValueError, TypeError) as exc:
                errors.append(f"{origin}: bad value for {key!r}: {exc}")

    if path is not None:
        apply(parse_config_file(path), str(path))
    if overrides:
        apply(overrides, "command line")

    # keys that failed to parse stay at their defaults, so the range checks
    # below still run and every problem is reported in one pass
    config = dataclasses.replace(defaults, **merged)
    errors.extend(config.validate())
    if errors:
        raise ConfigError(errors)
    return config


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors
