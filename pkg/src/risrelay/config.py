"""JSON run configuration: defaults, strict validation and preset expansion.

A config document has the sections ``channels``, ``geometry``,
``training``, ``sweep`` and ``presets``. User documents are merged over the
bundled defaults; unknown keys anywhere are rejected.
"""

from __future__ import annotations

import copy
import itertools
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .neural_net import TrainConfig
from .scenario import ScenarioConfig

EXPANDABLE = ("scenario", "N", "K", "m", "scheme", "pipeline")
_SCENARIO_KEYS = {"scenario", "N", "K", "m", "omega", "M", "c", "scheme", "phase_mode",
                  "detector_mode", "snr_db", "max_trials", "min_errors", "block_size",
                  "rs_use_direct", "phase_bits", "detector_normalize", "noise", "pipeline",
                  "d_sr", "theta", "seed"}


def default_config() -> dict:
    text = resources.files("risrelay").joinpath("data/default_config.json").read_text()
    return json.loads(text)


def _merge(base: dict, override: dict, path: str, free: bool = False) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base and not free:
            raise ConfigError(f"unknown config key: {where}")
        if isinstance(value, dict) and isinstance(base.get(key), dict) and key != "snr_db":
            out[key] = _merge(base[key], value, where, free=(where == "presets"))
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path=None) -> dict:
    """Bundled defaults, overlaid with the JSON document at ``path`` if given."""
    cfg = default_config()
    if path is None:
        return cfg
    try:
        user = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: top level must be an object")
    cfg = _merge(cfg, user, "")
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    for name, variants in cfg["presets"].items():
        if not isinstance(variants, list):
            raise ConfigError(f"presets.{name} must be a list of variants")
        for v in variants:
            unknown = set(v) - _SCENARIO_KEYS
            if unknown:
                raise ConfigError(f"presets.{name}: unknown keys {sorted(unknown)}")
    g = cfg["geometry"]
    if len(g["d_sr"]) != len(g["theta"]):
        raise ConfigError("geometry.d_sr and geometry.theta must have equal length")
    # build once to surface domain errors as config errors
    scenario_configs(cfg, seed=0)


def snr_grid(spec) -> tuple[float, ...]:
    if isinstance(spec, dict):
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except KeyError as exc:
            raise ConfigError(f"snr_db range needs start/stop/step, missing {exc}") from exc
        if step <= 0 or stop < start:
            raise ConfigError("snr_db range must have step > 0 and stop >= start")
        n = int(round((stop - start) / step)) + 1
        return tuple(float(round(start + i * step, 10)) for i in range(n))
    return tuple(float(s) for s in spec)


def parse_pipeline(text: str) -> tuple[str, str]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"pipeline must look like 'phase:detector', got {text!r}")
    return parts[0], parts[1]


def _base_fields(cfg: dict, seed: int) -> dict:
    ch, geo, sw = cfg["channels"], cfg["geometry"], cfg["sweep"]
    return {
        "scenario": ch["scenario"], "K": ch["K"], "m": ch["m"], "omega": ch["omega"],
        "M": ch["M"], "c": geo["c"], "relays": tuple(zip(geo["d_sr"], geo["theta"])),
        "N": sw["N"], "scheme": sw["scheme"], "phase_mode": sw["phase_mode"],
        "detector_mode": sw["detector_mode"], "snr_db": snr_grid(sw["snr_db"]),
        "max_trials": sw["max_trials"], "min_errors": sw["min_errors"],
        "block_size": sw["block_size"], "rs_use_direct": sw["rs_use_direct"],
        "phase_bits": sw["phase_bits"], "detector_normalize": sw["detector_normalize"],
        "noise": sw["noise"], "seed": seed,
    }


def _variant_configs(base: dict, variant: dict) -> list[ScenarioConfig]:
    fixed = {k: v for k, v in variant.items() if not (k in EXPANDABLE and isinstance(v, list))}
    axes = [(k, v) for k, v in variant.items() if k in EXPANDABLE and isinstance(v, list)]
    out = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        fields = dict(base)
        fields.update(fixed)
        fields.update(zip((k for k, _ in axes), combo))
        if "pipeline" in fields:
            pipe = fields.pop("pipeline")
            fields["phase_mode"], fields["detector_mode"] = (
                parse_pipeline(pipe) if isinstance(pipe, str) else tuple(pipe))
        if "snr_db" in variant:
            fields["snr_db"] = snr_grid(variant["snr_db"])
        d_sr = fields.pop("d_sr", None)
        theta = fields.pop("theta", None)
        if d_sr is not None or theta is not None:
            old = fields["relays"]
            d_sr = d_sr if d_sr is not None else [r[0] for r in old]
            theta = theta if theta is not None else [r[1] for r in old]
            fields["relays"] = tuple(zip(d_sr, theta))
        try:
            out.append(ScenarioConfig(**fields))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid scenario {variant}: {exc}") from exc
    return out


def scenario_configs(cfg: dict, preset: str | None = None, seed: int = 0,
                     pipelines=None) -> list[ScenarioConfig]:
    """Concrete scenario list for ``preset`` (or the plain sweep section).

    ``pipelines`` (list of ``"phase:detector"``) multiplies every variant.
    """
    base = _base_fields(cfg, seed)
    if preset is None:
        variants = [{}]
    else:
        if preset not in cfg["presets"]:
            raise ConfigError(f"unknown preset {preset!r}; have {sorted(cfg['presets'])}")
        variants = cfg["presets"][preset]
    configs = []
    for variant in variants:
        if pipelines:
            variant = dict(variant, pipeline=list(pipelines))
        configs.extend(_variant_configs(base, variant))
    return configs


@dataclass(frozen=True)
class TrainingSettings:
    samples: int
    train: TrainConfig
    hidden: tuple[int, ...]
    snr_policy: object = "mixture"


def training_settings(cfg: dict, target: str, seed: int, **overrides) -> TrainingSettings:
    if target not in ("relay", "detector"):
        raise ConfigError(f"training target must be relay or detector, got {target!r}")
    section = dict(cfg["training"][target])
    section.update({k: v for k, v in overrides.items() if v is not None})
    try:
        tc = TrainConfig(batch_size=int(section["batch_size"]),
                         learning_rate=float(section["learning_rate"]),
                         steps=int(section["steps"]),
                         validation_split=float(section["validation_split"]),
                         validation_frequency=int(section["validation_frequency"]),
                         seed=seed)
    except ValueError as exc:
        raise ConfigError(f"training.{target}: {exc}") from exc
    return TrainingSettings(int(section["samples"]), tc, tuple(section["hidden"]),
                            section.get("snr_policy", "mixture"))


def config_digest_fields(config: ScenarioConfig) -> dict:
    d = config.to_dict()
    d["snr_db"] = [float(x) for x in np.asarray(d["snr_db"])]
    return d
