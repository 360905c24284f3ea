"""Flat key=value config files merged with command-line overrides.

Precedence: built-in defaults, then file values, then overrides. Unknown keys
are rejected by name, and domain-namespaced keys (dotted) must belong to the
domain actually selected for the run.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Optional

from .domains import DOMAIN_NAMES, DOMAIN_PARAM_KEYS
from .engine import SimulationConfig


class ConfigError(ValueError):
    """Bad config file, unknown key, bad value, or invariant violation."""


_TRUE = {"1", "true", "on", "yes"}
_FALSE = {"0", "false", "off", "no"}

ENGINE_KEYS: dict[str, type] = {
    "n_agents": int,
    "ring_radius": int,
    "discovery_budget": int,
    "patience": int,
    "decay_coefficient": float,
    "demand_mode": str,
    "supplier_memory": bool,
    "witness_protection": bool,
    "max_steps": int,
    "seed": int,
    "domain": str,
}

# short spelling accepted in files and on the command line
KEY_ALIASES = {"budget": "discovery_budget"}

_CHOICES = {"demand_mode": ("gfcf", "blind"), "domain": DOMAIN_NAMES}

_ALL_DOMAIN_KEYS = {
    key: caster
    for table in DOMAIN_PARAM_KEYS.values()
    for key, caster in table.items()
}


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ConfigError(f"{key}: expected on/off, got {raw!r}")


def _cast(key: str, caster: type, value) -> object:
    if isinstance(value, bool) or not isinstance(value, str):
        return value
    if caster is bool:
        return _parse_bool(key, value)
    try:
        return caster(value.strip())
    except ValueError:
        raise ConfigError(
            f"{key}: expected {caster.__name__}, got {value!r}") from None


def _resolve_key(key: str) -> str:
    key = KEY_ALIASES.get(key, key)
    if key in ENGINE_KEYS or key in _ALL_DOMAIN_KEYS:
        return key
    raise ConfigError(f"unknown config key {key!r}")


def read_config_file(path) -> dict[str, str]:
    """Raw key -> value strings from a flat file; # starts a comment line."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    out: dict[str, str] = {}
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        key, sep, value = text.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{p}:{lineno}: expected key=value, got {text!r}")
        out[key.strip()] = value.strip()
    return out


def parse_config(file_path: Optional[str] = None,
                 overrides: Optional[Mapping[str, object]] = None,
                 ) -> SimulationConfig:
    """Resolve defaults, file, and overrides into a validated config."""
    merged: dict[str, object] = {}
    if file_path is not None:
        for key, raw in read_config_file(file_path).items():
            merged[_resolve_key(key)] = raw
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        merged[_resolve_key(key)] = value

    engine_values: dict[str, object] = {}
    domain_params: dict[str, object] = {}
    for key, value in merged.items():
        if key in ENGINE_KEYS:
            cast = _cast(key, ENGINE_KEYS[key], value)
            if key in _CHOICES and cast not in _CHOICES[key]:
                raise ConfigError(
                    f"{key}: expected one of {_CHOICES[key]}, got {cast!r}")
            engine_values[key] = cast
        else:
            domain_params[key] = _cast(key, _ALL_DOMAIN_KEYS[key], value)

    config = SimulationConfig(domain_params=domain_params, **engine_values)
    active = DOMAIN_PARAM_KEYS[config.domain]
    for key in domain_params:
        if key not in active:
            raise ConfigError(
                f"config key {key!r} does not apply to domain {config.domain!r}")
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config


def config_as_dict(config: SimulationConfig) -> dict[str, object]:
    """Flat resolved view, suitable for a manifest."""
    out: dict[str, object] = {key: getattr(config, key) for key in ENGINE_KEYS}
    out.update(config.domain_params)
    return out
