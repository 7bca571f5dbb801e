"""Scenario ingestion: key = value section files and manifest round-trips."""
from __future__ import annotations

import configparser
import json
from pathlib import Path

from pydantic import ValidationError

from .models import Scenario

SECTIONS = ("pump", "cavity", "oracle", "sde", "field", "sweep", "noise", "run")

_RUN_KEYS = ("mode", "seed", "threads", "out")
_SWEEP_KEY_MAP = {"axis": "axis", "from": "start", "to": "stop", "points": "points"}


class ConfigError(ValueError):
    """Configuration problem, annotated with the offending section/field."""


def _coerce(value: str):
    text = value.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_scenario(path: str | Path) -> tuple[Scenario, dict]:
    """Parse a scenario from an INI-style config file or a run manifest.

    Returns the scenario plus the extra [run] settings (mode, seed,
    threads, out) that the CLI may apply or override.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        return _from_manifest(path, text)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive (gT vs CT)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}] "
                              f"(expected one of {SECTIONS})")
    data: dict = {}
    run_extras: dict = {}
    for section in parser.sections():
        items = {k: _coerce(v) for k, v in parser.items(section)}
        if section == "run":
            for key in items:
                if key not in _RUN_KEYS:
                    raise ConfigError(f"{path}: unknown key run.{key}")
            run_extras = items
        elif section == "sweep":
            mapped = {}
            for key, val in items.items():
                if key not in _SWEEP_KEY_MAP:
                    raise ConfigError(f"{path}: unknown key sweep.{key}")
                mapped[_SWEEP_KEY_MAP[key]] = val
            data["sweep"] = mapped
        elif section == "field":
            data["field_point"] = items
        else:
            data[section] = items
    if "pump" not in data:
        raise ConfigError(f"{path}: missing required section [pump]")
    if "cavity" not in data:
        raise ConfigError(f"{path}: missing required section [cavity]")
    for key in ("mode", "seed", "threads"):
        if key in run_extras:
            data[key] = run_extras[key]
    try:
        scenario = Scenario(**data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(path, exc)) from exc
    return scenario, run_extras


def _from_manifest(path: Path, text: str) -> tuple[Scenario, dict]:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON manifest: {exc}") from exc
    config = payload.get("config", payload)
    try:
        scenario = Scenario(**config)
    except ValidationError as exc:
        raise ConfigError(_format_validation(path, exc)) from exc
    return scenario, {}


def _format_validation(path: Path, exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return f"{path}: invalid configuration: " + "; ".join(parts)
