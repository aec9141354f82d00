"""Flat ``key = value`` scenario files.

One assignment per line; ``#`` starts a comment; blank lines are ignored.
``k`` and ``t_grid`` take comma-separated lists.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from .errors import ConfigParseError, KnockoffError
from .harness import ScenarioConfig

REQUIRED = ("kind", "p", "k", "q", "amplitude", "n_signals", "replicates", "seed")
REQUIRED_REGRESSION = ("n",)
# Keys consumed by the CLI rather than by ScenarioConfig.
EXTRA_KEYS = ("n_reps", "t_grid")

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _to_bool(text):
    low = text.lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _to_lam(text):
    return text if text in ("auto", "cv") else float(text)


def _int_list(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _float_list(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _opt_int(text):
    return None if text.lower() == "none" else int(text)


_CONVERTERS = {
    "kind": str,
    "name": str,
    "engine": str,
    "p": int,
    "n": int,
    "n_signals": int,
    "replicates": int,
    "seed": int,
    "ref_size": _opt_int,
    "q": float,
    "amplitude": float,
    "rho": float,
    "noise_sd": float,
    "k": _int_list,
    "fix_design": _to_bool,
    "plus_one": _to_bool,
    "lam": _to_lam,
    "n_reps": int,
    "t_grid": _float_list,
}


@dataclass
class LoadedConfig:
    scenario: ScenarioConfig
    extras: dict
    source: str
    digest: str


def parse_config_text(text: str, source: str = "<string>") -> LoadedConfig:
    values, lines_of = {}, {}
    known = {f.name for f in fields(ScenarioConfig)} | set(EXTRA_KEYS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError("expected 'key = value'", line=lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in known:
            raise ConfigParseError("unknown key", line=lineno, field=key)
        if key in values:
            raise ConfigParseError("duplicate key", line=lineno, field=key)
        if not value:
            raise ConfigParseError("empty value", line=lineno, field=key)
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigParseError(f"bad value {value!r} ({exc})", line=lineno, field=key) from None
        lines_of[key] = lineno

    required = REQUIRED + (REQUIRED_REGRESSION if values.get("kind") == "linear-regression" else ())
    for key in required:
        if key not in values:
            raise ConfigParseError("missing required field", field=key)

    extras = {key: values.pop(key) for key in EXTRA_KEYS if key in values}
    try:
        scenario = ScenarioConfig(**values)
    except KnockoffError as exc:
        raise ConfigParseError(str(exc)) from exc
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return LoadedConfig(scenario=scenario, extras=extras, source=source, digest=digest)


def bundled_configs() -> list[str]:
    root = resources.files("multiknockoffs") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_config(path_or_name) -> LoadedConfig:
    """Read a config file, or a bundled config by name (e.g. ``test1``)."""
    path = Path(path_or_name)
    if path.is_file():
        return parse_config_text(path.read_text(encoding="utf-8"), source=str(path))
    name = str(path_or_name)
    if name in bundled_configs():
        res = resources.files("multiknockoffs") / "configs" / f"{name}.cfg"
        return parse_config_text(res.read_text(encoding="utf-8"), source=f"bundled:{name}")
    raise FileNotFoundError(f"no such config file or bundled config: {name}")
