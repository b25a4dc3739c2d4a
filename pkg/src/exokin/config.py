"""Run configuration: strict JSON schema with defaults and env overrides."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError

ENV_PREFIX = "EXOKIN_"

# name -> (default, minimum)
RESOLUTIONS: dict[str, tuple[int, int]] = {
    "rom_samples_per_dof": (3, 2),
    "scan_grid": (8, 8),
    "scan_budget": (20000, 1),
    "sphere_samples": (64, 8),
    "sphere_bins": (1000, 100),
}


@dataclass(frozen=True)
class FilterSpec:
    name: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, **dict(self.params)}


@dataclass(frozen=True)
class RunConfig:
    arm: str | None = None
    grammar: str | None = None
    catalog: str | None = None
    out: str = "out"
    threads: int = 1
    filters: tuple[FilterSpec, ...] = ()
    resolutions: Mapping[str, int] = field(default_factory=lambda: {k: v[0] for k, v in RESOLUTIONS.items()})
    singularity_threshold: float = 0.05
    expected_mobility: int = 7
    min_rom_coverage: float = 0.0
    max_designs: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["filters"] = [f.to_dict() for f in self.filters]
        d["resolutions"] = dict(self.resolutions)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


_TOP_KEYS = tuple(RunConfig.__dataclass_fields__)
_PATH_KEYS = ("arm", "grammar", "catalog")


def _type_error(path: str, expected: str, value) -> ConfigError:
    return ConfigError(f"'{path}' must be {expected}, got {value!r}", path=path)


def _int(path, value, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise _type_error(path, "an integer", value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"'{path}' must be >= {minimum}, got {value}", path=path)
    return value


def _number(path, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _type_error(path, "a number", value)
    return float(value)


def config_from_mapping(raw: Mapping, check_paths: bool = True, base_dir: Path | None = None) -> RunConfig:
    """Validate a decoded config object; unknown keys are rejected."""
    if not isinstance(raw, Mapping):
        raise ConfigError("config must be a JSON object", path="")
    for key in raw:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown key '{key}'", path=key)
    kwargs: dict[str, Any] = {}
    for key in _PATH_KEYS:
        value = raw.get(key)
        if value is None:
            continue
        if not isinstance(value, str) or not value:
            raise _type_error(key, "a path string", value)
        path = Path(value)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        if check_paths and not path.exists():
            raise ConfigError(f"'{key}' path does not exist: {path}", path=key)
        kwargs[key] = str(path)
    if "out" in raw:
        if not isinstance(raw["out"], str) or not raw["out"]:
            raise _type_error("out", "a path string", raw["out"])
        kwargs["out"] = raw["out"]
    if "threads" in raw:
        kwargs["threads"] = _int("threads", raw["threads"], 1)
    if "filters" in raw:
        if not isinstance(raw["filters"], list):
            raise _type_error("filters", "a list", raw["filters"])
        from .grammar import FILTERS
        specs = []
        for i, f in enumerate(raw["filters"]):
            where = f"filters[{i}]"
            if isinstance(f, str):
                f = {"name": f}
            if not isinstance(f, Mapping) or not isinstance(f.get("name"), str):
                raise _type_error(where, "an object with a 'name'", f)
            if f["name"] not in FILTERS:
                raise ConfigError(f"unknown filter '{f['name']}' (known: {', '.join(sorted(FILTERS))})",
                                  path=f"{where}.name")
            specs.append(FilterSpec(f["name"], {k: v for k, v in f.items() if k != "name"}))
        kwargs["filters"] = tuple(specs)
    resolutions = {k: v[0] for k, v in RESOLUTIONS.items()}
    if "resolutions" in raw:
        res = raw["resolutions"]
        if not isinstance(res, Mapping):
            raise _type_error("resolutions", "an object", res)
        for key, value in res.items():
            if key not in RESOLUTIONS:
                raise ConfigError(f"unknown key 'resolutions.{key}'", path=f"resolutions.{key}")
            resolutions[key] = _int(f"resolutions.{key}", value, RESOLUTIONS[key][1])
    kwargs["resolutions"] = resolutions
    if "singularity_threshold" in raw:
        v = _number("singularity_threshold", raw["singularity_threshold"])
        if v <= 0:
            raise ConfigError("'singularity_threshold' must be > 0", path="singularity_threshold")
        kwargs["singularity_threshold"] = v
    if "expected_mobility" in raw:
        kwargs["expected_mobility"] = _int("expected_mobility", raw["expected_mobility"])
    if "min_rom_coverage" in raw:
        v = _number("min_rom_coverage", raw["min_rom_coverage"])
        if not 0.0 <= v <= 1.0:
            raise ConfigError("'min_rom_coverage' must lie in [0, 1]", path="min_rom_coverage")
        kwargs["min_rom_coverage"] = v
    if raw.get("max_designs") is not None:
        kwargs["max_designs"] = _int("max_designs", raw["max_designs"], 1)
    return RunConfig(**kwargs)


def parse_config(text: str, check_paths: bool = True, base_dir: Path | None = None) -> RunConfig:
    """Parse JSON config text. Syntax errors carry line and column."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    return config_from_mapping(raw, check_paths, base_dir)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.resolve().parent)


def apply_env(cfg: RunConfig, environ: Mapping[str, str] | None = None) -> RunConfig:
    """Override paths, output dir and thread count from ``EXOKIN_*`` variables."""
    environ = os.environ if environ is None else environ
    updates: dict[str, Any] = {}
    for key in (*_PATH_KEYS, "out"):
        value = environ.get(ENV_PREFIX + key.upper())
        if value:
            updates[key] = value
    threads = environ.get(ENV_PREFIX + "THREADS")
    if threads:
        try:
            updates["threads"] = _int("threads", int(threads), 1)
        except ValueError:
            raise ConfigError(f"{ENV_PREFIX}THREADS must be an integer, got {threads!r}", path="threads") from None
    return replace(cfg, **updates) if updates else cfg
