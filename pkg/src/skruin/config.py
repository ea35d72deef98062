"""Experiment configuration files (TOML) with strict key checking.

Sections and keys::

    [link]     main_db, eve_db, tx_db
    [scheme]   kind ("deterministic" | "random"), p (number or list)
    [grid]     step, t_max, b_min, b_max
    [targets]  b0, t, tau, epsilon (lists)
    [mc]       enabled, trials, seed, horizon
    [nystrom]  node_step, s_max
    [output]   path, float_format

Unknown sections or keys are rejected with the line they appear on.
"""

from __future__ import annotations

import dataclasses
import math
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .errors import ConfigurationError
from .montecarlo import DEFAULT_SEED, DEFAULT_TRIALS

BUNDLED = ("fig4", "fig5", "fig6")


@dataclass
class LinkConfig:
    main_db: float = 20.0
    eve_db: float = 10.0
    tx_db: float | None = None


@dataclass
class SchemeConfig:
    kind: str = "deterministic"
    p: list[float] = field(default_factory=list)


@dataclass
class GridConfig:
    step: float = 0.01
    t_max: int = 30
    b_min: float = 0.0
    b_max: float = 60.0


@dataclass
class TargetsConfig:
    b0: list[float] = field(default_factory=list)
    t: list[int] = field(default_factory=list)
    tau: list[int] = field(default_factory=list)
    epsilon: list[float] = field(default_factory=list)


@dataclass
class MCConfig:
    enabled: bool = True
    trials: int = DEFAULT_TRIALS
    seed: int = DEFAULT_SEED
    horizon: int = 150


@dataclass
class NystromConfig:
    node_step: float = 0.1
    s_max: float | None = None


@dataclass
class OutputConfig:
    path: str | None = None
    float_format: str = ".10g"


@dataclass
class ExperimentConfig:
    link: LinkConfig = field(default_factory=LinkConfig)
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    targets: TargetsConfig = field(default_factory=TargetsConfig)
    mc: MCConfig = field(default_factory=MCConfig)
    nystrom: NystromConfig = field(default_factory=NystromConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    source: str = "<defaults>"


_SECTIONS = {f.name: f.type for f in dataclasses.fields(ExperimentConfig) if f.name != "source"}
_LIST_KEYS = {("scheme", "p"), ("targets", "b0"), ("targets", "t"), ("targets", "tau"), ("targets", "epsilon")}
_INT_KEYS = {("grid", "t_max"), ("targets", "t"), ("targets", "tau"), ("mc", "trials"), ("mc", "seed"),
             ("mc", "horizon")}
_STR_KEYS = {("scheme", "kind"), ("output", "path"), ("output", "float_format")}
_BOOL_KEYS = {("mc", "enabled")}


def _line_of(text: str, section: str, key: str | None) -> int | None:
    """Best-effort line number of ``[section]`` or of ``key`` inside it."""
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[\s*([^\]]+?)\s*\]", s)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and re.match(rf"^\"?{re.escape(key)}\"?\s*=", s):
            return n
    return None


def _where(source: str, line: int | None) -> str:
    return f"{source}:{line}" if line else source


def _coerce(section: str, key: str, value: Any, where: str):
    k = (section, key)
    def fail(msg):
        raise ConfigurationError(f"{where}: {section}.{key}: {msg}")

    def number(v, integer=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            fail(f"expected a number, got {v!r}")
        if integer:
            if isinstance(v, float) and not v.is_integer():
                fail(f"expected an integer, got {v!r}")
            return int(v)
        if not math.isfinite(v):
            fail("must be finite")
        return float(v)

    if k in _BOOL_KEYS:
        if not isinstance(value, bool):
            fail(f"expected true or false, got {value!r}")
        return value
    if k in _STR_KEYS:
        if not isinstance(value, str):
            fail(f"expected a string, got {value!r}")
        return value
    if k in _LIST_KEYS:
        items = value if isinstance(value, list) else [value]
        return [number(v, k in _INT_KEYS) for v in items]
    return number(value, k in _INT_KEYS)


def _apply(cfg: ExperimentConfig, data: dict, text: str, source: str):
    for section, body in data.items():
        if section not in _SECTIONS:
            raise ConfigurationError(f"{_where(source, _line_of(text, section, None))}: unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigurationError(f"{source}: [{section}] must be a table")
        obj = getattr(cfg, section)
        known = {f.name for f in dataclasses.fields(obj)}
        for key, value in body.items():
            where = _where(source, _line_of(text, section, key))
            if key not in known:
                raise ConfigurationError(
                    f"{where}: unknown key '{key}' in [{section}] (allowed: {', '.join(sorted(known))})"
                )
            setattr(obj, key, _coerce(section, key, value, where))


def bundled_path(name: str) -> Path:
    ref = resources.files("skruin") / "configs" / f"{name}.toml"
    return Path(str(ref))


def resolve_path(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    if name_or_path in BUNDLED:
        return bundled_path(name_or_path)
    raise ConfigurationError(f"config '{name_or_path}' not found (bundled configs: {', '.join(BUNDLED)})")


def loads(text: str, source: str = "<string>") -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{source}: {exc}") from None
    cfg = ExperimentConfig(source=source)
    _apply(cfg, data, text, source)
    return cfg


def load(name_or_path: str | None) -> ExperimentConfig:
    if name_or_path is None:
        return ExperimentConfig()
    path = resolve_path(name_or_path)
    return loads(path.read_text(encoding="utf-8"), str(path))


def apply_override(cfg: ExperimentConfig, assignment: str):
    """Apply one ``section.key=value`` override; ``value`` is parsed as TOML when possible."""
    lhs, sep, rhs = assignment.partition("=")
    section, dot, key = lhs.strip().partition(".")
    if not sep or not dot or not key:
        raise ConfigurationError(f"--set {assignment!r}: expected section.key=value")
    try:
        value = tomllib.loads(f"v = {rhs.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = rhs.strip()
    _apply(cfg, {section: {key: value}}, "", f"--set {lhs.strip()}")
