"""Run configuration: YAML document -> validated, fully defaulted dataclasses.

Unknown keys are rejected, and every error carries the line of the offending key
when it came from a file. ``dump_config`` writes the normalized form, which
parses back to an equal ``RunConfig``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .gibbs import BetaMode, GibbsConfig, Hyperparameters
from .granger import GrangerConfig
from .synth import StudyGrid, SyntheticScenario

COMMANDS = ("simulate", "fit", "granger", "report")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = f"{path or '<config>'}:{line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


@dataclass
class PathsSection:
    input: str | None = None
    output: str = "out"


@dataclass
class HyperSection:
    omega: float = 10.0
    phi: float = 1.0
    delta: float | None = None  # None means (n + 2) / 2
    a_gamma: float = 1.0
    b_gamma: float = 1.0
    a_nu: float = 2.0
    b_nu: float = 5.0

    def build(self, n: int, beta_mode: BetaMode) -> Hyperparameters:
        return Hyperparameters.default(n, omega=self.omega, phi=self.phi, delta=self.delta, beta_mode=beta_mode,
                                       a_gamma=self.a_gamma, b_gamma=self.b_gamma, a_nu=self.a_nu, b_nu=self.b_nu)

    def kwargs(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class GibbsSection:
    sweeps: int = 2000
    burn_in: int = 500
    thin: int = 1
    chains: int = 1
    b_solver: str = "dense"
    nu_grid_size: int = 400

    def build(self, seed: int, threshold: float | None = None, store_b_draws: bool = True) -> GibbsConfig:
        return GibbsConfig(sweeps=self.sweeps, burn_in=self.burn_in, thin=self.thin, seed=seed,
                           chains=self.chains, threshold=threshold, nu_grid_size=self.nu_grid_size,
                           b_solver=self.b_solver, store_b_draws=store_b_draws)


@dataclass
class ScenarioSection:
    n: int = 10
    T: int = 50
    nu_true: float = 5.0
    edge_prob: float = 0.2
    edge_weight: float = 1.0
    sigma1: float = 1.0
    sigma2: float = 1.0

    def build(self, seed: int) -> SyntheticScenario:
        return SyntheticScenario(**dataclasses.asdict(self), seed=seed)


@dataclass
class StudySection:
    nus: list[float] = field(default_factory=lambda: [1.0, 2.0, 5.0, 10.0, 20.0])
    beta_modes: list[str] = field(default_factory=lambda: ["inverse-gamma:3.0,1.0"])

    def build(self) -> StudyGrid:
        return StudyGrid(nus=list(self.nus), beta_modes=[BetaMode.parse(m) for m in self.beta_modes])


@dataclass
class GrangerSection:
    p: int = 1
    w: int = 52
    log_returns: bool = True

    def build(self) -> GrangerConfig:
        return GrangerConfig(p=self.p, w=self.w, log_returns=self.log_returns)


@dataclass
class OutputSection:
    b_draws_npy: bool = False  # compact binary copy of every B draw
    emit_observations: bool = True  # simulate: write each cell's data for later `fit`


@dataclass
class ReportSection:
    max_lag: int = 20


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    beta_mode: str = "inverse-gamma:3.0,1.0"
    # number, "auto" (two-mode midpoint / half the edge weight), or "f-critical" (Granger 5% value)
    threshold: Any = "auto"
    paths: PathsSection = field(default_factory=PathsSection)
    hyper: HyperSection = field(default_factory=HyperSection)
    gibbs: GibbsSection = field(default_factory=GibbsSection)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    study: StudySection = field(default_factory=StudySection)
    granger: GrangerSection = field(default_factory=GrangerSection)
    output: OutputSection = field(default_factory=OutputSection)
    report: ReportSection = field(default_factory=ReportSection)

    def beta(self) -> BetaMode:
        return BetaMode.parse(self.beta_mode)


_SECTIONS = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_SECTION_TYPES = {
    "paths": PathsSection, "hyper": HyperSection, "gibbs": GibbsSection, "scenario": ScenarioSection,
    "study": StudySection, "granger": GrangerSection, "output": OutputSection, "report": ReportSection,
}


# ------------------------------------------------------------------- parsing


def _key_lines(node, prefix=()) -> dict[tuple, int]:
    """Map each key path in a composed YAML tree to its 1-based line."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (k.value,)
            out[path] = k.start_mark.line + 1
            out.update(_key_lines(v, path))
    return out


def _coerce(value, typ: str, where: str):
    t = typ.replace(" ", "")
    if value is None:
        if "None" in t:
            return None
        raise ConfigError(f"{where} must not be null")
    if t.startswith("int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if t.startswith("float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if t.startswith("bool"):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false, got {value!r}")
        return value
    if t.startswith("str"):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    if t == "list[float]":
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list")
        return [_coerce(v, "float", f"{where}[{i}]") for i, v in enumerate(value)]
    if t == "list[str]":
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list")
        return [_coerce(v, "str", f"{where}[{i}]") for i, v in enumerate(value)]
    return value


def _build_section(cls, data, name: str, lines: dict, src: str | None):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"section '{name}' must be a mapping", lines.get((name,)), src)
    known = {f.name: f for f in dataclasses.fields(cls)}
    kw = {}
    for k, v in data.items():
        line = lines.get((name, k))
        if k not in known:
            raise ConfigError(f"unknown key '{name}.{k}'", line, src)
        try:
            kw[k] = _coerce(v, str(known[k].type), f"{name}.{k}")
        except ConfigError as exc:
            raise ConfigError(str(exc), line, src) from None
    return cls(**kw)


def config_from_dict(data: dict, lines: dict | None = None, source: str | None = None,
                     command: str | None = None) -> RunConfig:
    lines = lines or {}
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config document must be a mapping", 1, source)
    for k in data:
        if k not in _SECTIONS:
            raise ConfigError(f"unknown key '{k}'", lines.get((k,)), source)
    kw: dict[str, Any] = {}
    for k, v in data.items():
        line = lines.get((k,))
        if k in _SECTION_TYPES:
            kw[k] = _build_section(_SECTION_TYPES[k], v, k, lines, source)
        elif k == "threshold":
            kw[k] = v
        else:
            try:
                kw[k] = _coerce(v, {"command": "str", "seed": "int", "beta_mode": "str"}[k], k)
            except ConfigError as exc:
                raise ConfigError(str(exc), line, source) from None
    if command is not None:
        if "command" in kw and kw["command"] != command:
            raise ConfigError(f"config command '{kw['command']}' does not match requested '{command}'",
                              lines.get(("command",)), source)
        kw["command"] = command
    if "command" not in kw:
        raise ConfigError("missing required key 'command'", None, source)
    cfg = RunConfig(**kw)
    validate(cfg, lines, source)
    return cfg


def load_config(path: str | Path, command: str | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path), command=command)


def parse_config(text: str, source: str | None = None, command: str | None = None) -> RunConfig:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML parse error: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None, source) from None
    return config_from_dict(data, _key_lines(node) if node is not None else {}, source, command)


# ---------------------------------------------------------------- validation


def validate(cfg: RunConfig, lines: dict | None = None, source: str | None = None) -> None:
    lines = lines or {}

    def fail(msg, *key):
        raise ConfigError(msg, lines.get(key), source)

    if cfg.command not in COMMANDS:
        fail(f"command must be one of {', '.join(COMMANDS)}; got '{cfg.command}'", "command")
    if cfg.seed < 0:
        fail("seed must be a nonnegative integer", "seed")
    try:
        BetaMode.parse(cfg.beta_mode)
    except ValueError as exc:
        fail(f"beta_mode: {exc}", "beta_mode")
    th = cfg.threshold
    if not (th in ("auto", "f-critical") or (isinstance(th, (int, float)) and not isinstance(th, bool))):
        fail(f"threshold must be a number, 'auto' or 'f-critical'; got {th!r}", "threshold")
    g = cfg.gibbs
    if g.sweeps <= g.burn_in:
        fail(f"gibbs.sweeps ({g.sweeps}) must exceed gibbs.burn_in ({g.burn_in})", "gibbs", "sweeps")
    if g.burn_in < 0:
        fail("gibbs.burn_in must be nonnegative", "gibbs", "burn_in")
    if g.chains < 1:
        fail("gibbs.chains must be at least 1", "gibbs", "chains")
    if g.thin < 1:
        fail("gibbs.thin must be at least 1", "gibbs", "thin")
    if g.b_solver not in ("dense", "kron"):
        fail("gibbs.b_solver must be 'dense' or 'kron'", "gibbs", "b_solver")
    try:
        HyperSection.build(cfg.hyper, 2, BetaMode())
        cfg.scenario.build(cfg.seed)
        cfg.study.build()
        cfg.granger.build()
    except ValueError as exc:
        raise ConfigError(str(exc), None, source) from None
    if cfg.report.max_lag < 1:
        fail("report.max_lag must be positive", "report", "max_lag")
    if cfg.command in ("fit", "granger", "report"):
        if not cfg.paths.input:
            fail(f"paths.input is required for '{cfg.command}'", "paths", "input")
        if not Path(cfg.paths.input).exists():
            fail(f"paths.input does not exist: {cfg.paths.input}", "paths", "input")


# ----------------------------------------------------------- serialization


def config_to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=False)


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the normalized config (key order independent)."""
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
