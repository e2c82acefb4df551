"""Run configuration: JSON loading, defaults and validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .classical import Scenario
from .expr import ExprError, parse
from .ode import IntegratorConfig
from .scenarios import CHECKS, DEFAULT_THRESHOLDS, get_scenario

__all__ = ["ConfigError", "ErmakovSeeds", "RunConfig", "Seeds", "config_from_dict", "load_config"]

_SCENARIO_KEYS = ("omega_sq", "force", "t0", "t1", "samples")
_TOP_KEYS = {"scenario", "integrator", "seeds", "checks", "thresholds", "hbar", "output", *_SCENARIO_KEYS}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


@dataclass(frozen=True)
class ErmakovSeeds:
    w2: float = 1.0
    rho0: float | None = None  # None: stationary amplitude (w2 / omega_sq(t0)) ** 0.25
    rho_dot0: float = 0.0


@dataclass(frozen=True)
class Seeds:
    q0: float = 1.0
    p0: float = 0.0
    beta0: complex = 0j
    beta_dot0: complex = 1 + 0j
    gamma: tuple[float, float, float] = (1.0, 0.0, 0.0)
    sigma: tuple[complex, complex] = (0j, 0j)
    ermakov: ErmakovSeeds = field(default_factory=ErmakovSeeds)


@dataclass(frozen=True, eq=False)
class RunConfig:
    scenario: Scenario
    source: dict  # scenario definition as given, echoed into reports
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    seeds: Seeds = field(default_factory=Seeds)
    checks: tuple[str, ...] = CHECKS
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    hbar: float = 1.0
    output_path: str | None = None
    output_format: str = "json"

    def threshold(self, check: str) -> float:
        return self.thresholds[check]


def _number(value, name, *, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", name)
    if not math.isfinite(value):
        raise ConfigError("must be finite", name)
    if integer and int(value) != value:
        raise ConfigError(f"expected an integer, got {value!r}", name)
    if positive and value <= 0:
        raise ConfigError(f"must be > 0, got {value!r}", name)
    return int(value) if integer else float(value)


def _complex(value, name):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError("expected [re, im]", name)
        return complex(_number(value[0], f"{name}[0]"), _number(value[1], f"{name}[1]"))
    return complex(_number(value, name))


def _mapping(value, name, allowed):
    if not isinstance(value, dict):
        raise ConfigError("expected an object", name)
    unknown = sorted(set(value) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(unknown)}", name)
    return value


def _expression(text, name):
    if not isinstance(text, str):
        raise ConfigError("expected an expression string", name)
    try:
        return parse(text)
    except ExprError as exc:
        raise ConfigError(str(exc), name) from None


def _scenario(data: dict):
    given = data.get("scenario")
    builtin = None
    flat = {k: data[k] for k in _SCENARIO_KEYS if k in data}
    if isinstance(given, str):
        try:
            builtin = get_scenario(given)
        except KeyError as exc:
            raise ConfigError(exc.args[0], "scenario") from None
        base = {"name": builtin.name, "omega_sq": builtin.omega_sq, "force": builtin.force,
                "t0": builtin.t0, "t1": builtin.t1}
        base.update(flat)
        prefix = ""
    elif given is None:
        base = flat
        prefix = ""
    else:
        if flat:
            raise ConfigError("give scenario fields either at top level or under 'scenario', not both", "scenario")
        base = dict(_mapping(given, "scenario", (*_SCENARIO_KEYS, "name")))
        prefix = "scenario."

    for key in ("omega_sq", "t0", "t1"):
        if key not in base:
            raise ConfigError("missing required field", prefix + key)
    source = {
        "name": base.get("name", ""),
        "omega_sq": base["omega_sq"],
        "force": base.get("force", "0"),
        "t0": _number(base["t0"], prefix + "t0"),
        "t1": _number(base["t1"], prefix + "t1"),
        "samples": _number(base.get("samples", 2001), prefix + "samples", integer=True),
    }
    if source["samples"] < 2:
        raise ConfigError(f"need at least 2 samples, got {source['samples']}", prefix + "samples")
    if source["t1"] <= source["t0"]:
        raise ConfigError("t1 must be greater than t0", prefix + "t1")
    scenario = Scenario(
        _expression(source["omega_sq"], prefix + "omega_sq"),
        _expression(source["force"], prefix + "force"),
        t0=source["t0"], t1=source["t1"], samples=source["samples"], name=source["name"],
    )
    return scenario, source, builtin


def _seeds(raw, defaults: dict) -> Seeds:
    merged = dict(defaults)
    if raw is not None:
        merged.update(_mapping(raw, "seeds", ("q0", "p0", "beta0", "beta_dot0", "gamma", "sigma", "ermakov")))
    kwargs = {}
    for key in ("q0", "p0"):
        if key in merged:
            kwargs[key] = _number(merged[key], f"seeds.{key}")
    for key in ("beta0", "beta_dot0"):
        if key in merged:
            kwargs[key] = _complex(merged[key], f"seeds.{key}")
    if "gamma" in merged:
        g = merged["gamma"]
        if not isinstance(g, (list, tuple)) or len(g) != 3:
            raise ConfigError("expected [gamma0, gamma_dot0, gamma_ddot0]", "seeds.gamma")
        kwargs["gamma"] = tuple(_number(x, f"seeds.gamma[{i}]") for i, x in enumerate(g))
    if "sigma" in merged:
        s = merged["sigma"]
        if not isinstance(s, (list, tuple)) or len(s) != 2:
            raise ConfigError("expected [sigma0, sigma_dot0]", "seeds.sigma")
        kwargs["sigma"] = tuple(_complex(x, f"seeds.sigma[{i}]") for i, x in enumerate(s))
    if merged.get("ermakov") is not None:
        e = _mapping(merged["ermakov"], "seeds.ermakov", ("w2", "rho0", "rho_dot0"))
        rho0 = e.get("rho0")
        kwargs["ermakov"] = ErmakovSeeds(
            w2=_number(e.get("w2", 1.0), "seeds.ermakov.w2"),
            rho0=None if rho0 is None else _number(rho0, "seeds.ermakov.rho0", positive=True),
            rho_dot0=_number(e.get("rho_dot0", 0.0), "seeds.ermakov.rho_dot0"),
        )
    return Seeds(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    """Validate a decoded JSON document and fill in defaults."""
    _mapping(data, "config", _TOP_KEYS)
    scenario, source, builtin = _scenario(data)

    integ = _mapping(data.get("integrator", {}), "integrator", ("method", "rtol", "atol", "h0", "max_steps"))
    kwargs = {}
    if "method" in integ:
        kwargs["method"] = integ["method"]
    for key in ("rtol", "atol", "h0"):
        if key in integ:
            kwargs[key] = _number(integ[key], f"integrator.{key}", positive=True)
    if "max_steps" in integ:
        kwargs["max_steps"] = _number(integ["max_steps"], "integrator.max_steps", positive=True, integer=True)
    try:
        integrator = IntegratorConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), "integrator") from None

    seeds = _seeds(data.get("seeds"), builtin.seeds if builtin else {})

    checks = data.get("checks", list(builtin.checks) if builtin else list(CHECKS))
    if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
        raise ConfigError("expected a list of check names", "checks")
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown check(s) {', '.join(unknown)}; known: {', '.join(CHECKS)}", "checks")
    checks = tuple(c for c in CHECKS if c in checks)

    thresholds = dict(DEFAULT_THRESHOLDS)
    raw_thr = data.get("thresholds", {})
    if not isinstance(raw_thr, dict):
        raise ConfigError("expected an object", "thresholds")
    for name, value in raw_thr.items():
        if name not in CHECKS:
            raise ConfigError(f"unknown check {name!r}", "thresholds")
        thresholds[name] = _number(value, f"thresholds.{name}", positive=True)

    hbar = _number(data.get("hbar", 1.0), "hbar", positive=True)

    out = _mapping(data.get("output", {}), "output", ("path", "format"))
    fmt = out.get("format", "json")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"expected 'csv' or 'json', got {fmt!r}", "output.format")
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("expected a string", "output.path")

    return RunConfig(scenario, source, integrator, seeds, checks, thresholds, hbar, path, fmt)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", str(path)) from None
    return config_from_dict(data)
