"""Strict JSON run configuration.

One document with sections ``market``, ``sim`` and ``run``. Unknown keys
anywhere are rejected so that typos fail loudly. ``market.eta`` (the
principal's risk aversion in the general model) is accepted and ignored:
the mean-variance principal solved here does not use it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError, InvalidParameter
from .evaluator import DEFAULT_DEVIATIONS, THRESHOLD
from .model import MarketParams, validate_params
from .simulator import SimConfig

MARKET_REQUIRED = ("gamma", "sigma", "k1", "k2", "delta", "beta", "theta", "horizon", "reservation")
MARKET_OPTIONAL = ("m0", "v0", "f_intercept", "f_slope", "eta")
SIM_KEYS = tuple(f.name for f in fields(SimConfig))
RUN_KEYS = ("n_grid", "deviations", "sweep", "y0", "plots", "dump_paths", "threshold")
SWEEPABLE = tuple(f.name for f in fields(MarketParams))


@dataclass(frozen=True)
class Sweep:
    field: str
    values: tuple


@dataclass(frozen=True)
class RunConfig:
    market: MarketParams
    sim: SimConfig = field(default_factory=SimConfig)
    n_grid: int = 201
    deviations: tuple = DEFAULT_DEVIATIONS
    sweep: Sweep | None = None
    y0: float | None = None  # None -> reservation level
    plots: bool = True
    dump_paths: bool = False
    threshold: float = THRESHOLD
    eta: float | None = None

    def with_overrides(self, seed=None, paths=None, workers=None) -> "RunConfig":
        from dataclasses import replace
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if paths is not None:
            changes["n_paths"] = int(paths)
        if workers is not None:
            changes["workers"] = int(workers)
        if not changes:
            return self
        try:
            return replace(self, sim=replace(self.sim, **changes))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _number(section: str, key: str, v, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {v!r}")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"{section}.{key} must be an integer")
        return int(v)
    if not math.isfinite(v):
        raise ConfigError(f"{section}.{key} must be finite")
    return float(v)


def _unknown(section: str, data: dict, allowed) -> None:
    extra = sorted(set(data) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(extra)}")


def _section(doc: dict, name: str, required: bool) -> dict:
    if name not in doc:
        if required:
            raise ConfigError(f"missing section: {name}")
        return {}
    sec = doc[name]
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name} must be an object")
    return sec


def parse_market(sec: dict) -> tuple[MarketParams, float | None]:
    _unknown("market", sec, MARKET_REQUIRED + MARKET_OPTIONAL)
    for key in MARKET_REQUIRED:
        if key not in sec:
            raise ConfigError(f"missing required field: market.{key}")
    kw = {k: _number("market", k, v) for k, v in sec.items() if k != "eta"}
    eta = _number("market", "eta", sec["eta"]) if "eta" in sec else None
    try:
        p = validate_params(MarketParams(**kw))
    except InvalidParameter as exc:
        raise ConfigError(f"invalid market.{exc.name}: {exc.reason}") from None
    return p, eta


def parse_sim(sec: dict) -> SimConfig:
    _unknown("sim", sec, SIM_KEYS)
    kw = {}
    for k, v in sec.items():
        if k == "antithetic":
            if not isinstance(v, bool):
                raise ConfigError("sim.antithetic must be true or false")
            kw[k] = v
        elif k == "picard_tol":
            kw[k] = _number("sim", k, v)
        else:
            kw[k] = _number("sim", k, v, integer=True)
    try:
        return SimConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"invalid sim section: {exc}") from None


def parse_run(sec: dict) -> dict:
    _unknown("run", sec, RUN_KEYS)
    out = {}
    if "n_grid" in sec:
        out["n_grid"] = _number("run", "n_grid", sec["n_grid"], integer=True)
        if out["n_grid"] < 2:
            raise ConfigError("run.n_grid must be >= 2")
    if "deviations" in sec:
        devs = sec["deviations"]
        if not isinstance(devs, list) or not devs:
            raise ConfigError("run.deviations must be a nonempty list of [eps0, eps1] pairs")
        pairs = []
        for d in devs:
            if not isinstance(d, list) or len(d) != 2:
                raise ConfigError(f"bad deviation entry {d!r}")
            pairs.append((_number("run", "deviations", d[0]), _number("run", "deviations", d[1])))
        out["deviations"] = tuple(pairs)
    if "sweep" in sec:
        sw = sec["sweep"]
        if not isinstance(sw, dict):
            raise ConfigError("run.sweep must be an object")
        _unknown("run.sweep", sw, ("field", "values"))
        if sw.get("field") not in SWEEPABLE:
            raise ConfigError(f"run.sweep.field must be one of {', '.join(SWEEPABLE)}")
        vals = sw.get("values")
        if not isinstance(vals, list) or not vals:
            raise ConfigError("run.sweep.values must be a nonempty list")
        out["sweep"] = Sweep(sw["field"], tuple(_number("run", "sweep.values", v) for v in vals))
    if "y0" in sec:
        out["y0"] = _number("run", "y0", sec["y0"])
    for flag in ("plots", "dump_paths"):
        if flag in sec:
            if not isinstance(sec[flag], bool):
                raise ConfigError(f"run.{flag} must be true or false")
            out[flag] = sec[flag]
    if "threshold" in sec:
        out["threshold"] = _number("run", "threshold", sec["threshold"])
        if out["threshold"] <= 0:
            raise ConfigError("run.threshold must be > 0")
    return out


def parse_config(doc) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _unknown("config", doc, ("market", "sim", "run"))
    market, eta = parse_market(_section(doc, "market", True))
    sim = parse_sim(_section(doc, "sim", False))
    return RunConfig(market=market, sim=sim, eta=eta, **parse_run(_section(doc, "run", False)))


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    return parse_config(doc)
