"""Run configuration: YAML key tree, ``--set`` overrides, strict validation."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import yaml

from .diagnostics import DEFAULT_ALPHAS, CidConfig
from .mixture import FGridConfig
from .sigma_marginal import PRIOR_KINDS, GridConfig, SigmaPrior
from .toy_functions import UnderlyingFunction


class ConfigError(ValueError):
    pass


DEFAULTS: dict = {
    "function": "g2",
    "m_max": 6,
    "prior": {"kind": "invchi2", "nu0": 1.5, "tau0": 1.5},
    "sigma_grid": {"n": 13, "lo": 0.25, "hi": 10.0},
    "data": {"n": 10, "x_lo": 0.0, "x_hi": 1.0 / math.pi, "rel_err": 0.05},
    "seed": 0,
    "targets": [1.2 / math.pi, 2.0 / math.pi],
    "sweep": None,
    "cid": {
        "n_datasets": 100,
        "n_validation": 20,
        "alphas": list(DEFAULT_ALPHAS),
        "band_fraction": 0.70,
    },
    "output": "out",
}

_SWEEP_KEYS = {"lo", "hi", "n"}


def _merge(base: dict, update: dict, path: str = "") -> dict:
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be a mapping")
            _merge(base[key], value, where + ".")
        elif key == "sweep" and value is not None:
            if not isinstance(value, dict) or set(value) != _SWEEP_KEYS:
                raise ConfigError("'sweep' must be null or a mapping with keys lo, hi, n")
            base[key] = dict(value)
        else:
            base[key] = value
    return base


def parse_override(text: str) -> dict:
    """``a.b.c=value`` -> ``{"a": {"b": {"c": value}}}`` with YAML-typed value."""
    if "=" not in text:
        raise ConfigError(f"--set expects KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"empty key in {text!r}")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value in {text!r}: {exc}") from None
    out: dict = {}
    node = out
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration tree (``raw`` holds the canonical dict)."""

    raw: dict

    @classmethod
    def load(cls, path=None, overrides=(), flat: dict | None = None) -> "RunConfig":
        tree = copy.deepcopy(DEFAULTS)
        if path is not None:
            path = Path(path)
            text = path.read_text(encoding="utf-8")
            try:
                loaded = yaml.safe_load(text) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}: {exc}") from None
            if not isinstance(loaded, dict):
                raise ConfigError(f"{path}: top level must be a mapping")
            _merge(tree, loaded)
        for ov in overrides:
            _merge(tree, parse_override(ov) if isinstance(ov, str) else ov)
        if flat:
            _merge(tree, flat)
        return cls(validate(tree))

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def function(self) -> UnderlyingFunction:
        return UnderlyingFunction.parse(self.raw["function"])

    @property
    def prior(self) -> SigmaPrior:
        p = self.raw["prior"]
        return SigmaPrior(p["kind"], p["nu0"], p["tau0"])

    @property
    def grid(self) -> GridConfig:
        g = self.raw["sigma_grid"]
        return GridConfig(g["n"], g["lo"], g["hi"])

    def cid_config(self, x_t: float | None = None) -> CidConfig:
        c, d = self.raw["cid"], self.raw["data"]
        return CidConfig(
            function_kind=self.raw["function"],
            x_t=self.raw["targets"][0] if x_t is None else float(x_t),
            alphas=tuple(c["alphas"]),
            n_datasets=c["n_datasets"],
            n_validation=c["n_validation"],
            band_fraction=c["band_fraction"],
            m_max=self.raw["m_max"],
            prior=self.prior,
            grid=self.grid,
            rel_err=d["rel_err"],
            master_seed=self.raw["seed"],
            n_points=d["n"],
            x_lo=d["x_lo"],
            x_hi=d["x_hi"],
            fgrid=FGridConfig(),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _num(tree, key, kind=float, where=""):
    v = tree[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}{key} must be a number, got {v!r}")
    if kind is int:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"{where}{key} must be an integer, got {v!r}")
        return int(v)
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{where}{key} must be finite")
    return v


def validate(tree: dict) -> dict:
    t = copy.deepcopy(tree)
    try:
        t["function"] = UnderlyingFunction.parse(t["function"]).value
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    t["m_max"] = _num(t, "m_max", int)
    if not 0 <= t["m_max"] <= 20:
        raise ConfigError("m_max must lie in 0..20")
    seed = _num(t, "seed", int)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    t["seed"] = seed

    p = t["prior"]
    p["kind"] = str(p["kind"]).lower()
    if p["kind"] not in PRIOR_KINDS:
        raise ConfigError(f"prior.kind must be one of {PRIOR_KINDS}")
    p["nu0"], p["tau0"] = _num(p, "nu0", where="prior."), _num(p, "tau0", where="prior.")
    try:
        SigmaPrior(p["kind"], p["nu0"], p["tau0"])
    except ValueError as exc:
        raise ConfigError(f"prior: {exc}") from None

    g = t["sigma_grid"]
    g["n"] = _num(g, "n", int, "sigma_grid.")
    g["lo"], g["hi"] = _num(g, "lo", where="sigma_grid."), _num(g, "hi", where="sigma_grid.")
    try:
        GridConfig(g["n"], g["lo"], g["hi"])
    except ValueError as exc:
        raise ConfigError(f"sigma_grid: {exc}") from None

    d = t["data"]
    d["n"] = _num(d, "n", int, "data.")
    for k in ("x_lo", "x_hi", "rel_err"):
        d[k] = _num(d, k, where="data.")
    if d["n"] < 1:
        raise ConfigError("data.n must be >= 1")
    if not 0 <= d["x_lo"] < d["x_hi"]:
        raise ConfigError("data needs 0 <= x_lo < x_hi")
    if not d["rel_err"] > 0:
        raise ConfigError("data.rel_err must be > 0")
    if t["function"] == "g1" and d["x_hi"] >= 1:
        raise ConfigError("g1 data must stay below the pole at x = 1")

    targets = t["targets"]
    if isinstance(targets, (int, float)) and not isinstance(targets, bool):
        targets = [targets]
    if not isinstance(targets, list) or not targets:
        raise ConfigError("targets must be a nonempty list of numbers")
    t["targets"] = [_num({"x": v}, "x", where="targets.") for v in targets]
    if t["function"] == "g1" and any(x >= 1 for x in t["targets"]):
        raise ConfigError("g1 targets must be < 1")
    if any(x < 0 for x in t["targets"]):
        raise ConfigError("targets must be >= 0")

    if t["sweep"] is not None:
        s = t["sweep"]
        s["n"] = _num(s, "n", int, "sweep.")
        s["lo"], s["hi"] = _num(s, "lo", where="sweep."), _num(s, "hi", where="sweep.")
        if s["n"] < 1 or not 0 <= s["lo"] <= s["hi"]:
            raise ConfigError("sweep needs n >= 1 and 0 <= lo <= hi")

    c = t["cid"]
    c["n_datasets"] = _num(c, "n_datasets", int, "cid.")
    c["n_validation"] = _num(c, "n_validation", int, "cid.")
    c["band_fraction"] = _num(c, "band_fraction", where="cid.")
    alphas = c["alphas"]
    if not isinstance(alphas, list):
        raise ConfigError("cid.alphas must be a list")
    c["alphas"] = [_num({"a": a}, "a", where="cid.alphas.") for a in alphas]
    t["output"] = str(t["output"])
    try:
        RunConfig(t).cid_config()
    except ValueError as exc:
        raise ConfigError(f"cid: {exc}") from None
    return t
