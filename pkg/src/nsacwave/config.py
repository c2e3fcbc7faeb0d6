"""Run configuration: a single YAML document, validated in full before any work."""

from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass, fields
from typing import Any

import yaml

from .binary_eos import energy_from_config
from .connect import SolverSettings
from .eos import MixtureParams, WellSpec, mixture_problems, well_from_config

SCHEMA_VERSION = 1

WELL_KEYS = {
    "quartic-primitive": {"c_lower", "c_upper", "c3", "K"},
    "tilted-quartic": {"a", "c1", "c2", "P0"},
    "tabulated": {"table"},
}
ENERGY_KEYS = {"power-law": {"A", "gamma"}, "tabulated": {"table"}}

DEFAULTS: dict[str, Any] = {
    "schema": SCHEMA_VERSION,
    "mixture": {"epsilon": 0.0, "tau_star": 1.0, "delta": 0.01, "mu": 0.1, "lambda": 0.0},
    "wave": {"m": 0.0, "direction": 1},
    "sweep": {"epsilon": [0.0], "m": [0.0]},
    "epsilon0": {"m": 0.0},
    "solver": {f.name: f.default for f in fields(SolverSettings)},
    "verify_nsk": {
        "resolutions": [32, 64, 128],
        "rho_mean": 2.0,
        "rho_amplitude": 0.3,
        "u_amplitude": 0.1,
        "profile": None,
        "tolerance": 1e-10,
    },
    "eos": {
        "energies": [{"family": "power-law", "A": 1.0, "gamma": 2.0}, {"family": "power-law", "A": 16.0, "gamma": 2.0}],
        "tau": [1.0],
        "c": [0.5],
    },
    "output": {"dir": "out"},
    "deterministic": True,
}

_REQUIRED = ("schema", "well")


class ConfigError(ValueError):
    """Every problem found in a config document."""

    def __init__(self, errors: list[str]):
        super().__init__("invalid config:\n  " + "\n  ".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class RunConfig:
    data: dict

    @property
    def mixture(self) -> MixtureParams:
        m = self.data["mixture"]
        return MixtureParams(m["epsilon"], m["tau_star"], m["delta"], m["mu"], m["lambda"])

    @property
    def solver(self) -> SolverSettings:
        return SolverSettings(**self.data["solver"])

    def well(self) -> WellSpec:
        return well_from_config(self.data["well"], self.data["mixture"]["tau_star"])

    def energies(self):
        return tuple(energy_from_config(e) for e in self.data["eos"]["energies"])

    @property
    def output_dir(self) -> str:
        return self.data["output"]["dir"]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    @property
    def hash(self) -> str:
        return config_hash(self.data)


def config_hash(data: dict) -> str:
    canon = json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=True)
    return hashlib.sha256(canon.encode()).hexdigest()


def _merge(defaults: dict, doc: dict, path: str, errors: list[str]) -> dict:
    out = copy.deepcopy(defaults)
    for key, val in doc.items():
        where = f"{path}{key}"
        if key not in defaults:
            errors.append(f"unknown key {where!r}")
            continue
        if isinstance(defaults[key], dict) and key not in ("well",):
            if not isinstance(val, dict):
                errors.append(f"{where!r} must be a mapping")
                continue
            out[key] = _merge(defaults[key], val, where + ".", errors)
        else:
            out[key] = val
    return out


def _num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_numbers(section: dict, name: str, errors: list[str], ints=()):
    for k, v in section.items():
        if v is None or isinstance(v, (list, dict, str)):
            continue
        if k in ints:
            if not isinstance(v, int) or isinstance(v, bool):
                errors.append(f"{name}.{k} must be an integer, got {v!r}")
        elif isinstance(v, bool):
            if not isinstance(DEFAULTS.get(name, {}).get(k), bool):
                errors.append(f"{name}.{k} must be a number, got {v!r}")
        elif not _num(v):
            errors.append(f"{name}.{k} must be a number, got {v!r}")


def _validate_well(w, errors):
    if not isinstance(w, dict):
        errors.append("'well' must be a mapping with a 'family' key")
        return
    fam = w.get("family")
    if fam not in WELL_KEYS:
        errors.append(f"well.family must be one of {sorted(WELL_KEYS)}, got {fam!r}")
        return
    allowed = WELL_KEYS[fam] | {"family"}
    for k in w:
        if k not in allowed:
            errors.append(f"unknown key 'well.{k}' for family {fam!r}")
    required = WELL_KEYS[fam] - ({"K"} if fam == "quartic-primitive" else set())
    for k in sorted(required):
        if k not in w:
            errors.append(f"well.{k} is required for family {fam!r}")
        elif k != "table" and not _num(w[k]):
            errors.append(f"well.{k} must be a number, got {w[k]!r}")
    if fam == "quartic-primitive":
        if _num(w.get("K", 1.0)) and not w.get("K", 1.0) > 0:
            errors.append("well.K must be positive")
        if _num(w.get("c3")) and not w["c3"] > 1:
            errors.append("well.c3 must exceed 1")
    if fam == "tilted-quartic" and all(_num(w.get(k)) for k in ("c1", "c2", "a")):
        if not 0 < w["c1"] < w["c2"] < 1:
            errors.append("well needs 0 < c1 < c2 < 1")
        if not w["a"] > 0:
            errors.append("well.a must be positive")


def _validate(data: dict, errors: list[str]):
    if data.get("schema") != SCHEMA_VERSION:
        errors.append(f"schema must be {SCHEMA_VERSION}, got {data.get('schema')!r}")
    _validate_well(data.get("well"), errors)
    mix = data["mixture"]
    _check_numbers(mix, "mixture", errors)
    if all(_num(mix[k]) for k in ("epsilon", "tau_star", "delta", "mu", "lambda")):
        errors.extend(mixture_problems(mix["epsilon"], mix["tau_star"], mix["delta"], mix["mu"], mix["lambda"]))
    _check_numbers(data["wave"], "wave", errors, ints=("direction",))
    if data["wave"].get("direction") not in (1, -1):
        errors.append("wave.direction must be 1 or -1")
    for k in ("epsilon", "m"):
        vals = data["sweep"][k]
        if not isinstance(vals, list) or not vals or not all(_num(x) for x in vals):
            errors.append(f"sweep.{k} must be a non-empty list of numbers")
        elif k == "epsilon" and not all(0 <= x < 1 for x in vals):
            errors.append("sweep.epsilon values must lie in [0,1)")
    _check_numbers(data["epsilon0"], "epsilon0", errors)
    _check_numbers(data["solver"], "solver", errors, ints=("p_scan", "grid_points", "equilibria_grid"))
    s = data["solver"]
    if isinstance(s.get("grid_points"), int) and s["grid_points"] < 2001:
        errors.append("solver.grid_points must be at least 2001")
    if isinstance(s.get("p_scan"), int) and s["p_scan"] < 2:
        errors.append("solver.p_scan must be at least 2")
    for k, v in s.items():
        if _num(v) and k not in ("richardson", "polish") and not v > 0:
            errors.append(f"solver.{k} must be positive")
    if _num(s.get("epsilon_cap")) and not s["epsilon_cap"] < 1:
        errors.append("solver.epsilon_cap must be below 1")
    vn = data["verify_nsk"]
    if not isinstance(vn["resolutions"], list) or not all(isinstance(r, int) and r >= 16 for r in vn["resolutions"]):
        errors.append("verify_nsk.resolutions must be a list of integers >= 16")
    _check_numbers({k: v for k, v in vn.items() if k != "resolutions"}, "verify_nsk", errors)
    if _num(vn["rho_mean"]) and _num(vn["rho_amplitude"]) and not vn["rho_mean"] > abs(vn["rho_amplitude"]):
        errors.append("verify_nsk needs rho_mean > |rho_amplitude| so that rho > 0")
    en = data["eos"]["energies"]
    if not isinstance(en, list) or len(en) != 2:
        errors.append("eos.energies must list exactly two phase energies")
    else:
        for i, e in enumerate(en):
            fam = e.get("family") if isinstance(e, dict) else None
            if fam not in ENERGY_KEYS:
                errors.append(f"eos.energies[{i}].family must be one of {sorted(ENERGY_KEYS)}")
                continue
            for k in e:
                if k not in ENERGY_KEYS[fam] | {"family"}:
                    errors.append(f"unknown key 'eos.energies[{i}].{k}'")
            for k in ENERGY_KEYS[fam]:
                if k not in e:
                    errors.append(f"eos.energies[{i}].{k} is required")
    for k in ("tau", "c"):
        vals = data["eos"][k]
        if not isinstance(vals, list) or not vals or not all(_num(x) for x in vals):
            errors.append(f"eos.{k} must be a non-empty list of numbers")
    if all(_num(x) for x in data["eos"]["tau"] or [None]) and not all(x > 0 for x in data["eos"]["tau"]):
        errors.append("eos.tau values must be positive")
    if all(_num(x) for x in data["eos"]["c"] or [None]) and not all(0 <= x <= 1 for x in data["eos"]["c"]):
        errors.append("eos.c values must lie in [0,1]")
    if not isinstance(data["deterministic"], bool):
        errors.append("deterministic must be true or false")
    if not isinstance(data["output"]["dir"], str):
        errors.append("output.dir must be a string")


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-9`` (no dot) as a float, as JSON does."""


_Loader.yaml_implicit_resolvers = {k: list(v) for k, v in yaml.SafeLoader.yaml_implicit_resolvers.items()}
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)


def _yaml(text):
    return yaml.load(text, Loader=_Loader)


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply ``key.sub=value`` overrides; values are parsed as YAML scalars."""
    doc = copy.deepcopy(doc)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError([f"override {item!r} is not of the form key=value"])
        key, raw = item.split("=", 1)
        val = _yaml(raw)
        parts = key.strip().split(".")
        node = doc
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError([f"override {key!r} descends into a non-mapping"])
        node[parts[-1]] = val
    return doc


def load_document(text: str, source: str = "<config>") -> dict:
    try:
        doc = _yaml(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise ConfigError([f"parse error at {where}: {exc.problem}"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"parse error in {source}: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise ConfigError([f"{source}: top level must be a mapping"])
    # a run summary embeds the config that produced it
    if "config_hash" in doc and "config" in doc:
        doc = doc["config"]
    return doc


def parse_config(document, source: str = "<config>", overrides=()) -> RunConfig:
    """Parse and validate a config (YAML text or an already-loaded mapping)."""
    doc = load_document(document, source) if isinstance(document, str) else copy.deepcopy(document)
    doc = apply_overrides(doc, overrides)
    errors: list[str] = []
    for k in _REQUIRED:
        if k not in doc:
            errors.append(f"missing required key {k!r}")
    defaults = dict(DEFAULTS, well={})
    data = _merge(defaults, doc, "", errors)
    if "well" in doc:
        data["well"] = copy.deepcopy(doc["well"])
    if not errors or all(e.startswith("unknown key") for e in errors):
        try:
            _validate(data, errors)
        except (KeyError, TypeError) as exc:
            errors.append(f"malformed config: {exc!r}")
    if errors:
        raise ConfigError(errors)
    return RunConfig(data)
