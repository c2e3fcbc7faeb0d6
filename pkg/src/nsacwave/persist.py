"""Profile and table serialization: CSV with 17 significant digits plus a JSON sidecar."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .connect import Profile
from .eos import MixtureParams
from .profile_ode import WaveParams

PROFILE_COLUMNS = ("xi", "c", "dc_dxi", "u", "p", "rho")
FMT = "%.17g"


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def write_table(path, columns, rows) -> None:
    arr = np.asarray(rows, dtype=float).reshape(-1, len(columns))
    np.savetxt(path, arr, fmt=FMT, delimiter=",", header=",".join(columns), comments="")


def read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_profile(profile: Profile, path) -> None:
    """Write ``path`` (CSV) and ``path`` with .json suffix holding wave constants."""
    cols = np.column_stack([profile.xi, profile.c, profile.v, profile.u, profile.p, profile.rho])
    write_table(path, PROFILE_COLUMNS, cols)
    pr = profile.params
    meta = {
        "params": {"epsilon": pr.epsilon, "tau_star": pr.tau_star, "delta": pr.delta, "mu": pr.mu, "lambda": pr.lam},
        "wave": {"m": profile.wave.m, "P": profile.wave.P, "nu": profile.wave.nu},
        "c_minus": profile.c_minus,
        "c_plus": profile.c_plus,
        "well": profile.well_tag,
        "summary": profile.summary(),
    }
    dump_json(meta, sidecar_path(path))


def read_profile(path) -> Profile:
    header, data = read_table(path)
    if tuple(header) != PROFILE_COLUMNS:
        raise ValueError(f"{path}: expected columns {','.join(PROFILE_COLUMNS)}, got {','.join(header)}")
    meta = json.loads(sidecar_path(path).read_text())
    p = meta["params"]
    params = MixtureParams(p["epsilon"], p["tau_star"], p["delta"], p["mu"], p["lambda"])
    w = meta["wave"]
    s = meta.get("summary", {})
    return Profile(
        xi=data[:, 0],
        c=data[:, 1],
        v=data[:, 2],
        u=data[:, 3],
        p=data[:, 4],
        rho=data[:, 5],
        wave=WaveParams(w["m"], w["P"], w["nu"]),
        c_minus=meta["c_minus"],
        c_plus=meta["c_plus"],
        params=params,
        well_tag=meta["well"],
        residual_max=s.get("residual_max", float("nan")),
        endpoint_deviation=s.get("endpoint_deviation", float("nan")),
        monotone=s.get("monotone", True),
    )
