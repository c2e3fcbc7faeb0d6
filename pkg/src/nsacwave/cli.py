"""Command line entry point: ``nsacwave <subcommand> --config run.yaml [--out DIR] [--set k=v]``.

Every run writes ``summary.json`` into the output directory, including runs
that fail validation. Exit codes: 0 success, 1 error, 2 partial (solver frontier).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .binary_eos import mixture_energy, mixture_pressure
from .config import ConfigError, RunConfig, config_hash, parse_config
from .connect import ShootingError, estimate_epsilon0, find_heteroclinic, sweep_grid
from .eos import validate_well
from .nsk import (
    Field1D,
    equivalence_check,
    nsk_wave_residual,
    pressure_elimination_error,
    subsonicity_check,
)
from .persist import dump_json, read_profile, write_profile, write_table

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2
COMMANDS = ("solve", "sweep", "epsilon0", "verify-nsk", "eos", "validate-well")


@dataclass
class RunSummary:
    command: str
    config: dict | None
    config_hash: str | None
    outcomes: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    exit_code: int = EXIT_OK
    timings: dict = field(default_factory=dict)
    version: str = __version__

    def as_dict(self) -> dict:
        return {
            "tool": "nsacwave",
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "config_hash": self.config_hash,
            "outcomes": self.outcomes,
            "errors": self.errors,
            "artifacts": self.artifacts,
            "exit_code": self.exit_code,
            "timings": self.timings,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2, default=_plain) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunSummary":
        d = json.loads(text)
        return cls(
            command=d["command"],
            config=d["config"],
            config_hash=d["config_hash"],
            outcomes=d["outcomes"],
            errors=d["errors"],
            artifacts=d["artifacts"],
            exit_code=d["exit_code"],
            timings=d["timings"],
            version=d["version"],
        )


def _plain(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


class _Timer:
    def __init__(self, summary: RunSummary, key: str):
        self.summary, self.key = summary, key

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.summary.timings[self.key] = time.perf_counter() - self.t0
        return False


# ---------------------------------------------------------------------------
# subcommands; each fills ``summary`` and returns an exit code


def _solve(cfg: RunConfig, out: Path, summary: RunSummary) -> int:
    well, params, s = cfg.well(), cfg.mixture, cfg.solver
    wave = cfg.data["wave"]
    try:
        with _Timer(summary, "solve"):
            prof = find_heteroclinic(wave["m"], params.epsilon, well, params, settings=s, direction=wave["direction"])
    except ShootingError as exc:
        summary.outcomes["solve"] = {"converged": False, "error": str(exc), "kind": exc.kind, **_clean(exc.diagnostics)}
        summary.errors.append(str(exc))
        return EXIT_ERROR
    write_profile(prof, out / "profile.csv")
    summary.artifacts += ["profile.csv", "profile.json"]
    summary.outcomes["solve"] = {"converged": True, **prof.summary()}
    return EXIT_OK


def _sweep(cfg: RunConfig, out: Path, summary: RunSummary) -> int:
    well, params, s = cfg.well(), cfg.mixture, cfg.solver
    sw = cfg.data["sweep"]
    with _Timer(summary, "sweep"):
        recs = sweep_grid(sw["epsilon"], sw["m"], well, params, s, cfg.data["wave"]["direction"])
    rows = []
    (out / "profiles").mkdir(exist_ok=True)
    for i, r in enumerate(recs):
        rows.append([r.epsilon, r.m, float(r.converged), r.P_selected, r.residual_max, float(r.iterations)])
        if r.profile is not None:
            name = f"profiles/profile_{i:03d}.csv"
            write_profile(r.profile, out / name)
            summary.artifacts += [name, name[:-4] + ".json"]
    write_table(out / "sweep.csv", ("epsilon", "m", "converged", "P_selected", "residual_max", "iterations"), rows)
    summary.artifacts.append("sweep.csv")
    summary.outcomes["sweep"] = [r.as_dict() for r in recs]
    n_ok = sum(r.converged for r in recs)
    if n_ok == len(recs):
        return EXIT_OK
    summary.errors += [f"({r.epsilon}, {r.m}): {r.error}" for r in recs if not r.converged]
    return EXIT_PARTIAL if n_ok else EXIT_ERROR


def _epsilon0(cfg: RunConfig, out: Path, summary: RunSummary) -> int:
    well, params, s = cfg.well(), cfg.mixture, cfg.solver
    m = cfg.data["epsilon0"]["m"]
    with _Timer(summary, "epsilon0"):
        est = estimate_epsilon0(m, well, params.with_epsilon(0.0), s, cfg.data["wave"]["direction"])
    rows = [[r.epsilon, r.m, float(r.converged), r.P_selected] for r in est.records]
    write_table(out / "epsilon0.csv", ("epsilon", "m", "converged", "P_selected"), rows)
    summary.artifacts.append("epsilon0.csv")
    summary.outcomes["epsilon0"] = est.as_dict()
    if not est.valid:
        summary.errors.append(est.error)
        return EXIT_ERROR
    # a solver frontier below the domain cap is a partial result
    return EXIT_OK if est.limited_by == "domain" else EXIT_PARTIAL


def _verify_nsk(cfg: RunConfig, out: Path, summary: RunSummary) -> int:
    well, s = cfg.well(), cfg.solver
    params = cfg.mixture.with_epsilon(0.0)
    vn = cfg.data["verify_nsk"]
    report: dict = {"epsilon_forced_to_zero": cfg.mixture.epsilon != 0.0}
    ok = True
    with _Timer(summary, "equivalence"):
        rows = []
        for conv in ("full", "bulk"):
            for M in vn["resolutions"]:
                x = Field1D.periodic_grid(M)
                rho = vn["rho_mean"] + vn["rho_amplitude"] * np.sin(x)
                f = Field1D(x, rho, vn["u_amplitude"] * np.cos(x))
                rows.append(equivalence_check(f, params, well, conv).as_dict())
        report["equivalence"] = rows
        full = [r for r in rows if r["convention"] == "full"]
        report["equivalence_passed"] = all(r["relative"] <= vn["tolerance"] for r in full)
        ok = ok and report["equivalence_passed"]
    with _Timer(summary, "profile"):
        try:
            if vn["profile"]:
                prof = read_profile(vn["profile"])
                params = prof.params
                report["profile_source"] = str(vn["profile"])
            else:
                prof = find_heteroclinic(cfg.data["wave"]["m"], 0.0, well, params, settings=s)
                report["profile_source"] = "solved"
            res = nsk_wave_residual(prof, params, well)
            sub = subsonicity_check(prof, params, well)
            report["wave_residual"] = {"mass": res.mass, "momentum": res.momentum}
            report["pressure_elimination_error"] = pressure_elimination_error(prof, params, well, trim=4)
            report["subsonic"] = sub.as_dict()
            report["wave_passed"] = res.max <= s.residual_tol and sub.passed
            ok = ok and report["wave_passed"]
        except (ShootingError, ValueError) as exc:
            report["profile_error"] = str(exc)
            summary.errors.append(str(exc))
            ok = False
    dump_json(report, out / "nsk_report.json")
    summary.artifacts.append("nsk_report.json")
    summary.outcomes["verify_nsk"] = report
    return EXIT_OK if ok else EXIT_ERROR


def _eos(cfg: RunConfig, out: Path, summary: RunSummary) -> int:
    energies = cfg.energies()
    e = cfg.data["eos"]
    rows, worst, failed = [], 0.0, []
    with _Timer(summary, "eos"):
        for tau in e["tau"]:
            for c in e["c"]:
                try:
                    mp = mixture_pressure(tau, c, energies)
                    U = mixture_energy(tau, c, energies)
                except ValueError as exc:
                    failed.append(f"(tau={tau}, c={c}): {exc}")
                    rows.append([tau, c, math.nan, math.nan, math.nan, math.nan])
                    continue
                worst = max(worst, mp.rel_error)
                rows.append([tau, c, mp.split.tau1, mp.split.tau2, mp.p, U])
    write_table(out / "eos.csv", ("tau", "c", "tau1", "tau2", "p", "U"), rows)
    summary.artifacts.append("eos.csv")
    summary.outcomes["eos"] = {"points": len(rows), "envelope_max_rel_error": worst, "failures": failed}
    summary.errors += failed
    if not failed:
        return EXIT_OK
    return EXIT_PARTIAL if len(failed) < len(rows) else EXIT_ERROR


def _validate_well(cfg: RunConfig, out: Path, summary: RunSummary) -> int:
    well = cfg.well()
    with _Timer(summary, "validate_well"):
        rep = validate_well(well, cfg.mixture, c_cut=cfg.solver.c_cut)
    dump_json(rep.as_dict(), out / "well_report.json")
    summary.artifacts.append("well_report.json")
    summary.outcomes["validate_well"] = rep.as_dict()
    if rep.passed:
        return EXIT_OK
    summary.errors += [f.message for f in rep.failures]
    return EXIT_ERROR


_RUNNERS = {
    "solve": _solve,
    "sweep": _sweep,
    "epsilon0": _epsilon0,
    "verify-nsk": _verify_nsk,
    "eos": _eos,
    "validate-well": _validate_well,
}


def _clean(d: dict) -> dict:
    return json.loads(json.dumps(d, default=lambda x: _plain(x) if isinstance(x, (np.generic, np.ndarray)) else repr(x)))


def run(command: str, cfg: RunConfig, out: Path) -> RunSummary:
    """Execute one subcommand; never raises, always returns a summary."""
    summary = RunSummary(command, cfg.to_dict(), cfg.hash)
    out.mkdir(parents=True, exist_ok=True)
    try:
        summary.exit_code = _RUNNERS[command](cfg, out, summary)
    except Exception as exc:  # every failure becomes a diagnostic record
        summary.errors.append(f"{type(exc).__name__}: {exc}")
        summary.outcomes.setdefault("traceback", traceback.format_exc().splitlines()[-3:])
        summary.exit_code = EXIT_ERROR
    summary.artifacts.sort()
    return summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsacwave", description="Diffuse phase boundary traveling waves.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run config (or a previous summary.json)")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out) if args.out else None
    try:
        text = Path(args.config).read_text()
        cfg = parse_config(text, source=args.config, overrides=args.set)
    except (OSError, ConfigError) as exc:
        errors = exc.errors if isinstance(exc, ConfigError) else [str(exc)]
        out = out or Path("out")
        out.mkdir(parents=True, exist_ok=True)
        summary = RunSummary(args.command, None, None, errors=errors, exit_code=EXIT_ERROR)
        (out / "summary.json").write_text(summary.to_json())
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    out = out or Path(cfg.output_dir)
    summary = run(args.command, cfg, out)
    (out / "summary.json").write_text(summary.to_json())
    for e in summary.errors:
        print(f"error: {e}", file=sys.stderr)
    status = {EXIT_OK: "ok", EXIT_PARTIAL: "partial", EXIT_ERROR: "error"}[summary.exit_code]
    print(f"{args.command}: {status} ({out / 'summary.json'})")
    return summary.exit_code


def reproduce(summary_path) -> RunSummary:
    """Re-run the command recorded in a summary from its embedded config."""
    prev = RunSummary.from_json(Path(summary_path).read_text())
    cfg = parse_config(prev.config)
    if config_hash(cfg.data) != prev.config_hash:
        raise ConfigError(["embedded config does not match its recorded hash"])
    return run(prev.command, cfg, Path(cfg.output_dir))


if __name__ == "__main__":
    sys.exit(main())
