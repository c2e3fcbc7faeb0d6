"""End-to-end acceptance checks. Each test records a PASS/FAIL line in the
terminal summary before asserting, so the report is complete even on failure."""

import json
import math
import time

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from conftest import ACCEPTANCE, SUPPLEMENTARY
from nsacwave.binary_eos import mixture_pressure, power_law, solve_phase_volumes
from nsacwave.cli import main
from nsacwave.connect import ShootingError, find_heteroclinic, maxwell_select_P, sweep_grid
from nsacwave.eos import MixtureParams, quartic_primitive, tilted_quartic
from nsacwave.nsk import Field1D, equivalence_check, nsk_wave_residual, subsonicity_check
from oracles import cubic_critical, nested_bisection_maxwell

PARAMS = MixtureParams(epsilon=0.0, tau_star=1.0, delta=0.01)
KINK = tilted_quartic(1.0, 0.2, 0.8, 0.1)
REFERENCE = quartic_primitive(0.2, 0.6, 1.05, 1.0)
SUBSTITUTE = quartic_primitive(0.2, 0.4, 1.05, 1.0)

GRID_EPS = (0.0, 0.01, 0.02, 0.03, 0.05)
GRID_M = (0.0, 0.002, -0.002, 0.005, -0.005)

KINK_YAML = "well: {family: tilted-quartic, a: 1.0, c1: 0.2, c2: 0.8, P0: 0.1}\n"
REFERENCE_YAML = "well: {family: quartic-primitive, c_lower: 0.2, c_upper: 0.6, c3: 1.05, K: 1.0}\n"
SUBSTITUTE_YAML = "well: {family: quartic-primitive, c_lower: 0.2, c_upper: 0.4, c3: 1.05, K: 1.0}\n"
COMMON_YAML = "schema: 1\nmixture: {epsilon: 0.0, tau_star: 1.0, delta: 0.01}\n"


def record(table, key, ok, detail):
    table[key] = (bool(ok), detail)
    print(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def maxwell_oracle(well, a, b, d):
    """Nested-bisection P over the window where both outer roots lie in (0, 1)."""
    c_max, c_min = cubic_critical(a, b, d)
    lo = max(-well.dW(c_max), -well.dW(1.0))
    hi = min(-well.dW(c_min), -well.dW(0.0))

    def gap(P):
        return (well.W(c_outer(P, c_min, 1.0)) + P * c_outer(P, c_min, 1.0)) - (
            well.W(c_outer(P, 0.0, c_max)) + P * c_outer(P, 0.0, c_max)
        )

    def c_outer(P, x0, x1):
        from scipy.optimize import brentq

        return brentq(lambda c: well.dW(c) + P, x0 + 1e-12, x1 - 1e-12, xtol=1e-15)

    eps = 1e-9 * (hi - lo)
    g_lo, g_hi = gap(lo + eps), gap(hi - eps)
    if g_lo * g_hi > 0:
        return None, (lo, hi), (g_lo, g_hi)
    return nested_bisection_maxwell(well.dW, well.W, c_max, c_min, lo + eps, hi - eps), (lo, hi), (g_lo, g_hi)


def tau_distance(a, b):
    x = a.xi[(a.xi >= b.xi[0]) & (a.xi <= b.xi[-1])]
    mask = np.isin(a.xi, x)
    return float(np.max(np.abs(1.0 / a.rho[mask] - CubicSpline(b.xi, 1.0 / b.rho)(x))))


def state_distance(a, b):
    """Sup distance in (c, c', tau); tau = 1/rho is affine in epsilon."""
    from nsacwave.connect import profile_distance

    return max(profile_distance(a, b, ("c", "v")), tau_distance(a, b))


def grid_report(well):
    recs, dt = timed(sweep_grid, GRID_EPS, GRID_M, well, PARAMS)
    bad = []
    for r in recs:
        prof = r.profile
        ok = (
            r.converged
            and prof is not None
            and prof.residual_max <= 1e-6
            and prof.endpoint_deviation <= 1e-6
            and r.classification == "undercompressive"
        )
        if not ok:
            bad.append((r.epsilon, r.m, r.error or r.classification))
    order = math.nan
    if not bad:
        base = {(r.epsilon, r.m): r.profile for r in recs}
        eps = np.array([e for e in GRID_EPS if e > 0])
        dist = np.array([state_distance(base[(e, 0.0)], base[(0.0, 0.0)]) for e in eps])
        order = float(np.polyfit(np.log(eps), np.log(dist), 1)[0])
    return recs, bad, order, dt


# -- 1 -----------------------------------------------------------------------


def test_criterion_1_kink_recovery():
    prof, dt = timed(find_heteroclinic, 0.0, 0.0, KINK, PARAMS)
    k = 0.3 * math.sqrt(2 / 0.01)
    c_err = float(np.max(np.abs(prof.c - (0.5 + 0.3 * np.tanh(k * prof.xi)))))
    dP = abs(prof.P_selected - 0.1)
    ok = dP <= 1e-8 and c_err <= 1e-6 and dt < 1.0
    record(ACCEPTANCE, 1, ok, f"|P-0.1|={dP:.2e} sup|c-tanh|={c_err:.2e} t={dt:.2f}s")
    assert ok


# -- 2 -----------------------------------------------------------------------


def test_criterion_2_oracle_agreement():
    t0 = time.perf_counter()
    oracle, window, gaps = maxwell_oracle(REFERENCE, 0.2, 0.6, 1.05)
    try:
        P = find_heteroclinic(0.0, 0.0, REFERENCE, PARAMS).P_selected
        err = None
    except ShootingError as exc:
        P, err = math.nan, exc.kind
    dt = time.perf_counter() - t0
    ok = oracle is not None and err is None and abs(P - oracle) <= 1e-8 and dt < 1.0
    if oracle is None:
        detail = (
            f"no equal-value P with both states in (0,1): oracle gap keeps sign "
            f"({gaps[0]:.3e}, {gaps[1]:.3e}) over P in [{window[0]:.6f}, {window[1]:.6f}]; solver: {err}"
        )
    else:
        detail = f"P={P!r} oracle={oracle!r} solver={err} t={dt:.2f}s"
    record(ACCEPTANCE, 2, ok, detail)
    assert ok


def test_criterion_2_substitute_well():
    oracle, _, _ = maxwell_oracle(SUBSTITUTE, 0.2, 0.4, 1.05)
    (prof, dt) = timed(find_heteroclinic, 0.0, 0.0, SUBSTITUTE, PARAMS)
    P_max = maxwell_select_P(SUBSTITUTE, PARAMS)[0]
    d = abs(prof.P_selected - oracle)
    ok = d <= 1e-8 and abs(P_max - oracle) <= 1e-10 and dt < 1.0
    record(SUPPLEMENTARY, 2, ok, f"well (0.2,0.4,1.05): |P-oracle|={d:.2e} t={dt:.2f}s")
    assert ok


# -- 3 -----------------------------------------------------------------------


def test_criterion_3_continuation_grid():
    recs, bad, order, dt = grid_report(REFERENCE)
    ok = not bad and order >= 1 - 1e-6 and dt < 30.0
    detail = f"{len(recs) - len(bad)}/{len(recs)} converged, order={order:.6f} t={dt:.1f}s"
    if bad:
        detail += f"; first failure {bad[0]}"
    record(ACCEPTANCE, 3, ok, detail)
    assert ok


def test_criterion_3_substitute_well():
    recs, bad, order, dt = grid_report(SUBSTITUTE)
    ok = not bad and order >= 1 - 1e-6 and dt < 30.0
    record(SUPPLEMENTARY, 3, ok, f"well (0.2,0.4,1.05): {len(recs) - len(bad)}/{len(recs)} ok, order={order:.10f} t={dt:.1f}s")
    assert ok


# -- 4 -----------------------------------------------------------------------


def test_criterion_4_equivalence():
    t0 = time.perf_counter()
    rel = []
    for M in (32, 64, 128):
        x = Field1D.periodic_grid(M)
        rep = equivalence_check(Field1D(x, 2 + 0.3 * np.sin(x), 0.1 * np.cos(x)), PARAMS, REFERENCE)
        rel.append(rep.max_difference / rep.scale)
    dt = time.perf_counter() - t0
    ok = max(rel) <= 1e-10 and dt < 1.0
    record(ACCEPTANCE, 4, ok, "relative " + ", ".join(f"{r:.1e}" for r in rel) + f" t={dt:.2f}s")
    assert ok


# -- 5 -----------------------------------------------------------------------


def test_criterion_5_nsk_wave():
    t0 = time.perf_counter()
    prof = find_heteroclinic(0.0, 0.0, KINK, PARAMS)
    res = nsk_wave_residual(prof, PARAMS, KINK).max
    sub0 = subsonicity_check(prof, PARAMS, KINK)
    moving = find_heteroclinic(0.005, 0.0, KINK, PARAMS, init=prof.P_selected)
    sub1 = subsonicity_check(moving, PARAMS, KINK)
    dt = time.perf_counter() - t0
    ok = res <= 1e-6 and sub0.passed and sub1.passed and dt < 1.0
    record(ACCEPTANCE, 5, ok, f"residual={res:.2e} subsonic m=0:{sub0.passed} m=0.005:{sub1.passed} t={dt:.2f}s")
    assert ok


# -- 6 -----------------------------------------------------------------------


def test_criterion_6_binary_eos():
    t0 = time.perf_counter()
    pair = (power_law(1.0, 2.0), power_law(16.0, 2.0))
    sp = solve_phase_volumes(1.0, 0.5, pair)
    closed = max(abs(sp.tau1 - 0.4), abs(sp.tau2 - 1.6), abs(sp.p - 6.25))
    env = max(
        mixture_pressure(t, c, pair).rel_error for t in np.linspace(0.2, 5.0, 20) for c in np.linspace(0.02, 0.98, 20)
    )
    dt = time.perf_counter() - t0
    ok = closed <= 1e-12 and env <= 1e-6 and dt < 1.0
    record(ACCEPTANCE, 6, ok, f"closed-form error={closed:.1e} envelope max rel={env:.1e} t={dt:.2f}s")
    assert ok


# -- 7 -----------------------------------------------------------------------


RUNS = [
    ("solve", KINK_YAML, ""),
    ("solve", REFERENCE_YAML, ""),
    ("sweep", REFERENCE_YAML, ""),
    ("sweep", KINK_YAML, "sweep: {epsilon: [0.0, 0.01, 0.02, 0.03, 0.05], m: [0.0, 0.002, -0.002, 0.005, -0.005]}\n"),
    ("verify-nsk", KINK_YAML, ""),
    ("eos", KINK_YAML, "eos: {tau: [0.5, 1.0, 2.0], c: [0.1, 0.5, 0.9]}\n"),
]


def snapshot(out):
    files = {}
    for p in sorted(out.rglob("*")):
        if p.is_file():
            rel = str(p.relative_to(out))
            if rel == "summary.json":
                doc = json.loads(p.read_text())
                doc.pop("timings")
                files[rel] = json.dumps(doc, sort_keys=True)
            else:
                files[rel] = p.read_bytes()
    return files


def test_criterion_7_determinism(tmp_path):
    diffs, n_files = [], 0
    for i, (cmd, well, extra) in enumerate(RUNS):
        cfg = tmp_path / f"run{i}.yaml"
        cfg.write_text(COMMON_YAML + well + extra)
        snaps, codes = [], []
        for rep in range(2):
            out = tmp_path / f"run{i}_{rep}"
            codes.append(main([cmd, "--config", str(cfg), "--out", str(out)]))
            snaps.append(snapshot(out))
        n_files += len(snaps[0])
        if codes[0] != codes[1]:
            diffs.append(f"{cmd}: exit {codes}")
        for name in sorted(set(snaps[0]) | set(snaps[1])):
            if snaps[0].get(name) != snaps[1].get(name):
                diffs.append(f"{cmd}:{name}")
    ok = not diffs
    record(ACCEPTANCE, 7, ok, f"{len(RUNS)} runs x2, {n_files} artifacts compared" + (f"; differ: {diffs}" if diffs else ""))
    assert ok


# -- 8 -----------------------------------------------------------------------


def epsilon0_run(tmp_path, name, well_yaml):
    cfg = tmp_path / f"{name}.yaml"
    cfg.write_text(COMMON_YAML + well_yaml + "epsilon0: {m: 0.0}\n")
    out = tmp_path / name
    code = main(["epsilon0", "--config", str(cfg), "--out", str(out)])
    est = json.loads((out / "summary.json").read_text())["outcomes"]["epsilon0"]
    return code, est


def describe(code, est):
    if not est["valid"]:
        return f"exit {code} ({est['error'][:60]})"
    return f"exit {code} [{est['eps_ok']}, {est['eps_fail']}) width={est['width']:.3g} {est['limited_by']}"


def test_criterion_8_frontier(tmp_path):
    results = {name: epsilon0_run(tmp_path, name, y) for name, y in (("tilted", KINK_YAML), ("quartic", REFERENCE_YAML))}
    ok = all(code in (0, 2) and est["valid"] and est["width"] <= 1e-4 for code, est in results.values())
    record(ACCEPTANCE, 8, ok, "; ".join(f"{k}: {describe(*v)}" for k, v in results.items()))
    assert ok


def test_criterion_8_substitute_well(tmp_path):
    code, est = epsilon0_run(tmp_path, "substitute", SUBSTITUTE_YAML)
    ok = code in (0, 2) and est["valid"] and est["width"] <= 1e-4
    record(SUPPLEMENTARY, 8, ok, f"well (0.2,0.4,1.05): {describe(code, est)}")
    assert ok


@pytest.mark.parametrize("well", [KINK, SUBSTITUTE], ids=["tilted", "substitute"])
def test_frontier_bracket_is_consistent(well):
    from nsacwave.connect import estimate_epsilon0

    est = estimate_epsilon0(0.0, well, PARAMS)
    assert est.valid and est.eps_ok < est.eps_fail
    assert est.width <= 1e-4
    # the last converged point in the history sits at the lower end of the bracket
    last_ok = max(r.epsilon for r in est.records if r.converged)
    assert last_ok == est.eps_ok
