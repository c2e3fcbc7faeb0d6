import math
from dataclasses import replace

import numpy as np
import pytest

from nsacwave import fd
from nsacwave.connect import (
    ShootingError,
    SolverSettings,
    closed_form_kink,
    continue_family,
    find_heteroclinic,
    maxwell_select_P,
    polish_profile,
    profile_distance,
    profile_residual,
    reflect,
    sweep_grid,
)
from nsacwave.eos import MixtureParams, custom_well
from nsacwave.profile_ode import classify_wave, equilibria
from oracles import cubic_critical, nested_bisection_maxwell

K_KINK = 0.3 * math.sqrt(2 / 0.01)


@pytest.fixture(scope="module")
def kink_profile(kink_well, params):
    return find_heteroclinic(0.0, 0.0, kink_well, params)


@pytest.fixture(scope="module")
def quartic_profile(solvable_well, params):
    return find_heteroclinic(0.0, 0.0, solvable_well, params)


# -- Maxwell selection -------------------------------------------------------


def test_maxwell_kink(kink_well, params):
    P, lo, hi = maxwell_select_P(kink_well, params)
    assert P == pytest.approx(0.1, abs=1e-12)
    assert (lo, hi) == pytest.approx((0.2, 0.8), abs=1e-7)
    V = lambda c: kink_well.W(c) + 0.1 * c
    assert V(0.2) == pytest.approx(0.0, abs=1e-15) and V(0.8) == pytest.approx(0.0, abs=1e-15)


def test_maxwell_matches_nested_bisection(solvable_well, params):
    cmax, cmin = cubic_critical(0.2, 0.4, 1.05)
    oracle = nested_bisection_maxwell(solvable_well.dW, solvable_well.W, cmax, cmin, 0.02, 0.03)
    P, lo, hi = maxwell_select_P(solvable_well, params)
    assert P == pytest.approx(oracle, abs=1e-12)
    # for a cubic W' the equal-value pair is symmetric about the inflection point
    assert P == pytest.approx(-solvable_well.dW((0.2 + 0.4 + 1.05) / 3), abs=1e-12)
    V = lambda c: solvable_well.W(c) + P * c
    assert V(lo) == pytest.approx(V(hi), abs=1e-12)
    assert solvable_well.d2W(lo) > 0 and solvable_well.d2W(hi) > 0
    c = np.linspace(lo, hi, 1001)[1:-1]
    assert np.all(V(c) > V(lo))


def test_maxwell_reference_well_has_no_interior_pair(quartic_well, params):
    # the symmetric pair about the inflection 0.6167 reaches c ~ 1.04 > 1
    with pytest.raises(ShootingError) as exc:
        maxwell_select_P(quartic_well, params)
    assert exc.value.kind == "no-admissible-P"
    s = 0.2 + 0.6 + 1.05
    # tilted W' = x^3 - q x with x = c - s/3, q = s^2/3 - e2; equal-value roots at x = +-sqrt(q)
    half = math.sqrt(s * s / 3 - (0.2 * 0.6 + 0.2 * 1.05 + 0.6 * 1.05))
    assert s / 3 + half == pytest.approx(1.0419, abs=1e-4)


def test_maxwell_mirror_metamorphic(solvable_well, params):
    w = solvable_well
    mirrored = custom_well(lambda c: w.W(1 - c), lambda c: -w.dW(1 - c), lambda c: w.d2W(1 - c))
    P, lo, hi = maxwell_select_P(w, params)
    Pm, lom, him = maxwell_select_P(mirrored, params)
    assert Pm == pytest.approx(-P, abs=1e-12)
    assert (lom, him) == pytest.approx((1 - hi, 1 - lo), abs=1e-10)
    prof = find_heteroclinic(0.0, 0.0, mirrored, params, direction=-1)
    assert prof.P_selected == pytest.approx(-P, abs=1e-8)


# -- closed-form kink --------------------------------------------------------


def test_closed_form_kink_values(kink_well, params):
    prof = closed_form_kink(kink_well, params)
    i0 = int(np.argmin(np.abs(prof.xi)))
    assert prof.xi[i0] == 0.0
    assert prof.c[i0] == pytest.approx(0.5, abs=1e-15)
    assert prof.v[i0] == pytest.approx(0.3 * K_KINK, rel=1e-14)
    assert prof.P_selected == 0.1
    assert prof.c[0] == pytest.approx(0.2, abs=1e-6) and prof.c[-1] == pytest.approx(0.8, abs=1e-6)
    # delta c'' = V'(c) with c'' in closed form
    t = np.tanh(K_KINK * prof.xi)
    c2 = -2 * 0.3 * K_KINK**2 * t * (1 - t * t)
    Vp = kink_well.dW(prof.c) + 0.1
    assert np.max(np.abs(0.01 * c2 - Vp)) <= 1e-12


def test_closed_form_kink_scaling(kink_well):
    k1 = closed_form_kink(kink_well, MixtureParams(delta=0.01)).diagnostics["k"]
    k2 = closed_form_kink(kink_well, MixtureParams(delta=0.0025)).diagnostics["k"]
    assert k2 == pytest.approx(2 * k1, rel=1e-14)


def test_closed_form_kink_wrong_family(solvable_well, params):
    with pytest.raises(ValueError):
        closed_form_kink(solvable_well, params)


# -- shooting ---------------------------------------------------------------


def test_shooting_recovers_kink(kink_profile, kink_well, params):
    exact = closed_form_kink(kink_well, params)
    assert abs(kink_profile.P_selected - 0.1) <= 1e-8
    c_exact = 0.5 + 0.3 * np.tanh(K_KINK * kink_profile.xi)
    assert np.max(np.abs(kink_profile.c - c_exact)) <= 1e-6
    assert profile_distance(kink_profile, exact, ("c",)) <= 1e-6


def test_kink_odd_symmetry(kink_profile):
    from scipy.interpolate import CubicSpline

    pr = kink_profile
    spl = CubicSpline(pr.xi, pr.c)
    xi0 = pr.xi[np.argmin(np.abs(pr.c - 0.5))]
    s = np.linspace(0, 0.5 * pr.L, 200)
    assert np.max(np.abs(spl(xi0 + s) + spl(xi0 - s) - (pr.c_minus + pr.c_plus))) <= 1e-8


def test_shooting_matches_maxwell(quartic_profile, solvable_well, params):
    P, lo, hi = maxwell_select_P(solvable_well, params)
    assert abs(quartic_profile.P_selected - P) <= 1e-8
    assert quartic_profile.c_minus == pytest.approx(lo, abs=1e-8)
    assert quartic_profile.c_plus == pytest.approx(hi, abs=1e-8)


@pytest.mark.parametrize("m,eps", [(0.0, 0.0), (0.005, 0.0), (-0.005, 0.02), (0.002, 0.05)])
def test_profile_invariants(m, eps, solvable_well, params):
    s = SolverSettings()
    prof = find_heteroclinic(m, eps, solvable_well, params)
    assert prof.monotone and np.all(np.diff(prof.c) > 0)
    assert prof.residual_max <= s.residual_tol
    assert abs(prof.c[0] - prof.c_minus) <= 1e-6 and abs(prof.c[-1] - prof.c_plus) <= 1e-6
    assert abs(prof.v[0]) <= 1e-6 and abs(prof.v[-1]) <= 1e-6
    assert prof.xi.size >= 2001
    assert profile_residual(prof, solvable_well) == pytest.approx(prof.residual_max)
    assert prof.classification.undercompressive


def test_first_integral_independent_path(solvable_well):
    pr = MixtureParams(epsilon=0.03)
    prof = find_heteroclinic(0.005, 0.03, solvable_well, pr)
    h = prof.xi[1] - prof.xi[0]
    u_x = fd.d1(prof.u, h)
    m = prof.m
    flux = m * prof.u + prof.p + pr.delta * prof.rho * prof.v**2 - pr.nu * u_x
    assert np.max(np.abs(flux - prof.P_selected)) <= 1e-9
    assert np.max(np.abs(prof.rho * prof.u - m)) <= 1e-15


def test_classification_examples(quartic_profile, solvable_well, params):
    cl = quartic_profile.classification
    assert cl.label == "undercompressive"
    assert cl.subsonic.passed
    assert all(s["u"] == 0.0 for s in cl.subsonic.sides)
    mid = equilibria(quartic_profile.wave, params, solvable_well)[1]
    fake = replace(quartic_profile, c_plus=mid)
    assert classify_wave(fake, params, solvable_well).label == "not undercompressive"


def test_continued_profile_classified_undercompressive(solvable_well, params):
    rec = continue_family([(0.0, 0.0), (0.02, 0.005)], solvable_well, params)
    assert rec[-1].converged and rec[-1].classification == "undercompressive"


def test_reflection_metamorphic(solvable_well, params):
    plus = find_heteroclinic(0.005, 0.0, solvable_well, params, direction=1)
    minus = find_heteroclinic(-0.005, 0.0, solvable_well, params, direction=-1)
    assert minus.P_selected == pytest.approx(plus.P_selected, abs=1e-9)
    assert profile_distance(minus, reflect(plus), ("c", "v")) <= 1e-6


def test_P_of_m_has_first_order_term(solvable_well, params):
    P0 = find_heteroclinic(0.0, 0.0, solvable_well, params).P_selected
    Pp = find_heteroclinic(0.002, 0.0, solvable_well, params, init=P0).P_selected
    Pm = find_heteroclinic(-0.002, 0.0, solvable_well, params, init=P0).P_selected
    # increasing fronts: the m-linear viscous and capillary terms shift P oddly in m
    assert (Pp - P0) * (Pm - P0) < 0
    assert abs((Pp + Pm) / 2 - P0) < 0.1 * abs(Pp - P0)


def test_epsilon_invariance_at_m0(solvable_well, params, quartic_profile):
    for eps in (0.1, 0.5):
        prof = find_heteroclinic(0.0, eps, solvable_well, params.with_epsilon(eps))
        assert prof.P_selected * (1 - eps) == pytest.approx(quartic_profile.P_selected, abs=1e-9)
        assert profile_distance(prof, quartic_profile, ("c", "v")) <= 1e-8


def test_reference_well_reports_no_bracket(quartic_well, params):
    with pytest.raises(ShootingError) as exc:
        find_heteroclinic(0.0, 0.0, quartic_well, params)
    assert exc.value.kind in ("no-bracket", "no-admissible-P")


def test_no_admissible_window(params):
    w = custom_well(lambda c: (c - 0.5) ** 2, lambda c: 2 * (c - 0.5), lambda c: 2.0 + 0 * c)
    with pytest.raises(ShootingError) as exc:
        find_heteroclinic(0.0, 0.0, w, params)
    assert exc.value.kind == "no-admissible-P"


def test_richardson_agreement(quartic_profile):
    assert quartic_profile.diagnostics["richardson_dc"] <= 1e-7


def test_polish_keeps_solution(quartic_profile, solvable_well):
    pol = polish_profile(quartic_profile, solvable_well)
    assert pol.P_selected == pytest.approx(quartic_profile.P_selected, abs=1e-8)
    assert profile_distance(pol, quartic_profile, ("c",)) <= 1e-6


# -- continuation ------------------------------------------------------------


def test_continuation_along_epsilon(solvable_well, params):
    path = [(0.0, 0.0), (0.01, 0.0), (0.02, 0.0), (0.03, 0.0)]
    recs = continue_family(path, solvable_well, params)
    assert [r.converged for r in recs] == [True] * 4
    P = np.array([r.P_selected for r in recs])
    C = np.max(np.abs(np.diff(P))) / 0.01
    assert math.isfinite(C) and C < 1.0
    for r in recs:
        assert r.classification == "undercompressive"
        assert len(r.eigenvalues) == 2


def test_continuation_along_m(solvable_well, params):
    path = [(0.0, 0.0), (0.0, 0.002), (0.0, 0.005), (0.0, -0.002), (0.0, -0.005)]
    recs = continue_family(path, solvable_well, params)
    assert all(r.converged for r in recs)


def test_continuation_trivial_path(kink_well, params, kink_profile):
    rec = continue_family([(0.0, 0.0)], kink_well, params)
    assert len(rec) == 1
    assert rec[0].P_selected == kink_profile.P_selected
    assert np.array_equal(rec[0].profile.c, kink_profile.c)


def test_continuation_path_must_start_at_origin(kink_well, params):
    with pytest.raises(ValueError):
        continue_family([(0.01, 0.0)], kink_well, params)


def test_continuation_frontier_is_a_result(quartic_well, params):
    recs = continue_family([(0.0, 0.0), (0.01, 0.0)], quartic_well, params)
    assert not any(r.converged for r in recs)
    assert all(r.error for r in recs)


def test_sweep_order_and_determinism(kink_well, params):
    eps, ms = [0.0, 0.02], [0.0, 0.002, -0.002]
    a = sweep_grid(eps, ms, kink_well, params)
    b = sweep_grid(eps, ms, kink_well, params)
    assert [(r.epsilon, r.m) for r in a] == [(e, m) for e in eps for m in ms]
    assert [r.as_dict() for r in a] == [r.as_dict() for r in b]
    assert all(r.converged for r in a)
