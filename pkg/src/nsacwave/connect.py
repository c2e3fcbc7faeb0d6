"""Heteroclinic connections: shooting in P, continuation in (epsilon, m), frontier search.

The traveling-wave phase plane is two-dimensional and both end states are
saddles, so a connection is a one-parameter matching problem in the momentum
constant P. For trial P the unstable manifold of the left saddle and the stable
manifold of the right saddle are integrated to the section c = c0 (the middle
rest state); their v-mismatch there is driven to zero by Brent's method.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_bvp, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import fd
from .eos import C_CUT, DomainError, MixtureParams, WellSpec, specific_volume
from .profile_ode import (
    Linearization,
    PhasePoint,
    WaveClassification,
    WaveParams,
    admissible_window,
    classify_wave,
    equilibria,
    linearize_at,
    make_rhs,
    pressure_of,
    rhs,
    velocity_of,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs of the connection solver. Defaults are the documented ones."""

    rtol: float = 1e-10
    atol: float = 1e-12
    manifold_offset: float = 1e-8
    richardson: bool = True
    richardson_offset: float = 1e-9
    richardson_tol: float = 1e-7
    mismatch_tol: float = 1e-10
    p_scan: int = 64
    grid_points: int = 4001
    tail_factor: float = 20.0
    max_span_factor: float = 400.0
    residual_tol: float = 1e-6
    endpoint_tol: float = 1e-6
    polish: bool = False
    polish_tol: float = 1e-9
    min_step: float = 1e-6
    epsilon_step: float = 0.05
    epsilon0_width: float = 1e-4
    epsilon_cap: float = 0.9999
    c_cut: float = C_CUT
    equilibria_grid: int = 2048


class ShootingError(RuntimeError):
    """A connection could not be computed. ``kind`` names the failure mode:
    no-admissible-P, no-bracket, escape, non-saddle, no-convergence, invariant."""

    def __init__(self, kind: str, message: str, **diagnostics):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Profile:
    """A computed diffuse phase boundary on a uniform grid over [-L, L]."""

    xi: np.ndarray
    c: np.ndarray
    v: np.ndarray
    u: np.ndarray
    p: np.ndarray
    rho: np.ndarray
    wave: WaveParams
    c_minus: float
    c_plus: float
    params: MixtureParams
    well_tag: str
    residual_max: float = math.nan
    endpoint_deviation: float = math.nan
    monotone: bool = True
    classification: WaveClassification | None = None
    diagnostics: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    @property
    def P_selected(self) -> float:
        return self.wave.P

    @property
    def m(self) -> float:
        return self.wave.m

    @property
    def L(self) -> float:
        return float(self.xi[-1])

    def summary(self) -> dict:
        out = {
            "epsilon": self.params.epsilon,
            "m": self.wave.m,
            "P_selected": self.wave.P,
            "c_minus": self.c_minus,
            "c_plus": self.c_plus,
            "L": self.L,
            "grid_points": int(self.xi.size),
            "residual_max": self.residual_max,
            "endpoint_deviation": self.endpoint_deviation,
            "monotone": self.monotone,
            "well": self.well_tag,
            "warnings": list(self.warnings),
        }
        if self.classification is not None:
            out["classification"] = self.classification.as_dict()
        out.update({k: v for k, v in self.diagnostics.items() if k not in out})
        return out


@dataclass(frozen=True)
class ContinuationRecord:
    epsilon: float
    m: float
    converged: bool
    P_selected: float = math.nan
    eigenvalues: tuple = ()
    iterations: int = 0
    residual_max: float = math.nan
    classification: str = ""
    error: str | None = None
    profile: Profile | None = field(default=None, repr=False, compare=False)

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "m": self.m,
            "converged": self.converged,
            "P_selected": self.P_selected,
            "eigenvalues": [list(e) for e in self.eigenvalues],
            "iterations": self.iterations,
            "residual_max": self.residual_max,
            "classification": self.classification,
            "error": self.error,
        }


# ---------------------------------------------------------------------------
# Maxwell selection at epsilon = 0, m = 0


def maxwell_select_P(well: WellSpec, params: MixtureParams, n_grid: int = 2048, c_cut: float = C_CUT):
    """Equal-value selection of P for the tilted potential V(c) = W(c) + tau_star P c.

    Returns ``(P, c_minus, c_plus)``. Raises ``ShootingError('no-admissible-P')``
    when no P in the three-rest-state window gives V(c_minus) = V(c_plus).
    """
    base = params.with_epsilon(0.0)
    win = admissible_window(0.0, base, well, n_grid, c_cut)
    if win is None:
        raise ShootingError("no-admissible-P", "no P gives three rest states with saddle end states")
    ts = base.tau_star

    def outer(P):
        r = equilibria(WaveParams.of(0.0, P, base), base, well, n_grid, c_cut)
        if len(r) != 3:
            return None
        return r[0], r[2]

    def gap(P):
        lo, hi = outer(P)
        return (well.W(hi) + ts * P * hi) - (well.W(lo) + ts * P * lo)

    # shrink inward until both ends have three rest states
    a, b = win
    pad = 1e-9 * max(1.0, b - a)
    while outer(a + pad) is None and pad < (b - a) / 4:
        pad *= 4
    a += pad
    pad = 1e-9 * max(1.0, b - a)
    while outer(b - pad) is None and pad < (b - a) / 4:
        pad *= 4
    b -= pad
    ga, gb = gap(a), gap(b)
    if ga * gb > 0:
        raise ShootingError(
            "no-admissible-P",
            f"V(c_plus) - V(c_minus) keeps one sign on the window [{a:.6g}, {b:.6g}] "
            f"(from {ga:.6g} to {gb:.6g}); the well admits no equal-value pair in (0, 1)",
            window=(a, b),
            gap=(ga, gb),
        )
    # plain bisection to the limit of floating point
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        gm = gap(mid)
        if gm == 0.0:
            a = b = mid
            break
        if (gm > 0) == (ga > 0):
            a, ga = mid, gm
        else:
            b = mid
    P = 0.5 * (a + b)
    lo, hi = outer(P)
    return P, lo, hi


def closed_form_kink(well: WellSpec, params: MixtureParams, grid_points: int = 4001, tail_factor: float = 20.0):
    """tanh kink of the tilted-quartic well at epsilon = 0, m = 0."""
    if well.family != "tilted-quartic":
        raise ValueError(f"closed-form kink needs the tilted-quartic well, got {well.family!r}")
    if params.epsilon != 0.0:
        raise ValueError("closed-form kink is the epsilon = 0 profile")
    a, c1, c2, P0 = (well.coeffs[k] for k in ("a", "c1", "c2", "P0"))
    half = 0.5 * (c2 - c1)
    k = half * math.sqrt(2.0 * a / params.delta)
    L = tail_factor / (2.0 * k)
    xi = np.linspace(-L, L, grid_points)
    th = np.tanh(k * xi)
    c = 0.5 * (c1 + c2) + half * th
    v = half * k * (1.0 - th * th)
    wave = WaveParams.of(0.0, P0, params)
    rho = 1.0 / specific_volume(c, params)
    return Profile(
        xi,
        c,
        v,
        np.zeros_like(c),
        pressure_of(PhasePoint(c, v), wave, params),
        rho,
        wave,
        c1,
        c2,
        params,
        well.family,
        diagnostics={"k": k},
    )


# ---------------------------------------------------------------------------
# shooting


@dataclass
class _Leg:
    sol: object
    T: float
    v_end: float
    c_launch: float
    lam: float


@dataclass
class _Shot:
    P: float
    wave: WaveParams
    c_left: float
    c_mid: float
    c_right: float
    lin_left: Linearization
    lin_right: Linearization
    fwd: _Leg | None = None
    bwd: _Leg | None = None
    failure: str | None = None

    @property
    def mismatch(self) -> float:
        if self.fwd is None or self.bwd is None:
            return math.nan
        return self.fwd.v_end - self.bwd.v_end


class _Shooter:
    def __init__(self, m, params, well, settings, direction):
        self.m = float(m)
        self.params = params
        self.well = well
        self.s = settings
        self.direction = 1 if direction >= 0 else -1
        self.evaluations = 0

    def setup(self, P) -> _Shot:
        wave = WaveParams.of(self.m, P, self.params)
        roots = equilibria(wave, self.params, self.well, self.s.equilibria_grid, self.s.c_cut)
        if len(roots) != 3:
            raise ShootingError("no-admissible-P", f"P={P!r} gives {len(roots)} rest states, need 3", roots=roots)
        lo, mid, hi = roots
        c_left, c_right = (lo, hi) if self.direction > 0 else (hi, lo)
        lin_l = linearize_at(c_left, wave, self.params, self.well)
        lin_r = linearize_at(c_right, wave, self.params, self.well)
        if lin_l.kind != "saddle" or lin_r.kind != "saddle":
            raise ShootingError(
                "non-saddle", f"end states are {lin_l.kind}/{lin_r.kind} at P={P!r}", kinds=(lin_l.kind, lin_r.kind)
            )
        return _Shot(float(P), wave, c_left, mid, c_right, lin_l, lin_r)

    def shoot(self, P, offset, dense=False) -> _Shot:
        shot = self.setup(P)
        self.evaluations += 1
        f = make_rhs(shot.wave, self.params, self.well, self.s.c_cut)
        lam_u, vec_u = shot.lin_left.unstable
        lam_s, vec_s = shot.lin_right.stable
        span = self.s.max_span_factor / min(lam_u, -lam_s)
        shot.fwd = self._leg(f, shot.c_left, shot.c_mid, lam_u, vec_u, offset, span, dense)
        shot.bwd = self._leg(f, shot.c_right, shot.c_mid, lam_s, vec_s, offset, -span, dense)
        if shot.fwd is None or shot.bwd is None:
            shot.failure = "leg did not reach the section"
        return shot

    def _leg(self, f, c_eq, c_sec, lam, vec, offset, span, dense):
        sgn = 1.0 if c_sec > c_eq else -1.0
        y0 = [c_eq + sgn * offset, sgn * offset * vec[1]]
        lo, hi = self.s.c_cut, 1.0 - self.s.c_cut

        def section(t, y):
            return y[0] - c_sec

        def turn(t, y):
            return y[1]

        def low(t, y):
            return y[0] - lo

        def high(t, y):
            return hi - y[0]

        for ev in (section, turn, low, high):
            ev.terminal = True
        try:
            sol = solve_ivp(
                f,
                (0.0, span),
                y0,
                method="DOP853",
                rtol=self.s.rtol,
                atol=self.s.atol,
                events=(section, turn, low, high),
                dense_output=dense,
            )
        except DomainError:
            return None
        if sol.status != 1 or sol.t_events[0].size == 0:
            return None
        T = float(sol.t_events[0][0])
        v_end = float(sol.y_events[0][0][1])
        return _Leg(sol, T, v_end, y0[0], lam)

    def mismatch(self, P, offset) -> float:
        try:
            return self.shoot(P, offset).mismatch
        except ShootingError:
            return math.nan

    def bracket(self, window, guess, offset):
        lo, hi = window
        n = self.s.p_scan
        grid = lo + (np.arange(n) + 0.5) / n * (hi - lo)
        if guess is not None and lo < guess < hi:
            br = self._expand(guess, window, offset)
            if br is not None:
                return br
        prev = None
        for P in grid:
            val = self.mismatch(float(P), offset)
            if not math.isfinite(val):
                continue
            if val == 0.0:
                return float(P), float(P), val, val
            if prev is not None and prev[1] * val < 0:
                return prev[0], float(P), prev[1], val
            prev = (float(P), val)
        return None

    def _expand(self, guess, window, offset):
        f0 = self.mismatch(guess, offset)
        if not math.isfinite(f0):
            return None
        if f0 == 0.0:
            return guess, guess, f0, f0
        lo, hi = window
        h = 1e-6 * max(abs(guess), hi - lo)
        f1 = self.mismatch(guess + h, offset)
        if math.isfinite(f1) and f1 != f0:
            if f0 * f1 < 0:
                return guess, guess + h, f0, f1
            centre = guess - f0 * h / (f1 - f0)
            eta = max(0.05 * abs(centre - guess), h)
        else:
            centre, eta = guess, h
        for _ in range(12):
            a, b = max(centre - eta, lo + 1e-12 * (hi - lo)), min(centre + eta, hi - 1e-12 * (hi - lo))
            fa, fb = self.mismatch(a, offset), self.mismatch(b, offset)
            if math.isfinite(fa) and math.isfinite(fb) and fa * fb <= 0:
                return a, b, fa, fb
            eta *= 8.0
        return None

    def solve_P(self, window, guess, offset):
        br = self.bracket(window, guess, offset)
        if br is None:
            raise ShootingError(
                "no-bracket", f"mismatch keeps one sign over P in [{window[0]:.8g}, {window[1]:.8g}]", window=window
            )
        a, b, fa, fb = br
        if a == b:
            return a

        def g(P):
            val = self.mismatch(P, offset)
            if not math.isfinite(val):
                raise ShootingError("escape", f"shooting leg failed inside the bracket at P={P!r}")
            return val

        return brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def _assemble(shooter: _Shooter, shot: _Shot, settings: SolverSettings, well: WellSpec) -> Profile:
    params = shooter.params
    fwd, bwd = shot.fwd, shot.bwd
    Tf, Tb = fwd.T, -bwd.T
    c_minus, c_plus = shot.c_left, shot.c_right
    mid = 0.5 * (c_minus + c_plus)

    def c_left_leg(xi):
        return fwd.sol.sol(xi + Tf)[0]

    def c_right_leg(xi):
        return bwd.sol.sol(xi - Tb)[0]

    if (mid - shot.c_mid) * (c_plus - c_minus) <= 0:
        xi_mid = brentq(lambda x: c_left_leg(x) - mid, -Tf, 0.0, xtol=1e-15)
    else:
        xi_mid = brentq(lambda x: c_right_leg(x) - mid, 0.0, Tb, xtol=1e-15)

    lam_min = min(fwd.lam, -bwd.lam)
    L = max(settings.tail_factor / lam_min, Tf + xi_mid, Tb - xi_mid)
    zeta = np.linspace(-L, L, settings.grid_points)
    xi = zeta + xi_mid
    c = np.empty_like(xi)
    v = np.empty_like(xi)

    tl = xi < -Tf
    ll = (xi >= -Tf) & (xi <= 0.0)
    rl = (xi > 0.0) & (xi <= Tb)
    tr = xi > Tb
    if ll.any():
        c[ll], v[ll] = fwd.sol.sol(xi[ll] + Tf)
    if rl.any():
        c[rl], v[rl] = bwd.sol.sol(xi[rl] - Tb)
    if tl.any():
        dev = (fwd.c_launch - c_minus) * np.exp(fwd.lam * (xi[tl] + Tf))
        c[tl] = c_minus + dev
        v[tl] = fwd.lam * dev
    if tr.any():
        dev = (bwd.c_launch - c_plus) * np.exp(bwd.lam * (xi[tr] - Tb))
        c[tr] = c_plus + dev
        v[tr] = bwd.lam * dev
    return _profile_from_state(zeta, c, v, shot.wave, c_minus, c_plus, params, well, settings)


def _profile_from_state(xi, c, v, wave, c_minus, c_plus, params, well, settings, diagnostics=None) -> Profile:
    rho = 1.0 / specific_volume(c, params)
    prof = Profile(
        xi,
        c,
        v,
        velocity_of(c, wave, params),
        pressure_of(PhasePoint(c, v), wave, params),
        rho,
        wave,
        float(c_minus),
        float(c_plus),
        params,
        well.family,
        diagnostics=dict(diagnostics or {}),
    )
    return _with_checks(prof, well, settings)


def profile_residual(profile: Profile, well: WellSpec, c_cut: float = C_CUT) -> float:
    """Max ODE residual of the stored (c, v) against fourth-order differences."""
    h = float(profile.xi[1] - profile.xi[0])
    dc = fd.d1(profile.c, h)
    dv = fd.d1(profile.v, h)
    _, f2 = rhs(PhasePoint(profile.c, profile.v), profile.wave, profile.params, well, c_cut)
    return float(max(np.max(np.abs(dc - profile.v)), np.max(np.abs(dv - f2))))


def _with_checks(prof: Profile, well: WellSpec, settings: SolverSettings) -> Profile:
    res = profile_residual(prof, well, settings.c_cut)
    dev = float(
        max(abs(prof.c[0] - prof.c_minus), abs(prof.c[-1] - prof.c_plus), abs(prof.v[0]), abs(prof.v[-1]))
    )
    sgn = 1.0 if prof.c_plus > prof.c_minus else -1.0
    mono = bool(np.all(sgn * np.diff(prof.c) > 0))
    warnings = list(prof.warnings)
    if not mono:
        warnings.append("c is not strictly monotone on the grid")
    return replace(prof, residual_max=res, endpoint_deviation=dev, monotone=mono, warnings=tuple(warnings))


def find_heteroclinic(
    m: float,
    epsilon: float,
    well: WellSpec,
    params: MixtureParams,
    init: Profile | float | None = None,
    settings: SolverSettings | None = None,
    direction: int = 1,
) -> Profile:
    """Compute the connection with mass flux ``m`` at density ratio ``epsilon``.

    ``init`` seeds the P search (a nearby profile or a P value). ``direction``
    +1 gives a front with c increasing in xi, -1 the reversed orientation.
    Raises :class:`ShootingError` with diagnostics when no connection is found.
    """
    s = settings or SolverSettings()
    params = params.with_epsilon(epsilon)
    shooter = _Shooter(m, params, well, s, direction)
    window = admissible_window(m, params, well, s.equilibria_grid, s.c_cut)
    if window is None:
        raise ShootingError("no-admissible-P", "no P gives three rest states with saddle end states")
    guess = init.P_selected if isinstance(init, Profile) else init

    P = shooter.solve_P(window, guess, s.manifold_offset)
    shot = shooter.shoot(P, s.manifold_offset, dense=True)
    if shot.failure:
        raise ShootingError("escape", shot.failure, P=P)
    mis = shot.mismatch
    diag = {"mismatch": mis, "evaluations": shooter.evaluations, "window": list(window)}
    if not abs(mis) <= s.mismatch_tol:
        raise ShootingError("no-convergence", f"|mismatch|={abs(mis):.3e} > {s.mismatch_tol:g} at P={P!r}", **diag)
    prof = _assemble(shooter, shot, s, well)

    if s.richardson:
        P2 = shooter.solve_P(window, P, s.richardson_offset)
        shot2 = shooter.shoot(P2, s.richardson_offset, dense=True)
        if shot2.failure:
            raise ShootingError("escape", shot2.failure, P=P2)
        prof2 = _assemble(shooter, shot2, s, well)
        n = min(prof.c.size, prof2.c.size)
        if prof.L == prof2.L:
            dc = float(np.max(np.abs(prof.c[:n] - prof2.c[:n])))
        else:
            dc = float(np.max(np.abs(CubicSpline(prof2.xi, prof2.c)(prof.xi) - prof.c)))
        diag.update(richardson_dc=dc, richardson_dP=abs(P2 - P))
        if dc > s.richardson_tol:
            raise ShootingError("no-convergence", f"offset check: profiles differ by {dc:.3e}", **diag)
    diag["evaluations"] = shooter.evaluations

    if s.polish:
        prof = polish_profile(prof, well, s)
        diag["polish_dP"] = abs(prof.P_selected - P)

    prof = replace(prof, diagnostics={**prof.diagnostics, **diag})
    prof = replace(prof, classification=classify_wave(prof, params, well))
    problems = []
    if not prof.residual_max <= s.residual_tol:
        problems.append(f"residual {prof.residual_max:.3e} > {s.residual_tol:g}")
    if not prof.endpoint_deviation <= s.endpoint_tol:
        problems.append(f"endpoint deviation {prof.endpoint_deviation:.3e} > {s.endpoint_tol:g}")
    if not prof.classification.undercompressive:
        problems.append(f"classification {prof.classification.label}")
    if problems:
        raise ShootingError("invariant", "; ".join(problems), profile=prof)
    return prof


# ---------------------------------------------------------------------------
# collocation polish


def polish_profile(profile: Profile, well: WellSpec, settings: SolverSettings | None = None) -> Profile:
    """Newton/collocation refinement of a shooting profile, P free.

    The line is folded at xi = 0 into a four-component system on [0, L] with the
    phase condition c(0) = (c_minus + c_plus)/2 and projection conditions onto
    the saddle eigendirections at both ends.
    """
    s = settings or SolverSettings()
    params = profile.params
    m, nu = profile.wave.m, profile.wave.nu
    eps, ts, d = params.epsilon, params.tau_star, params.delta
    sd = math.sqrt(d)
    slope = (1.0 - eps) * ts
    mid = 0.5 * (profile.c_minus + profile.c_plus)
    left_first = profile.c_minus
    n_rest = int(np.argmin(np.abs(profile.xi)))
    L = profile.L

    def f2(c, v, P):
        tau = (c + (1.0 - c) * eps) * ts
        rho = 1.0 / tau
        p = P - m * m * tau - d * rho * v * v + nu * m * slope * v
        q = -(slope * p + well.dW(c))
        return (sd * m * v - rho * q) / (d * rho) + slope * rho * v * v

    def fun(x, y, p):
        P = p[0]
        return np.vstack((y[1], f2(y[0], y[1], P), -y[3], -f2(y[2], y[3], P)))

    def ends(P):
        wave = WaveParams.of(m, P, params)
        roots = equilibria(wave, params, well, s.equilibria_grid, s.c_cut)
        lo, _, hi = roots
        c_l, c_r = (lo, hi) if left_first < profile.c_plus else (hi, lo)
        lam_u = linearize_at(c_l, wave, params, well).unstable[0]
        lam_s = linearize_at(c_r, wave, params, well).stable[0]
        return c_l, c_r, lam_u, lam_s

    def bc(ya, yb, p):
        c_l, c_r, lam_u, lam_s = ends(p[0])
        return np.array(
            [
                ya[0] - mid,
                ya[2] - mid,
                ya[1] - ya[3],
                yb[1] - lam_s * (yb[0] - c_r),
                yb[3] - lam_u * (yb[2] - c_l),
            ]
        )

    x = profile.xi[n_rest:] - profile.xi[n_rest]
    x = x[x <= L]
    right = np.vstack((np.interp(x, profile.xi, profile.c), np.interp(x, profile.xi, profile.v)))
    left = np.vstack((np.interp(-x, profile.xi, profile.c), np.interp(-x, profile.xi, profile.v)))
    y0 = np.vstack((right, left))
    sol = solve_bvp(fun, bc, x, y0, p=[profile.P_selected], tol=s.polish_tol, max_nodes=200000)
    if not sol.success:
        raise ShootingError("no-convergence", f"collocation polish failed: {sol.message}")
    P = float(sol.p[0])
    c_l, c_r, _, _ = ends(P)
    xi = np.linspace(-L, L, profile.xi.size)
    c = np.empty_like(xi)
    v = np.empty_like(xi)
    pos = xi >= 0
    yr = sol.sol(xi[pos])
    yl = sol.sol(-xi[~pos])
    c[pos], v[pos] = yr[0], yr[1]
    c[~pos], v[~pos] = yl[2], yl[3]
    wave = WaveParams.of(m, P, params)
    return _profile_from_state(
        xi, c, v, wave, c_l, c_r, params, well, s, {**profile.diagnostics, "polished": True}
    )


# ---------------------------------------------------------------------------
# continuation


def _record(eps, m, prof: Profile | None, error: str | None = None, iterations: int = 0) -> ContinuationRecord:
    if prof is None:
        return ContinuationRecord(float(eps), float(m), False, error=error, iterations=iterations)
    cl = prof.classification
    eig = ()
    if cl is not None:
        eig = (
            tuple(sorted(float(z.real) for z in cl.left.eigenvalues)),
            tuple(sorted(float(z.real) for z in cl.right.eigenvalues)),
        )
    return ContinuationRecord(
        float(eps),
        float(m),
        True,
        prof.P_selected,
        eig,
        int(prof.diagnostics.get("evaluations", 0)),
        prof.residual_max,
        cl.label if cl is not None else "",
        None,
        prof,
    )


def _predict(prof: Profile, eps_new: float) -> float:
    # at m = 0 only (1 - eps) P enters the reduced ODE
    return prof.P_selected * (1.0 - prof.params.epsilon) / (1.0 - eps_new)


def continue_family(
    path,
    well: WellSpec,
    params: MixtureParams,
    settings: SolverSettings | None = None,
    direction: int = 1,
    base: Profile | None = None,
) -> list[ContinuationRecord]:
    """Natural-parameter continuation along (epsilon, m) targets starting at (0, 0).

    Failed steps are halved down to ``settings.min_step``; past that the
    frontier is recorded and the remaining targets are marked unreached.
    """
    s = settings or SolverSettings()
    path = [(float(e), float(mm)) for e, mm in path]
    if not path or path[0] != (0.0, 0.0):
        raise ValueError("continuation path must start at (0, 0)")
    records = []
    try:
        cur = base if base is not None else find_heteroclinic(0.0, 0.0, well, params, settings=s, direction=direction)
    except ShootingError as exc:
        records.append(_record(0.0, 0.0, None, str(exc)))
        records += [_record(e, mm, None, "base solution at (0, 0) did not converge") for e, mm in path[1:]]
        return records
    records.append(_record(0.0, 0.0, cur))
    frontier = None
    for target in path[1:]:
        if frontier is not None:
            records.append(_record(*target, None, f"beyond frontier reached near {frontier}"))
            continue
        start = (cur.params.epsilon, cur.m)
        dist = math.hypot(target[0] - start[0], target[1] - start[1])
        t, h = 0.0, 1.0
        tries = 0
        last_err = None
        while t < 1.0:
            h = min(h, 1.0 - t)
            tn = t + h
            e = start[0] + tn * (target[0] - start[0])
            mm = start[1] + tn * (target[1] - start[1])
            if tn == 1.0:
                e, mm = target
            tries += 1
            try:
                cur = find_heteroclinic(mm, e, well, params, init=_predict(cur, e), settings=s, direction=direction)
                t = tn
                h *= 2.0
            except ShootingError as exc:
                last_err = str(exc)
                h *= 0.5
                if h * dist < s.min_step:
                    frontier = (e, mm)
                    break
        if frontier is not None:
            records.append(_record(*target, None, f"frontier: {last_err}", tries))
        else:
            records.append(replace(_record(*target, cur), iterations=tries))
    return records


def sweep_grid(
    eps_values,
    m_values,
    well: WellSpec,
    params: MixtureParams,
    settings: SolverSettings | None = None,
    direction: int = 1,
) -> list[ContinuationRecord]:
    """Solve on an (epsilon, m) grid, each point continued from the (0, 0) solution.

    Records are returned in row-major input order (epsilon outer, m inner).
    """
    s = settings or SolverSettings()
    try:
        base = find_heteroclinic(0.0, 0.0, well, params, settings=s, direction=direction)
    except ShootingError as exc:
        return [
            _record(e, mm, None, f"base solution at (0, 0) did not converge: {exc}")
            for e in eps_values
            for mm in m_values
        ]
    out = []
    for e in eps_values:
        for mm in m_values:
            if float(e) == 0.0 and float(mm) == 0.0:
                out.append(_record(0.0, 0.0, base))
                continue
            recs = continue_family([(0.0, 0.0), (e, mm)], well, params, s, direction, base=base)
            out.append(recs[-1])
    return out


@dataclass(frozen=True)
class Epsilon0Estimate:
    """Empirical solver frontier in epsilon; not a proof of the existence threshold."""

    m: float
    valid: bool
    eps_ok: float = math.nan
    eps_fail: float = math.nan
    limited_by: str = ""
    records: tuple = ()
    error: str | None = None

    @property
    def width(self) -> float:
        return self.eps_fail - self.eps_ok

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "valid": self.valid,
            "eps_ok": self.eps_ok,
            "eps_fail": self.eps_fail,
            "width": self.width,
            "limited_by": self.limited_by,
            "label": "empirical solver frontier",
            "error": self.error,
            "records": [r.as_dict() for r in self.records],
        }


def estimate_epsilon0(
    m: float,
    well: WellSpec,
    params: MixtureParams,
    settings: SolverSettings | None = None,
    direction: int = 1,
) -> Epsilon0Estimate:
    """March in epsilon from 0, then bisect between the last success and first failure.

    If every step converges up to ``settings.epsilon_cap`` the bracket is
    [cap, 1) and ``limited_by`` is "domain" rather than "solver".
    """
    s = settings or SolverSettings()
    recs = continue_family([(0.0, 0.0), (0.0, m)] if m != 0 else [(0.0, 0.0)], well, params, s, direction)
    if not recs[-1].converged:
        return Epsilon0Estimate(float(m), False, records=tuple(recs), error=f"invalid-precondition: {recs[-1].error}")
    cur = recs[-1].profile
    history = [recs[-1]]
    eps_ok = 0.0
    eps_fail = None
    while eps_fail is None and eps_ok < s.epsilon_cap:
        trial = min(eps_ok + s.epsilon_step, s.epsilon_cap)
        try:
            cur = find_heteroclinic(m, trial, well, params, init=_predict(cur, trial), settings=s, direction=direction)
            history.append(_record(trial, m, cur))
            eps_ok = trial
        except ShootingError as exc:
            history.append(_record(trial, m, None, str(exc)))
            eps_fail = trial
    if eps_fail is None:
        return Epsilon0Estimate(float(m), True, eps_ok, 1.0, "domain", tuple(history))
    while eps_fail - eps_ok > s.epsilon0_width:
        trial = 0.5 * (eps_ok + eps_fail)
        try:
            cur = find_heteroclinic(m, trial, well, params, init=_predict(cur, trial), settings=s, direction=direction)
            history.append(_record(trial, m, cur))
            eps_ok = trial
        except ShootingError as exc:
            history.append(_record(trial, m, None, str(exc)))
            eps_fail = trial
    return Epsilon0Estimate(float(m), True, eps_ok, eps_fail, "solver", tuple(history))


# ---------------------------------------------------------------------------
# profile comparisons


def profile_distance(a: Profile, b: Profile, fields=("c", "v")) -> float:
    """Sup-norm distance of selected fields on the overlap of the two grids."""
    lo = max(a.xi[0], b.xi[0])
    hi = min(a.xi[-1], b.xi[-1])
    mask = (a.xi >= lo) & (a.xi <= hi)
    x = a.xi[mask]
    out = 0.0
    for name in fields:
        fa = np.asarray(getattr(a, name))[mask]
        fb = CubicSpline(b.xi, getattr(b, name))(x)
        out = max(out, float(np.max(np.abs(fa - fb))))
    return out


def reflect(profile: Profile) -> Profile:
    """Mirror xi -> -xi (and v -> -v, m -> -m); maps a +m solution to a -m solution."""
    wave = WaveParams(-profile.wave.m, profile.wave.P, profile.wave.nu)
    c = profile.c[::-1].copy()
    v = -profile.v[::-1]
    return replace(
        profile,
        xi=-profile.xi[::-1],
        c=c,
        v=v,
        u=-profile.u[::-1],
        p=profile.p[::-1].copy(),
        rho=profile.rho[::-1].copy(),
        wave=wave,
        c_minus=profile.c_plus,
        c_plus=profile.c_minus,
        classification=None,
    )
