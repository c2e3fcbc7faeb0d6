"""Mechanical equation of state of two compressible, immiscible phases.

Given the mixture specific volume tau and mass fraction c, the phase volumes
satisfy zero excess volume and pressure equilibrium,

    tau = c*tau1 + (1-c)*tau2,        -U1'(tau1) = -U2'(tau2) = p,

and the mixture energy is U(tau, c) = c*U1(tau1) + (1-c)*U2(tau2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.interpolate import CubicSpline

from .eos import DomainError, ParameterError, load_columns


class BracketError(ValueError):
    """The pressure-equilibrium equation has no bracketed root."""


@dataclass(frozen=True)
class SinglePhaseEnergy:
    family: str
    coeffs: Mapping[str, float]
    U: Callable = field(repr=False, compare=False)
    dU: Callable = field(repr=False, compare=False)
    d2U: Callable = field(repr=False, compare=False)
    tau_range: tuple[float, float] = (0.0, math.inf)


def power_law(A: float, gamma: float) -> SinglePhaseEnergy:
    """U(tau) = A tau^(1-gamma) / (gamma - 1); pressure A tau^-gamma."""
    if not A > 0.0 or not gamma > 1.0:
        raise ParameterError(f"power-law energy needs A > 0 and gamma > 1, got A={A!r}, gamma={gamma!r}")

    def U(t):
        return A * t ** (1.0 - gamma) / (gamma - 1.0)

    def dU(t):
        return -A * t ** (-gamma)

    def d2U(t):
        return gamma * A * t ** (-gamma - 1.0)

    return SinglePhaseEnergy("power-law", {"A": float(A), "gamma": float(gamma)}, U, dU, d2U)


def tabulated_energy(tau, U) -> SinglePhaseEnergy:
    """Energy from convex, decreasing (tau, U) samples via a cubic spline.

    Only defined on the sampled range; queries outside raise :class:`DomainError`.
    """
    tau = np.asarray(tau, dtype=float)
    U = np.asarray(U, dtype=float)
    if tau.ndim != 1 or tau.shape != U.shape or tau.size < 4 or np.any(np.diff(tau) <= 0):
        raise ParameterError("tabulated energy needs >= 4 samples with increasing tau")
    spl = CubicSpline(tau, U)
    probe = np.linspace(tau[0], tau[-1], 50 * tau.size)
    if np.any(spl(probe) <= 0) or np.any(spl(probe, 1) >= 0) or np.any(spl(probe, 2) <= 0):
        raise ParameterError("tabulated energy must be positive, decreasing and strictly convex")
    lo, hi = float(tau[0]), float(tau[-1])

    def guard(fn, nu):
        def g(t):
            if np.any(np.asarray(t) < lo) or np.any(np.asarray(t) > hi):
                raise DomainError(f"tau={t!r} outside tabulated range [{lo}, {hi}]")
            out = spl(t, nu)
            return float(out) if np.ndim(out) == 0 else out

        return g

    return SinglePhaseEnergy("tabulated", {"n_samples": float(tau.size)}, guard(spl, 0), guard(spl, 1), guard(spl, 2), (lo, hi))


def check_energy(e: SinglePhaseEnergy, probes=(1e-6, 1e6)) -> list[str]:
    """Return violated conditions: positivity, monotonicity, convexity, asymptotics."""
    out = []
    lo, hi = e.tau_range
    if math.isinf(hi):
        grid = np.geomspace(1e-3, 1e3, 200)
    else:
        grid = np.linspace(lo, hi, 200)
    if np.any(np.asarray(e.U(grid)) <= 0):
        out.append("U > 0 violated")
    if np.any(np.asarray(e.dU(grid)) >= 0):
        out.append("U' < 0 violated")
    if np.any(np.asarray(e.d2U(grid)) <= 0):
        out.append("U'' > 0 violated")
    if lo == 0.0 and math.isinf(hi):
        # finite probes cannot prove a limit; require U and -U' to keep
        # falling through the probes with a log-slope bounded away from zero
        small, large = probes
        t = np.array([small, math.sqrt(small), 1.0, math.sqrt(large), large])
        for name, f, limit in (("U", e.U, "U(0+) = inf, U(inf) = 0"), ("-U'", lambda x: -e.dU(x), "-U'(0+) = inf, U'(inf) = 0")):
            vals = np.array([f(x) for x in t], dtype=float)
            slopes = np.diff(np.log(vals)) / np.diff(np.log(t))
            if not (np.all(vals > 0) and np.all(slopes < -1e-3)):
                out.append(f"{limit} not supported by {name} at the probes {small:g}, {large:g}")
    return out


@dataclass(frozen=True)
class PhaseSplit:
    tau1: float
    tau2: float
    p: float
    newton_iters: int


def _split(tau: float, c: float, e1, e2) -> tuple[float, float, int]:
    """Root of g(t1) = U1'(t1) - U2'((tau - c t1)/(1 - c)) by bracketed Newton."""
    r = c / (1.0 - c)
    # tau1 range keeping both phase volumes positive and inside tabulated ranges
    a = max(0.0, e1.tau_range[0], (tau - (1.0 - c) * e2.tau_range[1]) / c)
    b = min(tau / c, e1.tau_range[1], (tau - (1.0 - c) * e2.tau_range[0]) / c)
    if not a < b:
        raise BracketError(f"no admissible tau1 for tau={tau!r}, c={c!r}")

    def tau2_of(t1):
        return (tau - c * t1) / (1.0 - c)

    t1 = tau if a < tau < b else 0.5 * (a + b)
    best = (math.inf, t1)
    for it in range(1, 201):
        t2 = tau2_of(t1)
        g = e1.dU(t1) - e2.dU(t2)
        best = min(best, (abs(g), t1))
        if abs(g) <= 1e-14 * max(1.0, abs(e1.dU(t1))):
            break
        if g < 0:
            a = t1
        else:
            b = t1
        dg = e1.d2U(t1) + r * e2.d2U(t2)
        tn = t1 - g / dg if dg > 0 else math.nan
        if not a < tn < b:
            tn = 0.5 * (a + b)
        if abs(tn - t1) <= 4 * np.finfo(float).eps * abs(t1):
            t2 = tau2_of(tn)
            best = min(best, (abs(e1.dU(tn) - e2.dU(t2)), tn))
            break
        t1 = tn
    else:
        raise BracketError(f"phase split did not converge for tau={tau!r}, c={c!r}")
    t1 = best[1]
    return t1, tau2_of(t1), it


def solve_phase_volumes(tau: float, c: float, energies) -> PhaseSplit:
    """Phase specific volumes at common pressure.

    The minority phase volume is eliminated through the volume constraint,
    leaving a strictly increasing scalar equation for the majority phase
    volume; eliminating the majority phase instead would amplify rounding by
    c/(1-c). The root is found by Newton steps safeguarded with bisection.
    """
    e1, e2 = energies
    if not tau > 0.0:
        raise DomainError(f"tau must be positive, got {tau!r}")
    if not 0.0 <= c <= 1.0:
        raise DomainError(f"c must lie in [0, 1], got {c!r}")
    if c == 1.0:
        return PhaseSplit(tau, tau, -e1.dU(tau), 0)
    if c == 0.0:
        return PhaseSplit(tau, tau, -e2.dU(tau), 0)
    if c <= 0.5:
        t2, t1, it = _split(tau, 1.0 - c, e2, e1)
    else:
        t1, t2, it = _split(tau, c, e1, e2)
    return PhaseSplit(float(t1), float(t2), float(-e1.dU(t1)), it)


def mixture_energy(tau: float, c: float, energies) -> float:
    e1, e2 = energies
    sp = solve_phase_volumes(tau, c, energies)
    if c == 1.0:
        return float(e1.U(tau))
    if c == 0.0:
        return float(e2.U(tau))
    return float(c * e1.U(sp.tau1) + (1.0 - c) * e2.U(sp.tau2))


@dataclass(frozen=True)
class MixturePressure:
    p: float
    p_fd: float
    rel_error: float
    envelope_ok: bool
    split: PhaseSplit

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "p_fd": self.p_fd,
            "rel_error": self.rel_error,
            "envelope_ok": self.envelope_ok,
            "tau1": self.split.tau1,
            "tau2": self.split.tau2,
        }


def mixture_pressure(tau: float, c: float, energies, step: float = 1e-6, tol: float = 1e-6) -> MixturePressure:
    """Common pressure -U1'(tau1), checked against -dU/dtau by central differences."""
    sp = solve_phase_volumes(tau, c, energies)
    h = step * max(1.0, abs(tau))
    p_fd = -(mixture_energy(tau + h, c, energies) - mixture_energy(tau - h, c, energies)) / (2.0 * h)
    rel = abs(p_fd - sp.p) / max(abs(sp.p), 1e-300)
    return MixturePressure(sp.p, p_fd, rel, rel <= tol, sp)


def energy_from_config(spec: Mapping) -> SinglePhaseEnergy:
    fam = spec["family"]
    if fam == "power-law":
        return power_law(spec["A"], spec["gamma"])
    if fam == "tabulated":
        data = load_columns(spec["table"])
        return tabulated_energy(data[:, 0], data[:, 1])
    raise ParameterError(f"unknown energy family {fam!r}")
