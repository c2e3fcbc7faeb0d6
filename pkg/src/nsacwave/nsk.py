"""Korteweg limit (epsilon = 0): pressure elimination, NSK stresses and checks.

At epsilon = 0 the specific volume is c*tau_star, so c = 1/(tau_star*rho) and the
phase equation turns into an expression for the pressure. Substituting it in
the momentum equation gives the Navier-Stokes-Korteweg form with viscous
stress S and capillary stress K.

The one-dimensional fluxes compared here are

    NSAC:  rho u^2 + p - nu u_x + delta rho c_x^2
    NSK:   rho u^2 - S - K

and ``psi_rho`` in K is the partial derivative of
psi = W(1/(tau_star rho)) + kappa(rho)/(2 rho) rho_x^2 at fixed rho_x. Dropping
the gradient part of psi_rho breaks the identity by 2 kappa rho_x^2
(see :func:`equivalence_check` with ``convention="bulk"``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fd
from .eos import MixtureParams, WellSpec


class ConstraintViolation(ValueError):
    """Fields are not an epsilon = 0 state with c = 1/(tau_star rho)."""


class SpinodalError(ValueError):
    """Sound speed requested where W'' <= 0."""


@dataclass(frozen=True)
class Field1D:
    x: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    c: np.ndarray | None = None
    periodic: bool = True

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.size < 16:
            raise ValueError("Field1D needs at least 16 grid points")
        dx = np.diff(x)
        if not np.all(dx > 0) or not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
            raise ValueError("Field1D grid must be uniform and increasing")
        for name in ("rho", "u") + (("c",) if self.c is not None else ()):
            if np.shape(getattr(self, name)) != x.shape:
                raise ValueError(f"field {name} does not match the grid")
        if not np.all(np.asarray(self.rho) > 0):
            raise ValueError("rho must be positive")

    @property
    def h(self) -> float:
        x = np.asarray(self.x)
        if self.periodic:
            # periodic grids omit the right endpoint
            return float(x[1] - x[0])
        return float((x[-1] - x[0]) / (x.size - 1))

    @classmethod
    def periodic_grid(cls, M: int, length: float = 2 * np.pi) -> np.ndarray:
        return np.arange(M) * (length / M)


@dataclass(frozen=True)
class NskCoeffs:
    psi: np.ndarray
    kappa: np.ndarray
    psi_rho: np.ndarray


def kappa(rho, params: MixtureParams):
    return params.delta / params.tau_star**2 / rho**3


def _check_constraint(fields: Field1D, params: MixtureParams, tol: float = 1e-12) -> np.ndarray:
    if params.epsilon != 0.0:
        raise ConstraintViolation(f"Korteweg form requires epsilon = 0, got {params.epsilon!r}")
    rho = np.asarray(fields.rho, dtype=float)
    c_from_rho = 1.0 / (params.tau_star * rho)
    if fields.c is not None:
        err = float(np.max(np.abs(np.asarray(fields.c) - c_from_rho)))
        if err > tol:
            raise ConstraintViolation(f"c differs from 1/(tau_star rho) by {err:.3e}")
    return c_from_rho


@dataclass(frozen=True)
class _Grads:
    rho: np.ndarray
    u: np.ndarray
    c: np.ndarray
    rho_x: np.ndarray
    rho_xx: np.ndarray
    u_x: np.ndarray
    c_x: np.ndarray
    c_xx: np.ndarray


def _grads(fields: Field1D, params: MixtureParams) -> _Grads:
    """Stencil derivatives of rho and u; c-derivatives by the chain rule of c = 1/(tau_star rho).

    Both flux forms are built from these same arrays, so the NSAC/NSK comparison
    sees no stencil mismatch.
    """
    c = _check_constraint(fields, params)
    rho = np.asarray(fields.rho, dtype=float)
    u = np.asarray(fields.u, dtype=float)
    h, per = fields.h, fields.periodic
    rho_x = fd.d1(rho, h, per)
    rho_xx = fd.d1(rho_x, h, per)
    u_x = fd.d1(u, h, per)
    ts = params.tau_star
    c_x = -rho_x / (ts * rho**2)
    c_xx = -rho_xx / (ts * rho**2) + 2.0 * rho_x**2 / (ts * rho**3)
    return _Grads(rho, u, c, rho_x, rho_xx, u_x, c_x, c_xx)


def _pressure(g: _Grads, params: MixtureParams, well: WellSpec) -> np.ndarray:
    ts, d = params.tau_star, params.delta
    div_cap = d * (g.rho_x * g.c_x + g.rho * g.c_xx)
    return (-well.dW(g.c) + div_cap / g.rho) / ts - math.sqrt(d) / ts**2 / g.rho * g.u_x


def eliminate_pressure(fields: Field1D, params: MixtureParams, well: WellSpec) -> np.ndarray:
    """p = [-W'(c) + (delta rho c_x)_x / rho] / tau_star - sqrt(delta) u_x / (tau_star^2 rho)."""
    return _pressure(_grads(fields, params), params, well)


def stress_S(fields: Field1D, params: MixtureParams) -> np.ndarray:
    g = _grads(fields, params)
    return _stress_S(g, params)


def _stress_S(g: _Grads, params: MixtureParams) -> np.ndarray:
    return (params.nu + math.sqrt(params.delta) / params.tau_star**2 / g.rho) * g.u_x


def nsk_coeffs(rho, rho_x, params: MixtureParams, well: WellSpec, convention: str = "full") -> NskCoeffs:
    ts = params.tau_star
    c = 1.0 / (ts * rho)
    k = kappa(rho, params)
    psi = well.W(c) + k / (2.0 * rho) * rho_x**2
    psi_rho = -well.dW(c) / (ts * rho**2)
    if convention == "full":
        # d/drho [kappa/(2 rho)] = -2 delta / (tau_star^2 rho^5)
        psi_rho = psi_rho - 2.0 * params.delta / ts**2 / rho**5 * rho_x**2
    elif convention != "bulk":
        raise ValueError(f"unknown convention {convention!r}")
    return NskCoeffs(psi, k, psi_rho)


def _stress_K(g: _Grads, params: MixtureParams, well: WellSpec, convention: str) -> np.ndarray:
    co = nsk_coeffs(g.rho, g.rho_x, params, well, convention)
    dk = -3.0 * co.kappa / g.rho
    div = dk * g.rho_x**2 + co.kappa * g.rho_xx
    return -g.rho**2 * co.psi_rho + g.rho * div - co.kappa * g.rho_x**2


def stress_K(fields: Field1D, params: MixtureParams, well: WellSpec, convention: str = "full") -> np.ndarray:
    return _stress_K(_grads(fields, params), params, well, convention)


@dataclass(frozen=True)
class EquivalenceReport:
    max_difference: float
    scale: float
    convention: str
    M: int

    @property
    def relative(self) -> float:
        return self.max_difference / self.scale

    def as_dict(self) -> dict:
        return {
            "M": self.M,
            "convention": self.convention,
            "max_difference": self.max_difference,
            "scale": self.scale,
            "relative": self.relative,
        }


def equivalence_check(
    fields: Field1D, params: MixtureParams, well: WellSpec, convention: str = "full"
) -> EquivalenceReport:
    """Compare the momentum residual in NSAC form and in NSK form on one grid."""
    g = _grads(fields, params)
    h, per = fields.h, fields.periodic
    conv = g.rho * g.u**2
    p = _pressure(g, params, well)
    F_nsac = conv + p - params.nu * g.u_x + params.delta * g.rho * g.c_x**2
    F_nsk = conv - _stress_S(g, params) - _stress_K(g, params, well, convention)
    R_nsac = fd.d1(F_nsac, h, per)
    R_nsk = fd.d1(F_nsk, h, per)
    diff = float(np.max(np.abs(R_nsac - R_nsk)))
    scale = max(float(np.max(np.abs(R_nsac))), float(np.max(np.abs(R_nsk))), float(np.max(np.abs(F_nsac))), 1e-300)
    return EquivalenceReport(diff, scale, convention, int(np.size(fields.x)))


def sound_speed(c, params: MixtureParams, well: WellSpec) -> float:
    """Bulk sound speed a = c sqrt(W''(c)) of the epsilon = 0 mixture."""
    w2 = float(well.d2W(c))
    if not w2 > 0.0:
        raise SpinodalError(f"W''({c!r}) = {w2:.6g} <= 0: spinodal state has no real sound speed")
    return float(c) * math.sqrt(w2)


@dataclass(frozen=True)
class SubsonicReport:
    passed: bool
    sides: tuple[dict, ...]

    def as_dict(self) -> dict:
        return {"passed": self.passed, "sides": [dict(s) for s in self.sides]}


def subsonicity_check(profile, params: MixtureParams, well: WellSpec) -> SubsonicReport:
    """Check |u - s| < a on both sides of an epsilon = 0 profile (gauge s = 0)."""
    if params.epsilon != 0.0:
        raise ValueError("subsonicity is defined for epsilon = 0 profiles")
    sides = []
    ok = True
    for name, c in (("minus", profile.c_minus), ("plus", profile.c_plus)):
        u = profile.wave.m * c * params.tau_star
        try:
            a = sound_speed(c, params, well)
        except SpinodalError as exc:
            sides.append({"side": name, "c": c, "u": u, "a": None, "subsonic": False, "error": str(exc)})
            ok = False
            continue
        sub = abs(u) < a
        ok = ok and sub
        sides.append({"side": name, "c": c, "u": u, "a": a, "subsonic": sub, "error": None})
    return SubsonicReport(ok, tuple(sides))


def profile_fields(profile) -> Field1D:
    return Field1D(profile.xi, profile.rho, profile.u, profile.c, periodic=False)


def pressure_elimination_error(profile, params: MixtureParams, well: WellSpec, trim: int = 0) -> float:
    """Max distance between the eliminated pressure and the profile's first-integral pressure."""
    p = eliminate_pressure(profile_fields(profile), params, well)
    sl = slice(trim, p.size - trim if trim else None)
    return float(np.max(np.abs(p[sl] - np.asarray(profile.p)[sl])))


@dataclass(frozen=True)
class NskWaveResidual:
    mass: float
    momentum: float

    @property
    def max(self) -> float:
        return max(self.mass, self.momentum)


def nsk_wave_residual(profile, params: MixtureParams, well: WellSpec) -> NskWaveResidual:
    """Insert a profile into the steady NSK equations rho u = m, rho u^2 - S - K = P."""
    fields = profile_fields(profile)
    g = _grads(fields, params)
    flux = g.rho * g.u**2 - _stress_S(g, params) - _stress_K(g, params, well, "full")
    mass = float(np.max(np.abs(g.rho * g.u - profile.wave.m)))
    return NskWaveResidual(mass, float(np.max(np.abs(flux - profile.wave.P))))
