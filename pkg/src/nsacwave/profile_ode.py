"""Planar traveling-wave reduction of the Navier-Stokes-Allen-Cahn system.

With the Galilean gauge s = 0 the mass and momentum equations integrate once:

    rho * u = m
    m*u + p + delta*rho*c'**2 - nu*u' = P

and the phase equation becomes a second-order ODE for c(xi). The state of the
reduced system is (c, v) with v = c'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .eos import C_CUT, DomainError, MixtureParams, WellSpec, density, reaction_q, specific_volume


@dataclass(frozen=True)
class WaveParams:
    """Constants of a traveling wave: mass flux ``m``, momentum constant ``P``,
    longitudinal viscosity ``nu`` and the speed gauge ``s`` (always 0 here)."""

    m: float
    P: float
    nu: float
    s: float = 0.0

    def __post_init__(self):
        if not self.nu > 0.0:
            raise ValueError(f"nu must be positive, got {self.nu!r}")
        if self.s != 0.0:
            raise ValueError("profiles are stored in the gauge s = 0")

    @classmethod
    def of(cls, m: float, P: float, params: MixtureParams) -> "WaveParams":
        return cls(float(m), float(P), params.nu)

    def with_P(self, P: float) -> "WaveParams":
        return WaveParams(self.m, float(P), self.nu, self.s)


@dataclass(frozen=True)
class PhasePoint:
    c: float
    v: float


def velocity_of(c, wave: WaveParams, params: MixtureParams):
    return wave.s + wave.m * specific_volume(c, params)


def pressure_of(point: PhasePoint, wave: WaveParams, params: MixtureParams):
    """Pressure from the momentum first integral."""
    c, v = point.c, point.v
    rho, _ = density(c, params)
    m = wave.m
    return (
        wave.P
        - m * m * specific_volume(c, params)
        - params.delta * rho * v * v
        + wave.nu * m * (1.0 - params.epsilon) * params.tau_star * v
    )


def rhs(point: PhasePoint, wave: WaveParams, params: MixtureParams, well: WellSpec, c_cut: float = C_CUT):
    """Vector field (dc/dxi, dv/dxi) of the reduced ODE.

    Accepts scalars or arrays. At m = 0 the capillary-pressure and density
    curvature terms cancel and dv/dxi = (W'(c) + (1-eps) tau_star P) / delta.
    """
    c, v = point.c, point.v
    if not np.all((c_cut < np.asarray(c)) & (np.asarray(c) < 1.0 - c_cut)):
        raise DomainError(f"c={c!r} left ({c_cut}, {1.0 - c_cut})")
    rho, rho_c = density(c, params)
    p = pressure_of(point, wave, params)
    q = reaction_q(p, c, params, well)
    d = params.delta
    dv = (math.sqrt(d) * wave.m * v - rho * q) / (d * rho) - (rho_c / rho) * v * v
    return v, dv


def make_rhs(wave: WaveParams, params: MixtureParams, well: WellSpec, c_cut: float = C_CUT):
    """Scalar closure ``f(t, y)`` of :func:`rhs` for the integrator.

    Same formula, inlined for speed; raises :class:`DomainError` on escape.
    """
    m, P, nu = wave.m, wave.P, wave.nu
    eps, ts, d = params.epsilon, params.tau_star, params.delta
    sd = math.sqrt(d)
    slope = (1.0 - eps) * ts
    dW = well.dW
    lo, hi = c_cut, 1.0 - c_cut

    def f(t, y):
        c, v = y[0], y[1]
        if not lo < c < hi:
            raise DomainError(f"c={c!r} left ({lo}, {hi})")
        tau = (c + (1.0 - c) * eps) * ts
        rho = 1.0 / tau
        p = P - m * m * tau - d * rho * v * v + nu * m * slope * v
        q = -(slope * p + dW(c))
        return (v, (sd * m * v - rho * q) / (d * rho) + slope * rho * v * v)

    return f


def equilibrium_residual(c, wave: WaveParams, params: MixtureParams, well: WellSpec):
    """W'(c) + (1-eps) tau_star (P - m^2 tau(c)); zero at rest states."""
    return well.dW(c) + (1.0 - params.epsilon) * params.tau_star * (
        wave.P - wave.m**2 * specific_volume(c, params)
    )


def equilibria(
    wave: WaveParams,
    params: MixtureParams,
    well: WellSpec,
    n_grid: int = 2048,
    c_cut: float = C_CUT,
) -> list[float]:
    """Rest states in (c_cut, 1 - c_cut), ascending. Empty if none exist."""
    grid = np.linspace(c_cut, 1.0 - c_cut, n_grid)
    vals = equilibrium_residual(grid, wave, params, well)

    def f(c):
        return equilibrium_residual(c, wave, params, well)

    roots = []
    for i in range(n_grid - 1):
        if vals[i] == 0.0 and 0 < i:
            roots.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0.0:
            roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return roots


def admissible_window(
    m: float, params: MixtureParams, well: WellSpec, n_grid: int = 2048, c_cut: float = C_CUT
) -> tuple[float, float] | None:
    """Interval of P for which exactly three rest states exist, outer ones saddles.

    Rest states satisfy g(c) = P with g(c) = m^2 tau(c) - W'(c) / ((1-eps) tau_star);
    the root count only changes at extreme values of g and at its boundary values.
    """
    grid = np.linspace(c_cut, 1.0 - c_cut, n_grid)
    slope = (1.0 - params.epsilon) * params.tau_star
    g = m * m * specific_volume(grid, params) - well.dW(grid) / slope
    dg = np.diff(g)
    ext = [g[i + 1] for i in range(dg.size - 1) if dg[i] * dg[i + 1] < 0.0]
    crit = np.unique(np.concatenate([ext, [g[0], g[-1]]]))
    best = None
    for lo, hi in zip(crit[:-1], crit[1:]):
        mid = 0.5 * (lo + hi)
        s = np.sign(g - mid)
        if np.count_nonzero(s[:-1] * s[1:] < 0) != 3:
            continue
        # outer roots are saddles where g is decreasing (rest-state residual increasing)
        idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
        if not (dg[idx[0]] < 0 and dg[idx[2]] < 0):
            continue
        if best is None:
            best = [lo, hi]
        elif np.isclose(best[1], lo, rtol=0, atol=1e-15):
            best[1] = hi
    return None if best is None else (float(best[0]), float(best[1]))


_KINDS = ("saddle", "node", "spiral", "center", "degenerate")


@dataclass(frozen=True)
class Linearization:
    c_eq: float
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kind: str

    @property
    def unstable(self) -> tuple[float, np.ndarray]:
        """Positive eigenvalue of a saddle and its eigenvector, normalized so its c-component is 1."""
        i = int(np.argmax(self.eigenvalues.real))
        vec = self.eigenvectors[:, i].real
        return float(self.eigenvalues[i].real), vec / vec[0]

    @property
    def stable(self) -> tuple[float, np.ndarray]:
        i = int(np.argmin(self.eigenvalues.real))
        vec = self.eigenvectors[:, i].real
        return float(self.eigenvalues[i].real), vec / vec[0]


def linearize_at(
    c_eq: float, wave: WaveParams, params: MixtureParams, well: WellSpec, check_tol: float = 1e-10
) -> Linearization:
    """Finite-difference Jacobian of the vector field at (c_eq, 0) and its type."""
    r = abs(float(equilibrium_residual(c_eq, wave, params, well)))
    if r > check_tol:
        raise ValueError(f"c_eq={c_eq!r} is not a rest state (residual {r:.3e})")
    h = 1e-7 * max(1.0, abs(c_eq))
    J = np.empty((2, 2))
    for j, (dc, dv) in enumerate(((h, 0.0), (0.0, h))):
        fp = rhs(PhasePoint(c_eq + dc, dv), wave, params, well)
        fm = rhs(PhasePoint(c_eq - dc, -dv), wave, params, well)
        J[0, j] = (fp[0] - fm[0]) / (2 * h)
        J[1, j] = (fp[1] - fm[1]) / (2 * h)
    lam, vec = np.linalg.eig(J)
    return Linearization(float(c_eq), J, lam, vec, _classify(J, lam))


def _classify(J: np.ndarray, lam: np.ndarray) -> str:
    if abs(np.linalg.det(J)) < 1e-12:
        return "degenerate"
    scale = float(np.max(np.abs(lam)))
    if np.all(np.abs(lam.imag) <= 1e-12 * scale):
        re = lam.real
        return "saddle" if re[0] * re[1] < 0 else "node"
    if np.all(np.abs(lam.real) <= 1e-6 * scale):
        return "center"
    return "spiral"


@dataclass(frozen=True)
class WaveClassification:
    left: Linearization
    right: Linearization
    label: str
    subsonic: object | None = None

    @property
    def undercompressive(self) -> bool:
        return self.label == "undercompressive"

    def as_dict(self) -> dict:
        out = {
            "label": self.label,
            "left": {"c": self.left.c_eq, "kind": self.left.kind, "eigenvalues": _eig_list(self.left)},
            "right": {"c": self.right.c_eq, "kind": self.right.kind, "eigenvalues": _eig_list(self.right)},
        }
        if self.subsonic is not None:
            out["subsonic"] = self.subsonic.as_dict()
        return out


def _eig_list(lin: Linearization) -> list:
    return [[float(z.real), float(z.imag)] for z in sorted(lin.eigenvalues, key=lambda z: (z.real, z.imag))]


def classify_wave(profile, params: MixtureParams, well: WellSpec) -> WaveClassification:
    """Label a connection undercompressive iff both end states are saddles.

    At epsilon = 0 the subsonicity check of the Korteweg limit is attached as
    corroboration; it does not enter the label.
    """
    wave = profile.wave
    left = linearize_at(profile.c_minus, wave, params, well)
    right = linearize_at(profile.c_plus, wave, params, well)
    if "degenerate" in (left.kind, right.kind):
        label = "inconclusive"
    elif left.kind == right.kind == "saddle":
        label = "undercompressive"
    else:
        label = "not undercompressive"
    sub = None
    if params.epsilon == 0.0:
        from .nsk import subsonicity_check

        sub = subsonicity_check(profile, params, well)
    return WaveClassification(left, right, label, sub)
