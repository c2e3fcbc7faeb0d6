"""Mixture thermodynamics: the linear-in-pressure Gibbs energy and the mixing well.

The Gibbs energy of the two-phase mixture is

    G(p, c) = (c + (1 - c) * epsilon) * tau_star * p + W(c)

so that the specific volume is ``tau = dG/dp`` and the reaction rate driving
the phase field is ``q = -dG/dc``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

#: Offset from 0 and 1 at which the open-interval limits W(0+), W(1-) are sampled.
C_CUT = 1e-4


class DomainError(ValueError):
    """Raised when a state leaves the domain where the model is defined."""


class ParameterError(ValueError):
    """Raised when physical parameters violate their invariants."""


@dataclass(frozen=True)
class MixtureParams:
    """Physical constants of the mixture.

    Attributes
    ----------
    epsilon
        Density ratio rho_1 / rho_2 in [0, 1).
    tau_star
        Reference specific volume, > 0.
    delta
        Capillarity coefficient, > 0.
    mu, lam
        Shear and bulk viscosity; ``2 * mu + lam`` must be positive.
    """

    epsilon: float = 0.0
    tau_star: float = 1.0
    delta: float = 0.01
    mu: float = 0.1
    lam: float = 0.0

    def __post_init__(self):
        problems = mixture_problems(self.epsilon, self.tau_star, self.delta, self.mu, self.lam)
        if problems:
            raise ParameterError("; ".join(problems))

    @property
    def nu(self) -> float:
        """Longitudinal viscosity of a planar flow."""
        return 2.0 * self.mu + self.lam

    def with_epsilon(self, epsilon: float) -> "MixtureParams":
        return MixtureParams(epsilon, self.tau_star, self.delta, self.mu, self.lam)


def mixture_problems(epsilon, tau_star, delta, mu, lam) -> list[str]:
    """Return every violated invariant of :class:`MixtureParams` (empty if valid)."""
    out = []
    if not (0.0 <= epsilon < 1.0):
        out.append(f"epsilon ∈ [0,1) violated: epsilon={epsilon!r}")
    if not tau_star > 0.0:
        out.append(f"tau_star > 0 violated: tau_star={tau_star!r}")
    if not delta > 0.0:
        out.append(f"delta > 0 violated: delta={delta!r}")
    if not 2.0 * mu + lam > 0.0:
        out.append(f"2*mu + lambda > 0 violated: mu={mu!r}, lambda={lam!r}")
    return out


@dataclass(frozen=True)
class WellSpec:
    """Mixing energy W(c) with its first two derivatives.

    ``c_lower`` is the interior minimum and ``c_upper`` the interior maximum;
    either may be ``None`` for wells whose critical points are not declared
    (``validate_well`` then locates them).
    """

    family: str
    coeffs: Mapping[str, float]
    c_lower: float | None
    c_upper: float | None
    W: Callable = field(repr=False, compare=False)
    dW: Callable = field(repr=False, compare=False)
    d2W: Callable = field(repr=False, compare=False)
    test_only: bool = False

    @property
    def scale(self) -> float:
        return float(self.coeffs.get("K", self.coeffs.get("a", 1.0)))


def quartic_primitive(c_lower: float, c_upper: float, c3: float, K: float = 1.0) -> WellSpec:
    """Well with W'(c) = -K (c - c_lower)(c - c_upper)(c3 - c), normalized by W(1) = 0."""
    if not K > 0.0:
        raise ParameterError(f"quartic-primitive well needs K > 0, got {K!r}")
    if not c3 > 1.0:
        raise ParameterError(f"quartic-primitive well needs c3 > 1, got {c3!r}")
    a, b, d = float(c_lower), float(c_upper), float(c3)
    e1, e2, e3 = a + b + d, a * b + a * d + b * d, a * b * d

    def prim(c):
        return K * (((0.25 * c - e1 / 3.0) * c + 0.5 * e2) * c - e3) * c

    w1 = prim(1.0)

    def W(c):
        return prim(c) - w1

    def dW(c):
        return K * (c - a) * (c - b) * (c - d)

    def d2W(c):
        return K * ((3.0 * c - 2.0 * e1) * c + e2)

    return WellSpec(
        "quartic-primitive",
        {"c_lower": a, "c_upper": b, "c3": d, "K": float(K)},
        a,
        b,
        W,
        dW,
        d2W,
    )


def tilted_quartic(a: float, c1: float, c2: float, P0: float, tau_star: float = 1.0) -> WellSpec:
    """Test-only well W(c) = a (c-c1)^2 (c-c2)^2 - tau_star*P0*c.

    Tilting back by P = P0 leaves a symmetric double well with equal minima at
    c1 and c2, whose connecting kink is a tanh profile.
    """
    if not a > 0.0:
        raise ParameterError(f"tilted-quartic well needs a > 0, got {a!r}")
    if not 0.0 < c1 < c2 < 1.0:
        raise ParameterError(f"tilted-quartic well needs 0 < c1 < c2 < 1, got {c1!r}, {c2!r}")
    tilt = tau_star * P0

    def W(c):
        return a * (c - c1) ** 2 * (c - c2) ** 2 - tilt * c

    def dW(c):
        return 2.0 * a * (c - c1) * (c - c2) * (2.0 * c - c1 - c2) - tilt

    def d2W(c):
        return 2.0 * a * ((c - c2) ** 2 + 4.0 * (c - c1) * (c - c2) + (c - c1) ** 2)

    return WellSpec(
        "tilted-quartic",
        {"a": float(a), "c1": float(c1), "c2": float(c2), "P0": float(P0), "tau_star": float(tau_star)},
        None,
        None,
        W,
        dW,
        d2W,
        test_only=True,
    )


def tabulated_well(c, W) -> WellSpec:
    """Well interpolated from (c, W) samples by a monotone cubic (PCHIP).

    Critical points are taken from the interpolant's derivative: the first
    interior minimum and the following maximum.
    """
    c = np.asarray(c, dtype=float)
    W = np.asarray(W, dtype=float)
    if c.ndim != 1 or c.shape != W.shape or c.size < 4:
        raise ParameterError("tabulated well needs matching 1-D arrays with at least 4 samples")
    if np.any(np.diff(c) <= 0):
        raise ParameterError("tabulated well needs strictly increasing c samples")
    interp = PchipInterpolator(c, W, extrapolate=False)
    d1 = interp.derivative()
    d2 = interp.derivative(2)
    crit = [r for r in d1.roots(extrapolate=False) if c[0] < r < c[-1]]
    lo = hi = None
    for r in crit:
        if lo is None and d2(r) > 0:
            lo = float(r)
        elif lo is not None and hi is None and d2(r) < 0:
            hi = float(r)

    def wrap(f):
        def g(x):
            out = f(x)
            return float(out) if np.ndim(out) == 0 else out

        return g

    return WellSpec(
        "tabulated",
        {"n_samples": float(c.size)},
        lo,
        hi,
        wrap(interp),
        wrap(d1),
        wrap(d2),
    )


def custom_well(W, dW, d2W, c_lower=None, c_upper=None, name="custom") -> WellSpec:
    return WellSpec(name, {}, c_lower, c_upper, W, dW, d2W)


def specific_volume(c, params: MixtureParams):
    """tau = (c + (1 - c) epsilon) tau_star."""
    if params.epsilon == 0.0 and np.any(np.asarray(c) <= 0.0):
        raise DomainError("c <= 0 with epsilon = 0 gives zero specific volume")
    return (c + (1.0 - c) * params.epsilon) * params.tau_star


def density(c, params: MixtureParams):
    """Return ``(rho, drho_dc)``."""
    rho = 1.0 / specific_volume(c, params)
    return rho, -(1.0 - params.epsilon) * params.tau_star * rho * rho


def gibbs(p, c, params: MixtureParams, well: WellSpec):
    return (c + (1.0 - c) * params.epsilon) * params.tau_star * p + well.W(c)


def reaction_q(p, c, params: MixtureParams, well: WellSpec):
    """q = -dG/dc."""
    return -((1.0 - params.epsilon) * params.tau_star * p + well.dW(c))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    message: str
    c: float | None = None


@dataclass(frozen=True)
class WellReport:
    checks: tuple[CheckResult, ...]
    c_lower: float | None
    c_upper: float | None
    interior_zeros: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return all(ch.passed for ch in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [ch for ch in self.checks if not ch.passed]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "c_lower": self.c_lower,
            "c_upper": self.c_upper,
            "interior_zeros": list(self.interior_zeros),
            "checks": [
                {"name": ch.name, "passed": ch.passed, "message": ch.message, "c": ch.c}
                for ch in self.checks
            ],
        }


def _zeros_of(f, grid):
    vals = np.asarray(f(grid), dtype=float)
    zeros = []
    for i in range(grid.size - 1):
        if vals[i] == 0.0:
            zeros.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0.0:
            zeros.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps))
    if vals[-1] == 0.0:
        zeros.append(float(grid[-1]))
    return zeros


def validate_well(
    well: WellSpec, params: MixtureParams | None = None, grid_size: int = 2048, c_cut: float = C_CUT
) -> WellReport:
    """Check the hypotheses on W required for a diffuse phase boundary.

    Never raises on a failed hypothesis; every failure is reported with the
    offending concentration where one exists.
    """
    if grid_size < 1000:
        raise ValueError("grid_size must be at least 1000")
    grid = np.linspace(c_cut, 1.0 - c_cut, grid_size)
    zeros = _zeros_of(well.dW, grid)
    checks = []

    lo, hi = well.c_lower, well.c_upper
    if lo is None or hi is None:
        if len(zeros) == 2:
            lo, hi = zeros
        elif lo is None and hi is None:
            lo = hi = None

    checks.append(
        CheckResult(
            "two_interior_critical_points",
            len(zeros) == 2,
            f"W' has {len(zeros)} interior zero(s) on the grid, expected 2",
        )
    )

    if lo is None or hi is None:
        checks.append(CheckResult("ordering", False, "critical points c_lower, c_upper are undetermined"))
        return WellReport(tuple(checks), lo, hi, tuple(zeros))

    ordered = 0.0 < lo < hi < 1.0
    checks.append(
        CheckResult("ordering", ordered, f"0 < c_lower={lo!r} < c_upper={hi!r} < 1" + ("" if ordered else " violated"))
    )
    if not ordered:
        return WellReport(tuple(checks), lo, hi, tuple(zeros))

    tol = 1e-10 * max(1.0, well.scale)
    for name, cc in (("critical_c_lower", lo), ("critical_c_upper", hi)):
        r = abs(float(well.dW(cc)))
        checks.append(CheckResult(name, r <= tol, f"|W'({cc!r})| = {r:.3e} (tol {tol:.1e})", cc))

    dW = np.asarray(well.dW(grid), dtype=float)
    away = (np.abs(grid - lo) > 1e-9) & (np.abs(grid - hi) > 1e-9)
    for name, mask, sign in (
        ("sign_below_c_lower", (grid < lo) & away, -1.0),
        ("sign_between", (grid > lo) & (grid < hi) & away, 1.0),
        ("sign_above_c_upper", (grid > hi) & away, -1.0),
    ):
        bad = np.nonzero(mask & ~(sign * dW > 0.0))[0]
        if bad.size:
            cb = float(grid[bad[0]])
            checks.append(CheckResult(name, False, f"W' has wrong sign or vanishes at c={cb!r}", cb))
        else:
            checks.append(CheckResult(name, True, "W' sign pattern holds"))

    w0, wl, wh, w1 = (float(well.W(x)) for x in (c_cut, lo, hi, 1.0 - c_cut))
    chain = w0 > wh > wl > w1
    checks.append(
        CheckResult(
            "value_ordering",
            chain,
            f"W(0+)={w0:.6g} > W(c_upper)={wh:.6g} > W(c_lower)={wl:.6g} > W(1-)={w1:.6g}"
            + ("" if chain else " violated"),
        )
    )
    return WellReport(tuple(checks), lo, hi, tuple(zeros))


def load_columns(path) -> np.ndarray:
    """Numeric CSV table; a non-numeric first row is taken as a header."""
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(x) for x in first.split(",")]
        skip = 0
    except ValueError:
        skip = 1
    return np.loadtxt(path, delimiter=",", comments="#", skiprows=skip, ndmin=2)


def well_from_config(spec: Mapping, tau_star: float = 1.0) -> WellSpec:
    """Build a well from a config mapping with a ``family`` key."""
    fam = spec["family"]
    if fam == "quartic-primitive":
        return quartic_primitive(spec["c_lower"], spec["c_upper"], spec["c3"], spec.get("K", 1.0))
    if fam == "tilted-quartic":
        return tilted_quartic(spec["a"], spec["c1"], spec["c2"], spec["P0"], tau_star)
    if fam == "tabulated":
        data = load_columns(spec["table"])
        if data.shape[1] != 2:
            raise ParameterError(f"well table {spec['table']!r} must have two columns c,W")
        return tabulated_well(data[:, 0], data[:, 1])
    raise ParameterError(f"unknown well family {fam!r}")
