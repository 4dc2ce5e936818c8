"""Asymptotic Cramer function, its domain, and the rate function.

Everything here is a function of the drift spectrum alone.  With
ell(lambda) = 4 lambda (1 + lambda),

    Lambda(lambda) = -1/2 sum_k ( sqrt(alpha_k^2 - ell(lambda) beta_k^2)
                                  + alpha_k )

on the closed interval [a, b] determined by m = min_{beta_k != 0}
alpha_k^2 / beta_k^2 via a,b = -1/2 -/+ 1/2 sqrt(1+m), and +infinity
outside.  The rate function is evaluated in closed form through the
substitution ell: I(x) = lambda(ell0(x)) x + F(ell0(x)) where ell0(x) is
the unique root in [-1, m) of |x| = sqrt(1+ell) sum_k beta_k^2 /
sqrt(alpha_k^2 - ell beta_k^2), and an independent Legendre-search oracle
(grid + golden section on lambda x - Lambda(lambda)) cross-checks it.

Both members of each conjugate channel pair are summed, so the k-sums run
over all d channels.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, NumericError, ReversibilityError
from .model import Spectrum

__all__ = [
    "CramerDomain",
    "CramerCurve",
    "RatePoint",
    "cramer_domain",
    "cramer",
    "cramer_curve",
    "cramer_derivative",
    "F_of_ell",
    "lambda_of_ell",
    "ell0_solve",
    "rate",
    "legendre_oracle",
    "symmetry_residuals",
]

_RADICAND_CLAMP = 1e-14


@dataclasses.dataclass(frozen=True)
class CramerDomain:
    """Finiteness interval [a, b] of Lambda; a + b = -1 exactly in exact
    arithmetic, and 4 lambda (1 + lambda) = m at both endpoints."""

    m: float
    a: float
    b: float


@dataclasses.dataclass(frozen=True, eq=False)
class CramerCurve:
    """Lambda sampled on a grid; +inf outside [a, b].  ``derivative`` (when
    requested) is finite strictly inside, -inf/+inf at the endpoints, NaN
    outside."""

    lambda_grid: np.ndarray
    values: np.ndarray
    derivative: Optional[np.ndarray] = None


@dataclasses.dataclass(frozen=True)
class RatePoint:
    """Closed-form rate evaluation at one EPR level x."""

    x: float
    ell0: float
    I: float
    residual: float


def _rotation_channels(spectrum: Spectrum) -> tuple[np.ndarray, np.ndarray]:
    alphas = spectrum.alphas
    betas = spectrum.betas
    if not np.any(betas != 0.0):
        raise ReversibilityError(
            "all channels are real (drift symmetric): Lambda/I are degenerate"
        )
    return alphas, betas


def cramer_domain(spectrum: Spectrum) -> CramerDomain:
    """Domain data (m, a, b) of the Cramer function."""
    alphas, betas = _rotation_channels(spectrum)
    rot = betas != 0.0
    m = float(np.min(alphas[rot] ** 2 / betas[rot] ** 2))
    half_width = 0.5 * math.sqrt(1.0 + m)
    return CramerDomain(m=m, a=-0.5 - half_width, b=-0.5 + half_width)


def _clamped_radicands(
    alphas: np.ndarray, betas: np.ndarray, ell: np.ndarray
) -> np.ndarray:
    """alpha_k^2 - ell beta_k^2 with values within 1e-14 (scaled) of 0
    clamped to exactly 0.

    At the domain endpoints the minimizing channel's radicand is exactly 0
    analytically but lands a few ulps off in floats; the two-sided clamp
    removes the sqrt's infinite slope there, which keeps boundary values
    exact and the lambda <-> -1-lambda symmetry at machine precision.  A
    strongly negative radicand signals an internal inconsistency.
    """
    r = alphas**2 - np.multiply.outer(ell, betas**2)
    scale = np.maximum(1.0, np.maximum(alphas**2, betas**2))
    if np.any(r < -_RADICAND_CLAMP * scale):
        raise NumericError("radicand strongly negative inside the domain")
    return np.where(np.abs(r) <= _RADICAND_CLAMP * scale, 0.0, np.maximum(r, 0.0))


def _cramer_values(spectrum: Spectrum, lambdas: np.ndarray) -> np.ndarray:
    alphas, betas = _rotation_channels(spectrum)
    dom = cramer_domain(spectrum)
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    out = np.full(lambdas.shape, math.inf)
    # Membership is decided in the ell variable (the only one the formula
    # sees): ell <= m up to the clamp tolerance.  This admits the 1-ulp
    # excursions of fl(-1-lambda) past the float endpoints.
    ell_all = 4.0 * lambdas * (1.0 + lambdas)
    inside = ell_all <= dom.m + _RADICAND_CLAMP * max(1.0, dom.m)
    if np.any(inside):
        r = _clamped_radicands(alphas, betas, ell_all[inside])
        out[inside] = -0.5 * np.sum(np.sqrt(r) + alphas, axis=-1)
    return out


def cramer(lam: float, spectrum: Spectrum) -> float:
    """Cramer function Lambda(lambda); +inf outside [a, b]."""
    return float(_cramer_values(spectrum, np.array([lam]))[0])


def cramer_curve(
    spectrum: Spectrum,
    lambdas: Sequence[float],
    with_derivative: bool = False,
) -> CramerCurve:
    """Evaluate Lambda (and optionally Lambda') on a grid."""
    grid = np.asarray(lambdas, dtype=float)
    values = _cramer_values(spectrum, grid)
    deriv = None
    if with_derivative:
        dom = cramer_domain(spectrum)
        deriv = np.full(grid.shape, math.nan)
        interior = (grid > dom.a) & (grid < dom.b)
        deriv[interior] = [cramer_derivative(l, spectrum) for l in grid[interior]]
        deriv[grid == dom.a] = -math.inf
        deriv[grid == dom.b] = math.inf
    return CramerCurve(lambda_grid=grid, values=values, derivative=deriv)


def cramer_derivative(lam: float, spectrum: Spectrum) -> float:
    """Lambda'(lambda) = (1+2 lambda) sum_k beta_k^2 / sqrt(alpha_k^2 -
    4 lambda(1+lambda) beta_k^2), defined strictly inside (a, b); diverges
    toward the endpoints (steepness)."""
    alphas, betas = _rotation_channels(spectrum)
    dom = cramer_domain(spectrum)
    if not (dom.a < lam < dom.b):
        raise DomainError(f"lambda={lam} outside the open interval ({dom.a}, {dom.b})")
    ell = 4.0 * lam * (1.0 + lam)
    r = _clamped_radicands(alphas, betas, np.array(ell))
    with np.errstate(divide="ignore"):
        terms = np.where(betas != 0.0, betas**2 / np.sqrt(r), 0.0)
    return float((1.0 + 2.0 * lam) * np.sum(terms))


def F_of_ell(ell: float, spectrum: Spectrum) -> float:
    """F(ell) = 1/2 sum_k ( sqrt(alpha_k^2 - ell beta_k^2) + alpha_k ), the
    Cramer function expressed in the variable ell; equals -Lambda(lambda(ell))."""
    alphas, betas = _rotation_channels(spectrum)
    dom = cramer_domain(spectrum)
    if ell > dom.m + _RADICAND_CLAMP * max(1.0, dom.m):
        raise DomainError(f"ell={ell} exceeds m={dom.m}")
    r = _clamped_radicands(alphas, betas, np.array(ell))
    return float(0.5 * np.sum(np.sqrt(r) + alphas))


def lambda_of_ell(ell: float, branch: int = +1) -> float:
    """Invert ell = 4 lambda (1+lambda): lambda = (sqrt(1+ell) - 1)/2 on the
    branch for x >= 0 (branch=+1), (-sqrt(1+ell) - 1)/2 for x < 0
    (branch=-1)."""
    if branch not in (+1, -1):
        raise DomainError("branch must be +1 or -1")
    if ell < -1.0:
        raise DomainError(f"ell={ell} below -1")
    root = math.sqrt(1.0 + ell)
    return (root - 1.0) / 2.0 if branch == +1 else (-root - 1.0) / 2.0


def _abs_x_of_ell(
    alphas: np.ndarray, betas: np.ndarray, ell: float
) -> float:
    """Right side sqrt(1+ell) sum_k beta_k^2/sqrt(alpha_k^2 - ell beta_k^2),
    strictly increasing in ell on [-1, m), diverging at m."""
    r = alphas**2 - ell * betas**2
    with np.errstate(divide="ignore"):
        s = np.where(betas != 0.0, betas**2 / np.sqrt(np.maximum(r, 0.0)), 0.0)
    return math.sqrt(max(1.0 + ell, 0.0)) * float(np.sum(s))


def ell0_solve(x: float, spectrum: Spectrum, tol: float = 1e-12) -> RatePoint:
    """Solve for ell0(x) and evaluate the closed-form rate at x.

    x = 0 (within 1e-12) short-circuits to ell0 = -1 exactly.  Otherwise
    bracketed bisection on [-1, m), with the upper bracket approaching m
    geometrically when needed (the right side diverges at m, so a bracket
    always exists), followed by Newton polish.
    """
    alphas, betas = _rotation_channels(spectrum)
    dom = cramer_domain(spectrum)
    m = dom.m
    if abs(x) <= 1e-12:
        return RatePoint(x=float(x), ell0=-1.0, I=F_of_ell(-1.0, spectrum),
                         residual=0.0)
    target = abs(x)

    def f(ell: float) -> float:
        return _abs_x_of_ell(alphas, betas, ell) - target

    lo = -1.0
    hi = m * (1.0 - 1e-15) if m > 0 else m - 1e-15
    attempts = 0
    while f(hi) < 0.0:
        new_hi = m - (m - hi) / 16.0
        attempts += 1
        if new_hi <= hi or attempts > 80:
            raise NumericError("could not bracket ell0 below m")
        hi = new_hi
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, abs(hi)):
            break
    ell = 0.5 * (lo + hi)
    # Newton polish on the same equation.
    for _ in range(3):
        r = alphas**2 - ell * betas**2
        if np.any(r <= 0.0):
            break
        s = float(np.sum(np.where(betas != 0.0, betas**2 / np.sqrt(r), 0.0)))
        sp = float(np.sum(np.where(betas != 0.0, 0.5 * betas**4 / r**1.5, 0.0)))
        root1 = math.sqrt(1.0 + ell)
        val = root1 * s - target
        dval = s / (2.0 * root1) + root1 * sp
        if dval == 0.0:
            break
        step = val / dval
        new_ell = ell - step
        if not (lo - 1e-12 <= new_ell < m):
            break
        ell = new_ell
    residual = f(ell)
    if abs(residual) > max(tol, 1e-9 * max(1.0, target)):
        raise NumericError(
            f"ell0 solve residual {residual:.3e} above tolerance at x={x}"
        )
    branch = +1 if x >= 0 else -1
    I = lambda_of_ell(ell, branch) * x + F_of_ell(ell, spectrum)
    if I < -1e-10:
        raise NumericError(f"rate evaluated negative ({I:.3e}) at x={x}")
    return RatePoint(x=float(x), ell0=float(ell), I=max(I, 0.0),
                     residual=float(residual))


def rate(x: float, spectrum: Spectrum) -> RatePoint:
    """Closed-form rate function I(x) = lambda(ell0) x + F(ell0)."""
    return ell0_solve(x, spectrum, tol=1e-12)


def legendre_oracle(x: float, spectrum: Spectrum, n_grid: int = 2001) -> float:
    """Independent Legendre-transform search sup_{lambda in [a,b]}
    (lambda x - Lambda(lambda)): coarse grid then golden-section polish.

    Evaluates only grid/golden points, so the result never exceeds the true
    supremum; with n_grid >= 1000 it is within ~1e-6 of it.
    """
    if n_grid < 3:
        raise DomainError("n_grid must be >= 3")
    dom = cramer_domain(spectrum)
    grid = np.linspace(dom.a, dom.b, n_grid)
    vals = grid * x - _cramer_values(spectrum, grid)
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n_grid - 1)]

    def f(lam: float) -> float:
        return lam * x - cramer(lam, spectrum)

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(100):
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
        if hi - lo <= 1e-14 * max(1.0, abs(hi)):
            break
    return max(best, fc, fd)


def symmetry_residuals(
    spectrum: Spectrum,
    lambda_grid: Sequence[float],
    x_grid: Sequence[float],
) -> tuple[float, float]:
    """Fluctuation-symmetry residuals (max |Lambda(l) - Lambda(-1-l)|,
    max |I(x) - I(-x) + x|) over the given grids; empty grids give 0."""
    lam = np.asarray(lambda_grid, dtype=float)
    xs = np.asarray(x_grid, dtype=float)
    res1 = 0.0
    if lam.size:
        v1 = _cramer_values(spectrum, lam)
        v2 = _cramer_values(spectrum, -1.0 - lam)
        both_inf = np.isinf(v1) & np.isinf(v2)
        diff = np.where(both_inf, 0.0, np.abs(v1 - v2))
        res1 = float(np.max(diff))
    res2 = 0.0
    if xs.size:
        for x in xs:
            a = rate(float(x), spectrum).I
            b = rate(float(-x), spectrum).I
            res2 = max(res2, abs(a - b + x))
    return res1, res2
