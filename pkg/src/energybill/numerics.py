"""Scalar special functions, bracketing root finder and adaptive quadrature."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as _integrate
from scipy import special as _special

__all__ = [
    "Tolerance",
    "NumericalError",
    "NoBracketError",
    "ConvergenceError",
    "lambert_w0",
    "erf",
    "erfc",
    "erf_inv",
    "find_root",
    "integrate",
]

_INV_E = math.exp(-1.0)
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


class NumericalError(ArithmeticError):
    """Base class for numeric failures (maps to CLI exit code 3)."""


class NoBracketError(NumericalError, ValueError):
    pass


class ConvergenceError(NumericalError):
    pass


@dataclass(frozen=True)
class Tolerance:
    rel: float = 1e-12
    abs: float = 0.0
    max_iter: int = 2000

    def __post_init__(self):
        if not self.rel > 0:
            raise ValueError("rel tolerance must be > 0")
        if not self.abs >= 0:
            raise ValueError("abs tolerance must be >= 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


DEFAULT_TOL = Tolerance()


def lambert_w0(x: float, abs_tol: float = 1e-15) -> float:
    """Principal branch W0 of the Lambert W function.

    Halley iteration on ``w*exp(w) - x``, seeded with the branch-point
    series near ``-1/e`` and an asymptotic log expansion for large ``x``.
    """
    x = float(x)
    if math.isnan(x):
        raise ValueError("lambert_w0 of NaN")
    if x < -_INV_E:
        if x < -_INV_E - abs_tol:
            raise ValueError(f"lambert_w0 domain error: x={x!r} < -1/e")
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf

    if x < -0.32:
        p = math.sqrt(max(0.0, 2.0 * (math.e * x + 1.0)))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    elif x < 3.0:
        w = math.log1p(x)
        if x > 0.5:
            w *= 0.8
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1

    for _ in range(64):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        dw = f / denom
        w -= dw
        if abs(dw) <= 4e-16 * (1.0 + abs(w)):
            break
    return max(w, -1.0)


def erf(x):
    """Error function; accepts scalars or arrays."""
    if np.ndim(x) == 0:
        return math.erf(float(x))
    return _special.erf(x)


def erfc(x):
    if np.ndim(x) == 0:
        return math.erfc(float(x))
    return _special.erfc(x)


def _erf_inv_seed(q):
    # Giles (2010) single-precision approximation.
    w = -np.log((1.0 - q) * (1.0 + q))
    central = w < 5.0
    wc = w - 2.5
    pc = 2.81022636e-08
    for coeff in (3.43273939e-07, -3.5233877e-06, -4.39150654e-06, 0.00021858087,
                  -0.00125372503, -0.00417768164, 0.246640727, 1.50140941):
        pc = coeff + pc * wc
    wt = np.sqrt(w) - 3.0
    pt = -0.000200214257
    for coeff in (0.000100950558, 0.00134934322, -0.00367342844, 0.00573950773,
                  -0.0076224613, 0.00943887047, 1.00167406, 2.83297682):
        pt = coeff + pt * wt
    return np.where(central, pc, pt) * q


def erf_inv(q):
    """Inverse error function for ``|q| < 1`` (scalar or array).

    Seeded by a polynomial approximation, then polished with two Halley steps.
    """
    scalar = np.ndim(q) == 0
    qa = np.asarray(q, dtype=float)
    if np.any(np.isnan(qa)) or np.any(np.abs(qa) >= 1.0):
        raise ValueError("erf_inv requires |q| < 1")
    y = _erf_inv_seed(qa)
    for _ in range(2):
        f = _special.erf(y) - qa
        fp = _TWO_OVER_SQRT_PI * np.exp(-y * y)
        ratio = f / fp
        y = y - ratio / (1.0 + y * ratio)
    return float(y) if scalar else y


def find_root(f: Callable[[float], float], lo: float, hi: float,
              tol: Tolerance = DEFAULT_TOL) -> float:
    """Bisection root finder on a sign-changing bracket.

    Stops when ``|f(x)| <= tol.abs``, when the bracket is narrower than
    ``tol.rel * |x|``, or when the bracket cannot be split further in
    float64.
    """
    lo, hi = float(lo), float(hi)
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if math.isnan(flo) or math.isnan(fhi) or flo * fhi > 0.0:
        raise NoBracketError(f"no sign change on [{lo!r}, {hi!r}]: f={flo!r}, {fhi!r}")

    for _ in range(tol.max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        fm = f(mid)
        if fm == 0.0 or abs(fm) <= tol.abs:
            return mid
        if (flo < 0.0) == (fm < 0.0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
        if hi - lo <= tol.rel * abs(0.5 * (lo + hi)):
            return 0.5 * (lo + hi)
    raise ConvergenceError(f"bisection did not converge in {tol.max_iter} iterations")


def integrate(f: Callable[[float], float], lo: float, hi: float,
              tol: Tolerance = Tolerance(rel=1e-11, abs=0.0, max_iter=500),
              points=None, scale: float = 1.0) -> float:
    """Adaptive Gauss-Kronrod quadrature (QUADPACK) of ``f`` over ``[lo, hi]``.

    An infinite upper limit is mapped onto ``[0, 1)`` with
    ``psi = lo + scale * t / (1 - t)``; ``scale`` should be the natural size
    of the integrand (e.g. the distribution mean) so the map stays well
    conditioned.
    """
    lo = float(lo)
    if hi == lo:
        return 0.0
    if math.isinf(hi):
        s = float(scale)

        def g(t):
            om = 1.0 - t
            if om <= 0.0:
                return 0.0
            return f(lo + s * t / om) * s / (om * om)

        tpoints = None
        if points is not None:
            tpoints = [(p - lo) / (p - lo + s) for p in points if p > lo]
        return _quad(g, 0.0, 1.0, tol, tpoints)
    hi = float(hi)
    inner = None
    if points is not None:
        inner = [p for p in points if lo < p < hi]
    return _quad(f, lo, hi, tol, inner)


def _quad(f, a, b, tol, points):
    kwargs = dict(epsabs=tol.abs, epsrel=tol.rel, limit=tol.max_iter, full_output=1)
    if points:
        kwargs["points"] = sorted(points)
    out = _integrate.quad(f, a, b, **kwargs)
    value, err = out[0], out[1]
    if len(out) > 3:
        message = out[3]
        # 2/3 are roundoff/bad-integrand flags; the estimate is usable when the
        # error bound is still met.
        if err > max(tol.abs, 1e3 * tol.rel * abs(value)):
            raise ConvergenceError(f"quadrature failed: {message}")
    return value
