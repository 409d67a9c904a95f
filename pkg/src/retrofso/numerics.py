"""Special functions and quadrature used by the analytical pipeline.

Gamma-family functions and the scaled Bessel function are thin, checked
wrappers over :mod:`math` and :mod:`scipy.special`; the terminating
hypergeometric series is summed directly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericalError


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and subdivision budget for adaptive quadrature."""

    relative_tolerance: float = 1e-10
    absolute_tolerance: float = 1e-14
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.relative_tolerance > 0 and self.absolute_tolerance > 0):
            raise DomainError("quadrature tolerances must be strictly positive")
        if int(self.max_subdivisions) < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureSpec()


def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for positive real ``x``."""
    x = float(x)
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"ln_gamma requires a finite positive argument, got {x!r}")
    return math.lgamma(x)


def reg_lower_incomplete_gamma(a, x):
    """Regularized lower incomplete gamma ``gamma(a, x) / Gamma(a)``.

    Accepts scalar or array ``x``. The lower integral runs over ``[0, x]``,
    so the result is 0 at ``x = 0`` and tends to 1 as ``x`` grows.
    """
    a = float(a)
    if not math.isfinite(a) or a <= 0:
        raise DomainError(f"shape parameter must be positive, got {a!r}")
    xs = np.asarray(x, dtype=float)
    if np.any(np.isnan(xs)) or np.any(xs < 0):
        raise DomainError("incomplete gamma requires x >= 0")
    out = special.gammainc(a, xs)
    if np.any(np.isnan(out)):
        raise NumericalError(f"gammainc did not converge for a={a}", estimate=None)
    if out.ndim == 0:
        return float(out)
    return out


def bessel_i0_scaled(x):
    """Exponentially scaled modified Bessel function ``exp(-x) * I0(x)``.

    Stays finite for arguments where ``I0`` itself overflows.
    """
    xs = np.asarray(x, dtype=float)
    if np.any(np.isnan(xs)) or np.any(xs < 0):
        raise DomainError("bessel_i0_scaled requires x >= 0")
    out = special.i0e(xs)
    if out.ndim == 0:
        return float(out)
    return out


def hyp2f1_neg_int(n: int, a: float, rho: float) -> float:
    """Terminating series 2F1(-n, -n; a; rho).

    Sums ``((-n)_k)^2 / ((a)_k k!) * rho^k`` for ``k = 0..n``.
    """
    if int(n) != n or n < 0:
        raise DomainError(f"n must be a nonnegative integer, got {n!r}")
    if not a > 0:
        raise DomainError(f"a must be positive, got {a!r}")
    if not 0 <= rho < 1:
        raise DomainError(f"rho must lie in [0, 1), got {rho!r}")
    n = int(n)
    term = 1.0
    terms = [term]
    for k in range(n):
        # (-n)_{k+1} / (-n)_k = k - n
        term *= (k - n) ** 2 * rho / ((a + k) * (k + 1))
        terms.append(term)
    return math.fsum(terms)


def integrate_semi_infinite(
    integrand: Callable[[float], float],
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    cutoff: Optional[float] = None,
    points: Optional[Sequence[float]] = None,
) -> float:
    """Integrate ``integrand`` over ``[0, inf)``.

    Parameters
    ----------
    integrand : callable
        Finite on ``[0, inf)`` and eventually decaying at least exponentially.
    spec : QuadratureSpec
        Tolerances and subdivision budget.
    cutoff : float, optional
        Truncation point. When given, the range ``[0, cutoff]`` is integrated
        and the caller is responsible for the tail being negligible. Needed
        when the integrand is concentrated in a region much narrower than
        its natural length scale.
    points : sequence of float, optional
        Break points inside ``[0, cutoff]`` (peaks, kinks). Ignored without
        ``cutoff``.

    Raises
    ------
    NumericalError
        If the subdivision budget runs out before the tolerances are met.
    """
    kwargs = dict(
        epsabs=spec.absolute_tolerance,
        epsrel=spec.relative_tolerance,
        limit=int(spec.max_subdivisions),
        full_output=1,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if cutoff is None:
            res = integrate.quad(integrand, 0.0, np.inf, **kwargs)
        else:
            if points is not None:
                pts = [p for p in points if 0.0 < p < cutoff]
                kwargs["points"] = pts or None
            res = integrate.quad(integrand, 0.0, float(cutoff), **kwargs)
    value, abserr = res[0], res[1]
    # with full_output, quad appends a message only when it failed
    failed = len(res) > 3
    if failed:
        # roundoff-limited runs still count when the bound is near target
        target = max(spec.absolute_tolerance, 100 * spec.relative_tolerance * abs(value))
        failed = not abserr <= target
    if failed or not math.isfinite(value):
        raise NumericalError(
            f"semi-infinite quadrature did not converge (estimate={value!r}, "
            f"error bound={abserr!r})",
            estimate=value,
            error_bound=abserr,
        )
    return value
