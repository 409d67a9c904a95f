"""Moments of the round-trip fading and of the normalized received power.

``S = sum_i U_i Z_i`` where ``U_i = X_i Y_i`` is the product of correlated
uplink and downlink Gamma-Gamma fades (independent across CCRs) and the
``Z_i`` share one jitter vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Tuple

from .errors import DomainError
from .geometry import CCRLayout
from .numerics import DEFAULT_QUADRATURE, QuadratureSpec, hyp2f1_neg_int, ln_gamma
from .pointing import canonical_index, joint_moment


@dataclass(frozen=True)
class TurbulenceParams:
    """Gamma-Gamma shapes and uplink/downlink correlations.

    Both Gamma factors have unit mean (scale ``1/alpha1`` and ``1/beta1``).
    """

    alpha1: float
    beta1: float
    rho_alpha: float = 0.0
    rho_beta: float = 0.0

    def __post_init__(self):
        if not (self.alpha1 > 0 and self.beta1 > 0):
            raise DomainError("Gamma-Gamma shape parameters must be positive")
        for name in ("rho_alpha", "rho_beta"):
            if not 0 <= getattr(self, name) < 1:
                raise DomainError(f"{name} must lie in [0, 1)")


# reference shapes; "moderate" is the sigma_R^2 = 0.5 plane-wave point (assumed).
WEAK = TurbulenceParams(17.1, 16.0, 0.7, 0.7)
STRONG = TurbulenceParams(4.0, 1.9, 0.7, 0.7)
MODERATE = TurbulenceParams(5.97, 4.39, 0.7, 0.7)
PRESETS = {"weak": WEAK, "strong": STRONG, "moderate": MODERATE}


@dataclass(frozen=True)
class MomentSet:
    """First, second and fourth moments of ``S``."""

    m1: float
    m2: float
    m4: float

    def __post_init__(self):
        if not self.m1 > 0:
            raise DomainError("m1 must be positive")
        if not (self.m2 >= self.m1**2 and self.m4 >= self.m2**2):
            raise DomainError(
                f"moments violate Jensen ordering (m1={self.m1!r}, m2={self.m2!r}, m4={self.m4!r})"
            )


def u_moment(n: int, params: TurbulenceParams) -> float:
    """``E[U^n]`` of the round-trip fade ``U = X Y``."""
    if int(n) != n or n < 0:
        raise DomainError(f"order must be a nonnegative integer, got {n!r}")
    n = int(n)
    if n == 0:
        return 1.0
    a, b = params.alpha1, params.beta1
    log_ratio = 2.0 * (ln_gamma(a + n) - ln_gamma(a) + ln_gamma(b + n) - ln_gamma(b))
    log_ratio -= 2.0 * n * math.log(a * b)
    return (
        math.exp(log_ratio)
        * hyp2f1_neg_int(n, a, params.rho_alpha)
        * hyp2f1_neg_int(n, b, params.rho_beta)
    )


@lru_cache(maxsize=None)
def compositions(n0: int, m: int) -> Tuple[Tuple[Tuple[int, ...], int], ...]:
    """All ``(k_1..k_m)`` with ``sum k_i = n0`` and their multinomial coefficients."""
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            parts = prefix + (remaining,)
            coeff = math.factorial(n0)
            for k in parts:
                coeff //= math.factorial(k)
            out.append((parts, coeff))
            return
        for k in range(remaining, -1, -1):
            rec(prefix + (k,), remaining - k, slots - 1)

    rec((), n0, m)
    return tuple(out)


def s_moment(
    n0: int,
    params: TurbulenceParams,
    layout: CCRLayout,
    w: float,
    sigma_s: float,
    a0: float,
    mode: str = "exact",
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    _cache: Dict = None,
) -> float:
    """``E[S^n0]`` by multinomial expansion over the CCRs.

    ``mode`` picks the joint pointing moment: ``"exact"`` (Bessel-kernel
    integral), ``"approx"`` (Taylor closed form, ``n0 <= 4``) or
    ``"approx1"`` (first-order Taylor profile).
    """
    if int(n0) != n0 or n0 < 1:
        raise DomainError(f"moment order must be a positive integer, got {n0!r}")
    n0 = int(n0)
    cache = {} if _cache is None else _cache
    u = [u_moment(k, params) for k in range(n0 + 1)]
    terms = []
    for parts, coeff in compositions(n0, layout.m):
        idx = canonical_index(i for i, k in enumerate(parts) for _ in range(k))
        key = (idx, mode)
        if key not in cache:
            cache[key] = joint_moment(idx, layout, w, sigma_s, a0, mode=mode, spec=spec)
        fade = 1.0
        for k in parts:
            fade *= u[k]
        terms.append(coeff * fade * cache[key])
    return math.fsum(terms)


def moment_set(
    params: TurbulenceParams,
    layout: CCRLayout,
    w: float,
    sigma_s: float,
    a0: float,
    mode: str = "exact",
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MomentSet:
    """The 1st, 2nd and 4th moments of ``S`` used for moment matching."""
    cache = {}
    m1, m2, m4 = (
        s_moment(k, params, layout, w, sigma_s, a0, mode=mode, spec=spec, _cache=cache)
        for k in (1, 2, 4)
    )
    return MomentSet(m1, m2, m4)
