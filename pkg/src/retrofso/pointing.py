"""Pointing loss of the CCRs under a shared beam-jitter vector.

The beam footprint is Gaussian, ``Z_i = A0 * exp(-2 |s_i + d|^2 / w^2)``,
with ``d ~ N(0, sigma_s^2 I)`` common to every reflector. This module gives
the single-CCR density and the joint moments ``E[Z_m1 ... Z_mn]``, both as
a one-dimensional Bessel-kernel integral and as a closed-form expansion of
the second-order Taylor approximation of the beam profile.

CCR indices are 0-based throughout.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, UnsupportedOrderError
from .geometry import CCRLayout
from .numerics import DEFAULT_QUADRATURE, QuadratureSpec, bessel_i0_scaled, integrate_semi_infinite

TWO_PI = 2.0 * math.pi
MAX_APPROX_ORDER = 4

MomentIndex = Tuple[int, ...]


def canonical_index(indices: Iterable[int], n_ccr: Optional[int] = None) -> MomentIndex:
    """Sort a CCR index multiset into nonincreasing order and validate it."""
    idx = tuple(sorted((int(i) for i in indices), reverse=True))
    if not idx:
        raise DomainError("moment index must contain at least one CCR")
    if idx[-1] < 0 or (n_ccr is not None and idx[0] >= n_ccr):
        raise DomainError(f"CCR index out of range in {idx}")
    return idx


def pointing_pdf(z, s: float, w: float, sigma_s: float, a0: float):
    """Density of the pointing loss of one CCR at boresight offset ``s``.

    ``f(z) = k/z * (z/A0)^k * exp(-s^2/(2 sigma_s^2)) * I0(s/sigma_s^2 * sqrt(-(w^2/2) ln(z/A0)))``
    with ``k = w^2 / (4 sigma_s^2)``, evaluated in log space.
    """
    zs = np.asarray(z, dtype=float)
    if not sigma_s > 0:
        raise DomainError("pointing_pdf needs sigma_s > 0")
    if np.any(~(zs > 0)) or np.any(zs > a0):
        raise DomainError("pointing loss must lie in (0, A0]")
    k = w * w / (4.0 * sigma_s * sigma_s)
    log_ratio = np.log(zs / a0)
    arg = (s / sigma_s**2) * np.sqrt(np.maximum(-0.5 * w * w * log_ratio, 0.0))
    log_f = (
        math.log(k)
        - np.log(zs)
        + k * log_ratio
        - s * s / (2.0 * sigma_s**2)
        + np.log(bessel_i0_scaled(arg))
        + arg
    )
    out = np.exp(log_f)
    if out.ndim == 0:
        return float(out)
    return out


def rayleigh_moment(nu: int, sigma_s: float) -> float:
    """Even moment ``E[delta^(2 nu)] = 2^nu nu! sigma_s^(2 nu)`` of a Rayleigh variable."""
    if int(nu) != nu or nu < 0:
        raise DomainError(f"nu must be a nonnegative integer, got {nu!r}")
    nu = int(nu)
    return 2.0**nu * math.factorial(nu) * sigma_s ** (2 * nu)


@lru_cache(maxsize=None)
def _balanced_splits(n: int):
    # Each ell-subset of 2*ell angles taken with + sign, its complement with -;
    # every such split appears (ell!)^2 times among the ordered tuples.
    ell = n // 2
    signs = []
    for plus in itertools.combinations(range(n), ell):
        row = -np.ones(n)
        row[list(plus)] = 1.0
        signs.append(row)
    return np.array(signs)


def cosine_product_integral(etas: Sequence[float]) -> float:
    """``C(eta_1..eta_2l) = int_0^{2pi} prod_i cos(theta - eta_i) dtheta``.

    Uses the closed combinatorial form
    ``2pi / (2^{2l} (l!)^2) * sum over ordered tuples of cos(sum_j eta_kj - eta_k(l+j))``,
    grouped by which half of the angles carries the plus sign.
    """
    etas = np.asarray(etas, dtype=float)
    n = etas.size
    if n % 2:
        raise DomainError("cosine product integral needs an even number of angles")
    if n == 0:
        return TWO_PI
    if n > 2 * MAX_APPROX_ORDER:
        raise UnsupportedOrderError(f"at most {2 * MAX_APPROX_ORDER} angles supported, got {n}")
    phases = _balanced_splits(n) @ etas
    return TWO_PI / 2.0**n * math.fsum(np.cos(phases))


def _exp_prefactor(idx: MomentIndex, layout: CCRLayout, w: float, a0: float) -> float:
    r = layout.radii
    return a0 ** len(idx) * math.exp(-2.0 * math.fsum(r[i] ** 2 for i in idx) / w**2)


def joint_moment_exact(
    idx: Iterable[int],
    layout: CCRLayout,
    w: float,
    sigma_s: float,
    a0: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """Exact ``E[Z_m1 ... Z_mn]`` via the Bessel-kernel integral.

    ``A0^n exp(-sum 2 s^2/w^2) * int_0^inf exp(-(2n/w^2 + 1/(2 sigma_s^2)) d^2) d/sigma_s^2 I0(K d) dd``
    where ``K = (4/w^2) |sum_i s_mi|`` is taken from the vector sum of the
    CCR positions. The integral is done in ``t = d / sigma_s`` with the
    Bessel factor recombined in log space.
    """
    idx = canonical_index(idx, layout.m)
    n0 = len(idx)
    pre = _exp_prefactor(idx, layout, w, a0)
    if sigma_s == 0:
        return pre
    if not sigma_s > 0:
        raise DomainError("sigma_s must be >= 0")
    vec = layout.positions[list(idx)].sum(axis=0)
    kappa = 4.0 / w**2 * math.hypot(vec[0], vec[1]) * sigma_s
    b = 0.5 + 2.0 * n0 * sigma_s**2 / w**2

    def integrand(t):
        x = kappa * t
        if t == 0.0:
            return 0.0
        return math.exp(math.log(t) - b * t * t + x + math.log(bessel_i0_scaled(x)))

    # The integrand is a Gaussian envelope around t_peak of width ~1/sqrt(b).
    t_peak = kappa / (2.0 * b)
    cutoff = t_peak + 12.0 / math.sqrt(b)
    integral = integrate_semi_infinite(integrand, spec, cutoff=cutoff, points=[t_peak, 1.0 / math.sqrt(2 * b)])
    return pre * integral


def _taylor_coefficients(idx: MomentIndex, layout: CCRLayout, w: float):
    s = layout.radii[list(idx)]
    phi = layout.angles[list(idx)]
    lin = -4.0 * s / w**2  # multiplies delta cos(theta - phi)
    quad = 8.0 * s**2 / w**4  # multiplies delta^2 cos^2(theta - phi)
    iso = -2.0 / w**2  # multiplies delta^2
    return lin, quad, iso, phi


def _ordered(n0, j):
    return itertools.permutations(range(n0), j)


def taylor_polynomials(idx: MomentIndex, layout: CCRLayout, w: float, order: int = 2):
    """Angular coefficients ``P^(2 nu)`` for ``nu = 0..n0`` (``n0 <= 4``).

    Each symmetric sum runs over ordered tuples of distinct positions in the
    index list; the ``1/j!`` factors undo the repeated orderings. With
    ``order=1`` the beam profile keeps only its linear term in ``d``.
    """
    n0 = len(idx)
    if n0 > MAX_APPROX_ORDER:
        raise UnsupportedOrderError(
            f"closed-form approximation covers n0 <= {MAX_APPROX_ORDER}, got {n0}"
        )
    if order not in (1, 2):
        raise ValueError(f"Taylor order must be 1 or 2, got {order!r}")
    a, b, c, phi = _taylor_coefficients(idx, layout, w)
    if order == 1:
        b = np.zeros_like(b)
        c = 0.0
    C = _cached_cosine_integral

    def ang(*ks):
        return tuple(phi[k] for k in ks)

    p = [TWO_PI, 0.0, 0.0, 0.0, 0.0]

    terms = []
    for k1, k2 in _ordered(n0, 2):
        terms.append(a[k1] * a[k2] / 2 * C(ang(k1, k2)))
    for (k1,) in _ordered(n0, 1):
        terms.append(b[k1] * C(ang(k1, k1)) + TWO_PI * c)
    p[1] = math.fsum(terms)

    terms = []
    for k1, k2, k3, k4 in _ordered(n0, 4):
        terms.append(a[k1] * a[k2] * a[k3] * a[k4] / 24 * C(ang(k1, k2, k3, k4)))
    for k1, k2, k3 in _ordered(n0, 3):
        aa = a[k1] * a[k2] / 2
        terms.append(aa * (b[k3] * C(ang(k1, k2, k3, k3)) + c * C(ang(k1, k2))))
    for k1, k2 in _ordered(n0, 2):
        terms.append(
            b[k1] * b[k2] / 2 * C(ang(k1, k1, k2, k2))
            + b[k1] * c * C(ang(k1, k1))
            + c * c / 2 * TWO_PI
        )
    p[2] = math.fsum(terms)

    terms = []
    for k1, k2, k3, k4 in _ordered(n0, 4):
        aa = a[k1] * a[k2] / 2
        terms.append(
            aa
            * (
                b[k3] * b[k4] / 2 * C(ang(k1, k2, k3, k3, k4, k4))
                + b[k3] * c * C(ang(k1, k2, k3, k3))
                + c * c / 2 * C(ang(k1, k2))
            )
        )
    for k1, k2, k3 in _ordered(n0, 3):
        terms.append(
            b[k1] * b[k2] * b[k3] / 6 * C(ang(k1, k1, k2, k2, k3, k3))
            + b[k1] * b[k2] / 2 * c * C(ang(k1, k1, k2, k2))
            + b[k1] * c * c / 2 * C(ang(k1, k1))
            + c**3 / 6 * TWO_PI
        )
    p[3] = math.fsum(terms)

    terms = []
    for k1, k2, k3, k4 in _ordered(n0, 4):
        terms.append(
            b[k1] * b[k2] * b[k3] * b[k4] / 24 * C(ang(k1, k1, k2, k2, k3, k3, k4, k4))
            + b[k1] * b[k2] * b[k3] / 6 * c * C(ang(k1, k1, k2, k2, k3, k3))
            + b[k1] * b[k2] / 4 * c * c * C(ang(k1, k1, k2, k2))
            + b[k1] * c**3 / 6 * C(ang(k1, k1))
            + c**4 / 24 * TWO_PI
        )
    p[4] = math.fsum(terms)
    return p[: n0 + 1]


@lru_cache(maxsize=65536)
def _cached_cosine_integral(etas: tuple) -> float:
    return cosine_product_integral(etas)


def joint_moment_approx(
    idx: Iterable[int],
    layout: CCRLayout,
    w: float,
    sigma_s: float,
    a0: float,
    order: int = 2,
) -> float:
    """Closed-form ``E[Z_m1 ... Z_mn]`` under a Taylor-expanded beam profile.

    ``A0^n / (2 pi) * exp(-sum 2 s^2/w^2) * sum_nu E[delta^(2 nu)] P^(2 nu)``,
    summed from ``nu = 0``. ``order=2`` is the second-order expansion;
    ``order=1`` keeps only the term linear in the jitter and serves as the
    baseline it is compared against.
    """
    idx = canonical_index(idx, layout.m)
    if not sigma_s >= 0:
        raise DomainError("sigma_s must be >= 0")
    if sigma_s == 0:
        # only P^(0) = 2 pi survives; skip the round trip through 2 pi
        return _exp_prefactor(idx, layout, w, a0)
    polys = taylor_polynomials(idx, layout, w, order=order)
    total = math.fsum(rayleigh_moment(nu, sigma_s) * p for nu, p in enumerate(polys))
    return _exp_prefactor(idx, layout, w, a0) / TWO_PI * total


def joint_moment(idx, layout, w, sigma_s, a0, mode="exact", spec=DEFAULT_QUADRATURE):
    """Dispatch to :func:`joint_moment_exact` or :func:`joint_moment_approx`."""
    if mode == "exact":
        return joint_moment_exact(idx, layout, w, sigma_s, a0, spec)
    if mode == "approx":
        return joint_moment_approx(idx, layout, w, sigma_s, a0)
    if mode == "approx1":
        return joint_moment_approx(idx, layout, w, sigma_s, a0, order=1)
    raise ValueError(f"unknown moment mode {mode!r}")
