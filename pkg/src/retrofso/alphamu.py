"""alpha-mu distribution and its 1st/2nd/4th moment estimator."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .channel_moments import MomentSet
from .errors import DomainError, EstimationError
from .numerics import ln_gamma, reg_lower_incomplete_gamma

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
# search box for (ln alpha, ln mu); large mu is the near-lognormal regime
_LOG_BOUNDS = ((-25.0, 12.0), (-12.0, 45.0))


@dataclass(frozen=True)
class AlphaMuParams:
    alpha: float
    mu: float
    r_hat: float

    def __post_init__(self):
        for name in ("alpha", "mu", "r_hat"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"alpha-mu {name} must be positive and finite, got {v!r}")


def alpha_mu_pdf(r, p: AlphaMuParams):
    """Density ``alpha mu^mu r^(alpha mu - 1) / (r_hat^(alpha mu) Gamma(mu)) exp(-mu (r/r_hat)^alpha)``."""
    rs = np.asarray(r, dtype=float)
    if np.any(rs < 0):
        raise DomainError("alpha-mu density needs r >= 0")
    with np.errstate(divide="ignore"):
        x = rs / p.r_hat
        log_f = (
            math.log(p.alpha)
            + p.mu * math.log(p.mu)
            + (p.alpha * p.mu - 1.0) * np.log(x)
            - math.log(p.r_hat)
            - ln_gamma(p.mu)
            - p.mu * x**p.alpha
        )
        out = np.exp(log_f)
    if out.ndim == 0:
        return float(out)
    return out


def alpha_mu_cdf(r, p: AlphaMuParams):
    """CDF via the regularized lower incomplete gamma, ``P(mu, mu (r/r_hat)^alpha)``."""
    rs = np.asarray(r, dtype=float)
    if np.any(rs < 0):
        raise DomainError("alpha-mu CDF needs r >= 0")
    with np.errstate(over="ignore"):
        # overflow to inf is the right limit: the CDF is 1 there
        x = p.mu * (rs / p.r_hat) ** p.alpha
    return reg_lower_incomplete_gamma(p.mu, x)


def alpha_mu_moment(k: float, p: AlphaMuParams) -> float:
    """``E[R^k] = r_hat^k Gamma(mu + k/alpha) / (mu^(k/alpha) Gamma(mu))``."""
    if not p.mu + k / p.alpha > 0:
        raise DomainError("moment order requires mu + k/alpha > 0")
    return math.exp(k * math.log(p.r_hat) + _lgamma_increment(p.mu, k / p.alpha))


def _lgamma_increment(mu, h):
    """``ln Gamma(mu + h) - ln Gamma(mu) - h ln(mu)`` without cancellation."""
    direct = special.gammaln(mu + h) - special.gammaln(mu) - h * math.log(mu)
    scale = abs(special.gammaln(mu + h)) + abs(special.gammaln(mu)) + abs(h * math.log(mu))
    if scale <= 1e3 * max(abs(direct), 1e-300):
        return direct
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(
            lambda u: special.digamma(mu + u) - math.log(mu), 0.0, h, epsabs=0.0, epsrel=1e-13, limit=200
        )
    return val


def _lgamma_second_difference(mu, h):
    """``ln Gamma(mu) + ln Gamma(mu + 2h) - 2 ln Gamma(mu + h)``, always > 0."""
    direct = special.gammaln(mu) + special.gammaln(mu + 2 * h) - 2 * special.gammaln(mu + h)
    scale = abs(special.gammaln(mu)) + abs(special.gammaln(mu + 2 * h)) + 2 * abs(special.gammaln(mu + h))
    if scale <= 1e3 * max(abs(direct), 1e-300):
        return direct
    # second difference = integral of trigamma against a triangular kernel
    kw = dict(epsabs=0.0, epsrel=1e-13, limit=200)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        left, _ = integrate.quad(lambda u: special.polygamma(1, mu + u) * u, 0.0, h, **kw)
        right, _ = integrate.quad(lambda u: special.polygamma(1, mu + u) * (2 * h - u), h, 2 * h, **kw)
    return left + right


def _log_excess(alpha, mu, k):
    # ln(Gamma(mu) Gamma(mu + 2k/alpha) / Gamma(mu + k/alpha)^2 - 1)
    d = _lgamma_second_difference(mu, k / alpha)
    if not d > 0:
        return -math.inf
    if d > 30:
        return d + math.log1p(-math.exp(-d))
    return math.log(math.expm1(d))


def _targets(m: MomentSet):
    e1 = m.m2 / m.m1**2 - 1.0
    e2 = m.m4 / m.m2**2 - 1.0
    if not (e1 > 0 and e2 > 0):
        raise DomainError(
            f"moment ratios are infeasible for an alpha-mu fit (m2/m1^2-1={e1!r}, m4/m2^2-1={e2!r})"
        )
    # ln(1+e2) < 4 ln(1+e1) for every alpha-mu law (equality only in the
    # lognormal limit), because the trigamma function is decreasing.
    spread = math.log1p(e2) / math.log1p(e1)
    if not spread < 4.0:
        raise DomainError(
            f"moments lie outside the alpha-mu family: ln(m4/m2^2)/ln(m2/m1^2) = {spread:.6g} "
            "reaches the lognormal limit 4"
        )
    return np.array([math.log(e1), math.log(e2)])


def _residual(x, y):
    alpha, mu = math.exp(x[0]), math.exp(x[1])
    return np.array([_log_excess(alpha, mu, 1), _log_excess(alpha, mu, 2)]) - y


def _jacobian(x, y, h=1e-6):
    jac = np.empty((2, 2))
    for j in range(2):
        step = np.zeros(2)
        step[j] = h
        jac[:, j] = (_residual(x + step, y) - _residual(x - step, y)) / (2 * h)
    return jac


def _newton(x0, y, max_iter=100):
    """Damped Newton on (ln alpha, ln mu). Returns (x, |residual|_inf)."""
    x = np.array(x0, dtype=float)
    f = _residual(x, y)
    norm = np.max(np.abs(f))
    for _ in range(max_iter):
        if norm < RESIDUAL_TOL * 1e-2:
            break
        jac = _jacobian(x, y)
        if not np.all(np.isfinite(jac)):
            break
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            break
        # cap the log-space step so one iteration moves at most a factor e^2
        scale = min(1.0, 2.0 / max(np.max(np.abs(step)), 1e-300))
        step *= scale
        lam = 1.0
        improved = False
        while lam > 1e-6:
            x_new = x + lam * step
            if _LOG_BOUNDS[0][0] < x_new[0] < _LOG_BOUNDS[0][1] and _LOG_BOUNDS[1][0] < x_new[1] < _LOG_BOUNDS[1][1]:
                f_new = _residual(x_new, y)
                norm_new = np.max(np.abs(f_new))
                if np.isfinite(norm_new) and norm_new < norm:
                    improved = True
                    break
            lam /= 2
        if not improved:
            break
        x, f, norm = x_new, f_new, norm_new
    return x, norm


def fit_alpha_mu(moments: MomentSet) -> AlphaMuParams:
    """Match an alpha-mu law to ``E[S]``, ``E[S^2]`` and ``E[S^4]``.

    Solves the two moment-ratio equations for ``(alpha, mu)`` with damped
    Newton in log-parameters started at ``(2, 1)``; on failure a coarse log
    grid over ``[0.1, 100]^2`` reseeds the iteration. ``r_hat`` then follows
    from the first moment.

    Raises
    ------
    DomainError
        If the moment ratios cannot come from any alpha-mu law.
    EstimationError
        If no root is found; carries the best residual.
    """
    y = _targets(moments)
    x, norm = _newton(np.log([2.0, 1.0]), y)
    if not norm < RESIDUAL_TOL:
        log.debug("alpha-mu Newton from (2, 1) stalled at residual %.3g; reseeding", norm)
        grid = np.log(np.logspace(-1, 2, 25))
        seeds = []
        for la in grid:
            for lm in grid:
                r = _residual(np.array([la, lm]), y)
                n = np.max(np.abs(r))
                if np.isfinite(n):
                    seeds.append((n, la, lm))
        seeds.sort()
        best = (norm, x)
        for _, la, lm in seeds[:8]:
            xs, ns = _newton((la, lm), y)
            if ns < best[0]:
                best = (ns, xs)
            if ns < RESIDUAL_TOL:
                break
        norm, x = best
    if not norm < RESIDUAL_TOL:
        raise EstimationError(
            f"alpha-mu moment matching failed, best residual {norm:.3g}",
            estimate=(math.exp(x[0]), math.exp(x[1])),
            error_bound=norm,
        )
    alpha, mu = math.exp(x[0]), math.exp(x[1])
    r_hat = math.exp(math.log(moments.m1) - _lgamma_increment(mu, 1.0 / alpha))
    return AlphaMuParams(alpha, mu, r_hat)


def outage_probability(p_th: float, c: float, p: AlphaMuParams) -> float:
    """``Prob[S < p_th / c]`` under the fitted alpha-mu law."""
    if not (p_th > 0 and c > 0):
        raise DomainError("threshold and link constant must be positive")
    return alpha_mu_cdf(p_th / c, p)
