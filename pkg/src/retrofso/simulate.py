"""Monte Carlo ground truth for the reflected-power statistics.

Samples are drawn in fixed-size chunks. Chunk ``j`` always gets the random
stream ``SeedSequence(seed, spawn_key=(stream, j))`` on a Philox generator,
and chunk results are merged in chunk order with compensated sums, so the
output depends only on ``(seed, samples, chunk_size)`` and not on how many
worker processes ran the chunks.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .channel_moments import TurbulenceParams
from .errors import ConfigurationError
from .geometry import CCRLayout, LinkGeometry, derive_budget

DEFAULT_CHUNK = 1 << 16
_PROPOSED_STREAM = 0
_BASELINE_STREAM = 1
_MAX_POWER = 8  # power sums kept per chunk; standard error of E[S^4] needs S^8


@dataclass(frozen=True)
class ConventionalBaseline:
    """One-way beacon link from the UAV used as the comparison system.

    ``beamwidth`` and ``rx_radius`` default to the uplink footprint
    beamwidth and the ground telescope radius.
    """

    p_t_fraction: float = 1.0
    beamwidth: Optional[float] = None
    rx_radius: Optional[float] = None
    rx_gain: float = 1.0

    def __post_init__(self):
        if not self.p_t_fraction > 0:
            raise ConfigurationError("baseline transmit-power fraction must be positive")
        if not self.rx_gain > 0:
            raise ConfigurationError("baseline receive gain must be positive")
        for name in ("beamwidth", "rx_radius"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigurationError(f"baseline {name} must be positive")


@dataclass(frozen=True)
class SimulationPlan:
    geometry: LinkGeometry
    layout: CCRLayout
    turbulence: TurbulenceParams
    samples: int = 1_000_000
    seed: int = 0
    workers: int = 1
    baseline: Optional[ConventionalBaseline] = None
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        if int(self.samples) < 1:
            raise ConfigurationError("samples must be >= 1")
        if int(self.workers) < 1:
            raise ConfigurationError("workers must be >= 1")
        if int(self.chunk_size) < 1:
            raise ConfigurationError("chunk_size must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")


@dataclass
class SimulationResult:
    """Empirical statistics of ``S``.

    ``moments`` and ``moment_se`` are keyed by order (1, 2, 4); ``outage``
    and ``outage_se`` align with ``thresholds``.
    """

    samples: int
    moments: Dict[int, float]
    moment_se: Dict[int, float]
    thresholds: np.ndarray
    outage: np.ndarray
    outage_se: np.ndarray
    counts: np.ndarray = field(repr=False)


def _kibble_pair(shape, rho, rng, size):
    # Bivariate gamma with Gamma(shape, 1) marginals and correlation rho:
    # given G1, N ~ Poisson(rho G1 / (1 - rho)) and G2 = (1 - rho) Gamma(shape + N).
    g1 = rng.standard_gamma(shape, size)
    if rho == 0:
        return g1, rng.standard_gamma(shape, size)
    n = rng.poisson(g1 * (rho / (1.0 - rho)))
    g2 = (1.0 - rho) * rng.standard_gamma(shape + n)
    return g1, g2


def sample_correlated_gg(params: TurbulenceParams, rng: np.random.Generator, size=None):
    """Draw correlated unit-mean Gamma-Gamma uplink/downlink fades ``(X, Y)``.

    Each of the large- and small-scale Gamma pairs is drawn from the
    bivariate gamma law whose product moments are
    ``Gamma(a+n)^2/Gamma(a)^2 a^(-2n) 2F1(-n,-n;a;rho)``, so ``E[(XY)^n]``
    matches :func:`retrofso.channel_moments.u_moment` at every order.
    """
    xa, ya = _kibble_pair(params.alpha1, params.rho_alpha, rng, size)
    xb, yb = _kibble_pair(params.beta1, params.rho_beta, rng, size)
    scale = 1.0 / (params.alpha1 * params.beta1)
    return xa * xb * scale, ya * yb * scale


def sample_pointing(layout: CCRLayout, sigma_s: float, w: float, a0: float, rng, size=None):
    """Pointing losses of all CCRs for shared jitter draws, shape ``(size, M)``.

    One jitter vector ``d ~ N(0, sigma_s^2 I)`` per sample displaces every
    CCR; ``Z_i = A0 exp(-2 |s_i + d|^2 / w^2)``.
    """
    n = 1 if size is None else int(size)
    d = rng.standard_normal((n, 2)) * sigma_s
    r = layout.positions[None, :, :] + d[:, None, :]
    z = a0 * np.exp(-2.0 * (r[..., 0] ** 2 + r[..., 1] ** 2) / w**2)
    return z[0] if size is None else z


def _chunk_rng(seed, stream, index):
    ss = np.random.SeedSequence(int(seed), spawn_key=(stream, index))
    return np.random.Generator(np.random.Philox(ss))


def _chunk_bounds(samples, chunk_size):
    starts = range(0, samples, chunk_size)
    return [(j, min(chunk_size, samples - s)) for j, s in enumerate(starts)]


def _proposed_chunk(task):
    seed, index, n, turb, positions, w, sigma_s, a0, thresholds = task
    rng = _chunk_rng(seed, _PROPOSED_STREAM, index)
    d = rng.standard_normal((n, 2)) * sigma_s
    s_norm = np.zeros(n)
    for px, py in positions:
        x, y = sample_correlated_gg(turb, rng, n)
        r2 = (px + d[:, 0]) ** 2 + (py + d[:, 1]) ** 2
        s_norm += x * y * np.exp(-2.0 * r2 / w**2)
    # power sums of S / A0 keep S^8 well inside double range
    powers = [np.sum(s_norm**k) for k in range(1, _MAX_POWER + 1)]
    counts = np.searchsorted(np.sort(s_norm), thresholds / a0, side="left")
    return powers, counts


def _baseline_chunk(task):
    seed, index, n, turb, sigma_s, w_conv, thresholds = task
    rng = _chunk_rng(seed, _BASELINE_STREAM, index)
    d = rng.standard_normal((n, 2)) * sigma_s
    h_a = (
        rng.standard_gamma(turb.alpha1, n)
        * rng.standard_gamma(turb.beta1, n)
        / (turb.alpha1 * turb.beta1)
    )
    q = h_a * np.exp(-2.0 * (d[:, 0] ** 2 + d[:, 1] ** 2) / w_conv**2)
    return np.searchsorted(np.sort(q), thresholds, side="left")


def _run(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks, chunksize=1))


def _binomial_se(counts, n):
    p = counts / n
    se = np.sqrt(p * (1.0 - p) / n)
    # no events seen: report the one-event resolution instead of zero
    return np.where(counts == 0, 1.0 / n, se)


def simulate_outage(plan: SimulationPlan, thresholds: Optional[Sequence[float]] = None) -> SimulationResult:
    """Empirical moments and outage of ``S = sum_i U_i Z_i``.

    Parameters
    ----------
    plan : SimulationPlan
    thresholds : sequence of float, optional
        Thresholds on ``S`` (i.e. ``P_th / c``). Defaults to the single
        threshold implied by the plan's geometry.
    """
    budget = derive_budget(plan.geometry)
    if thresholds is None:
        thresholds = [budget.threshold(plan.geometry.p_th)]
    thr = np.asarray(thresholds, dtype=float).reshape(-1)
    n_total = int(plan.samples)
    tasks = [
        (
            plan.seed,
            j,
            n,
            plan.turbulence,
            tuple(map(tuple, plan.layout.positions)),
            budget.w,
            plan.geometry.sigma_s,
            budget.a0,
            thr,
        )
        for j, n in _chunk_bounds(n_total, int(plan.chunk_size))
    ]
    results = _run(_proposed_chunk, tasks, int(plan.workers))
    sums = [math.fsum(r[0][k] for r in results) / n_total for k in range(_MAX_POWER)]
    counts = np.sum([r[1] for r in results], axis=0)
    moments, moment_se = {}, {}
    for k in (1, 2, 4):
        mean = sums[k - 1]
        var = max(sums[2 * k - 1] - mean * mean, 0.0)
        moments[k] = mean * budget.a0**k
        moment_se[k] = math.sqrt(var / max(n_total - 1, 1)) * budget.a0**k
    return SimulationResult(
        samples=n_total,
        moments=moments,
        moment_se=moment_se,
        thresholds=thr,
        outage=counts / n_total,
        outage_se=_binomial_se(counts, n_total),
        counts=counts,
    )


def conventional_constant(plan: SimulationPlan) -> Tuple[float, float]:
    """Deterministic gain and beamwidth of the beacon baseline.

    Returns ``(g, w')`` with ``P_R = g * P_T * h_a * exp(-2|d|^2/w'^2)`` and
    ``g = exp(-sigma z) * A0' * G_rx``, ``A0' = 2 a_rx^2 / w'^2``.
    """
    if plan.baseline is None:
        raise ConfigurationError("simulation plan has no conventional baseline")
    geom, base = plan.geometry, plan.baseline
    w_conv = base.beamwidth if base.beamwidth is not None else geom.beamwidth
    a_rx = base.rx_radius if base.rx_radius is not None else geom.a_gs
    gain = math.exp(-geom.attenuation * geom.z) * 2.0 * a_rx**2 / w_conv**2 * base.rx_gain
    return gain, w_conv


def simulate_conventional(plan: SimulationPlan, p_t_values: Sequence[float]):
    """Outage ``Prob[P_R < P_th]`` of the baseline for each transmit power.

    Returns ``(outage, standard_error)`` arrays aligned with ``p_t_values``.
    """
    gain, w_conv = conventional_constant(plan)
    p_t = np.asarray(p_t_values, dtype=float).reshape(-1)
    thr = plan.geometry.p_th / (gain * p_t)
    n_total = int(plan.samples)
    tasks = [
        (plan.seed, j, n, plan.turbulence, plan.geometry.sigma_s, w_conv, thr)
        for j, n in _chunk_bounds(n_total, int(plan.chunk_size))
    ]
    counts = np.sum(_run(_baseline_chunk, tasks, int(plan.workers)), axis=0)
    return counts / n_total, _binomial_se(counts, n_total)


def conventional_outage(plan: SimulationPlan) -> float:
    """Baseline outage at the plan's ground-station power and power fraction."""
    if plan.baseline is None:
        raise ConfigurationError("simulation plan has no conventional baseline")
    p_t = plan.baseline.p_t_fraction * plan.geometry.p_gs
    outage, _ = simulate_conventional(plan, [p_t])
    return float(outage[0])
