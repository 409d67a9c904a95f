import math

import numpy as np
import pytest

from retrofso.channel_moments import STRONG, WEAK, TurbulenceParams, moment_set, u_moment
from retrofso.errors import ConfigurationError
from retrofso.geometry import CCRLayout, LinkGeometry, derive_budget, layout_circular
from retrofso.pointing import joint_moment_exact
from retrofso.simulate import (
    ConventionalBaseline,
    SimulationPlan,
    conventional_constant,
    conventional_outage,
    sample_correlated_gg,
    sample_pointing,
    simulate_conventional,
    simulate_outage,
)

SQRT2 = math.sqrt(2.0)
A0 = 5e-5


def within(sample, target, k=3.0):
    se = sample.std() / math.sqrt(sample.size)
    return abs(sample.mean() - target) < k * se


def geometry(**over):
    kw = dict(z=5000.0, a_gs=0.1, a_re=0.05, sigma_s=1.0, rho_refl=0.5, p_gs=1.0, p_th=1e-8, visibility=10_000.0, w=10.0)
    kw.update(over)
    return LinkGeometry(**kw)


def plan(**over):
    kw = dict(geometry=geometry(), layout=layout_circular(4, SQRT2), turbulence=WEAK, samples=100_000, seed=3)
    kw.update(over)
    return SimulationPlan(**kw)


class TestCorrelatedGammaGamma:
    def test_independent_limit(self):
        rng = np.random.default_rng(1)
        x, y = sample_correlated_gg(TurbulenceParams(4.0, 1.9), rng, 1_000_000)
        r = np.corrcoef(x, y)[0, 1]
        assert abs(r) < 3 / math.sqrt(x.size)

    @pytest.mark.parametrize("params", [WEAK, STRONG])
    def test_unit_mean(self, params):
        rng = np.random.default_rng(2)
        x, y = sample_correlated_gg(params, rng, 1_000_000)
        assert within(x, 1.0) and within(y, 1.0)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_product_moments_match(self, n):
        rng = np.random.default_rng(10 + n)
        x, y = sample_correlated_gg(STRONG, rng, 2_000_000)
        assert within((x * y) ** n, u_moment(n, STRONG), k=3.5)

    def test_gamma_pair_correlation_and_marginals(self):
        rng = np.random.default_rng(4)
        params = TurbulenceParams(3.0, 1e9, 0.7, 0.0)
        x, y = sample_correlated_gg(params, rng, 1_000_000)
        # with beta -> inf the small-scale factors are ~1 and X, Y are Gamma(3)/3
        assert np.corrcoef(x, y)[0, 1] == pytest.approx(0.7, abs=0.005)
        for v in (x, y):
            assert v.var() == pytest.approx(1 / 3, rel=0.01)

    def test_scalar_draw(self):
        x, y = sample_correlated_gg(WEAK, np.random.default_rng(0))
        assert np.ndim(x) == 0 and np.ndim(y) == 0


class TestSamplePointing:
    def test_no_jitter(self):
        lay = layout_circular(4, SQRT2)
        z = sample_pointing(lay, 0.0, 10.0, A0, np.random.default_rng(0), 5)
        np.testing.assert_allclose(z, A0 * math.exp(-2 * 2 / 100), rtol=1e-15)

    def test_centred_mean(self):
        lay = CCRLayout(np.zeros((1, 2)), min_spacing=0.0)
        z = sample_pointing(lay, 1.0, 10.0, A0, np.random.default_rng(1), 1_000_000)[:, 0]
        assert within(z, A0 / (1 + 4 / 100))

    def test_shared_jitter_pair_moment(self):
        lay = layout_circular(4, SQRT2)
        z = sample_pointing(lay, 1.0, 10.0, A0, np.random.default_rng(2), 2_000_000)
        assert within(z[:, 0] * z[:, 1], joint_moment_exact((0, 1), lay, 10.0, 1.0, A0))

    def test_single_draw_shape(self):
        z = sample_pointing(layout_circular(4, SQRT2), 1.0, 10.0, A0, np.random.default_rng(0))
        assert z.shape == (4,)


class TestSimulateOutage:
    def test_huge_threshold(self):
        res = simulate_outage(plan(), [1e6])
        assert res.outage[0] == 1.0

    def test_default_threshold(self):
        res = simulate_outage(plan(samples=10_000))
        assert res.thresholds[0] == pytest.approx(derive_budget(geometry()).threshold(1e-8))

    def test_zero_count_error_bar(self):
        res = simulate_outage(plan(samples=10_000), [0.0])
        assert res.counts[0] == 0 and res.outage_se[0] == pytest.approx(1e-4)

    def test_repeatable(self):
        a = simulate_outage(plan(), [1e-4, 2e-4])
        b = simulate_outage(plan(), [1e-4, 2e-4])
        assert a.moments == b.moments and np.array_equal(a.counts, b.counts)

    def test_seed_changes_result(self):
        a = simulate_outage(plan(), [2e-4])
        b = simulate_outage(plan(seed=4), [2e-4])
        assert a.moments != b.moments

    def test_worker_count_does_not_matter(self):
        a = simulate_outage(plan(samples=150_000, workers=1), [1e-4, 2e-4])
        b = simulate_outage(plan(samples=150_000, workers=2), [1e-4, 2e-4])
        assert a.moments == b.moments and a.moment_se == b.moment_se
        assert np.array_equal(a.counts, b.counts)

    def test_moments_match_analytic(self):
        res = simulate_outage(plan(samples=1_000_000), [1e-4])
        ms = moment_set(WEAK, layout_circular(4, SQRT2), 10.0, 1.0, A0)
        for k, m in zip((1, 2, 4), (ms.m1, ms.m2, ms.m4)):
            assert abs(res.moments[k] - m) < 3.5 * res.moment_se[k]

    def test_more_jitter_more_outage(self):
        thr = np.logspace(-4.2, -3.3, 8)
        lo = simulate_outage(plan(geometry=geometry(w=8.5, sigma_s=0.5), samples=200_000), thr)
        hi = simulate_outage(plan(geometry=geometry(w=8.5, sigma_s=1.0), samples=200_000), thr)
        assert np.all(hi.outage >= lo.outage)

    @pytest.mark.parametrize(
        "kw", [dict(samples=0), dict(workers=0), dict(chunk_size=0), dict(seed=-1), dict(seed=2**64)]
    )
    def test_plan_validation(self, kw):
        with pytest.raises(ConfigurationError):
            plan(**kw)


class TestConventional:
    def test_missing_baseline(self):
        with pytest.raises(ConfigurationError):
            conventional_outage(plan())
        with pytest.raises(ConfigurationError):
            simulate_conventional(plan(), [1.0])

    def test_defaults_use_uplink_beam_and_telescope(self):
        g, w_conv = conventional_constant(plan(baseline=ConventionalBaseline()))
        geom = geometry()
        assert w_conv == 10.0
        assert g == pytest.approx(math.exp(-geom.attenuation * 5000) * 2 * 0.1**2 / 100)

    def test_deterministic_link_is_a_step(self):
        still = TurbulenceParams(1e9, 1e9)
        p = plan(geometry=geometry(sigma_s=0.0), turbulence=still, baseline=ConventionalBaseline(), samples=20_000)
        gain, _ = conventional_constant(p)
        p_star = 1e-8 / gain
        out, _ = simulate_conventional(p, [0.99 * p_star, 1.01 * p_star])
        assert out.tolist() == [1.0, 0.0]

    def test_half_power_is_dominated(self):
        p = plan(turbulence=STRONG, baseline=ConventionalBaseline(), samples=200_000)
        p_t = np.logspace(-4, -1, 10)
        full, _ = simulate_conventional(p, p_t)
        half, _ = simulate_conventional(p, 0.5 * p_t)
        assert np.all(half >= full)

    def test_fraction_applies_to_ground_power(self):
        p = plan(turbulence=STRONG, baseline=ConventionalBaseline(p_t_fraction=0.5), samples=50_000,
                 geometry=geometry(p_gs=1e-3))
        out, _ = simulate_conventional(p, [0.5e-3])
        assert conventional_outage(p) == out[0]

    def test_crossover_against_reflector_diversity(self):
        # beacon wins at low power, the four-reflector system at high power
        p = plan(turbulence=STRONG, baseline=ConventionalBaseline(), samples=2_000_000)
        c1 = derive_budget(geometry()).c
        p_gs = np.array([1e-4, 1e-1])
        proposed = simulate_outage(p, 1e-8 / (c1 * p_gs)).outage
        beacon, _ = simulate_conventional(p, p_gs)
        assert proposed[0] > beacon[0]
        assert proposed[1] < beacon[1]

    def test_baseline_validation(self):
        with pytest.raises(ConfigurationError):
            ConventionalBaseline(p_t_fraction=0.0)
        with pytest.raises(ConfigurationError):
            ConventionalBaseline(beamwidth=-1.0)
