import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from synthrec.analysis import fit_power_law, ks_distance
from synthrec.sampling import (
    LogNormal,
    LongTailSpec,
    ParameterError,
    PowerLaw,
    PowerLawExpCutoff,
    StretchedExponential,
    beta_shape_from_moments,
    derive_stream,
    empirical_cdf,
    long_tail_cdf,
    long_tail_quantile,
    max_normalized_density,
    sample_bernoulli,
    sample_beta_mean_var,
    sample_dirichlet,
    sample_long_tail,
)

FAMILY_EXAMPLES = [
    PowerLaw(1.99),
    PowerLaw(2.5),
    PowerLawExpCutoff(2.5, 0.05),
    PowerLawExpCutoff(1.5, 0.1),
    PowerLawExpCutoff(2.0, 0.1),
    StretchedExponential(0.5, 0.6),
    LogNormal(0.0, 1.0),
]


class TestStreams:
    def test_same_lineage_same_draws(self):
        a = derive_stream(42, "user:0").random(100)
        b = derive_stream(42, "user:0").random(100)
        np.testing.assert_array_equal(a, b)

    def test_distinct_labels_differ(self):
        a = derive_stream(42, "user:0").random(100)
        b = derive_stream(42, "user:1").random(100)
        assert not np.array_equal(a, b)

    def test_golden_first_draw(self):
        # recorded on first implementation; guards against silent PRNG changes
        assert derive_stream(42, "item:7").random() == 0.8410031739409717

    def test_streams_uncorrelated(self):
        a = derive_stream(3, "user:0").random(20000)
        b = derive_stream(3, "user:1").random(20000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(20000)

    def test_child_label(self):
        s = derive_stream(1, "user").child("3")
        assert s.label == "user/3"


class TestDirichlet:
    def test_on_simplex(self):
        x = sample_dirichlet([1, 1, 1, 1], derive_stream(0, "d"), size=1000)
        np.testing.assert_allclose(x.sum(axis=1), 1.0, atol=1e-9)
        assert (x >= 0).all()

    def test_mean_uniform(self):
        n = 100_000
        x = sample_dirichlet([1, 1, 1, 1], derive_stream(0, "d"), size=n)
        # Var of each component under Dirichlet(1,1,1,1): a(a0-a)/(a0^2 (a0+1)) = 3/80
        se = math.sqrt(3 / 80 / n)
        assert np.all(np.abs(x.mean(axis=0) - 0.25) < 3 * se)

    def test_variance_concentrated(self):
        x = sample_dirichlet([10, 10, 10, 10], derive_stream(1, "d"), size=100_000)
        expected = 0.25 * 0.75 / 41
        np.testing.assert_allclose(x.var(axis=0), expected, rtol=0.10)

    def test_tiny_concentrations_stay_on_simplex(self):
        x = sample_dirichlet([0.05, 0.05, 0.01, 0.01], derive_stream(2, "d"), size=5000)
        assert np.isfinite(x).all()
        np.testing.assert_allclose(x.sum(axis=1), 1.0, atol=1e-9)

    @pytest.mark.parametrize("conc", [[1, 0, 1], [1, -2], []])
    def test_rejects_bad_concentration(self, conc):
        with pytest.raises(ParameterError):
            sample_dirichlet(conc, derive_stream(0, "d"))


class TestBeta:
    def test_symmetric_shape(self):
        a, b = beta_shape_from_moments(0.5, 1e-5)
        assert a == pytest.approx(12499.5)
        assert b == pytest.approx(12499.5)

    def test_shape_asymmetric(self):
        a, b = beta_shape_from_moments(0.9, 1e-5)
        assert a == pytest.approx(8099.1)
        assert b == pytest.approx(899.9)

    @pytest.mark.parametrize("mean", [0.9, 0.98])
    def test_sample_mean(self, mean):
        n = 100_000
        x = sample_beta_mean_var(mean, 1e-5, derive_stream(5, "beta"), size=n)
        assert abs(x.mean() - mean) < 3 * math.sqrt(1e-5 / n)

    def test_unattainable_variance_is_shrunk(self):
        a, b = beta_shape_from_moments(0.5, 0.3)
        # var shrunk to 0.25 * 0.25 -> nu = 3
        assert a + b == pytest.approx(3.0)

    def test_extreme_mean_clamped(self):
        x = sample_beta_mean_var(np.array([0.0, 1.0]), 1e-5, derive_stream(0, "b"))
        assert ((x >= 0) & (x <= 1)).all()

    @pytest.mark.parametrize("mean", [-0.1, 1.5, float("nan")])
    def test_bad_mean(self, mean):
        with pytest.raises(ParameterError):
            sample_beta_mean_var(mean, 1e-5, derive_stream(0, "b"))


class TestLongTail:
    def test_power_law_inverse_at_zero(self):
        assert long_tail_quantile(PowerLaw(2.5, 1.0), 0.0) == 1.0

    def test_power_law_inverse_three_quarters(self):
        spec = PowerLaw(2.5, 1.0)
        x = long_tail_quantile(spec, 0.75)
        assert x == pytest.approx(4 ** (1 / 1.5), rel=1e-12)
        # numeric inversion of the CDF
        root = optimize.brentq(lambda t: long_tail_cdf(spec, t) - 0.75, 1.0, 100.0, xtol=1e-14)
        assert x == pytest.approx(root, rel=1e-9)

    def test_cdf_values(self):
        assert long_tail_cdf(PowerLaw(2.5, 1.0), 1.0) == 0.0
        assert long_tail_cdf(PowerLaw(2.5, 1.0), 2.5198) == pytest.approx(0.75, abs=1e-4)
        assert long_tail_cdf(LogNormal(0.0, 1.0), 1.0) == pytest.approx(0.5)
        assert long_tail_cdf(PowerLaw(2.5, 1.0), 0.3) == 0.0

    @pytest.mark.parametrize("spec", FAMILY_EXAMPLES, ids=lambda s: f"{s.family}")
    def test_pdf_integrates_to_one(self, spec):
        total, _ = integrate.quad(spec.pdf, spec.lower, np.inf, limit=200)
        assert total == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("spec", FAMILY_EXAMPLES, ids=lambda s: f"{s.family}")
    def test_cdf_matches_quadrature(self, spec):
        for x in (1.3, 2.0, 7.5, 40.0):
            expected, _ = integrate.quad(spec.pdf, spec.lower, x, limit=200)
            assert long_tail_cdf(spec, x) == pytest.approx(expected, abs=1e-7)

    @pytest.mark.parametrize("spec", FAMILY_EXAMPLES, ids=lambda s: f"{s.family}")
    def test_samples_match_cdf(self, spec):
        x = sample_long_tail(spec, derive_stream(9, spec.family), size=10_000)
        assert ks_distance(x, spec) < 0.02

    @pytest.mark.parametrize("spec", FAMILY_EXAMPLES, ids=lambda s: f"{s.family}")
    def test_cdf_monotone(self, spec):
        xs = np.linspace(0.0, 200.0, 4001)
        c = long_tail_cdf(spec, xs)
        assert np.all(np.diff(c) >= -1e-15)
        assert c[0] == 0.0

    def test_power_law_mle_recovers_exponent(self):
        x = sample_long_tail(PowerLaw(1.99), derive_stream(4, "pl"), size=10_000)
        assert abs(fit_power_law(x, x_min=1.0).exponent - 1.99) <= 0.1

    def test_samples_above_x_min(self):
        for spec in (PowerLaw(2.0, 3.0), PowerLawExpCutoff(2.0, 0.5, 3.0), StretchedExponential(1.0, 0.5, 3.0)):
            assert sample_long_tail(spec, derive_stream(0, "x"), size=2000).min() >= 3.0

    def test_scalar_draw(self):
        assert isinstance(sample_long_tail(PowerLawExpCutoff(2.0, 0.1), derive_stream(0, "s")), float)

    def test_cutoff_attempt_cap(self, monkeypatch):
        monkeypatch.setattr(PowerLawExpCutoff, "max_attempts", 1)
        with pytest.raises(ParameterError):
            PowerLawExpCutoff(1.1, 50.0).sample(derive_stream(0, "c"), size=10)

    @pytest.mark.parametrize(
        "make",
        [
            lambda: PowerLaw(1.0),
            lambda: PowerLaw(2.0, x_min=0),
            lambda: PowerLawExpCutoff(2.0, 0.0),
            lambda: StretchedExponential(-1.0, 0.5),
            lambda: StretchedExponential(1.0, 0.0),
            lambda: LogNormal(0.0, 0.0),
        ],
    )
    def test_invalid_parameters(self, make):
        with pytest.raises(ParameterError):
            make()

    @pytest.mark.parametrize("spec", FAMILY_EXAMPLES, ids=lambda s: f"{s.family}")
    def test_dict_round_trip(self, spec):
        assert LongTailSpec.from_dict(spec.to_dict()) == spec

    def test_from_dict_unknown_family(self):
        with pytest.raises(ParameterError):
            LongTailSpec.from_dict({"family": "zipf", "exponent": 2})


class TestEmpiricalCdf:
    def test_examples(self):
        assert empirical_cdf([1, 2, 3], 3) == 1.0
        assert empirical_cdf([1, 2, 3], 1) == pytest.approx(1 / 3)
        assert empirical_cdf([1, 1, 2, 5], 2) == 0.75

    def test_empty(self):
        with pytest.raises(ParameterError):
            empirical_cdf([], 1.0)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), st.floats(-1e6, 1e6))
    def test_matches_brute_force(self, values, x):
        assert empirical_cdf(values, x) == sum(v <= x for v in values) / len(values)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
    def test_monotone_and_max_is_one(self, values):
        xs = np.sort(np.asarray(values))
        c = empirical_cdf(values, xs)
        assert np.all(np.diff(c) >= 0)
        assert empirical_cdf(values, max(values)) == 1.0
        assert empirical_cdf(values, min(values)) > 0

    def test_density_mode_bounded(self):
        v = sample_long_tail(PowerLaw(2.0), derive_stream(0, "p"), size=1000)
        d = max_normalized_density(v, v)
        assert d.max() == 1.0 and d.min() >= 0


class TestBernoulli:
    def test_degenerate_probabilities(self):
        s = derive_stream(0, "b")
        assert not sample_bernoulli(0.0, s, size=1000).any()
        assert sample_bernoulli(1.0, s, size=1000).all()

    def test_frequency(self):
        n = 100_000
        f = sample_bernoulli(0.3, derive_stream(1, "b"), size=n).mean()
        assert abs(f - 0.3) < 3 * math.sqrt(0.21 / n)

    @pytest.mark.parametrize("p", [-0.01, 1.01, float("nan")])
    def test_out_of_range(self, p):
        with pytest.raises(ParameterError):
            sample_bernoulli(p, derive_stream(0, "b"))


def test_determinism_across_calls():
    for spec in FAMILY_EXAMPLES:
        a = sample_long_tail(spec, derive_stream(8, "det"), size=50)
        b = sample_long_tail(spec, derive_stream(8, "det"), size=50)
        np.testing.assert_array_equal(a, b)
