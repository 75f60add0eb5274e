import math

import numpy as np
import pytest

from loopdetector import (
    CountDistribution,
    DetectorParams,
    PhotonNumberDistribution,
    click_probability,
    count_distribution_coherent,
    count_distribution_mixture,
    detection_probabilities,
    effective_efficiency,
    forward_counts,
    generating_function,
    poisson_approximation,
    poisson_tail_mass,
    response_matrix,
)

FIG2 = dict(t_r=0.72, t_c=0.2, eta=0.8, p_d=0.0)


def grid_params():
    """Parameter grid reused by normalization-style sweeps."""
    out = []
    for p_d in (0.0, 0.01, 0.1):
        for t_r, t_c, eta in [(0.3, 0.2, 0.8), (0.72, 0.2, 0.8), (0.9, 0.1, 0.5)]:
            for L in (1, 2, 7, 25, 50):
                out.append(DetectorParams(t_r=t_r, t_c=t_c, eta=eta, p_d=p_d, L=L))
    return out


class TestDetectorParams:
    def test_accepts_fig2_caption_values(self):
        params = DetectorParams(**FIG2, L=50)
        assert params.t_r == 0.72 and params.L == 50

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(t_r=-0.1, t_c=0.2, eta=0.8, p_d=0.0, L=5),
            dict(t_r=0.5, t_c=1.2, eta=0.8, p_d=0.0, L=5),
            dict(t_r=0.5, t_c=0.2, eta=0.8, p_d=0.0, L=0),
            dict(t_r=0.9, t_c=0.2, eta=0.8, p_d=0.0, L=5),  # negative excess loss
            dict(t_r=0.5, t_c=0.2, eta=0.8, p_d=0.0, L=1.5),
        ],
    )
    def test_rejects_invalid_parameters(self, kwargs):
        with pytest.raises(ValueError):
            DetectorParams(**kwargs)

    def test_digest_is_stable_and_parameter_sensitive(self):
        a = DetectorParams(**FIG2, L=50)
        b = DetectorParams(**FIG2, L=50)
        c = DetectorParams(t_r=0.72, t_c=0.2, eta=0.8, p_d=0.01, L=50)
        assert a.digest() == b.digest() != c.digest()


class TestClickProbability:
    def test_dark_free_vacuum_never_clicks(self):
        params = DetectorParams(**FIG2, L=3)
        assert click_probability(params, 1, 0.0) == 0.0

    def test_first_and_second_roundtrip_values(self):
        params = DetectorParams(**FIG2, L=3)
        assert click_probability(params, 1, 1.0) == pytest.approx(
            1.0 - math.exp(-0.16), abs=1e-15
        )
        assert click_probability(params, 2, 1.0) == pytest.approx(
            1.0 - math.exp(-0.1152), abs=1e-15
        )

    def test_rejects_out_of_range_arguments(self):
        params = DetectorParams(**FIG2, L=3)
        for i in (0, 4, -1):
            with pytest.raises(ValueError):
                click_probability(params, i, 1.0)
        with pytest.raises(ValueError):
            click_probability(params, 1, -0.5)


class TestGeneratingFunction:
    @pytest.mark.parametrize("params", grid_params()[::4])
    @pytest.mark.parametrize("intensity", [0.0, 0.7, 2.5])
    def test_normalization_at_z_equal_one(self, params, intensity):
        assert generating_function(params, intensity, 1.0) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_vacuum_without_dark_counts_is_constant_one(self):
        params = DetectorParams(**FIG2, L=10)
        for z in (-1.0, -0.3, 0.0, 0.8, 1.0):
            assert generating_function(params, 0.0, z) == 1.0

    def test_closed_form_at_z_zero_for_fig2_setup(self):
        params = DetectorParams(**FIG2, L=50)
        exponent = 0.16 * (1.0 - 0.72**50) / 0.28
        assert generating_function(params, 1.0, 0.0) == pytest.approx(
            math.exp(-exponent), rel=1e-12
        )

    @pytest.mark.parametrize("params", grid_params()[::5])
    def test_matches_count_distribution_moments(self, params):
        dist = count_distribution_coherent(params, 0.9)
        for z in (-1.0, -0.5, 0.0, 0.5, 1.0):
            poly = float(np.polynomial.polynomial.polyval(z, dist.probs))
            assert abs(poly - generating_function(params, 0.9, z)) <= 1e-10


class TestCountDistributionCoherent:
    def test_vacuum_is_a_point_mass(self, each_backend):
        params = DetectorParams(**FIG2, L=6)
        dist = count_distribution_coherent(params, 0.0)
        assert dist.probs[0] == 1.0 and dist.probs[1:].max() == 0.0

    def test_single_roundtrip_is_bernoulli(self):
        params = DetectorParams(t_r=0.72, t_c=0.2, eta=0.8, p_d=0.05, L=1)
        q = click_probability(params, 1, 1.3)
        dist = count_distribution_coherent(params, 1.3)
        assert dist.probs == pytest.approx([1.0 - q, q], abs=1e-15)

    def test_fig2_zero_click_probability(self, fig2_params):
        dist = count_distribution_coherent(fig2_params, 1.0)
        assert dist.probs[0] == pytest.approx(
            generating_function(fig2_params, 1.0, 0.0), abs=1e-12
        )

    @pytest.mark.parametrize("params", grid_params())
    def test_mean_equals_sum_of_click_probabilities(self, params):
        intensity = 1.1
        dist = count_distribution_coherent(params, intensity)
        exact_mean = sum(
            click_probability(params, i, intensity) for i in range(1, params.L + 1)
        )
        assert abs(dist.mean() - exact_mean) <= 1e-12

    @pytest.mark.parametrize("params", grid_params())
    @pytest.mark.parametrize("intensity", [0.0, 0.5, 1.0, 3.0])
    def test_normalization(self, params, intensity):
        assert abs(count_distribution_coherent(params, intensity).probs.sum() - 1.0) <= 1e-9


class TestCountDistributionMixture:
    def test_single_component_reduces_to_coherent(self, fig2_params):
        direct = count_distribution_coherent(fig2_params, 0.8)
        mixed = count_distribution_mixture(fig2_params, [(1.0, 0.8)])
        assert np.array_equal(direct.probs, mixed.probs)

    def test_vacuum_components_stay_dark(self):
        params = DetectorParams(**FIG2, L=4)
        dist = count_distribution_mixture(params, [(0.5, 0.0), (0.5, 0.0)])
        assert dist.probs[0] == pytest.approx(1.0, abs=1e-15)

    def test_two_components_average_elementwise(self, fig2_params):
        lo = count_distribution_coherent(fig2_params, 0.5)
        hi = count_distribution_coherent(fig2_params, 1.5)
        mixed = count_distribution_mixture(fig2_params, [(0.5, 0.5), (0.5, 1.5)])
        assert np.allclose(mixed.probs, 0.5 * lo.probs + 0.5 * hi.probs, atol=1e-16)

    def test_rejects_unnormalized_weights(self, fig2_params):
        with pytest.raises(ValueError, match="sum"):
            count_distribution_mixture(fig2_params, [(0.7, 1.0), (0.7, 2.0)])
        with pytest.raises(ValueError):
            count_distribution_mixture(fig2_params, [(-0.5, 1.0), (1.5, 2.0)])


class TestEffectiveEfficiency:
    def test_lossless_limit_reaches_apd_efficiency(self):
        params = DetectorParams(t_r=0.75, t_c=0.25, eta=0.8, p_d=0.0, L=5)
        assert effective_efficiency(params) == pytest.approx(0.8, rel=1e-15)

    def test_fig2_value_is_four_sevenths(self):
        assert effective_efficiency(DetectorParams(**FIG2, L=50)) == pytest.approx(
            4.0 / 7.0, abs=1e-12
        )

    def test_closed_coupler_extracts_nothing(self):
        assert effective_efficiency(DetectorParams(t_r=0.9, t_c=0.0, eta=0.8, p_d=0.0, L=5)) == 0.0

    def test_lossless_loop_is_rejected(self):
        with pytest.raises(ValueError, match="t_r = 1"):
            effective_efficiency(DetectorParams(t_r=1.0, t_c=0.0, eta=0.8, p_d=0.0, L=5))


class TestPoissonApproximation:
    def test_vacuum_gives_zero_rate(self, fig2_params):
        lam, dist = poisson_approximation(fig2_params, 0.0)
        assert lam == 0.0 and dist.probs[0] == 1.0

    def test_fig2_rate_and_zero_click_probability(self, fig2_params):
        lam, dist = poisson_approximation(fig2_params, 1.0)
        assert lam == pytest.approx(4.0 / 7.0, abs=1e-12)
        assert dist.probs[0] == pytest.approx(math.exp(-4.0 / 7.0), rel=1e-12)

    def test_rate_splits_into_light_and_dark_terms(self):
        dark = DetectorParams(t_r=0.72, t_c=0.2, eta=0.8, p_d=0.001, L=50)
        clean = DetectorParams(**FIG2, L=50)
        lam_dark, _ = poisson_approximation(dark, 1.0)
        lam_clean, _ = poisson_approximation(clean, 1.0)
        assert lam_dark - 50 * 0.001 == pytest.approx(lam_clean, abs=1e-15)

    def test_poisson_limit_total_variation(self):
        params = DetectorParams(t_r=0.98, t_c=0.01, eta=0.8, p_d=1e-6, L=2000)
        exact = count_distribution_coherent(params, 0.1)
        _, approx = poisson_approximation(params, 0.1)
        tv = 0.5 * np.abs(exact.probs - approx.probs).sum()
        assert tv <= 1e-3

    def test_poisson_limit_second_regime(self):
        # t_c * I <= 0.01, p_d * L <= 0.01, t_r^L <= 1e-12
        params = DetectorParams(t_r=0.99, t_c=0.005, eta=0.9, p_d=1e-6, L=3000)
        exact = count_distribution_coherent(params, 1.0)
        _, approx = poisson_approximation(params, 1.0)
        assert 0.5 * np.abs(exact.probs - approx.probs).sum() <= 1e-3


class TestResponseMatrix:
    def test_vacuum_column_without_dark_counts(self, each_backend, fig2_params):
        W = response_matrix(fig2_params, 3)
        assert W.w[0, 0] == 1.0
        assert W.w[1:, 0].max() == 0.0

    def test_vacuum_zero_click_probability_with_dark_counts(self):
        params = DetectorParams(t_r=0.72, t_c=0.2, eta=0.8, p_d=0.03, L=7)
        W = response_matrix(params, 2)
        assert W.w[0, 0] == pytest.approx((1.0 - 0.03) ** 7, rel=1e-12)

    def test_single_photon_detection_probability(self, fig2_params):
        W = response_matrix(fig2_params, 3)
        expected = 0.16 * (1.0 - 0.72**50) / 0.28
        assert W.w[1, 1] == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(4.0 / 7.0, abs=1e-7)

    def test_two_photons_in_two_roundtrips(self):
        params = DetectorParams(t_r=0.72, t_c=0.2, eta=0.8, p_d=0.0, L=2)
        W = response_matrix(params, 2)
        assert W.w[2, 2] == pytest.approx(2 * 0.16 * 0.1152, abs=1e-13)

    @pytest.mark.parametrize("params", grid_params())
    def test_columns_are_normalized(self, params):
        n_max = 15 if params.L >= 7 else 4
        W = response_matrix(params, n_max)
        assert np.abs(W.w.sum(axis=0) - 1.0).max() <= 1e-9

    @pytest.mark.parametrize("params", [p for p in grid_params() if p.p_d == 0.0])
    def test_triangular_without_dark_counts(self, params):
        W = response_matrix(params, 6)
        for k in range(W.k_max + 1):
            for n in range(W.n_max + 1):
                if k > n:
                    assert W.w[k, n] == 0.0

    def test_entries_are_clamped_probabilities(self, fig2_params):
        W = response_matrix(fig2_params, 10)
        assert W.w.min() >= 0.0 and W.w.max() <= 1.0

    def test_rejects_negative_truncation(self, fig2_params):
        with pytest.raises(ValueError):
            response_matrix(fig2_params, -1)


class TestForwardCounts:
    def test_vacuum_input_never_clicks(self, fig2_params):
        W = response_matrix(fig2_params, 4)
        dist = forward_counts(W, PhotonNumberDistribution.fock(0, 4))
        assert dist.probs[0] == 1.0

    def test_single_photon_input_extracts_column_one(self, fig2_params):
        W = response_matrix(fig2_params, 4)
        dist = forward_counts(W, PhotonNumberDistribution.fock(1, 4))
        assert np.array_equal(dist.probs, W.w[:, 1])

    def test_poissonian_input_reproduces_coherent_statistics(self, fig2_params):
        # Poisson tail above n_max must be far below the comparison tolerance
        n_max = 24
        assert poisson_tail_mass(1.0, n_max) < 1e-10
        W = response_matrix(fig2_params, n_max)
        rho = PhotonNumberDistribution.poisson(1.0, n_max)
        via_matrix = forward_counts(W, rho)
        direct = count_distribution_coherent(fig2_params, 1.0)
        assert np.abs(via_matrix.probs - direct.probs).max() <= 1e-10

    def test_rejects_oversized_photon_distribution(self, fig2_params):
        W = response_matrix(fig2_params, 3)
        with pytest.raises(ValueError, match="truncation"):
            forward_counts(W, PhotonNumberDistribution.poisson(1.0, 5))


class TestValueTypes:
    def test_count_distribution_must_normalize(self):
        with pytest.raises(ValueError):
            CountDistribution(np.array([0.5, 0.4]))
        with pytest.raises(ValueError):
            CountDistribution(np.array([1.2, -0.2]))

    def test_photon_number_distribution_must_normalize(self):
        with pytest.raises(ValueError):
            PhotonNumberDistribution(np.array([0.5, 0.4]))

    def test_poisson_constructor_renormalizes_truncation(self):
        rho = PhotonNumberDistribution.poisson(1.0, 8)
        assert rho.rho.sum() == pytest.approx(1.0, abs=1e-15)

    def test_fock_constructor_checks_truncation(self):
        with pytest.raises(ValueError):
            PhotonNumberDistribution.fock(5, 3)

    def test_detection_probabilities_sum_below_one(self):
        for params in grid_params():
            d = detection_probabilities(params)
            assert d.shape == (params.L,)
            assert d.sum() <= 1.0 + 1e-12
