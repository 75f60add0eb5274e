"""Brute-force cross-checks of the series-based response matrix."""

import numpy as np
import pytest

from loopdetector import (
    DetectorParams,
    response_matrix,
    response_matrix_bruteforce,
)


def test_vacuum_column_is_dark_count_binomial():
    params = DetectorParams(t_r=0.6, t_c=0.3, eta=0.7, p_d=0.0, L=3)
    W = response_matrix_bruteforce(params, 0)
    assert W.w[:, 0].tolist() == [1.0, 0.0, 0.0, 0.0]


def test_single_photon_column_matches_closed_form():
    params = DetectorParams(t_r=0.72, t_c=0.2, eta=0.8, p_d=0.0, L=4)
    W = response_matrix_bruteforce(params, 1)
    expected = 0.16 * (1.0 - 0.72**4) / 0.28
    assert W.w[1, 1] == pytest.approx(expected, abs=1e-13)
    assert W.w[0, 1] == pytest.approx(1.0 - expected, abs=1e-13)


def test_full_matrix_agreement_for_moderate_size():
    params = DetectorParams(t_r=0.7, t_c=0.25, eta=0.85, p_d=0.02, L=3)
    series_w = response_matrix(params, 3)
    brute_w = response_matrix_bruteforce(params, 3)
    assert np.abs(series_w.w - brute_w.w).max() <= 1e-10


@pytest.mark.parametrize("p_d", [0.0, 0.01, 0.1])
@pytest.mark.parametrize("L", [1, 2, 4])
def test_agreement_across_dark_count_levels(each_backend, p_d, L):
    params = DetectorParams(t_r=0.72, t_c=0.2, eta=0.8, p_d=p_d, L=L)
    series_w = response_matrix(params, 4)
    brute_w = response_matrix_bruteforce(params, 4)
    assert np.abs(series_w.w - brute_w.w).max() <= 1e-10


def test_brute_force_columns_are_normalized():
    params = DetectorParams(t_r=0.5, t_c=0.4, eta=0.9, p_d=0.05, L=4)
    W = response_matrix_bruteforce(params, 4)
    assert np.abs(W.w.sum(axis=0) - 1.0).max() <= 1e-12
