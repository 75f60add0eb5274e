"""Monte Carlo simulation of loop-detector count histograms.

Trials are processed in fixed-size blocks; block ``b`` of a run draws its
uniforms from an independent counter-based (Philox) stream keyed by
``(seed, sampler id, b)``, and every trial consumes a fixed draw budget.
Histograms are therefore reproducible bit for bit for a given seed,
independent of the worker count and of the kernel backend (the tally kernels
only compare the uniforms against precomputed thresholds).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from . import _backend
from .response import (
    CountDistribution,
    DetectorParams,
    PhotonNumberDistribution,
    _window_click_probabilities,
    detection_probabilities,
)

# Trials per RNG block.  Part of the reproducibility contract: changing it
# changes the histograms produced by a given seed.
BLOCK_TRIALS = 4096

_STREAM_COHERENT = 0
_STREAM_FOCK = 1
_STREAM_DISTRIBUTION = 2
_STREAM_MIXTURE = 3


@dataclass(frozen=True)
class CountHistogram:
    """Tallies of k-click events over a number of trials."""

    tallies: np.ndarray
    trials: int
    seed: int
    params_digest: str

    def __post_init__(self):
        t = np.ascontiguousarray(np.asarray(self.tallies, dtype=np.int64))
        if t.ndim != 1 or t.shape[0] < 1:
            raise ValueError("tallies must be a non-empty vector")
        if t.min() < 0:
            raise ValueError("tallies must be nonnegative")
        if int(t.sum()) != self.trials:
            raise ValueError(
                f"tallies sum to {int(t.sum())}, expected trials = {self.trials}"
            )
        t.flags.writeable = False
        object.__setattr__(self, "tallies", t)

    @property
    def k_max(self) -> int:
        return self.tallies.shape[0] - 1

    def frequencies(self) -> np.ndarray:
        return self.tallies / self.trials


def _check_run_args(trials: int, seed: int, workers: int) -> None:
    if not (isinstance(trials, (int, np.integer)) and trials >= 1):
        raise ValueError(f"trials must be a positive integer, got {trials!r}")
    if not (isinstance(seed, (int, np.integer)) and seed >= 0):
        raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
    if not (isinstance(workers, (int, np.integer)) and workers >= 1):
        raise ValueError(f"workers must be a positive integer, got {workers!r}")


def _block_uniforms(seed: int, stream: int, block: int, m: int, budget: int) -> np.ndarray:
    ss = np.random.SeedSequence((int(seed), int(stream), int(block)))
    gen = np.random.Generator(np.random.Philox(ss))
    return gen.random((m, budget))


def _run_blocks(
    params: DetectorParams,
    trials: int,
    seed: int,
    workers: int,
    stream: int,
    budget: int,
    consume: Callable[[np.ndarray], np.ndarray],
) -> CountHistogram:
    _check_run_args(trials, seed, workers)
    n_blocks = (trials + BLOCK_TRIALS - 1) // BLOCK_TRIALS

    def one(block: int) -> np.ndarray:
        m = min(BLOCK_TRIALS, trials - block * BLOCK_TRIALS)
        return consume(_block_uniforms(seed, stream, block, m, budget))

    tallies = np.zeros(params.L + 1, dtype=np.int64)
    if workers == 1 or n_blocks == 1:
        for block in range(n_blocks):
            tallies += one(block)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for block_tallies in pool.map(one, range(n_blocks)):
                tallies += block_tallies
    return CountHistogram(tallies, trials, int(seed), params.digest())


def simulate_coherent(
    params: DetectorParams, intensity: float, trials: int, seed: int = 0, workers: int = 1
) -> CountHistogram:
    """Simulate coherent-input trials (one Bernoulli click draw per window)."""
    q = _window_click_probabilities(params, intensity)
    kern = _backend.kernels
    return _run_blocks(
        params, trials, seed, workers, _STREAM_COHERENT, params.L,
        lambda u: kern.tally_coherent(u, q),
    )


def simulate_fock(
    params: DetectorParams, n: int, trials: int, seed: int = 0, workers: int = 1
) -> CountHistogram:
    """Simulate trials with exactly ``n`` photons injected.

    Each photon independently lands in roundtrip ``i`` with probability
    ``eta t_c t_r^(i-1)`` or is never detected; dark counts click windows
    independently when ``p_d > 0``.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 0):
        raise ValueError(f"photon number must be a nonnegative integer, got {n!r}")
    cum_detect = np.cumsum(detection_probabilities(params))
    budget = n + (params.L if params.p_d > 0 else 0)
    kern = _backend.kernels
    return _run_blocks(
        params, trials, seed, workers, _STREAM_FOCK, budget,
        lambda u: kern.tally_fock(u, cum_detect, int(n), params.p_d),
    )


def simulate_distribution(
    params: DetectorParams,
    rho: PhotonNumberDistribution,
    trials: int,
    seed: int = 0,
    workers: int = 1,
) -> CountHistogram:
    """Simulate trials whose photon number is drawn from ``rho`` per trial."""
    cum_photon = np.cumsum(rho.rho / rho.rho.sum())
    cum_photon[-1] = 1.0  # uniform draws are < 1, so the index stays in range
    cum_detect = np.cumsum(detection_probabilities(params))
    budget = 1 + rho.n_max + (params.L if params.p_d > 0 else 0)
    kern = _backend.kernels
    return _run_blocks(
        params, trials, seed, workers, _STREAM_DISTRIBUTION, budget,
        lambda u: kern.tally_distribution(u, cum_photon, cum_detect, params.p_d),
    )


def simulate_mixture(
    params: DetectorParams,
    mixture: Sequence[tuple[float, float]],
    trials: int,
    seed: int = 0,
    workers: int = 1,
) -> CountHistogram:
    """Simulate a classical mixture of coherent intensities.

    Each trial consumes one component draw plus one uniform per window; the
    component's click probabilities are applied exactly (no photon-number
    truncation).
    """
    weights = np.asarray([w for w, _ in mixture], dtype=np.float64)
    if len(mixture) == 0 or weights.min() < 0 or abs(weights.sum() - 1.0) > 1e-10:
        raise ValueError("mixture weights must be nonnegative and sum to 1")
    q_rows = np.stack(
        [_window_click_probabilities(params, intensity) for _, intensity in mixture]
    )
    cum_weights = np.cumsum(weights / weights.sum())
    cum_weights[-1] = 1.0

    def consume(u: np.ndarray) -> np.ndarray:
        component = np.searchsorted(cum_weights, u[:, 0], side="right")
        clicks = (u[:, 1:] < q_rows[component]).sum(axis=1)
        return np.bincount(clicks, minlength=params.L + 1).astype(np.int64)

    return _run_blocks(
        params, trials, seed, workers, _STREAM_MIXTURE, 1 + params.L, consume
    )


class GofResult(NamedTuple):
    statistic: float
    pvalue: float
    dof: int


def chi_square_gof(
    hist: CountHistogram, expected: CountDistribution, min_expected: float = 5.0
) -> GofResult:
    """Chi-square goodness of fit of a histogram against exact probabilities.

    Adjacent bins are pooled (ascending in k) until each pooled bin carries an
    expected count of at least ``min_expected``; a deficient trailing group is
    merged into its predecessor.
    """
    if hist.k_max != expected.k_max:
        raise ValueError("histogram and distribution cover different count ranges")
    observed = hist.tallies.astype(np.float64)
    expected_counts = expected.probs * hist.trials

    obs_groups: list[float] = []
    exp_groups: list[float] = []
    acc_obs = acc_exp = 0.0
    for o, e in zip(observed, expected_counts):
        acc_obs += o
        acc_exp += e
        if acc_exp >= min_expected:
            obs_groups.append(acc_obs)
            exp_groups.append(acc_exp)
            acc_obs = acc_exp = 0.0
    if acc_exp > 0 or acc_obs > 0:
        if exp_groups:
            obs_groups[-1] += acc_obs
            exp_groups[-1] += acc_exp
        else:
            obs_groups.append(acc_obs)
            exp_groups.append(acc_exp)
    if len(exp_groups) < 2:
        raise ValueError("fewer than two bins carry enough expected counts")

    statistic, pvalue = stats.chisquare(obs_groups, exp_groups)
    return GofResult(float(statistic), float(pvalue), len(exp_groups) - 1)
