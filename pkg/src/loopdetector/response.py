"""Detector response model for the fiber-loop photon counter.

The pulse under test is trapped in a fiber loop; on each of ``L`` roundtrips a
weak coupler extracts a fraction ``t_c`` of the stored intensity onto a
Geiger-mode APD (quantum efficiency ``eta``, dark-count probability ``p_d``
per window), while the loop transmits a fraction ``t_r`` to the next
roundtrip.  A window clicks at most once per roundtrip; the measurement
records the total number of clicks over the ``L`` windows.

This module provides the exact count statistics for coherent input, the
Poisson limiting form, and the conditional-probability response matrix
``w(k|n)`` mapping photon number to click count, including an independent
brute-force construction used as a correctness oracle.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from . import _backend, series

# Raw response-matrix entries must land in [0,1] up to series roundoff, and
# must vanish identically above the diagonal when p_d = 0.
_ENTRY_SLACK = 1e-9
_COLUMN_SLACK = 1e-9
_TRIANGLE_SLACK = 1e-12

_PROB_SUM_TOL = 1e-10


@dataclass(frozen=True)
class DetectorParams:
    """Physical configuration of one loop-detector setup.

    t_r:  power transmission of a full roundtrip (all element losses included)
    t_c:  fraction of the stored intensity extracted to the APD per roundtrip
    eta:  APD quantum efficiency
    p_d:  dark-count probability per roundtrip window
    L:    number of loop circulations

    The excess loss ``1 - t_r - t_c`` must be nonnegative.  Any injection
    (switch) insertion loss is not modeled here; fold it into the input
    intensity, which counts photons after injection into the loop.
    """

    t_r: float
    t_c: float
    eta: float
    p_d: float
    L: int

    def __post_init__(self):
        for name in ("t_r", "t_c", "eta", "p_d"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
                raise ValueError(f"{name} must be a fraction in [0, 1], got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.t_c + self.t_r > 1.0:
            raise ValueError(
                f"t_c + t_r = {self.t_c + self.t_r} exceeds 1 (negative excess loss)"
            )
        if not (isinstance(self.L, (int, np.integer)) and not isinstance(self.L, bool)):
            raise ValueError(f"L must be an integer, got {self.L!r}")
        if self.L < 1:
            raise ValueError(f"L must be at least 1, got {self.L}")
        object.__setattr__(self, "L", int(self.L))

    def digest(self) -> str:
        """Short stable identifier of the parameter set."""
        text = (
            f"t_r={self.t_r:.17g},t_c={self.t_c:.17g},eta={self.eta:.17g},"
            f"p_d={self.p_d:.17g},L={self.L}"
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class CountDistribution:
    """Click-count probabilities ``p(k)`` for ``k = 0..L``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.probs, dtype=np.float64))
        if p.ndim != 1 or p.shape[0] < 1:
            raise ValueError("count distribution must be a non-empty vector")
        if p.min() < 0.0 or p.max() > 1.0 + 1e-12:
            raise ValueError("count probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > _PROB_SUM_TOL:
            raise ValueError(f"count probabilities sum to {p.sum()!r}, not 1")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @property
    def k_max(self) -> int:
        return self.probs.shape[0] - 1

    def mean(self) -> float:
        return float(np.arange(self.probs.shape[0]) @ self.probs)


@dataclass(frozen=True)
class PhotonNumberDistribution:
    """Photon-number probabilities ``rho(n)`` truncated at ``n_max``."""

    rho: np.ndarray

    def __post_init__(self):
        r = np.ascontiguousarray(np.asarray(self.rho, dtype=np.float64))
        if r.ndim != 1 or r.shape[0] < 1:
            raise ValueError("photon-number distribution must be a non-empty vector")
        if r.min() < 0.0 or r.max() > 1.0 + 1e-12:
            raise ValueError("photon-number probabilities must lie in [0, 1]")
        if abs(r.sum() - 1.0) > _PROB_SUM_TOL:
            raise ValueError(f"photon-number probabilities sum to {r.sum()!r}, not 1")
        r.flags.writeable = False
        object.__setattr__(self, "rho", r)

    @property
    def n_max(self) -> int:
        return self.rho.shape[0] - 1

    @classmethod
    def fock(cls, n: int, n_max: int | None = None) -> "PhotonNumberDistribution":
        """Point mass on exactly ``n`` photons."""
        if n < 0:
            raise ValueError("photon number must be nonnegative")
        n_max = n if n_max is None else n_max
        if n_max < n:
            raise ValueError("truncation must not cut the occupied state")
        r = np.zeros(n_max + 1)
        r[n] = 1.0
        return cls(r)

    @classmethod
    def poisson(cls, mean: float, n_max: int) -> "PhotonNumberDistribution":
        """Poissonian distribution truncated at ``n_max`` and renormalized.

        Check :func:`poisson_tail_mass` to confirm the truncation is harmless
        for the intended use.
        """
        if mean < 0:
            raise ValueError("mean photon number must be nonnegative")
        pmf = stats.poisson.pmf(np.arange(n_max + 1), mean)
        return cls(pmf / pmf.sum())


def poisson_tail_mass(mean: float, n_max: int) -> float:
    """Poisson probability mass above ``n_max`` (truncation error indicator)."""
    return float(stats.poisson.sf(n_max, mean))


@dataclass(frozen=True)
class ResponseMatrix:
    """Conditional click probabilities ``w[k][n]``, k = 0..L, n = 0..n_max.

    Entries are clamped to [0, 1] on construction so downstream probability
    code never sees the signed roundoff dust of the series expansion.
    """

    w: np.ndarray
    params: DetectorParams
    n_max: int

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.w, dtype=np.float64))
        if w.ndim != 2 or w.shape != (self.params.L + 1, self.n_max + 1):
            raise ValueError(
                f"response matrix must have shape ({self.params.L + 1}, "
                f"{self.n_max + 1}), got {w.shape}"
            )
        if w.min() < 0.0 or w.max() > 1.0:
            raise ValueError("response-matrix entries must lie in [0, 1]")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    @property
    def k_max(self) -> int:
        return self.params.L


def detection_probabilities(params: DetectorParams) -> np.ndarray:
    """Per-photon detection probability in each roundtrip, ``eta t_c t_r^(i-1)``.

    The leftover ``1 - sum`` is the probability that a photon is never
    detected (lost to excess loss, coupler inefficiency, or never extracted).
    """
    return params.eta * params.t_c * params.t_r ** np.arange(params.L)


def click_probability(params: DetectorParams, i: int, intensity: float) -> float:
    """Probability of a click in roundtrip ``i`` (1-based) for coherent input."""
    if not 1 <= i <= params.L:
        raise ValueError(f"roundtrip index {i} outside [1, {params.L}]")
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    decay = params.eta * params.t_c * params.t_r ** (i - 1)
    return 1.0 - (1.0 - params.p_d) * math.exp(-decay * intensity)


def _window_click_probabilities(params: DetectorParams, intensity: float) -> np.ndarray:
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    return 1.0 - (1.0 - params.p_d) * np.exp(-detection_probabilities(params) * intensity)


def generating_function(params: DetectorParams, intensity: float, z: float) -> float:
    """Probability generating function of the click count for coherent input.

    Evaluates the product over roundtrips of
    ``z + (1 - z)(1 - p_d) exp(-eta t_c t_r^(i-1) I)``.
    """
    q = _window_click_probabilities(params, intensity)
    value = 1.0
    for qi in q:
        value *= (1.0 - qi) + qi * z
    return value


def count_distribution_coherent(params: DetectorParams, intensity: float) -> CountDistribution:
    """Exact click-count distribution for a coherent pulse of mean ``intensity``.

    The clicks in distinct roundtrips are independent Bernoulli events, so the
    distribution is the sequential convolution of the per-window factors.
    """
    q = _window_click_probabilities(params, intensity)
    return CountDistribution(_backend.kernels.bernoulli_pmf(q))


def count_distribution_mixture(
    params: DetectorParams, mixture: Sequence[tuple[float, float]]
) -> CountDistribution:
    """Click-count distribution for a classical mixture of coherent intensities.

    ``mixture`` is a sequence of ``(weight, intensity)`` pairs; weights must be
    nonnegative and sum to 1.
    """
    if len(mixture) == 0:
        raise ValueError("mixture must contain at least one component")
    weights = np.asarray([w for w, _ in mixture], dtype=np.float64)
    if weights.min() < 0:
        raise ValueError("mixture weights must be nonnegative")
    if abs(weights.sum() - 1.0) > _PROB_SUM_TOL:
        raise ValueError(f"mixture weights sum to {weights.sum()!r}, not 1")
    p = np.zeros(params.L + 1)
    for weight, intensity in mixture:
        p += weight * count_distribution_coherent(params, intensity).probs
    return CountDistribution(p)


def effective_efficiency(params: DetectorParams) -> float:
    """Effective efficiency ``eta t_c / (1 - t_r)`` of the loop detector.

    Reaches the bare APD efficiency in the lossless limit ``t_c = 1 - t_r``.
    """
    if params.t_r >= 1.0:
        raise ValueError("effective efficiency undefined for a lossless loop (t_r = 1)")
    return params.eta * params.t_c / (1.0 - params.t_r)


def poisson_approximation(
    params: DetectorParams, intensity: float
) -> tuple[float, CountDistribution]:
    """Poisson limit of the count statistics.

    Valid when single-window extraction is weak (``t_c * I`` small), dark
    counts are rare, and ``L`` is large enough for the pulse to leak out
    completely.  Returns the mean count
    ``lambda = eta t_c I / (1 - t_r) + L p_d`` and the Poisson distribution
    truncated at ``k = L`` and renormalized (the truncated mass is negligible
    in the validity regime).
    """
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    lam = effective_efficiency(params) * intensity + params.L * params.p_d
    pmf = stats.poisson.pmf(np.arange(params.L + 1), lam)
    return lam, CountDistribution(pmf / pmf.sum())


def _roundtrip_factor(
    params: DetectorParams, i: int, k_max: int, n_max: int
) -> series.BivariateSeries:
    """Series of ``z + (1 - z)(1 - p_d) exp(-eta t_c t_r^(i-1) I)``."""
    a = -params.eta * params.t_c * params.t_r ** (i - 1)
    exp_row = series.exp_intensity(a, 0, n_max).coeffs[0]
    c = np.zeros((k_max + 1, n_max + 1))
    c[0, :] = (1.0 - params.p_d) * exp_row
    c[1, :] = -(1.0 - params.p_d) * exp_row
    c[1, 0] += 1.0
    return series.BivariateSeries(c)


def response_matrix(params: DetectorParams, n_max: int) -> ResponseMatrix:
    """Conditional probabilities ``w(k|n)`` via the double series expansion.

    Multiplies the per-roundtrip generating-function factors together with
    ``exp(+I)``, all truncated to degrees ``(L, n_max)``; the coefficient of
    ``z^k I^n`` times ``n!`` is ``w(k|n)``.
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    k_max = params.L
    acc = _roundtrip_factor(params, 1, k_max, n_max)
    for i in range(2, params.L + 1):
        acc = series.multiply(acc, _roundtrip_factor(params, i, k_max, n_max))
    acc = series.multiply(acc, series.exp_intensity(1.0, k_max, n_max))

    factorials = np.ones(n_max + 1)
    for n in range(1, n_max + 1):
        factorials[n] = factorials[n - 1] * n
    raw = acc.coeffs * factorials[None, :]

    if raw.min() < -_ENTRY_SLACK or raw.max() > 1.0 + _ENTRY_SLACK:
        raise ValueError(
            "series expansion produced entries outside [0, 1] beyond roundoff; "
            "the parameter set is numerically unusable"
        )
    col_err = np.abs(raw.sum(axis=0) - 1.0).max()
    if col_err > _COLUMN_SLACK:
        raise ValueError(f"response-matrix columns deviate from unit sum by {col_err}")
    if params.p_d == 0.0:
        above = np.abs(np.tril(raw, -1))  # rows k > columns n
        if above.size and above.max() > _TRIANGLE_SLACK:
            raise ValueError(
                "nonzero click probability above the photon number with p_d = 0"
            )
    return ResponseMatrix(np.clip(raw, 0.0, 1.0), params, n_max)


def response_matrix_bruteforce(params: DetectorParams, n_max: int) -> ResponseMatrix:
    """Independent construction of ``w(k|n)`` by enumerating photon fates.

    Every assignment of ``n`` distinguishable photons to the outcomes
    {detected in roundtrip 1..L, never detected} is enumerated with its
    probability; a window clicks if it received at least one detection or an
    independent dark count, and dark-only clicks over the unoccupied windows
    follow a binomial law.  Cost grows as ``(L+1)^n``; intended for small
    (L, n_max) as a cross-check of :func:`response_matrix`.
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    L = params.L
    detect = detection_probabilities(params)
    fate = np.append(detect, 1.0 - detect.sum())  # outcome L = never detected

    # dark_pmf[s][j]: probability of j dark-only clicks given s occupied windows
    dark_pmf = [
        np.array(
            [
                math.comb(L - s, j) * params.p_d**j * (1.0 - params.p_d) ** (L - s - j)
                for j in range(L - s + 1)
            ]
        )
        for s in range(L + 1)
    ]

    w = np.zeros((L + 1, n_max + 1))
    for n in range(n_max + 1):
        occupied_mass = np.zeros(min(n, L) + 1)
        for assignment in itertools.product(range(L + 1), repeat=n):
            prob = math.prod(fate[f] for f in assignment)
            s = len({f for f in assignment if f < L})
            occupied_mass[s] += prob
        for s, mass in enumerate(occupied_mass):
            w[s : L + 1, n] += mass * dark_pmf[s]
    return ResponseMatrix(np.clip(w, 0.0, 1.0), params, n_max)


def forward_counts(W: ResponseMatrix, rho: PhotonNumberDistribution) -> CountDistribution:
    """Click-count distribution ``p(k) = sum_n w(k|n) rho(n)``."""
    if rho.n_max > W.n_max:
        raise ValueError(
            f"photon-number truncation {rho.n_max} exceeds the response matrix's {W.n_max}"
        )
    return CountDistribution(W.w[:, : rho.n_max + 1] @ rho.rho)
