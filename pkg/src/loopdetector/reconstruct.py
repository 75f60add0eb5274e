"""Photon-number reconstruction from count histograms.

Inverts ``p = W rho`` by truncated-SVD least squares.  The estimator is kept
linear (no nonnegativity constraint), so the multinomial covariance of the
measured frequencies propagates exactly to the estimate; entries of the
estimate may therefore carry signed noise.  Use
:meth:`ReconstructionResult.clipped` for a presentable nonnegative version.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .response import PhotonNumberDistribution, ResponseMatrix
from .simulate import CountHistogram

DEFAULT_SV_THRESHOLD = 1e-8


@dataclass(frozen=True)
class ReconstructionResult:
    """Truncated-SVD estimate of a photon-number distribution."""

    rho_hat: np.ndarray
    std_errors: np.ndarray
    n_max: int
    sv_threshold: float
    residual_norm: float
    numerical_rank: int
    rank_deficient: bool

    def __post_init__(self):
        for name in ("rho_hat", "std_errors"):
            v = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=np.float64))
            if v.shape != (self.n_max + 1,):
                raise ValueError(f"{name} must have length n_max + 1")
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        if self.std_errors.min() < 0:
            raise ValueError("standard errors must be nonnegative")

    def clipped(self) -> PhotonNumberDistribution:
        """Negative entries clipped to zero and the rest renormalized."""
        clipped = np.clip(self.rho_hat, 0.0, None)
        total = clipped.sum()
        if total <= 0:
            raise ValueError("estimate has no positive mass to renormalize")
        return PhotonNumberDistribution(clipped / total)


@dataclass(frozen=True)
class ConditioningReport:
    """Singular-value diagnostics of a response matrix."""

    singular_values: np.ndarray
    condition_number: float
    numerical_rank: int
    invertible: bool

    def __post_init__(self):
        s = np.ascontiguousarray(np.asarray(self.singular_values, dtype=np.float64))
        if s.min() < 0 or np.any(np.diff(s) > 0):
            raise ValueError("singular values must be nonnegative and descending")
        s.flags.writeable = False
        object.__setattr__(self, "singular_values", s)


def _check_threshold(sv_threshold: float) -> None:
    if not 0.0 < sv_threshold < 1.0:
        raise ValueError(f"sv_threshold must lie in (0, 1), got {sv_threshold!r}")


def _svd_pseudo_inverse(w: np.ndarray, sv_threshold: float):
    """Pseudo-inverse with singular values below ``sv_threshold * s_max`` zeroed."""
    u, s, vt = np.linalg.svd(w, full_matrices=False)
    keep = s >= sv_threshold * s[0] if s.size and s[0] > 0 else np.zeros_like(s, bool)
    inverted = np.where(keep, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return (vt.T * inverted) @ u.T, s, int(keep.sum())


def estimate_errors(w_pinv: np.ndarray, hist: CountHistogram) -> np.ndarray:
    """Standard errors of ``w_pinv @ frequencies`` from multinomial counting noise.

    Propagates ``Cov(p_hat) = (diag(p_hat) - p_hat p_hat^T) / trials`` through
    the linear estimator and returns the square roots of the diagonal.
    """
    if hist.trials < 2:
        raise ValueError("error estimation needs at least two trials")
    p_hat = hist.frequencies()
    cov_p = (np.diag(p_hat) - np.outer(p_hat, p_hat)) / hist.trials
    cov_rho = w_pinv @ cov_p @ w_pinv.T
    return np.sqrt(np.clip(np.diag(cov_rho), 0.0, None))


def reconstruct_svd(
    W: ResponseMatrix,
    counts: CountHistogram | np.ndarray,
    sv_threshold: float = DEFAULT_SV_THRESHOLD,
) -> ReconstructionResult:
    """Estimate the photon-number distribution behind measured count statistics.

    ``counts`` is either a :class:`CountHistogram` (frequencies and their
    multinomial errors are derived from it) or a vector of exact count
    probabilities (the infinite-trials path; standard errors are zero).
    A result whose numerical rank falls short of ``n_max + 1`` is flagged
    ``rank_deficient`` but still returned.
    """
    _check_threshold(sv_threshold)
    if isinstance(counts, CountHistogram):
        if counts.k_max != W.k_max:
            raise ValueError(
                f"histogram covers k <= {counts.k_max}, response matrix k <= {W.k_max}"
            )
        p_hat = counts.frequencies()
        hist = counts
    else:
        p_hat = np.asarray(counts, dtype=np.float64)
        if p_hat.shape != (W.k_max + 1,):
            raise ValueError(
                f"probability vector must have length {W.k_max + 1}, got {p_hat.shape}"
            )
        hist = None

    w_pinv, _, rank = _svd_pseudo_inverse(W.w, sv_threshold)
    rho_hat = w_pinv @ p_hat
    residual = float(np.linalg.norm(W.w @ rho_hat - p_hat))
    if hist is not None:
        std = estimate_errors(w_pinv, hist)
    else:
        std = np.zeros(W.n_max + 1)
    return ReconstructionResult(
        rho_hat=rho_hat,
        std_errors=std,
        n_max=W.n_max,
        sv_threshold=float(sv_threshold),
        residual_norm=residual,
        numerical_rank=rank,
        rank_deficient=rank < W.n_max + 1,
    )


def condition_diagnostics(
    W: ResponseMatrix, sv_threshold: float = DEFAULT_SV_THRESHOLD
) -> ConditioningReport:
    """Singularity test of the response matrix over ``n = 0..n_max``.

    The matrix is invertible (the count statistics determine the truncated
    photon-number distribution) iff all ``n_max + 1`` singular values survive
    the relative threshold.
    """
    _check_threshold(sv_threshold)
    s = np.linalg.svd(W.w, compute_uv=False)
    if s.size and s[0] > 0:
        rank = int((s >= sv_threshold * s[0]).sum())
    else:
        rank = 0
    condition = float(s[0] / s[rank - 1]) if rank >= 1 else float("inf")
    return ConditioningReport(
        singular_values=s,
        condition_number=condition,
        numerical_rank=rank,
        invertible=rank == W.n_max + 1,
    )
