"""NumPy implementations of the hot kernels.

This is the fallback used when the compiled extension is unavailable; the
signatures and draw-consumption contracts are identical to
``loopdetector._kernels``.  The tally kernels perform no float arithmetic on
the uniforms (comparisons only), so tallies are bit-identical across backends.
"""

import numpy as np
from scipy.signal import convolve2d


def mul_truncated(a, b):
    """Cauchy product of two coefficient grids, truncated to the input shape."""
    if a.shape != b.shape:
        raise ValueError("series shapes differ")
    return convolve2d(a, b)[: a.shape[0], : a.shape[1]]


def bernoulli_pmf(q):
    """Distribution of the number of successes among independent Bernoulli(q_i)."""
    p = np.zeros(q.shape[0] + 1)
    p[0] = 1.0
    for i, qi in enumerate(q):
        head = p[: i + 2]
        new = head * (1.0 - qi)
        new[1:] += head[:-1] * qi
        p[: i + 2] = new
    return p


def tally_coherent(u, q):
    """Tally click counts for coherent-input trials (one window per column)."""
    k = (u < q[None, :]).sum(axis=1)
    return np.bincount(k, minlength=q.shape[0] + 1).astype(np.int64)


def tally_fock(u, cum_detect, n_photons, p_d):
    """Tally click counts for fixed-photon-number trials.

    Row layout of ``u``: ``n_photons`` fate draws, then (iff the row is wider
    than ``n_photons``) one dark draw per window.
    """
    m = u.shape[0]
    nw = cum_detect.shape[0]
    clicked = np.zeros((m, nw + 1), dtype=bool)  # last column collects losses
    if n_photons:
        idx = np.searchsorted(cum_detect, u[:, :n_photons], side="right")
        rows = np.repeat(np.arange(m), n_photons)
        clicked[rows, idx.ravel()] = True
    clicked = clicked[:, :nw]
    if u.shape[1] > n_photons:
        clicked |= u[:, n_photons:] < p_d
    return np.bincount(clicked.sum(axis=1), minlength=nw + 1).astype(np.int64)


def tally_distribution(u, cum_photon, cum_detect, p_d):
    """Tally click counts for trials whose photon number is drawn per trial.

    Row layout of ``u``: one photon-number draw, ``n_cap`` fate draws of which
    only the first ``n`` count, then optional dark draws.
    """
    m = u.shape[0]
    nw = cum_detect.shape[0]
    n_cap = cum_photon.shape[0] - 1
    n_t = np.searchsorted(cum_photon, u[:, 0], side="right")
    clicked = np.zeros((m, nw + 1), dtype=bool)
    if n_cap:
        idx = np.searchsorted(cum_detect, u[:, 1 : 1 + n_cap], side="right")
        idx = np.where(np.arange(n_cap)[None, :] < n_t[:, None], idx, nw)
        rows = np.repeat(np.arange(m), n_cap)
        clicked[rows, idx.ravel()] = True
    clicked = clicked[:, :nw]
    if u.shape[1] > 1 + n_cap:
        clicked |= u[:, 1 + n_cap :] < p_d
    return np.bincount(clicked.sum(axis=1), minlength=nw + 1).astype(np.int64)
