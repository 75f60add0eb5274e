"""Single-shot inference quality of the loop detector.

Given a prior photon-number distribution, the confidence of a ``k``-click
event is the posterior probability that it was triggered by the ``k``-photon
component.  The coupler splitting ratio ``t_c`` trades how much light reaches
the APD per roundtrip against how much survives for later roundtrips, so the
confidence can be optimized over ``t_c`` under an explicit loss policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .response import DetectorParams, PhotonNumberDistribution, ResponseMatrix, response_matrix

_PLATEAU_TOL = 1e-12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class UndefinedEventError(ValueError):
    """The conditioning click-count event has zero prior probability."""


def confidence(W: ResponseMatrix, prior: PhotonNumberDistribution, k: int) -> float:
    """Posterior probability that a ``k``-click event came from ``k`` photons.

    Requires ``k`` to lie inside the prior's truncation (otherwise the
    ``k``-photon hypothesis is not representable and the call is refused).
    """
    if not 0 <= k <= W.k_max:
        raise ValueError(f"click count {k} outside [0, {W.k_max}]")
    if prior.n_max > W.n_max:
        raise ValueError(
            f"prior truncation {prior.n_max} exceeds the response matrix's {W.n_max}"
        )
    if k > prior.n_max:
        raise ValueError(
            f"click count {k} exceeds the prior truncation {prior.n_max}; "
            "extend the prior instead of treating the confidence as 0"
        )
    denominator = float(W.w[k, : prior.n_max + 1] @ prior.rho)
    if denominator <= 0.0:
        raise UndefinedEventError(
            f"a {k}-click event has zero probability under this prior"
        )
    return float(W.w[k, k] * prior.rho[k]) / denominator


@dataclass(frozen=True)
class CouplingScan:
    """Result of optimizing the coupler ratio for a target click count.

    ``curve`` holds the grid samples as ``(t_c, confidence)`` rows with NaN
    marking undefined events; ``plateau`` is set when several grid points tie
    at the maximum, in which case the smallest ``t_c`` is reported unrefined.
    """

    t_c_star: float
    confidence_star: float
    curve: np.ndarray
    plateau: bool


def optimize_coupling(
    eta: float,
    p_d: float,
    L: int,
    prior: PhotonNumberDistribution,
    k: int,
    *,
    excess_loss: float | None = None,
    fixed_t_r: float | None = None,
    grid: int = 64,
) -> CouplingScan:
    """Maximize the ``k``-click confidence over the coupler ratio ``t_c``.

    Exactly one loss policy applies: with ``excess_loss`` fixed (the default,
    0 if neither argument is given) the roundtrip transmission co-varies as
    ``t_r = 1 - excess_loss - t_c``; with ``fixed_t_r`` the transmission stays
    put and ``t_c`` ranges up to ``1 - t_r``.  A grid scan guards bracketing
    (the objective may plateau), then golden-section refinement sharpens the
    best interior bracket.
    """
    if excess_loss is not None and fixed_t_r is not None:
        raise ValueError("give either excess_loss or fixed_t_r, not both")
    if grid < 3:
        raise ValueError("grid resolution must be at least 3")
    if excess_loss is None and fixed_t_r is None:
        excess_loss = 0.0

    if excess_loss is not None:
        if not 0.0 <= excess_loss < 1.0:
            raise ValueError(f"excess loss must lie in [0, 1), got {excess_loss!r}")
        t_c_max = 1.0 - excess_loss

        def make_params(t_c: float) -> DetectorParams:
            return DetectorParams(
                t_r=max(1.0 - excess_loss - t_c, 0.0), t_c=t_c, eta=eta, p_d=p_d, L=L
            )

    else:
        if not 0.0 <= fixed_t_r < 1.0:
            raise ValueError(f"fixed t_r must lie in [0, 1), got {fixed_t_r!r}")
        t_c_max = 1.0 - fixed_t_r

        def make_params(t_c: float) -> DetectorParams:
            return DetectorParams(t_r=fixed_t_r, t_c=t_c, eta=eta, p_d=p_d, L=L)

    def objective(t_c: float) -> float:
        try:
            return confidence(response_matrix(make_params(t_c), prior.n_max), prior, k)
        except UndefinedEventError:
            return math.nan

    t_grid = np.linspace(t_c_max / grid, t_c_max, grid)
    c_grid = np.array([objective(t) for t in t_grid])
    curve = np.column_stack([t_grid, c_grid])
    if np.all(np.isnan(c_grid)):
        raise UndefinedEventError(
            f"a {k}-click event has zero probability over the whole t_c scan"
        )

    best = int(np.nanargmax(c_grid))  # ties resolve to the lowest t_c
    best_t, best_c = float(t_grid[best]), float(c_grid[best])
    plateau = int(np.sum(c_grid >= best_c - _PLATEAU_TOL)) > 1
    if plateau:
        return CouplingScan(best_t, best_c, curve, True)

    lo = float(t_grid[best - 1]) if best > 0 else best_t
    hi = float(t_grid[best + 1]) if best < grid - 1 else best_t
    t_star, c_star = _golden_section_max(objective, lo, hi, best_t, best_c)
    return CouplingScan(t_star, c_star, curve, False)


def _golden_section_max(objective, lo, hi, best_t, best_c, tol=1e-7, max_iter=120):
    """Golden-section refinement; returns the best point ever evaluated."""

    def value(t: float) -> float:
        c = objective(t)
        return -math.inf if math.isnan(c) else c

    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = value(c), value(d)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = value(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = value(d)
    for t, f in ((c, fc), (d, fd)):
        if f > best_c:
            best_t, best_c = t, f
    return float(best_t), float(best_c)
