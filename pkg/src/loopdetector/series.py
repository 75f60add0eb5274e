"""Truncated bivariate power-series arithmetic.

A series lives on a fixed degree grid: ``k`` indexes powers of the click-count
variable, ``n`` indexes powers of the pulse intensity.  Every operation
truncates its result back to the grid, so degrees never grow implicitly.
Coefficients are plain double-precision floats; the factors that arise in the
detector model are transcendental, so exact arithmetic would buy nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend


@dataclass(frozen=True)
class BivariateSeries:
    """Dense coefficient grid ``c[k][n]`` of ``sum c[k][n] z^k I^n``.

    ``coeffs`` has shape ``(k_max + 1, n_max + 1)`` and is frozen after
    construction; instances are safe to share between threads.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.coeffs, dtype=np.float64))
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValueError("coefficient grid must be 2-D and non-empty")
        if not np.all(np.isfinite(c)):
            raise ValueError("series coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def k_max(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def n_max(self) -> int:
        return self.coeffs.shape[1] - 1


def constant(value: float, k_max: int, n_max: int) -> BivariateSeries:
    """Series equal to ``value`` (all other coefficients zero)."""
    if k_max < 0 or n_max < 0:
        raise ValueError("degree bounds must be nonnegative")
    if not np.isfinite(value):
        raise ValueError("constant value must be finite")
    c = np.zeros((k_max + 1, n_max + 1))
    c[0, 0] = value
    return BivariateSeries(c)


def multiply(a: BivariateSeries, b: BivariateSeries) -> BivariateSeries:
    """Product of two series, truncated back to the shared degree grid.

    The factors must share ``(k_max, n_max)``.  Accumulation runs in a fixed
    index order, so repeated calls are reproducible bit for bit.
    """
    if a.coeffs.shape != b.coeffs.shape:
        raise ValueError(
            f"series shapes differ: {a.coeffs.shape} vs {b.coeffs.shape}"
        )
    return BivariateSeries(_backend.kernels.mul_truncated(a.coeffs, b.coeffs))


def exp_intensity(a: float, k_max: int, n_max: int) -> BivariateSeries:
    """Series of ``exp(a * I)``: coefficients ``a^n / n!`` along the k=0 row."""
    if k_max < 0 or n_max < 0:
        raise ValueError("degree bounds must be nonnegative")
    if not np.isfinite(a):
        raise ValueError("exponent scale must be finite")
    c = np.zeros((k_max + 1, n_max + 1))
    c[0, 0] = 1.0
    for n in range(1, n_max + 1):
        c[0, n] = c[0, n - 1] * a / n
    return BivariateSeries(c)


def coefficient(s: BivariateSeries, k: int, n: int) -> float:
    """Coefficient of ``z^k I^n``; indices must lie on the grid."""
    if not 0 <= k <= s.k_max:
        raise ValueError(f"k={k} outside [0, {s.k_max}]")
    if not 0 <= n <= s.n_max:
        raise ValueError(f"n={n} outside [0, {s.n_max}]")
    return float(s.coeffs[k, n])
