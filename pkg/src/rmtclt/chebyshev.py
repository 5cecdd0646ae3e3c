"""Exact coefficient algebra for monic Chebyshev polynomials of the first kind.

The monic family is fixed by ``T_m(2 cos θ) = 2 cos(mθ)`` for ``m >= 1`` and
the convention ``T_0 = 1``.  With that convention the three-term recurrence

    x T_m(x) = T_{m+1}(x) + (1 + [m == 1]) T_{m-1}(x)

holds for every ``m >= 0`` (``T_{-1} = 0``).  Note ``T_0 = 1`` and not 2: the
recurrence at ``m = 1`` reads ``x^2 = T_2 + 2 T_0`` and ``T_2 = x^2 - 2``.

Re-scaled polynomials are ``T_m(x, s) = s^m T_m(x / s)``.

Both coefficient matrices are kept as Python ``int`` so products are exact
for any degree.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np


class TableTooSmallError(ValueError):
    """A polynomial degree exceeds the size of the coefficient table."""


@dataclass(frozen=True)
class ChebyshevTable:
    """Lower-triangular integer matrices ``T`` and ``t = T^{-1}``.

    ``T[m][k]`` is the coefficient of ``x^k`` in ``T_m(x)``; ``t[k][m]`` is the
    coefficient of ``T_m`` in the expansion of ``x^k``, which also counts
    non-crossing half pair partitions of ``[k]`` with ``m`` open connectors.
    """

    max_degree: int
    T: tuple[tuple[int, ...], ...]
    t: tuple[tuple[int, ...], ...]

    def T_array(self) -> np.ndarray:
        return np.array(self.T, dtype=object)

    def t_array(self) -> np.ndarray:
        return np.array(self.t, dtype=object)

    def product(self) -> list[list[int]]:
        """Exact integer product ``T @ t``."""
        size = self.max_degree + 1
        return [
            [sum(self.T[i][k] * self.t[k][j] for k in range(size)) for j in range(size)]
            for i in range(size)
        ]


def _check_degree(max_degree: int) -> None:
    if max_degree < 0:
        raise ValueError(f"max_degree must be >= 0, got {max_degree}")


@lru_cache(maxsize=None)
def coeff_matrix(max_degree: int) -> tuple[tuple[int, ...], ...]:
    """Rows ``T[m][0..max_degree]`` of monomial coefficients of ``T_m``."""
    _check_degree(max_degree)
    size = max_degree + 1
    rows = [[0] * size for _ in range(size)]
    rows[0][0] = 1
    if size > 1:
        rows[1][1] = 1
    # T_{m+1,k} = T_{m,k-1} - (1 + [m == 1]) T_{m-1,k}
    for m in range(1, max_degree):
        factor = 2 if m == 1 else 1
        for k in range(m + 2):
            shifted = rows[m][k - 1] if k >= 1 else 0
            rows[m + 1][k] = shifted - factor * rows[m - 1][k]
    return tuple(tuple(r) for r in rows)


@lru_cache(maxsize=None)
def inverse_coeff_matrix(max_degree: int) -> tuple[tuple[int, ...], ...]:
    """Rows ``t[k][0..max_degree]`` built from the inverse recurrence.

    ``t[k+1][m] = t[k][m-1] + (1 + [m == 0]) t[k][m+1]`` with ``t[0][0] = 1``.
    """
    _check_degree(max_degree)
    size = max_degree + 1
    # one extra column so t[k][m+1] is available at the right edge
    rows = [[0] * (size + 1) for _ in range(size)]
    rows[0][0] = 1
    for k in range(max_degree):
        for m in range(k + 2):
            left = rows[k][m - 1] if m >= 1 else 0
            factor = 2 if m == 0 else 1
            rows[k + 1][m] = left + factor * rows[k][m + 1]
    return tuple(tuple(r[:size]) for r in rows)


def table(max_degree: int) -> ChebyshevTable:
    return ChebyshevTable(max_degree, coeff_matrix(max_degree), inverse_coeff_matrix(max_degree))


def eval_rescaled(m: int, x, s: float = 1.0):
    """Evaluate ``T_m(x, s)`` by forward recurrence.

    Works elementwise on arrays and stays valid outside ``[-2s, 2s]``.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    if m < 0:
        raise ValueError("m must be >= 0")
    out = eval_rescaled_all(m, np.asarray(x, dtype=float), s)[m]
    return float(out) if out.ndim == 0 else out


def eval_rescaled_all(m_max: int, x, s: float = 1.0) -> np.ndarray:
    """Stack ``[T_0(x,s), ..., T_{m_max}(x,s)]`` along a new leading axis."""
    x = np.asarray(x)
    out = np.empty((m_max + 1,) + x.shape, dtype=np.result_type(x, float))
    out[0] = 1.0
    if m_max >= 1:
        out[1] = x
    s2 = s * s
    for m in range(1, m_max):
        factor = 2.0 if m == 1 else 1.0
        out[m + 1] = x * out[m] - factor * s2 * out[m - 1]
    return out


def expand_in_chebyshev(
    coefficients: Sequence[float], s: float = 1.0, max_degree: int | None = None
) -> np.ndarray:
    """Coefficients ``c_m`` with ``f(x) = sum_m c_m T_m(x, s)``.

    ``coefficients[k]`` multiplies ``x^k``.  Uses ``x^k = sum_m t[k][m] s^{k-m} T_m(x, s)``.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    coefficients = list(coefficients)
    degree = len(coefficients) - 1
    if max_degree is None:
        max_degree = max(degree, 0)
    if degree > max_degree:
        raise TableTooSmallError(
            f"polynomial degree {degree} exceeds table max_degree {max_degree}"
        )
    t = inverse_coeff_matrix(max_degree)
    c = np.zeros(max(degree, 0) + 1)
    for k, a in enumerate(coefficients):
        if a == 0:
            continue
        for m in range(k + 1):
            if t[k][m]:
                c[m] += a * t[k][m] * s ** (k - m)
    return c


def eval_chebyshev_series(c: Sequence[float], x, s: float = 1.0):
    """Evaluate ``sum_m c_m T_m(x, s)``."""
    c = np.asarray(c, dtype=float)
    vals = eval_rescaled_all(len(c) - 1, x, s)
    return np.tensordot(c, vals, axes=(0, 0))


def rescaled_inverse(max_degree: int, s: float) -> np.ndarray:
    """Float matrix ``t_s[k][m] = t[k][m] s^{k-m}`` (monomials in rescaled basis)."""
    t = inverse_coeff_matrix(max_degree)
    out = np.zeros((max_degree + 1, max_degree + 1))
    for k in range(max_degree + 1):
        for m in range(k + 1):
            out[k, m] = t[k][m] * s ** (k - m)
    return out
