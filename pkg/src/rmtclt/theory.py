"""Limiting and finite-n variance predictions and the log-MGF evaluators.

Throughout, ``V(m)`` is the limiting variance of ``Tr T_m(X, s)`` with
``s^2 = E(a^2)``, and ``f`` is a polynomial given by its monomial
coefficients ``f(x) = sum_k a_k x^k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .chebyshev import expand_in_chebyshev, rescaled_inverse
from .ensembles import (
    EnsembleSpec,
    EquivalenceRelation,
    count_diag_pairs,
    count_offdiag_quadruples,
    count_S_OD,
)
from .partitions import DihedralElement, eulerian

EXPONENTS = ("m", "2m")


class QuadratureError(RuntimeError):
    """Two node counts disagreed beyond tolerance."""


@dataclass(frozen=True)
class VariancePrediction:
    m: int
    limit: float
    finite_n: Optional[float]
    source: str


# ---------------------------------------------------------------------------
# limiting variances


def wigner_variance(m: int, T: int, Ed2: float, Ea2: float, Ea4: float,
                    form: str = "moment") -> float:
    """Limiting ``Var(Tr T_m)`` for a real ensemble with period ``T``.

    ``form="cumulant"`` writes the ``m = 2`` case through the fourth cumulant
    ``C_4 = E(a^4) - 3 E(a^2)^2``; the value is the same.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if m == 1:
        return T * Ed2
    if m == 2:
        if Ea4 < Ea2**2 * (1 - 1e-12):
            raise ValueError("E(a^4) < E(a^2)^2 violates Cauchy-Schwarz")
        if form == "cumulant":
            return 4 * T * Ea2**2 + 2 * T * (Ea4 - 3 * Ea2**2)
        return 2 * T * (Ea4 - Ea2**2)
    return 2 * m * T * Ea2**m


def complex_wigner_variance(m: int, E_abs2: float, E_abs4: float,
                            E_a2k: Mapping[int, complex]) -> float:
    """Limiting ``Var(Tr T_m)`` for a complex Wigner matrix (``T = 1``).

    ``E_a2k[j]`` is ``E(a^(2j))``; entries ``j = 1..m-1`` are needed for
    ``m >= 3``.
    """
    if m < 2:
        raise ValueError("complex formula needs m >= 2")
    if m == 2:
        return 2 * (E_abs4 - E_abs2**2)
    missing = [j for j in range(1, m) if j not in E_a2k]
    if missing:
        raise KeyError(f"moment table lacks E(a^(2j)) for j in {missing}")
    total = m * E_abs2**m
    for k in range(1, m // 2 + 1):
        w = eulerian(m - 1, k) / math.factorial(m - 1)
        term = E_a2k[k] * np.conj(E_a2k[m - k])
        if 2 * k != m:
            term += E_a2k[m - k] * np.conj(E_a2k[k])
        total += m * w * term
    return float(np.real(total))


def limit_variance(spec: EnsembleSpec, m: int) -> tuple[float, str]:
    """Limiting variance for ``spec`` and the formula it came from."""
    T = spec.period
    off, diag = spec.offdiag_law, spec.diag_law
    if spec.gamma > 0:
        raise ValueError("no closed-form limit for sparse ensembles")
    if spec.field == "complex" and m >= 2:
        if T != 1:
            raise ValueError("complex formula covers T = 1 only")
        table = {j: off.moment(2 * j) for j in range(1, m)}
        return complex_wigner_variance(m, off.Ea2, off.Ea4, table), "complex-limit"
    return wigner_variance(m, T, diag.Ea2, off.Ea2, off.Ea4), "real-limit"


# ---------------------------------------------------------------------------
# finite-n variances


def finite_n_V(relation: EquivalenceRelation, m: int, Ed2: float, Ea2: float,
               Ea4: float, exponent: str = "m") -> float:
    """Finite-n variance ``V_n(m)`` from exact index counts (real entries).

    For ``m >= 3`` the counts are summed over the dihedral group and weighted
    by ``E(a^2)^m`` (``exponent="m"``) or ``E(a^2)^(2m)``
    (``exponent="2m"``).
    """
    n = relation.n
    if m < 1:
        raise ValueError("m must be >= 1")
    if m == 1:
        return Ed2 * count_diag_pairs(relation) / n
    if m == 2:
        return (Ea4 - Ea2**2) * count_offdiag_quadruples(relation) / n**2
    if exponent not in EXPONENTS:
        raise ValueError(f"exponent must be one of {EXPONENTS}")
    power = m if exponent == "m" else 2 * m
    total = sum(count_S_OD(g, relation) for g in DihedralElement.elements(m))
    return Ea2**power * total / n**m


def predict_variances(spec: EnsembleSpec, m_max: int, finite_n: bool = True,
                      exponent: str = "m") -> list[VariancePrediction]:
    out = []
    for m in range(1, m_max + 1):
        limit, source = limit_variance(spec, m)
        fn = None
        if finite_n and spec.field == "real" and spec.gamma == 0:
            try:
                fn = finite_n_V(spec.equivalence, m, spec.diag_law.Ea2, spec.offdiag_law.Ea2,
                                spec.offdiag_law.Ea4, exponent)
                source = f"{source}+finite-n-count"
            except Exception:  # size guards: finite-n value is optional
                fn = None
        out.append(VariancePrediction(m, limit, fn, source))
    return out


def covariance_prediction(k_max: int, V: Sequence[float], s: float) -> np.ndarray:
    """``Cov(Tr X^k1, Tr X^k2)`` for ``k1, k2 = 1..k_max``.

    ``V[m - 1]`` is the variance of ``Tr T_m(X, s)``; Chebyshev traces of
    different degree are taken as uncorrelated.
    """
    if len(V) < k_max:
        raise ValueError("need V(m) for m = 1..k_max")
    ts = rescaled_inverse(k_max, s)[1:, 1:]
    return ts @ np.diag(np.asarray(V[:k_max], dtype=float)) @ ts.T


# ---------------------------------------------------------------------------
# log-MGF


def _brackets(coeffs: Sequence[float], s: float) -> np.ndarray:
    """``(1/2pi) int f(sx) T_m(x) dx / sqrt(4 - x^2)`` for each ``m``.

    Equals ``c_m s^m`` where ``f(y) = sum_m c_m T_m(y, s)``.
    """
    c = expand_in_chebyshev(coeffs, s)
    return c * s ** np.arange(len(c))


def log_mgf_chebyshev_sum(coeffs: Sequence[float], s: float,
                          V: Union[Sequence[float], Callable[[int], float]]) -> float:
    """``(1/2) sum_{m>=1} s^(-2m) V(m) * bracket_m^2``; ``V[m - 1]`` or ``V(m)``."""
    b = _brackets(coeffs, s)
    total = 0.0
    for m in range(1, len(b)):
        if b[m] == 0:
            continue
        v = V(m) if callable(V) else V[m - 1]
        total += 0.5 * s ** (-2 * m) * v * b[m] ** 2
    return float(total)


def chebyshev_nodes(N: int) -> np.ndarray:
    """Nodes ``2 cos((2j - 1) pi / (2N))`` on ``[-2, 2]``."""
    j = np.arange(1, N + 1)
    return 2 * np.cos((2 * j - 1) * np.pi / (2 * N))


def weighted_integral(g: Callable[[np.ndarray], np.ndarray], N: int) -> float:
    """Gauss-Chebyshev rule for ``(1/2pi) int g(x) dx / sqrt(4 - x^2)``."""
    return float(np.sum(g(chebyshev_nodes(N))) / (2 * N))


def _difference_quotient(coeffs: Sequence[float], s: float, x: np.ndarray, y: np.ndarray):
    """``(f(sx) - f(sy)) / (x - y)`` expanded as a polynomial in ``x, y``."""
    out = np.zeros(np.broadcast(x, y).shape)
    for k, a in enumerate(coeffs):
        if k == 0 or a == 0:
            continue
        inner = sum(x**i * y ** (k - 1 - i) for i in range(k))
        out = out + a * s**k * inner
    return out


def _double_term(coeffs: Sequence[float], s: float, N: int) -> float:
    x = chebyshev_nodes(N)
    X, Y = np.meshgrid(x, x, indexing="ij")
    h = _difference_quotient(coeffs, s, X, Y)
    return float(np.sum(h**2 * (4 - X * Y)) / (4 * N * N))


def log_mgf_double_integral(coeffs: Sequence[float], s: float, T: int, Ea2: float,
                            C4: float, Ed2: float, nodes: Optional[int] = None,
                            tol: float = 1e-8) -> float:
    """Double-integral form of the log-MGF limit.

    The double integral uses a tensor Gauss-Chebyshev rule; the result is
    recomputed with twice the nodes and :class:`QuadratureError` is raised if
    the two disagree beyond ``tol``.
    """
    deg = max(len(coeffs) - 1, 0)
    N = nodes if nodes is not None else deg + 2
    first = _double_term(coeffs, s, N)
    second = _double_term(coeffs, s, 2 * N)
    if abs(first - second) > tol * max(1.0, abs(second)):
        raise QuadratureError(f"double integral not converged: {first} vs {second}")
    b = _brackets(coeffs, s)
    b1 = b[1] if len(b) > 1 else 0.0
    b2 = b[2] if len(b) > 2 else 0.0
    return float(T * (second + C4 / Ea2**2 * b2**2 + (Ed2 / (2 * Ea2) - 1) * b1**2))
