"""Chebyshev traces, Monte Carlo runs, k-statistics and exact small-n cumulants."""
from __future__ import annotations

import csv
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .chebyshev import eval_rescaled_all
from .ensembles import EnsembleSpec, assemble, sample_matrix
from .partitions import (
    AnnularPartition,
    DomainError,
    SizeGuardError,
    enumerate_partitions,
    set_partitions,
)

BACKENDS = ("eigen", "recurrence")
MAX_WORK = 3e11  # R * n^3 budget for one Monte Carlo run
HERMITIAN_TOL = 1e-12


class ResourceGuardError(RuntimeError):
    """A requested computation exceeds the configured work budget."""


# ---------------------------------------------------------------------------
# traces


def _check_hermitian(X: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DomainError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(X)))) if X.size else 1.0
    if np.max(np.abs(X - X.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
        raise DomainError("matrix is not Hermitian")


def chebyshev_traces(X: np.ndarray, s: float, m_max: int, backend: str = "eigen") -> np.ndarray:
    """``Tr T_m(X, s)`` for ``m = 0..m_max``.

    ``eigen`` evaluates the scalar recurrence on eigenvalues; ``recurrence``
    runs the matrix recurrence directly and takes traces.
    """
    X = np.asarray(X)
    _check_hermitian(X)
    if s <= 0:
        raise DomainError("s must be positive")
    if backend == "eigen":
        lam = np.linalg.eigvalsh(X)
        return eval_rescaled_all(m_max, lam, s).sum(axis=1)
    if backend != "recurrence":
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    n = X.shape[0]
    out = np.empty(m_max + 1)
    prev = np.eye(n, dtype=X.dtype)
    out[0] = n
    if m_max == 0:
        return out
    cur = X.copy()
    out[1] = np.real(np.trace(cur))
    s2 = s * s
    for m in range(1, m_max):
        nxt = X @ cur - (2.0 if m == 1 else 1.0) * s2 * prev
        prev, cur = cur, nxt
        out[m + 1] = np.real(np.trace(cur))
    return out


def power_traces(X: np.ndarray, k_max: int) -> np.ndarray:
    """``Tr X^k`` for ``k = 0..k_max`` from eigenvalues."""
    _check_hermitian(np.asarray(X))
    lam = np.linalg.eigvalsh(X)
    return np.array([np.sum(lam**k) for k in range(k_max + 1)])


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass
class TraceSamples:
    """Chebyshev traces ``values[r, m]`` of ``R`` replicates."""

    spec: EnsembleSpec
    s: float
    master_seed: int
    backend: str
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def replicates(self) -> int:
        return self.values.shape[0]

    @property
    def m_max(self) -> int:
        return self.values.shape[1] - 1

    def column(self, m: int) -> np.ndarray:
        return self.values[:, m]

    def centered(self) -> np.ndarray:
        return centered_statistics(self.values)

    def to_csv(self, path) -> Path:
        """Write ``replicate,m,value`` rows and a JSON sidecar next to them."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replicate", "m", "value"])
            for r in range(self.replicates):
                for m in range(self.m_max + 1):
                    w.writerow([r, m, repr(float(self.values[r, m]))])
        sidecar = {
            "spec": self.spec.to_config(),
            "s": self.s,
            "master_seed": self.master_seed,
            "backend": self.backend,
            "replicates": self.replicates,
            "m_max": self.m_max,
            **self.meta,
        }
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def from_csv(cls, path) -> "TraceSamples":
        path = Path(path)
        side = json.loads(path.with_suffix(".json").read_text())
        values = np.empty((side["replicates"], side["m_max"] + 1))
        with path.open() as fh:
            for row in csv.DictReader(fh):
                values[int(row["replicate"]), int(row["m"])] = float(row["value"])
        meta = {k: v for k, v in side.items()
                if k not in ("spec", "s", "master_seed", "backend", "replicates", "m_max")}
        return cls(EnsembleSpec.from_config(side["spec"]), side["s"], side["master_seed"],
                   side["backend"], values, meta)


def replicate_traces(spec: EnsembleSpec, master_seed: int, r: int, m_max: int, s: float,
                     backend: str = "eigen") -> np.ndarray:
    X = sample_matrix(spec, (master_seed, r)).X
    return chebyshev_traces(X, s, m_max, backend)


def monte_carlo_run(
    spec: EnsembleSpec,
    m_max: int,
    replicates: int,
    master_seed: int,
    s: Optional[float] = None,
    backend: str = "eigen",
    workers: int = 1,
) -> TraceSamples:
    """Sample ``replicates`` matrices and record ``Tr T_m(X, s)``.

    Replicate ``r`` is seeded from ``(master_seed, r)`` alone, and results are
    stored by index, so the output does not depend on ``workers``.
    """
    if replicates < 1 or m_max < 0:
        raise ValueError("need replicates >= 1 and m_max >= 0")
    if replicates * float(spec.n) ** 3 > MAX_WORK:
        raise ResourceGuardError(
            f"R * n^3 = {replicates * float(spec.n) ** 3:.3g} exceeds budget {MAX_WORK:.3g}"
        )
    s = spec.s if s is None else s
    values = np.empty((replicates, m_max + 1))

    def work(r: int) -> None:
        values[r] = replicate_traces(spec, master_seed, r, m_max, s, backend)

    if workers <= 1:
        for r in range(replicates):
            work(r)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(replicates)))
    return TraceSamples(spec, s, master_seed, backend, values)


def centered_statistics(values: np.ndarray) -> np.ndarray:
    """Subtract the sample mean of each column."""
    values = np.asarray(values, dtype=float)
    return values - values.mean(axis=0)


# ---------------------------------------------------------------------------
# k-statistics


@dataclass(frozen=True)
class CumulantEstimate:
    order: int
    args: tuple
    value: float
    standard_error: float
    replicate_count: int


def _kstats_from_sums(S1, S2, S3, S4, N):
    mean = S1 / N
    m2 = S2 / N - mean**2
    m3 = S3 / N - 3 * mean * S2 / N + 2 * mean**3
    m4 = S4 / N - 4 * mean * S3 / N + 6 * mean**2 * S2 / N - 3 * mean**4
    k2 = N * m2 / (N - 1)
    k3 = N**2 * m3 / ((N - 1) * (N - 2))
    k4 = N**2 * ((N + 1) * m4 - 3 * (N - 1) * m2**2) / ((N - 1) * (N - 2) * (N - 3))
    return mean, k2, k3, k4


def _full_and_loo(x: np.ndarray):
    x = np.asarray(x, dtype=float)
    N = x.size
    if N < 5:
        raise ValueError("k-statistics with jackknife errors need at least 5 samples")
    shift = x.mean()
    y = x - shift
    pw = [y**r for r in range(1, 5)]
    sums = [p.sum() for p in pw]
    full = _kstats_from_sums(*sums, N)
    loo = _kstats_from_sums(*(S - p for S, p in zip(sums, pw)), N - 1)
    full = (full[0] + shift,) + full[1:]
    loo = (loo[0] + shift,) + loo[1:]
    return full, loo


def _jackknife(loo: np.ndarray) -> float:
    N = loo.size
    return float(math.sqrt((N - 1) / N * np.sum((loo - loo.mean()) ** 2)))


def kstat(x, order: int) -> float:
    """Unbiased k-statistic of order 1..4."""
    if order not in (1, 2, 3, 4):
        raise ValueError("order must be 1..4")
    full, _ = _full_and_loo(x)
    return float(full[order - 1])


def kstat_estimate(x, order: int) -> CumulantEstimate:
    """k-statistic with a delete-one jackknife standard error."""
    if order not in (1, 2, 3, 4):
        raise ValueError("order must be 1..4")
    full, loo = _full_and_loo(x)
    return CumulantEstimate(order, (), float(full[order - 1]), _jackknife(loo[order - 1]), len(x))


def standardized_estimate(x, order: int) -> CumulantEstimate:
    """``k_order / k_2^(order/2)``: skewness (3) or excess kurtosis (4)."""
    if order not in (3, 4):
        raise ValueError("order must be 3 or 4")
    full, loo = _full_and_loo(x)
    value = full[order - 1] / full[1] ** (order / 2)
    loo_v = loo[order - 1] / loo[1] ** (order / 2)
    return CumulantEstimate(order, ("standardized",), float(value), _jackknife(loo_v), len(x))


def cross_covariance(x, y) -> CumulantEstimate:
    """Unbiased ``k_{1,1}`` with a jackknife standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    N = x.size
    if y.size != N or N < 3:
        raise ValueError("need paired samples of length >= 3")
    a, b = x - x.mean(), y - y.mean()
    Sa, Sb, Sab = a.sum(), b.sum(), (a * b).sum()
    value = (Sab - Sa * Sb / N) / (N - 1)
    la, lb, lab = Sa - a, Sb - b, Sab - a * b
    loo = (lab - la * lb / (N - 1)) / (N - 2)
    return CumulantEstimate(2, ("cross",), float(value), _jackknife(loo), N)


def k_statistics(data, max_order: int = 4) -> dict:
    """k-statistics of each column of ``data`` and cross-covariances of each pair.

    Keys are ``(order, (j,))`` for single columns and ``(2, (i, j))`` for pairs.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    out = {}
    for j in range(data.shape[1]):
        for order in range(1, max_order + 1):
            out[(order, (j,))] = kstat_estimate(data[:, j], order)
    for i, j in itertools.combinations(range(data.shape[1]), 2):
        out[(2, (i, j))] = cross_covariance(data[:, i], data[:, j])
    return out


# ---------------------------------------------------------------------------
# exact cumulants by enumeration (tiny n)

MAX_EXACT_ASSIGNMENTS = 5_000_000
MAX_EXACT_N = 4


def _moebius_cumulant(joint_moment) -> float:
    """Joint cumulant from ``joint_moment(frozenset) -> E prod``."""
    j = joint_moment.size
    total = 0.0
    for blocks in set_partitions(list(range(j))):
        b = len(blocks)
        term = (-1) ** (b - 1) * math.factorial(b - 1)
        for block in blocks:
            term *= joint_moment[frozenset(block)]
        total += term
    return total


class _Moments(dict):
    size: int


def _class_tables(spec: EnsembleSpec):
    rel = spec.equivalence
    labels = rel.labels
    uniq = np.unique(labels)
    index = {int(c): i for i, c in enumerate(uniq)}
    class_idx = np.vectorize(index.get)(labels)
    diag_labels = set(int(x) for x in np.diag(labels))
    is_diag = np.array([int(c) in diag_labels for c in uniq])
    return uniq, class_idx, is_diag


def _class_support(spec: EnsembleSpec, diag: bool):
    law = spec.diag_law if diag else spec.offdiag_law
    vals, probs = law.support()
    if spec.gamma > 0:
        q = spec.keep_probability
        vals = np.concatenate([vals, [0.0]])
        probs = np.concatenate([probs * q, [1 - q]])
    return vals, probs


def exact_cumulants_small_n(spec: EnsembleSpec, powers: Sequence[int]) -> float:
    """Joint cumulant of ``Tr X^{k_1}, ..., Tr X^{k_j}`` by enumerating every
    assignment of values to classes (finite-support laws only)."""
    if spec.n > MAX_EXACT_N:
        raise SizeGuardError(f"exact enumeration limited to n <= {MAX_EXACT_N}")
    uniq, class_idx, is_diag = _class_tables(spec)
    supports = [_class_support(spec, bool(d)) for d in is_diag]
    total = math.prod(len(v) for v, _ in supports)
    if total > MAX_EXACT_ASSIGNMENTS:
        raise SizeGuardError(f"{total} class assignments exceed {MAX_EXACT_ASSIGNMENTS}")
    n = spec.n
    j = len(powers)
    kmax = max(powers)
    subsets = [frozenset(c) for r in range(1, j + 1) for c in itertools.combinations(range(j), r)]
    acc = {S: 0.0 for S in subsets}
    grids = np.indices([len(v) for v, _ in supports]).reshape(len(supports), -1).T
    rel = spec.equivalence
    complex_field = spec.field == "complex"
    for start in range(0, len(grids), 100_000):
        g = grids[start:start + 100_000]
        vals = np.stack([supports[c][0][g[:, c]] for c in range(len(supports))], axis=1)
        prob = np.prod([supports[c][1][g[:, c]] for c in range(len(supports))], axis=0)
        V = vals[:, class_idx]  # (B, n, n)
        if complex_field:
            V = V.astype(complex)
            V = np.where(rel.orientation == -1, np.conj(V), V)
            V = np.where(rel.orientation == 0, V.real, V)
        else:
            V = np.real(V)
        X = V * spec.scale
        traces = {}
        P = np.broadcast_to(np.eye(n), X.shape).astype(X.dtype)
        for k in range(1, kmax + 1):
            P = P @ X
            traces[k] = np.real(np.trace(P, axis1=1, axis2=2))
        for S in subsets:
            prod = np.ones(len(g))
            for i in S:
                prod = prod * traces[powers[i]]
            acc[S] += float(np.sum(prob * prod))
    moments = _Moments(acc)
    moments.size = j
    return _moebius_cumulant(moments)


def cumulant_by_partition_sum(spec: EnsembleSpec, powers: Sequence[int],
                              return_terms: bool = False):
    """Joint cumulant of traces as a sum over connected annular partitions.

    Every consistent multi-index is grouped by the partition it induces, the
    diagonal flag of each block and (complex field) the orientation of each
    point; each group contributes its size times the classical cumulant of the
    circle products, computed from the entry-law moments.
    """
    n = spec.n
    k = sum(powers)
    if k > 8 or n > 6 or n**k > 5_000_000:
        raise SizeGuardError("partition sum limited to k <= 8, n <= 6, n^k <= 5e6")
    if len(powers) < 1 or min(powers) < 1:
        raise ValueError("powers must be positive")
    rel = spec.equivalence
    L = rel.labels
    complex_field = spec.field == "complex"
    if complex_field:
        off = ~np.eye(n, dtype=bool)
        if np.any(rel.orientation[off] == 0) and spec.offdiag_law.is_complex:
            raise DomainError("self-conjugate classes with a complex law are not supported")
    starts = np.cumsum([0] + list(powers))
    V = np.indices((n,) * k).reshape(k, -1).T
    nxt = np.empty(k, dtype=int)
    circle_of = np.empty(k, dtype=int)
    points = []
    for i, (a, b) in enumerate(zip(starts[:-1], starts[1:])):
        for pos in range(a, b):
            nxt[pos] = pos + 1 if pos + 1 < b else a
            circle_of[pos] = i
            points.append((i + 1, pos - a + 1))
    p, q = V, V[:, nxt]
    lab = L[p, q]
    diag = (p == q).astype(np.int64)
    orient = rel.orientation[p, q].astype(np.int64) if complex_field else np.ones_like(diag)
    eq = lab[:, :, None] == lab[:, None, :]
    first = np.argmax(eq, axis=2)
    # class diagonality is per class, so the first point's flag stands for the block
    key = np.concatenate([first, diag, orient], axis=1)
    keys, counts = np.unique(key, axis=0, return_counts=True)

    j = len(powers)
    subsets = [frozenset(c) for r in range(1, j + 1) for c in itertools.combinations(range(j), r)]
    q_keep = spec.keep_probability
    terms: dict[AnnularPartition, float] = {}
    for row, count in zip(keys, counts):
        f, dg, orr = row[:k], row[k:2 * k], row[2 * k:]
        blocks: dict[int, list[int]] = {}
        for pos in range(k):
            blocks.setdefault(int(f[pos]), []).append(pos)
        pi = AnnularPartition(tuple(powers), frozenset(
            frozenset(points[pos] for pos in b) for b in blocks.values()))
        moments = _Moments()
        moments.size = j
        for S in subsets:
            val = 1.0 + 0j
            for rep, b in blocks.items():
                inside = [pos for pos in b if circle_of[pos] in S]
                if not inside:
                    continue
                law = spec.diag_law if dg[rep] else spec.offdiag_law
                r_ = sum(1 for pos in inside if orr[pos] >= 0)
                t_ = len(inside) - r_
                val *= law.mixed_moment(r_, t_) * (q_keep if spec.gamma > 0 else 1.0)
            moments[S] = val
        c = _moebius_cumulant(moments)
        terms[pi] = terms.get(pi, 0.0) + float(count) * c
    total = 0.0
    connected = set()
    for pi in enumerate_partitions(*powers):
        if j == 1 or _connected(pi, j):
            connected.add(pi)
            total += terms.get(pi, 0.0)
    leftover = sum(abs(v) for pi, v in terms.items() if pi not in connected)
    if leftover > 1e-9 * max(1.0, abs(total)):
        raise AssertionError("disconnected partitions carried a nonzero cumulant")
    total = float(np.real(total)) * spec.scale**k
    if return_terms:
        return total, {pi: float(np.real(v)) * spec.scale**k for pi, v in terms.items()}
    return total


def _connected(pi: AnnularPartition, j: int) -> bool:
    parent = list(range(j))

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    for block in pi.blocks:
        circles = sorted({c - 1 for c, _ in block})
        for c in circles[1:]:
            parent[find(c)] = find(circles[0])
    return len({find(c) for c in range(j)}) == 1
