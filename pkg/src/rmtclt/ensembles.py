"""Correlated Hermitian ensembles and how to sample them.

An equivalence relation on index pairs is generated by a permutation ``phi``
of ``[n]``: the class of ``(p, q)`` is the orbit of ``(p, q)`` under
``(p, q) -> (phi(p), phi(q))`` and transposition.  Entries in one class are
equal (up to conjugation on transposed pairs), so a sample needs exactly one
draw per class.

Classes carry an integer label: the smallest flat position ``p * n + q``
(0-based) in the orbit.  Random draws are indexed by that label, so the value
of a class depends only on the seed and the class itself, never on the order
in which classes are visited.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from .partitions import (
    DihedralElement,
    DomainError,
    SizeGuardError,
    dihedral_partition,
)

RELATIONS = ("trivial", "flip", "period", "custom")
LAW_KINDS = (
    "gaussian",
    "rademacher",
    "uniform",
    "three-point",
    "complex-gaussian",
    "complex-discrete",
)

Seed = Union[int, Sequence[int], np.random.SeedSequence]


class ConfigError(ValueError):
    """Invalid ensemble or experiment configuration."""


# ---------------------------------------------------------------------------
# equivalence relations


def _period_permutation(n: int, T: int) -> tuple[int, ...]:
    perm = list(range(n))
    for start in range(0, (n // T) * T, T):
        for r in range(T):
            perm[start + r] = start + (r + 1) % T
    return tuple(perm)


def _order(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    order = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        order = order * length // math.gcd(order, length)
    return order


@dataclass(frozen=True)
class EquivalenceRelation:
    """Relation on ``[n]^2`` generated by a permutation ``phi`` (0-based here)."""

    n: int
    variant: str
    phi: tuple[int, ...]

    @classmethod
    def trivial(cls, n: int) -> "EquivalenceRelation":
        return cls(n, "trivial", tuple(range(n)))

    @classmethod
    def flip(cls, n: int) -> "EquivalenceRelation":
        return cls(n, "flip", tuple(n - 1 - p for p in range(n)))

    @classmethod
    def period(cls, n: int, T: int) -> "EquivalenceRelation":
        if T < 1:
            raise ConfigError("period T must be >= 1")
        return cls(n, "period", _period_permutation(n, T))

    @classmethod
    def custom(cls, perm: Sequence[int], one_based: bool = True) -> "EquivalenceRelation":
        phi = tuple(int(x) - 1 if one_based else int(x) for x in perm)
        if sorted(phi) != list(range(len(phi))):
            raise ConfigError("custom relation needs a permutation table")
        return cls(len(phi), "custom", phi)

    @classmethod
    def make(cls, variant: str, n: int, T: int = 1, perm=None) -> "EquivalenceRelation":
        if variant == "trivial":
            return cls.trivial(n)
        if variant == "flip":
            return cls.flip(n)
        if variant == "period":
            return cls.period(n, T)
        if variant == "custom":
            if perm is None:
                raise ConfigError("custom relation needs perm")
            rel = cls.custom(perm)
            if rel.n != n:
                raise ConfigError("perm length must equal n")
            return rel
        raise ConfigError(f"unknown relation {variant!r}; expected one of {RELATIONS}")

    @property
    def T(self) -> int:
        """Order of ``phi``."""
        return _order(self.phi)

    @cached_property
    def _tables(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        phi = np.asarray(self.phi, dtype=np.int64)
        idx = np.arange(n, dtype=np.int64)
        P, Q = np.meshgrid(idx, idx, indexing="ij")
        min_f = P * n + Q
        min_r = Q * n + P
        cp, cq = P, Q
        for _ in range(1, self.T):
            cp, cq = phi[cp], phi[cq]
            np.minimum(min_f, cp * n + cq, out=min_f)
            np.minimum(min_r, cq * n + cp, out=min_r)
        labels = np.minimum(min_f, min_r)
        fwd = min_f == labels
        rev = min_r == labels
        orient = np.where(fwd & rev, 0, np.where(fwd, 1, -1)).astype(np.int8)
        labels.setflags(write=False)
        orient.setflags(write=False)
        return labels, orient

    @property
    def labels(self) -> np.ndarray:
        """``labels[p, q]`` (0-based) is the canonical class label of ``(p+1, q+1)``."""
        return self._tables[0]

    @property
    def orientation(self) -> np.ndarray:
        """+1 where the entry equals its class draw, -1 where it is the conjugate,
        0 for classes that contain both ``(p, q)`` and ``(q, p)`` orbits (forced real)."""
        return self._tables[1]

    def canonical_class(self, p: int, q: int) -> int:
        """Class label of the 1-based pair ``(p, q)``."""
        return int(self.labels[p - 1, q - 1])

    def equivalent(self, P: tuple[int, int], Q: tuple[int, int]) -> bool:
        return self.canonical_class(*P) == self.canonical_class(*Q)

    def fixed_points(self, t: int) -> int:
        """``#{p : phi^t(p) = p}``."""
        cur = np.arange(self.n)
        phi = np.asarray(self.phi)
        for _ in range(t):
            cur = phi[cur]
        return int(np.sum(cur == np.arange(self.n)))

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=self.n * self.n)


# ---------------------------------------------------------------------------
# entry laws


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


@dataclass(frozen=True)
class EntryLaw:
    """Centred distribution of a matrix entry with ``E|a|^2 = variance``.

    ``p`` is the probability of a nonzero value for the three-point law.
    ``values``/``probs`` define the complex-discrete law (rescaled so that
    ``E|a|^2 = variance``); the default support is ``{1, i, -1, -i}``.
    """

    kind: str = "gaussian"
    variance: float = 1.0
    p: float = 0.5
    values: Optional[tuple[complex, ...]] = None
    probs: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise ConfigError(f"unknown law {self.kind!r}; expected one of {LAW_KINDS}")
        if self.variance <= 0:
            raise ConfigError("variance must be positive")
        if self.kind == "three-point" and not 0 < self.p <= 1:
            raise ConfigError("three-point law needs 0 < p <= 1")
        if self.kind == "complex-discrete":
            vals = self.values or (1, 1j, -1, -1j)
            probs = self.probs or tuple([1 / len(vals)] * len(vals))
            if len(vals) != len(probs) or abs(sum(probs) - 1) > 1e-12 or min(probs) < 0:
                raise ConfigError("complex-discrete needs matching values and probabilities")
            vals = np.asarray(vals, dtype=complex)
            probs_arr = np.asarray(probs, dtype=float)
            if abs(np.sum(probs_arr * vals)) > 1e-12:
                raise ConfigError("complex-discrete law must be centred")
            scale = math.sqrt(self.variance / float(np.sum(probs_arr * np.abs(vals) ** 2)))
            object.__setattr__(self, "values", tuple(complex(v) for v in vals * scale))
            object.__setattr__(self, "probs", tuple(float(x) for x in probs_arr))
        # declared second moment must match the closed form
        if not math.isclose(self.mixed_moment(1, 1).real, self.variance, rel_tol=1e-12):
            raise ConfigError("closed-form second moment disagrees with declared variance")

    @property
    def is_complex(self) -> bool:
        return self.kind.startswith("complex")

    @property
    def finite_support(self) -> bool:
        return self.kind in ("rademacher", "three-point", "complex-discrete")

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.variance
        if self.kind == "rademacher":
            r = math.sqrt(v)
            return np.array([-r, r]), np.array([0.5, 0.5])
        if self.kind == "three-point":
            c = math.sqrt(v / self.p)
            if self.p == 1:
                return np.array([-c, c]), np.array([0.5, 0.5])
            return np.array([-c, 0.0, c]), np.array([self.p / 2, 1 - self.p, self.p / 2])
        if self.kind == "complex-discrete":
            return np.array(self.values), np.array(self.probs)
        raise DomainError(f"{self.kind} law has no finite support")

    def mixed_moment(self, r: int, t: int = 0) -> complex:
        """``E(a^r conj(a)^t)``."""
        v = self.variance
        if self.kind == "complex-gaussian":
            return float(math.factorial(r) * v**r) if r == t else 0.0
        if self.kind == "complex-discrete":
            vals, probs = self.support()
            return complex(np.sum(probs * vals**r * np.conj(vals) ** t))
        k = r + t
        if k % 2:
            return 0.0
        if self.kind == "gaussian":
            return float(v ** (k // 2) * _double_factorial(k - 1))
        if self.kind == "rademacher":
            return float(v ** (k // 2))
        if self.kind == "uniform":
            b = math.sqrt(3 * v)
            return b**k / (k + 1)
        if self.kind == "three-point":
            if k == 0:
                return 1.0
            return self.p * (v / self.p) ** (k // 2)
        raise AssertionError(self.kind)

    def moment(self, r: int) -> complex:
        """``E(a^r)``."""
        return self.mixed_moment(r, 0)

    def abs_moment(self, r: int) -> float:
        """``E|a|^r`` for even ``r``."""
        if r % 2:
            raise ValueError("only even absolute moments are closed-form")
        return float(np.real(self.mixed_moment(r // 2, r // 2)))

    @property
    def Ea2(self) -> float:
        return self.variance

    @property
    def Ea4(self) -> float:
        return self.abs_moment(4)

    @property
    def C4(self) -> float:
        """Fourth cumulant ``E(a^4) - 3 E(a^2)^2`` (real laws)."""
        return self.Ea4 - 3 * self.Ea2**2

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        v = self.variance
        if self.kind == "gaussian":
            return rng.standard_normal(size) * math.sqrt(v)
        if self.kind == "rademacher":
            return np.where(rng.random(size) < 0.5, -1.0, 1.0) * math.sqrt(v)
        if self.kind == "uniform":
            b = math.sqrt(3 * v)
            return rng.uniform(-b, b, size)
        if self.kind == "three-point":
            u = rng.random(size)
            c = math.sqrt(v / self.p)
            return np.where(u < self.p / 2, -c, np.where(u < self.p, c, 0.0))
        if self.kind == "complex-gaussian":
            z = rng.standard_normal((2,) + np.atleast_1d(np.empty(size)).shape)
            return (z[0] + 1j * z[1]) * math.sqrt(v / 2)
        if self.kind == "complex-discrete":
            vals, probs = self.support()
            return vals[rng.choice(len(vals), size=size, p=probs)]
        raise AssertionError(self.kind)

    def describe(self) -> dict:
        out = {"kind": self.kind, "variance": self.variance}
        if self.kind == "three-point":
            out["p"] = self.p
        return out


# ---------------------------------------------------------------------------
# ensemble specification

_SPEC_KEYS = (
    "n",
    "relation",
    "T",
    "perm",
    "gamma",
    "field",
    "diag_law",
    "diag_var",
    "diag_p",
    "offdiag_law",
    "offdiag_var",
    "offdiag_p",
)


@dataclass(frozen=True)
class EnsembleSpec:
    """Size, relation, entry laws, field and sparsity of an ensemble.

    The diagonal law defaults to a Gaussian with ``E(d^2) = 2 s^2`` for real
    matrices (the GOE normalisation) and ``E(d^2) = s^2`` for complex ones.
    """

    n: int
    relation: str = "trivial"
    T: int = 1
    offdiag_law: EntryLaw = field(default_factory=EntryLaw)
    diag_law: Optional[EntryLaw] = None
    field: str = "real"
    gamma: float = 0.0
    perm: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.field not in ("real", "complex"):
            raise ConfigError("field must be 'real' or 'complex'")
        if not 0 <= self.gamma <= 1:
            raise ConfigError("gamma must lie in [0, 1]")
        if self.relation not in RELATIONS:
            raise ConfigError(f"unknown relation {self.relation!r}")
        if self.field == "real" and self.offdiag_law.is_complex:
            raise ConfigError("complex entry law needs field=complex")
        if self.diag_law is None:
            factor = 2.0 if self.field == "real" else 1.0
            object.__setattr__(
                self, "diag_law", EntryLaw("gaussian", factor * self.offdiag_law.variance)
            )
        if self.diag_law.is_complex:
            raise ConfigError("diagonal entries of a Hermitian matrix must be real")
        if self.relation == "period" and self.T < 1:
            raise ConfigError("T must be >= 1")

    @cached_property
    def equivalence(self) -> EquivalenceRelation:
        return EquivalenceRelation.make(self.relation, self.n, self.T, self.perm)

    @property
    def s(self) -> float:
        return math.sqrt(self.offdiag_law.variance)

    @property
    def period(self) -> int:
        return self.equivalence.T

    @property
    def scale(self) -> float:
        return self.n ** ((self.gamma - 1) / 2)

    @property
    def keep_probability(self) -> float:
        return self.n ** (-self.gamma)

    def with_n(self, n: int) -> "EnsembleSpec":
        return replace(self, n=n)

    def to_config(self) -> dict[str, str]:
        out = {
            "n": str(self.n),
            "relation": self.relation,
            "T": str(self.T),
            "gamma": repr(self.gamma),
            "field": self.field,
            "offdiag_law": self.offdiag_law.kind,
            "offdiag_var": repr(self.offdiag_law.variance),
            "diag_law": self.diag_law.kind,
            "diag_var": repr(self.diag_law.variance),
        }
        if self.offdiag_law.kind == "three-point":
            out["offdiag_p"] = repr(self.offdiag_law.p)
        if self.diag_law.kind == "three-point":
            out["diag_p"] = repr(self.diag_law.p)
        if self.perm is not None:
            out["perm"] = ",".join(str(x) for x in self.perm)
        return out

    @classmethod
    def from_config(cls, cfg: dict[str, str]) -> "EnsembleSpec":
        unknown = set(cfg) - set(_SPEC_KEYS)
        if unknown:
            raise ConfigError(f"unknown ensemble keys: {sorted(unknown)}")
        if "n" not in cfg:
            raise ConfigError("missing key: n")
        try:
            off = EntryLaw(
                cfg.get("offdiag_law", "gaussian"),
                float(cfg.get("offdiag_var", 1.0)),
                float(cfg.get("offdiag_p", 0.5)),
            )
            diag = None
            if "diag_law" in cfg or "diag_var" in cfg:
                factor = 1.0 if off.is_complex else 2.0
                diag = EntryLaw(
                    cfg.get("diag_law", "gaussian"),
                    float(cfg.get("diag_var", factor * off.variance)),
                    float(cfg.get("diag_p", 0.5)),
                )
            perm = None
            if cfg.get("perm"):
                perm = tuple(int(x) for x in cfg["perm"].split(","))
            field_ = cfg.get("field", "complex" if off.is_complex else "real")
            return cls(
                n=int(cfg["n"]),
                relation=cfg.get("relation", "trivial"),
                T=int(cfg.get("T", 1)),
                offdiag_law=off,
                diag_law=diag,
                field=field_,
                gamma=float(cfg.get("gamma", 0.0)),
                perm=perm,
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_text(cls, text: str) -> "EnsembleSpec":
        return cls.from_config(parse_key_values(text))

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.to_config().items())


def parse_key_values(text: str) -> dict[str, str]:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key] = value
    return out


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class MatrixSample:
    n: int
    X: np.ndarray
    seed: tuple[int, ...]


def seed_sequence(seed: Seed, *stream: int) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + stream)
    if isinstance(seed, (int, np.integer)):
        seed = (int(seed),)
    seed = tuple(int(x) for x in seed)
    return np.random.SeedSequence(seed[0], spawn_key=seed[1:] + stream)


def _rng(seed: Seed, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(seed, stream)))


def assemble(
    spec: EnsembleSpec,
    offdiag_draws: np.ndarray,
    diag_draws: np.ndarray,
    mask: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Build ``X`` from one value per class label.

    ``offdiag_draws`` and ``mask`` are indexed by class label (length ``n*n``),
    ``diag_draws`` by the diagonal position of the class representative.
    Leading batch axes are allowed on all three.
    """
    rel = spec.equivalence
    n = spec.n
    labels = rel.labels
    orient = rel.orientation
    vals = offdiag_draws[..., labels]
    if spec.field == "complex":
        vals = vals.astype(complex)
        vals = np.where(orient == -1, np.conj(vals), vals)
        vals = np.where(orient == 0, vals.real, vals)
    else:
        vals = np.real(vals)
    diag_idx = np.diag(labels) // n
    eye = np.eye(n, dtype=bool)
    vals = np.where(eye, 0, vals)
    vals[..., np.arange(n), np.arange(n)] = diag_draws[..., diag_idx]
    if mask is not None:
        vals = vals * mask[..., labels]
    return vals * spec.scale


def sample_matrix(spec: EnsembleSpec, seed: Seed) -> MatrixSample:
    """Draw one matrix; identical output for identical ``(spec, seed)``."""
    n = spec.n
    off = spec.offdiag_law.sample(_rng(seed, 0), n * n)
    diag = spec.diag_law.sample(_rng(seed, 1), n)
    mask = None
    if spec.gamma > 0:
        mask = (_rng(seed, 2).random(n * n) < spec.keep_probability).astype(float)
    X = assemble(spec, off, diag, mask)
    ss = seed_sequence(seed)
    return MatrixSample(n, X, (int(ss.entropy),) + tuple(ss.spawn_key))


# ---------------------------------------------------------------------------
# counting statistics of relations

MAX_ALPHA_N = 200
MAX_ALPHA_EXHAUSTIVE_N = 50


def alpha_stats(relation: EquivalenceRelation, method: str = "fast") -> dict[str, int]:
    """``alpha_1, alpha_2, alpha_3`` and ``alpha_hat_0`` of the relation."""
    n = relation.n
    L = relation.labels
    if method == "exhaustive":
        if n > MAX_ALPHA_EXHAUSTIVE_N:
            raise SizeGuardError(f"exhaustive alpha_stats limited to n <= {MAX_ALPHA_EXHAUSTIVE_N}")
        E = L[:, :, None, None] == L[None, None, :, :]
        a1 = int(E.reshape(n, -1).sum(axis=1).max())
        a2 = int(E.reshape(n * n, -1).sum(axis=1).max())
        a3 = int(E.sum(axis=3).max())
        diag_pq = E[:, np.arange(n), np.arange(n), :]  # (p, q, p') with (p,q)~(q,p')
        off = ~np.eye(n, dtype=bool)[:, None, :]
        a0 = int(np.sum(diag_pq & off))
        return {"alpha1": a1, "alpha2": a2, "alpha3": a3, "alpha0_hat": a0}
    if method != "fast":
        raise ValueError(f"unknown method {method!r}")
    if n > MAX_ALPHA_N:
        raise SizeGuardError(f"alpha_stats limited to n <= {MAX_ALPHA_N}")
    sizes = relation.class_sizes()
    size_at = sizes[L]
    a1 = int(size_at.sum(axis=1).max())
    a2 = int(sizes.max())
    a3 = max(int(np.bincount(row).max()) for row in L)
    a0 = 0
    for q in range(n):
        eq = L[:, q][:, None] == L[q, :][None, :]
        a0 += int(eq.sum() - np.trace(eq))
    return {"alpha1": a1, "alpha2": a2, "alpha3": a3, "alpha0_hat": a0}


def count_diag_pairs(relation: EquivalenceRelation, method: str = "fast") -> int:
    """``#{(p, q) : (p, p) ~ (q, q)}``."""
    if relation.n > MAX_ALPHA_N:
        raise SizeGuardError(f"count_diag_pairs limited to n <= {MAX_ALPHA_N}")
    d = np.diag(relation.labels)
    if method == "exhaustive":
        return int(np.sum(d[:, None] == d[None, :]))
    _, counts = np.unique(d, return_counts=True)
    return int(np.sum(counts.astype(np.int64) ** 2))


def count_offdiag_quadruples(relation: EquivalenceRelation, method: str = "fast") -> int:
    """``#{(p, q, p', q') : p != q, p' != q', (p, q) ~ (p', q')}``."""
    n = relation.n
    if n > 60:
        raise SizeGuardError("count_offdiag_quadruples limited to n <= 60")
    L = relation.labels
    off = ~np.eye(n, dtype=bool)
    if method == "exhaustive":
        E = L[:, :, None, None] == L[None, None, :, :]
        return int(np.sum(E & off[:, :, None, None] & off[None, None, :, :]))
    _, counts = np.unique(L[off], return_counts=True)
    return int(np.sum(counts.astype(np.int64) ** 2))


def _all_tuples(n: int, length: int) -> np.ndarray:
    return np.indices((n,) * length).reshape(length, -1).T


def count_S_OD(g: DihedralElement, relation: EquivalenceRelation, method: str = "transfer") -> int:
    """Off-diagonal consistent multi-indices compatible with ``pi_g``.

    ``method="transfer"`` enumerates the first circle and counts the second
    with a product of class-indicator matrices; ``method="brute"`` enumerates
    both circles and tests the class pattern pairwise.
    """
    m, n = g.m, relation.n
    L = relation.labels
    if method == "brute":
        if n ** (2 * m) > 2_000_000:
            raise SizeGuardError(f"brute-force S_OD needs n^(2m) <= 2e6 (n={n}, m={m})")
        return _brute_S(g, relation, off_diagonal=True)
    if method != "transfer":
        raise ValueError(f"unknown method {method!r}")
    if n**m > 2_000_000:
        raise SizeGuardError(f"S_OD enumeration needs n^m <= 2e6 (n={n}, m={m})")
    if m == 2:
        # single 4-block: all four pairs in one class
        return _four_block_count(relation)
    V = _all_tuples(n, m)
    lab = L[V, np.roll(V, -1, axis=1)]
    ok = V != np.roll(V, -1, axis=1)
    ok = ok.all(axis=1)
    if m > 1:
        srt = np.sort(lab, axis=1)
        ok &= (np.diff(srt, axis=1) != 0).all(axis=1)
    else:
        ok = np.ones(len(V), dtype=bool)  # m = 1 keeps diagonal pairs
    ginv = g.inverse()
    total = 0
    for row in lab[ok]:
        required = [row[ginv(j) - 1] for j in range(1, m + 1)]
        prod = (L == required[0]).astype(np.int64)
        for c in required[1:]:
            prod = prod @ (L == c).astype(np.int64)
        total += int(np.trace(prod))
    return total


def _four_block_count(relation: EquivalenceRelation) -> int:
    L = relation.labels
    n = relation.n
    total = 0
    for p in range(n):
        for q in range(n):
            if p == q or L[p, q] != L[q, p]:
                continue
            B = (L == L[p, q]).astype(np.int64)
            np.fill_diagonal(B, 0)
            total += int(np.trace(B @ B))
    return total


def _brute_S(g: DihedralElement, relation: EquivalenceRelation, off_diagonal: bool) -> int:
    m, n = g.m, relation.n
    L = relation.labels
    pi = dihedral_partition(g)
    block_of = pi.block_of()
    pts = [(1, ell) for ell in range(1, m + 1)] + [(2, ell) for ell in range(1, m + 1)]
    V = _all_tuples(n, 2 * m)
    first, second = V[:, :m], V[:, m:]
    p = np.concatenate([first, second], axis=1)
    q = np.concatenate([np.roll(first, -1, axis=1), np.roll(second, -1, axis=1)], axis=1)
    lab = L[p, q]
    ok = np.ones(len(V), dtype=bool)
    if off_diagonal and m >= 2:
        ok &= (p != q).all(axis=1)
    for a, b in itertools.combinations(range(2 * m), 2):
        same = block_of[pts[a]] is block_of[pts[b]]
        ok &= (lab[:, a] == lab[:, b]) == same
    return int(ok.sum())


def count_S(g: DihedralElement, relation: EquivalenceRelation) -> int:
    """``#S_n(pi_g)`` including multi-indices with diagonal pairs."""
    if relation.n ** (2 * g.m) > 2_000_000:
        raise SizeGuardError("count_S needs n^(2m) <= 2e6")
    return _brute_S(g, relation, off_diagonal=False)
