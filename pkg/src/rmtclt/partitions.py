"""Annular partitions, non-crossing half pair partitions and related counting.

Points of a partition of two circles are ``(circle, position)`` tuples with
``circle`` in ``{1, 2}`` and positions starting at 1, the same labels used in
the combinatorial literature on annular diagrams.  Everything here is exact
and pure; the enumerations are exhaustive and guarded by size limits.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

Point = tuple[int, int]
IndexPair = tuple[int, int]

MAX_PARTITION_POINTS = 10
MAX_NCHPP_SIZE = 12
MAX_RECURRENCE_K = 11


class SizeGuardError(ValueError):
    """Requested enumeration is larger than the supported limit."""


class DomainError(ValueError):
    """Input lies outside the domain of an operation."""


# ---------------------------------------------------------------------------
# generic helpers


def set_partitions(items: Sequence) -> Iterator[list[list]]:
    """Yield every set partition of ``items`` exactly once (as lists of blocks)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def bell(n: int) -> int:
    row = [1]
    for _ in range(n):
        new = [row[-1]]
        for x in row:
            new.append(new[-1] + x)
        row = new
    return row[0]


def open_interval(a: int, b: int, k: int) -> list[int]:
    """Cyclic open interval ``]a, b[`` on the circle ``[k]`` (``a != b``)."""
    if a == b:
        raise ValueError("interval endpoints must differ")
    out = []
    x = a % k + 1
    while x != b:
        out.append(x)
        x = x % k + 1
    return out


# ---------------------------------------------------------------------------
# dihedral group


@dataclass(frozen=True, order=True)
class DihedralElement:
    """Element of ``D_{2m}`` acting on ``[m]``.

    Rotations send ``l -> l + offset`` and reflections send ``l -> offset - l``
    (both modulo ``m`` on 1-based labels shifted to 0-based).  For ``m`` in
    ``{1, 2}`` only the identity exists.
    """

    m: int
    kind: str = "rotation"
    offset: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be positive")
        if self.kind not in ("rotation", "reflection"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if not 0 <= self.offset < self.m:
            raise ValueError("offset must lie in [0, m)")
        if self.m <= 2 and (self.kind != "rotation" or self.offset != 0):
            raise ValueError("for m <= 2 the group has only the identity")

    @classmethod
    def identity(cls, m: int) -> "DihedralElement":
        return cls(m)

    @classmethod
    def elements(cls, m: int) -> list["DihedralElement"]:
        if m <= 2:
            return [cls(m)]
        return [cls(m, "rotation", r) for r in range(m)] + [
            cls(m, "reflection", r) for r in range(m)
        ]

    @property
    def is_reflection(self) -> bool:
        return self.kind == "reflection"

    def __call__(self, ell: int) -> int:
        x = ell - 1
        if self.kind == "rotation":
            return (x + self.offset) % self.m + 1
        return (self.offset - x) % self.m + 1

    def permutation(self) -> tuple[int, ...]:
        return tuple(self(ell) for ell in range(1, self.m + 1))

    @classmethod
    def from_permutation(cls, perm: Sequence[int]) -> "DihedralElement":
        m = len(perm)
        for g in cls.elements(m):
            if g.permutation() == tuple(perm):
                return g
        raise DomainError(f"{tuple(perm)} is not a dihedral permutation")

    def compose(self, other: "DihedralElement") -> "DihedralElement":
        """``self * other``, i.e. apply ``other`` first."""
        if other.m != self.m:
            raise ValueError("elements of different groups")
        return DihedralElement.from_permutation([self(other(ell)) for ell in range(1, self.m + 1)])

    def inverse(self) -> "DihedralElement":
        inv = [0] * self.m
        for ell in range(1, self.m + 1):
            inv[self(ell) - 1] = ell
        return DihedralElement.from_permutation(inv)


def is_dihedral_permutation(perm: Sequence[int]) -> bool:
    """True if ``perm`` (values in ``[m]``) maps cyclic neighbours to cyclic neighbours."""
    m = len(perm)
    if m <= 3:
        return True
    for ell in range(m):
        d = (perm[(ell + 1) % m] - perm[ell]) % m
        if d not in (1, m - 1):
            return False
    return True


# ---------------------------------------------------------------------------
# annular partitions


@dataclass(frozen=True)
class AnnularPartition:
    """Set partition of the points of ``len(circle_sizes)`` labelled circles."""

    circle_sizes: tuple[int, ...]
    blocks: frozenset[frozenset[Point]]

    @classmethod
    def from_blocks(cls, circle_sizes: Sequence[int], blocks: Iterable[Iterable[Point]]):
        sizes = tuple(circle_sizes)
        fb = frozenset(frozenset(tuple(p) for p in b) for b in blocks)
        points = [p for b in fb for p in b]
        expected = {(i + 1, ell) for i, k in enumerate(sizes) for ell in range(1, k + 1)}
        if len(points) != len(set(points)) or set(points) != expected or any(not b for b in fb):
            raise DomainError("blocks do not partition the circles")
        return cls(sizes, fb)

    def points(self) -> list[Point]:
        return [(i + 1, ell) for i, k in enumerate(self.circle_sizes) for ell in range(1, k + 1)]

    def block_of(self) -> dict[Point, frozenset[Point]]:
        return {p: b for b in self.blocks for p in b}

    def connectors(self) -> set[Point]:
        return {p for b in self.blocks for p in b if any(q[0] != p[0] for q in b)}

    def __repr__(self):
        bl = sorted(sorted(b) for b in self.blocks)
        return f"AnnularPartition({self.circle_sizes}, {bl})"


def enumerate_partitions(*circle_sizes: int) -> list[AnnularPartition]:
    """All set partitions of the disjoint union of circles of the given sizes."""
    if not circle_sizes or any(k < 1 for k in circle_sizes):
        raise ValueError("circle sizes must be positive")
    total = sum(circle_sizes)
    if total > MAX_PARTITION_POINTS:
        raise SizeGuardError(
            f"{total} points requested; enumeration limited to {MAX_PARTITION_POINTS} points"
        )
    pts = [(i + 1, ell) for i, k in enumerate(circle_sizes) for ell in range(1, k + 1)]
    return [
        AnnularPartition(tuple(circle_sizes), frozenset(frozenset(b) for b in part))
        for part in set_partitions(pts)
    ]


@dataclass(frozen=True)
class Classification:
    has_singleton: bool
    is_pair_partition: bool
    connected: bool
    connector_count_per_circle: tuple[int, ...]
    all_connectors_simple: bool
    has_4block_of_connectors: bool
    in_pp_class: bool
    crossing: bool
    dihedral: bool

    @property
    def dnpp_order(self) -> Optional[int]:
        """``m`` when the partition is dihedral with ``m`` connectors per circle."""
        return self.connector_count_per_circle[0] if self.dihedral else None


def _connected(pi: AnnularPartition) -> bool:
    j = len(pi.circle_sizes)
    parent = list(range(j + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for b in pi.blocks:
        circles = sorted({p[0] for p in b})
        for c in circles[1:]:
            parent[find(c)] = find(circles[0])
    return len({find(c) for c in range(1, j + 1)}) == 1


def _is_crossing(pi: AnnularPartition, block_of, connectors) -> bool:
    for b in pi.blocks:
        for (i1, l1), (i2, l2) in itertools.combinations(sorted(b), 2):
            if i1 != i2:
                continue
            k = pi.circle_sizes[i1 - 1]
            left = open_interval(l1, l2, k)
            right = open_interval(l2, l1, k)
            for a in left:
                pa = (i1, a)
                for c in right:
                    pc = (i1, c)
                    if block_of[pa] is block_of[pc]:
                        return True
                    if pa in connectors and pc in connectors:
                        return True
    return False


def _has_4block(pi: AnnularPartition) -> bool:
    for b in pi.blocks:
        if len(b) == 4 and sum(1 for p in b if p[0] == 1) == 2:
            return True
    return False


def _in_pp_class(pi, connected, connectors, is_pair, has_4block) -> bool:
    if not connected:
        return False
    if is_pair:
        return True
    if not has_4block or len(connectors) != 4:
        return False
    four = [b for b in pi.blocks if len(b) == 4]
    if len(four) != 1:
        return False
    return all(len(b) == 2 and len({p[0] for p in b}) == 1 for b in pi.blocks if b is not four[0])


def connector_permutation(pi: AnnularPartition) -> tuple[int, ...]:
    """Map ``j -> rank on circle 2 of the partner of the j-th connector on circle 1``.

    Only meaningful when every connector is simple and paired across circles.
    """
    conn = pi.connectors()
    c1 = sorted(ell for (i, ell) in conn if i == 1)
    c2 = sorted(ell for (i, ell) in conn if i == 2)
    rank2 = {ell: r + 1 for r, ell in enumerate(c2)}
    block_of = pi.block_of()
    perm = []
    for ell in c1:
        partners = [q for q in block_of[(1, ell)] if q[0] == 2]
        if len(partners) != 1:
            raise DomainError("connector is not simply paired across circles")
        perm.append(rank2[partners[0][1]])
    return tuple(perm)


def classify(pi: AnnularPartition, dihedral_method: str = "neighbours") -> Classification:
    """Evaluate the classification predicates of a partition of two circles."""
    if len(pi.circle_sizes) != 2:
        raise ValueError("classification is defined for two circles")
    block_of = pi.block_of()
    conn = pi.connectors()
    sizes = [len(b) for b in pi.blocks]
    has_singleton = 1 in sizes
    is_pair = all(s == 2 for s in sizes)
    connected = _connected(pi)
    counts = tuple(sum(1 for (i, _) in conn if i == c) for c in (1, 2))
    simple = all(sum(1 for q in block_of[p] if q[0] == p[0]) == 1 for p in conn)
    has4 = _has_4block(pi)
    pp = _in_pp_class(pi, connected, conn, is_pair, has4)
    crossing = _is_crossing(pi, block_of, conn)
    dihedral = pp and not crossing and _dihedral(pi, counts, has4, is_pair, dihedral_method)
    return Classification(
        has_singleton, is_pair, connected, counts, simple, has4, pp, crossing, dihedral
    )


def _dihedral(pi, counts, has4, is_pair, method) -> bool:
    m = counts[0]
    if counts[0] != counts[1]:
        return False
    if has4:
        return m == 2
    if not is_pair or m == 2:
        return False
    if method == "neighbours":
        return is_dihedral_permutation(connector_permutation(pi))
    if method == "canonical":
        return reduced_partition(pi) in canonical_dihedral_partitions(m)
    raise ValueError(f"unknown dihedral method {method!r}")


def reduced_partition(pi: AnnularPartition) -> AnnularPartition:
    """Drop non-connector points and relabel connectors by rank on each circle."""
    conn = pi.connectors()
    ranks = {}
    sizes = []
    for c in (1, 2):
        ells = sorted(ell for (i, ell) in conn if i == c)
        sizes.append(len(ells))
        for r, ell in enumerate(ells):
            ranks[(c, ell)] = (c, r + 1)
    blocks = [frozenset(ranks[p] for p in b if p in conn) for b in pi.blocks]
    return AnnularPartition(tuple(sizes), frozenset(b for b in blocks if b))


def dihedral_partition(g: DihedralElement) -> AnnularPartition:
    """The all-connector partition ``pi_g`` with blocks ``{(1, l), (2, g(l))}``."""
    m = g.m
    if m == 2:
        return AnnularPartition((2, 2), frozenset([frozenset([(1, 1), (1, 2), (2, 1), (2, 2)])]))
    return AnnularPartition(
        (m, m), frozenset(frozenset([(1, ell), (2, g(ell))]) for ell in range(1, m + 1))
    )


def canonical_dihedral_partitions(m: int) -> set[AnnularPartition]:
    return {dihedral_partition(g) for g in DihedralElement.elements(m)}


# ---------------------------------------------------------------------------
# half pair partitions


@dataclass(frozen=True)
class HalfPairPartition:
    """Pairs and open connectors of ``[size]``; optional mark for the ``m = 0`` case."""

    size: int
    pairs: frozenset[tuple[int, int]]
    open_connectors: frozenset[int] = field(default_factory=frozenset)
    mark: Optional[int] = None

    @classmethod
    def build(cls, size, pairs=(), open_connectors=(), mark=None) -> "HalfPairPartition":
        hp = cls(
            size,
            frozenset(tuple(sorted(p)) for p in pairs),
            frozenset(open_connectors),
            mark,
        )
        hp.validate()
        return hp

    @property
    def m(self) -> int:
        return len(self.open_connectors)

    def partner(self) -> dict[int, int]:
        out = {}
        for a, b in self.pairs:
            out[a] = b
            out[b] = a
        return out

    def validate(self) -> None:
        pts = [p for pair in self.pairs for p in pair] + list(self.open_connectors)
        if sorted(pts) != list(range(1, self.size + 1)):
            raise DomainError("pairs and open connectors must cover [size] exactly once")
        if self.mark is not None:
            if self.open_connectors:
                raise DomainError("a mark is only allowed without open connectors")
            if not valid_mark(self.size, self.partner(), self.mark):
                raise DomainError(f"invalid mark {self.mark}")

    def is_noncrossing(self) -> bool:
        partner = self.partner()
        k = self.size
        for a, b in self.pairs:
            left = open_interval(a, b, k)
            right = open_interval(b, a, k)
            for x in left:
                for y in right:
                    if partner.get(x) == y:
                        return False
                    if x in self.open_connectors and y in self.open_connectors:
                        return False
        return True

    def __repr__(self):
        extra = f", mark={self.mark}" if self.mark is not None else ""
        return f"HPP(k={self.size}, pairs={sorted(self.pairs)}, open={sorted(self.open_connectors)}{extra})"


def valid_mark(k: int, partner: dict[int, int], mu: int) -> bool:
    if not 1 <= mu <= k:
        return False
    return mu == k or partner[mu + 1] <= mu


def _involutions(points: list[int]) -> Iterator[tuple[list[tuple[int, int]], list[int]]]:
    if not points:
        yield [], []
        return
    first, rest = points[0], points[1:]
    for pairs, singles in _involutions(rest):
        yield pairs, [first] + singles
    for i, other in enumerate(rest):
        for pairs, singles in _involutions(rest[:i] + rest[i + 1 :]):
            yield [(first, other)] + pairs, singles


def enumerate_nchpp(k: int) -> dict[int, list[HalfPairPartition]]:
    """Non-crossing half pair partitions of ``[k]`` keyed by open-connector count.

    ``m = 0`` holds marked non-crossing pair partitions.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if k > MAX_NCHPP_SIZE:
        raise SizeGuardError(f"k={k} exceeds the enumeration limit {MAX_NCHPP_SIZE}")
    out: dict[int, list[HalfPairPartition]] = {m: [] for m in range(k + 1)}
    for pairs, singles in _involutions(list(range(1, k + 1))):
        hp = HalfPairPartition(k, frozenset(pairs), frozenset(singles))
        if not hp.is_noncrossing():
            continue
        if singles:
            out[len(singles)].append(hp)
        else:
            partner = hp.partner()
            for mu in range(1, k + 1):
                if valid_mark(k, partner, mu):
                    out[0].append(HalfPairPartition(k, hp.pairs, frozenset(), mu))
    return out


def nchpp_counts(k_max: int) -> list[list[int]]:
    """``counts[k][m] = #NCHPP^m_[k]`` with ``counts[0] = [1, 0, ...]``."""
    rows = [[1] + [0] * k_max]
    for k in range(1, k_max + 1):
        enum = enumerate_nchpp(k)
        rows.append([len(enum.get(m, [])) for m in range(k_max + 1)])
    return rows


# ---------------------------------------------------------------------------
# the Z map and its inverses


def ell_max(pi: HalfPairPartition) -> int:
    if not pi.open_connectors:
        raise DomainError("no open connector")
    return max(pi.open_connectors)


def mu(pi: HalfPairPartition) -> int:
    """Marked point, or the largest ``l >= l_max`` with ``]l_max, l]`` closed under pairing."""
    if pi.mark is not None:
        return pi.mark
    lmax = ell_max(pi)
    partner = pi.partner()
    best = lmax
    for ell in range(lmax + 1, pi.size + 1):
        window = range(lmax + 1, ell + 1)
        if all(x in partner and lmax < partner[x] <= ell for x in window):
            best = ell
    return best


def _remove_point(pi: HalfPairPartition, point: int):
    def r(x):
        return x if x < point else x - 1

    partner = pi.partner()
    pairs = set()
    opens = {r(x) for x in pi.open_connectors if x != point}
    for a, b in pi.pairs:
        if point in (a, b):
            opens.add(r(partner[point]))
        else:
            pairs.add((r(a), r(b)))
    return pairs, opens


def z_map(pi: HalfPairPartition) -> HalfPairPartition:
    """Remove ``mu(pi)`` and relabel; mark ``mu - 1`` if no open connector remains."""
    if pi.size < 2:
        raise DomainError("z_map needs at least two points")
    point = mu(pi)
    pairs, opens = _remove_point(pi, point)
    mark = None
    if not opens:
        mark = point - 1
    return HalfPairPartition.build(pi.size - 1, pairs, opens, mark)


def z_tilde(pi: HalfPairPartition) -> tuple[HalfPairPartition, int]:
    """Double-cover lift on marked partitions: ``(z_map(pi), sigma)``."""
    if pi.mark is None:
        raise DomainError("z_tilde is defined on marked partitions")
    sigma = 1 if pi.partner()[pi.mark] < pi.mark else -1
    return z_map(pi), sigma


def _insert_point(pi: HalfPairPartition, at: int):
    """Shift every point ``>= at`` up by one; returns (pairs, opens) on ``[size+1]``."""

    def f(x):
        return x if x < at else x + 1

    pairs = {(f(a), f(b)) for a, b in pi.pairs}
    opens = {f(x) for x in pi.open_connectors}
    return pairs, opens, f


def z_inverse(rho: HalfPairPartition, branch: str) -> HalfPairPartition:
    """Inverse branches of ``z_map``.

    ``branch="-"`` inserts an open connector right of ``mu(rho)``;
    ``branch="+"`` inserts a point right of ``mu(rho)`` paired with ``l_max(rho)``.
    The result of ``"+"`` on a single-connector ``rho`` is marked at the new point.
    """
    m0 = mu(rho)
    new = m0 + 1
    if branch == "-":
        pairs, opens, _ = _insert_point(rho, new)
        opens.add(new)
        return HalfPairPartition.build(rho.size + 1, pairs, opens)
    if branch == "+":
        lmax = ell_max(rho)
        pairs, opens, f = _insert_point(rho, new)
        opens.discard(f(lmax))
        pairs.add((f(lmax), new))
        mark = new if not opens else None
        return HalfPairPartition.build(rho.size + 1, pairs, opens, mark)
    raise ValueError(f"unknown branch {branch!r}")


def z_tilde_inverse(rho: HalfPairPartition, sigma: int) -> HalfPairPartition:
    if rho.m != 1:
        raise DomainError("z_tilde_inverse needs exactly one open connector")
    if sigma == 1:
        return z_inverse(rho, "+")
    if sigma == -1:
        c = ell_max(rho)
        pairs, opens, f = _insert_point(rho, c)
        opens.discard(f(c))
        pairs.add((c, f(c)))
        return HalfPairPartition.build(rho.size + 1, pairs, opens, c)
    raise ValueError("sigma must be +1 or -1")


def verify_recurrences(k_max: int) -> dict:
    """Check the two NCHPP recurrences by count and through the bijections."""
    if k_max > MAX_RECURRENCE_K:
        raise SizeGuardError(f"k_max={k_max} exceeds limit {MAX_RECURRENCE_K}")
    enums = {k: enumerate_nchpp(k) for k in range(1, k_max + 1)}

    def count(k, m):
        if m < 0 or m > k:
            return 0
        return len(enums[k][m])

    checks = []
    violations = []
    for k in range(1, k_max):
        lhs, rhs = count(k + 1, 0), 2 * count(k, 1)
        rec = {"k": k, "m": 0, "lhs": lhs, "rhs": rhs, "ok": lhs == rhs}
        checks.append(rec)
        for m in range(1, k + 2):
            lhs = count(k + 1, m)
            rhs = count(k, m + 1) + count(k, m - 1)
            checks.append({"k": k, "m": m, "lhs": lhs, "rhs": rhs, "ok": lhs == rhs})
        # bijection checks
        target = {m: set(enums[k][m]) for m in range(k + 1)}
        for m in range(1, k + 2):
            images = [z_map(pi) for pi in enums[k + 1][m]]
            expected = target.get(m + 1, set()) | target.get(m - 1, set())
            if len(set(images)) != len(images) or set(images) != expected:
                violations.append({"k": k, "m": m, "map": "z"})
        lifts = [z_tilde(pi) for pi in enums[k + 1][0]]
        expected = {(rho, s) for rho in target.get(1, set()) for s in (1, -1)}
        if len(set(lifts)) != len(lifts) or set(lifts) != expected:
            violations.append({"k": k, "m": 0, "map": "z_tilde"})
    violations.extend(c for c in checks if not c["ok"])
    return {"k_max": k_max, "checks": checks, "violations": violations, "ok": not violations}


# ---------------------------------------------------------------------------
# decomposition of dihedral partitions


def decompose(pi: AnnularPartition) -> tuple[DihedralElement, HalfPairPartition, HalfPairPartition]:
    """Cut the links between connectors of a dihedral partition."""
    cl = classify(pi)
    if not cl.dihedral:
        raise DomainError("decompose needs a dihedral partition")
    m = cl.connector_count_per_circle[0]
    conn = pi.connectors()
    halves = []
    for c in (1, 2):
        k = pi.circle_sizes[c - 1]
        pairs = []
        for b in pi.blocks:
            if b & conn:
                continue
            pts = sorted(ell for (i, ell) in b if i == c)
            if pts:
                pairs.append(tuple(pts))
        opens = [ell for (i, ell) in conn if i == c]
        halves.append(HalfPairPartition.build(k, pairs, opens))
    if m == 2:
        g = DihedralElement.identity(2)
    else:
        g = DihedralElement.from_permutation(connector_permutation(pi))
    return g, halves[0], halves[1]


def recombine(g: DihedralElement, pi1: HalfPairPartition, pi2: HalfPairPartition) -> AnnularPartition:
    """Attach the open connectors of ``pi1`` and ``pi2`` according to ``pi_g``."""
    m = g.m
    if pi1.m != m or pi2.m != m:
        raise DomainError("open connector counts must equal the group order")
    blocks = [frozenset([(1, a), (1, b)]) for a, b in pi1.pairs]
    blocks += [frozenset([(2, a), (2, b)]) for a, b in pi2.pairs]
    c1 = sorted(pi1.open_connectors)
    c2 = sorted(pi2.open_connectors)
    if m == 2:
        blocks.append(frozenset([(1, c1[0]), (1, c1[1]), (2, c2[0]), (2, c2[1])]))
    else:
        for j in range(1, m + 1):
            blocks.append(frozenset([(1, c1[j - 1]), (2, c2[g(j) - 1])]))
    return AnnularPartition((pi1.size, pi2.size), frozenset(blocks))


def enumerate_dihedral(k1: int, k2: int) -> dict[int, list[AnnularPartition]]:
    """Dihedral partitions of ``[k1] ⊔ [k2]`` grouped by connectors per circle."""
    out: dict[int, list[AnnularPartition]] = {}
    for pi in enumerate_partitions(k1, k2):
        cl = classify(pi)
        if cl.dihedral:
            out.setdefault(cl.dnpp_order, []).append(pi)
    return out


# ---------------------------------------------------------------------------
# multi-indices


@dataclass(frozen=True)
class MultiIndex:
    """Index pairs ``P[i][l] = (p, q)`` on each circle, values in ``[n]``."""

    circles: tuple[tuple[IndexPair, ...], ...]

    @classmethod
    def from_vertices(cls, *vertex_cycles: Sequence[int]) -> "MultiIndex":
        """Build from cyclic vertex sequences ``p_1..p_k`` with ``P_l = (p_l, p_{l+1})``."""
        circles = []
        for vs in vertex_cycles:
            k = len(vs)
            circles.append(tuple((vs[ell], vs[(ell + 1) % k]) for ell in range(k)))
        return cls(tuple(circles))

    @property
    def circle_sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.circles)

    def is_consistent(self) -> bool:
        for c in self.circles:
            k = len(c)
            for ell in range(k):
                if c[ell][1] != c[(ell + 1) % k][0]:
                    return False
        return True

    def is_off_diagonal(self) -> bool:
        return all(p != q for c in self.circles for (p, q) in c)

    def pair(self, point: Point) -> IndexPair:
        i, ell = point
        return self.circles[i - 1][ell - 1]


def induced_partition(P: MultiIndex, labels: np.ndarray) -> AnnularPartition:
    """Partition of points by the equivalence class of their index pairs.

    ``labels[p-1, q-1]`` is the class label of the pair ``(p, q)``.
    """
    groups: dict[int, list[Point]] = {}
    for i, c in enumerate(P.circles):
        for ell, (p, q) in enumerate(c):
            groups.setdefault(int(labels[p - 1, q - 1]), []).append((i + 1, ell + 1))
    return AnnularPartition(P.circle_sizes, frozenset(frozenset(g) for g in groups.values()))


def consistent_indices(circle_sizes: Sequence[int], n: int) -> Iterator[MultiIndex]:
    """All consistent multi-indices: one free vertex per point."""
    ranges = [itertools.product(range(1, n + 1), repeat=k) for k in circle_sizes]
    for combo in itertools.product(*[list(r) for r in ranges]):
        yield MultiIndex.from_vertices(*combo)


def compatible_indices(pi: AnnularPartition, labels: np.ndarray) -> list[MultiIndex]:
    """``S_n(pi)``: consistent multi-indices whose class pattern is exactly ``pi``."""
    n = labels.shape[0]
    block_of = pi.block_of()
    out = []
    for P in consistent_indices(pi.circle_sizes, n):
        ok = True
        pts = pi.points()
        for a, b in itertools.combinations(pts, 2):
            same_class = labels[tuple(x - 1 for x in P.pair(a))] == labels[tuple(x - 1 for x in P.pair(b))]
            if same_class != (block_of[a] is block_of[b]):
                ok = False
                break
        if ok:
            out.append(P)
    return out


def has_property_P(pi: AnnularPartition, P: MultiIndex) -> bool:
    """Same-circle linked points carry reversed, off-diagonal index pairs."""
    for b in pi.blocks:
        for a, c in itertools.combinations(sorted(b), 2):
            if a[0] != c[0]:
                continue
            (p, q), (p2, q2) = P.pair(a), P.pair(c)
            if not (p2 == q and q2 == p and p != q):
                return False
    return True


def group_action(g: DihedralElement, P: MultiIndex) -> MultiIndex:
    """Act on the second circle: permute by ``g^{-1}``, reversing pairs for reflections."""
    if len(P.circles) != 2 or P.circle_sizes != (g.m, g.m):
        raise DomainError("multi-index must have two circles of size m")
    if not P.is_consistent():
        raise DomainError("multi-index is not consistent")
    ginv = g.inverse()
    second = []
    for ell in range(1, g.m + 1):
        p, q = P.circles[1][ginv(ell) - 1]
        second.append((q, p) if g.is_reflection else (p, q))
    return MultiIndex((P.circles[0], tuple(second)))


# ---------------------------------------------------------------------------
# Eulerian numbers and cyclic rises


def eulerian(m: int, k: int) -> int:
    """``A_{m,k} = sum_{j<=k} (-1)^j (k-j)^m binom(m+1, j)``."""
    if m < 0 or k < 0:
        raise ValueError("m and k must be nonnegative")
    return sum((-1) ** j * (k - j) ** m * math.comb(m + 1, j) for j in range(k + 1))


def rho(m: int, k: int) -> Fraction:
    """Fraction of cyclic orderings of ``m`` reals with exactly ``k`` cyclic rises."""
    if not 1 <= k <= m:
        raise ValueError("need 1 <= k <= m")
    return Fraction(m * eulerian(m - 1, k), math.factorial(m))


def cyclic_rises(seq: Sequence) -> int:
    m = len(seq)
    return sum(1 for ell in range(m) if seq[(ell + 1) % m] > seq[ell])


def rho_by_enumeration(m: int, k: int) -> Fraction:
    """Same quantity counted over all permutations of ``[m]`` (``m <= 8``)."""
    if m > 8:
        raise SizeGuardError("exhaustive cyclic-rise count limited to m <= 8")
    hits = sum(1 for perm in itertools.permutations(range(m)) if cyclic_rises(perm) == k)
    return Fraction(hits, math.factorial(m))
