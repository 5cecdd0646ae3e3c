import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmtclt.chebyshev import inverse_coeff_matrix
from rmtclt.ensembles import EquivalenceRelation
from rmtclt.partitions import (
    AnnularPartition,
    DihedralElement,
    DomainError,
    HalfPairPartition,
    MultiIndex,
    SizeGuardError,
    bell,
    canonical_dihedral_partitions,
    classify,
    compatible_indices,
    consistent_indices,
    cyclic_rises,
    decompose,
    dihedral_partition,
    enumerate_dihedral,
    enumerate_nchpp,
    enumerate_partitions,
    eulerian,
    group_action,
    has_property_P,
    induced_partition,
    is_dihedral_permutation,
    nchpp_counts,
    open_interval,
    recombine,
    rho,
    rho_by_enumeration,
    verify_recurrences,
    z_inverse,
    z_map,
    z_tilde,
    z_tilde_inverse,
)


def P(circle_sizes, *blocks):
    return AnnularPartition.from_blocks(circle_sizes, blocks)


def test_bell_counts():
    assert [bell(n) for n in range(7)] == [1, 1, 2, 5, 15, 52, 203]
    for k1, k2 in [(1, 1), (2, 3), (3, 3)]:
        assert len(enumerate_partitions(k1, k2)) == bell(k1 + k2)


def test_size_guard():
    with pytest.raises(SizeGuardError):
        enumerate_partitions(6, 5)


def test_open_interval_wraps():
    assert open_interval(2, 5, 6) == [3, 4]
    assert open_interval(5, 2, 6) == [6, 1]
    assert open_interval(2, 1, 4) == [3, 4]


def test_classification_examples():
    pi = P((2, 2), [(1, 1), (2, 1)], [(1, 2), (2, 2)])
    c = classify(pi)
    assert c.is_pair_partition and c.connected and c.in_pp_class
    assert c.connector_count_per_circle == (2, 2)
    assert not c.dihedral  # two connectors per circle need the 4-block
    four = P((2, 2), [(1, 1), (1, 2), (2, 1), (2, 2)])
    assert classify(four).dihedral and classify(four).has_4block_of_connectors
    single = P((1, 1), [(1, 1), (2, 1)])
    assert classify(single).dihedral and classify(single).dnpp_order == 1
    assert classify(P((2, 1), [(1, 1)], [(1, 2), (2, 1)])).has_singleton


def test_crossing_example():
    # pairs (1,3) and (2,4) on one circle cross
    pi = P((4, 2), [(1, 1), (1, 3)], [(1, 2), (1, 4)], [(2, 1), (2, 2)])
    assert classify(pi).crossing


def test_dihedral_counts_all_connectors():
    for m, expected in [(1, 1), (2, 1), (3, 6), (4, 8), (5, 10)]:
        n = sum(1 for pi in enumerate_partitions(m, m)
                if classify(pi).connector_count_per_circle == (m, m) and classify(pi).dihedral)
        assert n == expected
        assert len(canonical_dihedral_partitions(m)) == expected


def test_dihedral_methods_agree():
    for pi in enumerate_partitions(3, 3):
        assert classify(pi).dihedral == classify(pi, dihedral_method="canonical").dihedral


@pytest.mark.parametrize("k1,k2", [(2, 2), (3, 3), (4, 2), (4, 4), (5, 3)])
def test_dihedral_count_factorises(k1, k2):
    t = inverse_coeff_matrix(max(k1, k2))
    by_m = enumerate_dihedral(k1, k2)
    for m in range(1, min(k1, k2) + 1):
        group = 1 if m <= 2 else 2 * m
        assert len(by_m.get(m, [])) == group * t[k1][m] * t[k2][m]


def test_decompose_recombine_roundtrip():
    for pis in enumerate_dihedral(4, 4).values():
        for pi in pis:
            assert recombine(*decompose(pi)) == pi


def test_dihedral_group():
    for m in range(1, 7):
        els = DihedralElement.elements(m)
        assert len(els) == (1 if m <= 2 else 2 * m)
        assert set(els) == {a.compose(b) for a in els for b in els}
        for g in els:
            assert g.compose(g.inverse()) == DihedralElement.identity(m)
            assert is_dihedral_permutation(g.permutation())
    assert not is_dihedral_permutation((1, 3, 2, 4))


@settings(max_examples=40, deadline=None)
@given(st.permutations(list(range(1, 6))))
def test_dihedral_permutation_recognition(perm):
    in_group = tuple(perm) in {g.permutation() for g in DihedralElement.elements(5)}
    assert is_dihedral_permutation(perm) == in_group


def test_nchpp_counts_match_inverse_table():
    counts = nchpp_counts(10)
    t = inverse_coeff_matrix(10)
    for k in range(11):
        assert counts[k][: k + 1] == list(t[k][: k + 1])


def test_nchpp_validation():
    assert not HalfPairPartition.build(4, pairs=[(1, 3)], open_connectors=[2, 4]).is_noncrossing()
    with pytest.raises(DomainError):
        HalfPairPartition.build(4, pairs=[(1, 3)], open_connectors=[2])
    ok = HalfPairPartition.build(4, pairs=[(1, 2)], open_connectors=[3, 4])
    assert ok.is_noncrossing()


def test_recurrences():
    res = verify_recurrences(9)
    assert res["ok"], res["violations"][:3]


def test_z_roundtrip_small():
    enums = enumerate_nchpp(6)
    for m in range(1, 7):
        for pi in enums[m]:
            rho_ = z_map(pi)
            branch = "-" if rho_.m == m - 1 else "+"
            assert z_inverse(rho_, branch) == pi
    for pi in enums[0]:
        rho_, sigma = z_tilde(pi)
        assert z_tilde_inverse(rho_, sigma) == pi


def test_induced_partition_and_compatibility():
    rel = EquivalenceRelation.trivial(3)
    Pm = MultiIndex.from_vertices((1, 2), (2, 1))
    pi = induced_partition(Pm, rel.labels)
    assert pi == P((2, 2), [(1, 1), (1, 2), (2, 1), (2, 2)])
    assert Pm.is_consistent() and Pm.is_off_diagonal()
    assert Pm in compatible_indices(pi, rel.labels)
    assert all(induced_partition(Q, rel.labels) == pi for Q in compatible_indices(pi, rel.labels))
    total = sum(len(compatible_indices(p, rel.labels)) for p in enumerate_partitions(2, 2))
    assert total == len(list(consistent_indices((2, 2), 3))) == 3**4


def test_group_action_preserves_compatibility():
    rel = EquivalenceRelation.trivial(4)
    for g in DihedralElement.elements(3):
        pi = dihedral_partition(g)
        for Q in compatible_indices(pi, rel.labels)[:20]:
            for h in DihedralElement.elements(3):
                moved = group_action(h, Q)
                assert moved.is_consistent()
    pi = dihedral_partition(DihedralElement.identity(3))
    Q = compatible_indices(pi, rel.labels)[0]
    assert has_property_P(pi, Q)


def test_eulerian_values():
    assert [eulerian(3, k) for k in range(1, 4)] == [1, 4, 1]
    assert [eulerian(4, k) for k in range(1, 5)] == [1, 11, 11, 1]


def test_eulerian_row_sums():
    import math
    for m in range(1, 11):
        assert sum(eulerian(m, k) for k in range(1, m + 1)) == math.factorial(m)


def test_rho_matches_enumeration():
    for m in range(2, 9):
        vals = [rho(m, k) for k in range(1, m + 1)]
        assert vals == [rho_by_enumeration(m, k) for k in range(1, m + 1)]
        assert sum(vals, Fraction(0)) == 1


def test_cyclic_rises():
    assert cyclic_rises((1, 2, 3)) == 2
    assert cyclic_rises((3, 2, 1)) == 1
