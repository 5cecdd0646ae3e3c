import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rmtclt.ensembles import EnsembleSpec, EntryLaw, sample_matrix
from rmtclt.partitions import DomainError, SizeGuardError
from rmtclt.statistics import (
    ResourceGuardError,
    TraceSamples,
    chebyshev_traces,
    cross_covariance,
    cumulant_by_partition_sum,
    exact_cumulants_small_n,
    k_statistics,
    kstat,
    kstat_estimate,
    monte_carlo_run,
    power_traces,
    standardized_estimate,
)

RADEMACHER = dict(offdiag_law=EntryLaw("rademacher"), diag_law=EntryLaw("rademacher"))


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.integers(6, 40), elements=st.floats(-100, 100)))
def test_kstat_matches_scipy(x):
    for order in (1, 2, 3, 4):
        assert kstat(x, order) == pytest.approx(scipy.stats.kstat(x, order), rel=1e-6, abs=1e-6)


def test_jackknife_matches_explicit_loop():
    x = np.random.default_rng(2).exponential(size=60)
    for order in (2, 3, 4):
        loo = np.array([scipy.stats.kstat(np.delete(x, i), order) for i in range(60)])
        se = np.sqrt(59 / 60 * np.sum((loo - loo.mean()) ** 2))
        assert kstat_estimate(x, order).standard_error == pytest.approx(se, rel=1e-8)


def test_cross_covariance_and_bundle():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(100, 3))
    est = cross_covariance(x[:, 0], x[:, 1])
    assert est.value == pytest.approx(np.cov(x[:, 0], x[:, 1])[0, 1])
    out = k_statistics(x)
    assert out[(2, (0,))].value == pytest.approx(np.var(x[:, 0], ddof=1))
    assert (2, (1, 2)) in out
    z = standardized_estimate(rng.normal(size=2000), 3)
    assert abs(z.value) < 4 * z.standard_error


def test_backends_agree_and_power_traces():
    for n in (5, 20):
        X = sample_matrix(EnsembleSpec(n), n).X
        a = chebyshev_traces(X, 1.0, 10)
        b = chebyshev_traces(X, 1.0, 10, "recurrence")
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9)
        assert power_traces(X, 2)[2] == pytest.approx(np.sum(X * X))
        assert a[2] == pytest.approx(np.sum(X * X) - 2 * n)


def test_hermitian_check():
    with pytest.raises(DomainError):
        chebyshev_traces(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0, 3)


def test_monte_carlo_determinism_and_replicate_keying(tmp_path):
    spec = EnsembleSpec(12, relation="flip")
    a = monte_carlo_run(spec, 4, 30, 99, workers=1)
    b = monte_carlo_run(spec, 4, 30, 99, workers=3)
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    X = sample_matrix(spec, (99, 7)).X
    np.testing.assert_array_equal(a.values[7], chebyshev_traces(X, spec.s, 4))
    back = TraceSamples.from_csv(tmp_path / "a.csv")
    np.testing.assert_array_equal(back.values, a.values)
    assert back.spec == spec and back.master_seed == 99


def test_resource_guard():
    with pytest.raises(ResourceGuardError):
        monte_carlo_run(EnsembleSpec(4000), 2, 10_000, 0)


# frozen values from exhaustive enumeration
@pytest.mark.parametrize("relation,n,powers,expected", [
    ("trivial", 2, (1, 1), 1.0),
    ("trivial", 2, (1, 3), 2.0),
    ("trivial", 2, (3, 3), 4.0),
    ("trivial", 3, (3, 3), 61 / 9),
    ("flip", 2, (1, 1), 2.0),
    ("flip", 3, (3, 3), 281 / 27),
    ("trivial", 3, (2, 2), 0.0),
])
def test_exact_cumulants_frozen(relation, n, powers, expected):
    spec = EnsembleSpec(n, relation=relation, **RADEMACHER)
    assert exact_cumulants_small_n(spec, powers) == pytest.approx(expected, abs=1e-12)


def test_exact_variance_by_hand():
    # Var(Tr X) = E(d^2) for the trivial relation, any n
    spec = EnsembleSpec(3, offdiag_law=EntryLaw("rademacher"), diag_law=EntryLaw("three-point", 2.0, p=0.5))
    assert exact_cumulants_small_n(spec, (1, 1)) == pytest.approx(2.0)


@pytest.mark.parametrize("spec", [
    EnsembleSpec(3, offdiag_law=EntryLaw("three-point", 1.0, p=0.3), diag_law=EntryLaw("rademacher", 2.0)),
    EnsembleSpec(3, relation="flip", offdiag_law=EntryLaw("three-point", 1.0, p=0.3),
                 diag_law=EntryLaw("rademacher", 2.0), gamma=0.5),
    EnsembleSpec(2, field="complex", offdiag_law=EntryLaw("complex-discrete"),
                 diag_law=EntryLaw("three-point", 1.0, p=0.5)),
])
@pytest.mark.parametrize("powers", [(2, 2), (1, 3), (3, 3), (2, 4), (4,), (1, 1, 2)])
def test_partition_sum_matches_enumeration(spec, powers):
    assert cumulant_by_partition_sum(spec, powers) == pytest.approx(
        exact_cumulants_small_n(spec, powers), abs=1e-10)


@pytest.mark.parametrize("powers", [(2, 2), (1, 3), (4,), (1, 1, 2)])
def test_partition_sum_period_model(powers):
    spec = EnsembleSpec(4, relation="period", T=2, **RADEMACHER)
    assert cumulant_by_partition_sum(spec, powers) == pytest.approx(
        exact_cumulants_small_n(spec, powers), abs=1e-10)


def test_partition_sum_guards():
    with pytest.raises(SizeGuardError):
        cumulant_by_partition_sum(EnsembleSpec(3), (5, 4))
    with pytest.raises(SizeGuardError):
        exact_cumulants_small_n(EnsembleSpec(5, **RADEMACHER), (2,))
