"""Deterministic Gaussian sampling, correlated pairs, and law comparisons."""

import numpy as np
import pytest

from invdecomp.groups import character_table
from invdecomp.kernels import builtin_kernel, make_interval_grid
from invdecomp.sampling import (
    compare_distributions,
    decompose_ensemble,
    duplication_check,
    kstat_variances,
    pair_functional,
    quadratic_functional,
    quadruplication_check,
    sample,
    sample_pair,
    worker_count,
)


@pytest.fixture(scope="module")
def watson32():
    return builtin_kernel("watson", make_interval_grid(32))


# ------------------------------------------------------------- determinism


def test_same_seed_is_bitwise_reproducible(watson32):
    a = sample(watson32, 200, seed=9)
    b = sample(watson32, 200, seed=9)
    assert np.array_equal(a.samples, b.samples)
    assert a.seed == 9


def test_seed_and_stream_change_output(watson32):
    base = sample(watson32, 50, seed=9).samples
    assert not np.array_equal(base, sample(watson32, 50, seed=10).samples)
    assert not np.array_equal(base, sample(watson32, 50, seed=9, stream=1).samples)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("INVDECOMP_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("INVDECOMP_THREADS", "not-a-number")
    assert worker_count() == 1
    monkeypatch.delenv("INVDECOMP_THREADS")
    assert worker_count() == 1


def test_thread_count_never_changes_samples(watson32, monkeypatch):
    """Worker parallelism distributes whole blocks, so the draw is identical."""
    out = {}
    for threads in ("1", "3", "8"):
        monkeypatch.setenv("INVDECOMP_THREADS", threads)
        out[threads] = sample(watson32, 5000, seed=4).samples
    assert np.array_equal(out["1"], out["3"])
    assert np.array_equal(out["1"], out["8"])


def test_block_boundary_is_seamless(watson32):
    """Draw counts straddling the internal block size agree sample-for-sample."""
    small = sample(watson32, 4096, seed=12).samples
    large = sample(watson32, 4100, seed=12).samples
    assert np.array_equal(large[:, :4096], small)


# ------------------------------------------------------------------ moments


def test_empirical_covariance(watson32):
    ens = sample(watson32, 20000, seed=101)
    assert ens.samples.shape == (32, 20000)
    emp = ens.samples @ ens.samples.T / 20000
    assert np.abs(emp - watson32.matrix).max() < 5e-3  # measured 1.9e-3


def test_pair_cross_covariance(watson32):
    pair = sample_pair(watson32, 0.5, 20000, seed=77)
    assert pair.rho == 0.5
    cross = pair.first.samples @ pair.second.samples.T / 20000
    assert np.abs(cross - 0.5 * watson32.matrix).max() < 5e-3  # measured 1.8e-3


def test_pair_marginals_have_common_kernel(watson32):
    pair = sample_pair(watson32, 0.3, 20000, seed=13)
    for ens in (pair.first, pair.second):
        emp = ens.samples @ ens.samples.T / 20000
        assert np.abs(emp - watson32.matrix).max() < 5e-3


def test_rho_zero_and_one_extremes(watson32):
    ind = sample_pair(watson32, 0.0, 8000, seed=21)
    dup = sample_pair(watson32, 1.0, 8000, seed=21)
    cross = ind.first.samples @ ind.second.samples.T / 8000
    assert np.abs(cross).max() < 6e-3
    assert np.array_equal(dup.first.samples, dup.second.samples)


# -------------------------------------------------------------- functionals


def test_pair_functional_is_weighted_dot(watson32):
    pair = sample_pair(watson32, 1.0, 100, seed=5)
    j = quadratic_functional(pair)
    w = watson32.space.weights
    manual = np.einsum("is,i,is->s", pair.first.samples, w, pair.second.samples)
    assert np.allclose(j, manual, rtol=1e-14)
    # the convenience wrapper draws the same streams
    assert np.array_equal(j, pair_functional(watson32, 1.0, 100, seed=5))


def test_functional_mean_matches_first_cumulant(watson32):
    from invdecomp.cumulants import analytic_cumulants

    j = pair_functional(watson32, 1.0, 50000, seed=30)
    want = analytic_cumulants(watson32, 1.0, 2)
    assert j.mean() == pytest.approx(want.values[0], abs=4 * np.sqrt(want.values[1] / 50000))


# ------------------------------------------------------------ decomposition


def test_ensemble_decomposition_recovers_paths(watson32):
    ens = sample(watson32, 300, seed=8)
    table = character_table(watson32.space.action.group)
    parts = decompose_ensemble(ens, table)
    assert set(parts) == {"triv", "sign"}
    total = sum(p.samples for p in parts.values())
    assert np.abs(total - ens.samples).max() < 1e-14


def test_ensemble_parts_have_exact_symmetry(watson32):
    ens = sample(watson32, 64, seed=8)
    table = character_table(watson32.space.action.group)
    parts = decompose_ensemble(ens, table)
    rev = watson32.space.action.perm[1]
    assert np.array_equal(parts["triv"].samples[rev], parts["triv"].samples)
    assert np.array_equal(parts["sign"].samples[rev], -parts["sign"].samples)


def test_ensemble_parts_are_orthogonal(watson32):
    """Pathwise Parseval: weighted energies of the parts sum to the total."""
    ens = sample(watson32, 500, seed=14)
    table = character_table(watson32.space.action.group)
    parts = decompose_ensemble(ens, table)
    w = watson32.space.weights
    cross = np.einsum("is,i,is->s", parts["triv"].samples, w, parts["sign"].samples)
    assert np.abs(cross).max() < 1e-15
    total = np.einsum("is,i,is->s", ens.samples, w, ens.samples)
    split = sum(
        np.einsum("is,i,is->s", p.samples, w, p.samples) for p in parts.values()
    )
    assert np.allclose(split, total, rtol=1e-12)


# ------------------------------------------------------------- law checking


def test_compare_distributions_same_law(watson32):
    a = pair_functional(watson32, 1.0, 5000, seed=5)
    b = pair_functional(watson32, 1.0, 5000, seed=7)
    cmp_ = compare_distributions(a, b)
    assert cmp_.ks_distance < 2.2 * np.sqrt(2.0 / 5000)
    assert abs(cmp_.cumulant_gaps[0]) < 5e-3


def test_compare_distributions_different_law(watson32):
    bridge = builtin_kernel("bridge", make_interval_grid(32))
    a = pair_functional(watson32, 1.0, 5000, seed=5)
    b = pair_functional(bridge, 1.0, 5000, seed=6)
    assert compare_distributions(a, b).ks_distance > 0.1  # measured 0.30


def test_compare_distributions_sample_floor():
    with pytest.raises(ValueError, match="1000"):
        compare_distributions(np.zeros(500), np.zeros(500))


def test_kstat_variances_gaussian_closed_forms():
    """Sampling variances of k-statistics for N(0, 2), n = 100."""
    n, k2 = 100, 2.0
    var = kstat_variances((0, k2, 0, 0, 0, 0, 0, 0), n)
    assert var[0] == pytest.approx(k2 / n)
    assert var[1] == pytest.approx(2 * k2**2 / (n - 1))
    assert var[2] == pytest.approx(6 * n * k2**3 / ((n - 1) * (n - 2)))
    assert var[3] == pytest.approx(24 * n * (n + 1) * k2**4 / ((n - 1) * (n - 2) * (n - 3)))


# ----------------------------------------------------------- bundled checks


def test_duplication_check_small():
    rep = duplication_check({"grid": 64, "samples": 4000, "rho": 1.0, "seed": 1961})
    assert rep["ok"]
    assert rep["check"] == "duplication"
    assert rep["comparison"]["ks_distance"] < rep["ks_tol"]
    assert rep["mean_lhs"] == pytest.approx(1.0 / 12, rel=0.05)
    assert rep["pass"]["ks"] and rep["pass"]["cumulants"]


def test_quadruplication_check_small():
    rep = quadruplication_check({"grid": 12, "samples": 3000, "rho": 0.5, "seed": 4104})
    assert rep["ok"]
    assert rep["check"] == "quadruplication"
    assert len(rep["analytic_lhs"]) == len(rep["analytic_rhs"])


def test_duplication_check_is_deterministic():
    cfg = {"grid": 32, "samples": 2000, "rho": 1.0, "seed": 3}
    assert duplication_check(cfg) == duplication_check(cfg)
