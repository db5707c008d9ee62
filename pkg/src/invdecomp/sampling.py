"""Seeded Gaussian ensembles, correlated pairs, and law-comparison checks.

Reproducibility contract
------------------------
Every sample column j of an ensemble is drawn from its own counter-based
stream, keyed by (seed, stream-id, j).  All heavy numerics run over
fixed-size column blocks regardless of how many worker threads are active
(the ``INVDECOMP_THREADS`` environment variable only distributes whole
blocks), so identical (kernel, count, seed) inputs give bit-identical
ensembles under any parallelism degree, and the streaming and materialized
code paths agree bitwise.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.random import Generator, Philox
from scipy.stats import ks_2samp, kstat

from invdecomp.kernels import (
    IndexSpace,
    Kernel,
    KernelError,
    builtin_kernel,
    make_interval_grid,
    make_product_grid,
)
from invdecomp.cumulants import analytic_cumulants

__all__ = [
    "PathEnsemble",
    "CorrelatedPair",
    "covariance_factor",
    "sample",
    "sample_pair",
    "pair_functional",
    "decompose_ensemble",
    "quadratic_functional",
    "DistributionComparison",
    "compare_distributions",
    "kstat_variances",
    "duplication_check",
    "quadruplication_check",
]

BLOCK = 4096          # fixed work unit; never depends on the worker count
EIG_CLIP = 1e-12      # relative eigenvalue floor for the covariance factor
_MASK64 = (1 << 64) - 1


def worker_count() -> int:
    """Thread cap from INVDECOMP_THREADS (speed only, never results)."""
    raw = os.environ.get("INVDECOMP_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return max(1, n) if n else max(1, min(4, os.cpu_count() or 1))


def _key(seed: int, stream: int, j: int) -> np.ndarray:
    if not 0 <= j < (1 << 48):
        raise ValueError("sample index out of the 48-bit key range")
    return np.array([seed & _MASK64, ((stream & 0xFFFF) << 48) | j], dtype=np.uint64)


def _fill_normals(out: np.ndarray, seed: int, stream: int, j0: int) -> None:
    # one Philox stream per column: partitioning-invariant by construction
    m = out.shape[0]
    for c in range(out.shape[1]):
        gen = Generator(Philox(key=_key(seed, stream, j0 + c)))
        out[:, c] = gen.standard_normal(m)


def _blocks(count: int) -> list[tuple[int, int]]:
    return [(a, min(a + BLOCK, count)) for a in range(0, count, BLOCK)]


def _parallel(tasks, fn) -> None:
    workers = worker_count()
    if workers == 1 or len(tasks) <= 1:
        for t in tasks:
            fn(t)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(fn, tasks))


def covariance_factor(kernel: Kernel) -> tuple[np.ndarray, int]:
    """Symmetric PSD square root of K with small eigenvalues clipped.

    Returns (L, rank) with L = U diag(sqrt(clip(lambda))) U^T; eigenvalues
    below EIG_CLIP * lambda_max count as zero.  Eigendecomposition rather
    than Cholesky: discretized kernels are routinely rank-deficient.
    """
    evals, vecs = np.linalg.eigh(kernel.matrix)
    lmax = float(evals[-1]) if evals.size else 0.0
    if lmax <= 0.0:
        return np.zeros_like(kernel.matrix), 0
    keep = evals >= EIG_CLIP * lmax
    lam = np.where(keep, evals, 0.0)
    l = (vecs * np.sqrt(lam)[None, :]) @ vecs.T
    return l, int(np.count_nonzero(keep))


@dataclass(frozen=True)
class PathEnsemble:
    """S sampled paths over an index space, one per column."""

    space: IndexSpace
    samples: np.ndarray  # (m, S)
    seed: int
    factorization_rank: int

    def __post_init__(self) -> None:
        s = np.asarray(self.samples)
        if s.ndim != 2 or s.shape[0] != self.space.size:
            raise KernelError("samples must be (space.size, S)")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def count(self) -> int:
        return self.samples.shape[1]

    def empirical_covariance(self) -> np.ndarray:
        return (self.samples @ self.samples.T) / self.count

    def __repr__(self) -> str:
        return f"PathEnsemble(m={self.space.size}, count={self.count}, seed={self.seed})"


@dataclass(frozen=True)
class CorrelatedPair:
    """Two ensembles with common covariance K and cross-covariance rho*K."""

    first: PathEnsemble
    second: PathEnsemble
    rho: float

    def __post_init__(self) -> None:
        if self.first.space is not self.second.space and not (
            np.array_equal(self.first.space.points, self.second.space.points)
        ):
            raise KernelError("pair members live on different spaces")
        if self.first.count != self.second.count:
            raise KernelError("pair members have different sample counts")

    @property
    def count(self) -> int:
        return self.first.count


def sample(
    kernel: Kernel,
    count: int,
    seed: int,
    stream: int = 0,
    factor: Optional[tuple[np.ndarray, int]] = None,
) -> PathEnsemble:
    """Draw ``count`` Gaussian paths with covariance ``kernel``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    l, rank = covariance_factor(kernel) if factor is None else factor
    m = kernel.size
    out = np.empty((m, count))

    def run(blk):
        a, b = blk
        xi = np.empty((m, b - a))
        _fill_normals(xi, seed, stream, a)
        out[:, a:b] = l @ xi

    _parallel(_blocks(count), run)
    return PathEnsemble(space=kernel.space, samples=out, seed=seed, factorization_rank=rank)


def sample_pair(
    kernel: Kernel,
    rho: float,
    count: int,
    seed: int,
    streams: tuple[int, int] = (0, 1),
) -> CorrelatedPair:
    """Correlated pair Z2 = rho Z1 + sqrt(1-rho^2) Z1' from two streams.

    rho = 1 reproduces Z1 bit-for-bit in the second member.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0, 1], got {rho}")
    factor = covariance_factor(kernel)
    z1 = sample(kernel, count, seed, stream=streams[0], factor=factor)
    z1p = sample(kernel, count, seed, stream=streams[1], factor=factor)
    comp = np.sqrt(max(0.0, 1.0 - rho * rho))
    z2 = rho * z1.samples + comp * z1p.samples
    second = PathEnsemble(
        space=kernel.space, samples=z2, seed=seed, factorization_rank=z1.factorization_rank
    )
    return CorrelatedPair(first=z1, second=second, rho=rho)


def pair_functional(
    kernel: Kernel,
    rho: float,
    count: int,
    seed: int,
    streams: tuple[int, int] = (0, 1),
) -> np.ndarray:
    """Streamed sum_i Z1[i] Z2[i] w_i per sample, without holding ensembles.

    Bitwise identical to ``quadratic_functional(sample_pair(...))`` with the
    same arguments: both consume the same per-column streams in the same
    fixed blocks.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0, 1], got {rho}")
    l, _ = covariance_factor(kernel)
    m = kernel.size
    w = kernel.space.weights
    comp = np.sqrt(max(0.0, 1.0 - rho * rho))
    out = np.empty(count)

    def run(blk):
        a, b = blk
        xi = np.empty((m, b - a))
        _fill_normals(xi, seed, streams[0], a)
        z1 = l @ xi
        _fill_normals(xi, seed, streams[1], a)
        z2 = rho * z1 + comp * (l @ xi)
        out[a:b] = w @ (z1 * z2)

    _parallel(_blocks(count), run)
    return out


def decompose_ensemble(ensemble: PathEnsemble, table) -> dict:
    """Character components of every sample; values are PathEnsembles.

    Components sum to the original ensemble (exactly up to addition
    roundoff) and are pathwise orthogonal in the weighted inner product.
    """
    from invdecomp.groups import project_path

    action = ensemble.space.action
    if action is None:
        raise KernelError("ensemble space has no bound action")
    return {
        p.label: PathEnsemble(
            space=ensemble.space,
            samples=project_path(ensemble.samples, action, p),
            seed=ensemble.seed,
            factorization_rank=ensemble.factorization_rank,
        )
        for p in table
    }


def quadratic_functional(pair: CorrelatedPair) -> np.ndarray:
    """Per-sample weighted product sum_i Z1[i] Z2[i] w_i."""
    w = pair.first.space.weights
    z1, z2 = pair.first.samples, pair.second.samples
    out = np.empty(pair.count)
    for a, b in _blocks(pair.count):
        out[a:b] = w @ (z1[:, a:b] * z2[:, a:b])
    return out


@dataclass(frozen=True)
class DistributionComparison:
    """Two-sample KS distance plus gaps of the first four k-statistics."""

    ks_distance: float
    cumulant_gaps: tuple
    kstats_a: tuple
    kstats_b: tuple

    def to_dict(self) -> dict:
        return {
            "ks_distance": self.ks_distance,
            "cumulant_gaps": list(self.cumulant_gaps),
            "kstats_a": list(self.kstats_a),
            "kstats_b": list(self.kstats_b),
        }


def compare_distributions(a: np.ndarray, b: np.ndarray) -> DistributionComparison:
    """Operational "equal in law": KS statistic and k-statistic gaps."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if min(a.size, b.size) < 1000:
        raise ValueError("need at least 1000 samples per side")
    ka = tuple(float(kstat(a, n)) for n in (1, 2, 3, 4))
    kb = tuple(float(kstat(b, n)) for n in (1, 2, 3, 4))
    ks = float(ks_2samp(a, b).statistic)
    return DistributionComparison(
        ks_distance=ks,
        cumulant_gaps=tuple(x - y for x, y in zip(ka, kb)),
        kstats_a=ka,
        kstats_b=kb,
    )


def kstat_variances(kappas: Sequence[float], count: int) -> np.ndarray:
    """Sampling variances of k-statistics of orders 1..4.

    Classical finite-sample formulas in terms of the population cumulants;
    ``kappas`` must supply kappa_1..kappa_8 (pad with zeros if unknown —
    higher cumulants only tighten the later orders).
    """
    k = [0.0] * 9
    for i, v in enumerate(kappas[:8], start=1):
        k[i] = float(v)
    n = float(count)
    v1 = k[2] / n
    v2 = k[4] / n + 2 * k[2] ** 2 / (n - 1)
    v3 = (
        k[6] / n
        + 9 * k[2] * k[4] / (n - 1)
        + 9 * k[3] ** 2 / (n - 1)
        + 6 * n * k[2] ** 3 / ((n - 1) * (n - 2))
    )
    v4 = (
        k[8] / n
        + 16 * k[2] * k[6] / (n - 1)
        + 48 * k[3] * k[5] / (n - 1)
        + 34 * k[4] ** 2 / (n - 1)
        + 72 * n * k[2] ** 2 * k[4] / ((n - 1) * (n - 2))
        + 144 * n * k[2] * k[3] ** 2 / ((n - 1) * (n - 2))
        + 24 * n * (n + 1) * k[2] ** 4 / ((n - 1) * (n - 2) * (n - 3))
    )
    return np.array([v1, v2, v3, v4])


def _law_report(
    lhs: np.ndarray,
    rhs: np.ndarray,
    kappa_lhs: np.ndarray,
    kappa_rhs: np.ndarray,
    count: int,
    seed: int,
    ks_tol: Optional[float],
    orders: int,
    sigma: float = 5.0,
) -> dict:
    """Compare two MC functionals against each other and their analytics.

    Cumulant-gap tolerances combine the k-statistic sampling noise of both
    sides (at ``sigma`` standard deviations) with the computable systematic
    offset between the two discrete analytic cumulant sequences.
    """
    cmp_ = compare_distributions(lhs, rhs)
    var_l = kstat_variances(kappa_lhs, count)
    var_r = kstat_variances(kappa_rhs, count)
    noise = sigma * np.sqrt(var_l + var_r)
    systematic = np.abs(kappa_lhs[:4] - kappa_rhs[:4])
    tol = noise + systematic
    gaps = np.abs(np.asarray(cmp_.cumulant_gaps))
    if ks_tol is None:
        # null two-sample KS quantile scaling, slightly above the 99.9% point
        ks_tol = 2.2 * np.sqrt(2.0 / count)
    passes = {
        "ks": bool(cmp_.ks_distance < ks_tol),
        "cumulants": bool(np.all(gaps[:orders] <= tol[:orders])),
    }
    return {
        "count": count,
        "seed": seed,
        "comparison": cmp_.to_dict(),
        "ks_tol": float(ks_tol),
        "cumulant_orders_checked": orders,
        "cumulant_tol": [float(x) for x in tol],
        "analytic_lhs": [float(x) for x in kappa_lhs[:4]],
        "analytic_rhs": [float(x) for x in kappa_rhs[:4]],
        "pass": passes,
        "ok": bool(all(passes.values())),
    }


def duplication_check(config: dict) -> dict:
    """Compare the compensated functional with a quarter-sum of two
    independent uncompensated (tied-down) functionals, in law.

    config keys: grid (int, default 256), samples (default 100000),
    rho (default 1.0), seed (required), ks_tol (optional override).
    """
    grid = int(config.get("grid", 256))
    count = int(config.get("samples", 100_000))
    rho = float(config.get("rho", 1.0))
    seed = int(config["seed"])
    space = make_interval_grid(grid)
    watson = builtin_kernel("watson", space)
    bridge = builtin_kernel("bridge", space)

    lhs = pair_functional(watson, rho, count, seed, streams=(0, 1))
    rhs = 0.25 * (
        pair_functional(bridge, rho, count, seed, streams=(2, 3))
        + pair_functional(bridge, rho, count, seed, streams=(4, 5))
    )
    kap_l = analytic_cumulants(watson, rho, 8).values
    kap_b = analytic_cumulants(bridge, rho, 8).values
    # kappa_n of (J + J')/4 for independent copies
    kap_r = np.array([2.0 * 4.0 ** (-n) * kap_b[n - 1] for n in range(1, 9)])
    rep = _law_report(lhs, rhs, kap_l, kap_r, count, seed, config.get("ks_tol"), orders=3)
    rep.update(
        {
            "check": "duplication",
            "grid": grid,
            "rho": rho,
            "mean_lhs": float(np.mean(lhs)),
            "mean_rhs": float(np.mean(rhs)),
        }
    )
    return rep


def quadruplication_check(config: dict) -> dict:
    """Product-space analogue: compensated sheet vs 1/16 times the sum of
    four independent tied-down sheet functionals.

    config keys: grid (per-axis int, default 32), samples (default 50000),
    rho (default 0.5), seed (required), ks_tol (optional).
    """
    grid = int(config.get("grid", 32))
    count = int(config.get("samples", 50_000))
    rho = float(config.get("rho", 0.5))
    seed = int(config["seed"])
    axis = make_interval_grid(grid)
    space = make_product_grid([axis, axis])
    comp = builtin_kernel("sheet_compensated", space)
    tied = builtin_kernel("sheet_tied", space)

    lhs = pair_functional(comp, rho, count, seed, streams=(0, 1))
    acc = np.zeros(count)
    for i in range(4):
        acc += pair_functional(tied, rho, count, seed, streams=(2 + 2 * i, 3 + 2 * i))
    rhs = acc / 16.0
    kap_l = analytic_cumulants(comp, rho, 8).values
    kap_t = analytic_cumulants(tied, rho, 8).values
    kap_r = np.array([4.0 * 16.0 ** (-n) * kap_t[n - 1] for n in range(1, 9)])
    rep = _law_report(lhs, rhs, kap_l, kap_r, count, seed, config.get("ks_tol"), orders=3)
    rep.update(
        {
            "check": "quadruplication",
            "grid": [grid, grid],
            "rho": rho,
            "mean_lhs": float(np.mean(lhs)),
            "mean_rhs": float(np.mean(rhs)),
        }
    )
    return rep
