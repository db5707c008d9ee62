"""Quadrature index spaces, covariance kernels, and their symmetry algebra.

An :class:`IndexSpace` is a finite quadrature rule (points, weights) with an
optional group action by permutations.  A :class:`Kernel` is a symmetric PSD
matrix over such a space.  The operations here are the kernel-side analogues
of path projection: projecting a kernel onto a pair of characters,
contracting two kernels against the quadrature measure, and checking
invariance under the action.

Weighted contraction conventions, with ``D = diag(weights)``:

* ``contract(K1, K2) = K1 D K2^T``  (one quadrature integration),
* ``contract_power(K, n) = K (D K)^(n-1)``  (chain of n kernel factors),
* ``weighted_diag_trace(M) = trace(D M)``,

so that ``weighted_diag_trace(contract_power(K, n)) == trace((D K)^n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from invdecomp.groups import (
    DEFAULT_TOL,
    FiniteGroup,
    GroupAction,
    GroupError,
    Irrep,
    cyclic_group,
    direct_product,
)

__all__ = [
    "KernelError",
    "IndexSpace",
    "Kernel",
    "FeatureMap",
    "make_interval_grid",
    "make_product_grid",
    "builtin_kernel",
    "BUILTIN_KERNELS",
    "check_invariance",
    "project_kernel",
    "decompose_kernel",
    "contract",
    "contract_power",
    "weighted_diag_trace",
    "weighted_traces",
    "feature_map_from_kernel",
    "project_feature_map",
]

PSD_TOL = 1e-10


class KernelError(ValueError):
    """Raised for malformed spaces, kernels, or incompatible operands."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class IndexSpace:
    """Finite quadrature rule with an optional symmetry action.

    Parameters
    ----------
    points : (m, d) float array
    weights : (m,) float array
        Strictly positive quadrature weights.
    action : GroupAction, optional
        Permutation action on the points.  Constructors only bind actions
        that map grid points to grid points exactly.
    name : str
    """

    points: np.ndarray
    weights: np.ndarray
    action: Optional[GroupAction] = None
    name: str = ""

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.shape[0] != pts.shape[0]:
            raise KernelError("weights must be one per point")
        if np.any(w <= 0):
            raise KernelError("weights must be strictly positive")
        if self.action is not None and self.action.npoints != pts.shape[0]:
            raise KernelError("action size does not match point count")
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __repr__(self) -> str:
        return f"IndexSpace(name={self.name!r}, size={self.size}, dim={self.dim})"


def make_interval_grid(n: int, reversal: bool = True) -> IndexSpace:
    """Midpoint rule on [0, 1] with the reflection t -> 1-t bound as a Z2 action.

    The midpoints (i + 1/2)/n are closed under reflection exactly, with
    ``perm = [n-1, ..., 0]`` for the non-trivial element.
    """
    if n < 1:
        raise KernelError("need at least one grid point")
    t = (np.arange(n) + 0.5) / n
    w = np.full(n, 1.0 / n)
    action = None
    if reversal:
        g = cyclic_group(2)
        perm = np.stack([np.arange(n), np.arange(n)[::-1]])
        action = GroupAction(g, perm)
    return IndexSpace(t, w, action, name=f"interval[{n}]")


def make_product_grid(spaces: Sequence[IndexSpace]) -> IndexSpace:
    """Cartesian product space, row-major (last factor fastest).

    Weights multiply.  When every factor carries an action, the product
    group acts coordinate-wise; its element (g1, .., gk) is encoded
    row-major exactly like :func:`invdecomp.groups.direct_product`.
    """
    spaces = list(spaces)
    if not spaces:
        raise KernelError("need at least one factor")
    if len(spaces) == 1:
        return spaces[0]
    mid = make_product_grid(spaces[:-1])
    last = spaces[-1]
    m1, m2 = mid.size, last.size
    pts = np.hstack(
        [
            np.repeat(mid.points, m2, axis=0),
            np.tile(last.points, (m1, 1)),
        ]
    )
    w = np.repeat(mid.weights, m2) * np.tile(last.weights, m1)
    action = None
    if mid.action is not None and last.action is not None:
        grp = direct_product(mid.action.group, last.action.group)
        n1, n2 = mid.action.group.order, last.action.group.order
        perm = np.empty((n1 * n2, m1 * m2), dtype=np.intp)
        for g1 in range(n1):
            for g2 in range(n2):
                perm[g1 * n2 + g2] = (
                    mid.action.perm[g1][:, None] * m2 + last.action.perm[g2][None, :]
                ).ravel()
        action = GroupAction(grp, perm)
    name = " x ".join(s.name or "?" for s in spaces)
    return IndexSpace(pts, w, action, name=name)


@dataclass(frozen=True)
class Kernel:
    """Symmetric positive semi-definite matrix over an index space."""

    space: IndexSpace
    matrix: np.ndarray
    name: str = ""
    check: bool = True

    def __post_init__(self) -> None:
        k = np.asarray(self.matrix, dtype=float)
        m = self.space.size
        if k.shape != (m, m):
            raise KernelError(f"matrix must be ({m}, {m}), got {k.shape}")
        if self.check:
            sym = float(np.max(np.abs(k - k.T))) if m else 0.0
            if sym > PSD_TOL:
                raise KernelError(f"matrix not symmetric (dev {sym:.3e})")
            k = (k + k.T) / 2
            evals = np.linalg.eigvalsh(k)
            floor = -PSD_TOL * max(1.0, float(evals[-1]))
            if evals[0] < floor:
                raise KernelError(f"matrix not PSD (min eigenvalue {evals[0]:.3e})")
        object.__setattr__(self, "matrix", _readonly(k))

    @property
    def size(self) -> int:
        return self.space.size

    def __repr__(self) -> str:
        return f"Kernel(name={self.name!r}, size={self.size})"


def _bridge(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.minimum(s, t) - s * t


def _compensated_bridge(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    # bridge recentred so every marginal integral against dt vanishes
    return np.minimum(s, t) - (s + t) / 2 + (s - t) ** 2 / 2 + 1.0 / 12


def _circle_profile(u: np.ndarray) -> np.ndarray:
    # stationary profile of the compensated bridge on the circle:
    # k(u) = (u - 1/2)^2 / 2 - 1/24 for u in [0, 1)
    u = np.mod(u, 1.0)
    return (u - 0.5) ** 2 / 2 - 1.0 / 24


def _kernel_1d(space: IndexSpace, fn, name: str) -> Kernel:
    if space.dim != 1:
        raise KernelError(f"{name} kernel needs a 1-d space")
    t = space.points[:, 0]
    return Kernel(space, fn(t[:, None], t[None, :]), name=name)


def _kernel_2d_product(space: IndexSpace, fn, name: str) -> Kernel:
    if space.dim != 2:
        raise KernelError(f"{name} kernel needs a 2-d space")
    a = space.points[:, 0]
    b = space.points[:, 1]
    k = fn(a[:, None], a[None, :]) * fn(b[:, None], b[None, :])
    return Kernel(space, k, name=name)


def builtin_kernel(name: str, space: IndexSpace, matrix: Optional[np.ndarray] = None) -> Kernel:
    """Construct a named covariance kernel on ``space``.

    Supported names:

    * ``"bridge"``        — min(s,t) - st on [0,1];
    * ``"watson"``        — compensated bridge, diag identically 1/12;
    * ``"sheet_tied"``    — product of two bridge factors on [0,1]^2;
    * ``"sheet_compensated"`` — product of two compensated-bridge factors;
    * ``"torus_watson"``  — stationary circle kernel k((s-t) mod 1) with
      the same profile as the compensated bridge;
    * ``"user_matrix"``   — validate and wrap ``matrix``.
    """
    if name == "bridge":
        return _kernel_1d(space, _bridge, name)
    if name == "watson":
        return _kernel_1d(space, _compensated_bridge, name)
    if name == "sheet_tied":
        return _kernel_2d_product(space, _bridge, name)
    if name == "sheet_compensated":
        return _kernel_2d_product(space, _compensated_bridge, name)
    if name == "torus_watson":
        if space.dim != 1:
            raise KernelError("torus_watson kernel needs a 1-d space")
        t = space.points[:, 0]
        return Kernel(space, _circle_profile(t[:, None] - t[None, :]), name=name)
    if name == "user_matrix":
        if matrix is None:
            raise KernelError("user_matrix requires the matrix argument")
        return Kernel(space, np.asarray(matrix, dtype=float), name=name)
    raise KernelError(f"unknown kernel {name!r}")


BUILTIN_KERNELS = (
    "bridge",
    "watson",
    "sheet_tied",
    "sheet_compensated",
    "torus_watson",
)


def check_invariance(kernel: Kernel, tol: float = 1e-9) -> tuple[bool, float]:
    """Max deviation of R(g.y1, g.y2) from R(y1, y2) over the bound action."""
    action = kernel.space.action
    if action is None:
        raise KernelError("space has no bound action")
    dev = 0.0
    k = kernel.matrix
    for g in range(action.group.order):
        p = action.perm[g]
        dev = max(dev, float(np.max(np.abs(k[np.ix_(p, p)] - k))))
    return dev <= tol, dev


def _project_axis(mat: np.ndarray, action: GroupAction, irrep: Irrep, axis: int) -> np.ndarray:
    group = action.group
    chi = irrep.values.real if irrep.real_valued else irrep.values
    if not irrep.real_valued:
        mat = mat.astype(np.complex128, copy=False)
    inv_perm = action.perm[group.inv]
    out = chi[0] * np.take(mat, inv_perm[0], axis=axis)
    for g in range(1, group.order):
        out += chi[g] * np.take(mat, inv_perm[g], axis=axis)
    out *= irrep.dim / group.order
    return out


def project_kernel(kernel: Kernel, pi: Irrep, sigma: Irrep):
    """Project a kernel onto the (pi, sigma) character pair.

    Applies the path projection in each argument:

        R_{pi,sigma}(y1, y2) =
          (d_pi d_sigma / |G|^2) * sum_{g1,g2} chi_pi(g1) chi_sigma(g2)
                                   R(g1^{-1}.y1, g2^{-1}.y2).

    Returns a :class:`Kernel` when ``pi is sigma`` and the character is real
    (the projected matrix is then a covariance); otherwise the raw matrix.
    Cross projections of an invariant kernel vanish for real characters.
    """
    action = kernel.space.action
    if action is None:
        raise KernelError("space has no bound action")
    out = _project_axis(kernel.matrix, action, pi, axis=0)
    out = _project_axis(out, action, sigma, axis=1)
    if pi is sigma and pi.real_valued:
        return Kernel(kernel.space, out, name=f"{kernel.name}[{pi.label}]")
    return out


def decompose_kernel(kernel: Kernel, table) -> dict:
    """All diagonal projections R_{pi,pi}, keyed by irrep label."""
    return {p.label: project_kernel(kernel, p, p) for p in table}


def _same_space(a: IndexSpace, b: IndexSpace) -> None:
    if a is b:
        return
    if a.size != b.size or not np.array_equal(a.points, b.points) or not np.array_equal(a.weights, b.weights):
        raise KernelError("kernels live on different spaces")


def contract(k1: Kernel, k2: Kernel) -> np.ndarray:
    """One weighted contraction: (k1 o k2)(y1, y2) = sum_x k1(y1,x) k2(y2,x) w(x)."""
    _same_space(k1.space, k2.space)
    return (k1.matrix * k1.space.weights[None, :]) @ k2.matrix.T


def contract_power(kernel: Kernel, n: int) -> np.ndarray:
    """Chain of ``n`` kernel factors joined by n-1 weighted contractions."""
    if n < 1:
        raise KernelError("n must be >= 1")
    k = kernel.matrix
    wk = k * kernel.space.weights[None, :]
    out = k
    for _ in range(n - 1):
        out = wk @ out
    return out


def weighted_diag_trace(matrix: np.ndarray, space: IndexSpace) -> float:
    """trace(diag(weights) @ matrix) = sum_i matrix[i, i] w_i."""
    m = np.asarray(matrix)
    if m.shape != (space.size, space.size):
        raise KernelError("matrix does not match space")
    return float(np.sum(np.diagonal(m).real * space.weights)) if np.iscomplexobj(m) else float(
        np.sum(np.diagonal(m) * space.weights)
    )


def weighted_traces(kernel: Kernel, n_max: int) -> np.ndarray:
    """tr((diag(w) K)^n) for n = 1..n_max via the symmetrized spectrum.

    Equal to ``weighted_diag_trace(contract_power(K, n))`` but O(m^3) once:
    the weighted operator diag(w)K is similar to the symmetric matrix
    sqrt(w) K sqrt(w), so its trace powers are eigenvalue power sums.
    """
    rw = np.sqrt(kernel.space.weights)
    sym = rw[:, None] * kernel.matrix * rw[None, :]
    evals = np.linalg.eigvalsh(sym)
    return np.array([float(np.sum(evals**n)) for n in range(1, n_max + 1)])


@dataclass(frozen=True)
class FeatureMap:
    """Finite-rank representation R(y1,y2) = sum_k phi(y1,k) phi(y2,k) tau_k."""

    space: IndexSpace
    phi: np.ndarray  # (m, p)
    tau: np.ndarray  # (p,) positive weights on the auxiliary index
    truncation_error: float = 0.0

    def __post_init__(self) -> None:
        phi = np.asarray(self.phi)
        tau = np.asarray(self.tau, dtype=float)
        if phi.shape[0] != self.space.size or phi.ndim != 2:
            raise KernelError("phi must be (m, p)")
        if tau.shape != (phi.shape[1],):
            raise KernelError("tau must be one weight per feature")
        object.__setattr__(self, "phi", _readonly(phi))
        object.__setattr__(self, "tau", _readonly(tau))

    @property
    def rank(self) -> int:
        return self.phi.shape[1]

    def induced_kernel(self) -> Kernel:
        k = (self.phi * self.tau[None, :]) @ np.conj(self.phi).T
        return Kernel(self.space, k.real if np.iscomplexobj(k) else k)


def feature_map_from_kernel(kernel: Kernel, cutoff: int = 200) -> FeatureMap:
    """Truncated factorization through the top ``cutoff`` weighted eigenpairs.

    Columns are sqrt(lambda_k) f_k with f_k orthonormal in the weighted inner
    product, so the induced kernel reproduces K up to the reported truncation
    error sum_{k>cutoff} lambda_k (a bound on the max diagonal deviation).
    """
    m = kernel.size
    p = min(cutoff, m)
    rw = np.sqrt(kernel.space.weights)
    sym = rw[:, None] * kernel.matrix * rw[None, :]
    evals, vecs = np.linalg.eigh(sym)
    evals, vecs = evals[::-1], vecs[:, ::-1]
    evals = np.clip(evals, 0.0, None)
    phi = (vecs[:, :p] / rw[:, None]) * np.sqrt(evals[:p])[None, :]
    return FeatureMap(
        kernel.space,
        phi,
        np.ones(p),
        truncation_error=float(np.sum(evals[p:])),
    )


def project_feature_map(fm: FeatureMap, irrep: Irrep) -> FeatureMap:
    """Project each feature in its space argument onto ``irrep``.

    phi^pi(y, k) = (d / |G|) sum_g chi(g^{-1}) phi(g.y, k); the induced
    kernel of the result equals project_kernel(induced kernel, pi, pi).
    """
    action = fm.space.action
    if action is None:
        raise KernelError("space has no bound action")
    group = action.group
    chi_inv = irrep.values[group.inv]
    chi_inv = chi_inv.real if irrep.real_valued else chi_inv
    phi = fm.phi
    if not irrep.real_valued:
        phi = phi.astype(np.complex128, copy=False)
    out = chi_inv[0] * phi[action.perm[0]]
    for g in range(1, group.order):
        out += chi_inv[g] * phi[action.perm[g]]
    out *= irrep.dim / group.order
    return FeatureMap(fm.space, out, fm.tau, truncation_error=fm.truncation_error)
