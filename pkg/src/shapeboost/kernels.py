"""Kernel evaluation and Gram matrices over the instance pool.

Two analytic kernels are supported plus a precomputed mode:

* ``linear``     dot product.
* ``gaussian``   exp(-sigma * ||a - b||^2). Note sigma multiplies the
  squared distance directly (no 1/(2 sigma^2) reparametrization).
* ``precomputed`` a user-supplied symmetric matrix; instances are then
  row indices into that matrix and raw-vector evaluation is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import InstancePool

SYMMETRY_TOL = 1e-12
PSD_REL_TOL = 1e-8


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    sigma: float | None = None
    gram_ref: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "gaussian", "precomputed"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian":
            if self.sigma is None or not (self.sigma > 0):
                raise ValueError("gaussian kernel requires sigma > 0")
        if self.kind == "precomputed":
            g = self.gram_ref
            if g is None:
                raise ValueError("precomputed kernel requires a matrix")
            g = np.asarray(g, dtype=np.float64)
            if g.ndim != 2 or g.shape[0] != g.shape[1]:
                raise ValueError(f"precomputed matrix must be square, got {g.shape}")
            scale = max(1.0, np.abs(g).max())
            if np.abs(g - g.T).max() > 1e-8 * scale:
                raise ValueError("precomputed matrix is not symmetric")
            g = 0.5 * (g + g.T)
            g.flags.writeable = False
            object.__setattr__(self, "gram_ref", g)


def linear_kernel_spec() -> KernelSpec:
    return KernelSpec("linear")


def gaussian_kernel_spec(sigma: float) -> KernelSpec:
    return KernelSpec("gaussian", sigma=float(sigma))


def precomputed_kernel_spec(gram) -> KernelSpec:
    return KernelSpec("precomputed", gram_ref=np.asarray(gram, dtype=np.float64))


def kernel_eval(spec: KernelSpec, a, b) -> float:
    """Evaluate K(a, b) for raw instance vectors."""
    if spec.kind == "precomputed":
        raise ValueError("precomputed kernel cannot evaluate raw instances; use pool indices")
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if spec.kind == "linear":
        return float(a @ b)
    diff = a - b
    return float(np.exp(-spec.sigma * (diff @ diff)))


def kernel_columns(spec: KernelSpec, pool: InstancePool, points: np.ndarray) -> np.ndarray:
    """Matrix K[x, z] = K(pool[z], points[x]) for a block of query points.

    For the precomputed kind both the pool entries and the query points
    must be single-element index vectors into the stored matrix.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(1, -1)
    if spec.kind == "precomputed":
        if pool.dim != 1 or points.shape[1] != 1:
            raise ValueError("precomputed kernel expects 1-d index instances")
        rows = _as_indices(points[:, 0], spec.gram_ref.shape[0], "query")
        cols = _as_indices(pool.instances[:, 0], spec.gram_ref.shape[0], "pool")
        return spec.gram_ref[np.ix_(rows, cols)]
    if points.shape[1] != pool.dim:
        raise ValueError(f"dimension mismatch: points {points.shape[1]}, pool {pool.dim}")
    if spec.kind == "linear":
        return points @ pool.instances.T
    # squared distances via the expansion ||x||^2 - 2 x.z + ||z||^2,
    # clipped at zero to kill negative round-off
    sq = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ pool.instances.T
        + np.sum(pool.instances**2, axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-spec.sigma * sq)


def _as_indices(vals: np.ndarray, n: int, what: str) -> np.ndarray:
    idx = np.rint(vals).astype(np.int64)
    if np.abs(vals - idx).max() > 1e-9:
        raise ValueError(f"{what} instances are not integer indices")
    if idx.min() < 0 or idx.max() >= n:
        raise ValueError(f"{what} index out of range for {n}x{n} precomputed matrix")
    return idx


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric kernel matrix over a pool, with its generating spec."""

    entries: np.ndarray
    kernel: KernelSpec

    def __post_init__(self):
        g = np.asarray(self.entries, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError(f"gram matrix must be square, got {g.shape}")
        scale = max(1.0, np.abs(g).max())
        if np.abs(g - g.T).max() > SYMMETRY_TOL * scale:
            raise ValueError("gram matrix is not symmetric")
        g = g.copy()
        g.flags.writeable = False
        object.__setattr__(self, "entries", g)

    def __len__(self) -> int:
        return self.entries.shape[0]

    def min_max_eigenvalues(self) -> tuple[float, float]:
        w = np.linalg.eigvalsh(self.entries)
        return float(w[0]), float(w[-1])

    def check_psd(self) -> None:
        """Reject matrices that are indefinite beyond floating-point noise."""
        lo, hi = self.min_max_eigenvalues()
        if lo < -PSD_REL_TOL * max(hi, 1.0):
            raise ValueError(f"gram matrix is not PSD: min eigenvalue {lo:.3e}")

    def diag_max(self) -> float:
        """Largest diagonal entry; a bound on the feature norms."""
        return float(np.max(np.diag(self.entries)))


def gram_matrix(spec: KernelSpec, pool: InstancePool) -> GramMatrix:
    """Dense kernel matrix of the pool against itself."""
    if len(pool) < 1:
        raise ValueError("pool is empty")
    g = kernel_columns(spec, pool, pool.instances)
    g = 0.5 * (g + g.T)
    if spec.kind == "gaussian":
        np.fill_diagonal(g, 1.0)
    return GramMatrix(g, spec)
