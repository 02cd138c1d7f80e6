"""Time-series-to-bag reduction and pool compression.

A length-L series becomes the bag of its L - len + 1 sliding windows,
turning series classification into a multiple-instance problem. Large
window pools are compressed to k representative centroids with seeded
k-means so that the kernel matrices stay tractable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Bag, InstancePool, LabeledBag, Sample


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    label: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel().copy()
        if v.size < 1:
            raise ValueError("series is empty")
        if not np.all(np.isfinite(v)):
            raise ValueError("series contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.label is not None:
            if self.label not in (-1, 1):
                raise ValueError(f"label must be -1 or +1, got {self.label!r}")
            object.__setattr__(self, "label", int(self.label))

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class WindowConfig:
    """Window length, either absolute or as a fraction of series length."""

    length: int | None = None
    length_fraction: float | None = None
    znormalize: bool = False

    def __post_init__(self):
        if (self.length is None) == (self.length_fraction is None):
            raise ValueError("specify exactly one of length / length_fraction")
        if self.length is not None and self.length < 1:
            raise ValueError("window length must be >= 1")
        if self.length_fraction is not None and not (0.0 < self.length_fraction <= 1.0):
            raise ValueError("length_fraction must be in (0, 1]")

    def resolve(self, series_length: int) -> int:
        """Concrete window length for a series; fraction rounds half-up."""
        if self.length is not None:
            ell = self.length
        else:
            ell = int(np.floor(self.length_fraction * series_length + 0.5))
            ell = max(1, min(ell, series_length))
        if ell > series_length:
            raise ValueError(f"window length {ell} exceeds series length {series_length}")
        return ell


def extract_bag(tau: TimeSeries, cfg: WindowConfig) -> Bag:
    """All consecutive windows of the series, in source order."""
    ell = cfg.resolve(len(tau))
    v = tau.values
    n = len(tau) - ell + 1
    windows = np.lib.stride_tricks.sliding_window_view(v, ell).copy()
    assert windows.shape == (n, ell)
    if cfg.znormalize:
        windows = _znormalize_rows(windows)
    return Bag(windows)


def _znormalize_rows(w: np.ndarray) -> np.ndarray:
    mu = w.mean(axis=1, keepdims=True)
    sd = w.std(axis=1, keepdims=True)
    out = w - mu
    nonconst = sd[:, 0] > 0
    out[nonconst] /= sd[nonconst]
    # constant windows are left at exactly zero
    return out


def extract_sample(series, cfg: WindowConfig) -> Sample:
    """One bag per labeled series; window offsets are the instance indices."""
    items = []
    for i, tau in enumerate(series):
        if tau.label is None:
            raise ValueError(f"series {i} has no label")
        items.append(LabeledBag(extract_bag(tau, cfg), tau.label))
    return Sample(tuple(items))


def kmeans_representatives(
    pool: InstancePool, k: int, seed: int = 0, max_iters: int = 100
) -> InstancePool:
    """Compress the pool to k centroids by seeded k-means.

    Lloyd's algorithm with k-means++ initialization. Representatives are
    the centroids themselves (not medoids); each centroid's provenance
    points at the nearest original pool instance so reports can still
    show real data. If k covers the pool the input is returned as is.
    Identical seeds give bitwise identical results.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x = pool.instances
    n = x.shape[0]
    if k >= n:
        return pool
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(x, k, rng)

    assign = None
    for _ in range(max_iters):
        dist = _sq_distances(x, centroids)
        new_assign = np.argmin(dist, axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            members = x[assign == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
        centroids = _reseed_empty(x, centroids, assign)

    # provenance: nearest original instance per centroid
    dist = _sq_distances(centroids, x)
    nearest = np.argmin(dist, axis=1)
    origins = tuple(pool.origins[int(i)] for i in nearest)
    return InstancePool(centroids, origins)


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = x[first]
    d2 = np.sum((x - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:  # all remaining points coincide with a centroid
            centroids[j:] = x[first]
            break
        probs = d2 / total
        idx = int(rng.choice(n, p=probs))
        centroids[j] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centroids[j]) ** 2, axis=1))
    return centroids


def _sq_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    sq = (
        np.sum(a**2, axis=1)[:, None]
        - 2.0 * a @ b.T
        + np.sum(b**2, axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    return sq


def _reseed_empty(x: np.ndarray, centroids: np.ndarray, assign: np.ndarray) -> np.ndarray:
    """Relocate empty clusters to the points farthest from their centroid."""
    counts = np.bincount(assign, minlength=centroids.shape[0])
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return centroids
    dist_to_own = np.sqrt(np.sum((x - centroids[assign]) ** 2, axis=1))
    taken = set()
    for j in empty:
        order = np.argsort(-dist_to_own, kind="stable")
        pick = next(int(i) for i in order if int(i) not in taken)
        taken.add(pick)
        centroids[j] = x[pick]
        dist_to_own[pick] = -1.0
    return centroids


def kmeans_objective(pool_points: np.ndarray, centroids: np.ndarray) -> float:
    """Within-cluster sum of squares under nearest-centroid assignment."""
    dist = _sq_distances(np.asarray(pool_points, dtype=np.float64), centroids)
    return float(dist.min(axis=1).sum())
