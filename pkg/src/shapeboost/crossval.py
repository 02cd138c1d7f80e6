"""Stratified repeated cross-validation over the tuning grid."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .boosting import BoostConfig, lpboost_train, predict
from .data import Sample, build_pool
from .kernels import gaussian_kernel_spec
from .timeseries import WindowConfig, extract_sample, kmeans_representatives


@dataclass
class ExperimentGrid:
    sigmas: list
    nus: list
    length_fractions: list | None = None  # series data only
    folds: int = 5
    repeats: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.sigmas or not self.nus:
            raise ValueError("sigma and nu grids must be nonempty")
        if self.length_fractions is not None and not self.length_fractions:
            raise ValueError("length fraction grid must be nonempty")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


@dataclass
class CvCell:
    sigma: float
    nu: float
    length_fraction: float | None
    mean_accuracy: float
    std_accuracy: float
    n_runs: int


@dataclass
class CvResult:
    best: CvCell
    table: list = field(default_factory=list)


def stratified_folds(labels, folds: int, rng: np.random.Generator) -> list:
    """Deal each class's shuffled indices round-robin into ``folds`` buckets."""
    labels = np.asarray(labels)
    buckets = [[] for _ in range(folds)]
    for cls in (-1, 1):
        idx = np.flatnonzero(labels == cls)
        if idx.size < folds:
            raise ValueError(f"class {cls} has {idx.size} members, fewer than {folds} folds")
        idx = idx[rng.permutation(idx.size)]
        for pos, i in enumerate(idx):
            buckets[pos % folds].append(int(i))
    return [sorted(b) for b in buckets]


def cross_validate(
    data,
    grid: ExperimentGrid,
    template: BoostConfig | None = None,
    kmeans_k: int | None = None,
    znormalize: bool = False,
) -> CvResult:
    """Grid search by repeated stratified k-fold; fully seed-determined.

    ``data`` is a list of labeled TimeSeries (the length-fraction axis
    applies) or a Sample of bags (it is ignored). The winning cell has
    the best mean accuracy; ties prefer smaller sigma, then smaller
    window fraction, then smaller nu.
    """
    template = template or BoostConfig()
    is_series = not isinstance(data, Sample)
    items = list(data) if is_series else list(data.items)
    labels = [t.label for t in items] if is_series else [it.label for it in items]
    fracs = grid.length_fractions if (is_series and grid.length_fractions) else [None]

    # fold assignments are fixed per repeat, shared across cells
    plans = []
    for rep in range(grid.repeats):
        rng = np.random.default_rng(np.random.SeedSequence([grid.seed, rep]))
        plans.append((rep, stratified_folds(labels, grid.folds, rng)))

    cells = [(s, f, n) for s in grid.sigmas for f in fracs for n in grid.nus]
    table = []
    for sigma, frac, nu in cells:
        accs = []
        for rep, buckets in plans:
            for fold in range(grid.folds):
                test_idx = set(buckets[fold])
                train_items = [it for i, it in enumerate(items) if i not in test_idx]
                test_items = [it for i, it in enumerate(items) if i in test_idx]
                run_seed = int(
                    np.random.SeedSequence([grid.seed, rep, fold]).generate_state(1)[0]
                )
                cfg = replace(template, nu=nu, seed=run_seed)
                accs.append(
                    _fit_score(train_items, test_items, sigma, frac, cfg, kmeans_k,
                               znormalize, is_series)
                )
        accs = np.array(accs)
        table.append(
            CvCell(
                sigma=sigma,
                nu=nu,
                length_fraction=frac,
                mean_accuracy=float(accs.mean()),
                std_accuracy=float(accs.std()),
                n_runs=len(accs),
            )
        )

    best = None
    for cell in sorted(table, key=_tie_key):
        if best is None or cell.mean_accuracy > best.mean_accuracy:
            best = cell
    return CvResult(best=best, table=table)


def _tie_key(cell: CvCell):
    frac = cell.length_fraction if cell.length_fraction is not None else 0.0
    return (cell.sigma, frac, cell.nu)


def _fit_score(train_items, test_items, sigma, frac, cfg, kmeans_k, znormalize, is_series):
    if is_series:
        wcfg = WindowConfig(length=_resolve_len(train_items, frac), znormalize=znormalize)
        train_sample = extract_sample(train_items, wcfg)
        test_sample = extract_sample(test_items, wcfg)
    else:
        train_sample = Sample(tuple(train_items))
        test_sample = Sample(tuple(test_items))
    pool = build_pool(train_sample)
    if kmeans_k is not None:
        pool = kmeans_representatives(pool, kmeans_k, seed=cfg.seed)
    kernel = gaussian_kernel_spec(sigma)
    model = lpboost_train(train_sample, kernel, cfg, pool=pool).model
    correct = sum(1 for it in test_sample if predict(model, it.bag).label == it.label)
    return correct / len(test_sample)


def _resolve_len(series_items, frac) -> int:
    """Window length from a fraction; variable-length data uses the shortest series."""
    shortest = min(len(t) for t in series_items)
    if frac is None:
        raise ValueError("length fraction required for series data")
    return WindowConfig(length_fraction=frac).resolve(shortest)
