"""LPBoost column generation over shapelet weak hypotheses.

The driver alternates two steps: ask the weak learner for the shapelet
with the best edge under the current bag distribution, and re-solve the
restricted master problem over all hypotheses generated so far. The
master's optimal value gamma can only grow as columns are added; once
the newest hypothesis's edge fails to beat gamma by ``epsilon_stop``
the loop stops and the master's dual multipliers become the ensemble
weights.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Bag, InstancePool, Sample, build_pool, validate_sample
from .kernels import GramMatrix, KernelSpec, gram_matrix, precomputed_kernel_spec
from .lp import WeightDist, solve_restricted_master, uniform_weights
from .weak import BagKernels, ShapeletCoeffs, dc_weak_learn, shapelet_score

MODEL_FORMAT = "shapeboost-model"
MODEL_FORMAT_VERSION = 1
WEIGHT_PRUNE_TOL = 1e-12


@dataclass
class BoostConfig:
    nu: float = 0.2
    epsilon_weak: float = 1e-4
    epsilon_stop: float = 1e-5
    max_iterations: int = 100
    weak_variant: str = "l1"
    restarts: int = 1
    seed: int = 0
    weak_max_outer: int = 50

    def __post_init__(self):
        if not (0.0 < self.nu <= 1.0):
            raise ValueError(f"nu must be in (0, 1], got {self.nu}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.weak_variant not in ("l1", "l2"):
            raise ValueError(f"weak_variant must be 'l1' or 'l2', got {self.weak_variant!r}")
        if self.epsilon_weak <= 0:
            raise ValueError("epsilon_weak must be positive")


@dataclass(frozen=True)
class EnsembleModel:
    """Convex combination of shapelets: the trained hypothesis."""

    shapelets: tuple  # of (weight, ShapeletCoeffs)
    kernel: KernelSpec
    pool: InstancePool
    nu: float
    norm_kind: str
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.shapelets:
            raise ValueError("model has no shapelets")
        total = sum(w for w, _ in self.shapelets)
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"weights sum to {total}, expected 1")
        for w, _ in self.shapelets:
            if w < 0:
                raise ValueError("negative shapelet weight")

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.shapelets])


@dataclass
class IterationRecord:
    iteration: int
    edge: float
    weak_objective: float
    gamma: float
    master_primal: float
    master_dual: float
    d_min: float
    d_max: float
    d_sum: float
    seconds: float


@dataclass
class TrainResult:
    model: EnsembleModel
    history: list
    stop_reason: str
    terminal_edge: float


def lpboost_train(
    sample: Sample,
    kernel: KernelSpec,
    config: BoostConfig,
    pool: InstancePool | None = None,
) -> TrainResult:
    """Train a shapelet ensemble by column generation.

    ``pool`` defaults to the full deduplicated instance pool of the
    sample; pass a reduced pool (e.g. k-means representatives) to trade
    accuracy for speed.
    """
    report = validate_sample(sample)
    if not report.ok:
        raise ValueError("invalid sample: " + "; ".join(report.problems))
    if pool is None:
        pool = build_pool(sample)
    cache = BagKernels(sample, pool, kernel)
    gram: GramMatrix | None = None
    if config.weak_variant == "l2":
        gram = gram_matrix(kernel, pool)

    m = len(sample)
    d: WeightDist = uniform_weights(m)
    gamma = 0.0
    labels = sample.labels

    eval_cols = []
    hypotheses = []
    history: list[IterationRecord] = []
    weights = None
    stop_reason = "max_iterations"
    terminal_edge = np.nan
    fallback_alpha: ShapeletCoeffs | None = None

    for t in range(1, config.max_iterations + 1):
        tic = time.perf_counter()
        res = dc_weak_learn(
            sample,
            d,
            pool,
            kernel,
            variant=config.weak_variant,
            epsilon=config.epsilon_weak,
            max_outer=config.weak_max_outer,
            restarts=config.restarts,
            gram=gram,
            cache=cache,
        )
        if t == 1:
            fallback_alpha = res.alpha
        if res.edge <= gamma + config.epsilon_stop:
            stop_reason = "converged"
            terminal_edge = res.edge
            break

        eval_cols.append(labels * cache.scores(res.alpha.alpha))
        hypotheses.append(res.alpha)
        ms = solve_restricted_master(np.column_stack(eval_cols), config.nu)
        gamma = ms.gamma
        d = ms.d
        weights = ms.w
        terminal_edge = res.edge
        history.append(
            IterationRecord(
                iteration=t,
                edge=res.edge,
                weak_objective=-res.edge,
                gamma=gamma,
                master_primal=ms.primal_objective,
                master_dual=ms.dual_objective,
                d_min=float(d.values.min()),
                d_max=float(d.values.max()),
                d_sum=float(d.values.sum()),
                seconds=time.perf_counter() - tic,
            )
        )

    pruned = 0
    if not hypotheses:
        # the very first hypothesis already failed the stopping test;
        # keep it alone rather than returning an empty combination
        pairs = [(1.0, fallback_alpha)]
    else:
        keep = [(float(w), h) for w, h in zip(weights, hypotheses) if w > WEIGHT_PRUNE_TOL]
        pruned = len(hypotheses) - len(keep)
        if not keep:  # degenerate master; fall back to the best single hypothesis
            keep = [(1.0, hypotheses[int(np.argmax(weights))])]
        total = sum(w for w, _ in keep)
        pairs = [(w / total, h) for w, h in keep]

    meta = {
        "iterations": len(history),
        "final_gamma": float(gamma),
        "terminal_edge": float(terminal_edge),
        "stop_reason": stop_reason,
        "pruned_hypotheses": pruned,
        "nu": config.nu,
        "weak_variant": config.weak_variant,
        "seed": config.seed,
    }
    model = EnsembleModel(
        shapelets=tuple(pairs),
        kernel=kernel,
        pool=pool,
        nu=config.nu,
        norm_kind=config.weak_variant,
        training_meta=meta,
    )
    return TrainResult(model, history, stop_reason, float(terminal_edge))


@dataclass
class Prediction:
    label: int
    margin: float
    per_shapelet: list  # of (weighted score, maximizer index)


def predict(model: EnsembleModel, bag: Bag) -> Prediction:
    """Ensemble margin and sign for one bag; zero margin counts as +1."""
    per = []
    margin = 0.0
    for w, coeffs in model.shapelets:
        val, idx = shapelet_score(coeffs, bag, model.pool, model.kernel)
        per.append((w * val, idx))
        margin += w * val
    label = 1 if margin >= 0.0 else -1
    return Prediction(label=label, margin=float(margin), per_shapelet=per)


def empirical_margin_loss(model: EnsembleModel, sample: Sample, rho: float) -> float:
    """Fraction of bags whose signed margin falls below rho."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    bad = 0
    for item in sample:
        if item.label * predict(model, item.bag).margin < rho:
            bad += 1
    return bad / len(sample)


def training_error(model: EnsembleModel, sample: Sample) -> float:
    wrong = sum(1 for it in sample if predict(model, it.bag).label != it.label)
    return wrong / len(sample)


# ---------------------------------------------------------------------------
# persistence: a versioned JSON document with round-trip floats
# ---------------------------------------------------------------------------


def model_to_dict(model: EnsembleModel) -> dict:
    kernel = {"kind": model.kernel.kind}
    if model.kernel.kind == "gaussian":
        kernel["sigma"] = model.kernel.sigma
    shapelets = []
    for w, coeffs in model.shapelets:
        nz = np.flatnonzero(coeffs.alpha)
        shapelets.append(
            {
                "weight": float(w),
                "alpha": [[int(i), float(coeffs.alpha[i])] for i in nz],
            }
        )
    return {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "kernel": kernel,
        "norm_kind": model.norm_kind,
        "nu": model.nu,
        "pool": {
            "instances": [[float(v) for v in row] for row in model.pool.instances],
            "origins": [[int(a), int(b)] for a, b in model.pool.origins],
        },
        "shapelets": shapelets,
        "training_meta": model.training_meta,
    }


def model_from_dict(doc: dict, gram=None) -> EnsembleModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a shapeboost model document")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('format_version')}")
    kern = doc["kernel"]
    if kern["kind"] == "gaussian":
        kernel = KernelSpec("gaussian", sigma=float(kern["sigma"]))
    elif kern["kind"] == "linear":
        kernel = KernelSpec("linear")
    else:
        if gram is None:
            raise ValueError("model uses a precomputed kernel; its matrix must be supplied")
        kernel = precomputed_kernel_spec(gram)
    pool = InstancePool(
        np.array(doc["pool"]["instances"], dtype=np.float64),
        tuple(tuple(o) for o in doc["pool"]["origins"]),
    )
    n_pool = len(pool)
    pairs = []
    for sh in doc["shapelets"]:
        alpha = np.zeros(n_pool)
        for i, v in sh["alpha"]:
            alpha[int(i)] = float(v)
        pairs.append((float(sh["weight"]), ShapeletCoeffs(alpha, doc["norm_kind"])))
    return EnsembleModel(
        shapelets=tuple(pairs),
        kernel=kernel,
        pool=pool,
        nu=float(doc["nu"]),
        norm_kind=doc["norm_kind"],
        training_meta=dict(doc.get("training_meta", {})),
    )


def save_model(model: EnsembleModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True, indent=2) + "\n")


def load_model(path, gram=None) -> EnsembleModel:
    return model_from_dict(json.loads(Path(path).read_text()), gram=gram)
