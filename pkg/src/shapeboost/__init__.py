"""Shapelet ensembles for multiple-instance and time-series classification.

Bags of instances are scored against learned shapelets (points of the
kernel feature space, represented by coefficients over the training
instance pool); an LP-boosting loop with a DC-programming weak learner
assembles them into a soft-margin convex combination.
"""

from .boosting import (
    BoostConfig,
    EnsembleModel,
    Prediction,
    TrainResult,
    empirical_margin_loss,
    load_model,
    lpboost_train,
    model_from_dict,
    model_to_dict,
    predict,
    save_model,
)
from .crossval import CvResult, ExperimentGrid, cross_validate
from .data import (
    Bag,
    InstancePool,
    LabeledBag,
    Sample,
    build_pool,
    make_sample,
    validate_sample,
)
from .datasets import DatasetSource, LoadedData, load_dataset
from .kernels import (
    GramMatrix,
    KernelSpec,
    gaussian_kernel_spec,
    gram_matrix,
    kernel_eval,
    linear_kernel_spec,
    precomputed_kernel_spec,
)
from .lp import LinearProgram, LpSolution, WeightDist, solve_lp, solve_restricted_master
from .report import EvalReport, evaluate, report_maximizers
from .timeseries import (
    TimeSeries,
    WindowConfig,
    extract_bag,
    extract_sample,
    kmeans_representatives,
)
from .weak import (
    ShapeletCoeffs,
    WeakLearnResult,
    dc_weak_learn,
    edge,
    init_one_hot,
    linearized_subproblem_l1,
    linearized_subproblem_l2,
    shapelet_score,
)

__version__ = "0.1.0"
