"""Command-line harness: train, predict, eval, cv, report."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .boosting import (
    BoostConfig,
    EnsembleModel,
    load_model,
    lpboost_train,
    save_model,
    training_error,
)
from .crossval import CvResult, ExperimentGrid, cross_validate
from .data import Sample, build_pool
from .datasets import DatasetSource, LoadedData, load_dataset
from .kernels import KernelSpec, gaussian_kernel_spec, linear_kernel_spec, precomputed_kernel_spec
from .report import (
    evaluate,
    render_report_figures,
    report_maximizers,
    write_eval_json,
    write_history_csv,
    write_maximizer_csv,
    write_pattern_csv,
    write_predictions_csv,
    write_report_json,
)
from .timeseries import WindowConfig, extract_sample, kmeans_representatives

_FMT_ALIASES = {"ucr": "ucr_ts", "ucr_ts": "ucr_ts", "bag": "bag_csv",
                "bag_csv": "bag_csv", "gram": "gram_csv", "gram_csv": "gram_csv"}


def _parse_label_map(text: str | None) -> dict | None:
    if not text:
        return None
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise ValueError(f"bad label mapping entry {part!r}; expected ORIG=-1 or ORIG=1")
        key, val = part.rsplit("=", 1)
        out[key.strip()] = int(val)
    return out


def _add_data_args(p, with_mapping=True):
    p.add_argument("--data", required=True, help="dataset file")
    p.add_argument("--format", required=True, choices=sorted(_FMT_ALIASES),
                   help="ucr (label-first series rows), bag (bag_id,label,features), "
                        "gram (kernel matrix; needs --labels)")
    p.add_argument("--labels", help="index/label file for the gram format")
    if with_mapping:
        p.add_argument("--label-map", help="explicit label mapping, e.g. 'cat=-1,dog=1'")


def _source(args, mapping_ok=True) -> DatasetSource:
    return DatasetSource(
        format=_FMT_ALIASES[args.format],
        path=args.data,
        label_mapping=_parse_label_map(getattr(args, "label_map", None)) if mapping_ok else None,
        labels_path=args.labels,
    )


def _window_config(args, loaded: LoadedData) -> WindowConfig | None:
    if not loaded.is_series:
        if args.length is not None or args.length_frac is not None:
            raise ValueError("--length/--length-frac only apply to series data")
        return None
    if (args.length is None) == (args.length_frac is None):
        raise ValueError("series data needs exactly one of --length / --length-frac")
    if args.length is not None:
        return WindowConfig(length=args.length, znormalize=args.znormalize)
    shortest = min(len(t) for t in loaded.series)
    ell = WindowConfig(length_fraction=args.length_frac).resolve(shortest)
    return WindowConfig(length=ell, znormalize=args.znormalize)


def _training_sample(loaded: LoadedData, wcfg: WindowConfig | None) -> Sample:
    if loaded.is_series:
        return extract_sample(loaded.series, wcfg)
    return loaded.sample


def _kernel_from_args(args, loaded: LoadedData) -> KernelSpec:
    if loaded.gram is not None:
        return precomputed_kernel_spec(loaded.gram)
    if args.kernel == "linear":
        return linear_kernel_spec()
    if args.sigma is None:
        raise ValueError("--sigma is required for the gaussian kernel "
                         "(K(x,y) = exp(-sigma * ||x-y||^2))")
    return gaussian_kernel_spec(args.sigma)


def _inference_inputs(args, model: EnsembleModel, require_two=False):
    """Load data for predict/eval/report, windowing series like training did."""
    gram = None
    if _FMT_ALIASES[args.format] == "gram_csv":
        loaded = load_dataset(_source(args), require_two_classes=require_two)
        gram = loaded.gram
    else:
        loaded = load_dataset(_source(args), require_two_classes=require_two)
    if loaded.is_series:
        meta = model.training_meta.get("window", {})
        wcfg = WindowConfig(
            length=int(meta.get("length", model.pool.dim)),
            znormalize=bool(meta.get("znormalize", False)),
        )
        sample = extract_sample(loaded.series, wcfg)
    else:
        sample = loaded.sample
    return loaded, sample, gram


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    loaded = load_dataset(_source(args))
    wcfg = _window_config(args, loaded)
    sample = _training_sample(loaded, wcfg)
    kernel = _kernel_from_args(args, loaded)

    pool = build_pool(sample)
    if args.kmeans_k is not None:
        if loaded.gram is not None:
            raise ValueError("--kmeans-k does not apply to precomputed gram data")
        pool = kmeans_representatives(pool, args.kmeans_k, seed=args.seed)

    config = BoostConfig(
        nu=args.nu,
        epsilon_weak=args.epsilon,
        epsilon_stop=args.epsilon_stop,
        max_iterations=args.max_iter,
        weak_variant=args.weak,
        restarts=args.restarts,
        seed=args.seed,
        weak_max_outer=args.weak_max_outer,
    )
    result = lpboost_train(sample, kernel, config, pool=pool)

    meta = dict(result.model.training_meta)
    meta["training_accuracy"] = 1.0 - training_error(result.model, sample)
    meta["kmeans_k"] = args.kmeans_k
    if wcfg is not None:
        meta["window"] = {"length": sample.dim, "znormalize": wcfg.znormalize}
    model = dataclasses.replace(result.model, training_meta=meta)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    save_model(model, outdir / "model.json")
    write_history_csv(result.history, outdir / "history.csv")
    print(f"trained {len(model.shapelets)} shapelets in {meta['iterations']} iterations "
          f"(stop: {result.stop_reason}, gamma {meta['final_gamma']:.6g})")
    print(f"training accuracy: {meta['training_accuracy']:.4f}")
    print(f"wrote {outdir / 'model.json'} and {outdir / 'history.csv'}")
    return 0


def _load_model_for(args) -> EnsembleModel:
    gram = None
    if getattr(args, "gram", None):
        rows = [[float(t) for t in line.replace(",", " ").split()]
                for line in Path(args.gram).read_text().splitlines() if line.strip()]
        gram = np.array(rows)
    return load_model(args.model, gram=gram)


def cmd_predict(args) -> int:
    model = _load_model_for(args)
    loaded, sample, _ = _inference_inputs(args, model, require_two=False)
    from .boosting import predict as predict_bag

    rows = []
    for item in sample:
        pred = predict_bag(model, item.bag)
        if loaded.labels_valid:
            rows.append((item.label, pred.label, pred.margin))
        else:
            rows.append((pred.label, pred.margin))
    write_predictions_csv(rows, args.out, with_true=loaded.labels_valid)
    print(f"wrote {args.out} ({len(rows)} predictions)")
    return 0


def cmd_eval(args) -> int:
    model = _load_model_for(args)
    loaded, sample, _ = _inference_inputs(args, model, require_two=True)
    report = evaluate(model, sample, split=args.split)
    write_eval_json(report, args.out)
    if args.predictions:
        write_predictions_csv(report.rows, args.predictions, with_true=True)
    print(f"accuracy: {report.accuracy:.4f} on {len(report.rows)} bags")
    print(f"wrote {args.out}")
    return 0


def cmd_cv(args) -> int:
    loaded = load_dataset(_source(args))
    grid = ExperimentGrid(
        sigmas=[float(s) for s in args.sigmas.split(",")],
        nus=[float(s) for s in args.nus.split(",")],
        length_fractions=(
            [float(s) for s in args.length_fracs.split(",")] if args.length_fracs else None
        ),
        folds=args.folds,
        repeats=args.repeats,
        seed=args.seed,
    )
    template = BoostConfig(
        epsilon_weak=args.epsilon,
        epsilon_stop=args.epsilon_stop,
        max_iterations=args.max_iter,
        weak_variant=args.weak,
        restarts=args.restarts,
        weak_max_outer=args.weak_max_outer,
    )
    data = loaded.series if loaded.is_series else loaded.sample
    if loaded.gram is not None:
        raise ValueError("cv does not support precomputed gram data (no sigma axis)")
    result = cross_validate(data, grid, template=template, kmeans_k=args.kmeans_k,
                            znormalize=args.znormalize)
    _write_cv_csv(result, args.out)
    b = result.best
    frac = "-" if b.length_fraction is None else b.length_fraction
    print(f"best cell: sigma={b.sigma} nu={b.nu} length_frac={frac} "
          f"accuracy {b.mean_accuracy:.4f} +/- {b.std_accuracy:.4f}")
    print(f"wrote {args.out}")
    return 0


def _write_cv_csv(result: CvResult, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["sigma", "nu", "length_fraction", "mean_accuracy", "std_accuracy", "n_runs"])
        for c in result.table:
            wr.writerow([c.sigma, c.nu,
                         "" if c.length_fraction is None else c.length_fraction,
                         repr(c.mean_accuracy), repr(c.std_accuracy), c.n_runs])


def cmd_report(args) -> int:
    model = _load_model_for(args)
    loaded, sample, _ = _inference_inputs(args, model, require_two=False)
    if not (0 <= args.index < len(sample)):
        raise ValueError(f"--index {args.index} outside dataset of size {len(sample)}")

    meta = model.training_meta.get("window", {})
    if loaded.is_series:
        wcfg = WindowConfig(length=int(meta.get("length", model.pool.dim)),
                            znormalize=bool(meta.get("znormalize", False)))
        report = report_maximizers(model, loaded.series[args.index], wcfg)
    else:
        report = report_maximizers(model, sample.items[args.index].bag)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_report_json(report, outdir / "report.json")
    write_maximizer_csv(report, outdir / "maximizers.csv")
    write_pattern_csv(report, outdir / "patterns.csv")
    written = [outdir / "report.json", outdir / "maximizers.csv", outdir / "patterns.csv"]
    if not args.no_figures:
        written += render_report_figures(report, outdir)
    print(f"margin {report['margin']:+.6f} -> label {report['label']:+d}")
    for p in written:
        print(f"wrote {p}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="shapeboost",
        description="Shapelet ensembles for multiple-instance and time-series "
                    "classification, trained by LP boosting.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_train_knobs(p):
        p.add_argument("--nu", type=float, default=0.2,
                       help="soft-margin parameter in (0,1] (default 0.2)")
        p.add_argument("--weak", choices=["l1", "l2"], default="l1",
                       help="weak-learner ball: sparse l1 (default) or gram l2")
        p.add_argument("--epsilon", type=float, default=1e-4,
                       help="weak-learner convergence threshold (default 1e-4)")
        p.add_argument("--epsilon-stop", type=float, default=1e-5,
                       help="boosting stop slack over gamma (default 1e-5)")
        p.add_argument("--max-iter", type=int, default=100,
                       help="boosting iteration cap (default 100)")
        p.add_argument("--restarts", type=int, default=1,
                       help="weak-learner restarts from top one-hot inits (default 1)")
        p.add_argument("--weak-max-outer", type=int, default=50, help=argparse.SUPPRESS)
        p.add_argument("--kmeans-k", type=int, default=None,
                       help="reduce the instance pool to k centroids")
        p.add_argument("--seed", type=int, default=0, help="seed for k-means and derived runs")

    def add_window_knobs(p):
        p.add_argument("--length", type=int, default=None, help="window length for series data")
        p.add_argument("--length-frac", type=float, default=None,
                       help="window length as a fraction of series length")
        p.add_argument("--znormalize", action="store_true",
                       help="z-normalize each window independently")

    p = sub.add_parser("train", help="train a model and write model.json + history.csv")
    _add_data_args(p)
    add_window_knobs(p)
    p.add_argument("--kernel", choices=["gaussian", "linear"], default="gaussian")
    p.add_argument("--sigma", type=float, default=None,
                   help="gaussian kernel coefficient: K = exp(-sigma * ||x-y||^2)")
    add_train_knobs(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write predictions CSV for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--gram", help="gram matrix file (models trained on precomputed kernels)")
    _add_data_args(p, with_mapping=True)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="evaluate a model and write an EvalReport JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--gram", help="gram matrix file (models trained on precomputed kernels)")
    _add_data_args(p)
    p.add_argument("--split", default="fixed-split",
                   help="protocol tag recorded in the report (default fixed-split)")
    p.add_argument("--predictions", help="also write per-bag predictions CSV here")
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cv", help="grid search by repeated stratified cross-validation")
    _add_data_args(p)
    p.add_argument("--sigmas", required=True, help="comma-separated gaussian sigmas")
    p.add_argument("--nus", required=True, help="comma-separated nu values")
    p.add_argument("--length-fracs", help="comma-separated window fractions (series data)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--znormalize", action="store_true")
    add_train_knobs(p)
    p.add_argument("--out", required=True, help="output CSV path for the grid table")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("report", help="maximizer/pattern report (CSV, JSON, figures)")
    p.add_argument("--model", required=True)
    p.add_argument("--gram", help="gram matrix file (models trained on precomputed kernels)")
    _add_data_args(p)
    p.add_argument("--index", type=int, default=0, help="which series/bag to explain")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface with context, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
