"""Interpretability and evaluation reports, as data files and figures.

The maximizer report answers, for one input: which window did each
shapelet in the ensemble latch onto, and how much did it contribute to
the margin. The pattern report shows each shapelet's nonzero pool
coefficients aligned against the input by Euclidean distance. Both are
emitted as CSV and JSON; for series input they are also rendered as
figures mirroring the usual visualization (warm colors pushing toward
the positive class, cool toward the negative).
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boosting import EnsembleModel, empirical_margin_loss, predict
from .data import Bag, Sample
from .timeseries import TimeSeries, WindowConfig, extract_bag


def report_maximizers(model: EnsembleModel, data, cfg: WindowConfig | None = None) -> dict:
    """Per-shapelet maximizers and patterns for one bag or one series.

    For series input, offsets are window starts in the original series;
    pattern entries additionally get a nearest-alignment offset, the
    window minimizing Euclidean distance to the pool instance. The sum
    of maximizer contributions equals the predicted margin exactly.
    """
    if isinstance(data, TimeSeries):
        if cfg is None:
            cfg = WindowConfig(length=model.pool.dim)
        bag = extract_bag(data, cfg)
        series_values = [float(v) for v in data.values]
    elif isinstance(data, Bag):
        bag = data
        series_values = None
    else:
        raise TypeError(f"expected Bag or TimeSeries, got {type(data).__name__}")

    pred = predict(model, bag)
    maximizers = []
    for j, ((w, coeffs), (contribution, idx)) in enumerate(
        zip(model.shapelets, pred.per_shapelet)
    ):
        maximizers.append(
            {
                "shapelet": j,
                "weight": float(w),
                "contribution": float(contribution),
                "offset": int(idx),
                "values": [float(v) for v in bag.instances[idx]],
            }
        )

    patterns = []
    for j, (w, coeffs) in enumerate(model.shapelets):
        for z in np.flatnonzero(coeffs.alpha):
            z = int(z)
            entry = {
                "shapelet": j,
                "pool_index": z,
                "alpha": float(coeffs.alpha[z]),
                "product": float(w * coeffs.alpha[z]),
                "origin": list(model.pool.origins[z]) if model.pool.origins else None,
                "values": [float(v) for v in model.pool.instances[z]],
            }
            if series_values is not None:
                dists = np.sum((bag.instances - model.pool.instances[z]) ** 2, axis=1)
                entry["offset"] = int(np.argmin(dists))
            patterns.append(entry)

    return {
        "margin": pred.margin,
        "label": pred.label,
        "window_length": model.pool.dim,
        "series": series_values,
        "maximizers": maximizers,
        "patterns": patterns,
    }


def write_maximizer_csv(report: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["shapelet", "weight", "contribution", "offset", "values"])
        for row in report["maximizers"]:
            wr.writerow(
                [row["shapelet"], row["weight"], row["contribution"], row["offset"],
                 " ".join(repr(v) for v in row["values"])]
            )


def write_pattern_csv(report: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["shapelet", "pool_index", "alpha", "product", "offset", "values"])
        for row in report["patterns"]:
            wr.writerow(
                [row["shapelet"], row["pool_index"], row["alpha"], row["product"],
                 row.get("offset", ""), " ".join(repr(v) for v in row["values"])]
            )


def write_report_json(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@dataclass
class EvalReport:
    accuracy: float
    rows: list  # (true label, predicted label, margin) per bag
    confusion: dict
    seconds: float
    split: str = "unspecified"  # 'fixed-split' | 'cv' | ...

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "confusion": self.confusion,
            "n": len(self.rows),
            "seconds": self.seconds,
            "split": self.split,
            "per_bag": [
                {"true": t, "predicted": p, "margin": m} for t, p, m in self.rows
            ],
        }


def evaluate(model: EnsembleModel, sample: Sample, split: str = "unspecified") -> EvalReport:
    tic = time.perf_counter()
    rows = []
    conf = {"tp": 0, "tn": 0, "fp": 0, "fn": 0}
    for item in sample:
        pred = predict(model, item.bag)
        rows.append((item.label, pred.label, pred.margin))
        if item.label == 1:
            conf["tp" if pred.label == 1 else "fn"] += 1
        else:
            conf["fp" if pred.label == 1 else "tn"] += 1
    correct = conf["tp"] + conf["tn"]
    return EvalReport(
        accuracy=correct / len(sample),
        rows=rows,
        confusion=conf,
        seconds=time.perf_counter() - tic,
        split=split,
    )


def margin_loss_curve(model: EnsembleModel, sample: Sample, rhos) -> list:
    return [(float(r), empirical_margin_loss(model, sample, r)) for r in rhos]


def write_eval_json(report: EvalReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")


def write_predictions_csv(rows, path, with_true=True) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        if with_true:
            wr.writerow(["index", "true", "predicted", "margin"])
            for i, (t, p, m) in enumerate(rows):
                wr.writerow([i, t, p, repr(m)])
        else:
            wr.writerow(["index", "predicted", "margin"])
            for i, (p, m) in enumerate(rows):
                wr.writerow([i, p, repr(m)])


def write_history_csv(history, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(
            ["iteration", "gamma", "edge", "weak_objective",
             "master_primal", "master_dual", "d_min", "d_max", "d_sum", "seconds"]
        )
        for rec in history:
            wr.writerow(
                [rec.iteration, repr(rec.gamma), repr(rec.edge), repr(rec.weak_objective),
                 repr(rec.master_primal), repr(rec.master_dual), repr(rec.d_min),
                 repr(rec.d_max), repr(rec.d_sum), f"{rec.seconds:.6f}"]
            )


# ---------------------------------------------------------------------------
# figures (series input only)
# ---------------------------------------------------------------------------


def render_report_figures(report: dict, outdir) -> list:
    """Render maximizer and pattern figures next to the data files.

    Returns the written paths; empty when the report has no underlying
    series to draw against.
    """
    if report.get("series") is None:
        return []
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    series = np.asarray(report["series"])
    ell = report["window_length"]
    written = []

    def colormap(values):
        vmax = max((abs(v) for v in values), default=1.0) or 1.0
        cmap = plt.get_cmap("coolwarm")
        return [cmap(0.5 + 0.5 * v / vmax) for v in values]

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(series, color="black", lw=1.0, label="input series")
    colors = colormap([m["contribution"] for m in report["maximizers"]])
    for m, col in zip(report["maximizers"], colors):
        xs = np.arange(m["offset"], m["offset"] + ell)
        ax.plot(xs, series[xs], color=col, lw=2.5,
                label=f"shapelet {m['shapelet']}: {m['contribution']:+.4f}")
    ax.set_title(f"maximizing windows (margin {report['margin']:+.4f})")
    ax.legend(fontsize=7, loc="best")
    path = outdir / "maximizers.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    if report["patterns"]:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(series, color="black", lw=1.0, label="input series")
        colors = colormap([p["product"] for p in report["patterns"]])
        for p, col in zip(report["patterns"], colors):
            off = p.get("offset", 0)
            xs = np.arange(off, off + len(p["values"]))
            ax.plot(xs, p["values"], color=col, lw=2.0,
                    label=f"s{p['shapelet']} z{p['pool_index']}: {p['product']:+.4f}")
        ax.set_title("shapelet patterns at nearest alignment")
        ax.legend(fontsize=7, loc="best")
        path = outdir / "patterns.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written
