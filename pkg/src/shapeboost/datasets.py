"""File ingestion: UCR-style series files, bag CSVs, and precomputed Gram data.

Formats
-------
ucr_ts   one series per line, label first, comma- or whitespace-delimited;
         series lengths may differ between lines.
bag_csv  rows of (bag_id, label, feature...); rows sharing a bag_id form
         one bag, bags ordered by first appearance.
gram_csv a square kernel matrix file plus an index file with rows of
         (bag_id, label, matrix_row_index); instances are indices into
         the matrix.

Raw labels are mapped onto {-1, +1}. Without an explicit mapping the
lexicographically smaller of the two observed label tokens becomes -1.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Bag, LabeledBag, Sample
from .timeseries import TimeSeries

FORMATS = ("ucr_ts", "bag_csv", "gram_csv")


@dataclass
class DatasetSource:
    format: str
    path: str
    label_mapping: dict | None = None
    labels_path: str | None = None  # gram_csv only

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(f"unknown dataset format {self.format!r}; expected one of {FORMATS}")
        if self.format == "gram_csv" and not self.labels_path:
            raise ValueError("gram_csv needs labels_path (bag_id, label, index rows)")


@dataclass
class LoadedData:
    """What came off disk: labeled series, or a bag sample, or both-ish."""

    series: list | None = None
    sample: Sample | None = None
    gram: np.ndarray | None = None
    label_map: dict | None = None
    labels_valid: bool = True

    @property
    def is_series(self) -> bool:
        return self.series is not None

    @property
    def labels(self) -> list:
        if self.is_series:
            return [t.label for t in self.series]
        return [it.label for it in self.sample]


class DatasetError(ValueError):
    pass


def _tokens(line: str) -> list:
    if "," in line:
        return [t.strip() for t in line.split(",") if t.strip()]
    return line.split()


def _resolve_label_map(raw_labels, mapping: dict | None, require_two: bool = True):
    """Map raw label tokens onto -1/+1; returns (map, valid).

    With ``require_two`` False a single observed label is tolerated (the
    prediction path, where true labels may be dummies): everything maps
    to +1 and the labels are flagged invalid.
    """
    observed = []
    for lab in raw_labels:
        if lab not in observed:
            observed.append(lab)
    if mapping is not None:
        mapped = set()
        for lab in observed:
            if lab not in mapping:
                raise DatasetError(f"label {lab!r} missing from label mapping")
            v = int(mapping[lab])
            if v not in (-1, 1):
                raise DatasetError(f"label mapping must target -1/+1, got {v}")
            mapped.add(v)
        if require_two and mapped != {-1, 1}:
            raise DatasetError("label mapping must cover both classes among observed labels")
        return dict(mapping), True
    if len(observed) == 1 and not require_two:
        return {observed[0]: 1}, False
    if len(observed) != 2:
        raise DatasetError(
            f"expected exactly two label values, found {len(observed)}: {sorted(observed)}"
        )
    lo, hi = sorted(observed)
    return {lo: -1, hi: 1}, True


def load_dataset(source: DatasetSource, require_two_classes: bool = True) -> LoadedData:
    """Parse the source files; errors carry 1-based line numbers."""
    if source.format == "ucr_ts":
        return _load_ucr(source, require_two_classes)
    if source.format == "bag_csv":
        return _load_bag_csv(source, require_two_classes)
    return _load_gram(source, require_two_classes)


def _load_ucr(source: DatasetSource, require_two: bool = True) -> LoadedData:
    raw = []
    for lineno, line in enumerate(Path(source.path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        toks = _tokens(line)
        if len(toks) < 2:
            raise DatasetError(f"{source.path}:{lineno}: need a label and at least one value")
        try:
            values = np.array([float(t) for t in toks[1:]])
        except ValueError as exc:
            raise DatasetError(f"{source.path}:{lineno}: {exc}") from None
        raw.append((lineno, toks[0], values))
    if not raw:
        raise DatasetError(f"{source.path}: no data lines")
    label_map, valid = _resolve_label_map(
        [lab for _, lab, _ in raw], source.label_mapping, require_two
    )
    series = []
    for lineno, lab, values in raw:
        try:
            series.append(TimeSeries(values, label=label_map[lab]))
        except (KeyError, ValueError) as exc:
            raise DatasetError(f"{source.path}:{lineno}: {exc}") from None
    return LoadedData(series=series, label_map=label_map, labels_valid=valid)


def _load_bag_csv(source: DatasetSource, require_two: bool = True) -> LoadedData:
    groups: dict = {}
    order = []
    width = None
    for lineno, line in enumerate(Path(source.path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        toks = _tokens(line)
        if len(toks) < 3:
            raise DatasetError(f"{source.path}:{lineno}: need bag_id, label, and features")
        bag_id, lab = toks[0], toks[1]
        try:
            feats = [float(t) for t in toks[2:]]
        except ValueError as exc:
            raise DatasetError(f"{source.path}:{lineno}: {exc}") from None
        if width is None:
            width = len(feats)
        elif len(feats) != width:
            raise DatasetError(
                f"{source.path}:{lineno}: ragged row, {len(feats)} features, expected {width}"
            )
        if bag_id not in groups:
            groups[bag_id] = (lab, [])
            order.append(bag_id)
        else:
            if groups[bag_id][0] != lab:
                raise DatasetError(f"{source.path}:{lineno}: bag {bag_id!r} has conflicting labels")
        groups[bag_id][1].append(feats)
    if not order:
        raise DatasetError(f"{source.path}: no data lines")
    label_map, valid = _resolve_label_map(
        [groups[b][0] for b in order], source.label_mapping, require_two
    )
    items = [
        LabeledBag(Bag(np.array(groups[b][1])), label_map[groups[b][0]]) for b in order
    ]
    return LoadedData(sample=Sample(tuple(items)), label_map=label_map, labels_valid=valid)


def _load_gram(source: DatasetSource, require_two: bool = True) -> LoadedData:
    rows = []
    for lineno, line in enumerate(Path(source.path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(t) for t in _tokens(line)])
        except ValueError as exc:
            raise DatasetError(f"{source.path}:{lineno}: {exc}") from None
    gram = np.array(rows)
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise DatasetError(f"{source.path}: gram matrix must be square, got {gram.shape}")

    groups: dict = {}
    order = []
    for lineno, line in enumerate(Path(source.labels_path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        toks = _tokens(line)
        if len(toks) != 3:
            raise DatasetError(f"{source.labels_path}:{lineno}: need bag_id, label, index")
        bag_id, lab, idx_tok = toks
        try:
            idx = int(idx_tok)
        except ValueError:
            raise DatasetError(f"{source.labels_path}:{lineno}: bad index {idx_tok!r}") from None
        if not (0 <= idx < gram.shape[0]):
            raise DatasetError(f"{source.labels_path}:{lineno}: index {idx} outside gram matrix")
        if bag_id not in groups:
            groups[bag_id] = (lab, [])
            order.append(bag_id)
        elif groups[bag_id][0] != lab:
            raise DatasetError(f"{source.labels_path}:{lineno}: bag {bag_id!r} has conflicting labels")
        groups[bag_id][1].append(idx)
    if not order:
        raise DatasetError(f"{source.labels_path}: no data lines")
    label_map, valid = _resolve_label_map(
        [groups[b][0] for b in order], source.label_mapping, require_two
    )
    items = []
    for b in order:
        lab, idxs = groups[b]
        items.append(LabeledBag(Bag(np.array(idxs, dtype=np.float64).reshape(-1, 1)), label_map[lab]))
    return LoadedData(sample=Sample(tuple(items)), gram=gram, label_map=label_map, labels_valid=valid)
