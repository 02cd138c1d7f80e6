"""Core multiple-instance data types: bags, labeled samples, and the instance pool.

An instance is a 1-d float vector; a bag is an ordered collection of
instances sharing one dimension. Everything is immutable after
construction so trained models can hold references safely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def as_instance(values) -> np.ndarray:
    """Coerce to a read-only 1-d float64 vector and validate it."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"instance must be a nonempty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("instance contains non-finite values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Bag:
    """Ordered, nonempty set of instances stored as an (n, dim) matrix.

    Construction checks shape only; finiteness is checked by
    ``validate_sample`` so that bad values can be reported with their
    coordinates instead of blowing up during ingestion.
    """

    instances: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.instances, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"bag must be a nonempty (n, dim) matrix, got shape {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "instances", arr)

    def __len__(self) -> int:
        return self.instances.shape[0]

    @property
    def dim(self) -> int:
        return self.instances.shape[1]


@dataclass(frozen=True)
class LabeledBag:
    bag: Bag
    label: int

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.label!r}")
        object.__setattr__(self, "label", int(self.label))


@dataclass(frozen=True)
class Sample:
    """A sequence of labeled bags; the training unit."""

    items: tuple

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise ValueError("sample is empty")
        for it in items:
            if not isinstance(it, LabeledBag):
                raise TypeError(f"sample items must be LabeledBag, got {type(it).__name__}")
        object.__setattr__(self, "items", items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def labels(self) -> np.ndarray:
        return np.array([it.label for it in self.items], dtype=np.int64)

    @property
    def bags(self) -> list:
        return [it.bag for it in self.items]

    @property
    def dim(self) -> int:
        return self.items[0].bag.dim


def make_sample(bags, labels) -> Sample:
    """Convenience constructor from parallel lists of bag matrices and labels."""
    if len(bags) != len(labels):
        raise ValueError("bags and labels length mismatch")
    items = []
    for b, y in zip(bags, labels):
        bag = b if isinstance(b, Bag) else Bag(np.asarray(b))
        items.append(LabeledBag(bag, int(y)))
    return Sample(tuple(items))


@dataclass(frozen=True)
class InstancePool:
    """Deduplicated union of all instances in a sample, in first-occurrence order.

    ``origins[i]`` records where pool entry i first appeared as a
    (bag index, within-bag index) pair, so interpretability reports can
    point back into the original data.
    """

    instances: np.ndarray
    origins: tuple = field(default=())

    def __post_init__(self):
        arr = np.asarray(self.instances, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError(f"pool must be a nonempty (n, dim) matrix, got shape {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "instances", arr)
        object.__setattr__(self, "origins", tuple(tuple(o) for o in self.origins))

    def __len__(self) -> int:
        return self.instances.shape[0]

    @property
    def dim(self) -> int:
        return self.instances.shape[1]


def build_pool(sample: Sample) -> InstancePool:
    """Collect every instance across the sample, dropping exact duplicates.

    Duplicates are detected by bitwise equality of the float vectors;
    the first occurrence (bag order, then within-bag order) is kept, so
    the pool order is deterministic.
    """
    if len(sample) == 0:
        raise ValueError("sample is empty")
    dim = sample.dim
    seen = {}
    rows = []
    origins = []
    for i, item in enumerate(sample):
        if item.bag.dim != dim:
            raise ValueError(f"bag {i} has dimension {item.bag.dim}, expected {dim}")
        if not np.all(np.isfinite(item.bag.instances)):
            raise ValueError(f"bag {i} contains non-finite values")
        for j, row in enumerate(item.bag.instances):
            key = row.tobytes()
            if key in seen:
                continue
            seen[key] = len(rows)
            rows.append(row)
            origins.append((i, j))
    return InstancePool(np.array(rows, dtype=np.float64), tuple(origins))


@dataclass
class ValidationReport:
    ok: bool
    problems: list

    def __bool__(self) -> bool:
        return self.ok


def validate_sample(sample) -> ValidationReport:
    """Check sample invariants and report every violation found.

    Unlike the constructors this never raises: it is meant to give a
    complete account of what is wrong with ingested data (dimension
    mismatches, non-finite entries, a missing class).
    """
    problems = []
    try:
        items = list(sample)
    except TypeError:
        return ValidationReport(False, ["sample is not iterable"])
    if not items:
        return ValidationReport(False, ["sample is empty"])

    dim = None
    labels = set()
    for i, item in enumerate(items):
        bag = item.bag
        labels.add(item.label)
        if len(bag) == 0:
            problems.append(f"bag {i} is empty")
            continue
        if dim is None:
            dim = bag.dim
        elif bag.dim != dim:
            problems.append(f"bag {i} has dimension {bag.dim}, expected {dim}")
        bad = np.argwhere(~np.isfinite(bag.instances))
        for r, c in bad:
            problems.append(f"bag {i} instance {r} coordinate {c} is non-finite")
    if len(labels) < 2:
        problems.append(f"single class: all labels are {labels.pop() if labels else 'absent'}")
    return ValidationReport(not problems, problems)
