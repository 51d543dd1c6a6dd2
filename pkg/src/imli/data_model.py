"""Tabular data loading, column typing, partitioning, and split/fold plans.

Loads CSV files into a typed :class:`RawDataset`, chops sample indices into
equal-size partitions for incremental training, and produces holdout plus
cross-validation folds. Everything is deterministic under an integer seed.
"""

from __future__ import annotations

import csv
import math
import random
import statistics
from dataclasses import dataclass, field

from imli.errors import DataError, UsageError

KIND_BINARY = "binary"
KIND_CATEGORICAL = "categorical"
KIND_CONTINUOUS = "continuous"

# Cell spellings treated as absent values (UCI files commonly use "?").
MISSING_TOKENS = frozenset({"", "?", "NA", "N/A", "NaN", "nan"})

# Partition-size window used by the automatic partition-count rule.
AUTO_MIN_PARTITION = 8
AUTO_MAX_PARTITION = 512


@dataclass(frozen=True)
class RawDataset:
    """A cleaned tabular dataset with typed columns and a binary label.

    ``rows`` holds feature cells only (floats for binary/continuous columns,
    strings for categorical ones); ``labels`` is the 0/1 vector obtained by
    matching the raw label text against ``positive_label``.
    """

    column_names: tuple[str, ...]
    column_kinds: tuple[str, ...]
    rows: tuple[tuple[object, ...], ...]
    labels: tuple[int, ...]
    label_column: int
    positive_label: str
    label_values: tuple[str, str]

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.column_names

    def __post_init__(self):
        if self.n < 1:
            raise DataError("dataset is empty after cleaning")
        for row in self.rows:
            if len(row) != len(self.column_names):
                raise DataError("row width does not match column count")


@dataclass(frozen=True)
class PartitionPlan:
    """Assignment of each sample index to one of ``p`` partitions.

    ``assignment[i]`` is the 1-based partition id of sample ``i``; partitions
    are processed in order ``1..p``.
    """

    p: int
    assignment: tuple[int, ...]

    def indices(self, partition: int) -> list[int]:
        """Sample indices of one partition, in original dataset order."""
        return [i for i, a in enumerate(self.assignment) if a == partition]

    def sizes(self) -> list[int]:
        counts = [0] * self.p
        for a in self.assignment:
            counts[a - 1] += 1
        return counts


@dataclass(frozen=True)
class SplitSpec:
    """Holdout / cross-validation geometry for the evaluation protocol."""

    holdout_fraction: float = 0.1
    folds: int = 10
    repetitions: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.holdout_fraction < 1.0:
            raise UsageError("holdout_fraction must be in (0,1)")
        if self.folds < 2:
            raise UsageError("folds must be >= 2")


def _parse_cell(text: str) -> float | None:
    try:
        value = float(text)
    except ValueError:
        return None
    if math.isnan(value) or math.isinf(value):
        return None
    return value


def load_csv(path, label: str, positive_label: str, impute: bool = False) -> RawDataset:
    """Read a CSV file (RFC 4180, UTF-8, header row) into a RawDataset.

    Column kinds are inferred from the cells: all-numeric columns are
    continuous unless their values lie in {0,1} (binary); anything else is
    categorical. Missing cells are a hard error naming the offending
    row/column unless ``impute`` is set, in which case they are replaced by
    the column mode (categorical/binary) or median (continuous). Missing
    label cells are always an error.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: file is empty") from None
            raw_rows = [row for row in reader if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    if label not in header:
        raise DataError(f"label column {label!r} not found in header {header}")
    label_idx = header.index(label)

    for r, row in enumerate(raw_rows):
        if len(row) != len(header):
            raise DataError(f"row {r + 2}: expected {len(header)} cells, got {len(row)}")

    labels_raw = [row[label_idx].strip() for row in raw_rows]
    for r, cell in enumerate(labels_raw):
        if cell in MISSING_TOKENS:
            raise DataError(f"row {r + 2}: missing label value")
    distinct = sorted(set(labels_raw))
    if len(distinct) < 2:
        raise DataError(f"label column {label!r} has fewer than 2 values: {distinct}")
    if positive_label not in distinct:
        raise DataError(f"positive label {positive_label!r} not among label values {distinct}")
    # More than two raw values is read as one-vs-rest against the named
    # positive class; the mapped label is then binary by construction.

    feature_idx = [j for j in range(len(header)) if j != label_idx]
    columns: list[list[str]] = [[row[j].strip() for row in raw_rows] for j in feature_idx]

    kinds: list[str] = []
    parsed_cols: list[list[object]] = []
    for pos, cells in enumerate(columns):
        name = header[feature_idx[pos]]
        present = [c for c in cells if c not in MISSING_TOKENS]
        missing_at = [r for r, c in enumerate(cells) if c in MISSING_TOKENS]
        if missing_at and not impute:
            raise DataError(
                f"row {missing_at[0] + 2}, column {name!r}: missing value (rerun with --impute)"
            )
        numeric = [_parse_cell(c) for c in present]
        if present and all(v is not None for v in numeric):
            if set(numeric) <= {0.0, 1.0}:
                kind = KIND_BINARY
                fill = _column_mode(numeric) if numeric else 0.0
            else:
                kind = KIND_CONTINUOUS
                fill = statistics.median(numeric) if numeric else 0.0
            values = iter(numeric)
            parsed = [fill if c in MISSING_TOKENS else next(values) for c in cells]
        else:
            kind = KIND_CATEGORICAL
            fill = _column_mode(present) if present else ""
            parsed = [fill if c in MISSING_TOKENS else c for c in cells]
        kinds.append(kind)
        parsed_cols.append(parsed)

    rows = tuple(
        tuple(parsed_cols[pos][r] for pos in range(len(feature_idx)))
        for r in range(len(raw_rows))
    )
    labels = tuple(1 if cell == positive_label else 0 for cell in labels_raw)
    names = tuple(header[j] for j in feature_idx)
    others = [v for v in distinct if v != positive_label]
    negative = others[0] if len(others) == 1 else f"not-{positive_label}"
    return RawDataset(
        column_names=names,
        column_kinds=tuple(kinds),
        rows=rows,
        labels=labels,
        label_column=label_idx,
        positive_label=positive_label,
        label_values=(positive_label, negative),
    )


def _column_mode(values):
    counts: dict = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def auto_partition_count(n: int) -> int:
    """Partition count keeping sizes within [8, 512] where possible."""
    if n < 1:
        raise UsageError("n must be >= 1")
    upper = max(1, n // AUTO_MIN_PARTITION)
    return max(1, min(math.ceil(n / AUTO_MAX_PARTITION), upper))


def make_partitions(n: int, p: int, seed: int, labels=None, stratify: bool = False) -> PartitionPlan:
    """Split ``n`` sample indices into ``p`` near-equal partitions.

    Indices are shuffled deterministically by ``seed`` and chunked
    contiguously; the first ``n mod p`` partitions receive one extra sample.
    With ``stratify``, samples are dealt class by class so every partition
    keeps roughly the global label mix (sizes still differ by at most 1).
    """
    if p < 1:
        raise UsageError(f"partition count must be >= 1, got {p}")
    if p > n:
        raise UsageError(f"partition count {p} exceeds sample count {n}")
    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    if stratify:
        if labels is None:
            raise UsageError("stratified partitioning requires labels")
        order = [i for i in order if labels[i] == 1] + [i for i in order if labels[i] == 0]
        assignment = [0] * n
        for pos, i in enumerate(order):
            assignment[i] = pos % p + 1
        return PartitionPlan(p=p, assignment=tuple(assignment))
    base, extra = divmod(n, p)
    assignment = [0] * n
    start = 0
    for part in range(1, p + 1):
        size = base + (1 if part <= extra else 0)
        for i in order[start : start + size]:
            assignment[i] = part
        start += size
    return PartitionPlan(p=p, assignment=tuple(assignment))


def split_and_fold(n: int, spec: SplitSpec, repetition: int = 0):
    """Build one repetition's holdout set and (train, validation) folds.

    Returns ``(holdout, folds)`` where ``folds`` is a list of
    ``(train_indices, validation_indices)`` pairs partitioning the non-holdout
    pool. Repetition ``r`` uses seed ``spec.seed + r`` so repeated splits draw
    distinct holdouts.
    """
    if n < spec.folds + 1:
        raise DataError(f"n={n} too small for {spec.folds} folds")
    rng = random.Random(spec.seed + repetition)
    order = list(range(n))
    rng.shuffle(order)
    h = max(1, int(round(n * spec.holdout_fraction)))
    if n - h < spec.folds:
        raise DataError(f"n={n} too small for holdout {h} plus {spec.folds} folds")
    holdout = sorted(order[:h])
    pool = order[h:]
    base, extra = divmod(len(pool), spec.folds)
    folds = []
    start = 0
    for f in range(spec.folds):
        size = base + (1 if f < extra else 0)
        validation = pool[start : start + size]
        train = pool[:start] + pool[start + size :]
        folds.append((sorted(train), sorted(validation)))
        start += size
    return holdout, folds


def dump_indices(path, indices) -> None:
    """Write indices one per line (0-based), for ``--dump-splits``."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in indices:
            fh.write(f"{i}\n")
