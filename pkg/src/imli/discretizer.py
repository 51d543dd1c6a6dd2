"""Binarization of tabular columns into Boolean feature columns.

Categorical columns are one-hot encoded (optionally with negated complement
columns), continuous columns are compared against quantile thresholds, and
every produced Boolean column carries provenance: source column, comparison
operator, threshold value, and a sibling group shared by threshold columns
derived from the same source with the same operator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from imli.data_model import KIND_BINARY, KIND_CATEGORICAL, KIND_CONTINUOUS, RawDataset
from imli.errors import DataError

BOOL_POS = "bool_pos"
BOOL_NEG = "bool_neg"
CAT_EQ = "cat_eq"
CAT_NEQ = "cat_neq"
THR_GE = "thr_ge"
THR_LT = "thr_lt"

OP_GE = "≥"
OP_LT = "<"

DEFAULT_BINS = 4


@dataclass(frozen=True)
class LiteralMeta:
    """Provenance of one Boolean feature column.

    ``tval``/``op``/``sibling_group`` are set only for threshold columns;
    ``category`` only for one-hot columns. ``sibling_group`` is shared by all
    threshold columns cut from the same source column with the same operator.
    """

    source_column: int
    source_name: str
    kind: str
    category: str | None = None
    tval: float | None = None

    def __post_init__(self):
        thresholded = self.kind in (THR_GE, THR_LT)
        if thresholded != (self.tval is not None):
            raise ValueError("tval must be set exactly for threshold kinds")
        if (self.kind in (CAT_EQ, CAT_NEQ)) != (self.category is not None):
            raise ValueError("category must be set exactly for one-hot kinds")

    @property
    def op(self) -> str | None:
        if self.kind == THR_GE:
            return OP_GE
        if self.kind == THR_LT:
            return OP_LT
        return None

    @property
    def sibling_group(self) -> str | None:
        if self.kind == THR_GE:
            return f"c{self.source_column}:ge"
        if self.kind == THR_LT:
            return f"c{self.source_column}:lt"
        return None

    def display(self) -> str:
        """Human-readable condition, e.g. ``petal length ≥ 1.7``."""
        if self.kind == BOOL_POS:
            return f"is {self.source_name}"
        if self.kind == BOOL_NEG:
            return f"is not {self.source_name}"
        if self.kind == CAT_EQ:
            return f"{self.source_name} = {self.category}"
        if self.kind == CAT_NEQ:
            return f"{self.source_name} is not {self.category}"
        return f"{self.source_name} {self.op} {format_threshold(self.tval)}"


def format_threshold(value: float) -> str:
    text = f"{value:g}"
    return text


def siblings(a: LiteralMeta, b: LiteralMeta) -> bool:
    """True when two threshold columns share source column and operator."""
    ga, gb = a.sibling_group, b.sibling_group
    return ga is not None and ga == gb


def complement_meta(meta: LiteralMeta) -> LiteralMeta:
    """The provenance of the logically negated condition."""
    flipped = {
        BOOL_POS: BOOL_NEG,
        BOOL_NEG: BOOL_POS,
        CAT_EQ: CAT_NEQ,
        CAT_NEQ: CAT_EQ,
        THR_GE: THR_LT,
        THR_LT: THR_GE,
    }[meta.kind]
    return LiteralMeta(
        source_column=meta.source_column,
        source_name=meta.source_name,
        kind=flipped,
        category=meta.category,
        tval=meta.tval,
    )


@dataclass(frozen=True)
class BinarizedDataset:
    """Boolean design matrix ``X`` (n × m′) with labels and column metadata."""

    X: np.ndarray
    y: np.ndarray
    meta: tuple[LiteralMeta, ...]

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def m_prime(self) -> int:
        return int(self.X.shape[1])

    def subset(self, indices) -> "BinarizedDataset":
        idx = np.asarray(list(indices), dtype=np.intp)
        return BinarizedDataset(X=self.X[idx], y=self.y[idx], meta=self.meta)


def one_hot(column, with_complements: bool, source_column: int = 0, source_name: str = "col0"):
    """One-hot encode a categorical column.

    Returns a (n × c) or (n × 2c) uint8 matrix together with its metadata:
    one equality column per distinct category (sorted), followed by one
    negated column per category when ``with_complements`` is set.
    """
    values = list(column)
    if not values:
        raise DataError("cannot one-hot encode an empty column")
    categories = sorted(set(values))
    cols = []
    meta = []
    for cat in categories:
        cols.append(np.fromiter((1 if v == cat else 0 for v in values), dtype=np.uint8))
        meta.append(LiteralMeta(source_column, source_name, CAT_EQ, category=cat))
    if with_complements:
        for cat in categories:
            cols.append(np.fromiter((0 if v == cat else 1 for v in values), dtype=np.uint8))
            meta.append(LiteralMeta(source_column, source_name, CAT_NEQ, category=cat))
    return np.column_stack(cols), meta


def pick_thresholds(column, t: int) -> list[float]:
    """Equally spaced quantile thresholds (levels i/(t+1), i=1..t).

    Quantiles use linear interpolation between order statistics. Duplicates
    are dropped, so fewer than ``t`` thresholds may come back; a column with
    fewer than two distinct values yields no thresholds at all.
    """
    if t < 1:
        raise ValueError("threshold count must be >= 1")
    values = np.asarray(list(column), dtype=np.float64)
    if values.size == 0 or np.unique(values).size < 2:
        return []
    levels = [i / (t + 1) for i in range(1, t + 1)]
    raw = np.quantile(values, levels, method="linear")
    thresholds: list[float] = []
    for v in raw:
        if not thresholds or v > thresholds[-1]:
            thresholds.append(float(v))
    return thresholds


def binarize_continuous(value: float, thresholds) -> list[int]:
    """Encode one value against ascending thresholds.

    The first half holds the ``value ≥ τ`` indicators, the second half the
    ``value < τ`` indicators; the halves are exact complements.
    """
    if np.isnan(value):
        raise DataError("cannot binarize NaN")
    ge = [1 if value >= t else 0 for t in thresholds]
    return ge + [1 - b for b in ge]


def _threshold_meta(source_column: int, source_name: str, thresholds) -> list[LiteralMeta]:
    metas = [LiteralMeta(source_column, source_name, THR_GE, tval=t) for t in thresholds]
    metas += [LiteralMeta(source_column, source_name, THR_LT, tval=t) for t in thresholds]
    return metas


class Binarizer:
    """Fitted binarization: thresholds/categories learned on training rows.

    Fit on the training split only, then reuse on validation/holdout rows so
    no threshold information leaks out of the training data.
    """

    def __init__(self, t: int = DEFAULT_BINS, with_complements: bool = True):
        if t < 1:
            raise ValueError("bins must be >= 1")
        self.t = t
        self.with_complements = with_complements
        self.fitted = False
        self.thresholds_: dict[int, list[float]] = {}
        self.categories_: dict[int, list[str]] = {}
        self.meta_: tuple[LiteralMeta, ...] = ()
        self.kinds_: tuple[str, ...] = ()
        self.names_: tuple[str, ...] = ()

    def fit(self, dataset: RawDataset) -> "Binarizer":
        self.kinds_ = dataset.column_kinds
        self.names_ = dataset.column_names
        meta: list[LiteralMeta] = []
        for c, kind in enumerate(dataset.column_kinds):
            name = dataset.column_names[c]
            cells = [row[c] for row in dataset.rows]
            if kind == KIND_BINARY:
                meta.append(LiteralMeta(c, name, BOOL_POS))
                if self.with_complements:
                    meta.append(LiteralMeta(c, name, BOOL_NEG))
            elif kind == KIND_CATEGORICAL:
                self.categories_[c] = sorted(set(cells))
                for cat in self.categories_[c]:
                    meta.append(LiteralMeta(c, name, CAT_EQ, category=cat))
                if self.with_complements:
                    for cat in self.categories_[c]:
                        meta.append(LiteralMeta(c, name, CAT_NEQ, category=cat))
            else:
                thresholds = pick_thresholds(cells, self.t)
                if not thresholds:
                    warnings.warn(
                        f"column {name!r} is constant; it contributes no Boolean features",
                        stacklevel=2,
                    )
                self.thresholds_[c] = thresholds
                meta.extend(_threshold_meta(c, name, thresholds))
        self.meta_ = tuple(meta)
        self.fitted = True
        return self

    def transform(self, dataset: RawDataset) -> BinarizedDataset:
        if not self.fitted:
            raise RuntimeError("Binarizer.transform called before fit")
        n = dataset.n
        blocks: list[np.ndarray] = []
        for c, kind in enumerate(self.kinds_):
            cells = [row[c] for row in dataset.rows]
            if kind == KIND_BINARY:
                pos = np.fromiter((1 if v == 1 else 0 for v in cells), dtype=np.uint8)
                blocks.append(pos[:, None])
                if self.with_complements:
                    blocks.append((1 - pos)[:, None])
            elif kind == KIND_CATEGORICAL:
                for cat in self.categories_[c]:
                    blocks.append(
                        np.fromiter((1 if v == cat else 0 for v in cells), dtype=np.uint8)[:, None]
                    )
                if self.with_complements:
                    for cat in self.categories_[c]:
                        blocks.append(
                            np.fromiter(
                                (0 if v == cat else 1 for v in cells), dtype=np.uint8
                            )[:, None]
                        )
            else:
                thresholds = self.thresholds_[c]
                if not thresholds:
                    continue
                values = np.asarray(cells, dtype=np.float64)
                if np.isnan(values).any():
                    raise DataError(f"column {self.names_[c]!r} contains NaN")
                tau = np.asarray(thresholds, dtype=np.float64)
                ge = (values[:, None] >= tau[None, :]).astype(np.uint8)
                blocks.append(ge)
                blocks.append(1 - ge)
        if blocks:
            X = np.ascontiguousarray(np.hstack(blocks), dtype=np.uint8)
        else:
            X = np.zeros((n, 0), dtype=np.uint8)
        y = np.asarray(dataset.labels, dtype=np.uint8)
        return BinarizedDataset(X=X, y=y, meta=self.meta_)

    def report(self) -> dict:
        """Per-column feature counts, for ``--dump-binarization``."""
        per_column = []
        count = 0
        for c, kind in enumerate(self.kinds_):
            produced = sum(1 for m in self.meta_ if m.source_column == c)
            per_column.append(
                {
                    "column": self.names_[c],
                    "kind": kind,
                    "features": produced,
                    "thresholds": self.thresholds_.get(c),
                    "categories": self.categories_.get(c),
                }
            )
            count += produced
        return {"bins": self.t, "with_complements": self.with_complements,
                "total_features": count, "columns": per_column}


def binarize(dataset: RawDataset, t: int = DEFAULT_BINS, with_complements: bool = True) -> BinarizedDataset:
    """Fit thresholds/categories on ``dataset`` rows and encode those rows.

    Callers doing model selection must pass training rows only and reuse the
    fitted :class:`Binarizer` for other splits.
    """
    return Binarizer(t=t, with_complements=with_complements).fit(dataset).transform(dataset)
