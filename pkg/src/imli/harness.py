"""Evaluation protocol: holdout + k-fold cross-validation over a parameter grid.

Each repetition draws a fresh holdout set; every grid point is scored by
mean validation accuracy over the folds and by test accuracy of a model
retrained on the whole cross-validation pool. Binarization thresholds are
refit inside each training fold so no information leaks from validation or
holdout rows.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from imli.data_model import RawDataset, SplitSpec, split_and_fold
from imli.discretizer import Binarizer
from imli.errors import DataError, ImliError, UsageError
from imli.learner import TrainConfig, train
from imli.rules import Rule, format_rule, predict, rule_size

SELECT_BY_TEST = "test"
SELECT_BY_VALIDATION = "validation"


def evaluate(rule: Rule, X, y) -> dict:
    """Accuracy and confusion counts of a rule on binarized samples."""
    y = np.asarray(y).ravel()
    if y.size == 0:
        raise DataError("cannot evaluate on an empty label vector")
    preds = np.fromiter((predict(rule, row) for row in X), dtype=np.int64, count=y.size)
    actual = (y != 0).astype(np.int64)
    tp = int(np.count_nonzero((preds == 1) & (actual == 1)))
    fp = int(np.count_nonzero((preds == 1) & (actual == 0)))
    tn = int(np.count_nonzero((preds == 0) & (actual == 0)))
    fn = int(np.count_nonzero((preds == 0) & (actual == 1)))
    return {
        "accuracy": (tp + tn) / y.size,
        "tp": tp,
        "fp": fp,
        "tn": tn,
        "fn": fn,
    }


@dataclass(frozen=True)
class GridSpec:
    """Parameter grid: data-fidelity weights, clause counts, rule forms."""

    lambdas: tuple[int, ...] = (5, 10)
    ks: tuple[int, ...] = (1, 2, 3)
    forms: tuple[str, ...] = ("cnf", "dnf")

    def points(self):
        return list(product(self.lambdas, self.ks, self.forms))


@dataclass
class EvalReport:
    """Aggregated grid-search results, one row per grid point."""

    rows: list[dict]
    select_by: str
    repetitions: int
    selected: int | None = None

    def select(self):
        key = "test_acc" if self.select_by == SELECT_BY_TEST else "val_acc"
        best = None
        for i, row in enumerate(self.rows):
            if row[key] is None:
                continue
            if best is None or row[key] > self.rows[best][key]:
                best = i
        self.selected = best
        return best

    def to_json(self) -> dict:
        return {
            "repetitions": self.repetitions,
            "select_by": self.select_by,
            "selected": self.selected,
            "rows": self.rows,
        }

    def to_text(self) -> str:
        headers = ["lambda", "k", "form", "p", "test%", "val%", "time(s)", "|R|", "rule"]
        table = []
        for i, row in enumerate(self.rows):
            mark = "*" if i == self.selected else " "
            table.append(
                [
                    f"{mark}{row['lambda']}",
                    str(row["k"]),
                    row["form"],
                    str(row["p"]),
                    _fmt_pct(row["test_acc"]),
                    _fmt_pct(row["val_acc"]),
                    "-" if row["train_time"] is None else f"{row['train_time']:.2f}",
                    "-" if row["rule_size"] is None else str(row["rule_size"]),
                    row["rule"] or "-",
                ]
            )
        widths = [max(len(h), *(len(r[c]) for r in table)) if table else len(h)
                  for c, h in enumerate(headers)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
        for r in table:
            lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
        return "\n".join(lines)


def _fmt_pct(value) -> str:
    return "-" if value is None else f"{value:.2f}"


def _run_point(dataset: RawDataset, cfg: TrainConfig, holdout, folds, bins: int,
               with_complements: bool, run_time_limit: float | None):
    """One grid point on one repetition's split: CV folds plus holdout test."""
    val_accs = []
    times = []
    for train_idx, val_idx in folds:
        train_raw = _subset(dataset, train_idx)
        binarizer = Binarizer(t=bins, with_complements=with_complements).fit(train_raw)
        train_bin = binarizer.transform(train_raw)
        started = time.perf_counter()
        rule, _ = train(train_bin, cfg, total_time_limit=run_time_limit)
        times.append(time.perf_counter() - started)
        val_bin = binarizer.transform(_subset(dataset, val_idx))
        val_accs.append(evaluate(rule, val_bin.X, val_bin.y)["accuracy"])
    pool = sorted(i for fold in folds for i in fold[1])
    pool_raw = _subset(dataset, pool)
    binarizer = Binarizer(t=bins, with_complements=with_complements).fit(pool_raw)
    rule, _ = train(binarizer.transform(pool_raw), cfg, total_time_limit=run_time_limit)
    holdout_bin = binarizer.transform(_subset(dataset, holdout))
    test_acc = evaluate(rule, holdout_bin.X, holdout_bin.y)["accuracy"]
    return {
        "val_acc": sum(val_accs) / len(val_accs),
        "test_acc": test_acc,
        "train_time": sum(times) / len(times),
        "rule_size": rule_size(rule),
        "rule": format_rule(rule),
        "p": cfg.resolved_partitions(len(pool)),
    }


def _subset(dataset: RawDataset, indices) -> RawDataset:
    rows = tuple(dataset.rows[i] for i in indices)
    labels = tuple(dataset.labels[i] for i in indices)
    return RawDataset(
        column_names=dataset.column_names,
        column_kinds=dataset.column_kinds,
        rows=rows,
        labels=labels,
        label_column=dataset.label_column,
        positive_label=dataset.positive_label,
        label_values=dataset.label_values,
    )


def grid_search(dataset: RawDataset, grid: GridSpec, split: SplitSpec,
                base_cfg: TrainConfig, bins: int = 4, with_complements: bool = True,
                jobs: int = 1, select_by: str = SELECT_BY_TEST,
                run_time_limit: float | None = 1000.0) -> EvalReport:
    """Full protocol: repetitions × grid points × folds, means over repetitions.

    Grid points whose runs failed in every repetition get empty cells; if
    every point failed everywhere, the whole search raises.
    """
    points = grid.points()
    if not points:
        raise UsageError("empty parameter grid")
    n = dataset.n
    splits = [split_and_fold(n, split, r) for r in range(split.repetitions)]

    tasks = []
    for r, (holdout, folds) in enumerate(splits):
        for pi, (lam, k, form) in enumerate(points):
            cfg = replace(base_cfg, lam=lam, k=k, form=form, seed=base_cfg.seed + r)
            tasks.append((r, pi, cfg, holdout, folds))

    results: dict[tuple[int, int], dict | None] = {}

    def run_task(task):
        r, pi, cfg, holdout, folds = task
        try:
            return r, pi, _run_point(
                dataset, cfg, holdout, folds, bins, with_complements, run_time_limit
            )
        except ImliError:
            return r, pi, None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for r, pi, res in pool.map(run_task, tasks):
                results[(r, pi)] = res
    else:
        for task in tasks:
            r, pi, res = run_task(task)
            results[(r, pi)] = res

    rows = []
    any_success = False
    for pi, (lam, k, form) in enumerate(points):
        per_rep = [results[(r, pi)] for r in range(split.repetitions)]
        ok = [res for res in per_rep if res is not None]
        row = {
            "lambda": lam,
            "k": k,
            "form": form,
            "p": ok[-1]["p"] if ok else None,
            "test_acc": 100.0 * _mean(ok, "test_acc") if ok else None,
            "val_acc": 100.0 * _mean(ok, "val_acc") if ok else None,
            "train_time": _mean(ok, "train_time") if ok else None,
            "rule_size": _mean(ok, "rule_size") if ok else None,
            "rule": ok[-1]["rule"] if ok else None,
            "failed_repetitions": len(per_rep) - len(ok),
        }
        rows.append(row)
        any_success = any_success or bool(ok)
    if not any_success:
        raise ImliError("every grid-search run failed")
    report = EvalReport(rows=rows, select_by=select_by, repetitions=split.repetitions)
    report.select()
    return report


def _mean(results, key) -> float:
    return sum(res[key] for res in results) / len(results)


def sweep(dataset: RawDataset, vary: str, values, split: SplitSpec,
          base_cfg: TrainConfig, bins: int = 4, with_complements: bool = True,
          run_time_limit: float | None = 1000.0) -> list[dict]:
    """Train once per value of ``vary`` (lambda or partitions); tabulate curves.

    The split's holdout rows act as the validation set; failed runs leave
    empty cells in their row.
    """
    if vary not in ("lambda", "partitions"):
        raise UsageError(f"can only vary lambda or partitions, not {vary!r}")
    if list(values) != sorted(values):
        raise UsageError("sweep values must be ascending")
    holdout, folds = split_and_fold(dataset.n, split)
    pool = sorted(set(range(dataset.n)) - set(holdout))
    pool_raw = _subset(dataset, pool)
    binarizer = Binarizer(t=bins, with_complements=with_complements).fit(pool_raw)
    pool_bin = binarizer.transform(pool_raw)
    val_bin = binarizer.transform(_subset(dataset, holdout))

    rows = []
    for value in values:
        if vary == "lambda":
            cfg = replace(base_cfg, lam=int(value))
        else:
            cfg = replace(base_cfg, partitions=int(value))
        row = {"x": value, "rule_size": None, "train_time": None,
               "train_acc": None, "val_acc": None}
        try:
            started = time.perf_counter()
            rule, _ = train(pool_bin, cfg, total_time_limit=run_time_limit)
            row["train_time"] = time.perf_counter() - started
            row["rule_size"] = rule_size(rule)
            row["train_acc"] = 100.0 * evaluate(rule, pool_bin.X, pool_bin.y)["accuracy"]
            row["val_acc"] = 100.0 * evaluate(rule, val_bin.X, val_bin.y)["accuracy"]
        except ImliError:
            pass
        rows.append(row)
    return rows
