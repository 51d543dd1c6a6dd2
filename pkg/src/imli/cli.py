"""Command-line interface: train / predict / eval / cv / sweep / encode."""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from imli import maxsat, rules
from imli.data_model import SplitSpec, load_csv, make_partitions
from imli.discretizer import Binarizer
from imli.encoder import build_query
from imli.errors import DataError, ImliError, UsageError
from imli.harness import GridSpec, evaluate, grid_search, sweep
from imli.learner import TrainConfig, train

_UNSET = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_data_flags(p, defaults):
    p.add_argument("--data", help="input CSV file")
    p.add_argument("--label", help="name of the label column")
    p.add_argument("--pos", help="label value mapped to class 1")
    p.add_argument("--bins", type=int, help="thresholds per continuous column")
    p.add_argument("--no-complements", dest="complements", action="store_false",
                   default=_UNSET, help="skip negated binary/categorical columns")
    p.add_argument("--impute", action="store_true", default=_UNSET,
                   help="replace missing cells by column mode/median")
    defaults.update(data=None, label=None, pos=None, bins=4, complements=True,
                    impute=False)


def _add_solver_flags(p, defaults):
    p.add_argument("--solver", choices=["builtin-bf", "builtin-ls", "external"])
    p.add_argument("--solver-cmd", help="external solver command; {} is the WCNF path")
    p.add_argument("--timeout", type=float, help="per-solve time limit in seconds")
    p.add_argument("--max-flips", type=int, help="local-search flip budget")
    p.add_argument("--noise", type=float, help="local-search noise probability")
    p.add_argument("--budget", type=int, help="brute-force assignment budget")
    p.add_argument("--wcnf-format", choices=["classic", "new"])
    defaults.update(solver="builtin-ls", solver_cmd=None, timeout=1000.0,
                    max_flips=None, noise=maxsat.DEFAULT_NOISE,
                    budget=maxsat.DEFAULT_BUDGET, wcnf_format="classic")


def _add_train_flags(p, defaults):
    p.add_argument("--k", type=int, help="number of clauses")
    p.add_argument("--lambda", dest="lam", type=int, help="data fidelity weight")
    p.add_argument("--partitions", help="partition count or 'auto'")
    p.add_argument("--form", choices=["cnf", "dnf"])
    p.add_argument("--seed", type=int)
    p.add_argument("--stratify", action="store_true", default=_UNSET,
                   help="keep the label mix similar across partitions")
    defaults.update(k=1, lam=10, partitions="auto", form="cnf", seed=0, stratify=False)


def build_parser():
    parser = _Parser(prog="imli", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    defaults: dict[str, dict] = {}

    p = sub.add_parser("train", help="learn a rule and save it as JSON")
    d = defaults["train"] = {}
    _add_data_flags(p, d)
    _add_train_flags(p, d)
    _add_solver_flags(p, d)
    p.add_argument("--out", help="model JSON output path")
    p.add_argument("--trace", help="per-partition trace JSON output path")
    p.add_argument("--dump-splits", help="prefix for partition index files")
    p.add_argument("--dump-binarization", help="binarization report JSON path")
    p.add_argument("--config", help="JSON config file merged under explicit flags")
    d.update(out=None, trace=None, dump_splits=None, dump_binarization=None, config=None)

    p = sub.add_parser("predict", help="emit one 0/1 prediction per data row")
    d = defaults["predict"] = {}
    p.add_argument("--model", help="model JSON path")
    p.add_argument("--data", help="input CSV file")
    p.add_argument("--out", help="prediction output path (default stdout)")
    p.add_argument("--config", help="JSON config file merged under explicit flags")
    d.update(model=None, data=None, out=None, config=None)

    p = sub.add_parser("eval", help="accuracy and confusion counts of a saved model")
    d = defaults["eval"] = {}
    p.add_argument("--model", help="model JSON path")
    p.add_argument("--data", help="input CSV file")
    p.add_argument("--label", help="name of the label column")
    p.add_argument("--pos", help="label value mapped to class 1")
    p.add_argument("--impute", action="store_true", default=_UNSET)
    p.add_argument("--config", help="JSON config file merged under explicit flags")
    d.update(model=None, data=None, label=None, pos=None, impute=False, config=None)

    p = sub.add_parser("cv", help="grid search with holdout and k-fold validation")
    d = defaults["cv"] = {}
    _add_data_flags(p, d)
    _add_solver_flags(p, d)
    p.add_argument("--grid-lambda", help="comma-separated lambda values")
    p.add_argument("--grid-k", help="comma-separated clause counts")
    p.add_argument("--grid-form", help="comma-separated rule forms (cnf,dnf)")
    p.add_argument("--partitions", help="partition count or 'auto'")
    p.add_argument("--holdout", type=float, help="holdout fraction")
    p.add_argument("--folds", type=int, help="validation fold count")
    p.add_argument("--reps", type=int, help="holdout repetitions")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="parallel grid jobs")
    p.add_argument("--select-by", choices=["test", "validation"])
    p.add_argument("--run-timeout", type=float, help="wall-clock cutoff per training run")
    p.add_argument("--out", help="report JSON output path")
    p.add_argument("--dump-splits", help="prefix for holdout/fold index files")
    p.add_argument("--config", help="JSON config file merged under explicit flags")
    d.update(grid_lambda="5,10", grid_k="1,2,3", grid_form="cnf,dnf",
             partitions="auto", holdout=0.1, folds=10, reps=1, seed=0, jobs=1,
             select_by="test", run_timeout=1000.0, out=None, dump_splits=None,
             config=None)

    p = sub.add_parser("sweep", help="vary lambda or partitions; tabulate curves")
    d = defaults["sweep"] = {}
    _add_data_flags(p, d)
    _add_train_flags(p, d)
    _add_solver_flags(p, d)
    p.add_argument("--vary", choices=["lambda", "partitions"])
    p.add_argument("--values", help="comma-separated ascending values")
    p.add_argument("--holdout", type=float, help="validation fraction")
    p.add_argument("--run-timeout", type=float, help="wall-clock cutoff per training run")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--config", help="JSON config file merged under explicit flags")
    d.update(vary=None, values=None, holdout=0.1, run_timeout=1000.0, out=None,
             config=None)

    p = sub.add_parser("encode", help="dump one partition's query as DIMACS WCNF")
    d = defaults["encode"] = {}
    _add_data_flags(p, d)
    _add_train_flags(p, d)
    p.add_argument("--partition", type=int, help="1-based partition to encode")
    p.add_argument("--wcnf-format", choices=["classic", "new"])
    p.add_argument("--out", help="WCNF output path (default stdout)")
    p.add_argument("--config", help="JSON config file merged under explicit flags")
    d.update(partition=1, wcnf_format="classic", out=None, config=None)

    return parser, defaults


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    merged = dict(defaults)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise DataError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed config file: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in file_cfg.items():
            dest = key.replace("-", "_")
            if dest not in defaults or dest == "config":
                raise UsageError(f"unknown config key {key!r}")
            merged[dest] = value
    for dest in defaults:
        cli_value = getattr(args, dest, None)
        if cli_value is not None:
            merged[dest] = cli_value
    return merged


def _require(cfg: dict, *keys):
    for key in keys:
        if cfg.get(key) in (None, ""):
            raise UsageError(f"--{key.replace('_', '-')} is required")


def _parse_partitions(value) -> int | str:
    if value == "auto" or value is None:
        return "auto"
    try:
        return int(value)
    except (TypeError, ValueError):
        raise UsageError(f"--partitions must be an integer or 'auto', got {value!r}") from None


def _int_list(text, flag) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in str(text).split(",") if v != "")
    except ValueError:
        raise UsageError(f"{flag} must be a comma-separated integer list") from None


def _train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(
        k=cfg["k"],
        lam=cfg["lam"],
        partitions=_parse_partitions(cfg["partitions"]),
        form=cfg["form"],
        solver=cfg["solver"],
        solver_cmd=cfg["solver_cmd"],
        seed=cfg["seed"],
        time_limit=cfg["timeout"],
        max_flips=cfg["max_flips"],
        noise=cfg["noise"],
        budget=cfg["budget"],
        stratify=cfg["stratify"],
        wcnf_format=cfg["wcnf_format"],
    )


def _load_dataset(cfg: dict):
    _require(cfg, "data", "label", "pos")
    return load_csv(cfg["data"], cfg["label"], str(cfg["pos"]), impute=cfg.get("impute", False))


def _write_or_print(text: str, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_train(cfg: dict) -> int:
    dataset = _load_dataset(cfg)
    binarizer = Binarizer(t=cfg["bins"], with_complements=cfg["complements"]).fit(dataset)
    data = binarizer.transform(dataset)
    if cfg["dump_binarization"]:
        with open(cfg["dump_binarization"], "w", encoding="utf-8") as fh:
            json.dump(binarizer.report(), fh, indent=2, ensure_ascii=False)
            fh.write("\n")
    tc = _train_config(cfg)
    rule, trace = train(data, tc)
    if cfg["dump_splits"]:
        y_plan = (1 - data.y) if tc.form == "dnf" else data.y
        plan = make_partitions(data.n, tc.resolved_partitions(data.n), tc.seed,
                               labels=y_plan, stratify=tc.stratify)
        for i in range(1, plan.p + 1):
            with open(f"{cfg['dump_splits']}.partition{i}.txt", "w", encoding="utf-8") as fh:
                fh.writelines(f"{idx}\n" for idx in plan.indices(i))
    metrics = evaluate(rule, data.X, data.y)
    if cfg["out"]:
        rules.save(rule, cfg["out"])
    if cfg["trace"]:
        doc = {"config": {k: cfg[k] for k in ("k", "lam", "partitions", "form", "solver", "seed")},
               "train_accuracy": metrics["accuracy"], "partitions": trace}
        with open(cfg["trace"], "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, ensure_ascii=False)
            fh.write("\n")
    print(rules.format_rule(rule))
    print(f"training accuracy: {100.0 * metrics['accuracy']:.2f}%", file=sys.stderr)
    return 0


def _prediction_rows(rule, path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise DataError(f"{path}: file is empty")
            name_to_col = {name: i for i, name in enumerate(header)}
            needed = {}
            for clause in rule.clauses:
                for lit in clause:
                    name = lit.meta.source_name
                    if name not in name_to_col:
                        raise DataError(f"column {name!r} required by the model is missing")
                    needed[lit.meta.source_column] = name_to_col[name]
            width = max(needed, default=-1) + 1
            for row in reader:
                if not row:
                    continue
                cells = [None] * width
                for source_col, csv_col in needed.items():
                    if csv_col >= len(row):
                        raise DataError(f"row has {len(row)} cells, expected {len(header)}")
                    cells[source_col] = row[csv_col]
                yield cells
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _cmd_predict(cfg: dict) -> int:
    _require(cfg, "model", "data")
    rule = rules.load(cfg["model"])
    lines = []
    for cells in _prediction_rows(rule, cfg["data"]):
        try:
            lines.append(str(rules.predict_raw(rule, cells)))
        except (TypeError, ValueError) as exc:
            raise DataError(f"cannot evaluate rule on row {cells!r}: {exc}") from exc
    _write_or_print("".join(line + "\n" for line in lines), cfg["out"])
    return 0


def _cmd_eval(cfg: dict) -> int:
    _require(cfg, "model")
    dataset = _load_dataset(cfg)
    rule = rules.load(cfg["model"])
    preds = np.fromiter(
        (rules.predict_raw(rule, row) for row in dataset.rows), dtype=np.int64,
        count=dataset.n,
    )
    actual = np.asarray(dataset.labels, dtype=np.int64)
    tp = int(np.count_nonzero((preds == 1) & (actual == 1)))
    fp = int(np.count_nonzero((preds == 1) & (actual == 0)))
    tn = int(np.count_nonzero((preds == 0) & (actual == 0)))
    fn = int(np.count_nonzero((preds == 0) & (actual == 1)))
    print(json.dumps({
        "accuracy": (tp + tn) / dataset.n,
        "tp": tp, "fp": fp, "tn": tn, "fn": fn,
    }, indent=2, sort_keys=True))
    return 0


def _cmd_cv(cfg: dict) -> int:
    dataset = _load_dataset(cfg)
    grid = GridSpec(
        lambdas=_int_list(cfg["grid_lambda"], "--grid-lambda"),
        ks=_int_list(cfg["grid_k"], "--grid-k"),
        forms=tuple(str(cfg["grid_form"]).split(",")),
    )
    split = SplitSpec(holdout_fraction=cfg["holdout"], folds=cfg["folds"],
                      repetitions=cfg["reps"], seed=cfg["seed"])
    base = TrainConfig(
        partitions=_parse_partitions(cfg["partitions"]),
        solver=cfg["solver"],
        solver_cmd=cfg["solver_cmd"],
        seed=cfg["seed"],
        time_limit=cfg["timeout"],
        max_flips=cfg["max_flips"],
        noise=cfg["noise"],
        budget=cfg["budget"],
        wcnf_format=cfg["wcnf_format"],
    )
    if cfg["dump_splits"]:
        from imli.data_model import split_and_fold

        for r in range(split.repetitions):
            holdout, folds = split_and_fold(dataset.n, split, r)
            prefix = f"{cfg['dump_splits']}.rep{r}"
            with open(f"{prefix}.holdout.txt", "w", encoding="utf-8") as fh:
                fh.writelines(f"{i}\n" for i in holdout)
            for f, (_, val) in enumerate(folds):
                with open(f"{prefix}.fold{f}.txt", "w", encoding="utf-8") as fh:
                    fh.writelines(f"{i}\n" for i in val)
    report = grid_search(
        dataset, grid, split, base, bins=cfg["bins"],
        with_complements=cfg["complements"], jobs=cfg["jobs"],
        select_by=cfg["select_by"], run_time_limit=cfg["run_timeout"],
    )
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2, ensure_ascii=False, sort_keys=True)
            fh.write("\n")
    print(report.to_text())
    return 0


def _cmd_sweep(cfg: dict) -> int:
    dataset = _load_dataset(cfg)
    _require(cfg, "vary", "values")
    values = _int_list(cfg["values"], "--values")
    split = SplitSpec(holdout_fraction=cfg["holdout"], folds=2, seed=cfg["seed"])
    base = _train_config(cfg)
    rows = sweep(dataset, cfg["vary"], values, split, base, bins=cfg["bins"],
                 with_complements=cfg["complements"], run_time_limit=cfg["run_timeout"])
    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["x", "rule_size", "train_time", "train_acc", "val_acc"])
    for row in rows:
        writer.writerow([
            row["x"],
            "" if row["rule_size"] is None else row["rule_size"],
            "" if row["train_time"] is None else f"{row['train_time']:.4f}",
            "" if row["train_acc"] is None else f"{row['train_acc']:.2f}",
            "" if row["val_acc"] is None else f"{row['val_acc']:.2f}",
        ])
    _write_or_print(buffer.getvalue(), cfg["out"])
    return 0


def _cmd_encode(cfg: dict) -> int:
    dataset = _load_dataset(cfg)
    data = Binarizer(t=cfg["bins"], with_complements=cfg["complements"]).fit(dataset).transform(dataset)
    tc = _train_config({**cfg, "solver": "builtin-ls", "solver_cmd": None,
                        "timeout": 1000.0, "max_flips": None,
                        "noise": maxsat.DEFAULT_NOISE, "budget": maxsat.DEFAULT_BUDGET})
    p = tc.resolved_partitions(data.n)
    which = cfg["partition"]
    if not 1 <= which <= p:
        raise UsageError(f"--partition must be in [1,{p}]")
    y_work = (1 - data.y).astype(np.uint8) if tc.form == "dnf" else data.y
    plan = make_partitions(data.n, p, tc.seed, labels=y_work, stratify=tc.stratify)
    idx = np.asarray(plan.indices(which), dtype=np.intp)
    query = build_query(data.X[idx], y_work[idx], tc.k, tc.lam, prior=None)
    _write_or_print(maxsat.to_wcnf(query, cfg["wcnf_format"]), cfg["out"])
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "cv": _cmd_cv,
    "sweep": _cmd_sweep,
    "encode": _cmd_encode,
}


def run(argv=None) -> int:
    parser, defaults = build_parser()
    args = parser.parse_args(argv)
    cfg = _merge_config(args, defaults[args.command])
    return _COMMANDS[args.command](cfg)


def main(argv=None) -> int:
    try:
        return run(argv)
    except ImliError as exc:
        print(f"imli: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
