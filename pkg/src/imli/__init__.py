"""Interpretable CNF/DNF rule learning via incremental weighted MaxSAT."""

from imli.data_model import (
    PartitionPlan,
    RawDataset,
    SplitSpec,
    auto_partition_count,
    load_csv,
    make_partitions,
    split_and_fold,
)
from imli.discretizer import Binarizer, BinarizedDataset, LiteralMeta, binarize
from imli.encoder import MaxSatQuery, VarTable, build_query, query_stats, weight_of_assignment
from imli.harness import EvalReport, GridSpec, evaluate, grid_search, sweep
from imli.learner import TrainConfig, extract_rule, remove_redundant_literals, train
from imli.maxsat import (
    SolveOutcome,
    WcnfDocument,
    parse_solver_output,
    parse_wcnf,
    solve_bruteforce,
    solve_external,
    solve_localsearch,
    to_wcnf,
)
from imli.rules import Literal, Rule, format_rule, negate, predict, rule_size

__version__ = "0.1.0"

__all__ = [
    "Binarizer",
    "BinarizedDataset",
    "EvalReport",
    "GridSpec",
    "Literal",
    "LiteralMeta",
    "MaxSatQuery",
    "PartitionPlan",
    "RawDataset",
    "Rule",
    "SolveOutcome",
    "SplitSpec",
    "TrainConfig",
    "VarTable",
    "WcnfDocument",
    "auto_partition_count",
    "binarize",
    "build_query",
    "evaluate",
    "extract_rule",
    "format_rule",
    "grid_search",
    "load_csv",
    "make_partitions",
    "negate",
    "parse_solver_output",
    "parse_wcnf",
    "predict",
    "query_stats",
    "remove_redundant_literals",
    "rule_size",
    "solve_bruteforce",
    "solve_external",
    "solve_localsearch",
    "split_and_fold",
    "sweep",
    "to_wcnf",
    "train",
    "weight_of_assignment",
    "__version__",
]
