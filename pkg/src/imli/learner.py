"""Incremental training over data partitions.

Each partition is encoded as a MaxSAT query biased toward the rule learned
so far, solved, decoded back into a CNF rule, and pruned of redundant
threshold literals before it seeds the next partition's query. DNF rules
are learned by complementing the labels up front and negating the final
CNF rule.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

import numpy as np

from imli import maxsat
from imli.data_model import auto_partition_count, make_partitions
from imli.discretizer import OP_GE, BinarizedDataset
from imli.encoder import VarTable, build_query, query_stats
from imli.errors import SolverError, TimeoutNoResult, UsageError
from imli.rules import CNF, DNF, Literal, Rule, empty_rule, negate, rule_size

SOLVER_BRUTEFORCE = "builtin-bf"
SOLVER_LOCALSEARCH = "builtin-ls"
SOLVER_EXTERNAL = "external"
SOLVER_CMD_ENV = "IMLI_SOLVER_CMD"


@dataclass(frozen=True)
class TrainConfig:
    """Knobs of one training run."""

    k: int = 1
    lam: int = 10
    partitions: int | str = "auto"
    form: str = CNF
    solver: str = SOLVER_LOCALSEARCH
    solver_cmd: str | None = None
    seed: int = 0
    time_limit: float = 1000.0
    max_flips: int | None = None
    noise: float = maxsat.DEFAULT_NOISE
    budget: int = maxsat.DEFAULT_BUDGET
    stratify: bool = False
    wcnf_format: str = maxsat.FORMAT_CLASSIC

    def __post_init__(self):
        if self.k < 1:
            raise UsageError(f"k must be >= 1, got {self.k}")
        if self.lam < 1:
            raise UsageError(f"lambda must be >= 1, got {self.lam}")
        if self.form not in (CNF, DNF):
            raise UsageError(f"form must be cnf or dnf, got {self.form!r}")
        if self.solver not in (SOLVER_BRUTEFORCE, SOLVER_LOCALSEARCH, SOLVER_EXTERNAL):
            raise UsageError(f"unknown solver {self.solver!r}")
        if self.time_limit <= 0:
            raise UsageError("time_limit must be positive")
        if self.partitions != "auto":
            if not isinstance(self.partitions, int) or self.partitions < 1:
                raise UsageError(f"partitions must be 'auto' or a positive integer")

    def resolved_partitions(self, n: int) -> int:
        if self.partitions == "auto":
            return auto_partition_count(n)
        return self.partitions

    def external_command(self) -> str:
        cmd = self.solver_cmd or os.environ.get(SOLVER_CMD_ENV)
        if not cmd:
            raise UsageError(
                f"external solver requires --solver-cmd or ${SOLVER_CMD_ENV}"
            )
        return cmd


def extract_rule(sigma: dict[int, bool], vars: VarTable, meta, k: int) -> Rule:
    """Decode feature-variable assignments into a CNF rule.

    Feature j joins clause l exactly when the corresponding feature variable
    is assigned true.
    """
    clauses = []
    for l in range(1, k + 1):
        clause = []
        for j in range(1, vars.m_prime + 1):
            var = vars.feature_id(l, j)
            if var not in sigma:
                raise SolverError(f"assignment is missing feature variable {var}")
            if sigma[var]:
                clause.append(Literal(index=j - 1, meta=meta[j - 1]))
        clauses.append(tuple(clause))
    return Rule(form=CNF, clauses=tuple(clauses), m_prime=vars.m_prime)


def remove_redundant_literals(rule: Rule) -> Rule:
    """Drop threshold literals made redundant by a sibling in the same clause.

    In a disjunction only the weakest sibling matters: among same-source
    ``≥`` literals the smallest threshold survives, among ``<`` literals the
    largest. Conjunctions (DNF clauses) keep the strongest sibling instead.
    Predictions are unchanged on every input that can arise from
    binarization.
    """
    disjunctive = rule.form == CNF
    new_clauses = []
    for clause in rule.clauses:
        keep_tval: dict[str, float] = {}
        for lit in clause:
            group = lit.meta.sibling_group
            if group is None:
                continue
            weakest_is_min = (lit.meta.op == OP_GE) == disjunctive
            current = keep_tval.get(group)
            if current is None:
                keep_tval[group] = lit.meta.tval
            elif weakest_is_min:
                keep_tval[group] = min(current, lit.meta.tval)
            else:
                keep_tval[group] = max(current, lit.meta.tval)
        kept = tuple(
            lit
            for lit in clause
            if lit.meta.sibling_group is None
            or lit.meta.tval == keep_tval[lit.meta.sibling_group]
        )
        new_clauses.append(kept)
    return Rule(form=rule.form, clauses=tuple(new_clauses), m_prime=rule.m_prime)


def _solve(query, cfg: TrainConfig, seed: int, time_limit: float):
    if cfg.solver == SOLVER_BRUTEFORCE:
        return maxsat.solve_bruteforce(query, budget=cfg.budget)
    if cfg.solver == SOLVER_LOCALSEARCH:
        return maxsat.solve_localsearch(
            query,
            max_flips=cfg.max_flips,
            seed=seed,
            time_limit=time_limit,
            noise=cfg.noise,
        )
    return maxsat.solve_external(
        query, cfg.external_command(), time_limit=time_limit, wcnf_format=cfg.wcnf_format
    )


def train(data: BinarizedDataset, cfg: TrainConfig, total_time_limit: float | None = None):
    """Learn a rule incrementally over seeded partitions of ``data``.

    Returns ``(rule, trace)`` where ``trace`` holds one record per partition
    (query size, solve status and weight, pruned rule size, wall time). A
    solve that times out without any solution aborts the run; a best-found
    solution is used and flagged.
    """
    n = data.n
    if n < 1:
        raise UsageError("cannot train on an empty dataset")
    dnf_mode = cfg.form == DNF
    y_work = (1 - data.y).astype(np.uint8) if dnf_mode else data.y
    p = cfg.resolved_partitions(n)
    if p > n:
        raise UsageError(f"partitions {p} exceed sample count {n}")
    plan = make_partitions(n, p, cfg.seed, labels=y_work, stratify=cfg.stratify)

    rule = empty_rule(cfg.k, data.m_prime, CNF)
    trace = []
    started = time.perf_counter()
    for i in range(1, p + 1):
        limit = cfg.time_limit
        if total_time_limit is not None:
            remaining = total_time_limit - (time.perf_counter() - started)
            if remaining <= 0:
                raise TimeoutNoResult(f"training budget exhausted before partition {i}")
            limit = min(limit, remaining)
        idx = plan.indices(i)
        query = build_query(data.X[np.asarray(idx, dtype=np.intp)],
                            y_work[np.asarray(idx, dtype=np.intp)],
                            cfg.k, cfg.lam, prior=rule)
        outcome = _solve(query, cfg, cfg.seed + i, limit)
        if outcome.status == maxsat.TIMEOUT_NO_SOLUTION:
            raise TimeoutNoResult(f"partition {i}: solver produced no solution in time")
        if outcome.status in (maxsat.SOLVER_ERROR, maxsat.INFEASIBLE):
            raise SolverError(f"partition {i}: {outcome.message or outcome.status}")
        if outcome.assignment is None:
            raise TimeoutNoResult(f"partition {i}: no assignment to continue from")
        raw = extract_rule(outcome.assignment, query.vars, data.meta, cfg.k)
        rule = remove_redundant_literals(raw)
        stats = query_stats(query)
        trace.append(
            {
                "partition": i,
                "samples": len(idx),
                "soft_clauses": stats["soft"],
                "hard_clauses": stats["hard"],
                "vars": stats["vars"],
                "status": outcome.status,
                "best_found_only": outcome.status == maxsat.BEST_FOUND,
                "weight": outcome.weight,
                "rule_size_raw": rule_size(raw),
                "rule_size": rule_size(rule),
                "solve_time": outcome.wall_time,
            }
        )
    final = negate(rule) if dnf_mode else rule
    return final, trace
