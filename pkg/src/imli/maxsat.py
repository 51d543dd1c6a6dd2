"""MaxSAT solving backends and DIMACS WCNF serialization.

Three interchangeable backends: an exact brute-force enumerator over the
feature variables (the oracle), an anytime weighted local search, and an
external WCNF solver run as a subprocess. The brute force and local search
never enumerate noise/auxiliary variables; any feature assignment extends to
a hard-feasible full assignment by setting each noise variable exactly for
the misclassified samples (see ``encoder.complete_assignment``), and that
extension is the cheapest one, so searching over feature variables alone
preserves the optimum.
"""

from __future__ import annotations

import math
import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from imli import kernels
from imli.encoder import MaxSatQuery, complete_assignment, weight_of_assignment
from imli.errors import BudgetExceeded, SolverError, UsageError

OPTIMUM = "optimum"
BEST_FOUND = "best_found"
INFEASIBLE = "infeasible"
TIMEOUT_NO_SOLUTION = "timeout_no_solution"
SOLVER_ERROR = "solver_error"

FORMAT_CLASSIC = "classic"
FORMAT_NEW = "new"

DEFAULT_BUDGET = 1 << 20
DEFAULT_NOISE = 0.1

# Local-search flip budget per soft clause when the caller does not fix one;
# effort then scales with query size, like the solvers it stands in for.
AUTO_FLIPS_PER_SOFT = 12
AUTO_FLIPS_MIN = 2000


@dataclass(frozen=True)
class SolveOutcome:
    """Result of one solve: status, optimum/best weight, full assignment."""

    status: str
    weight: int | None = None
    assignment: dict[int, bool] | None = None
    wall_time: float = 0.0
    message: str = ""


@dataclass(frozen=True)
class WcnfDocument:
    """Parsed WCNF content: header data plus soft/hard clause lists."""

    num_vars: int
    num_clauses: int
    top: int | None
    soft: tuple[tuple[tuple[int, ...], int], ...]
    hard: tuple[tuple[int, ...], ...]


def to_wcnf(query: MaxSatQuery, wcnf_format: str = FORMAT_CLASSIC) -> str:
    """Serialize a query to DIMACS WCNF text, deterministically.

    The classic dialect writes a ``p wcnf vars clauses top`` header and marks
    hard clauses with the top weight (1 + sum of soft weights); the 2022
    dialect drops the header and marks hard clauses with ``h``.
    """
    top = query.top
    lines = []
    if wcnf_format == FORMAT_CLASSIC:
        lines.append(f"p wcnf {query.num_vars} {len(query.soft) + len(query.hard)} {top}")
        hard_prefix = str(top)
    elif wcnf_format == FORMAT_NEW:
        hard_prefix = "h"
    else:
        raise UsageError(f"unknown WCNF format {wcnf_format!r}")
    for lits, weight in query.soft:
        lines.append(" ".join([str(weight), *map(str, lits), "0"]))
    for lits in query.hard:
        lines.append(" ".join([hard_prefix, *map(str, lits), "0"]))
    return "\n".join(lines) + "\n"


def parse_wcnf(text: str) -> WcnfDocument:
    """Parse WCNF text in either dialect back into clause lists."""
    top = None
    declared_vars = None
    declared_clauses = None
    soft: list[tuple[tuple[int, ...], int]] = []
    hard: list[tuple[int, ...]] = []
    max_var = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        fields = line.split()
        if not fields or fields[0] == "c":
            continue
        if fields[0] == "p":
            if len(fields) != 5 or fields[1] != "wcnf":
                raise SolverError(f"line {lineno}: bad WCNF header {line!r}")
            declared_vars = int(fields[2])
            declared_clauses = int(fields[3])
            top = int(fields[4])
            continue
        if fields[-1] != "0":
            raise SolverError(f"line {lineno}: clause line does not end with 0")
        if fields[0] == "h":
            lits = tuple(int(f) for f in fields[1:-1])
            hard.append(lits)
        else:
            weight = int(fields[0])
            lits = tuple(int(f) for f in fields[1:-1])
            if top is not None and weight >= top:
                hard.append(lits)
            else:
                soft.append((lits, weight))
        for lit in lits:
            max_var = max(max_var, abs(lit))
    num_vars = declared_vars if declared_vars is not None else max_var
    num_clauses = declared_clauses if declared_clauses is not None else len(soft) + len(hard)
    return WcnfDocument(
        num_vars=num_vars,
        num_clauses=num_clauses,
        top=top,
        soft=tuple(soft),
        hard=tuple(hard),
    )


def _scan_output(text: str):
    status_line = None
    weights: list[int] = []
    v_tokens: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped == "s" or stripped.startswith("s "):
            status_line = stripped[2:].strip()
        elif stripped.startswith("o "):
            try:
                weights.append(int(stripped[2:].strip()))
            except ValueError:
                pass
        elif stripped == "v" or stripped.startswith("v "):
            v_tokens.extend(stripped[2:].split())
    return status_line, weights, v_tokens


def _assignment_from_tokens(v_tokens: list[str], num_vars: int | None):
    """Decode v-line tokens: signed literals or a single 0/1 bit string."""
    if not v_tokens:
        return None
    single = v_tokens[0]
    bitstring = (
        len(v_tokens) == 1
        and set(single) <= {"0", "1"}
        and (len(single) > 1 or num_vars == 1)
    )
    if bitstring:
        if num_vars is not None and len(single) != num_vars:
            raise SolverError(
                f"v-line bit string has {len(single)} bits, expected {num_vars}"
            )
        return {i + 1: ch == "1" for i, ch in enumerate(single)}
    assignment: dict[int, bool] = {}
    for token in v_tokens:
        try:
            lit = int(token)
        except ValueError as exc:
            raise SolverError(f"bad v-line token {token!r}") from exc
        if lit == 0:
            continue
        assignment[abs(lit)] = lit > 0
    if num_vars is not None and set(assignment) != set(range(1, num_vars + 1)):
        raise SolverError("v-line assignment inconsistent with variable count")
    return assignment or None


def parse_solver_output(text: str, num_vars: int | None = None) -> SolveOutcome:
    """Interpret solver stdout: ``s`` status, ``o`` weights (last wins), ``v`` lines."""
    status_line, weights, v_tokens = _scan_output(text)
    weight = weights[-1] if weights else None
    try:
        assignment = _assignment_from_tokens(v_tokens, num_vars)
    except SolverError as exc:
        return SolveOutcome(status=SOLVER_ERROR, message=str(exc))
    if status_line is None:
        return SolveOutcome(status=SOLVER_ERROR, message="solver printed no status line")
    if status_line == "OPTIMUM FOUND":
        return SolveOutcome(status=OPTIMUM, weight=weight, assignment=assignment)
    if status_line == "SATISFIABLE":
        return SolveOutcome(status=BEST_FOUND, weight=weight, assignment=assignment)
    if status_line == "UNSATISFIABLE":
        return SolveOutcome(status=INFEASIBLE)
    if status_line == "UNKNOWN":
        if weight is not None:
            return SolveOutcome(status=BEST_FOUND, weight=weight, assignment=assignment)
        return SolveOutcome(status=TIMEOUT_NO_SOLUTION)
    return SolveOutcome(status=SOLVER_ERROR, message=f"unrecognized status {status_line!r}")


def _require_payload(query: MaxSatQuery):
    if not query.has_payload:
        raise UsageError("builtin backends need a query built by build_query")


def _feature_space_outcome(query: MaxSatQuery, cost: int, B, status: str,
                           wall_time: float) -> SolveOutcome:
    return SolveOutcome(
        status=status,
        weight=int(cost),
        assignment=complete_assignment(query, B),
        wall_time=wall_time,
    )


def solve_bruteforce(query: MaxSatQuery, budget: int = DEFAULT_BUDGET) -> SolveOutcome:
    """Exact optimum by enumerating every feature-variable assignment.

    Refuses instances with more than ``budget`` candidate assignments. Ties
    are broken toward the lexicographically smallest feature assignment.
    """
    _require_payload(query)
    started = time.perf_counter()
    K = query.k * query.m_prime
    if K > 62 or (1 << K) > budget:
        raise BudgetExceeded(
            f"2^{K} feature assignments exceed the budget of {budget}"
        )
    if K == 0:
        B = np.zeros((query.k, query.m_prime), dtype=np.uint8)
        cost = kernels.rule_cost(query.X, query.y, B, query.prior_mask, query.lam)
    else:
        cost, B = kernels.bruteforce(query.X, query.y, query.prior_mask, query.lam, query.k)
    return _feature_space_outcome(query, cost, B, OPTIMUM, time.perf_counter() - started)


def solve_localsearch(query: MaxSatQuery, max_flips: int | None = None, seed: int = 0,
                      time_limit: float | None = None,
                      noise: float = DEFAULT_NOISE) -> SolveOutcome:
    """Anytime weighted local search starting from the prior assignment."""
    _require_payload(query)
    started = time.perf_counter()
    K = query.k * query.m_prime
    if max_flips is None:
        max_flips = max(AUTO_FLIPS_MIN, AUTO_FLIPS_PER_SOFT * len(query.soft))
    if K == 0:
        B = np.zeros((query.k, query.m_prime), dtype=np.uint8)
        cost = kernels.rule_cost(query.X, query.y, B, query.prior_mask, query.lam)
    else:
        if not 0.0 <= noise <= 1.0:
            raise UsageError("noise must be in [0,1]")
        cost, B, _ = kernels.local_search(
            query.X,
            query.y,
            query.prior_mask,
            query.lam,
            query.k,
            max_flips,
            int(noise * 65536),
            seed,
            math.inf if time_limit is None else float(time_limit),
        )
    return _feature_space_outcome(query, cost, B, BEST_FOUND, time.perf_counter() - started)


def _verify_external(query: MaxSatQuery, outcome: SolveOutcome) -> SolveOutcome:
    if outcome.assignment is None:
        return outcome
    recomputed = weight_of_assignment(query, outcome.assignment)
    if recomputed is None:
        return SolveOutcome(
            status=SOLVER_ERROR,
            message="solver assignment violates a hard clause",
            wall_time=outcome.wall_time,
        )
    if outcome.weight is not None and recomputed != outcome.weight:
        return SolveOutcome(
            status=SOLVER_ERROR,
            message=f"solver weight {outcome.weight} != recomputed {recomputed}",
            wall_time=outcome.wall_time,
        )
    return SolveOutcome(
        status=outcome.status,
        weight=recomputed,
        assignment=outcome.assignment,
        wall_time=outcome.wall_time,
        message=outcome.message,
    )


def solve_external(query: MaxSatQuery, command: str, time_limit: float | None = None,
                   wcnf_format: str = FORMAT_CLASSIC) -> SolveOutcome:
    """Run an external WCNF solver on the query.

    ``command`` is a shell-style template; a ``{}`` placeholder is replaced
    by the WCNF path, otherwise the path is appended. On timeout, any ``o``
    line already printed yields a best-found outcome.
    """
    started = time.perf_counter()
    argv = shlex.split(command)
    if not argv:
        raise UsageError("empty solver command")
    path = None
    try:
        with tempfile.NamedTemporaryFile(
            "w", suffix=".wcnf", delete=False, encoding="utf-8"
        ) as fh:
            fh.write(to_wcnf(query, wcnf_format))
            path = fh.name
        if any("{}" in arg for arg in argv):
            argv = [arg.replace("{}", path) for arg in argv]
        else:
            argv = argv + [path]
        try:
            proc = subprocess.run(
                argv,
                capture_output=True,
                text=True,
                timeout=time_limit,
            )
            stdout = proc.stdout or ""
        except subprocess.TimeoutExpired as exc:
            stdout = exc.stdout or ""
            if isinstance(stdout, bytes):
                stdout = stdout.decode("utf-8", "replace")
            elapsed = time.perf_counter() - started
            _, weights, v_tokens = _scan_output(stdout)
            if weights:
                try:
                    assignment = _assignment_from_tokens(v_tokens, query.num_vars)
                except SolverError:
                    assignment = None
                outcome = SolveOutcome(
                    status=BEST_FOUND,
                    weight=weights[-1],
                    assignment=assignment,
                    wall_time=elapsed,
                    message="time limit expired",
                )
                return _verify_external(query, outcome)
            return SolveOutcome(
                status=TIMEOUT_NO_SOLUTION, wall_time=elapsed, message="time limit expired"
            )
        except OSError as exc:
            return SolveOutcome(
                status=SOLVER_ERROR,
                wall_time=time.perf_counter() - started,
                message=str(exc),
            )
    finally:
        if path is not None:
            try:
                os.unlink(path)
            except OSError:
                pass
    elapsed = time.perf_counter() - started
    outcome = parse_solver_output(stdout, num_vars=query.num_vars)
    if outcome.status == SOLVER_ERROR and proc.returncode not in (0, 10, 20, 30):
        detail = (proc.stderr or "").strip() or outcome.message
        return SolveOutcome(
            status=SOLVER_ERROR,
            wall_time=elapsed,
            message=f"solver exited with code {proc.returncode}: {detail}",
        )
    if outcome.status == OPTIMUM and outcome.weight is None and outcome.assignment is None:
        return SolveOutcome(
            status=SOLVER_ERROR,
            wall_time=elapsed,
            message="optimum claimed without weight or assignment",
        )
    outcome = SolveOutcome(
        status=outcome.status,
        weight=outcome.weight,
        assignment=outcome.assignment,
        wall_time=elapsed,
        message=outcome.message,
    )
    return _verify_external(query, outcome)
