"""CNF/DNF classification rules over binarized feature literals."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from imli.discretizer import (
    BOOL_NEG,
    BOOL_POS,
    CAT_EQ,
    CAT_NEQ,
    THR_GE,
    THR_LT,
    LiteralMeta,
    complement_meta,
)
from imli.errors import DataError

CNF = "cnf"
DNF = "dnf"


@dataclass(frozen=True)
class Literal:
    """One condition inside a rule clause.

    ``index`` points at a column of the binarized matrix; ``negated`` flips
    its value (used by rule negation, where the complemented condition need
    not exist as a column). ``meta`` always describes the effective
    condition, so rendering never needs the flag.
    """

    index: int
    meta: LiteralMeta
    negated: bool = False

    def value(self, sample) -> int:
        bit = int(sample[self.index])
        return 1 - bit if self.negated else bit

    def value_raw(self, cell) -> int:
        """Evaluate the condition directly on a raw (pre-binarization) cell."""
        kind = self.meta.kind
        if kind == BOOL_POS:
            return 1 if float(cell) == 1 else 0
        if kind == BOOL_NEG:
            return 0 if float(cell) == 1 else 1
        if kind == CAT_EQ:
            return 1 if str(cell) == self.meta.category else 0
        if kind == CAT_NEQ:
            return 0 if str(cell) == self.meta.category else 1
        value = float(cell)
        if kind == THR_GE:
            return 1 if value >= self.meta.tval else 0
        return 1 if value < self.meta.tval else 0

    def display(self) -> str:
        return self.meta.display()

    def complement(self) -> "Literal":
        return Literal(index=self.index, meta=complement_meta(self.meta), negated=not self.negated)


@dataclass(frozen=True)
class Rule:
    """A k-clause CNF or DNF formula over feature literals.

    CNF clauses are disjunctions joined by AND; DNF clauses are conjunctions
    joined by OR. Clauses may be empty; duplicate literals within a clause
    are forbidden.
    """

    form: str
    clauses: tuple[tuple[Literal, ...], ...]
    m_prime: int

    def __post_init__(self):
        if self.form not in (CNF, DNF):
            raise ValueError(f"unknown rule form {self.form!r}")
        for clause in self.clauses:
            keys = [(lit.index, lit.negated) for lit in clause]
            if len(set(keys)) != len(keys):
                raise ValueError("duplicate literal within a clause")

    @property
    def k(self) -> int:
        return len(self.clauses)

    def clause_indices(self, l: int) -> set[int]:
        """Plain (non-negated) column indices of clause ``l`` (0-based)."""
        return {lit.index for lit in self.clauses[l] if not lit.negated}


def empty_rule(k: int, m_prime: int, form: str = CNF) -> Rule:
    return Rule(form=form, clauses=tuple(() for _ in range(k)), m_prime=m_prime)


def predict(rule: Rule, sample) -> int:
    """Evaluate the rule on one binarized sample (length m′).

    An empty disjunction is 0 and an empty conjunction is 1, so an empty CNF
    rule accepts everything and an empty DNF rule rejects everything.
    """
    if len(sample) != rule.m_prime:
        raise DataError(f"sample length {len(sample)} != m'={rule.m_prime}")
    if rule.form == CNF:
        return int(all(any(lit.value(sample) for lit in clause) for clause in rule.clauses))
    return int(any(all(lit.value(sample) for lit in clause) for clause in rule.clauses))


def predict_many(rule: Rule, X) -> list[int]:
    return [predict(rule, row) for row in X]


def predict_raw(rule: Rule, row) -> int:
    """Evaluate the rule on a raw row of cells indexed by source column."""
    def lit_value(lit: Literal) -> int:
        return lit.value_raw(row[lit.meta.source_column])

    if rule.form == CNF:
        return int(all(any(lit_value(l) for l in clause) for clause in rule.clauses))
    return int(any(all(lit_value(l) for l in clause) for clause in rule.clauses))


def negate(rule: Rule) -> Rule:
    """De Morgan dual: flips CNF↔DNF and complements every literal."""
    form = DNF if rule.form == CNF else CNF
    clauses = tuple(tuple(lit.complement() for lit in clause) for clause in rule.clauses)
    return Rule(form=form, clauses=clauses, m_prime=rule.m_prime)


def rule_size(rule: Rule) -> int:
    """Total number of literals across all clauses."""
    return sum(len(clause) for clause in rule.clauses)


def format_rule(rule: Rule) -> str:
    """Render as human-readable text, e.g. ``(a OR b) AND (c)`` for CNF."""
    inner, outer = ("OR", "AND") if rule.form == CNF else ("AND", "OR")
    if not rule.clauses:
        return "(TRUE)" if rule.form == CNF else "(FALSE)"
    parts = []
    for clause in rule.clauses:
        if not clause:
            parts.append("(FALSE)" if rule.form == CNF else "(TRUE)")
        else:
            parts.append("(" + f" {inner} ".join(lit.display() for lit in clause) + ")")
    return f" {outer} ".join(parts)


def _literal_to_json(lit: Literal) -> dict:
    payload = {
        "index": lit.index,
        "negated": lit.negated,
        "source_column": lit.meta.source_column,
        "source_name": lit.meta.source_name,
        "kind": lit.meta.kind,
    }
    if lit.meta.category is not None:
        payload["category"] = lit.meta.category
    if lit.meta.tval is not None:
        payload["threshold"] = lit.meta.tval
    return payload


def _literal_from_json(payload: dict) -> Literal:
    kind = payload.get("kind")
    if kind not in (BOOL_POS, BOOL_NEG, CAT_EQ, CAT_NEQ, THR_GE, THR_LT):
        raise DataError(f"unknown literal kind {kind!r}")
    meta = LiteralMeta(
        source_column=payload["source_column"],
        source_name=payload["source_name"],
        kind=kind,
        category=payload.get("category"),
        tval=payload.get("threshold"),
    )
    return Literal(index=payload["index"], meta=meta, negated=payload.get("negated", False))


def rule_to_json(rule: Rule) -> str:
    doc = {
        "schema": 1,
        "form": rule.form,
        "k": rule.k,
        "m_prime": rule.m_prime,
        "clauses": [[_literal_to_json(lit) for lit in clause] for clause in rule.clauses],
        "text": format_rule(rule),
    }
    return json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def rule_from_json(text: str) -> Rule:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed rule JSON: {exc}") from exc
    if doc.get("schema") != 1:
        raise DataError(f"unsupported rule schema {doc.get('schema')!r}")
    clauses = tuple(
        tuple(_literal_from_json(item) for item in clause) for clause in doc["clauses"]
    )
    return Rule(form=doc["form"], clauses=clauses, m_prime=doc["m_prime"])


def save(rule: Rule, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(rule_to_json(rule))


def load(path) -> Rule:
    try:
        with open(path, encoding="utf-8") as fh:
            return rule_from_json(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read rule file {path}: {exc}") from exc
