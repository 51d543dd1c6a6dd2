"""Partial weighted MaxSAT query construction for one training partition.

The query over k·m′ feature variables, one noise variable per sample, and
one auxiliary variable per (negative sample, clause) has three constraint
families: unit soft clauses steering each feature variable toward the prior
rule (weight 1), unit soft clauses asking each noise variable to stay false
(weight lambda), and hard clauses tying the noise variables to actual
classification behaviour.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from imli import rules as rules_mod
from imli.errors import UsageError


@dataclass(frozen=True)
class VarTable:
    """Dense 1-based variable ids: features, then noise, then auxiliaries.

    Feature variable (l, j) gets id (l-1)·m′ + j; noise variable q gets id
    k·m′ + q; auxiliary (q, l) ids follow, grouped by negative sample in
    ascending order. ``neg_rows`` holds the 0-based indices of the negative
    samples that own auxiliaries.
    """

    k: int
    m_prime: int
    n_samples: int = 0
    neg_rows: tuple[int, ...] = ()

    @property
    def num_feature_vars(self) -> int:
        return self.k * self.m_prime

    @property
    def num_vars(self) -> int:
        return self.num_feature_vars + self.n_samples + self.k * len(self.neg_rows)

    def feature_id(self, l: int, j: int) -> int:
        """Id of b_j^l for 1-based clause l and feature j."""
        return (l - 1) * self.m_prime + j

    def noise_id(self, q: int) -> int:
        """Id of the noise variable for 1-based sample q."""
        return self.num_feature_vars + q

    def aux_id(self, neg_pos: int, l: int) -> int:
        """Id of z_q^l for the ``neg_pos``-th (0-based) negative sample."""
        return self.num_feature_vars + self.n_samples + neg_pos * self.k + l


@dataclass(frozen=True)
class MaxSatQuery:
    """A weighted clause store plus the semantic payload it encodes.

    ``soft`` holds (literal tuple, weight) pairs and ``hard`` literal tuples,
    in the deterministic order used for WCNF serialization. ``X``/``y``/
    ``prior_mask`` carry the encoded instance so solver backends can search
    over feature variables only; they are None for hand-built queries.
    """

    vars: VarTable
    soft: tuple[tuple[tuple[int, ...], int], ...]
    hard: tuple[tuple[int, ...], ...]
    lam: int = 1
    k: int = 0
    m_prime: int = 0
    X: np.ndarray | None = field(default=None, compare=False)
    y: np.ndarray | None = field(default=None, compare=False)
    prior_mask: np.ndarray | None = field(default=None, compare=False)

    @property
    def num_vars(self) -> int:
        return self.vars.num_vars

    @property
    def top(self) -> int:
        return 1 + sum(w for _, w in self.soft)

    @property
    def has_payload(self) -> bool:
        return self.X is not None


def prior_to_mask(prior, k: int, m_prime: int) -> np.ndarray:
    """Convert a prior CNF rule (or None) into a k × m′ membership matrix."""
    mask = np.zeros((k, m_prime), dtype=np.uint8)
    if prior is None:
        return mask
    if prior.form != rules_mod.CNF:
        raise UsageError("prior rule must be in CNF")
    if prior.k != k:
        raise UsageError(f"prior has {prior.k} clauses, expected {k}")
    if prior.m_prime != m_prime:
        raise UsageError(f"prior is over m'={prior.m_prime}, expected {m_prime}")
    for l, clause in enumerate(prior.clauses):
        for lit in clause:
            if lit.negated:
                raise UsageError("prior rule must use plain feature literals")
            mask[l, lit.index] = 1
    return mask


def build_query(X, y, k: int, lam: int, prior=None) -> MaxSatQuery:
    """Build the weighted MaxSAT query for one partition.

    Soft constraints: one unit clause per feature variable whose polarity
    matches membership in the prior rule (weight 1, negative when the prior
    is empty), and one unit clause ¬noise_q per sample (weight lambda).
    Hard constraints encode, per sample, that a false noise variable forces
    the rule to classify the sample correctly; negative samples use one
    auxiliary variable per clause flagging that the clause rejects them.
    """
    if lam < 1:
        raise UsageError(f"lambda must be >= 1, got {lam}")
    if k < 1:
        raise UsageError(f"clause count must be >= 1, got {k}")
    X = np.ascontiguousarray(np.asarray(X, dtype=np.uint8))
    if X.ndim != 2:
        raise UsageError("X must be a 2-D 0/1 matrix")
    y = np.ascontiguousarray(np.asarray(y, dtype=np.uint8)).ravel()
    n, m_prime = X.shape
    if y.shape[0] != n:
        raise UsageError(f"{n} samples but {y.shape[0]} labels")
    mask = prior_to_mask(prior, k, m_prime)

    neg_rows = tuple(int(q) for q in range(n) if y[q] == 0)
    vt = VarTable(k=k, m_prime=m_prime, n_samples=n, neg_rows=neg_rows)

    soft: list[tuple[tuple[int, ...], int]] = []
    for l in range(1, k + 1):
        for j in range(1, m_prime + 1):
            var = vt.feature_id(l, j)
            polarity = var if mask[l - 1, j - 1] else -var
            soft.append(((polarity,), 1))
    for q in range(1, n + 1):
        soft.append(((-vt.noise_id(q),), lam))

    hard: list[tuple[int, ...]] = []
    neg_pos = 0
    for q in range(1, n + 1):
        row = X[q - 1]
        true_js = [j for j in range(1, m_prime + 1) if row[j - 1]]
        eta = vt.noise_id(q)
        if y[q - 1]:
            for l in range(1, k + 1):
                hard.append(tuple([eta] + [vt.feature_id(l, j) for j in true_js]))
        else:
            zs = [vt.aux_id(neg_pos, l) for l in range(1, k + 1)]
            hard.append(tuple([eta] + zs))
            for l in range(1, k + 1):
                for j in true_js:
                    hard.append((-zs[l - 1], -vt.feature_id(l, j)))
            neg_pos += 1

    return MaxSatQuery(
        vars=vt,
        soft=tuple(soft),
        hard=tuple(hard),
        lam=lam,
        k=k,
        m_prime=m_prime,
        X=X,
        y=y,
        prior_mask=mask,
    )


def complete_assignment(query: MaxSatQuery, B) -> dict[int, bool]:
    """Extend a feature-variable matrix to a full hard-feasible assignment.

    Noise variables are set exactly for the misclassified samples and each
    auxiliary is set when its clause rejects its sample, which satisfies
    every hard clause for any B.
    """
    if not query.has_payload:
        raise UsageError("query carries no instance payload")
    vt = query.vars
    B = np.asarray(B, dtype=np.uint8)
    sigma: dict[int, bool] = {}
    for l in range(1, vt.k + 1):
        for j in range(1, vt.m_prime + 1):
            sigma[vt.feature_id(l, j)] = bool(B[l - 1, j - 1])
    if vt.n_samples:
        witness = (query.X.astype(np.int64) @ B.astype(np.int64).T) > 0
        pred = witness.all(axis=1)
        for q in range(1, vt.n_samples + 1):
            sigma[vt.noise_id(q)] = bool(pred[q - 1]) != bool(query.y[q - 1])
        for neg_pos, q0 in enumerate(vt.neg_rows):
            for l in range(1, vt.k + 1):
                sigma[vt.aux_id(neg_pos, l)] = not bool(witness[q0, l - 1])
    return sigma


def query_stats(query: MaxSatQuery) -> dict[str, int]:
    """Exact variable/clause/literal counts of one query."""
    literal_occurrences = sum(len(lits) for lits, _ in query.soft)
    literal_occurrences += sum(len(lits) for lits in query.hard)
    return {
        "vars": query.num_vars,
        "soft": len(query.soft),
        "hard": len(query.hard),
        "total_literal_occurrences": literal_occurrences,
    }


def weight_of_assignment(query: MaxSatQuery, sigma: dict[int, bool]):
    """Sum of weights of falsified soft clauses, or None if hard-infeasible.

    ``sigma`` must assign every variable id of the query.
    """
    for var in range(1, query.num_vars + 1):
        if var not in sigma:
            raise UsageError(f"assignment is missing variable {var}")

    def satisfied(lits) -> bool:
        return any(sigma[abs(lit)] == (lit > 0) for lit in lits)

    for lits in query.hard:
        if not satisfied(lits):
            return None
    return sum(w for lits, w in query.soft if not satisfied(lits))
