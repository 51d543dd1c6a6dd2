"""Pure-Python solver kernels; the reference the compiled core must match.

Both backends share the same integer-only PRNG (splitmix64) and draw order,
so for a given seed the compiled and pure implementations return identical
results. All candidate rules are represented as a k × m′ uint8 membership
matrix B; the query weight of B under the implied completion is

    Hamming(B, prior) + lambda * (#training samples misclassified by B).
"""

from __future__ import annotations

import time

import numpy as np

_MASK64 = (1 << 64) - 1


def _mix(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def rule_cost(X, y, B, prior, lam: int) -> int:
    """Hamming distance to the prior plus lambda per misclassified sample."""
    hamming = int(np.count_nonzero(B != prior))
    n = X.shape[0]
    if n == 0:
        return hamming
    sat = X.astype(np.int64) @ B.astype(np.int64).T > 0
    pred = sat.all(axis=1)
    errors = int(np.count_nonzero(pred != (y != 0)))
    return hamming + lam * errors


def bruteforce(X, y, prior, lam: int, k: int):
    """Exact minimum over all 2^(k*m') membership matrices.

    Candidates are enumerated so that the flat bit vector (clause-major,
    feature variable 1 first) increases lexicographically; ties keep the
    first, i.e. lexicographically smallest, optimum.
    """
    m_prime = X.shape[1]
    K = k * m_prime
    best_cost = -1
    best = None
    B = np.zeros((k, m_prime), dtype=np.uint8)
    for c in range(1 << K):
        for i in range(K):
            B[i // m_prime, i % m_prime] = (c >> (K - 1 - i)) & 1
        cost = rule_cost(X, y, B, prior, lam)
        if best_cost < 0 or cost < best_cost:
            best_cost = cost
            best = B.copy()
    return best_cost, best


def local_search(X, y, prior, lam: int, k: int, max_flips: int, noise_u16: int,
                 seed: int, time_limit: float):
    """Weighted-clause local search over membership matrices.

    Starts at B = prior (every soft prior clause satisfied). Each step picks
    a falsified soft constraint with probability proportional to its weight:
    a prior-mismatch bit is flipped back directly, while a misclassified
    sample is repaired by flipping one membership bit that can change its
    prediction (chosen greedily by resulting cost, or uniformly with
    probability noise_u16/65536). Returns the best matrix seen.
    """
    n, m_prime = X.shape
    state = seed & _MASK64

    B = prior.copy()
    # Witness counts per (sample, clause) and derived classification state.
    cnt = [[0] * k for _ in range(n)]
    nsat = [0] * n
    mis = [0] * n
    err = 0
    for q in range(n):
        row = X[q]
        for l in range(k):
            c = 0
            Bl = B[l]
            for j in range(m_prime):
                if row[j] and Bl[j]:
                    c += 1
            cnt[q][l] = c
            if c > 0:
                nsat[q] += 1
        pred = 1 if nsat[q] == k else 0
        mis[q] = 1 if pred != int(y[q]) else 0
        err += mis[q]
    # Rows touching each feature column, CSR style.
    col_rows = [[q for q in range(n) if X[q][j]] for j in range(m_prime)]

    vdiff = 0  # B starts equal to prior
    cost = vdiff + lam * err
    best_cost = cost
    best = B.copy()
    started = time.perf_counter()

    def delta_err(l: int, j: int, turning_on: bool) -> int:
        d = 0
        for q in col_rows[j]:
            c = cnt[q][l]
            if turning_on:
                if c != 0:
                    continue
                new_nsat = nsat[q] + 1
            else:
                if c != 1:
                    continue
                new_nsat = nsat[q] - 1
            old_pred = 1 if nsat[q] == k else 0
            new_pred = 1 if new_nsat == k else 0
            if old_pred != new_pred:
                yq = int(y[q])
                d += (1 if new_pred != yq else 0) - (1 if old_pred != yq else 0)
        return d

    def apply_flip(l: int, j: int):
        nonlocal vdiff, err, cost
        turning_on = B[l][j] == 0
        vdiff += 1 if B[l][j] == prior[l][j] else -1
        B[l][j] = 1 - B[l][j]
        for q in col_rows[j]:
            if turning_on:
                cnt[q][l] += 1
                if cnt[q][l] == 1:
                    nsat[q] += 1
                else:
                    continue
            else:
                cnt[q][l] -= 1
                if cnt[q][l] == 0:
                    nsat[q] -= 1
                else:
                    continue
            pred = 1 if nsat[q] == k else 0
            new_mis = 1 if pred != int(y[q]) else 0
            if new_mis != mis[q]:
                err += new_mis - mis[q]
                mis[q] = new_mis
        cost = vdiff + lam * err

    flips = 0
    while flips < max_flips:
        if cost == 0:
            break
        if flips % 256 == 0 and time.perf_counter() - started > time_limit:
            break
        total_w = vdiff + lam * err
        state, z = _mix(state)
        r = z % total_w
        if r < vdiff:
            # The r-th prior-mismatch bit in (clause, feature) order.
            seen = -1
            target = (-1, -1)
            for l in range(k):
                for j in range(m_prime):
                    if B[l][j] != prior[l][j]:
                        seen += 1
                        if seen == r:
                            target = (l, j)
                            break
                if seen == r:
                    break
            apply_flip(*target)
        else:
            e = (r - vdiff) // lam
            q = -1
            seen = -1
            for i in range(n):
                if mis[i]:
                    seen += 1
                    if seen == e:
                        q = i
                        break
            row = X[q]
            candidates = []
            if int(y[q]) == 1:
                for l in range(k):
                    if cnt[q][l] == 0:
                        for j in range(m_prime):
                            if row[j] and not B[l][j]:
                                candidates.append((l, j))
            else:
                for l in range(k):
                    for j in range(m_prime):
                        if row[j] and B[l][j]:
                            candidates.append((l, j))
            if not candidates:
                state, z = _mix(state)
                l = z % k
                state, z = _mix(state)
                j = z % m_prime
                apply_flip(l, j)
            else:
                state, z = _mix(state)
                if (z & 0xFFFF) < noise_u16:
                    state, z = _mix(state)
                    l, j = candidates[z % len(candidates)]
                else:
                    best_delta = None
                    l = j = -1
                    for cl, cj in candidates:
                        turning_on = B[cl][cj] == 0
                        dv = 1 if B[cl][cj] == prior[cl][cj] else -1
                        delta = dv + lam * delta_err(cl, cj, turning_on)
                        if best_delta is None or delta < best_delta:
                            best_delta = delta
                            l, j = cl, cj
                apply_flip(l, j)
        flips += 1
        if cost < best_cost:
            best_cost = cost
            best = B.copy()
    return best_cost, best, flips
