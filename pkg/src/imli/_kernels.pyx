# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled solver kernels; must behave bit-identically to _kernels_py."""

import time

import numpy as np

from libc.stdint cimport int64_t, uint8_t, uint64_t


cdef inline uint64_t _mix(uint64_t *state, uint64_t *out) nogil:
    cdef uint64_t z
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    z = z ^ (z >> 31)
    out[0] = z
    return z


cdef int64_t _cost(uint8_t[:, ::1] X, uint8_t[::1] y, uint8_t[:, ::1] B,
                   uint8_t[:, ::1] prior, int64_t lam, Py_ssize_t k) nogil:
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    cdef Py_ssize_t q, l, j
    cdef int64_t hamming = 0, errors = 0
    cdef int pred, witness
    for l in range(k):
        for j in range(m):
            if B[l, j] != prior[l, j]:
                hamming += 1
    for q in range(n):
        pred = 1
        for l in range(k):
            witness = 0
            for j in range(m):
                if X[q, j] and B[l, j]:
                    witness = 1
                    break
            if not witness:
                pred = 0
                break
        if pred != <int>y[q]:
            errors += 1
    return hamming + lam * errors


def rule_cost(X, y, B, prior, lam):
    """Hamming distance to the prior plus lambda per misclassified sample."""
    cdef uint8_t[:, ::1] Xv = X
    cdef uint8_t[::1] yv = y
    cdef uint8_t[:, ::1] Bv = B
    cdef uint8_t[:, ::1] Pv = prior
    return int(_cost(Xv, yv, Bv, Pv, lam, B.shape[0]))


def bruteforce(X, y, prior, lam, k):
    """Exact minimum over all 2^(k*m') membership matrices (lex tie-break)."""
    cdef uint8_t[:, ::1] Xv = X
    cdef uint8_t[::1] yv = y
    cdef uint8_t[:, ::1] Pv = prior
    cdef Py_ssize_t m = X.shape[1]
    cdef Py_ssize_t K = k * m
    best_arr = np.zeros((k, m), dtype=np.uint8)
    cur_arr = np.zeros((k, m), dtype=np.uint8)
    cdef uint8_t[:, ::1] best = best_arr
    cdef uint8_t[:, ::1] B = cur_arr
    cdef uint64_t c, total = <uint64_t>1 << K
    cdef Py_ssize_t i, l, j
    cdef int64_t cost, best_cost = -1
    cdef int64_t lam_c = lam
    cdef Py_ssize_t k_c = k
    with nogil:
        for c in range(total):
            for i in range(K):
                B[i // m, i % m] = <uint8_t>((c >> (K - 1 - i)) & 1)
            cost = _cost(Xv, yv, B, Pv, lam_c, k_c)
            if best_cost < 0 or cost < best_cost:
                best_cost = cost
                for l in range(k_c):
                    for j in range(m):
                        best[l, j] = B[l, j]
    return int(best_cost), best_arr


cdef int64_t _delta_err(uint8_t[:, ::1] X, uint8_t[::1] y, int64_t[:, ::1] cnt,
                        int64_t[::1] nsat, int64_t[::1] col_ptr, int64_t[::1] col_idx,
                        Py_ssize_t k, Py_ssize_t l, Py_ssize_t j, int turning_on) nogil:
    cdef int64_t d = 0
    cdef Py_ssize_t q, pos
    cdef int64_t new_nsat
    cdef int old_pred, new_pred, yq
    for pos in range(col_ptr[j], col_ptr[j + 1]):
        q = col_idx[pos]
        if turning_on:
            if cnt[q, l] != 0:
                continue
            new_nsat = nsat[q] + 1
        else:
            if cnt[q, l] != 1:
                continue
            new_nsat = nsat[q] - 1
        old_pred = 1 if nsat[q] == k else 0
        new_pred = 1 if new_nsat == k else 0
        if old_pred != new_pred:
            yq = <int>y[q]
            d += (1 if new_pred != yq else 0) - (1 if old_pred != yq else 0)
    return d


def local_search(X, y, prior, lam, k, max_flips, noise_u16, seed, time_limit):
    """Weighted-clause local search over membership matrices."""
    cdef uint8_t[:, ::1] Xv = X
    cdef uint8_t[::1] yv = y
    cdef uint8_t[:, ::1] Pv = prior
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    cdef Py_ssize_t k_c = k
    cdef int64_t lam_c = lam
    cdef int64_t noise_c = noise_u16
    cdef uint64_t state = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)

    B_arr = np.array(prior, dtype=np.uint8, copy=True)
    best_arr = B_arr.copy()
    cnt_arr = np.zeros((n, k), dtype=np.int64)
    nsat_arr = np.zeros(n, dtype=np.int64)
    mis_arr = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[:, ::1] B = B_arr
    cdef uint8_t[:, ::1] best = best_arr
    cdef int64_t[:, ::1] cnt = cnt_arr
    cdef int64_t[::1] nsat = nsat_arr
    cdef uint8_t[::1] mis = mis_arr

    cdef Py_ssize_t q, l, j, pos, i
    cdef int64_t c, err = 0, vdiff = 0
    cdef int pred
    for q in range(n):
        for l in range(k_c):
            c = 0
            for j in range(m):
                if Xv[q, j] and B[l, j]:
                    c += 1
            cnt[q, l] = c
            if c > 0:
                nsat[q] += 1
        pred = 1 if nsat[q] == k_c else 0
        mis[q] = 1 if pred != <int>yv[q] else 0
        err += mis[q]

    col_ptr_arr = np.zeros(m + 1, dtype=np.int64)
    cdef int64_t[::1] col_ptr = col_ptr_arr
    for q in range(n):
        for j in range(m):
            if Xv[q, j]:
                col_ptr[j + 1] += 1
    for j in range(m):
        col_ptr[j + 1] += col_ptr[j]
    col_idx_arr = np.zeros(col_ptr_arr[m], dtype=np.int64)
    cdef int64_t[::1] col_idx = col_idx_arr
    fill_arr = np.zeros(m, dtype=np.int64)
    cdef int64_t[::1] fill = fill_arr
    for q in range(n):
        for j in range(m):
            if Xv[q, j]:
                col_idx[col_ptr[j] + fill[j]] = q
                fill[j] += 1

    # Candidate flip buffer: at most one entry per membership bit.
    cand_arr = np.zeros((k * m, 2), dtype=np.int64)
    cdef int64_t[:, ::1] cand = cand_arr

    cdef int64_t cost = vdiff + lam_c * err
    cdef int64_t best_cost = cost
    cdef int64_t flips = 0, max_flips_c = max_flips
    cdef int64_t total_w, r, e, seen, ncand, delta, best_delta, dv
    cdef uint64_t z
    cdef Py_ssize_t fl, fj, cl, cj
    cdef int turning_on, have_delta
    cdef double started = time.perf_counter()
    cdef double limit = time_limit

    while flips < max_flips_c:
        if cost == 0:
            break
        if flips % 256 == 0 and time.perf_counter() - started > limit:
            break
        total_w = vdiff + lam_c * err
        _mix(&state, &z)
        r = <int64_t>(z % <uint64_t>total_w)
        fl = -1
        fj = -1
        if r < vdiff:
            seen = -1
            for l in range(k_c):
                for j in range(m):
                    if B[l, j] != Pv[l, j]:
                        seen += 1
                        if seen == r:
                            fl = l
                            fj = j
                            break
                if fl >= 0:
                    break
        else:
            e = (r - vdiff) // lam_c
            q = -1
            seen = -1
            for i in range(n):
                if mis[i]:
                    seen += 1
                    if seen == e:
                        q = i
                        break
            ncand = 0
            if <int>yv[q] == 1:
                for l in range(k_c):
                    if cnt[q, l] == 0:
                        for j in range(m):
                            if Xv[q, j] and not B[l, j]:
                                cand[ncand, 0] = l
                                cand[ncand, 1] = j
                                ncand += 1
            else:
                for l in range(k_c):
                    for j in range(m):
                        if Xv[q, j] and B[l, j]:
                            cand[ncand, 0] = l
                            cand[ncand, 1] = j
                            ncand += 1
            if ncand == 0:
                _mix(&state, &z)
                fl = <Py_ssize_t>(z % <uint64_t>k_c)
                _mix(&state, &z)
                fj = <Py_ssize_t>(z % <uint64_t>m)
            else:
                _mix(&state, &z)
                if <int64_t>(z & 0xFFFF) < noise_c:
                    _mix(&state, &z)
                    i = <Py_ssize_t>(z % <uint64_t>ncand)
                    fl = cand[i, 0]
                    fj = cand[i, 1]
                else:
                    best_delta = 0
                    have_delta = 0
                    for i in range(ncand):
                        cl = cand[i, 0]
                        cj = cand[i, 1]
                        turning_on = 1 if B[cl, cj] == 0 else 0
                        dv = 1 if B[cl, cj] == Pv[cl, cj] else -1
                        delta = dv + lam_c * _delta_err(
                            Xv, yv, cnt, nsat, col_ptr, col_idx, k_c, cl, cj, turning_on
                        )
                        if not have_delta or delta < best_delta:
                            have_delta = 1
                            best_delta = delta
                            fl = cl
                            fj = cj

        # Apply the chosen flip and refresh the derived state.
        turning_on = 1 if B[fl, fj] == 0 else 0
        vdiff += 1 if B[fl, fj] == Pv[fl, fj] else -1
        B[fl, fj] = 1 - B[fl, fj]
        for pos in range(col_ptr[fj], col_ptr[fj + 1]):
            q = col_idx[pos]
            if turning_on:
                cnt[q, fl] += 1
                if cnt[q, fl] == 1:
                    nsat[q] += 1
                else:
                    continue
            else:
                cnt[q, fl] -= 1
                if cnt[q, fl] == 0:
                    nsat[q] -= 1
                else:
                    continue
            pred = 1 if nsat[q] == k_c else 0
            if (1 if pred != <int>yv[q] else 0) != <int>mis[q]:
                err += (1 if pred != <int>yv[q] else 0) - <int64_t>mis[q]
                mis[q] = 1 if pred != <int>yv[q] else 0
        cost = vdiff + lam_c * err

        flips += 1
        if cost < best_cost:
            best_cost = cost
            for l in range(k_c):
                for j in range(m):
                    best[l, j] = B[l, j]
    return int(best_cost), best_arr, int(flips)
