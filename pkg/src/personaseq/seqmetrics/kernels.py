"""Dynamic-programming kernels over integer-coded sequences.

Every kernel exists twice: a scalar loop compiled by numba and a row-vectorised
numpy version. ``KERNELS`` exposes both so tests can check each against the
brute-force oracles; the module-level names point at the active backend.
"""

import numpy as np

from personaseq._accel import HAVE_NUMBA, njit


# --- scalar loops (numba targets) -------------------------------------------

def _lcs_loop(a, b):
    n, m = a.shape[0], b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        cur[0] = 0
        for j in range(m):
            if a[i] == b[j]:
                cur[j + 1] = prev[j] + 1
            elif prev[j + 1] >= cur[j]:
                cur[j + 1] = prev[j + 1]
            else:
                cur[j + 1] = cur[j]
        prev, cur = cur, prev
    return prev[m]


def _lcss_loop(a, b):
    n, m = a.shape[0], b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    best = 0
    for i in range(n):
        cur[0] = 0
        for j in range(m):
            if a[i] == b[j]:
                cur[j + 1] = prev[j] + 1
                if cur[j + 1] > best:
                    best = cur[j + 1]
            else:
                cur[j + 1] = 0
        prev, cur = cur, prev
    return best


def _lev_loop(a, b):
    n, m = a.shape[0], b.shape[0]
    prev = np.arange(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        cur[0] = i + 1
        for j in range(m):
            sub = prev[j] + (0 if a[i] == b[j] else 1)
            dele = prev[j + 1] + 1
            ins = cur[j] + 1
            best = sub
            if dele < best:
                best = dele
            if ins < best:
                best = ins
            cur[j + 1] = best
        prev, cur = cur, prev
    return prev[m]


def _lcp_loop(a, b):
    k = min(a.shape[0], b.shape[0])
    for i in range(k):
        if a[i] != b[i]:
            return i
    return k


def _ham_loop(a, b):
    count = 0
    for i in range(a.shape[0]):
        if a[i] == b[i]:
            count += 1
    return count


def _all_loop(a, b):
    # One fused pass for lcss, lcs and levenshtein; lcp/hamming are linear.
    n, m = a.shape[0], b.shape[0]
    sub_prev = np.zeros(m + 1, dtype=np.int64)
    sub_cur = np.zeros(m + 1, dtype=np.int64)
    seq_prev = np.zeros(m + 1, dtype=np.int64)
    seq_cur = np.zeros(m + 1, dtype=np.int64)
    lev_prev = np.arange(m + 1, dtype=np.int64)
    lev_cur = np.zeros(m + 1, dtype=np.int64)
    lcss = 0
    for i in range(n):
        sub_cur[0] = 0
        seq_cur[0] = 0
        lev_cur[0] = i + 1
        for j in range(m):
            eq = a[i] == b[j]
            if eq:
                sub_cur[j + 1] = sub_prev[j] + 1
                if sub_cur[j + 1] > lcss:
                    lcss = sub_cur[j + 1]
                seq_cur[j + 1] = seq_prev[j] + 1
            else:
                sub_cur[j + 1] = 0
                seq_cur[j + 1] = max(seq_prev[j + 1], seq_cur[j])
            best = lev_prev[j] + (0 if eq else 1)
            if lev_prev[j + 1] + 1 < best:
                best = lev_prev[j + 1] + 1
            if lev_cur[j] + 1 < best:
                best = lev_cur[j] + 1
            lev_cur[j + 1] = best
        sub_prev, sub_cur = sub_cur, sub_prev
        seq_prev, seq_cur = seq_cur, seq_prev
        lev_prev, lev_cur = lev_cur, lev_prev
    lcp = _lcp_loop(a, b)
    ham = _ham_loop(a, b) if n == m else -1
    return lcss, lcp, lev_prev[m], seq_prev[m], ham


# --- row-vectorised numpy ---------------------------------------------------

def _lcs_numpy(a, b):
    m = b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    if m == 0:
        return 0
    for x in a:
        # L[i][j] = max_{k<=j} max(L[i-1][k], L[i-1][k-1] + eq[k])
        cand = np.maximum(prev[1:], prev[:-1] + (b == x))
        prev[1:] = np.maximum.accumulate(cand)
    return int(prev[m])


def _lcss_numpy(a, b):
    m = b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    best = 0
    if m == 0:
        return 0
    for x in a:
        row = np.zeros(m + 1, dtype=np.int64)
        row[1:] = np.where(b == x, prev[:-1] + 1, 0)
        best = max(best, int(row.max()))
        prev = row
    return best


def _lev_numpy(a, b):
    m = b.shape[0]
    idx = np.arange(m + 1, dtype=np.int64)
    prev = idx.copy()
    for i, x in enumerate(a, start=1):
        t = np.empty(m + 1, dtype=np.int64)
        t[0] = i
        t[1:] = np.minimum(prev[1:] + 1, prev[:-1] + (b != x))
        # D[i][j] = min_{k<=j} t[k] + (j - k)
        prev = np.minimum.accumulate(t - idx) + idx
    return int(prev[m])


def _lcp_numpy(a, b):
    k = min(a.shape[0], b.shape[0])
    diff = np.flatnonzero(a[:k] != b[:k])
    return int(diff[0]) if diff.size else k


def _ham_numpy(a, b):
    return int(np.count_nonzero(a == b))


def _all_numpy(a, b):
    ham = _ham_numpy(a, b) if a.shape[0] == b.shape[0] else -1
    return _lcss_numpy(a, b), _lcp_numpy(a, b), _lev_numpy(a, b), _lcs_numpy(a, b), ham


_NUMPY = {
    "lcs": _lcs_numpy,
    "lcss": _lcss_numpy,
    "lev": _lev_numpy,
    "lcp": _lcp_numpy,
    "ham": _ham_numpy,
    "all": _all_numpy,
}

KERNELS = {"numpy": _NUMPY}

if HAVE_NUMBA:
    _lcp_jit = njit(_lcp_loop)
    _ham_jit = njit(_ham_loop)
    _lcp_loop = _lcp_jit  # _all_loop resolves these globals at compile time
    _ham_loop = _ham_jit
    KERNELS["numba"] = {
        "lcs": njit(_lcs_loop),
        "lcss": njit(_lcss_loop),
        "lev": njit(_lev_loop),
        "lcp": _lcp_jit,
        "ham": _ham_jit,
        "all": njit(_all_loop),
    }

ACTIVE = "numba" if HAVE_NUMBA else "numpy"

lcs_kernel = KERNELS[ACTIVE]["lcs"]
lcss_kernel = KERNELS[ACTIVE]["lcss"]
lev_kernel = KERNELS[ACTIVE]["lev"]
lcp_kernel = KERNELS[ACTIVE]["lcp"]
ham_kernel = KERNELS[ACTIVE]["ham"]
all_kernel = KERNELS[ACTIVE]["all"]
