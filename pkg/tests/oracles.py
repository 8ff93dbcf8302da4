"""Brute-force reference implementations. Deliberately naive; never share code
with the package kernels."""

from functools import lru_cache
from itertools import combinations


def is_subsequence(sub, seq):
    it = iter(seq)
    return all(any(x == y for y in it) for x in sub)


def lcs_brute(a, b):
    a, b = list(a), list(b)
    for k in range(len(a), 0, -1):
        for idx in combinations(range(len(a)), k):
            if is_subsequence([a[i] for i in idx], b):
                return k
    return 0


def lcss_brute(a, b):
    best = 0
    for i in range(len(a)):
        for j in range(i + 1, len(a) + 1):
            for k in range(len(b)):
                for l in range(k + 1, len(b) + 1):
                    if list(a[i:j]) == list(b[k:l]):
                        best = max(best, j - i)
    return best


def lcp_scan(a, b):
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def levenshtein_recursive(a, b):
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def d(i, j):
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        if a[i] == b[j]:
            return d(i + 1, j + 1)
        return 1 + min(d(i + 1, j), d(i, j + 1), d(i + 1, j + 1))

    return d(0, 0)


def hamming_scan(a, b):
    return sum(1 for x, y in zip(a, b) if x == y)


def deltas_scan(original, completed):
    out = {}
    for i, u in enumerate(original):
        for j, v in enumerate(completed):
            if u == v:
                out[u] = j - i
    return out
