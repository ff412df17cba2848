# cython: language_level=3
"""Compiled BPE kernels.

Behaviorally identical to ``_fallback.py``; the pure-Python module is the
reference and the parity test keeps the two in sync.
"""


def count_pairs(list words, list counts):
    cdef dict pairs = {}
    cdef list word
    cdef Py_ssize_t i, n, wi
    cdef long c
    cdef tuple key
    for wi in range(len(words)):
        word = <list>words[wi]
        c = <long>counts[wi]
        n = len(word)
        for i in range(n - 1):
            key = (word[i], word[i + 1])
            if key in pairs:
                pairs[key] = <long>pairs[key] + c
            else:
                pairs[key] = c
    return pairs


def merge_word(list word, long a, long b, long new_id):
    cdef list out = []
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t n = len(word)
    cdef long cur
    while i < n:
        cur = <long>word[i]
        if cur == a and i + 1 < n and <long>word[i + 1] == b:
            out.append(new_id)
            i += 2
        else:
            out.append(cur)
            i += 1
    return out


def encode_greedy(word, dict ranks, dict products):
    cdef list syms = list(word)
    cdef Py_ssize_t i, n
    cdef long best_rank, r
    cdef tuple best_pair, key
    cdef object ro
    while len(syms) > 1:
        best_rank = -1
        best_pair = None
        n = len(syms)
        for i in range(n - 1):
            key = (syms[i], syms[i + 1])
            ro = ranks.get(key)
            if ro is not None:
                r = <long>ro
                if best_rank < 0 or r < best_rank:
                    best_rank = r
                    best_pair = key
        if best_pair is None:
            break
        syms = merge_word(
            syms, <long>best_pair[0], <long>best_pair[1], <long>products[best_pair]
        )
    return syms
