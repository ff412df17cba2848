"""Pure-Python BPE kernels.

Same contract as the compiled module in ``_speedups.pyx``; the two must stay
behaviorally identical (see the kernel-parity test).
"""

from __future__ import annotations


def count_pairs(words, counts):
    """Weighted adjacent-pair counts over all words.

    words: list of lists of symbol ids; counts: per-word multiplicities.
    """
    pairs = {}
    for word, c in zip(words, counts):
        for i in range(len(word) - 1):
            key = (word[i], word[i + 1])
            pairs[key] = pairs.get(key, 0) + c
    return pairs


def merge_word(word, a, b, new_id):
    """Replace every non-overlapping (a, b) occurrence left to right."""
    out = []
    i = 0
    n = len(word)
    while i < n:
        if i + 1 < n and word[i] == a and word[i + 1] == b:
            out.append(new_id)
            i += 2
        else:
            out.append(word[i])
            i += 1
    return out


def encode_greedy(word, ranks, products):
    """Apply trained merges to one word, lowest rank first.

    ranks maps (a, b) -> merge index; products maps (a, b) -> merged id.
    """
    syms = list(word)
    while len(syms) > 1:
        best_rank = -1
        best_pair = None
        for i in range(len(syms) - 1):
            r = ranks.get((syms[i], syms[i + 1]))
            if r is not None and (best_rank < 0 or r < best_rank):
                best_rank = r
                best_pair = (syms[i], syms[i + 1])
        if best_pair is None:
            break
        syms = merge_word(syms, best_pair[0], best_pair[1], products[best_pair])
    return syms
