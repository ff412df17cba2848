"""Kernel selection: compiled extension when available, else pure Python."""

try:
    from forge.tokenizer._speedups import count_pairs, encode_greedy, merge_word

    COMPILED = True
except ImportError:  # extension not built on this host
    from forge.tokenizer._fallback import count_pairs, encode_greedy, merge_word

    COMPILED = False

__all__ = ["count_pairs", "encode_greedy", "merge_word", "COMPILED"]
