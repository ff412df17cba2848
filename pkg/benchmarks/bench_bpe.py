"""Compare the compiled tokenizer kernels against the pure-Python fallback.

Two views, both checked for bit-identical outputs before any timing is
reported:

  kernels     encode_greedy / count_pairs / merge_word on synthetic words,
              which is what the compiled extension actually accelerates.
  end to end  train_bpe plus Vocabulary.encode on a corpus of mostly
              unique identifiers, so the per-word encode cache cannot
              absorb the work.

Run from the repository root:

    python benchmarks/bench_bpe.py --docs 200 --vocab-size 1200
"""

import argparse
import random
import time

from forge.tokenizer import _fallback, train_bpe

try:
    from forge.tokenizer import _speedups
except ImportError:
    _speedups = None

SPECIALS = ["<pad>", "<mask>", "<bos>", "<eos>", "<cpp>", "<cuda>", "<fortran>"]

FRAGMENTS = [
    "__global__ void", "int", "float", "for (int i = 0; i < n; ++i)",
    "if (tid < n)", "return", "x[i] = a * x[i] + y[i];", "threadIdx.x",
    "blockIdx.x * blockDim.x", "subroutine", "end do", "integer ::",
    "{", "}", ";", "// comment", "sum = sum + i",
]


def make_corpus(docs: int, seed: int) -> list:
    """Code-shaped text where most identifiers appear exactly once."""
    rng = random.Random(seed)
    corpus = []
    serial = 0
    for _ in range(docs):
        lines = []
        for _ in range(rng.randint(5, 30)):
            parts = rng.choices(FRAGMENTS, k=rng.randint(2, 6))
            parts.append(f"var_{serial}_{rng.randrange(1 << 20):x}")
            serial += 1
            lines.append(" ".join(parts))
        corpus.append("\n".join(lines) + "\n")
    return corpus


def make_words(count: int, seed: int) -> list:
    rng = random.Random(seed)
    return [
        [len(SPECIALS) + b
         for b in "".join(rng.choices("abcdefgh_", k=rng.randint(2, 14))).encode()]
        for _ in range(count)
    ]


def time_kernels(kernels, words, ranks, products):
    t0 = time.perf_counter()
    encoded = [kernels.encode_greedy(w, ranks, products) for w in words]
    t1 = time.perf_counter()
    pairs = kernels.count_pairs(words, [1] * len(words))
    t2 = time.perf_counter()
    merged = [kernels.merge_word(w, w[0], w[1], 1 << 20) for w in words]
    t3 = time.perf_counter()
    return (encoded, pairs, merged), (t1 - t0, t2 - t1, t3 - t2)


def time_end_to_end(kernels, corpus, vocab_size):
    t0 = time.perf_counter()
    vocab = train_bpe(corpus, vocab_size=vocab_size, specials=SPECIALS,
                      _kernels=kernels)
    train_s = time.perf_counter() - t0
    t0 = time.perf_counter()
    streams = [vocab.encode(text) for text in corpus]
    encode_s = time.perf_counter() - t0
    return vocab, streams, train_s, encode_s


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--docs", type=int, default=200)
    parser.add_argument("--words", type=int, default=50_000,
                        help="synthetic words for the kernel microbenchmark")
    parser.add_argument("--vocab-size", type=int, default=1200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _speedups is None:
        print("compiled kernels are not built; nothing to compare")
        return 0

    corpus = make_corpus(args.docs, args.seed)
    fb_vocab, fb_streams, fb_train, fb_encode = time_end_to_end(
        _fallback, corpus, args.vocab_size
    )
    words = make_words(args.words, args.seed + 1)
    fb_out, fb_times = time_kernels(_fallback, words, fb_vocab._ranks,
                                    fb_vocab._products)
    sp_out, sp_times = time_kernels(_speedups, words, fb_vocab._ranks,
                                    fb_vocab._products)
    if sp_out != fb_out:
        print("MISMATCH: kernel outputs differ")
        return 1

    print(f"kernel microbenchmark ({args.words} words)")
    for name, fb, sp in zip(("encode_greedy", "count_pairs", "merge_word"),
                            fb_times, sp_times):
        print(f"  {name:13s} fallback {fb * 1e3:7.1f} ms   "
              f"compiled {sp * 1e3:7.1f} ms   {fb / sp:4.1f}x")

    sp_vocab, sp_streams, sp_train, sp_encode = time_end_to_end(
        _speedups, corpus, args.vocab_size
    )
    if sp_streams != fb_streams:
        print("MISMATCH: end-to-end token streams differ")
        return 1
    tokens = sum(len(s) for s in fb_streams)
    total_bytes = sum(len(t.encode("utf-8")) for t in corpus)
    print(f"end to end ({args.docs} documents, {total_bytes / 1e6:.2f} MB, "
          f"{tokens} tokens, vocab {sp_vocab.size})")
    print(f"  train   fallback {fb_train:6.2f} s   compiled {sp_train:6.2f} s   "
          f"{fb_train / sp_train:4.1f}x")
    print(f"  encode  fallback {fb_encode:6.2f} s   compiled {sp_encode:6.2f} s   "
          f"{fb_encode / sp_encode:4.1f}x")
    print("outputs identical across implementations")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
