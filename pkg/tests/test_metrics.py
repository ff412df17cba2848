"""Metric oracles: frozen hand computations plus independent brute-force
implementations written directly from the metric definitions. The package
code must agree with these within 1e-6 (exactly, for the tree and def-use
components on small programs)."""

import math
import random
from collections import Counter

import pytest

from forge.errors import DataError, EmptyReference
from forge.metrics import bleu, chrf, codebleu, corpus_report, rouge_l
from forge.metrics.codebleu import dataflow_edges, subtree_signatures
from forge.syntax import parse_source
from forge.tokenizer import segment_words


def words(text):
    return [w for w in segment_words(text) if not w.isspace()]


# -- independent oracles ---------------------------------------------------


def oracle_bleu(hyp_text, ref_texts, max_n=4):
    hyp = words(hyp_text)
    refs = [words(r) for r in ref_texts]
    if not hyp:
        return 0.0
    orders = min(max_n, len(hyp))
    log_sum = 0.0
    for n in range(1, orders + 1):
        hyp_grams = Counter(tuple(hyp[i : i + n]) for i in range(len(hyp) - n + 1))
        total = sum(hyp_grams.values())
        matched = 0
        for gram, count in hyp_grams.items():
            best = max(
                sum(1 for i in range(len(r) - n + 1) if tuple(r[i : i + n]) == gram)
                for r in refs
            )
            matched += min(count, best)
        if n == 1:
            if matched == 0:
                return 0.0
            p = matched / total
        else:
            p = (matched + 1) / (total + 1)
        log_sum += math.log(p)
    geo = math.exp(log_sum / orders)
    c = len(hyp)
    r = min((abs(len(t) - c), len(t)) for t in refs)[1]
    bp = 1.0 if c > r else math.exp(1 - r / c) if c else 0.0
    return 100.0 * bp * geo


def oracle_chrf(hyp_text, ref_text, n=6, beta=2.0):
    hyp = "".join(hyp_text.split())
    ref = "".join(ref_text.split())
    fs = []
    for order in range(1, n + 1):
        hgrams = Counter(hyp[i : i + order] for i in range(len(hyp) - order + 1))
        rgrams = Counter(ref[i : i + order] for i in range(len(ref) - order + 1))
        if not hgrams and not rgrams:
            continue
        overlap = sum((hgrams & rgrams).values())
        p = overlap / sum(hgrams.values()) if hgrams else 0.0
        r = overlap / sum(rgrams.values()) if rgrams else 0.0
        f = 0.0
        if p and r:
            f = (1 + beta * beta) * p * r / (beta * beta * p + r)
        fs.append(f)
    return 100.0 * sum(fs) / len(fs) if fs else 0.0


def oracle_rouge_l(hyp_text, ref_text, beta=1.0):
    hyp = words(hyp_text)
    ref = words(ref_text)
    if not hyp or not ref:
        return 100.0 if hyp == ref else 0.0
    table = [[0] * (len(ref) + 1) for _ in range(len(hyp) + 1)]
    for i in range(1, len(hyp) + 1):
        for j in range(1, len(ref) + 1):
            if hyp[i - 1] == ref[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    lcs = table[-1][-1]
    p = lcs / len(hyp)
    r = lcs / len(ref)
    if p == 0 or r == 0:
        return 0.0
    return 100.0 * (1 + beta * beta) * p * r / (r + beta * beta * p)


def oracle_subtrees(root):
    """Multiset of internal subtrees as nested kind tuples."""
    out = Counter()

    def shape(node):
        if not node.children:
            return node.kind
        t = (node.kind, tuple(shape(c) for c in node.children))
        out[t] += 1
        return t

    shape(root)
    return out


# -- frozen hand computations ----------------------------------------------


def test_bleu_identical_is_100():
    src = "int main() { return 0; }"
    assert bleu(src, [src]) == pytest.approx(100.0)


def test_bleu_hand_example():
    # hyp "the cat" vs ref "the cat sat": unigram 2/2, bigram (1+1)/(1+1),
    # effective orders 1..2, BP = exp(1 - 3/2).
    want = 100.0 * math.exp(1 - 3 / 2)
    assert bleu("the cat", ["the cat sat"]) == pytest.approx(want, abs=1e-9)


def test_bleu_disjoint_is_0():
    assert bleu("aa bb cc", ["dd ee ff"]) == 0.0


def test_bleu_empty_hypothesis_is_0():
    assert bleu("", ["x y"]) == 0.0


def test_bleu_requires_reference():
    with pytest.raises(EmptyReference):
        bleu("x", [])


def test_chrf_identical_is_100():
    assert chrf("kernel<<<1, 2>>>(x);", "kernel<<<1, 2>>>(x);") == pytest.approx(100.0)


def test_chrf_hand_example():
    # "abc" vs "abd": orders 1..3 present; F1 = 2/3, F2 = 1/2, F3 = 0;
    # orders 4..6 empty on both sides and excluded. Mean = 7/18.
    assert chrf("abc", "abd") == pytest.approx(100.0 * 7 / 18, abs=1e-9)


def test_chrf_empty_hypothesis_is_0():
    assert chrf("", "abc") == 0.0


def test_chrf_ignores_whitespace():
    assert chrf("a b\tc", "abc") == pytest.approx(100.0)


def test_rouge_identical_is_100():
    assert rouge_l("for (;;) {}", "for (;;) {}") == pytest.approx(100.0)


def test_rouge_hand_example():
    # hyp "the cat" vs ref "the cat sat": LCS 2, P = 1, R = 2/3, F1 = 0.8.
    assert rouge_l("the cat", "the cat sat") == pytest.approx(80.0, abs=1e-9)


def test_rouge_disjoint_is_0():
    assert rouge_l("aa bb", "cc dd") == 0.0


# -- oracle agreement on random pairs ----------------------------------------


WORD_POOL = (
    "int float if for while return x y z i j n acc buf data ( ) { } [ ] ; = + - * / < >"
).split()


def random_pairs(count, seed):
    rng = random.Random(seed)
    pairs = []
    for _ in range(count):
        hyp = " ".join(rng.choices(WORD_POOL, k=rng.randint(0, 14)))
        ref = " ".join(rng.choices(WORD_POOL, k=rng.randint(1, 14)))
        pairs.append((hyp, ref))
    return pairs


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_bleu_matches_oracle(seed):
    for hyp, ref in random_pairs(20, seed):
        assert bleu(hyp, [ref]) == pytest.approx(oracle_bleu(hyp, [ref]), abs=1e-6)


def test_bleu_multi_reference_matches_oracle():
    pairs = random_pairs(40, 99)
    for (hyp, ref1), (_, ref2) in zip(pairs[::2], pairs[1::2]):
        assert bleu(hyp, [ref1, ref2]) == pytest.approx(
            oracle_bleu(hyp, [ref1, ref2]), abs=1e-6
        )


@pytest.mark.parametrize("seed", [4, 5, 6])
def test_chrf_matches_oracle(seed):
    for hyp, ref in random_pairs(20, seed):
        assert chrf(hyp, ref) == pytest.approx(oracle_chrf(hyp, ref), abs=1e-6)


@pytest.mark.parametrize("seed", [7, 8, 9])
def test_rouge_matches_oracle(seed):
    for hyp, ref in random_pairs(20, seed):
        assert rouge_l(hyp, ref) == pytest.approx(oracle_rouge_l(hyp, ref), abs=1e-6)


# -- CodeBLEU ----------------------------------------------------------------


KERNEL = """__global__ void saxpy(int n, float a, float *x, float *y) {
  int i = blockIdx.x * blockDim.x + threadIdx.x;
  if (i < n) y[i] = a * x[i] + y[i];
}
"""


def test_codebleu_identical_kernel_is_100():
    got = codebleu(KERNEL, KERNEL, "cuda")
    assert got.score == pytest.approx(100.0)
    assert got.ngram == pytest.approx(100.0)
    assert got.weighted_ngram == pytest.approx(100.0)
    assert got.ast_match == pytest.approx(100.0)
    assert got.dataflow_match == pytest.approx(100.0)
    assert not got.excluded


def test_codebleu_decomposition():
    hyp = KERNEL.replace("saxpy", "scaled_add").replace("a *", "s *")
    got = codebleu(hyp, KERNEL, "cuda")
    parts = {
        "ngram": got.ngram,
        "weighted_ngram": got.weighted_ngram,
        "ast_match": got.ast_match,
        "dataflow_match": got.dataflow_match,
    }
    total = sum(0.25 * v for v in parts.values())
    assert got.score == pytest.approx(total, abs=1e-9)


def test_codebleu_rename_keeps_structure():
    # Renaming one non-keyword identifier: keyword-weighted n-gram backs off
    # less than the plain one, and the tree shape is untouched.
    hyp = KERNEL.replace("float a", "float s").replace("a *", "s *")
    got = codebleu(hyp, KERNEL, "cuda")
    assert got.ast_match == pytest.approx(100.0)
    assert got.weighted_ngram > got.ngram


def test_codebleu_parse_failure_excludes_tree_components():
    got = codebleu(") } ] (", ") } ] (", "cpp")
    assert got.ast_match is None
    assert got.dataflow_match is None
    assert set(got.excluded) == {"ast_match", "dataflow_match"}
    # Remaining components renormalize: identical text still scores 100.
    assert got.score == pytest.approx(100.0)


def test_codebleu_vacuous_dataflow_excluded():
    src = "int zero() { return 0; }\n"
    got = codebleu(src, src, "cpp")
    assert got.dataflow_match is None
    assert got.excluded == ("dataflow_match",)
    assert got.score == pytest.approx(100.0)


AST_PAIRS = [
    ("int f() { return 1; }", "int f() { return 2; }", "cpp"),
    ("int f() { return g(); }", "int f() { return h(1); }", "cpp"),
    ("void a() { int x = 0; x++; }", "void a() { int y = 0; y--; }", "cpp"),
    ("float m(float v) { return v * v; }", "float m(float v) { return v + v; }", "cpp"),
    ("int f(int a, int b) { return a; }", "int f(int a) { return a; }", "cpp"),
    ("void k() { for (int i = 0; i < 9; i++) s += i; }", "void k() { s += 9; }", "cpp"),
    ("__global__ void k(int *p) { p[0] = 1; }", KERNEL, "cuda"),
    ("int f() { if (c) return 1; return 0; }", "int f() { return c ? 1 : 0; }", "cpp"),
    ("struct P { int x; };", "struct Q { int x; int y; };", "cpp"),
    ("int f() { while (a) a -= 1; return a; }", "int f() { return a; }", "cpp"),
]


@pytest.mark.parametrize("hyp,ref,lang", AST_PAIRS)
def test_ast_match_equals_bruteforce(hyp, ref, lang):
    hyp_sigs = subtree_signatures(parse_source(hyp, lang))
    ref_sigs = subtree_signatures(parse_source(ref, lang))
    got = sum((hyp_sigs & ref_sigs).values()) / sum(ref_sigs.values())

    want_hyp = oracle_subtrees(parse_source(hyp, lang))
    want_ref = oracle_subtrees(parse_source(ref, lang))
    want = sum((want_hyp & want_ref).values()) / sum(want_ref.values())
    assert got == pytest.approx(want, abs=0)

    scored = codebleu(hyp, ref, lang)
    assert scored.ast_match == pytest.approx(100.0 * want, abs=1e-9)


def test_dataflow_edges_straight_line_c():
    # int f(int a, int b) { int c = a + b; c = c * a; return c; }
    # Events: def a, def b, use a, use b, def c, use c, use a, def c, use c.
    # First-appearance order: a -> var0, b -> var1, c -> var2.
    src = "int f(int a, int b) { int c = a + b; c = c * a; return c; }"
    got = dataflow_edges(parse_source(src, "cpp"), src, "cpp")
    want = [
        ("var0", 0, 0),  # a in the initializer, first use under its def
        ("var1", 0, 0),  # b in the initializer
        ("var2", 0, 0),  # c on the rhs of the reassignment
        ("var0", 0, 1),  # a again, second use under def 0
        ("var2", 1, 0),  # c in the return, governed by the reassignment
    ]
    assert got == want


def test_dataflow_edges_use_before_def():
    src = "int f() { int y = g + 1; g = y; return g; }"
    got = dataflow_edges(parse_source(src, "cpp"), src, "cpp")
    want = [
        ("var0", -1, 0),  # g read before any definition
        ("var1", 0, 0),  # y on the rhs of the assignment to g
        ("var0", 0, 0),  # g in the return, now governed by its first def
    ]
    assert got == want


def test_dataflow_edges_fortran():
    src = """subroutine s(n)
  integer, intent(in) :: n
  integer :: i, total
  total = 0
  do i = 1, n
    total = total + i
  end do
end subroutine s
"""
    # Events: def n (argument), def n (declaration), def i, def total,
    # def total (= 0), def i (do), use n, use total, use i, def total.
    got = dataflow_edges(parse_source(src, "fortran"), src, "fortran")
    want = [
        ("var0", 1, 0),  # n as the do bound, governed by its declaration
        ("var2", 1, 0),  # total on the rhs, governed by "total = 0"
        ("var1", 1, 0),  # i on the rhs, governed by the do header
    ]
    assert got == want


def test_dataflow_recall_hand_computed():
    ref = "int f(int a) { int b = a; return b; }"
    hyp = "int f(int a) { return a; }"
    # ref edges: (var0,0,0) for a, (var1,0,0) for b -> 2 edges.
    # hyp edges: (var0,0,0) for a -> intersection 1, recall 1/2.
    got = codebleu(hyp, ref, "cpp")
    assert got.dataflow_match == pytest.approx(50.0)


def test_codebleu_weights_must_sum_to_one():
    with pytest.raises(DataError):
        codebleu("int a;", "int a;", "cpp", weights=(0.5, 0.5, 0.5, 0.5))


# -- corpus aggregation --------------------------------------------------------


def test_corpus_single_pair_matches_sentence_scores():
    hyp = "int add(int a, int b) { return a + b; }"
    ref = "int add(int x, int y) { return x + y; }"
    report = corpus_report([(hyp, ref)], "cpp")
    assert report.corpus_bleu == pytest.approx(bleu(hyp, [ref]))
    assert report.mean_bleu == pytest.approx(bleu(hyp, [ref]))
    assert report.mean_chrf == pytest.approx(chrf(hyp, ref))
    assert report.mean_rouge_l == pytest.approx(rouge_l(hyp, ref))
    assert report.mean_codebleu == pytest.approx(codebleu(hyp, ref, "cpp").score)


def test_corpus_identical_pairs_score_100():
    sources = [KERNEL, "int main() { return 0; }\n"]
    report = corpus_report([(s, s) for s in sources], "cuda")
    assert report.corpus_bleu == pytest.approx(100.0)
    assert report.mean_bleu == pytest.approx(100.0)
    assert report.mean_chrf == pytest.approx(100.0)
    assert report.mean_rouge_l == pytest.approx(100.0)
    assert report.mean_codebleu == pytest.approx(100.0)


def test_corpus_pooled_bleu_matches_pooled_oracle():
    pairs = [
        ("the cat", "the cat sat"),
        ("a b c d", "a b c d"),
        ("x y", "p q r"),
    ]
    # Pooled counts, orders with any hypothesis n-grams:
    # 1-grams: matched 2 + 4 + 0 = 6 of 8; 2-grams: 1 + 3 + 0 = 4 of 5;
    # 3-grams: 2 of 2; 4-grams: 1 of 1 (only the second pair reaches them).
    # BP: c = 8, r = 10 -> exp(1 - 10/8).
    p1 = 6 / 8
    p2 = (4 + 1) / (5 + 1)
    p3 = (2 + 1) / (2 + 1)
    p4 = (1 + 1) / (1 + 1)
    want = 100.0 * math.exp(1 - 10 / 8) * (p1 * p2 * p3 * p4) ** 0.25
    report = corpus_report(pairs, "cpp")
    assert report.corpus_bleu == pytest.approx(want, abs=1e-9)


def test_corpus_requires_pairs():
    with pytest.raises(DataError):
        corpus_report([], "cpp")


def test_report_round_trips_to_json():
    report = corpus_report([(KERNEL, KERNEL)], "cuda")
    data = report.to_json()
    assert data["corpus_bleu"] == pytest.approx(100.0)
    assert data["pairs"][0]["codebleu"] == pytest.approx(100.0)


# -- bounds over real snippets -------------------------------------------------


def golden_sources():
    from pathlib import Path

    out = []
    for path in sorted((Path(__file__).parent / "data" / "aer_golden").glob("*.txt")):
        lines = path.read_text(encoding="utf-8").split("\n")
        sep = lines.index("--", 3)
        out.append(("\n".join(lines[3:sep]) + "\n", lines[0].split(": ", 1)[1]))
    return out


def test_self_score_is_100_on_real_snippets():
    for source, language in golden_sources():
        assert bleu(source, [source]) == pytest.approx(100.0)
        assert chrf(source, source) == pytest.approx(100.0)
        assert rouge_l(source, source) == pytest.approx(100.0)
        assert codebleu(source, source, language).score == pytest.approx(100.0)


def test_scores_bounded_on_cross_pairs():
    snippets = golden_sources()
    for (hyp, lang), (ref, _) in zip(snippets, snippets[1:]):
        for value in (
            bleu(hyp, [ref]),
            chrf(hyp, ref),
            rouge_l(hyp, ref),
            codebleu(hyp, ref, lang).score,
        ):
            assert 0.0 <= value <= 100.0
