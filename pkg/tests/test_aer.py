"""Label extraction over parse trees: unit behavior and golden fixtures.

Golden files under tests/data/aer_golden hold a source snippet followed by
one word<TAB>category line per non-whitespace word, checked by hand. The
test renders the extractor's output in the same shape and compares the
rendered block byte for byte.
"""

from pathlib import Path

import pytest

from forge.aer import CATEGORY_IDS, extract_labels, load_tagset
from forge.errors import DataError, FormatError
from forge.tokenizer import Vocabulary, train_bpe

GOLDEN_DIR = Path(__file__).parent / "data" / "aer_golden"
GOLDEN_FILES = sorted(GOLDEN_DIR.glob("*.txt"))

SPECIALS = ["<pad>", "<mask>", "<bos>", "<eos>", "<cpp>", "<cuda>", "<fortran>", "<c>"]


@pytest.fixture(scope="module")
def vocab():
    return Vocabulary(SPECIALS)


@pytest.fixture(scope="module")
def merged_vocab():
    corpus = [parse_fixture(p)[2] for p in GOLDEN_FILES]
    return train_bpe(corpus, 256 + len(SPECIALS) + 150, SPECIALS)


def parse_fixture(path):
    lines = path.read_text(encoding="utf-8").split("\n")
    assert lines[0].startswith("language: "), path
    assert lines[1].startswith("extended: "), path
    assert lines[2] == "--", path
    language = lines[0].split(": ", 1)[1]
    extended = lines[1].split(": ", 1)[1] == "true"
    sep = lines.index("--", 3)
    source = "\n".join(lines[3:sep]) + "\n"
    labels = "\n".join(lines[sep + 1 :])
    return language, extended, source, labels


def render(vocab, source, language, extended):
    doc = vocab.tokenize(source, language, "golden")
    tagset = load_tagset(language, extended=extended)
    labeled = extract_labels(doc, source, vocab, tagset)
    rows = []
    for s, e in doc.word_spans:
        if doc.tokens[s] in vocab.whitespace_ids():
            continue
        word = vocab.decode(doc.tokens[s:e])
        rows.append(f"{word}\t{tagset.label_name(labeled.labels[s])}")
    return "\n".join(rows) + "\n"


def label_words(vocab, source, language, extended=False):
    doc = vocab.tokenize(source, language, "t")
    tagset = load_tagset(language, extended=extended)
    labeled = extract_labels(doc, source, vocab, tagset)
    out = []
    for s, e in doc.word_spans:
        if doc.tokens[s] in vocab.whitespace_ids():
            continue
        word = vocab.decode(doc.tokens[s:e])
        out.append((word, tagset.label_name(labeled.labels[s])))
    return out


# -- golden corpus -------------------------------------------------------------


def test_golden_corpus_is_large_enough():
    assert len(GOLDEN_FILES) >= 25


@pytest.mark.parametrize("path", GOLDEN_FILES, ids=lambda p: p.stem)
def test_golden_labels(vocab, path):
    language, extended, source, want = parse_fixture(path)
    got = render(vocab, source, language, extended)
    assert got == want


@pytest.mark.parametrize("path", GOLDEN_FILES, ids=lambda p: p.stem)
def test_labels_align_with_source(vocab, path):
    language, extended, source, _ = parse_fixture(path)
    doc = vocab.tokenize(source, language, "t")
    offset = 0
    for s, e in doc.word_spans:
        word = vocab.decode(doc.tokens[s:e])
        assert source[offset : offset + len(word)] == word
        offset += len(word)
    assert offset == len(source)


@pytest.mark.parametrize("path", GOLDEN_FILES, ids=lambda p: p.stem)
def test_whole_word_label_shape(merged_vocab, path):
    """First token of a word carries the odd begin id; the rest carry the
    even continuation id; unlabeled words are zero throughout."""
    language, extended, source, _ = parse_fixture(path)
    doc = merged_vocab.tokenize(source, language, "t")
    tagset = load_tagset(language, extended=extended)
    labeled = extract_labels(doc, source, merged_vocab, tagset)
    for s, e in doc.word_spans:
        first = labeled.labels[s]
        assert first == 0 or first % 2 == 1
        rest = {labeled.labels[i] for i in range(s + 1, e)}
        assert rest <= {first + 1 if first else 0}


@pytest.mark.parametrize("path", GOLDEN_FILES, ids=lambda p: p.stem)
def test_labels_stable_before_tail_garbage(vocab, path):
    language, extended, source, _ = parse_fixture(path)
    garbage = ") = (\n" if language == "fortran" else "\n)}] ;;\n"
    tagset = load_tagset(language, extended=extended)
    doc = vocab.tokenize(source, language, "t")
    broken_doc = vocab.tokenize(source + garbage, language, "t")
    labels = extract_labels(doc, source, vocab, tagset).labels
    broken = extract_labels(broken_doc, source + garbage, vocab, tagset).labels
    assert broken[: len(labels)] == labels


# -- unit behavior -------------------------------------------------------------


def test_category_ids_are_odd():
    assert all(cid % 2 == 1 for cid in CATEGORY_IDS.values())
    assert len(set(CATEGORY_IDS.values())) == len(CATEGORY_IDS)


def test_simple_function_labels(vocab):
    got = label_words(vocab, "int add(int a, int b) { return a + b; }\n", "cpp")
    want = [
        ("int", "primitive_type"),
        ("add", "function"),
        ("(", "O"),
        ("int", "primitive_type"),
        ("a", "identifier"),
        (",", "O"),
        ("int", "primitive_type"),
        ("b", "identifier"),
        (")", "O"),
        ("{", "O"),
        ("return", "O"),
        ("a", "identifier"),
        ("+", "O"),
        ("b", "identifier"),
        (";", "O"),
        ("}", "O"),
    ]
    assert got == want


def test_parallel_builtins_follow_tagset(vocab):
    source = "__global__ void k(int *p) { p[threadIdx.x] = blockIdx.x; }\n"
    ext = dict(label_words(vocab, source, "cuda", extended=True))
    plain = dict(label_words(vocab, source, "cuda", extended=False))
    assert ext["threadIdx"] == "parallel_construct"
    assert ext["blockIdx"] == "parallel_construct"
    assert plain["threadIdx"] == "identifier"
    assert plain["blockIdx"] == "identifier"
    assert ext["k"] == plain["k"] == "function"


def test_unparsable_region_labels_O(vocab):
    source = "int ok() { return 1; }\nint bad( { ]];\n"
    got = dict(label_words(vocab, source, "cpp"))
    assert got["ok"] == "function"
    assert got["bad"] == "O"
    assert got["]"] == "O"


def test_tagset_unknown_language():
    with pytest.raises(FormatError):
        load_tagset("go")


def test_tagset_extended_flag():
    plain = load_tagset("cuda", extended=False)
    ext = load_tagset("cuda", extended=True)
    assert "parallel_builtin" not in plain.roles
    assert ext.roles["parallel_builtin"] == "parallel_construct"
    assert not plain.builtins
    assert "threadIdx" in ext.builtins


def test_num_labels():
    assert load_tagset("cpp").num_labels == 17
    assert load_tagset("cuda", extended=True).num_labels == 19
    assert load_tagset("fortran").num_labels == 17


def test_label_names_cover_both_positions():
    tagset = load_tagset("cpp")
    assert tagset.label_name(0) == "O"
    assert tagset.label_name(3) == "function"
    assert tagset.label_name(4) == "function.cont"
    with pytest.raises(DataError):
        tagset.label_name(99)


def test_document_source_mismatch_raises(vocab):
    doc = vocab.tokenize("int a;\n", "cpp", "t")
    with pytest.raises(DataError):
        extract_labels(doc, "int a_very_different_text;\n", vocab, load_tagset("cpp"))
