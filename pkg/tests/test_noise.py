"""Corruption tests.

Fraction measurements are taken from the emitted examples themselves, never
from engine internals: test documents use unique single-token words so that
masked, dropped, and inserted counts can be recovered from the output.
"""

import collections
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forge.documents import IGNORE_INDEX
from forge.noise import (
    NoiseConfig,
    NoiseEngine,
    corrupt_dae,
    corrupt_mlm,
    schedule_ratio,
)
from forge.profiles import LanguageProfile, build_profile
from forge.rng import derive_rng
from forge.tokenizer import train_bpe

SPECIALS = ["<pad>", "<mask>", "<bos>", "<eos>", "<cpp>", "<cuda>"]


def make_vocab(extra_text=""):
    return train_bpe(
        ["int index kernel " + extra_text], vocab_size=262 + 6, specials=SPECIALS
    )


def make_engine(vocab, cpp_keywords=frozenset(), cuda_words=("gpuA", "gpuB")):
    doc = vocab.tokenize(" ".join(cuda_words), language="cuda", doc_id="cudaprof")
    profiles = {
        "cpp": LanguageProfile("cpp", set(cpp_keywords), collections.Counter(), 0),
        "cuda": build_profile([doc], "cuda", set(), vocab),
    }
    return NoiseEngine(vocab, profiles, NoiseConfig())


class TestSchedule:
    def test_exact_formula_and_cap(self):
        cfg = NoiseConfig()
        for epoch in range(101):
            expect = min(0.15 + epoch * 0.025, 0.5)
            assert schedule_ratio(0.15, epoch, cfg) == expect
        assert schedule_ratio(0.25, 10, cfg) == 0.5  # capped exactly
        assert schedule_ratio(0.25, 9, cfg) == 0.475

    def test_custom_increment_and_cap(self):
        cfg = NoiseConfig(epoch_increment=0.1, max_ratio=0.3)
        assert schedule_ratio(0.0, 2, cfg) == 0.2
        assert schedule_ratio(0.0, 4, cfg) == 0.3


class TestMlm:
    def test_zero_ratio_is_identity(self):
        vocab = make_vocab()
        doc = vocab.tokenize("int index", language="cpp", doc_id="d")
        ex = corrupt_mlm(doc, NoiseConfig(mask_ratio=0.0), derive_rng(1, "m"), vocab)
        assert ex.input_tokens == doc.tokens
        assert all(t == IGNORE_INDEX for t in ex.target)
        assert ex.objective == "mlm"

    def test_masks_whole_words_and_targets_align(self):
        vocab = make_vocab()
        doc = vocab.tokenize("int index = kernel + index;", "cpp", "d")
        mask = vocab.special_id("<mask>")
        ex = corrupt_mlm(doc, NoiseConfig(mask_ratio=0.3), derive_rng(2, "m"), vocab)
        assert len(ex.input_tokens) == len(doc.tokens) == len(ex.target)
        for s, e in doc.word_spans:
            states = {ex.input_tokens[i] == mask for i in range(s, e)}
            assert len(states) == 1  # all-or-nothing per word
        for i, tok in enumerate(ex.input_tokens):
            if tok == mask:
                assert ex.target[i] == doc.tokens[i]
            else:
                assert tok == doc.tokens[i]
                assert ex.target[i] == IGNORE_INDEX
        assert mask in ex.input_tokens

    def test_ratio_one_masks_every_content_word(self):
        vocab = make_vocab()
        doc = vocab.tokenize("int index kernel", "cpp", "d")
        mask = vocab.special_id("<mask>")
        ws = vocab.whitespace_ids()
        ex = corrupt_mlm(doc, NoiseConfig(mask_ratio=1.0), derive_rng(3, "m"), vocab)
        for orig, got in zip(doc.tokens, ex.input_tokens):
            if orig in ws:
                assert got == orig
            else:
                assert got == mask

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_whole_word_property(self, seed):
        vocab = _PROP["vocab"]
        doc = _PROP["doc"]
        mask = vocab.special_id("<mask>")
        ex = corrupt_mlm(doc, NoiseConfig(mask_ratio=0.4), derive_rng(seed, "p"), vocab)
        for s, e in doc.word_spans:
            masked = [ex.input_tokens[i] == mask for i in range(s, e)]
            assert all(masked) or not any(masked)

    def test_deterministic(self):
        vocab = make_vocab()
        doc = vocab.tokenize("int index kernel index", "cpp", "d")
        a = corrupt_mlm(doc, NoiseConfig(), derive_rng(9, "x"), vocab)
        b = corrupt_mlm(doc, NoiseConfig(), derive_rng(9, "x"), vocab)
        assert json.dumps(a.to_json()) == json.dumps(b.to_json())


def _word_doc(vocab, words, language="cpp"):
    return vocab.tokenize(" ".join(words), language=language, doc_id="d")


def _measure(vocab, doc, ex, foreign_ids):
    """Recover masked/dropped/inserted counts from an emitted DAE example."""
    mask = vocab.special_id("<mask>")
    body = ex.input_tokens[1:]  # skip language sentinel
    present = collections.Counter(body)
    masked = present[mask]
    ws = vocab.whitespace_ids()
    originals = [t for t in doc.tokens if t not in ws]
    absent = sum(1 for t in originals if present[t] == 0)
    inserted = sum(c for t, c in present.items() if t in foreign_ids)
    return {
        "masked": masked,
        "dropped": absent - masked,
        "inserted": inserted,
        "content": len(originals),
    }


class TestDae:
    def test_identity_when_all_ratios_zero(self):
        vocab = make_vocab()
        engine = make_engine(vocab)
        doc = vocab.tokenize("int index kernel", "cpp", "d")
        cfg = NoiseConfig(
            mask_ratio=0, drop_ratio=0, insert_ratio=0, shuffle_window=1
        )
        ex = corrupt_dae(doc, engine.profiles, cfg, 0, derive_rng(1, "d"), vocab)
        assert ex.input_tokens == [vocab.lang_id("cpp")] + doc.tokens
        assert ex.target == doc.tokens
        assert ex.objective == "dae"
        assert ex.source_language == ex.target_language == "cpp"

    def test_shuffle_displacement_bounded(self):
        vocab = make_vocab()
        engine = make_engine(vocab)
        words = [f"w{i}" for i in range(30)]
        vocab2 = train_bpe([" ".join(words)], 262 + 6 + 40, SPECIALS)
        engine2 = make_engine(vocab2)
        doc = _word_doc(vocab2, words)
        for window in (1, 3, 5):
            cfg = NoiseConfig(
                mask_ratio=0, drop_ratio=0, insert_ratio=0, shuffle_window=window
            )
            ex = corrupt_dae(doc, engine2.profiles, cfg, 0, derive_rng(4, "s"), vocab2)
            body = ex.input_tokens[1:]
            assert sorted(body) == sorted(doc.tokens)
            counts = collections.Counter(doc.tokens)
            old_of = {t: i for i, t in enumerate(doc.tokens) if counts[t] == 1}
            for new_pos, tok in enumerate(body):
                if tok in old_of:
                    assert abs(new_pos - old_of[tok]) < window

    def test_insertions_come_from_other_language(self):
        vocab = train_bpe(
            ["alpha beta gamma delta", "gpuA gpuB gpuC"], 262 + 60, SPECIALS
        )
        engine = make_engine(vocab, cuda_words=("gpuA", "gpuB", "gpuC"))
        doc = _word_doc(vocab, ["alpha", "beta", "gamma", "delta"] * 5)
        cfg = NoiseConfig(mask_ratio=0, drop_ratio=0, insert_ratio=0.3)
        ex = corrupt_dae(doc, engine.profiles, cfg, 0, derive_rng(5, "i"), vocab)
        foreign_texts = {"gpuA", "gpuB", "gpuC"}
        extras = collections.Counter(ex.input_tokens[1:])
        extras.subtract(collections.Counter(doc.tokens))
        inserted_ids = [t for t, c in extras.items() if c > 0 for _ in range(c)]
        assert inserted_ids, "insertion did nothing"
        recovered = {vocab.decode([t]) for t in inserted_ids}
        assert recovered <= foreign_texts
        # Inserted noise never leaks into the reconstruction target.
        assert ex.target == doc.tokens

    def test_deterministic_bytes(self):
        vocab = make_vocab()
        engine = make_engine(vocab)
        doc = vocab.tokenize("int index kernel index int", "cpp", "d")
        outs = {
            json.dumps(
                corrupt_dae(
                    doc, engine.profiles, NoiseConfig(), 3, derive_rng(7, "z"), vocab
                ).to_json(),
                sort_keys=True,
            )
            for _ in range(3)
        }
        assert len(outs) == 1

    def test_epoch_raises_corruption(self):
        vocab = train_bpe(
            [" ".join(f"w{i}" for i in range(60)) + " gpuA gpuB"],
            262 + 200,
            SPECIALS,
        )
        engine = make_engine(vocab)
        doc = _word_doc(vocab, [f"w{i}" for i in range(60)])
        foreign = set()
        for w in ("gpuA", "gpuB"):
            foreign.update(vocab.encode(w))
        low = _measure(
            vocab,
            doc,
            corrupt_dae(doc, engine.profiles, NoiseConfig(), 0, derive_rng(8, "e"), vocab),
            foreign,
        )
        high = _measure(
            vocab,
            doc,
            corrupt_dae(doc, engine.profiles, NoiseConfig(), 8, derive_rng(8, "e"), vocab),
            foreign,
        )
        assert high["dropped"] > low["dropped"]
        assert high["masked"] > low["masked"]


class TestCalibration:
    """Small-scale Monte-Carlo; the acceptance suite runs the full version."""

    def test_fractions_track_config(self):
        words = [f"kw{i}" for i in range(20)] + [f"plain{i}" for i in range(80)]
        vocab = train_bpe(
            [" ".join(words) + " gpuA gpuB"], 262 + 6 + 420, SPECIALS
        )
        engine = NoiseEngine(
            vocab,
            {
                "cpp": LanguageProfile(
                    "cpp", {f"kw{i}" for i in range(20)}, collections.Counter(), 0
                ),
                "cuda": build_profile(
                    [vocab.tokenize("gpuA gpuB", "cuda", "p")], "cuda", set(), vocab
                ),
            },
            NoiseConfig(),
        )
        doc = _word_doc(vocab, words)
        assert len([t for t in doc.tokens if t not in vocab.whitespace_ids()]) == 100
        foreign = set(vocab.encode("gpuA")) | set(vocab.encode("gpuB"))
        agg = collections.Counter()
        trials = 400
        for i in range(trials):
            ex = corrupt_dae(
                doc, engine.profiles, NoiseConfig(), 0, derive_rng(i, "cal"), vocab
            )
            agg.update(_measure(vocab, doc, ex, foreign))
        n = trials * 100
        assert abs(agg["masked"] / n - 0.15) < 0.02
        assert abs(agg["dropped"] / n - 0.25) < 0.02
        assert abs(agg["inserted"] / n - 0.15) < 0.02

    def test_keyword_words_drop_more(self):
        words = [f"kw{i}" for i in range(30)] + [f"plain{i}" for i in range(70)]
        kws = {f"kw{i}" for i in range(30)}
        vocab = train_bpe([" ".join(words) + " gpuA"], 262 + 6 + 420, SPECIALS)
        engine = NoiseEngine(
            vocab,
            {
                "cpp": LanguageProfile("cpp", kws, collections.Counter(), 0),
                "cuda": build_profile(
                    [vocab.tokenize("gpuA", "cuda", "p")], "cuda", set(), vocab
                ),
            },
            NoiseConfig(),
        )
        doc = _word_doc(vocab, words)
        cfg = NoiseConfig(mask_ratio=0, insert_ratio=0, drop_ratio=0.2)
        kw_ids = {vocab.encode(w)[0] for w in kws}
        plain_ids = {vocab.encode(f"plain{i}")[0] for i in range(70)}
        kw_dropped = plain_dropped = 0
        trials = 600
        for i in range(trials):
            ex = corrupt_dae(doc, engine.profiles, cfg, 0, derive_rng(i, "kw"), vocab)
            present = set(ex.input_tokens)
            kw_dropped += sum(1 for t in kw_ids if t not in present)
            plain_dropped += sum(1 for t in plain_ids if t not in present)
        kw_rate = kw_dropped / (trials * 30)
        plain_rate = plain_dropped / (trials * 70)
        assert plain_rate > 0
        assert abs(kw_rate / plain_rate - 3.0) < 0.45  # 15% slack at this scale


class TestValidation:
    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            NoiseConfig(mask_ratio=-0.1).validate()
        with pytest.raises(ValueError):
            NoiseConfig(shuffle_window=0).validate()
        with pytest.raises(ValueError):
            NoiseConfig(max_ratio=1.5).validate()
        NoiseConfig().validate()


_PROP = {}


def _setup_prop():
    vocab = train_bpe(
        ["alphabetic kernels indexes variables computations"], 262 + 6 + 30, SPECIALS
    )
    _PROP["vocab"] = vocab
    _PROP["doc"] = vocab.tokenize(
        "alphabetic kernels indexes variables computations kernels", "cpp", "p"
    )


_setup_prop()
