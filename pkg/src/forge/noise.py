"""Corruption for denoising pretraining.

Two flavors: whole-word masking (MLM) and the composite DAE corruption used
during unsupervised translation training. DAE applies, in this order:

1. weighted word dropping (keywords dropped ``keyword_weight`` times more
   often, renormalized so the expected dropped fraction stays on schedule),
2. whole-word masking,
3. insertion of words sampled from another language's frequency profile,
4. local shuffling within fixed-size windows,

then prepends the document's language sentinel. All ratios are measured
against the document's original content-token count (whitespace tokens are
never corrupted and do not count). Ratios grow linearly with the epoch via
:func:`schedule_ratio` and saturate at ``max_ratio``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from forge.documents import IGNORE_INDEX, TokenizedDocument, TrainingExample
from forge.profiles import LanguageProfile, sample_word
from forge.tokenizer import Vocabulary

MASK_TOKEN = "<mask>"


@dataclass(frozen=True)
class NoiseConfig:
    mask_ratio: float = 0.15
    drop_ratio: float = 0.25
    insert_ratio: float = 0.15
    epoch_increment: float = 0.025
    max_ratio: float = 0.5
    shuffle_window: int = 3
    keyword_weight: float = 3.0

    def validate(self) -> "NoiseConfig":
        for name in ("mask_ratio", "drop_ratio", "insert_ratio"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not 0.0 <= self.max_ratio <= 1.0:
            raise ValueError(f"max_ratio must be in [0, 1], got {self.max_ratio}")
        if self.epoch_increment < 0:
            raise ValueError("epoch_increment must be >= 0")
        if self.shuffle_window < 1:
            raise ValueError("shuffle_window must be >= 1")
        if self.keyword_weight <= 0:
            raise ValueError("keyword_weight must be positive")
        return self


def schedule_ratio(base_ratio: float, epoch: int, cfg: NoiseConfig) -> float:
    """Corruption ratio at a given epoch: base + epoch * increment, capped."""
    return min(base_ratio + epoch * cfg.epoch_increment, cfg.max_ratio)


class NoiseEngine:
    """Binds a vocabulary, language profiles, and a config for fast reuse."""

    def __init__(
        self,
        vocab: Vocabulary,
        profiles: Mapping[str, LanguageProfile],
        cfg: NoiseConfig,
    ):
        cfg.validate()
        self.vocab = vocab
        self.profiles = dict(profiles)
        self.cfg = cfg
        self.mask_id = vocab.special_id(MASK_TOKEN)
        self._ws_ids = vocab.whitespace_ids()

    # -- helpers ----------------------------------------------------------

    def _content_spans(self, doc: TokenizedDocument) -> list[tuple[int, int]]:
        return [
            (s, e)
            for s, e in doc.word_spans
            if e > s and doc.tokens[s] not in self._ws_ids
        ]

    # -- masking ------------------------------------------------------------

    def mlm(self, doc: TokenizedDocument, rng: np.random.Generator) -> TrainingExample:
        spans = self._content_spans(doc)
        n_content = sum(e - s for s, e in spans)
        input_tokens = list(doc.tokens)
        target = [IGNORE_INDEX] * len(doc.tokens)
        if n_content and self.cfg.mask_ratio > 0:
            masked = 0
            for idx in rng.permutation(len(spans)):
                if masked / n_content >= self.cfg.mask_ratio:
                    break
                s, e = spans[idx]
                for i in range(s, e):
                    input_tokens[i] = self.mask_id
                    target[i] = doc.tokens[i]
                masked += e - s
        return TrainingExample(
            objective="mlm",
            input_tokens=input_tokens,
            target=target,
            source_language=doc.language,
            target_language=doc.language,
            doc_id=doc.doc_id,
        )

    # -- composite DAE corruption -------------------------------------------

    def dae(
        self, doc: TokenizedDocument, epoch: int, rng: np.random.Generator
    ) -> TrainingExample:
        cfg = self.cfg
        drop_r = schedule_ratio(cfg.drop_ratio, epoch, cfg)
        mask_r = schedule_ratio(cfg.mask_ratio, epoch, cfg)
        ins_r = schedule_ratio(cfg.insert_ratio, epoch, cfg)

        spans = self._content_spans(doc)
        n_content = sum(e - s for s, e in spans)
        keywords = self.profiles[doc.language].keywords if doc.language in self.profiles else set()

        # 1. Weighted dropping. Word w with weight k_w is dropped with
        # probability q * k_w where q solves sum(q * k_w * len_w) = ratio * n.
        dropped = [False] * len(spans)
        if spans and drop_r > 0:
            weights = []
            for s, e in spans:
                text = self.vocab.decode(doc.tokens[s:e])
                weights.append(cfg.keyword_weight if text in keywords else 1.0)
            denom = sum(w * (e - s) for w, (s, e) in zip(weights, spans))
            q = drop_r * n_content / denom if denom else 0.0
            draws = rng.random(len(spans))
            dropped = [u < min(1.0, q * w) for u, w in zip(draws, weights)]

        # 2. Whole-word masking over the survivors, calibrated against the
        # original content size.
        masked = [False] * len(spans)
        if spans and mask_r > 0:
            survivors = [i for i in range(len(spans)) if not dropped[i]]
            order = rng.permutation(len(survivors))
            masked_tokens = 0
            for oi in order:
                if masked_tokens / n_content >= mask_r:
                    break
                i = survivors[oi]
                masked[i] = True
                s, e = spans[i]
                masked_tokens += e - s

        # Assemble surviving cells (one per word span, whitespace included).
        content_idx = {span: i for i, span in enumerate(spans)}
        cells: list[list[int]] = []
        for span in doc.word_spans:
            s, e = span
            ci = content_idx.get(span)
            if ci is None:
                cells.append(list(doc.tokens[s:e]))
            elif dropped[ci]:
                continue
            elif masked[ci]:
                cells.append([self.mask_id] * (e - s))
            else:
                cells.append(list(doc.tokens[s:e]))

        # 3. Foreign-word insertion from another language's profile.
        target_inserted = int(round(ins_r * n_content))
        if target_inserted > 0:
            sources = sorted(
                lang
                for lang, prof in self.profiles.items()
                if lang != doc.language and prof.total > 0
            )
            if sources:
                inserted = 0
                while inserted < target_inserted:
                    lang = (
                        sources[0]
                        if len(sources) == 1
                        else sources[int(rng.integers(0, len(sources)))]
                    )
                    word = sample_word(self.profiles[lang], rng)
                    ids = self.vocab.encode(word)
                    if not ids:
                        continue
                    pos = int(rng.integers(0, len(cells) + 1))
                    cells.insert(pos, ids)
                    inserted += len(ids)

        corrupted = [t for cell in cells for t in cell]

        # 4. Local shuffling within fixed windows keeps every token within
        # shuffle_window of its pre-shuffle position.
        w = cfg.shuffle_window
        if w > 1:
            shuffled: list[int] = []
            for start in range(0, len(corrupted), w):
                window = corrupted[start : start + w]
                perm = rng.permutation(len(window))
                shuffled.extend(window[p] for p in perm)
            corrupted = shuffled

        return TrainingExample(
            objective="dae",
            input_tokens=[self.vocab.lang_id(doc.language)] + corrupted,
            target=list(doc.tokens),
            source_language=doc.language,
            target_language=doc.language,
            doc_id=doc.doc_id,
            epoch=epoch,
        )


def corrupt_mlm(
    doc: TokenizedDocument,
    cfg: NoiseConfig,
    rng: np.random.Generator,
    vocab: Vocabulary,
) -> TrainingExample:
    return NoiseEngine(vocab, {}, cfg).mlm(doc, rng)


def corrupt_dae(
    doc: TokenizedDocument,
    profiles: Mapping[str, LanguageProfile],
    cfg: NoiseConfig,
    epoch: int,
    rng: np.random.Generator,
    vocab: Vocabulary,
) -> TrainingExample:
    return NoiseEngine(vocab, profiles, cfg).dae(doc, epoch, rng)
