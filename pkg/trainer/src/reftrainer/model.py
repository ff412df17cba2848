"""A small transformer seq2seq model serving every stream objective.

One shared embedding feeds an encoder/decoder pair; one output head
over the vocabulary scores every objective, which works because syntax
label ids are small integers well below the vocabulary size.

Objective handling:

* ``mlm`` and ``aer`` run the encoder alone and classify each position.
* ``dae``, ``bt``, and ``finetune`` run the full seq2seq path with
  teacher forcing. The encoder input arrives with its language sentinel
  already prepended by the producer; the decoder is conditioned on the
  target language by starting from that language's sentinel instead of
  a generic begin token.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import torch
import torch.nn.functional as F
from torch import nn

from reftrainer.errors import SchemaError
from reftrainer.schema import IGNORE_INDEX, Example

PAD_TOKEN = "<pad>"
EOS_TOKEN = "<eos>"


@dataclass
class ToyModelConfig:
    layers: int = 2
    heads: int = 4
    hidden: int = 128
    feedforward: int = 256
    learning_rate: float = 3e-4
    epochs: int = 12
    batch_size: int = 16
    max_len: int = 160

    def validate(self) -> "ToyModelConfig":
        for name in (
            "layers",
            "heads",
            "hidden",
            "feedforward",
            "epochs",
            "batch_size",
            "max_len",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.hidden % self.heads:
            raise ValueError("hidden must divide evenly across heads")
        return self


def make_optimizer(model: "ToySeq2Seq") -> torch.optim.Optimizer:
    return torch.optim.Adam(model.parameters(), lr=model.cfg.learning_rate)


class ToySeq2Seq(nn.Module):
    def __init__(
        self, cfg: ToyModelConfig, vocab_size: int, specials: Sequence[str]
    ):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.vocab_size = vocab_size
        self.specials = list(specials)
        self._special_ids = {s: i for i, s in enumerate(self.specials)}
        for required in (PAD_TOKEN, EOS_TOKEN):
            if required not in self._special_ids:
                raise SchemaError(f"vocabulary lacks special {required!r}")
        self.pad_id = self._special_ids[PAD_TOKEN]
        self.eos_id = self._special_ids[EOS_TOKEN]

        self.embed = nn.Embedding(vocab_size, cfg.hidden, padding_idx=self.pad_id)
        self.pos = nn.Embedding(cfg.max_len, cfg.hidden)
        enc_layer = nn.TransformerEncoderLayer(
            cfg.hidden, cfg.heads, cfg.feedforward, dropout=0.0, batch_first=True
        )
        self.encoder = nn.TransformerEncoder(
            enc_layer, cfg.layers, enable_nested_tensor=False
        )
        dec_layer = nn.TransformerDecoderLayer(
            cfg.hidden, cfg.heads, cfg.feedforward, dropout=0.0, batch_first=True
        )
        self.decoder = nn.TransformerDecoder(dec_layer, cfg.layers)
        self.out = nn.Linear(cfg.hidden, vocab_size)

    # -- id table -----------------------------------------------------------

    def special_id(self, text: str) -> int:
        try:
            return self._special_ids[text]
        except KeyError as exc:
            raise SchemaError(f"no special token {text!r}") from exc

    def lang_id(self, language: str) -> int:
        return self.special_id(f"<{language}>")

    def _check_ids(self, seq: Sequence[int], allow_ignore: bool) -> None:
        for tid in seq:
            if 0 <= tid < self.vocab_size:
                continue
            if allow_ignore and tid == IGNORE_INDEX:
                continue
            raise SchemaError(f"token id {tid} out of range for this vocabulary")

    # -- tensors ------------------------------------------------------------

    def _embed(self, ids: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.size(1), device=ids.device)
        return self.embed(ids) + self.pos(positions)[None, :, :]

    def _pad(
        self, seqs: list[list[int]], pad_value: int
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Stack ragged rows; returns (batch, padding mask, True = pad)."""
        length = min(self.cfg.max_len, max(len(s) for s in seqs))
        batch = torch.full((len(seqs), length), pad_value, dtype=torch.long)
        pad_mask = torch.ones(len(seqs), length, dtype=torch.bool)
        for i, s in enumerate(seqs):
            s = s[:length]
            if s:
                batch[i, : len(s)] = torch.tensor(s, dtype=torch.long)
            pad_mask[i, : len(s)] = False
        return batch, pad_mask

    @staticmethod
    def _causal(length: int) -> torch.Tensor:
        return torch.triu(torch.ones(length, length, dtype=torch.bool), diagonal=1)

    # -- losses ---------------------------------------------------------------

    def _loss_aligned(
        self, examples: list[Example]
    ) -> tuple[torch.Tensor, int]:
        src, src_pad = self._pad([ex.input_tokens for ex in examples], self.pad_id)
        tgt, _ = self._pad([ex.target for ex in examples], IGNORE_INDEX)
        hidden = self.encoder(self._embed(src), src_key_padding_mask=src_pad)
        logits = self.out(hidden)
        loss = F.cross_entropy(
            logits.reshape(-1, self.vocab_size),
            tgt.reshape(-1),
            ignore_index=IGNORE_INDEX,
            reduction="sum",
        )
        return loss, int((tgt != IGNORE_INDEX).sum())

    def _loss_seq2seq(
        self, examples: list[Example]
    ) -> tuple[torch.Tensor, int]:
        dec_in = [
            [self.lang_id(ex.target_language)] + ex.target for ex in examples
        ]
        dec_out = [ex.target + [self.eos_id] for ex in examples]
        src, src_pad = self._pad([ex.input_tokens for ex in examples], self.pad_id)
        din, din_pad = self._pad(dec_in, self.pad_id)
        dout, _ = self._pad(dec_out, IGNORE_INDEX)
        memory = self.encoder(self._embed(src), src_key_padding_mask=src_pad)
        hidden = self.decoder(
            self._embed(din),
            memory,
            tgt_mask=self._causal(din.size(1)),
            tgt_key_padding_mask=din_pad,
            memory_key_padding_mask=src_pad,
        )
        logits = self.out(hidden)
        loss = F.cross_entropy(
            logits.reshape(-1, self.vocab_size),
            dout.reshape(-1),
            ignore_index=IGNORE_INDEX,
            reduction="sum",
        )
        return loss, int((dout != IGNORE_INDEX).sum())

    # -- port operations ------------------------------------------------------

    def train_step(
        self, examples: Sequence[Example], optimizer: torch.optim.Optimizer
    ) -> float:
        """One gradient step; returns mean loss per target token."""
        usable = [ex for ex in examples if ex.input_tokens]
        if not usable:
            raise SchemaError("train_step batch has no usable examples")
        for ex in usable:
            self._check_ids(ex.input_tokens, allow_ignore=False)
            self._check_ids(ex.target, allow_ignore=ex.is_aligned)
            if not ex.is_aligned:
                self.lang_id(ex.target_language)
        self.train()
        optimizer.zero_grad()
        total = torch.zeros(())
        tokens = 0
        aligned = [ex for ex in usable if ex.is_aligned]
        seq2seq = [ex for ex in usable if not ex.is_aligned]
        if aligned:
            loss, n = self._loss_aligned(aligned)
            total = total + loss
            tokens += n
        if seq2seq:
            loss, n = self._loss_seq2seq(seq2seq)
            total = total + loss
            tokens += n
        if tokens == 0:
            return 0.0
        mean = total / tokens
        mean.backward()
        optimizer.step()
        return float(mean.item())

    @torch.no_grad()
    def eval_loss(self, examples: Sequence[Example]) -> float | None:
        """Mean loss per target token without touching the weights."""
        usable = [ex for ex in examples if ex.input_tokens]
        if not usable:
            return None
        self.eval()
        total = torch.zeros(())
        tokens = 0
        aligned = [ex for ex in usable if ex.is_aligned]
        seq2seq = [ex for ex in usable if not ex.is_aligned]
        if aligned:
            loss, n = self._loss_aligned(aligned)
            total = total + loss
            tokens += n
        if seq2seq:
            loss, n = self._loss_seq2seq(seq2seq)
            total = total + loss
            tokens += n
        if tokens == 0:
            return None
        return float((total / tokens).item())

    def init_decoder_from_encoder(self) -> None:
        """Copy shared-shape encoder weights into the decoder.

        Self-attention, both feedforward linears, and their layer norms
        transfer; cross-attention and its norm keep their fresh
        initialization because the encoder has no counterpart for them.
        """
        for enc, dec in zip(self.encoder.layers, self.decoder.layers):
            dec.self_attn.load_state_dict(enc.self_attn.state_dict())
            dec.linear1.load_state_dict(enc.linear1.state_dict())
            dec.linear2.load_state_dict(enc.linear2.state_dict())
            dec.norm1.load_state_dict(enc.norm1.state_dict())
            dec.norm3.load_state_dict(enc.norm2.state_dict())

    @torch.no_grad()
    def greedy_translate(
        self,
        tokens: Sequence[int],
        source_language: str,
        target_language: str,
        beam_size: int = 1,
    ) -> list[int]:
        """Deterministic greedy decoding.

        Only greedy search is implemented; ``beam_size`` is validated
        and otherwise ignored. The encoder input is the source-language
        sentinel plus the tokens, per the stream convention.
        """
        if beam_size < 1:
            raise SchemaError("beam_size must be positive")
        ids = [int(t) for t in tokens]
        self._check_ids(ids, allow_ignore=False)
        self.eval()
        src_ids = ([self.lang_id(source_language)] + ids)[: self.cfg.max_len]
        src = torch.tensor([src_ids], dtype=torch.long)
        memory = self.encoder(self._embed(src))
        out = [self.lang_id(target_language)]
        while len(out) < self.cfg.max_len:
            din = torch.tensor([out], dtype=torch.long)
            hidden = self.decoder(
                self._embed(din), memory, tgt_mask=self._causal(len(out))
            )
            next_id = int(self.out(hidden[:, -1]).argmax(dim=-1))
            if next_id == self.eos_id:
                break
            out.append(next_id)
        return out[1:]

    # -- persistence ----------------------------------------------------------

    def save(self, path: str | Path) -> None:
        torch.save(
            {
                "config": asdict(self.cfg),
                "vocab_size": self.vocab_size,
                "specials": self.specials,
                "model": self.state_dict(),
            },
            path,
        )

    @classmethod
    def load(cls, path: str | Path) -> "ToySeq2Seq":
        blob = torch.load(path, map_location="cpu", weights_only=True)
        model = cls(
            ToyModelConfig(**blob["config"]), blob["vocab_size"], blob["specials"]
        )
        model.load_state_dict(blob["model"])
        return model
