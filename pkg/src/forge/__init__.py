"""Deterministic data engine for unsupervised code translation.

The package covers the non-neural half of a translation pipeline: byte-level
BPE tokenization, language profiles, syntax-aware token labeling, denoising
corruption, back-translation orchestration, corpus preparation, translation
metrics, and compile-and-repair post-processing. Models plug in through
:class:`forge.orchestrator.TranslatorPort`.
"""

__version__ = "0.1.0"
