import pytest
from forge.tokenizer import save_vocab

from reftrainer.toylang import make_pairs
from reftrainer.vocabfile import VocabFile
from toyutil import build_vocab


@pytest.fixture(scope="session")
def toy_vocab_path(tmp_path_factory):
    vocab = build_vocab(make_pairs(60, seed=3))
    path = tmp_path_factory.mktemp("vocab") / "toy.vocab"
    save_vocab(vocab, path)
    return path


@pytest.fixture(scope="session")
def forge_vocab(toy_vocab_path):
    from forge.tokenizer import load_vocab

    return load_vocab(toy_vocab_path)


@pytest.fixture(scope="session")
def toy_vocab(toy_vocab_path):
    return VocabFile.load(toy_vocab_path)
