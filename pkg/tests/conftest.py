from pathlib import Path

import numpy as np
import pytest

from cdlstm.corpus import gen_synthetic_corpus
from cdlstm.lstm import TrainConfig, train_lstm

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def toy_corpus():
    return gen_synthetic_corpus(seed=0, size=600)


@pytest.fixture(scope="session")
def toy_model(toy_corpus):
    """Small LSTM trained on the synthetic grammar; shared by several modules."""
    cfg = TrainConfig(seed=0, hidden_dim=8, embed_dim=8, max_epochs=25)
    return train_lstm(toy_corpus["train"], toy_corpus["dev"], cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


DESK_SEED = 0
DESK_TRAIN_SIZE = 5000
DESK_HIDDEN = 16


@pytest.fixture(scope="session")
def desk_run():
    """The desk-scale setup: seed-pinned synthetic corpus, d2=16 LSTM, n-gram reference.

    Returns a dict with the corpus, model, n-gram model and the seconds spent.
    """
    import time

    from cdlstm.corpus import train_logistic_ngram

    t0 = time.perf_counter()
    corpus = gen_synthetic_corpus(seed=DESK_SEED, size=DESK_TRAIN_SIZE)
    model = train_lstm(corpus["train"], corpus["dev"], TrainConfig(seed=DESK_SEED, hidden_dim=DESK_HIDDEN))
    ngram = train_logistic_ngram(corpus["train"], corpus["dev"])
    return {"corpus": corpus, "model": model, "ngram": ngram, "seconds": time.perf_counter() - t0}


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
