import numpy as np
import pytest

from config import Config
from keying import MasterKey
from samplers import LogitVector, TokenSequence
from toylm import ToyModel


class UniformModel:
    """Равномерные логиты для любого контекста (как эталонный провайдер)."""

    def __init__(self, vocab_size: int = 8):
        self.vocab_size = vocab_size

    def next_distribution(self, context):
        return LogitVector(np.zeros(self.vocab_size))


@pytest.fixture
def key() -> MasterKey:
    return MasterKey.from_int(7)


@pytest.fixture
def other_key() -> MasterKey:
    return MasterKey.from_int(8)


@pytest.fixture
def toy() -> ToyModel:
    return ToyModel(order=1, vocab_size=64, alpha=0.5, seed=1234)


@pytest.fixture
def uniform_model() -> UniformModel:
    return UniformModel(8)


@pytest.fixture
def make_uniform():
    return UniformModel


@pytest.fixture
def random_sequence():
    def make(length: int, vocab_size: int, seed: int = 0, prompt_len: int = 0) -> TokenSequence:
        rng = np.random.default_rng(seed)
        tokens = rng.integers(0, vocab_size, size=length)
        return TokenSequence(tuple(int(t) for t in tokens), vocab_size, prompt_len)

    return make


@pytest.fixture
def tmp_config(monkeypatch, tmp_path):
    """Логи и результаты во временный каталог, ключ из окружения снят."""
    monkeypatch.setattr(Config, "LOGS_DIR", tmp_path / "logs")
    monkeypatch.setattr(Config, "RESULTS_DIR", tmp_path / "results")
    monkeypatch.setattr(Config, "MASTER_KEY_HEX", None)
    monkeypatch.setattr(Config, "HARNESS_WORKERS", 1)
    return tmp_path
