# =============================================
# toylm.py — ИГРУШЕЧНАЯ МАРКОВСКАЯ ЯЗЫКОВАЯ МОДЕЛЬ
# =============================================
"""
Детерминированная модель порядка k: последние k токенов хэшируются в сид строки,
строка — Dirichlet(α, …, α), полученная из гамма-величин Марсальи–Цанга на
генераторе keying (xoshiro256**). Логиты = логарифмы вероятностей.

α управляет энтропией: пресеты low (0.05), medium (0.5), high (5).
Пресет onehot даёт вырожденные строки (одна вероятность = 1).

Строка модели задаётся так:  toy:<preset|α>[:<|V|>[:<k>]]
    toy:medium           → α=0.5, |V| и k из Config
    toy:0.1:128:2        → α=0.1, |V|=128, k=2
"""

import hashlib
import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from config import Config
from errors import ConfigurationError
from keying import PAD_TOKEN, Xoshiro256StarStar
from samplers import LogitVector, TokenSequence, realized_probabilities

logger = Config.get_logger(__name__)

PRESETS = {
    "low": 0.05,
    "medium": 0.5,
    "high": 5.0,
}
ONE_HOT = "onehot"


# ====================== 1. ГАММА- И НОРМАЛЬНЫЕ ВЕЛИЧИНЫ ======================
def _normal(rng: Xoshiro256StarStar) -> float:
    u1 = rng.next_open_unit()
    u2 = rng.next_open_unit()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def _log_gamma_variate(rng: Xoshiro256StarStar, alpha: float) -> float:
    """ln G, G ~ Gamma(α, 1). При α < 1 — буст Gamma(α+1)·U^(1/α) в лог-шкале."""
    if alpha < 1.0:
        return _log_gamma_variate(rng, alpha + 1.0) + math.log(rng.next_open_unit()) / alpha
    d = alpha - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = _normal(rng)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        if math.log(rng.next_open_unit()) < 0.5 * x * x + d - d * v + d * math.log(v):
            return math.log(d * v)


# ====================== 2. МОДЕЛЬ ======================
@dataclass(frozen=True)
class ToyModel:
    order: int = 1
    vocab_size: int = 64
    alpha: float = 0.5
    seed: int = 1234
    one_hot: bool = False

    def __post_init__(self):
        if self.order < 0:
            raise ConfigurationError(f"порядок модели должен быть ≥ 0, получено {self.order}")
        if self.vocab_size < 2:
            raise ConfigurationError(f"|V| должен быть ≥ 2, получено {self.vocab_size}")
        if not self.alpha > 0:
            raise ConfigurationError(f"концентрация α должна быть > 0, получено {self.alpha}")

    # ---------- строка модели ----------
    @classmethod
    def from_spec(cls, text: str, seed: Optional[int] = None) -> "ToyModel":
        parts = text.split(":")
        if parts[0] != "toy" or not 2 <= len(parts) <= 4:
            raise ConfigurationError(f"модель должна иметь вид toy:<preset>[:<|V|>[:<k>]], получено {text!r}")
        preset = parts[1]
        one_hot = preset == ONE_HOT
        try:
            alpha = 1.0 if one_hot else PRESETS.get(preset) or float(preset)
            vocab = int(parts[2]) if len(parts) > 2 else Config.TOY_VOCAB_SIZE
            order = int(parts[3]) if len(parts) > 3 else Config.TOY_ORDER
        except ValueError:
            raise ConfigurationError(
                f"не понял модель {text!r}: пресеты {', '.join(PRESETS)}, {ONE_HOT} или число α"
            ) from None
        return cls(order, vocab, alpha, Config.TOY_MODEL_SEED if seed is None else seed, one_hot)

    def with_alpha(self, alpha: float) -> "ToyModel":
        return ToyModel(self.order, self.vocab_size, alpha, self.seed, self.one_hot)

    # ---------- строки распределения ----------
    def context_key(self, context: Sequence[int]) -> tuple:
        if self.order == 0:
            return ()
        tail = list(context[-self.order:])
        return tuple([PAD_TOKEN] * (self.order - len(tail)) + tail)

    def row_seed(self, key: tuple) -> int:
        hasher = hashlib.sha256(b"toylm" + struct.pack("<QI", self.seed & 0xFFFFFFFFFFFFFFFF, self.order))
        if key:
            hasher.update(struct.pack(f"<{len(key)}I", *key))
        return int.from_bytes(hasher.digest()[:8], "big")

    def log_probs(self, context: Sequence[int]) -> np.ndarray:
        return _row(self, self.context_key(context))

    def probabilities(self, context: Sequence[int]) -> np.ndarray:
        return np.exp(self.log_probs(context))

    def next_distribution(self, context: Sequence[int]) -> LogitVector:
        return LogitVector(self.log_probs(context))

    def __str__(self) -> str:
        preset = ONE_HOT if self.one_hot else next((k for k, v in PRESETS.items() if v == self.alpha), self.alpha)
        return f"toy:{preset}:{self.vocab_size}:{self.order}"


@lru_cache(maxsize=65536)
def _row(model: ToyModel, key: tuple) -> np.ndarray:
    seed = model.row_seed(key)
    if model.one_hot:
        row = np.full(model.vocab_size, -np.inf)
        row[seed % model.vocab_size] = 0.0
    else:
        rng = Xoshiro256StarStar.from_seed(seed)
        logs = np.array([_log_gamma_variate(rng, model.alpha) for _ in range(model.vocab_size)])
        m = logs.max()
        row = logs - (m + math.log(np.exp(logs - m).sum()))
    row.flags.writeable = False
    return row


def next_distribution(model: ToyModel, context: Sequence[int]) -> LogitVector:
    return model.next_distribution(context)


def row_entropy(model: ToyModel, context: Sequence[int]) -> float:
    """Энтропия Шеннона строки −Σ p ln p (для проверки пресетов)."""
    p = model.probabilities(context)
    nz = p > 0
    return float(-(p[nz] * np.log(p[nz])).sum())


# ====================== 3. ЭНТРОПИЯ ПРОДОЛЖЕНИЯ ======================
def entropy_of_completion(
    model,
    seq: TokenSequence,
    theta: float = 1.0,
    top_p: float = 1.0,
    positions: Optional[Sequence[int]] = None,
) -> float:
    """
    H_T = −Σ_t p_t ln p_t, p_t — вероятность реализованного токена x(t).
    По умолчанию суммирование идёт по всем сгенерированным позициям.
    """
    if positions is None:
        positions = range(seq.prompt_len, len(seq))
    p = realized_probabilities(model, seq, positions, theta, top_p)
    nz = p > 0
    return float(-(p[nz] * np.log(p[nz])).sum())

