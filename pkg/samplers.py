# =============================================
# samplers.py — ВЫБОР СЛЕДУЮЩЕГО ТОКЕНА С ВОДЯНЫМ ЗНАКОМ И БЕЗ
# =============================================
"""
Софтмакс с температурой и nucleus-отсечением, сдвиг зелёного списка на δ,
экспоненциальный выбор argmax r_v^(1/p_v) и авторегрессионная генерация.

Ничьи везде разрешаются в пользу меньшего id токена.
Мультиномиальный выбор тратит ровно один 64-битный выход потока сэмплинга:
u = (x >> 11) · 2⁻⁵³, обратная CDF по id по возрастанию.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from config import Config
from errors import ConfigurationError, DegenerateInputError, ModelInconsistencyError
from keying import (
    MasterKey,
    SecretVector,
    Xoshiro256StarStar,
    derive_seed,
    greenlist_mask,
    secret_vector,
    window_at,
)
from schemes import Decoding, SamplerParams, Scheme

logger = Config.get_logger(__name__)

ProbVector = np.ndarray


# ====================== 1. ТИПЫ ======================
@dataclass(frozen=True)
class LogitVector:
    logits: np.ndarray
    temperature: float = 1.0
    top_p: float = 1.0

    def __post_init__(self):
        logits = np.asarray(self.logits, dtype=np.float64)
        object.__setattr__(self, "logits", logits)
        if logits.ndim != 1 or logits.shape[0] < 2:
            raise ConfigurationError("вектор логитов должен быть одномерным и длины ≥ 2")
        if np.isnan(logits).any() or np.isposinf(logits).any():
            raise DegenerateInputError("логиты содержат NaN или +∞")
        if not self.temperature > 0:
            raise ConfigurationError(f"температура должна быть > 0, получено {self.temperature}")
        if not 0.0 < self.top_p <= 1.0:
            raise ConfigurationError(f"top_p должен лежать в (0, 1], получено {self.top_p}")

    @property
    def vocab_size(self) -> int:
        return int(self.logits.shape[0])

    def with_sampling(self, temperature: float, top_p: float) -> "LogitVector":
        return LogitVector(self.logits, temperature, top_p)


@dataclass(frozen=True)
class TokenSequence:
    """Id токенов в [0, |V|) плюс длина промпта (промпт не оценивается детектором)."""

    tokens: tuple
    vocab_size: int
    prompt_len: int = 0

    def __post_init__(self):
        tokens = tuple(int(t) for t in self.tokens)
        object.__setattr__(self, "tokens", tokens)
        if self.vocab_size < 2:
            raise ConfigurationError(f"|V| должен быть ≥ 2, получено {self.vocab_size}")
        if not 0 <= self.prompt_len <= len(tokens):
            raise ConfigurationError(f"prompt_len={self.prompt_len} вне [0, {len(tokens)}]")
        bad = [t for t in tokens if not 0 <= t < self.vocab_size]
        if bad:
            raise ConfigurationError(f"id токенов вне словаря |V|={self.vocab_size}: {bad[:5]}")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def generated(self) -> tuple:
        return self.tokens[self.prompt_len:]

    def with_tokens(self, tokens: Sequence[int]) -> "TokenSequence":
        return TokenSequence(tuple(tokens), self.vocab_size, self.prompt_len)


@runtime_checkable
class LogitSource(Protocol):
    """Контракт поставщика логитов: игрушечная модель или внешний процесс."""

    vocab_size: int

    def next_distribution(self, context: Sequence[int]) -> LogitVector:
        ...


# ====================== 2. СОФТМАКС И NUCLEUS ======================
def softmax_with_nucleus(l: LogitVector) -> ProbVector:
    z = l.logits / l.temperature
    finite = np.isfinite(z)
    if not finite.any():
        raise DegenerateInputError("все логиты равны −∞")
    e = np.zeros_like(z)
    e[finite] = np.exp(z[finite] - z[finite].max())
    p = e / e.sum()
    if l.top_p >= 1.0:
        return p
    order = np.argsort(-p, kind="stable")
    cum = np.cumsum(p[order])
    keep = min(int(np.searchsorted(cum, l.top_p, side="left")) + 1, p.shape[0])
    q = np.zeros_like(p)
    kept = order[:keep]
    q[kept] = p[kept]
    return q / q.sum()


def greenlist_shift(l: LogitVector, mask: np.ndarray, delta: float) -> ProbVector:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != l.logits.shape:
        raise ConfigurationError(f"длина маски {mask.shape[0]} не равна |V|={l.vocab_size}")
    return softmax_with_nucleus(LogitVector(l.logits + delta * mask, l.temperature, l.top_p))


# ====================== 3. ВЫБОР ТОКЕНА ======================
def exponential_select(p: ProbVector, r: "SecretVector | np.ndarray") -> int:
    """argmax r_v^(1/p_v) по p_v > 0, считается как argmin −ln(r_v)/p_v."""
    p = np.asarray(p, dtype=np.float64)
    entries = r.entries if isinstance(r, SecretVector) else np.asarray(r, dtype=np.float64)
    if entries.shape[0] < p.shape[0]:
        raise ConfigurationError(f"размерность r ({entries.shape[0]}) меньше |V| ({p.shape[0]})")
    admissible = np.flatnonzero(p > 0)
    if admissible.size == 0:
        raise DegenerateInputError("все вероятности равны нулю")
    keys = -np.log(entries[admissible]) / p[admissible]
    return int(admissible[int(np.argmin(keys))])


def exponential_select_batch(p: ProbVector, r_rows: np.ndarray) -> np.ndarray:
    """То же, что exponential_select, для матрицы секретных векторов (по строкам)."""
    p = np.asarray(p, dtype=np.float64)
    admissible = np.flatnonzero(p > 0)
    if admissible.size == 0:
        raise DegenerateInputError("все вероятности равны нулю")
    keys = -np.log(r_rows[:, admissible]) / p[admissible]
    return admissible[np.argmin(keys, axis=1)]


def multinomial_draw(p: ProbVector, u: float) -> int:
    """Обратная CDF: первый id, у которого накопленная масса > u."""
    cum = np.cumsum(p)
    idx = int(np.searchsorted(cum, u, side="right"))
    if idx >= p.shape[0]:
        idx = int(np.flatnonzero(p > 0)[-1])
    return idx


def greedy_select(p: ProbVector) -> int:
    return int(np.argmax(p))


class SamplingStream:
    """Поток равномерных чисел для мультиномиального выбора (vanilla и greenlist)."""

    def __init__(self, seed: int):
        self._rng = Xoshiro256StarStar.from_seed(seed)

    def next_uniform(self) -> float:
        return self._rng.next_unit()


# ====================== 4. ГЕНЕРАЦИЯ ======================
def step_secret(
    key: MasterKey,
    tokens: Sequence[int],
    h: int,
    vocab_size: int,
    dim: Optional[int] = None,
    transform: Optional[Callable[[SecretVector], SecretVector]] = None,
) -> np.ndarray:
    """Первые |V| координат (возможно сдвинутого) секретного вектора для следующей позиции."""
    seed = derive_seed(key, window_at(tokens, len(tokens), h), h)
    r = secret_vector(seed, dim or vocab_size)
    if transform is not None:
        r = transform(r)
    return r.entries[:vocab_size]


def select_next(
    lv: LogitVector,
    params: SamplerParams,
    r_entries: Optional[np.ndarray],
    stream: SamplingStream,
) -> int:
    if params.scheme is Scheme.EXPONENTIAL:
        return exponential_select(softmax_with_nucleus(lv), r_entries)
    if params.scheme is Scheme.GREENLIST:
        q = greenlist_shift(lv, greenlist_mask(r_entries, params.gamma), params.delta)
    else:
        q = softmax_with_nucleus(lv)
    if params.decoding is Decoding.GREEDY:
        return greedy_select(q)
    return multinomial_draw(q, stream.next_uniform())


def generate(
    model: LogitSource,
    params: SamplerParams,
    key: Optional[MasterKey],
    prompt: TokenSequence,
    n: int,
    seed: int = 0,
    dim: Optional[int] = None,
    transform: Optional[Callable[[SecretVector], SecretVector]] = None,
) -> TokenSequence:
    """
    Дописывает n токенов к промпту.

    seed — поток сэмплинга (vanilla / greenlist); dim — размерность секретного
    вектора (по умолчанию |V|); transform — преобразование r(t) перед выбором
    (циклический сдвиг в многобитном режиме).
    """
    if n < 1:
        raise ConfigurationError(f"длина генерации должна быть ≥ 1, получено {n}")
    vocab_size = model.vocab_size
    if prompt.vocab_size != vocab_size:
        raise ConfigurationError(f"словарь промпта ({prompt.vocab_size}) не совпадает со словарём модели ({vocab_size})")
    if params.scheme is not Scheme.VANILLA and key is None:
        raise ConfigurationError(f"схема {params.scheme.value} требует мастер-ключ")
    if dim is not None and dim < vocab_size:
        raise ConfigurationError(f"размерность секрета d={dim} меньше |V|={vocab_size}")

    stream = SamplingStream(seed)
    tokens = list(prompt.tokens)
    for _ in range(n):
        lv = model.next_distribution(tokens)
        if lv.vocab_size != vocab_size:
            raise ModelInconsistencyError(f"модель вернула {lv.vocab_size} логитов вместо {vocab_size}")
        lv = lv.with_sampling(params.theta, params.top_p)
        r_entries = None
        if params.scheme is not Scheme.VANILLA:
            r_entries = step_secret(key, tokens, params.h, vocab_size, dim, transform)
        tokens.append(select_next(lv, params, r_entries, stream))

    logger.debug("сгенерировано %d токенов (схема %s)", n, params.scheme.value)
    return TokenSequence(tuple(tokens), vocab_size, len(prompt.tokens))


def realized_probabilities(
    model: LogitSource,
    seq: TokenSequence,
    positions: Sequence[int],
    theta: float = 1.0,
    top_p: float = 1.0,
) -> np.ndarray:
    """p_t(x(t)) модели в заданных позициях, с теми же θ и top-p, что при генерации."""
    out = np.empty(len(positions), dtype=np.float64)
    for i, t in enumerate(positions):
        lv = model.next_distribution(seq.tokens[:t]).with_sampling(theta, top_p)
        if lv.vocab_size != seq.vocab_size:
            raise ModelInconsistencyError(f"модель вернула {lv.vocab_size} логитов вместо {seq.vocab_size}")
        out[i] = softmax_with_nucleus(lv)[seq.tokens[t]]
    return out
