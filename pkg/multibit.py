# =============================================
# multibit.py — МНОГОБИТНЫЙ ВОДЯНОЙ ЗНАК (M СООБЩЕНИЙ)
# =============================================
"""
Сообщение m ∈ [0, M) встраивается циклическим сдвигом секретного вектора:

    shifted[i] = r0[(i + m) mod d],   d = max(M, |V|)

Сэмплер использует первые |V| координат сдвинутого вектора.

Декодирование считает скоры сразу для всех m одним проходом:

    S[m] = Σ_t f(r0(t))[(x(t) + m) mod d] = Σ_t roll(f(r0(t)), −x(t))[m]

f(r) = −ln(1 − r) для exponential и 1{r < γ} для greenlist. S[m] в точности
равен скору zero-bit детекции с ключом, сдвинутым на m.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config import Config
from detectors import (
    ScoringContext,
    admitted_positions,
    pvalue_binomial,
    pvalue_gamma,
    pvalue_ztest,
)
from errors import ConfigurationError, DomainError, InsufficientDataError
from keying import MasterKey, SecretVector, secret_vectors, seeds_for_positions
from samplers import LogitSource, TokenSequence, generate
from schemes import DEFAULT_TEST, DedupRule, SamplerParams, Scheme, TestKind

logger = Config.get_logger(__name__)


# ====================== 1. ТИПЫ ======================
@dataclass(frozen=True)
class MessageSpace:
    num_messages: int
    vocab_size: int

    def __post_init__(self):
        if self.num_messages < 1:
            raise ConfigurationError(f"число сообщений M должно быть ≥ 1, получено {self.num_messages}")

    @property
    def d(self) -> int:
        return max(self.num_messages, self.vocab_size)

    def check(self, message: int) -> int:
        if not 0 <= message < self.num_messages:
            raise DomainError(f"сообщение {message} вне [0, {self.num_messages})")
        return message


@dataclass(frozen=True)
class IdentificationReport:
    scores: tuple
    per_message_pvalues: tuple
    best_message: int
    global_pvalue: float
    scored_tokens: int
    total_tokens: int
    fpr_target: float
    test: str

    @property
    def num_messages(self) -> int:
        return len(self.scores)

    @property
    def flagged(self) -> bool:
        return self.global_pvalue < self.fpr_target

    def to_dict(self) -> dict:
        return {
            "best_message": self.best_message,
            "global_pvalue": self.global_pvalue,
            "flagged": self.flagged,
            "num_messages": self.num_messages,
            "scored_tokens": self.scored_tokens,
            "total_tokens": self.total_tokens,
            "test": self.test,
            "scores": list(self.scores),
            "per_message_pvalues": list(self.per_message_pvalues),
        }


# ====================== 2. СДВИГ И ГЕНЕРАЦИЯ ======================
def shifted_vector(r0: SecretVector, m: int) -> SecretVector:
    if not 0 <= m < r0.d:
        raise DomainError(f"сдвиг {m} вне [0, {r0.d})")
    return SecretVector(np.roll(r0.entries, -m))


def generate_multibit(
    model: LogitSource,
    params: SamplerParams,
    key: MasterKey,
    prompt: TokenSequence,
    n: int,
    message: int,
    num_messages: int,
    seed: int = 0,
    dim: Optional[int] = None,
) -> TokenSequence:
    """
    Как samplers.generate, но каждый r(t) сдвинут на message.
    dim переопределяет d (харнесс держит одно d для всей сетки M).
    """
    space = MessageSpace(num_messages, model.vocab_size)
    space.check(message)
    d = dim or space.d
    if d < space.d:
        raise ConfigurationError(f"d={d} меньше max(M, |V|)={space.d}")
    if params.scheme is Scheme.VANILLA:
        raise ConfigurationError("многобитный режим требует схему greenlist или exponential")
    return generate(model, params, key, prompt, n, seed, dim=d, transform=lambda r: shifted_vector(r, message))


# ====================== 3. СКОРЫ ВСЕХ СООБЩЕНИЙ ======================
def score_all_messages(
    seq: TokenSequence,
    key: MasterKey,
    params: SamplerParams,
    dim: Optional[int] = None,
    dedup=DedupRule.TUPLE,
    context: Optional[ScoringContext] = None,
) -> tuple[np.ndarray, int, int]:
    """Вектор скоров длины d, T' и T."""
    if params.scheme is Scheme.VANILLA:
        raise ConfigurationError("для декодирования выбери схему greenlist или exponential")
    d = dim or seq.vocab_size
    if d < seq.vocab_size:
        raise ConfigurationError(f"d={d} меньше |V|={seq.vocab_size}")
    positions, total = admitted_positions(seq, params.h, dedup, context)
    scores = np.zeros(d, dtype=np.float64)
    if not positions:
        return scores, 0, total

    r0 = secret_vectors(seeds_for_positions(key, seq.tokens, positions, params.h), d)
    if params.scheme is Scheme.EXPONENTIAL:
        f = -np.log1p(-r0)
    else:
        f = (r0 < params.gamma).astype(np.float64)
    for row, t in zip(f, positions):
        scores += np.roll(row, -seq.tokens[t])
    return scores, len(positions), total


# ====================== 4. ИДЕНТИФИКАЦИЯ ======================
def global_pvalue(p: float, num_messages: int) -> float:
    """1 − (1 − p)^M через expm1/log1p."""
    if p >= 1.0:
        return 1.0
    return -math.expm1(num_messages * math.log1p(-p))


def message_pvalue(score: float, scored: int, params: SamplerParams, test: TestKind) -> float:
    if test is TestKind.BINOMIAL:
        return pvalue_binomial(int(round(score)), scored, params.gamma)
    if test is TestKind.GAMMA:
        return pvalue_gamma(score, scored)
    if test is TestKind.ZTEST:
        return pvalue_ztest(score, scored, params.scheme, params.gamma)
    raise ConfigurationError(f"тест {test.value} не поддерживается при идентификации")


def identify_from_scores(
    scores: np.ndarray,
    scored: int,
    total: int,
    params: SamplerParams,
    num_messages: int,
    fpr_target: float,
    test: Optional[TestKind] = None,
) -> IdentificationReport:
    """Идентификация по первым M компонентам уже посчитанного вектора скоров."""
    if not 1 <= num_messages <= scores.shape[0]:
        raise ConfigurationError(f"M={num_messages} вне [1, d={scores.shape[0]}]")
    if scored < 1:
        raise InsufficientDataError("нет ни одной засчитанной позиции")
    test = TestKind.parse(test) if test is not None else DEFAULT_TEST[params.scheme]
    head = scores[:num_messages]
    pvals = np.array([message_pvalue(s, scored, params, test) for s in head])
    # при равных p выигрывает меньший индекс
    best = int(np.argmin(pvals))
    return IdentificationReport(
        scores=tuple(float(s) for s in head),
        per_message_pvalues=tuple(float(p) for p in pvals),
        best_message=best,
        global_pvalue=global_pvalue(float(pvals[best]), num_messages),
        scored_tokens=scored,
        total_tokens=total,
        fpr_target=fpr_target,
        test=test.value,
    )


def identify(
    seq: TokenSequence,
    key: MasterKey,
    params: SamplerParams,
    num_messages: int,
    fpr_target: float,
    dedup=DedupRule.TUPLE,
    test: Optional[TestKind] = None,
    dim: Optional[int] = None,
) -> IdentificationReport:
    space = MessageSpace(num_messages, seq.vocab_size)
    d = dim or space.d
    if d < space.d:
        raise ConfigurationError(f"d={d} меньше max(M, |V|)={space.d}")
    scores, scored, total = score_all_messages(seq, key, params, d, dedup)
    return identify_from_scores(scores, scored, total, params, num_messages, fpr_target, test)
