# =============================================
# detectors.py — СКОРЫ И ТОЧНЫЕ P-VALUE ДЕТЕКЦИИ
# =============================================
"""
Детекция водяного знака по последовательности токенов и ключу.

Оцениваются позиции t ∈ [max(prompt_len, h), len). Позиция засчитывается,
только если правило дедупликации её допускает:

    tuple    — кортеж {окно из h токенов + текущий токен} ещё не встречался
    context  — окно из h токенов ещё не встречалось
    off      — засчитываются все позиции

Во всех формулах p-value используется число засчитанных позиций T', а не T.

Тесты:
    binomial    I_γ(s, T'−s+1)                   (greenlist)
    gamma       Q(T', s)                         (exponential)
    ztest       1 − Φ((s/T' − μ0)/(σ0/√T'))      (обе схемы, базовая линия)
    np          Σ (1/p − 1)·ln r + граница Чернова  (нужна модель)
    simplified  Σ ln r, P(T', −s)                (exponential)
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from config import Config
from errors import (
    ConfigurationError,
    DomainError,
    InsufficientDataError,
    ModelAccessError,
    ModelInconsistencyError,
)
from keying import MasterKey, secret_entries, seeds_for_positions, window_at
from samplers import LogitSource, TokenSequence, realized_probabilities
from schemes import DedupRule, SamplerParams, Scheme, TestKind, WatermarkConfig
from statfun import normal_sf, reg_inc_beta, reg_lower_gamma, reg_upper_gamma

logger = Config.get_logger(__name__)

CHERNOFF_C_MAX = 1e8
CHERNOFF_XTOL = 1e-12


# ====================== 1. ТИПЫ ======================
@dataclass(frozen=True)
class DetectionReport:
    score: float
    scored_tokens: int
    total_tokens: int
    p_value: float
    test: str
    dedup_rule: str

    def flagged(self, fpr: float) -> bool:
        return self.p_value < fpr

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "scored_tokens": self.scored_tokens,
            "total_tokens": self.total_tokens,
            "p_value": self.p_value,
            "test": self.test,
            "dedup_rule": self.dedup_rule,
        }


@dataclass
class ScoringContext:
    """Уже виденные кортежи (или окна). Пуст в начале прохода и только растёт."""

    h: int
    rule: DedupRule = DedupRule.TUPLE
    seen: set = field(default_factory=set)

    def admit(self, tokens: Sequence[int], t: int) -> bool:
        if self.rule is DedupRule.OFF:
            return True
        window = tuple(window_at(tokens, t, self.h))
        item = window + (tokens[t],) if self.rule is DedupRule.TUPLE else window
        if item in self.seen:
            return False
        self.seen.add(item)
        return True


# ====================== 2. ПОЗИЦИИ ======================
def candidate_positions(seq: TokenSequence, h: int) -> range:
    start = max(seq.prompt_len, h)
    if len(seq) <= start:
        raise InsufficientDataError(
            f"последовательность слишком короткая: длина {len(seq)}, промпт {seq.prompt_len}, h={h}"
        )
    return range(start, len(seq))


def admitted_positions(
    seq: TokenSequence,
    h: int,
    dedup=DedupRule.TUPLE,
    context: Optional[ScoringContext] = None,
) -> tuple[list[int], int]:
    """(засчитанные позиции, T). context можно передать, чтобы продолжить проход."""
    candidates = candidate_positions(seq, h)
    if context is None:
        context = ScoringContext(h, DedupRule.parse(dedup))
    admitted = [t for t in candidates if context.admit(seq.tokens, t)]
    return admitted, len(candidates)


def admitted_secrets(
    seq: TokenSequence,
    key: MasterKey,
    h: int,
    dedup=DedupRule.TUPLE,
    context: Optional[ScoringContext] = None,
    shift: int = 0,
    dim: Optional[int] = None,
) -> tuple[np.ndarray, list[int], int]:
    """
    r(t)[idx_t] в засчитанных позициях, где idx_t = (x(t) + shift) mod d.
    shift ≠ 0 — это детекция с циклически сдвинутым секретом (сообщение m = shift).
    """
    positions, total = admitted_positions(seq, h, dedup, context)
    if not positions:
        return np.empty(0), positions, total
    d = dim or seq.vocab_size
    indices = [(seq.tokens[t] + shift) % d for t in positions]
    seeds = seeds_for_positions(key, seq.tokens, positions, h)
    return secret_entries(seeds, indices), positions, total


def _require_admitted(r: np.ndarray) -> None:
    if r.size == 0:
        raise InsufficientDataError("нет ни одной засчитанной позиции")


# ====================== 3. СКОРЫ ======================
def score_greenlist(
    seq: TokenSequence,
    key: MasterKey,
    params: SamplerParams,
    dedup=DedupRule.TUPLE,
    context: Optional[ScoringContext] = None,
    shift: int = 0,
    dim: Optional[int] = None,
) -> tuple[int, int]:
    """Число зелёных токенов и T'."""
    r, _, _ = admitted_secrets(seq, key, params.h, dedup, context, shift, dim)
    return int((r < params.gamma).sum()), int(r.size)


def score_exponential(
    seq: TokenSequence,
    key: MasterKey,
    params: SamplerParams,
    dedup=DedupRule.TUPLE,
    context: Optional[ScoringContext] = None,
    shift: int = 0,
    dim: Optional[int] = None,
) -> tuple[float, int]:
    """Σ −ln(1 − r_x) по засчитанным позициям и T'."""
    r, _, _ = admitted_secrets(seq, key, params.h, dedup, context, shift, dim)
    _require_admitted(r)
    return float(-np.log1p(-r).sum()), int(r.size)


def chernoff_bound(score: float, probs: Sequence[float]) -> float:
    """
    exp(Σ ln(λ_t/(λ_t+c)) − c·s), λ_t = p_t/(1−p_t), c — корень Σ 1/(c+λ_t) = −s.
    Корень ищется бисекцией на (0, 1e8); корня нет → 1.0.
    Позиции с p = 1 не дают вклада ни в скор, ни в границу.
    """
    p = np.asarray(probs, dtype=np.float64)
    p = p[p < 1.0]
    if p.size == 0:
        return 1.0
    lam = p / (1.0 - p)

    def slope(c: float) -> float:
        return float((1.0 / (c + lam)).sum()) + score

    # slope убывает по c; при slope(0) ≤ 0 оптимум c ≤ 0 и граница ≥ 1
    if slope(0.0) <= 0.0 or slope(CHERNOFF_C_MAX) >= 0.0:
        return 1.0
    c = bisect(slope, 0.0, CHERNOFF_C_MAX, xtol=CHERNOFF_XTOL, maxiter=500)
    log_bound = -float(np.log1p(c / lam).sum()) - c * score
    return min(1.0, math.exp(log_bound))


def score_neyman_pearson(
    seq: TokenSequence,
    key: MasterKey,
    params: SamplerParams,
    probs: Sequence[float],
    dedup=DedupRule.TUPLE,
) -> tuple[float, int, float]:
    """
    Скор Неймана–Пирсона Σ (1/p − 1)·ln r_x и граница Чернова на p-value.
    probs выровнены с засчитанными позициями (см. admitted_positions).
    """
    r, positions, _ = admitted_secrets(seq, key, params.h, dedup)
    _require_admitted(r)
    p = np.asarray(probs, dtype=np.float64)
    if p.shape[0] != r.shape[0]:
        raise ConfigurationError(f"вероятностей {p.shape[0]}, а засчитанных позиций {r.shape[0]}")
    zero = np.flatnonzero(p <= 0.0)
    if zero.size:
        raise ModelInconsistencyError(
            f"модель даёт нулевую вероятность токену в позиции {positions[int(zero[0])]}"
        )
    score = float(((1.0 / p - 1.0) * np.log(r)).sum())
    return score, int(r.size), chernoff_bound(score, p)


def score_simplified(
    seq: TokenSequence,
    key: MasterKey,
    params: SamplerParams,
    dedup=DedupRule.TUPLE,
) -> tuple[float, int]:
    """Σ ln r_x (≤ 0) и T'."""
    r, _, _ = admitted_secrets(seq, key, params.h, dedup)
    _require_admitted(r)
    return float(np.log(r).sum()), int(r.size)


# ====================== 4. P-VALUE ======================
def pvalue_binomial(score: int, scored: int, gamma: float) -> float:
    if scored < 1:
        raise InsufficientDataError("T' должно быть ≥ 1")
    if not 0 <= score <= scored:
        raise DomainError(f"скор {score} вне [0, {scored}]")
    if score == 0:
        return 1.0
    return reg_inc_beta(gamma, score, scored - score + 1)


def pvalue_gamma(score: float, scored: int) -> float:
    if scored < 1:
        raise InsufficientDataError("T' должно быть ≥ 1")
    if score < 0:
        raise DomainError(f"скор экспоненциальной схемы должен быть ≥ 0, получено {score}")
    return reg_upper_gamma(scored, score)


def pvalue_ztest(score: float, scored: int, scheme, gamma: float = 0.25) -> float:
    if scored < 1:
        raise InsufficientDataError("T' должно быть ≥ 1 для z-теста")
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.GREENLIST:
        mu0, sigma0 = gamma, math.sqrt(gamma * (1.0 - gamma))
    elif scheme is Scheme.EXPONENTIAL:
        mu0, sigma0 = 1.0, 1.0
    else:
        raise ConfigurationError("z-тест определён только для greenlist и exponential")
    z = (score / scored - mu0) / (sigma0 / math.sqrt(scored))
    return normal_sf(z)


def simplified_pvalue(score: float, scored: int) -> float:
    """P(T', −s): вероятность при H0 получить Σ ln r ≥ s."""
    if scored < 1:
        raise InsufficientDataError("T' должно быть ≥ 1")
    if score > 0:
        raise DomainError(f"упрощённый скор должен быть ≤ 0, получено {score}")
    return reg_lower_gamma(scored, -score)


def pvalue_simplified(
    seq: TokenSequence,
    key: MasterKey,
    params: SamplerParams,
    dedup=DedupRule.TUPLE,
) -> DetectionReport:
    score, scored = score_simplified(seq, key, params, dedup)
    total = len(candidate_positions(seq, params.h))
    return DetectionReport(
        score, scored, total, simplified_pvalue(score, scored), TestKind.SIMPLIFIED.value, DedupRule.parse(dedup).value
    )


# ====================== 5. ДИСПЕТЧЕР ======================
def detect(
    seq: TokenSequence,
    key: MasterKey,
    config: WatermarkConfig,
    model: Optional[LogitSource] = None,
) -> DetectionReport:
    """Скор + тест по конфигурации. np-тесту нужна модель (вероятности токенов)."""
    config.validate()
    params, dedup, test = config.params, config.dedup, config.resolved_test
    total = len(candidate_positions(seq, params.h))

    if test is TestKind.SIMPLIFIED:
        return pvalue_simplified(seq, key, params, dedup)

    if test is TestKind.NP:
        if model is None:
            raise ModelAccessError("тест np требует доступа к модели: передай --model")
        positions, _ = admitted_positions(seq, params.h, dedup)
        if not positions:
            raise InsufficientDataError("нет ни одной засчитанной позиции")
        probs = realized_probabilities(model, seq, positions, params.theta, params.top_p)
        score, scored, bound = score_neyman_pearson(seq, key, params, probs, dedup)
        return DetectionReport(score, scored, total, bound, test.value, dedup.value)

    if config.scheme is Scheme.GREENLIST:
        score, scored = score_greenlist(seq, key, params, dedup)
        if scored == 0:
            raise InsufficientDataError("нет ни одной засчитанной позиции")
        p_value = (
            pvalue_binomial(score, scored, params.gamma)
            if test is TestKind.BINOMIAL
            else pvalue_ztest(score, scored, Scheme.GREENLIST, params.gamma)
        )
    else:
        score, scored = score_exponential(seq, key, params, dedup)
        p_value = (
            pvalue_gamma(score, scored)
            if test is TestKind.GAMMA
            else pvalue_ztest(score, scored, Scheme.EXPONENTIAL)
        )
    return DetectionReport(float(score), scored, total, p_value, test.value, dedup.value)
