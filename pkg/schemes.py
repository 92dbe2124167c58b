# =============================================
# schemes.py — СХЕМЫ, ТЕСТЫ, ПРАВИЛА ДЕДУПЛИКАЦИИ И ПАРАМЕТРЫ
# =============================================
"""
Перечисления и dataclass-параметры, которые ходят между модулями:

    Scheme      — greenlist / exponential / vanilla
    Decoding    — sample / greedy
    TestKind    — binomial / gamma / ztest / np / simplified
    DedupRule   — tuple / context / off
    SamplerParams, WatermarkConfig

Использование:
    from schemes import Scheme, WatermarkConfig

    cfg = WatermarkConfig(key=key, params=SamplerParams(scheme=Scheme.EXPONENTIAL, h=2))
    cfg.validate()
"""

from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Optional

from config import Config
from errors import ConfigurationError
from keying import MasterKey


class _ChoiceEnum(str, Enum):
    @classmethod
    def parse(cls, value) -> "_ChoiceEnum":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            allowed = ", ".join(m.value for m in cls)
            raise ConfigurationError(f"неизвестное значение {value!r}; допустимо: {allowed}") from None

    @classmethod
    def list_all(cls) -> list[str]:
        return [m.value for m in cls]


class Scheme(_ChoiceEnum):
    GREENLIST = "greenlist"
    EXPONENTIAL = "exponential"
    VANILLA = "vanilla"


class Decoding(_ChoiceEnum):
    SAMPLE = "sample"
    GREEDY = "greedy"


class TestKind(_ChoiceEnum):
    BINOMIAL = "binomial"
    GAMMA = "gamma"
    ZTEST = "ztest"
    NP = "np"
    SIMPLIFIED = "simplified"


class DedupRule(_ChoiceEnum):
    TUPLE = "tuple"      # новый кортеж {контекст + токен}
    CONTEXT = "context"  # новое окно контекста
    OFF = "off"


# Какие тесты применимы к какой схеме
COMPATIBLE_TESTS = {
    Scheme.GREENLIST: {TestKind.BINOMIAL, TestKind.ZTEST},
    Scheme.EXPONENTIAL: {TestKind.GAMMA, TestKind.ZTEST, TestKind.NP, TestKind.SIMPLIFIED},
}
DEFAULT_TEST = {
    Scheme.GREENLIST: TestKind.BINOMIAL,
    Scheme.EXPONENTIAL: TestKind.GAMMA,
}


# ====================== ПАРАМЕТРЫ СЭМПЛЕРА ======================
@dataclass(frozen=True)
class SamplerParams:
    scheme: Scheme = Scheme.EXPONENTIAL
    delta: float = 2.0
    gamma: float = 0.25
    h: int = 1
    theta: float = 1.0
    top_p: float = 1.0
    decoding: Decoding = Decoding.SAMPLE

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        object.__setattr__(self, "decoding", Decoding.parse(self.decoding))
        if self.h < 0:
            raise ConfigurationError(f"ширина окна h должна быть ≥ 0, получено {self.h}")
        if self.delta < 0:
            raise ConfigurationError(f"δ должна быть ≥ 0, получено {self.delta}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError(f"γ должна лежать в (0, 1), получено {self.gamma}")
        if not self.theta > 0:
            raise ConfigurationError(f"температура θ должна быть > 0, получено {self.theta}")
        if not 0.0 < self.top_p <= 1.0:
            raise ConfigurationError(f"top_p должен лежать в (0, 1], получено {self.top_p}")
        if self.scheme is Scheme.EXPONENTIAL and self.decoding is Decoding.GREEDY:
            raise ConfigurationError("экспоненциальная схема детерминирована и не сочетается с greedy")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scheme"] = self.scheme.value
        d["decoding"] = self.decoding.value
        return d

    @classmethod
    def defaults(cls, **overrides) -> "SamplerParams":
        base = dict(
            scheme=Config.DEFAULT_SCHEME,
            delta=Config.DEFAULT_DELTA,
            gamma=Config.DEFAULT_GAMMA,
            h=Config.DEFAULT_H,
            theta=Config.DEFAULT_THETA,
            top_p=Config.DEFAULT_TOP_P,
        )
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)


# ====================== ПОЛНАЯ КОНФИГУРАЦИЯ ВОДЯНОГО ЗНАКА ======================
@dataclass(frozen=True)
class WatermarkConfig:
    """Ключ + параметры сэмплера + выбор теста и дедупликации."""

    key: MasterKey
    params: SamplerParams = field(default_factory=SamplerParams)
    test: Optional[TestKind] = None
    dedup: DedupRule = DedupRule.TUPLE

    def __post_init__(self):
        object.__setattr__(self, "dedup", DedupRule.parse(self.dedup))
        if self.test is not None:
            object.__setattr__(self, "test", TestKind.parse(self.test))

    @property
    def scheme(self) -> Scheme:
        return self.params.scheme

    @property
    def h(self) -> int:
        return self.params.h

    @property
    def gamma(self) -> float:
        return self.params.gamma

    @property
    def resolved_test(self) -> TestKind:
        if self.test is not None:
            return self.test
        if self.scheme is Scheme.VANILLA:
            raise ConfigurationError("для детекции выбери схему greenlist или exponential")
        return DEFAULT_TEST[self.scheme]

    def validate(self) -> "WatermarkConfig":
        if not isinstance(self.key, MasterKey):
            raise ConfigurationError("нужен мастер-ключ")
        if self.scheme is not Scheme.VANILLA:
            test = self.resolved_test
            if test not in COMPATIBLE_TESTS[self.scheme]:
                raise ConfigurationError(f"тест {test.value} не применим к схеме {self.scheme.value}")
        return self

    def to_dict(self) -> dict:
        """Без ключа: ключ никогда не пишется в отчёты."""
        d = self.params.to_dict()
        d.update(test=self.test.value if self.test else None, dedup=self.dedup.value)
        return d
