# =============================================
# harness.py — МОНТЕ-КАРЛО ЭКСПЕРИМЕНТЫ НАСТОЛЬНОГО МАСШТАБА
# =============================================
"""
Четыре эксперимента над игрушечной моделью:

    fpr_calibration  — эмпирический FPR тестов на H0-текстах против целевого
    robustness       — TPR при фиксированном пороге до и после атаки заменой
    identification   — точность идентификации сообщения по сетке M и FPR
    h1_bounds        — среднее и дисперсия скора при H1 против теоретических границ

Каждое испытание получает свой сид из (сид эксперимента, метки, номер испытания)
через split_seed, поэтому результат не зависит от числа воркеров.
Все доли снабжены 95% интервалами Клоппера–Пирсона.

Использование:
    spec = ExperimentSpec.from_json("experiments/calibration.json")
    result = run_experiment(spec)
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np
from scipy import special, stats

from config import Config
from detectors import admitted_secrets, detect
from errors import ConfigurationError, InsufficientDataError
from keying import MasterKey, Xoshiro256StarStar, split_seed
from multibit import MessageSpace, generate_multibit, identify_from_scores, score_all_messages
from samplers import TokenSequence, generate, realized_probabilities
from schemes import COMPATIBLE_TESTS, DEFAULT_TEST, DedupRule, SamplerParams, Scheme, TestKind, WatermarkConfig
from toylm import ONE_HOT, PRESETS, ToyModel

logger = Config.get_logger(__name__)

EXPERIMENTS = ("fpr_calibration", "robustness", "identification", "h1_bounds")
H0_SOURCES = ("vanilla", "uniform", "repetitive")
ZETA2 = math.pi ** 2 / 6.0


# ====================== 1. СПЕЦИФИКАЦИЯ ЭКСПЕРИМЕНТА ======================
@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    trials: int = 1000
    keys: tuple = (0,)
    text_length: int = 256
    prompt_length: int = 0
    seed: int = 0
    model: str = "toy:medium"
    schemes: tuple = ("greenlist", "exponential")
    h_values: tuple = (4,)
    dedup_rules: tuple = ("tuple",)
    tests: tuple = ()
    gamma: float = 0.25
    delta: float = 2.0
    theta: float = 1.0
    top_p: float = 1.0
    # fpr_calibration
    h0_sources: tuple = ("vanilla",)
    period: int = 2
    fpr_targets: tuple = (0.1, 0.01, 0.001)
    # robustness
    attack_probability: float = 0.3
    deltas: tuple = (1.0, 2.0, 4.0)
    thetas: tuple = (0.8, 1.0, 1.1)
    fpr_threshold: float = 1e-5
    # identification
    num_messages: tuple = (16, 64, 256)
    users: int = 16
    # h1_bounds
    presets: tuple = ("low", "medium", "high")
    # вывод
    workers: Optional[int] = None
    output: Optional[str] = None
    plot: bool = False

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, list):
                object.__setattr__(self, f.name, tuple(value))
        self.validate()

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"неизвестные поля спецификации эксперимента: {', '.join(unknown)}")
        if "experiment" not in data:
            raise ConfigurationError("в спецификации нет поля experiment")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigurationError(f"спецификация эксперимента: {e}") from None

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "ExperimentSpec":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigurationError(f"файл спецификации не найден: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"спецификация {path} не является JSON: {e}") from None
        if not isinstance(data, dict):
            raise ConfigurationError("спецификация эксперимента должна быть JSON-объектом")
        return cls.from_dict(data)

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"неизвестный эксперимент {self.experiment!r}; допустимо: {', '.join(EXPERIMENTS)}")
        if self.trials < 1:
            raise ConfigurationError(f"trials должно быть ≥ 1, получено {self.trials}")
        if not self.keys:
            raise ConfigurationError("нужен хотя бы один ключ")
        if self.text_length < 1 or self.prompt_length < 0:
            raise ConfigurationError("text_length должно быть ≥ 1, prompt_length ≥ 0")
        if not 0.0 <= self.attack_probability <= 1.0:
            raise ConfigurationError(f"вероятность атаки вне [0, 1]: {self.attack_probability}")
        if any(not 0.0 < t <= 1.0 for t in self.fpr_targets) or not 0.0 < self.fpr_threshold <= 1.0:
            raise ConfigurationError("целевые FPR должны лежать в (0, 1]")
        for scheme in self.schemes:
            if Scheme.parse(scheme) is Scheme.VANILLA:
                raise ConfigurationError("в экспериментах участвуют только greenlist и exponential")
        for rule in self.dedup_rules:
            DedupRule.parse(rule)
        for test in self.tests:
            TestKind.parse(test)
        bad_sources = set(self.h0_sources) - set(H0_SOURCES)
        if bad_sources:
            raise ConfigurationError(f"неизвестные H0-источники: {sorted(bad_sources)}")
        bad_presets = set(self.presets) - set(PRESETS) - {ONE_HOT}
        if bad_presets:
            raise ConfigurationError(f"неизвестные пресеты энтропии: {sorted(bad_presets)}")
        if self.period < 1 or self.users < 1 or any(m < 1 for m in self.num_messages):
            raise ConfigurationError("period, users и все M должны быть ≥ 1")
        if any(h < 0 for h in self.h_values) or not self.h_values:
            raise ConfigurationError("h_values: нужен хотя бы один h ≥ 0")

    def master_key(self, index: int) -> MasterKey:
        value = self.keys[index]
        return MasterKey.from_hex(value) if isinstance(value, str) else MasterKey.from_int(value)

    def toy_model(self) -> ToyModel:
        return ToyModel.from_spec(self.model)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


# ====================== 2. ИНТЕРВАЛЫ И ПУЛ ======================
def clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    a = 1.0 - level
    low = 0.0 if k == 0 else float(stats.beta.ppf(a / 2, k, n - k + 1))
    high = 1.0 if k == n else float(stats.beta.ppf(1 - a / 2, k + 1, n - k))
    return low, high


def trial_chunks(trials: int, workers: int) -> list[tuple[int, int]]:
    parts = max(1, min(trials, workers * 4))
    bounds = np.linspace(0, trials, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_tasks(fn: Callable, tasks: Sequence[tuple], workers: Optional[int] = None) -> list:
    """Параллельный map по процессам; workers ≤ 1 — всё в текущем процессе."""
    workers = workers or Config.HARNESS_WORKERS
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*task) for task in tasks]
    logger.info("запускаю %d задач на %d воркерах", len(tasks), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def _workers(spec: ExperimentSpec) -> int:
    return spec.workers or Config.HARNESS_WORKERS


# ====================== 3. ИСТОЧНИКИ ТЕКСТА ======================
def random_prompt(spec: ExperimentSpec, vocab_size: int, *labels, min_length: int = 0) -> TokenSequence:
    """Случайный промпт не короче min_length: окно первого засчитанного токена целиком случайно."""
    rng = Xoshiro256StarStar.from_seed(split_seed(spec.seed, "prompt", *labels))
    length = max(spec.prompt_length, min_length)
    tokens = [int(rng.next_unit() * vocab_size) for _ in range(length)]
    return TokenSequence(tuple(tokens), vocab_size, len(tokens))


def trial_key(spec: ExperimentSpec, key_index: int, *labels) -> MasterKey:
    """Ключ одного испытания, выведенный из мастер-ключа; при общем ключе exponential-тексты с общим началом совпадают."""
    return MasterKey.from_int(split_seed(spec.seed, "key", spec.master_key(key_index).hex(), *labels))


def _warn_repeats(what: str, distinct: int, total: int) -> None:
    if distinct < total:
        logger.warning("%s: только %d различных текстов из %d, увеличьте h или prompt_length", what, distinct, total)


def h0_text(spec: ExperimentSpec, model: ToyModel, source: str, key_index: int, trial: int) -> TokenSequence:
    """Естественный текст без водяного знака: vanilla-генерация, равномерный шум или повторяющийся паттерн."""
    labels = ("h0", source, key_index, trial)
    prompt = random_prompt(spec, model.vocab_size, *labels)
    seed = split_seed(spec.seed, *labels)
    if source == "vanilla":
        params = SamplerParams(scheme=Scheme.VANILLA, theta=spec.theta, top_p=spec.top_p)
        return generate(model, params, None, prompt, spec.text_length, seed)
    rng = Xoshiro256StarStar.from_seed(seed)
    if source == "uniform":
        body = [int(rng.next_unit() * model.vocab_size) for _ in range(spec.text_length)]
    else:
        pattern = [int(rng.next_unit() * model.vocab_size) for _ in range(spec.period)]
        body = [pattern[i % spec.period] for i in range(spec.text_length)]
    return TokenSequence(prompt.tokens + tuple(body), model.vocab_size, len(prompt))


def attack_substitute(seq: TokenSequence, p_sub: float, rng_seed: int) -> TokenSequence:
    """Каждый токен вне промпта с вероятностью p_sub заменяется на равномерно случайный другой."""
    if not 0.0 <= p_sub <= 1.0:
        raise ConfigurationError(f"вероятность замены вне [0, 1]: {p_sub}")
    rng = Xoshiro256StarStar.from_seed(rng_seed)
    vocab = seq.vocab_size
    tokens = list(seq.tokens)
    for t in range(seq.prompt_len, len(tokens)):
        if rng.next_unit() < p_sub:
            tokens[t] = (tokens[t] + 1 + int(rng.next_unit() * (vocab - 1))) % vocab
    return seq.with_tokens(tokens)


def _calibration_tests(spec: ExperimentSpec, scheme: Scheme) -> list[TestKind]:
    if spec.tests:
        wanted = [TestKind.parse(t) for t in spec.tests]
        return [t for t in wanted if t in COMPATIBLE_TESTS[scheme]]
    if scheme is Scheme.GREENLIST:
        return [TestKind.BINOMIAL, TestKind.ZTEST]
    return [TestKind.GAMMA, TestKind.SIMPLIFIED, TestKind.ZTEST]


# ====================== 4. КАЛИБРОВКА FPR ======================
@dataclass
class CalibrationCurve:
    source: str
    scheme: str
    test: str
    h: int
    dedup: str
    trials: int
    thresholds: list
    empirical: list
    ci_low: list
    ci_high: list
    mean_scored: float
    ks_statistic: float
    ks_pvalue: float

    def matches(self) -> list[bool]:
        """Цель внутри интервала Клоппера–Пирсона эмпирической доли."""
        return [lo <= t <= hi for t, lo, hi in zip(self.thresholds, self.ci_low, self.ci_high)]

    def valid(self) -> list[bool]:
        """Эмпирический FPR не превышает цель значимо (дискретные тесты консервативны)."""
        return [lo <= t for t, lo in zip(self.thresholds, self.ci_low)]

    def ratios(self) -> list[float]:
        return [e / t for e, t in zip(self.empirical, self.thresholds)]

    def to_dict(self) -> dict:
        return asdict(self)


def _calibration_chunk(spec: ExperimentSpec, source: str, key_index: int, start: int, stop: int) -> dict:
    model = spec.toy_model()
    key = spec.master_key(key_index)
    out: dict = {}
    for trial in range(start, stop):
        seq = h0_text(spec, model, source, key_index, trial)
        for scheme_name in spec.schemes:
            scheme = Scheme.parse(scheme_name)
            for h in spec.h_values:
                params = SamplerParams(scheme=scheme, gamma=spec.gamma, h=h, theta=spec.theta, top_p=spec.top_p)
                for rule in spec.dedup_rules:
                    for test in _calibration_tests(spec, scheme):
                        config = WatermarkConfig(key, params, test, DedupRule.parse(rule))
                        try:
                            report = detect(seq, key, config, model)
                            p, scored = report.p_value, report.scored_tokens
                        except InsufficientDataError:
                            p, scored = 1.0, 0
                        out.setdefault((scheme.value, test.value, h, rule), []).append((p, scored))
    return out


def run_fpr_calibration(spec: ExperimentSpec) -> list[CalibrationCurve]:
    workers = _workers(spec)
    curves = []
    for source in spec.h0_sources:
        tasks = [
            (spec, source, k, a, b)
            for k in range(len(spec.keys))
            for a, b in trial_chunks(spec.trials, workers)
        ]
        merged: dict = {}
        for part in run_tasks(_calibration_chunk, tasks, workers):
            for label, values in part.items():
                merged.setdefault(label, []).extend(values)

        for (scheme, test, h, rule), values in sorted(merged.items()):
            pvals = np.array([v[0] for v in values])
            scored = np.array([v[1] for v in values])
            n = pvals.size
            empirical, lows, highs = [], [], []
            for target in spec.fpr_targets:
                k = int((pvals < target).sum())
                lo, hi = clopper_pearson(k, n)
                empirical.append(k / n)
                lows.append(lo)
                highs.append(hi)
            ks = stats.kstest(pvals, "uniform")
            curve = CalibrationCurve(
                source=source, scheme=scheme, test=test, h=h, dedup=rule, trials=n,
                thresholds=list(spec.fpr_targets), empirical=empirical, ci_low=lows, ci_high=highs,
                mean_scored=float(scored.mean()), ks_statistic=float(ks.statistic), ks_pvalue=float(ks.pvalue),
            )
            curves.append(curve)
            logger.info(
                "калибровка %s/%s/%s h=%d dedup=%s: FPR %s",
                source, scheme, test, h, rule, ", ".join(f"{e:.2e}" for e in empirical),
            )
    return curves


# ====================== 5. РОБАСТНОСТЬ ======================
@dataclass
class RobustnessCell:
    scheme: str
    knob: str
    value: float
    h: int
    trials: int
    threshold: float
    tpr: float
    tpr_ci: tuple
    tpr_attacked: float
    tpr_attacked_ci: tuple
    mean_scored: float
    mean_scored_attacked: float
    distinct_texts: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tpr_ci"] = list(self.tpr_ci)
        d["tpr_attacked_ci"] = list(self.tpr_attacked_ci)
        return d


def _cell_params(spec: ExperimentSpec, scheme: Scheme, value: float, h: int) -> SamplerParams:
    if scheme is Scheme.GREENLIST:
        return SamplerParams(scheme=scheme, delta=value, gamma=spec.gamma, h=h, theta=spec.theta, top_p=spec.top_p)
    return SamplerParams(scheme=scheme, gamma=spec.gamma, h=h, theta=value, top_p=spec.top_p)


def _safe_detect(seq, key, config, model) -> tuple[float, int]:
    try:
        report = detect(seq, key, config, model)
        return report.p_value, report.scored_tokens
    except InsufficientDataError:
        return 1.0, 0


def _robustness_chunk(
    spec: ExperimentSpec, scheme_name: str, value: float, h: int, key_index: int, start: int, stop: int
) -> list[tuple]:
    model = spec.toy_model()
    scheme = Scheme.parse(scheme_name)
    params = _cell_params(spec, scheme, value, h)
    test, dedup = DEFAULT_TEST[scheme], DedupRule.parse(spec.dedup_rules[0])
    rows = []
    for trial in range(start, stop):
        labels = ("robust", scheme.value, value, h, key_index, trial)
        key = trial_key(spec, key_index, *labels)
        config = WatermarkConfig(key, params, test, dedup)
        prompt = random_prompt(spec, model.vocab_size, *labels, min_length=max(h, model.order))
        seq = generate(model, params, key, prompt, spec.text_length, split_seed(spec.seed, *labels))
        attacked = attack_substitute(seq, spec.attack_probability, split_seed(spec.seed, "attack", *labels))
        clean, after = _safe_detect(seq, key, config, model), _safe_detect(attacked, key, config, model)
        rows.append(clean + after + (seq.tokens,))
    return rows


def run_robustness(spec: ExperimentSpec) -> list[RobustnessCell]:
    workers = _workers(spec)
    cells = []
    for scheme_name in spec.schemes:
        scheme = Scheme.parse(scheme_name)
        knob, values = ("delta", spec.deltas) if scheme is Scheme.GREENLIST else ("theta", spec.thetas)
        for value in values:
            for h in spec.h_values:
                tasks = [
                    (spec, scheme.value, float(value), h, k, a, b)
                    for k in range(len(spec.keys))
                    for a, b in trial_chunks(spec.trials, workers)
                ]
                rows = [row for part in run_tasks(_robustness_chunk, tasks, workers) for row in part]
                arr = np.array([row[:4] for row in rows], dtype=np.float64)
                n = arr.shape[0]
                distinct = len({row[4] for row in rows})
                _warn_repeats(f"робастность {scheme.value} {knob}={value}", distinct, n)
                hits = int((arr[:, 0] < spec.fpr_threshold).sum())
                hits_attacked = int((arr[:, 2] < spec.fpr_threshold).sum())
                cell = RobustnessCell(
                    scheme=scheme.value, knob=knob, value=float(value), h=h, trials=n,
                    threshold=spec.fpr_threshold,
                    tpr=hits / n, tpr_ci=clopper_pearson(hits, n),
                    tpr_attacked=hits_attacked / n, tpr_attacked_ci=clopper_pearson(hits_attacked, n),
                    mean_scored=float(arr[:, 1].mean()), mean_scored_attacked=float(arr[:, 3].mean()),
                    distinct_texts=distinct,
                )
                cells.append(cell)
                logger.info(
                    "робастность %s %s=%s h=%d: TPR %.3f → %.3f после атаки",
                    scheme.value, knob, value, h, cell.tpr, cell.tpr_attacked,
                )
    return cells


# ====================== 6. ИДЕНТИФИКАЦИЯ ======================
@dataclass
class IdentificationCell:
    scheme: str
    num_messages: int
    fpr_target: float
    texts: int
    flagged: int
    correct: int
    false_accusations: int
    accuracy: float
    accuracy_ci: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["accuracy_ci"] = list(self.accuracy_ci)
        return d


def _identification_params(spec: ExperimentSpec, scheme: Scheme) -> SamplerParams:
    return SamplerParams(
        scheme=scheme, delta=spec.delta, gamma=spec.gamma, h=spec.h_values[0], theta=spec.theta, top_p=spec.top_p
    )


def identification_dim(spec: ExperimentSpec, vocab_size: int) -> int:
    """Одно d на всю сетку M: лишние сообщения просто не получают текстов."""
    return MessageSpace(max(max(spec.num_messages), spec.users), vocab_size).d


def _identification_chunk(
    spec: ExperimentSpec, scheme_name: str, key_index: int, user: int, start: int, stop: int
) -> list[tuple[int, np.ndarray, int, int]]:
    model = spec.toy_model()
    scheme = Scheme.parse(scheme_name)
    params = _identification_params(spec, scheme)
    d = identification_dim(spec, model.vocab_size)
    dedup = DedupRule.parse(spec.dedup_rules[0])
    rows = []
    for trial in range(start, stop):
        labels = ("ident", scheme.value, key_index, user, trial)
        key = trial_key(spec, key_index, *labels)
        prompt = random_prompt(spec, model.vocab_size, *labels, min_length=max(params.h, model.order))
        seq = generate_multibit(
            model, params, key, prompt, spec.text_length, user, d, split_seed(spec.seed, *labels), dim=d
        )
        scores, scored, total = score_all_messages(seq, key, params, d, dedup)
        rows.append((user, scores, scored, total))
    return rows


def run_identification(spec: ExperimentSpec) -> list[IdentificationCell]:
    workers = _workers(spec)
    cells = []
    for scheme_name in spec.schemes:
        scheme = Scheme.parse(scheme_name)
        params = _identification_params(spec, scheme)
        tasks = [
            (spec, scheme.value, k, user, a, b)
            for k in range(len(spec.keys))
            for user in range(spec.users)
            for a, b in trial_chunks(spec.trials, max(1, workers // spec.users))
        ]
        rows = [row for part in run_tasks(_identification_chunk, tasks, workers) for row in part]
        for fpr in spec.fpr_targets:
            for m_count in spec.num_messages:
                flagged = correct = wrong = texts = 0
                for user, scores, scored, total in rows:
                    if user >= m_count or scored == 0:
                        continue
                    texts += 1
                    report = identify_from_scores(scores, scored, total, params, m_count, fpr)
                    if report.flagged:
                        flagged += 1
                        if report.best_message == user:
                            correct += 1
                        else:
                            wrong += 1
                cell = IdentificationCell(
                    scheme=scheme.value, num_messages=m_count, fpr_target=fpr, texts=texts,
                    flagged=flagged, correct=correct, false_accusations=wrong,
                    accuracy=correct / texts if texts else 0.0, accuracy_ci=clopper_pearson(correct, texts),
                )
                cells.append(cell)
                logger.info(
                    "идентификация %s M=%d FPR=%g: точность %.3f, ложных обвинений %d",
                    scheme.value, m_count, fpr, cell.accuracy, wrong,
                )
    return cells


# ====================== 7. ГРАНИЦЫ ПРИ H1 ======================
def exact_h1_moments(probs: Sequence[float]) -> tuple[float, float]:
    """
    Точные условные моменты скора exponential-схемы при H1:
    E = Σ H(1/p_t) (гармоническое число), Var = Σ [ψ₁(1) − ψ₁(1 + 1/p_t)].
    """
    a = 1.0 / np.asarray(probs, dtype=np.float64)
    mean = float((special.digamma(a + 1.0) + np.euler_gamma).sum())
    var = float((special.polygamma(1, 1.0) - special.polygamma(1, a + 1.0)).sum())
    return mean, var


def entropy_bound(scored: int, entropy: float) -> float:
    return scored + (ZETA2 - 1.0) * entropy


def mean_in_se(values: np.ndarray) -> float:
    """Среднее в единицах его стандартной ошибки; NaN, если выборка вырождена (все значения равны)."""
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n < 2:
        return 0.0
    if np.ptp(values) == 0.0:
        return float("nan")
    return float(values.mean() / (values.std(ddof=1) / math.sqrt(n)))


@dataclass
class H1BoundReport:
    preset: str
    alpha: float
    trials: int
    text_length: int
    distinct_texts: int
    mean_scored: float
    mean_score: float
    mean_entropy: float
    mean_bound: float
    mean_exact: float
    residual_mean: float
    residual_se: float
    mean_ok: bool
    exact_gap_se: float
    variance_empirical: float
    variance_bound: float
    variance_exact: float
    variance_se: float
    variance_ok: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _h1_model(spec: ExperimentSpec, preset: str) -> ToyModel:
    base = spec.toy_model()
    if preset == ONE_HOT:
        return ToyModel(base.order, base.vocab_size, 1.0, base.seed, one_hot=True)
    return base.with_alpha(PRESETS[preset])


def _h1_chunk(spec: ExperimentSpec, preset: str, key_index: int, start: int, stop: int) -> list[tuple]:
    model = _h1_model(spec, preset)
    h = max(spec.h_values[0], model.order)
    params = SamplerParams(scheme=Scheme.EXPONENTIAL, h=h, theta=spec.theta, top_p=spec.top_p)
    dedup = DedupRule.parse(spec.dedup_rules[0])
    rows = []
    for trial in range(start, stop):
        labels = ("h1", preset, key_index, trial)
        key = trial_key(spec, key_index, *labels)
        prompt = random_prompt(spec, model.vocab_size, *labels, min_length=h)
        seq = generate(model, params, key, prompt, spec.text_length, split_seed(spec.seed, *labels))
        r, positions, _ = admitted_secrets(seq, key, h, dedup)
        if not positions:
            continue
        probs = realized_probabilities(model, seq, positions, spec.theta, spec.top_p)
        score = float(-np.log1p(-r).sum())
        nz = probs[probs > 0]
        entropy = float(-(nz * np.log(nz)).sum())
        mean, var = exact_h1_moments(probs)
        rows.append((score, len(positions), entropy, mean, var, seq.tokens))
    return rows


def run_h1_bounds(spec: ExperimentSpec) -> list[H1BoundReport]:
    workers = _workers(spec)
    reports = []
    for preset in spec.presets:
        tasks = [
            (spec, preset, k, a, b)
            for k in range(len(spec.keys))
            for a, b in trial_chunks(spec.trials, workers)
        ]
        rows = [row for part in run_tasks(_h1_chunk, tasks, workers) for row in part]
        if not rows:
            raise InsufficientDataError(f"пресет {preset}: ни одного текста с засчитанными позициями")
        arr = np.array([row[:5] for row in rows], dtype=np.float64)
        score, scored, entropy, exact, exact_var = arr.T
        n = arr.shape[0]
        distinct = len({row[5] for row in rows})
        _warn_repeats(f"H1 {preset}", distinct, n)

        def se(x: np.ndarray) -> float:
            return float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")

        bound = entropy_bound(scored, entropy)
        residual = score - bound
        centered_sq = (score - exact) ** 2
        variance_bound = float(scored.mean() * ZETA2)
        report = H1BoundReport(
            preset=preset,
            alpha=_h1_model(spec, preset).alpha,
            trials=n,
            text_length=spec.text_length,
            distinct_texts=distinct,
            mean_scored=float(scored.mean()),
            mean_score=float(score.mean()),
            mean_entropy=float(entropy.mean()),
            mean_bound=float(bound.mean()),
            mean_exact=float(exact.mean()),
            residual_mean=float(residual.mean()),
            residual_se=se(residual),
            mean_ok=bool(residual.mean() >= -3.0 * se(residual)),
            exact_gap_se=mean_in_se(score - exact),
            variance_empirical=float(centered_sq.mean()),
            variance_bound=variance_bound,
            variance_exact=float(exact_var.mean()),
            variance_se=se(centered_sq),
            variance_ok=bool(centered_sq.mean() <= variance_bound + 3.0 * se(centered_sq)),
        )
        reports.append(report)
        logger.info(
            "H1 %s: среднее %.2f ≥ граница %.2f — %s; дисперсия %.2f ≤ %.2f — %s",
            preset, report.mean_score, report.mean_bound, "✅" if report.mean_ok else "❌",
            report.variance_empirical, report.variance_bound, "✅" if report.variance_ok else "❌",
        )
    return reports


# ====================== 8. ДИСПЕТЧЕР ======================
@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    items: list = field(default_factory=list)

    @property
    def experiment(self) -> str:
        return self.spec.experiment

    def rows(self) -> list[dict[str, Any]]:
        return [item.to_dict() for item in self.items]


RUNNERS: dict[str, Callable[[ExperimentSpec], list]] = {
    "fpr_calibration": run_fpr_calibration,
    "robustness": run_robustness,
    "identification": run_identification,
    "h1_bounds": run_h1_bounds,
}


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    logger.info("эксперимент %s: %d испытаний × %d ключей", spec.experiment, spec.trials, len(spec.keys))
    items = RUNNERS[spec.experiment](spec)
    logger.info("✅ эксперимент %s завершён: %d строк", spec.experiment, len(items))
    return ExperimentResult(spec, items)
