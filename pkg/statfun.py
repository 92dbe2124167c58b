# =============================================
# statfun.py — СПЕЦИАЛЬНЫЕ ФУНКЦИИ ДЛЯ ТОЧНЫХ P-VALUE
# =============================================
"""
Регуляризованная неполная бета I_x(a,b), регуляризованные неполные гамма
P(a,s) / Q(a,s) и хвост нормального распределения 1 − Φ(z).

Алгоритмы:
- I_x(a,b): цепная дробь (модифицированный метод Лентца) + симметрия
  I_x(a,b) = 1 − I_{1−x}(b,a), когда x > (a+1)/(a+b+2);
- P, Q: степенной ряд при s < a+1, цепная дробь Лентца иначе;
  каждая ветка считает «свою» малую величину напрямую, без вычитания из 1;
- 1 − Φ(z) = erfc(z/√2) / 2.

Все результаты зажаты в [0, 1].
"""

import math

from config import Config
from errors import DomainError

logger = Config.get_logger(__name__)

EPS = 1e-15
TINY = 1e-300
MAX_ITER = 200_000
STIRLING_MIN = 10.0
LN_2PI = math.log(2.0 * math.pi)


def _clamp(p: float) -> float:
    if math.isnan(p):
        raise DomainError("вычисление дало NaN")
    return min(1.0, max(0.0, p))


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise DomainError(f"{name}={value} не является конечным числом")


# ====================== 1. НЕПОЛНАЯ БЕТА ======================
def _beta_cf(x: float, a: float, b: float) -> float:
    """Цепная дробь для I_x(a,b) (Лентц)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    for m in range(1, MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    logger.warning("цепная дробь беты не сошлась: x=%s a=%s b=%s", x, a, b)
    return h


def _log1pmx(e: float) -> float:
    """log(1+e) − e без потери точности при малых e."""
    if abs(e) > 0.01:
        return math.log1p(e) - e
    total = 0.0
    power = e * e
    for k in range(2, 16):
        total += (-power if k % 2 == 0 else power) / k
        power *= e
    return total


def _stirling_tail(v: float) -> float:
    """lnΓ(v) − ((v−½)·ln v − v + ½·ln 2π), годится при v ≥ STIRLING_MIN."""
    inv = 1.0 / v
    inv2 = inv * inv
    return inv * (1 / 12 - inv2 * (1 / 360 - inv2 * (1 / 1260 - inv2 * (1 / 1680 - inv2 / 1188))))


def _two_prod(p: float, q: float) -> tuple[float, float]:
    """p·q = prod + err точно (разбиение Вельткампа)."""
    prod = p * q

    def split(v: float) -> tuple[float, float]:
        t = 134217729.0 * v
        hi = t - (t - v)
        return hi, v - hi

    ph, pl = split(p)
    qh, ql = split(q)
    err = ((ph * qh - prod) + ph * ql + pl * qh) + pl * ql
    return prod, err


def _beta_front(x: float, a: float, b: float) -> float:
    """x^a·(1−x)^b / B(a,b).

    При больших параметрах lgamma теряет ~|lnΓ|·eps, поэтому для a или b ≥ STIRLING_MIN
    логарифм собирается из отклонения d = x·(a+b) − a и стирлинговых хвостов.
    """
    c = a + b
    big_a, big_b = a >= STIRLING_MIN, b >= STIRLING_MIN
    if not (big_a or big_b):
        log_front = (
            math.lgamma(c) - math.lgamma(a) - math.lgamma(b)
            + a * math.log(x) + b * math.log1p(-x)
        )
        return math.exp(log_front)
    prod, err = _two_prod(x, c)
    d = (prod - a) + err
    # u = x·c/a − 1, v = (1−x)·c/b − 1; a·u + b·v = 0
    u, v = d / a, -d / b
    log_xu = math.log1p(u) if u > -0.5 else math.log(x) + math.log(c / a)
    log_yv = math.log1p(v) if v > -0.5 else math.log1p(-x) + math.log(c / b)
    if big_a and big_b:
        log_front = (
            a * (_log1pmx(u) if u > -0.5 else log_xu - u)
            + b * (_log1pmx(v) if v > -0.5 else log_yv - v)
            + 0.5 * (math.log(a) + math.log(b) - math.log(c) - LN_2PI)
            - (_stirling_tail(a) + _stirling_tail(b) - _stirling_tail(c))
        )
    elif big_a:
        log_front = (
            a * log_xu + b * (log_yv + math.log(b))
            - 0.5 * math.log1p(b / a) - b - math.lgamma(b)
            - _stirling_tail(a) + _stirling_tail(c)
        )
    else:
        log_front = (
            b * log_yv + a * (log_xu + math.log(a))
            - 0.5 * math.log1p(a / b) - a - math.lgamma(a)
            - _stirling_tail(b) + _stirling_tail(c)
        )
    return math.exp(log_front)


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """I_x(a,b), относительная погрешность ≤ 1e-10 при a, b ≤ 1e6."""
    _check_finite(x=x, a=a, b=b)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x} вне [0, 1]")
    if a <= 0 or b <= 0:
        raise DomainError(f"параметры беты должны быть > 0: a={a}, b={b}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        return _clamp(_beta_front(x, a, b) * _beta_cf(x, a, b) / a)
    return _clamp(1.0 - _beta_front(x, a, b) * _beta_cf(1.0 - x, b, a) / b)


# ====================== 2. НЕПОЛНЫЕ ГАММЫ ======================
def _gamma_front(a: float, s: float) -> float:
    """s^a·e^(−s) / Γ(a)."""
    if a < STIRLING_MIN:
        return math.exp(-s + a * math.log(s) - math.lgamma(a))
    e = (s - a) / a
    body = _log1pmx(e) if e > -0.5 else math.log(s) - math.log(a) - e
    return math.exp(a * body + 0.5 * (math.log(a) - LN_2PI) - _stirling_tail(a))


def _gamma_series(a: float, s: float) -> float:
    """P(a,s) рядом; годится при s < a+1."""
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(MAX_ITER):
        ap += 1.0
        term *= s / ap
        total += term
        if abs(term) < abs(total) * EPS:
            break
    else:
        logger.warning("ряд неполной гаммы не сошёлся: a=%s s=%s", a, s)
    return total * _gamma_front(a, s)


def _gamma_cf(a: float, s: float) -> float:
    """Q(a,s) цепной дробью; годится при s ≥ a+1."""
    b = s + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    else:
        logger.warning("цепная дробь неполной гаммы не сошлась: a=%s s=%s", a, s)
    return _gamma_front(a, s) * h


def _gamma_pq(a: float, s: float) -> tuple[float, float]:
    _check_finite(a=a, s=s)
    if a <= 0:
        raise DomainError(f"параметр гаммы должен быть > 0: a={a}")
    if s < 0:
        raise DomainError(f"аргумент гаммы должен быть ≥ 0: s={s}")
    if s == 0.0:
        return 0.0, 1.0
    if s < a + 1.0:
        p = _clamp(_gamma_series(a, s))
        return p, _clamp(1.0 - p)
    q = _clamp(_gamma_cf(a, s))
    return _clamp(1.0 - q), q


def reg_upper_gamma(a: float, s: float) -> float:
    """Q(a,s) = Γ(a,s)/Γ(a)."""
    return _gamma_pq(a, s)[1]


def reg_lower_gamma(a: float, s: float) -> float:
    """P(a,s) = γ(a,s)/Γ(a) = 1 − Q(a,s)."""
    return _gamma_pq(a, s)[0]


# ====================== 3. НОРМАЛЬНЫЙ ХВОСТ ======================
def normal_sf(z: float) -> float:
    """1 − Φ(z)."""
    if math.isnan(z):
        raise DomainError("z=NaN")
    if z <= -38.0:
        return 1.0
    return _clamp(0.5 * math.erfc(z / math.sqrt(2.0)))
