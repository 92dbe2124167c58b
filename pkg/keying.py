# =============================================
# keying.py — КЛЮЧИ, СИДЫ ОКНА И СЕКРЕТНЫЕ ВЕКТОРЫ
# =============================================
"""
Детерминированный вывод сида шага и секретного вектора r(t) из мастер-ключа
и окна из h предыдущих токенов.

Схема прообраза хэша (побайтово):

    key (32 байта) ‖ h (uint32 LE) ‖ x(t-h) … x(t-1) (каждый uint32 LE)

Сид окна — первые 8 байт SHA-256, big-endian. Из сида через splitmix64
заполняется состояние xoshiro256**, а каждый выход u превращается в
(u >> 11) · 2⁻⁵³ с заменой точного нуля на 2⁻⁵³, т.е. значения лежат в (0, 1).

Все функции чистые, без состояния.
"""

import hashlib
import os
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from config import Config
from errors import ConfigurationError

logger = Config.get_logger(__name__)

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_SM_MUL1 = 0xBF58476D1CE4E5B9
_SM_MUL2 = 0x94D049BB133111EB
UNIT = 2.0 ** -53
KEY_BYTES = 32
PAD_TOKEN = 0


# ====================== 1. МАСТЕР-КЛЮЧ ======================
@dataclass(frozen=True)
class MasterKey:
    """Непрозрачные 32 байта. repr не раскрывает содержимое."""

    bytes: bytes

    def __post_init__(self):
        if not isinstance(self.bytes, (bytes, bytearray)) or len(self.bytes) != KEY_BYTES:
            raise ConfigurationError(f"мастер-ключ должен быть ровно {KEY_BYTES} байта")

    @classmethod
    def from_hex(cls, text: str) -> "MasterKey":
        text = (text or "").strip()
        if len(text) != 2 * KEY_BYTES:
            raise ConfigurationError(f"ключ должен состоять из {2 * KEY_BYTES} hex-символов, получено {len(text)}")
        try:
            return cls(bytes.fromhex(text))
        except ValueError as e:
            raise ConfigurationError(f"ключ не является hex-строкой: {e}") from None

    @classmethod
    def from_int(cls, value: int) -> "MasterKey":
        """Ключ, воспроизводимо выведенный из целого сида (для харнесса и тестов)."""
        return cls(hashlib.sha256(b"master-key" + int(value).to_bytes(8, "little", signed=False)).digest())

    @classmethod
    def generate(cls) -> "MasterKey":
        return cls(os.urandom(KEY_BYTES))

    def hex(self) -> str:
        return self.bytes.hex()

    def __repr__(self) -> str:
        return "MasterKey(<скрыт>)"


# ====================== 2. СИД ОКНА ======================
def _prefix_hasher(key: MasterKey, h: int) -> "hashlib._Hash":
    hasher = hashlib.sha256(key.bytes)
    hasher.update(struct.pack("<I", h))
    return hasher


def derive_seed(key: MasterKey, window: Sequence[int], h: int = None) -> int:
    """
    k(t) = H(x(t-h), …, x(t-1), k) → 64-битный сид.

    window упорядочено от x(t-h) до x(t-1); его длина обязана равняться h.
    """
    if h is None:
        h = len(window)
    if len(window) != h:
        raise ConfigurationError(f"длина окна {len(window)} не равна h={h}")
    hasher = _prefix_hasher(key, h)
    if h:
        hasher.update(struct.pack(f"<{h}I", *window))
    return int.from_bytes(hasher.digest()[:8], "big")


def window_at(tokens: Sequence[int], t: int, h: int) -> list[int]:
    """Окно x(t-h)…x(t-1); позиции левее начала дополняются токеном 0."""
    if h == 0:
        return []
    start = t - h
    if start >= 0:
        return list(tokens[start:t])
    return [PAD_TOKEN] * (-start) + list(tokens[:t])


def seeds_for_positions(key: MasterKey, tokens: Sequence[int], positions: Iterable[int], h: int) -> np.ndarray:
    """Сиды окон для набора позиций одной последовательности (uint64)."""
    base = _prefix_hasher(key, h)
    seeds = []
    for t in positions:
        hasher = base.copy()
        if h:
            hasher.update(struct.pack(f"<{h}I", *window_at(tokens, t, h)))
        seeds.append(int.from_bytes(hasher.digest()[:8], "big"))
    return np.array(seeds, dtype=np.uint64)


def split_seed(base_seed: int, *labels: Union[str, int]) -> int:
    """Независимый 64-битный сид для (base_seed, метки…): расщепление потоков в харнессе."""
    hasher = hashlib.sha256(b"split" + int(base_seed).to_bytes(8, "little", signed=False))
    for label in labels:
        hasher.update(b"\x00" + str(label).encode("utf-8"))
    return int.from_bytes(hasher.digest()[:8], "big")


# ====================== 3. ГЕНЕРАТОР: splitmix64 + xoshiro256** ======================
def splitmix64(state: int) -> tuple[int, int]:
    """Один шаг splitmix64: (новое состояние, выход)."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _SM_MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _SM_MUL2) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """
    xoshiro256** 1.0 на питоновских int. Состояние заполняется четырьмя
    выходами splitmix64 от 64-битного сида.
    """

    __slots__ = ("s",)

    def __init__(self, state: Sequence[int]):
        if len(state) != 4 or not any(state):
            raise ConfigurationError("состояние xoshiro256** — 4 слова, не все нули")
        self.s = [int(w) & MASK64 for w in state]

    @classmethod
    def from_seed(cls, seed: int) -> "Xoshiro256StarStar":
        sm = int(seed) & MASK64
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        return cls(words)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def next_unit(self) -> float:
        """Равномерное в [0, 1): (u >> 11) · 2⁻⁵³."""
        return (self.next_u64() >> 11) * UNIT

    def next_open_unit(self) -> float:
        """Равномерное в (0, 1): как next_unit, но ноль заменяется на 2⁻⁵³."""
        return to_open_unit(self.next_u64())


def to_open_unit(u: int) -> float:
    m = u >> 11
    return (m if m else 1) * UNIT


# ====================== 4. СЕКРЕТНЫЙ ВЕКТОР ======================
@dataclass(frozen=True)
class SecretVector:
    """r(t) ∈ (0,1)^d."""

    entries: np.ndarray

    @property
    def d(self) -> int:
        return int(self.entries.shape[0])

    def __len__(self) -> int:
        return self.d


def secret_vector(seed: int, d: int) -> SecretVector:
    if d < 1:
        raise ConfigurationError(f"размерность секретного вектора должна быть ≥ 1, получено {d}")
    rng = Xoshiro256StarStar.from_seed(seed)
    entries = np.fromiter((rng.next_open_unit() for _ in range(d)), dtype=np.float64, count=d)
    return SecretVector(entries)


# ---------- векторизованная версия по многим сидам сразу ----------
_U = np.uint64


def _rotl_np(x: np.ndarray, k: int) -> np.ndarray:
    return (x << _U(k)) | (x >> _U(64 - k))


def _splitmix_np(state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    state = state + _U(GOLDEN_GAMMA)
    z = state
    z = (z ^ (z >> _U(30))) * _U(_SM_MUL1)
    z = (z ^ (z >> _U(27))) * _U(_SM_MUL2)
    return state, z ^ (z >> _U(31))


def secret_vectors(seeds: np.ndarray, d: int) -> np.ndarray:
    """
    Матрица (n, d): строка i совпадает с secret_vector(seeds[i], d).entries.
    Генераторы идут параллельно по оси n, d итераций.
    """
    if d < 1:
        raise ConfigurationError(f"размерность секретного вектора должна быть ≥ 1, получено {d}")
    seeds = np.asarray(seeds, dtype=np.uint64)
    n = seeds.shape[0]
    out = np.empty((n, d), dtype=np.float64)
    if n == 0:
        return out
    with np.errstate(over="ignore"):
        sm = seeds.copy()
        s = []
        for _ in range(4):
            sm, word = _splitmix_np(sm)
            s.append(word)
        s0, s1, s2, s3 = s
        for j in range(d):
            result = _rotl_np(s1 * _U(5), 7) * _U(9)
            t = s1 << _U(17)
            s2 = s2 ^ s0
            s3 = s3 ^ s1
            s1 = s1 ^ s2
            s0 = s0 ^ s3
            s2 = s2 ^ t
            s3 = _rotl_np(s3, 45)
            mant = result >> _U(11)
            mant = np.where(mant == 0, _U(1), mant)
            out[:, j] = mant.astype(np.float64) * UNIT
    return out


def secret_entries(seeds: np.ndarray, indices: Sequence[int]) -> np.ndarray:
    """Только нужные координаты r(t)[idx_t] для каждой пары (сид, индекс)."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        return np.empty(0, dtype=np.float64)
    vectors = secret_vectors(seeds, int(indices.max()) + 1)
    return vectors[np.arange(indices.size), indices]


# ====================== 5. ЗЕЛЁНЫЙ СПИСОК ======================
def greenlist_mask(v: Union[SecretVector, np.ndarray], gamma: float) -> np.ndarray:
    """mask[i] = r[i] < γ: независимые Bernoulli(γ) по координатам."""
    if not 0.0 < gamma < 1.0:
        raise ConfigurationError(f"γ должна лежать в (0, 1), получено {gamma}")
    entries = v.entries if isinstance(v, SecretVector) else np.asarray(v, dtype=np.float64)
    return entries < gamma
