# =============================================
# utils.py — ВСПОМОГАТЕЛЬНЫЕ ФУНКЦИИ ДЛЯ CLI И ХАРНЕССА
# =============================================
"""
Содержит:
1. Мастер-ключ из флага или окружения
2. Модели по строке: toy:<preset>… или provider:<команда>
3. JSONL-записи последовательностей (чтение построчно, запись)
4. Текстовый режим: байты UTF-8 ↔ id 0–255
5. Промпт из файла или текста
"""

import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterator, Optional, Sequence, Union

from config import Config
from errors import ConfigurationError, StorageError, UsageError
from keying import MasterKey
from samplers import TokenSequence
from schemes import SamplerParams
from toylm import ToyModel

logger = Config.get_logger(__name__)

BYTE_VOCAB = 256


# ====================== 1. КЛЮЧ ======================
def resolve_key(key_hex: Optional[str]) -> MasterKey:
    """--key важнее WM_MASTER_KEY. Без ключа — ошибка использования."""
    value = key_hex or Config.MASTER_KEY_HEX
    if not value:
        raise UsageError("нужен мастер-ключ: передай --key или задай WM_MASTER_KEY")
    return MasterKey.from_hex(value)


# ====================== 2. МОДЕЛИ ======================
@contextmanager
def open_model(spec: str, timeout: Optional[float] = None) -> Iterator:
    """toy:… — игрушечная модель; provider:<команда> — внешний процесс на время блока."""
    if spec.startswith("toy:"):
        yield ToyModel.from_spec(spec)
        return
    if spec.startswith("provider:"):
        from provider_client import LogitProvider

        with LogitProvider(spec[len("provider:"):], timeout) as provider:
            yield provider
        return
    raise UsageError(f"модель должна быть toy:<preset> или provider:<команда>, получено {spec!r}")


# ====================== 3. JSONL ======================
def iter_records(source: Union[str, Path, IO, None]) -> Iterator[tuple[int, Union[dict, Exception]]]:
    """(номер строки, объект) или (номер строки, исключение) для битых строк."""
    if source is None or source == "-":
        yield from _iter_lines(sys.stdin)
        return
    if isinstance(source, (str, Path)):
        try:
            f = open(source, encoding="utf-8")
        except OSError as e:
            raise StorageError(f"не удалось открыть {source}: {e.strerror or e}") from None
        with f:
            yield from _iter_lines(f)
        return
    yield from _iter_lines(source)


def _iter_lines(stream: IO) -> Iterator[tuple[int, Union[dict, Exception]]]:
    for number, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            yield number, ConfigurationError(f"строка {number}: не JSON ({e.msg})")
            continue
        if not isinstance(record, dict):
            yield number, ConfigurationError(f"строка {number}: ожидался JSON-объект")
            continue
        yield number, record


@contextmanager
def open_output(path: str) -> Iterator[IO]:
    """Файл на запись; для "-" — stdout, который не закрывается."""
    if path == "-":
        yield sys.stdout
        return
    try:
        f = open(path, "w", encoding="utf-8")
    except OSError as e:
        raise StorageError(f"не удалось открыть {path} на запись: {e.strerror or e}") from None
    with f:
        yield f


def write_record(stream: IO, record: dict) -> None:
    stream.write(json.dumps(record, ensure_ascii=False) + "\n")
    stream.flush()


def sequence_record(seq: TokenSequence, params: SamplerParams, **extra) -> dict:
    record = {"tokens": list(seq.tokens), "prompt_len": seq.prompt_len, "params": params.to_dict()}
    record.update({k: v for k, v in extra.items() if v is not None})
    return record


def record_to_sequence(record: dict, vocab_size: int) -> TokenSequence:
    """tokens или text (байтовый режим) + prompt_len."""
    if "tokens" in record:
        tokens = record["tokens"]
        if not isinstance(tokens, list) or not all(isinstance(t, int) for t in tokens):
            raise ConfigurationError("поле tokens должно быть списком целых")
    elif "text" in record:
        tokens = text_to_tokens(record["text"], vocab_size)
    else:
        raise ConfigurationError("в записи нет ни tokens, ни text")
    prompt_len = record.get("prompt_len", 0)
    if not isinstance(prompt_len, int):
        raise ConfigurationError("prompt_len должно быть целым")
    return TokenSequence(tuple(tokens), vocab_size, prompt_len)


# ====================== 4. ТЕКСТОВЫЙ РЕЖИМ ======================
def text_to_tokens(text: str, vocab_size: int) -> list[int]:
    if vocab_size < BYTE_VOCAB:
        raise UsageError(f"текстовый режим требует |V| ≥ {BYTE_VOCAB}, у модели {vocab_size}")
    return list(text.encode("utf-8"))


def tokens_to_text(tokens: Sequence[int]) -> str:
    """Id ≥ 256 не являются байтами и пропускаются."""
    return bytes(t for t in tokens if t < BYTE_VOCAB).decode("utf-8", errors="replace")


# ====================== 5. ПРОМПТ ======================
def load_prompt(vocab_size: int, prompt_file: Optional[str] = None, prompt_text: Optional[str] = None) -> TokenSequence:
    """
    --prompt-file: JSON-список id или id через пробел; --prompt-text: байты UTF-8.
    Без обоих — пустой промпт.
    """
    if prompt_file and prompt_text:
        raise UsageError("укажи только один из --prompt-file и --prompt-text")
    if prompt_text is not None:
        tokens = text_to_tokens(prompt_text, vocab_size)
    elif prompt_file:
        try:
            raw = Path(prompt_file).read_text(encoding="utf-8").strip()
        except OSError as e:
            raise UsageError(f"не удалось прочитать промпт {prompt_file}: {e}") from None
        try:
            tokens = json.loads(raw) if raw.startswith("[") else [int(x) for x in raw.split()]
        except ValueError:
            raise UsageError(f"промпт {prompt_file}: ожидался JSON-список или id через пробел") from None
    else:
        tokens = []
    return TokenSequence(tuple(tokens), vocab_size, len(tokens))
