# =============================================
# provider_client.py — КЛИЕНТ ВНЕШНЕГО ПОСТАВЩИКА ЛОГИТОВ
# =============================================
"""
Внешний процесс отдаёт логиты следующего токена по строковому JSON-протоколу
через stdin/stdout. Строгое чередование запрос/ответ, один объект на строку.

    провайдер → {"v":1,"vocab_size":n}                 (рукопожатие, первой строкой)
    клиент    → {"v":1,"context":[id, ...]}
    провайдер → {"v":1,"logits":[l0, ..., l(n-1)]}

Таймаут, битый JSON, неверная длина, отсутствие рукопожатия или смерть процесса —
ProviderError, генерация прерывается.

Использование:
    with LogitProvider("python echo_provider.py --vocab-size 64") as provider:
        seq = generate(provider, params, key, prompt, 32)
"""

import json
import queue
import shlex
import subprocess
import threading
from typing import Optional, Sequence

import numpy as np

from config import Config
from errors import ProviderError
from samplers import LogitVector

logger = Config.get_logger(__name__)

_EOF = object()


class LogitProvider:
    """Дескриптор процесса-провайдера. vocab_size известен после рукопожатия."""

    def __init__(self, command: str, timeout: Optional[float] = None):
        self.command = command
        self.timeout = Config.PROVIDER_TIMEOUT if timeout is None else timeout
        self.version = Config.PROVIDER_PROTOCOL_VERSION
        self.vocab_size: int = 0
        self._proc: Optional[subprocess.Popen] = None
        self._lines: "queue.Queue" = queue.Queue()
        self._reader: Optional[threading.Thread] = None

    # ====================== ЖИЗНЕННЫЙ ЦИКЛ ======================
    def start(self) -> "LogitProvider":
        argv = shlex.split(self.command)
        if not argv:
            raise ProviderError("пустая команда провайдера")
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as e:
            raise ProviderError(f"не удалось запустить провайдер {argv[0]!r}: {e}") from None
        self._reader = threading.Thread(target=self._read_loop, name="provider-reader", daemon=True)
        self._reader.start()
        self._handshake()
        logger.info(f"✅ Провайдер запущен: {self.command} (|V|={self.vocab_size})")
        return self

    def _read_loop(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def close(self) -> None:
        if self._proc is None:
            return
        try:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait(timeout=2)
        except (OSError, subprocess.TimeoutExpired):
            self._proc.kill()
            self._proc.wait()
        logger.info("🛑 Провайдер остановлен")
        self._proc = None

    def __enter__(self) -> "LogitProvider":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.close()

    # ====================== ПРОТОКОЛ ======================
    def _read_message(self, what: str) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise ProviderError(f"провайдер не ответил за {self.timeout:g} с ({what})") from None
        if line is _EOF:
            raise ProviderError(f"провайдер завершился, не прислав {what}")
        try:
            message = json.loads(line)
        except json.JSONDecodeError as e:
            raise ProviderError(f"битый JSON от провайдера ({what}): {e}") from None
        if not isinstance(message, dict):
            raise ProviderError(f"провайдер прислал не JSON-объект ({what})")
        if message.get("v") != self.version:
            raise ProviderError(f"версия протокола {message.get('v')!r}, ожидалась {self.version}")
        if "error" in message:
            raise ProviderError(f"провайдер сообщил об ошибке: {message['error']}")
        return message

    def _handshake(self) -> None:
        message = self._read_message("рукопожатие")
        vocab = message.get("vocab_size")
        if "logits" in message or not isinstance(vocab, int) or vocab < 2:
            raise ProviderError("первая строка провайдера должна быть рукопожатием {\"v\":1,\"vocab_size\":n}")
        self.vocab_size = vocab

    def _send(self, payload: dict) -> None:
        if self._proc is None:
            raise ProviderError("провайдер не запущен")
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise ProviderError(f"не удалось отправить запрос провайдеру: {e}") from None

    def next_distribution(self, context: Sequence[int]) -> LogitVector:
        self._send({"v": self.version, "context": [int(t) for t in context]})
        message = self._read_message("логиты")
        logits = message.get("logits")
        if not isinstance(logits, list):
            raise ProviderError("в ответе провайдера нет списка logits")
        if len(logits) != self.vocab_size:
            raise ProviderError(f"провайдер вернул {len(logits)} логитов, объявлено |V|={self.vocab_size}")
        try:
            values = np.array([-np.inf if v is None else float(v) for v in logits], dtype=np.float64)
        except (TypeError, ValueError):
            raise ProviderError("логиты провайдера должны быть числами") from None
        if np.isnan(values).any() or np.isposinf(values).any():
            raise ProviderError("провайдер вернул NaN или +inf среди логитов")
        return LogitVector(values)


def logit_provider_roundtrip(handle: LogitProvider, context: Sequence[int]) -> LogitVector:
    return handle.next_distribution(context)
