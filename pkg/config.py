# =============================================
# config.py — ЦЕНТРАЛЬНЫЙ ФАЙЛ НАСТРОЕК ПРОЕКТА
# =============================================
"""
Настройки watermark toolkit: мастер-ключ, пути, таймауты провайдера,
параметры игрушечной модели и значения водяного знака по умолчанию.

Использование:
    from config import Config

    logger = Config.get_logger(__name__)
    Config.create_dirs()

Все настройки — атрибуты класса, читаются из окружения (и .env, если он есть).
"""

import os
import logging
import sys
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# ====================== ЗАГРУЗКА .env ======================
load_dotenv()


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ("true", "1", "yes")


# ====================== ОСНОВНОЙ КЛАСС КОНФИГУРАЦИИ ======================
class Config:
    """
    Центральный класс всех настроек.

    Мастер-ключ на импорте не обязателен: его требуют только команды,
    которым он нужен (generate / detect / identify без флага --key).
    """

    # ====================== КЛЮЧ ======================
    # 64 hex-символа = 32 байта. Никогда не коммить в git!
    MASTER_KEY_HEX: Optional[str] = os.getenv("WM_MASTER_KEY")

    # ====================== ЛОГИ ======================
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()
    DEBUG: bool = _env_bool("DEBUG", "False")
    LOG_FORMAT: str = "%(asctime)s | %(levelname)-8s | %(name)-20s | %(message)s"

    # ====================== ПУТИ ======================
    BASE_DIR: Path = Path(__file__).parent.resolve()
    LOGS_DIR: Path = Path(os.getenv("LOGS_DIR", str(BASE_DIR / "logs")))
    RESULTS_DIR: Path = Path(os.getenv("RESULTS_DIR", str(BASE_DIR / "results")))

    # ====================== ВНЕШНИЙ ПРОВАЙДЕР ЛОГИТОВ ======================
    PROVIDER_TIMEOUT: float = float(os.getenv("PROVIDER_TIMEOUT", "30"))
    PROVIDER_PROTOCOL_VERSION: int = 1

    # ====================== ХАРНЕСС ======================
    # 1 = всё в текущем процессе
    HARNESS_WORKERS: int = int(os.getenv("HARNESS_WORKERS", "1"))

    # ====================== ИГРУШЕЧНАЯ МОДЕЛЬ ======================
    TOY_MODEL_SEED: int = int(os.getenv("TOY_MODEL_SEED", "1234"))
    TOY_VOCAB_SIZE: int = int(os.getenv("TOY_VOCAB_SIZE", "64"))
    TOY_ORDER: int = int(os.getenv("TOY_ORDER", "1"))

    # ====================== ВОДЯНОЙ ЗНАК ПО УМОЛЧАНИЮ ======================
    DEFAULT_SCHEME: str = os.getenv("DEFAULT_SCHEME", "exponential")
    DEFAULT_H: int = int(os.getenv("DEFAULT_H", "1"))
    DEFAULT_GAMMA: float = float(os.getenv("DEFAULT_GAMMA", "0.25"))
    DEFAULT_DELTA: float = float(os.getenv("DEFAULT_DELTA", "2.0"))
    DEFAULT_THETA: float = float(os.getenv("DEFAULT_THETA", "1.0"))
    DEFAULT_TOP_P: float = float(os.getenv("DEFAULT_TOP_P", "1.0"))

    # ====================== MATPLOTLIB (графики калибровки) ======================
    PLOT_DPI: int = int(os.getenv("PLOT_DPI", "150"))
    PLOT_FACE_COLOR: str = os.getenv("PLOT_FACE_COLOR", "#0f0f0f")
    PLOT_TEXT_COLOR: str = os.getenv("PLOT_TEXT_COLOR", "#ffffff")
    PLOT_TITLE_COLOR: str = os.getenv("PLOT_TITLE_COLOR", "#FF6B6B")
    PLOT_GRID_ALPHA: float = 0.3

    # ====================== МЕТОДЫ ======================
    @classmethod
    def create_dirs(cls) -> None:
        """Создаёт logs/ и results/, если их ещё нет."""
        cls.LOGS_DIR.mkdir(parents=True, exist_ok=True)
        cls.RESULTS_DIR.mkdir(parents=True, exist_ok=True)

    @classmethod
    def get_logger(cls, name: str = __name__) -> logging.Logger:
        """
        Логгер с уровнем из настроек.
        Используй во всех файлах: logger = Config.get_logger(__name__)
        """
        logger = logging.getLogger(name)
        logger.setLevel(cls.LOG_LEVEL)
        return logger

    @classmethod
    def setup_logging(cls, log_file: str = "watermark.log") -> None:
        """Консоль (stderr, чтобы не мешать JSONL в stdout) + файл в logs/."""
        cls.create_dirs()
        logging.basicConfig(
            level=cls.LOG_LEVEL,
            format=cls.LOG_FORMAT,
            handlers=[
                logging.StreamHandler(sys.stderr),
                logging.FileHandler(cls.LOGS_DIR / log_file, encoding="utf-8", mode="a"),
            ],
            force=True,
        )

    @classmethod
    def print_config_summary(cls) -> None:
        """Сводка настроек в stderr (только в DEBUG-режиме)."""
        if not cls.DEBUG:
            return
        lines = [
            "=" * 60,
            "WATERMARK TOOLKIT — КОНФИГУРАЦИЯ ЗАГРУЖЕНА",
            "=" * 60,
            f"WM_MASTER_KEY:    {'✅ УКАЗАН' if cls.MASTER_KEY_HEX else '— не задан'}",
            f"LOG_LEVEL:        {cls.LOG_LEVEL}",
            f"RESULTS_DIR:      {cls.RESULTS_DIR}",
            f"PROVIDER_TIMEOUT: {cls.PROVIDER_TIMEOUT} c",
            f"HARNESS_WORKERS:  {cls.HARNESS_WORKERS}",
            f"TOY MODEL:        |V|={cls.TOY_VOCAB_SIZE}, k={cls.TOY_ORDER}, seed={cls.TOY_MODEL_SEED}",
            "=" * 60,
        ]
        print("\n".join(lines), file=sys.stderr)
