# =============================================
# handlers/__init__.py — РЕГИСТРАЦИЯ ВСЕХ КОМАНД
# =============================================
"""
Каждый модуль пакета добавляет свою подкоманду в argparse.
В main.py одна строка: register_all_handlers(subparsers)
"""

from config import Config

logger = Config.get_logger(__name__)


def register_all_handlers(subparsers) -> None:
    # импорт внутри функции, чтобы избежать циклических импортов
    from . import detect, experiment, generate, identify

    generate.register(subparsers)
    detect.register(subparsers)
    identify.register(subparsers)
    experiment.register(subparsers)
    logger.debug("команды зарегистрированы: generate, keygen, detect, identify, experiment")
