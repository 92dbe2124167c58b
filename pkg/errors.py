# =============================================
# errors.py — ВИДЫ ОШИБОК И КОДЫ ВЫХОДА
# =============================================
"""
Все исключения проекта. У каждого есть kind (попадает в JSON-объект ошибки)
и exit_code, который main.py отдаёт в sys.exit:

    0 — ок, 1 — неверное использование, 2 — плохие данные, 3 — провайдер
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PROVIDER = 3


class WatermarkError(Exception):
    """Базовая ошибка toolkit."""

    kind: str = "error"
    exit_code: int = EXIT_DATA

    def to_dict(self) -> dict:
        return {"error": str(self), "kind": self.kind}


# ====================== 1. КОНФИГУРАЦИЯ И ФЛАГИ ======================
class ConfigurationError(WatermarkError, ValueError):
    kind = "configuration"
    exit_code = EXIT_USAGE


class UsageError(WatermarkError, ValueError):
    kind = "usage"
    exit_code = EXIT_USAGE


class ModelAccessError(WatermarkError, ValueError):
    """Тест требует доступа к модели (вероятности токенов), а её не дали."""

    kind = "model_access"
    exit_code = EXIT_USAGE


# ====================== 2. ДАННЫЕ ======================
class DomainError(WatermarkError, ValueError):
    kind = "domain"


class DegenerateInputError(WatermarkError, ValueError):
    kind = "degenerate_input"


class InsufficientDataError(WatermarkError, ValueError):
    kind = "insufficient_data"


class ModelInconsistencyError(WatermarkError, ValueError):
    kind = "model_inconsistency"


# ====================== 3. ВНЕШНИЙ ПРОВАЙДЕР ======================
class ProviderError(WatermarkError, RuntimeError):
    kind = "provider"
    exit_code = EXIT_PROVIDER


# ====================== 4. ФАЙЛЫ ======================
class StorageError(WatermarkError, OSError):
    """Входной файл не читается или выходной не пишется."""

    kind = "storage"
    exit_code = EXIT_USAGE
