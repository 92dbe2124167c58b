# =============================================
# handlers/options.py — ОБЩИЕ ФЛАГИ КОМАНД
# =============================================
"""
Флаги водяного знака, общие для generate / detect / identify, и сборка
SamplerParams из флагов поверх параметров, записанных в JSONL-записи.
"""

import argparse
from typing import Optional

from config import Config
from errors import ConfigurationError, UsageError
from schemes import DedupRule, Decoding, SamplerParams, Scheme, TestKind

PARAM_FLAGS = ("scheme", "delta", "gamma", "h", "theta", "top_p", "decoding")


class UsageArgumentParser(argparse.ArgumentParser):
    """argparse, который не выходит сам, а бросает UsageError (код выхода 1)."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def add_watermark_options(parser: argparse.ArgumentParser, with_defaults: bool) -> None:
    """with_defaults=False — флаги не заданы, пока их не передали (detect берёт их из записи)."""
    def default(value):
        return value if with_defaults else None

    group = parser.add_argument_group("водяной знак")
    group.add_argument("--scheme", choices=Scheme.list_all(), default=default(Config.DEFAULT_SCHEME))
    group.add_argument("--key", help="мастер-ключ, 64 hex-символа (иначе WM_MASTER_KEY)")
    group.add_argument("--h", type=int, default=default(Config.DEFAULT_H), help="ширина окна контекста")
    group.add_argument("--gamma", type=float, default=default(Config.DEFAULT_GAMMA), help="доля зелёного списка")
    group.add_argument("--delta", type=float, default=default(Config.DEFAULT_DELTA), help="сдвиг логитов")
    group.add_argument("--theta", type=float, default=default(Config.DEFAULT_THETA), help="температура")
    group.add_argument("--top-p", dest="top_p", type=float, default=default(Config.DEFAULT_TOP_P))
    group.add_argument("--decoding", choices=Decoding.list_all(), default=default(Decoding.SAMPLE.value))


def add_detection_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--in", dest="input", default="-", help="входной JSONL (по умолчанию stdin)")
    parser.add_argument("--out", default="-", help="выходной JSONL (по умолчанию stdout)")
    parser.add_argument("--test", choices=TestKind.list_all())
    parser.add_argument("--dedup", choices=DedupRule.list_all(), default=DedupRule.TUPLE.value)
    parser.add_argument("--model", help="нужна для теста np: toy:<preset> или provider:<команда>")
    parser.add_argument("--vocab-size", dest="vocab_size", type=int, help="|V|, если его нет ни в модели, ни в записи")


def params_from_args(args: argparse.Namespace, record_params: Optional[dict] = None) -> SamplerParams:
    """Флаги важнее записанных в запись параметров, записанные — важнее значений по умолчанию."""
    values = {}
    if record_params:
        if not isinstance(record_params, dict):
            raise ConfigurationError("поле params должно быть объектом")
        values.update({k: v for k, v in record_params.items() if k in PARAM_FLAGS})
    for name in PARAM_FLAGS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    try:
        return SamplerParams.defaults(**values)
    except TypeError as e:
        raise ConfigurationError(f"параметры водяного знака: {e}") from None
