# =============================================
# handlers/detect.py — КОМАНДА detect
# =============================================
"""
Одна строка отчёта на каждую входную запись. Битая запись даёт строку
{"error": ..., "kind": ..., "record": n}, обработка продолжается, код выхода 0.
"""

import argparse
from contextlib import nullcontext
from typing import Callable, Optional

from config import Config
from detectors import detect
from errors import ModelAccessError, ProviderError, WatermarkError
from keying import MasterKey
from schemes import TestKind, WatermarkConfig
from utils import iter_records, open_model, open_output, record_to_sequence, resolve_key, write_record

from .options import add_detection_options, add_watermark_options, params_from_args

logger = Config.get_logger(__name__)


def record_vocab_size(args: argparse.Namespace, model, record: dict) -> int:
    if model is not None:
        return model.vocab_size
    if args.vocab_size:
        return args.vocab_size
    vocab = record.get("vocab_size")
    return vocab if isinstance(vocab, int) else Config.TOY_VOCAB_SIZE


def run_over_records(
    args: argparse.Namespace,
    handle: Callable[[dict, Optional[object], MasterKey], dict],
) -> int:
    """Общий цикл detect / identify: ключ, модель (если есть), запись за записью."""
    key = resolve_key(args.key)
    processed = failed = 0
    model_context = open_model(args.model) if args.model else nullcontext()
    with open_output(args.out) as out, model_context as model:
        for number, record in iter_records(args.input):
            processed += 1
            try:
                if isinstance(record, Exception):
                    raise record
                result = handle(record, model, key)
            except ProviderError:
                raise
            except WatermarkError as e:
                failed += 1
                logger.warning("запись %d: %s", number, e)
                result = e.to_dict()
            result["record"] = number
            write_record(out, result)
    logger.info("✅ обработано записей: %d, с ошибкой: %d", processed, failed)
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    if args.test == TestKind.NP.value and not args.model:
        raise ModelAccessError("тест np требует доступа к модели (вероятностям токенов): передай --model")

    def handle(record: dict, model, key: MasterKey) -> dict:
        params = params_from_args(args, record.get("params"))
        seq = record_to_sequence(record, record_vocab_size(args, model, record))
        config = WatermarkConfig(key, params, args.test, args.dedup)
        return detect(seq, key, config, model).to_dict()

    return run_over_records(args, handle)


def register(subparsers) -> None:
    parser = subparsers.add_parser("detect", help="проверить тексты на водяной знак")
    add_watermark_options(parser, with_defaults=False)
    add_detection_options(parser)
    parser.set_defaults(handler=cmd_detect)
