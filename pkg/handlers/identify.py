# =============================================
# handlers/identify.py — КОМАНДА identify
# =============================================
"""
Декодирование сообщения из M возможных: лучший m, p-value по сообщениям
и глобальный p-value 1 − (1 − p_m)^M.
"""

import argparse

from config import Config
from errors import UsageError
from keying import MasterKey
from multibit import identify
from utils import record_to_sequence

from .detect import record_vocab_size, run_over_records
from .options import add_detection_options, add_watermark_options, params_from_args

logger = Config.get_logger(__name__)


def cmd_identify(args: argparse.Namespace) -> int:
    if args.num_messages < 1:
        raise UsageError("--num-messages должно быть ≥ 1")
    if not 0.0 < args.fpr <= 1.0:
        raise UsageError("--fpr должен лежать в (0, 1]")

    def handle(record: dict, model, key: MasterKey) -> dict:
        params = params_from_args(args, record.get("params"))
        seq = record_to_sequence(record, record_vocab_size(args, model, record))
        report = identify(seq, key, params, args.num_messages, args.fpr, args.dedup, args.test)
        return report.to_dict()

    return run_over_records(args, handle)


def register(subparsers) -> None:
    parser = subparsers.add_parser("identify", help="определить встроенное сообщение")
    add_watermark_options(parser, with_defaults=False)
    add_detection_options(parser)
    parser.add_argument("--num-messages", dest="num_messages", type=int, required=True, help="число сообщений M")
    parser.add_argument("--fpr", type=float, default=1e-3, help="целевой глобальный FPR")
    parser.set_defaults(handler=cmd_identify)
