# =============================================
# main.py — ТОЧКА ВХОДА КОМАНДНОЙ СТРОКИ
# =============================================
"""
    python main.py generate   --scheme exponential --model toy:medium --length 256 --seed 1
    python main.py detect     --in texts.jsonl --test gamma --dedup tuple
    python main.py identify   --in texts.jsonl --num-messages 16 --fpr 1e-3
    python main.py experiment --spec experiments/calibration.json
    python main.py keygen

Коды выхода: 0 — ок, 1 — неверное использование, 2 — плохие данные, 3 — провайдер.
Ошибка команды печатается в stderr JSON-объектом {"error": ..., "kind": ...}.
"""

import json
import sys
from typing import Optional, Sequence

from config import Config
from errors import EXIT_OK, EXIT_USAGE, WatermarkError
from handlers import register_all_handlers
from handlers.options import UsageArgumentParser

logger = Config.get_logger(__name__)


def build_parser() -> UsageArgumentParser:
    parser = UsageArgumentParser(prog="watermark", description="Водяные знаки для языковых моделей")
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_all_handlers(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    Config.setup_logging()
    Config.print_config_summary()
    try:
        args = build_parser().parse_args(argv)
        logger.info("команда %s", args.command)
        return args.handler(args)
    except WatermarkError as e:
        logger.error("❌ %s: %s", e.kind, e)
        print(json.dumps(e.to_dict(), ensure_ascii=False), file=sys.stderr)
        return e.exit_code
    except SystemExit as e:
        # --help
        return EXIT_OK if not e.code else EXIT_USAGE
    except KeyboardInterrupt:
        logger.warning("остановка по Ctrl+C")
        return 130


if __name__ == "__main__":
    sys.exit(main())
