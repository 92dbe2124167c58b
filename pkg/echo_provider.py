# =============================================
# echo_provider.py — ЭТАЛОННЫЙ ПРОВАЙДЕР ЛОГИТОВ
# =============================================
"""
Отвечает равномерными логитами на каждый запрос. Флаги ломают протокол
нарочно, чтобы проверять обработку ошибок клиента.

    python echo_provider.py --vocab-size 64
    python echo_provider.py --vocab-size 64 --bad-length
    python echo_provider.py --vocab-size 64 --nan
"""

import argparse
import json
import sys
import time


def main() -> int:
    parser = argparse.ArgumentParser(description="Провайдер равномерных логитов")
    parser.add_argument("--vocab-size", type=int, default=64)
    parser.add_argument("--bad-length", action="store_true", help="отвечать вектором длины |V|-1")
    parser.add_argument("--no-handshake", action="store_true", help="не присылать рукопожатие")
    parser.add_argument("--delay", type=float, default=0.0, help="пауза перед каждым ответом, с")
    parser.add_argument("--nan", action="store_true", help="первый логит — NaN")
    args = parser.parse_args()

    if not args.no_handshake:
        print(json.dumps({"v": 1, "vocab_size": args.vocab_size}), flush=True)
    length = args.vocab_size - 1 if args.bad_length else args.vocab_size
    for line in sys.stdin:
        if not line.strip():
            continue
        request = json.loads(line)
        if request.get("v") != 1:
            print(json.dumps({"v": 1, "error": "неизвестная версия протокола"}), flush=True)
            continue
        if args.delay:
            time.sleep(args.delay)
        logits = [0.0] * length
        if args.nan:
            logits[0] = float("nan")
        print(json.dumps({"v": 1, "logits": logits}), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
