# =============================================
# handlers/generate.py — КОМАНДЫ generate И keygen
# =============================================
"""
generate: токены с водяным знаком (или без, --scheme vanilla) в JSONL.
Каждая запись: {"tokens": [...], "prompt_len": n, "params": {...}, "vocab_size": |V|, ...}

keygen: новый случайный мастер-ключ в hex.
"""

import argparse

from config import Config
from errors import UsageError
from keying import MasterKey, Xoshiro256StarStar, split_seed
from multibit import generate_multibit
from samplers import TokenSequence, generate
from schemes import Scheme
from utils import load_prompt, open_model, open_output, resolve_key, sequence_record, tokens_to_text, write_record

from .options import add_watermark_options, params_from_args

logger = Config.get_logger(__name__)


def record_seed(base_seed: int, index: int) -> int:
    return split_seed(base_seed, "generate", index)


def record_prompt(base: TokenSequence, length: int, base_seed: int, index: int) -> TokenSequence:
    """Промпт записи: заданный промпт плюс length случайных токенов из сида записи."""
    if length == 0:
        return base
    rng = Xoshiro256StarStar.from_seed(split_seed(base_seed, "prompt", index))
    extra = tuple(int(rng.next_unit() * base.vocab_size) for _ in range(length))
    tokens = base.tokens + extra
    return TokenSequence(tokens, base.vocab_size, len(tokens))


def cmd_generate(args: argparse.Namespace) -> int:
    if args.message is not None and args.num_messages is None:
        raise UsageError("--message требует --num-messages")
    if args.num_messages is not None:
        if args.num_messages < 1:
            raise UsageError("--num-messages должно быть ≥ 1")
        message = args.message or 0
        if not 0 <= message < args.num_messages:
            raise UsageError(f"--message {message} вне [0, {args.num_messages})")
    if args.length < 1 or args.count < 1 or args.random_prompt < 0:
        raise UsageError("--length и --count должны быть ≥ 1, --random-prompt ≥ 0")

    params = params_from_args(args)
    key = resolve_key(args.key) if params.scheme is not Scheme.VANILLA else None
    if args.num_messages is not None and params.scheme is Scheme.VANILLA:
        raise UsageError("многобитный режим требует схему greenlist или exponential")
    if params.scheme is Scheme.EXPONENTIAL and args.count > 1 and args.random_prompt == 0:
        logger.warning(
            "exponential при общем промпте детерминирован: все %d записей совпадут, см. --random-prompt", args.count
        )

    with open_output(args.out) as out, open_model(args.model) as model:
        base_prompt = load_prompt(model.vocab_size, args.prompt_file, args.prompt_text)
        logger.info(
            "генерирую %d × %d токенов (%s, модель %s)", args.count, args.length, params.scheme.value, args.model
        )
        for index in range(args.count):
            seed = record_seed(args.seed, index)
            prompt = record_prompt(base_prompt, args.random_prompt, args.seed, index)
            if args.num_messages is not None:
                seq = generate_multibit(
                    model, params, key, prompt, args.length, args.message or 0, args.num_messages, seed
                )
            else:
                seq = generate(model, params, key, prompt, args.length, seed)
            record = sequence_record(
                seq,
                params,
                vocab_size=seq.vocab_size,
                seed=args.seed,
                index=index,
                message=args.message if args.num_messages is not None else None,
                num_messages=args.num_messages,
                text=tokens_to_text(seq.generated) if args.prompt_text is not None else None,
            )
            write_record(out, record)
    logger.info("✅ generate завершён")
    return 0


def cmd_keygen(args: argparse.Namespace) -> int:
    print(MasterKey.generate().hex())
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("generate", help="сгенерировать текст с водяным знаком")
    add_watermark_options(parser, with_defaults=True)
    parser.add_argument("--model", default="toy:medium", help="toy:<preset>[:<|V|>[:<k>]] или provider:<команда>")
    parser.add_argument("--length", type=int, default=64, help="число генерируемых токенов")
    parser.add_argument("--count", type=int, default=1, help="число записей")
    parser.add_argument("--seed", type=int, default=0, help="сид потока сэмплинга")
    parser.add_argument("--message", type=int, help="встраиваемое сообщение m")
    parser.add_argument("--num-messages", dest="num_messages", type=int, help="число сообщений M")
    parser.add_argument("--prompt-file", dest="prompt_file")
    parser.add_argument("--prompt-text", dest="prompt_text", help="текстовый промпт (байты UTF-8, нужен |V| ≥ 256)")
    parser.add_argument(
        "--random-prompt", dest="random_prompt", type=int, default=0, metavar="N",
        help="дописать к промпту N случайных токенов (свои для каждой записи, из --seed)",
    )
    parser.add_argument("--out", default="-", help="выходной JSONL (по умолчанию stdout)")
    parser.set_defaults(handler=cmd_generate)

    keygen = subparsers.add_parser("keygen", help="новый мастер-ключ")
    keygen.set_defaults(handler=cmd_keygen)
