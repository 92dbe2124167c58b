# =============================================
# handlers/experiment.py — КОМАНДА experiment
# =============================================
"""
Прогон эксперимента харнесса по JSON-спецификации:

    python main.py experiment --spec experiments/calibration.json --workers 4 --plot

На stdout — JSON с путями к results.jsonl, summary.csv, curves.dat и plot.png.
"""

import argparse
import json
from dataclasses import replace

from config import Config
from harness import ExperimentSpec, run_experiment
from results import ResultStore

logger = Config.get_logger(__name__)


def cmd_experiment(args: argparse.Namespace) -> int:
    spec = ExperimentSpec.from_json(args.spec)
    overrides = {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides["output"] = args.out
    if args.plot:
        overrides["plot"] = True
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        spec = replace(spec, **overrides)

    result = run_experiment(spec)
    paths = ResultStore().save_experiment(result)
    print(json.dumps({"experiment": spec.experiment, "rows": len(result.items), "paths": paths}, ensure_ascii=False))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("experiment", help="прогнать эксперимент харнесса")
    parser.add_argument("--spec", required=True, help="JSON-файл со спецификацией эксперимента")
    parser.add_argument("--workers", type=int, help="число процессов (иначе из спецификации или HARNESS_WORKERS)")
    parser.add_argument("--out", help="каталог результатов (иначе RESULTS_DIR/<эксперимент>-seed<сид>)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--plot", action="store_true", help="сохранить PNG-график")
    parser.set_defaults(handler=cmd_experiment)
