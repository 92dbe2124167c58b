# =============================================
# results.py — ХРАНИЛИЩЕ РЕЗУЛЬТАТОВ ЭКСПЕРИМЕНТОВ
# =============================================
"""
Куда и в каком виде пишутся результаты харнесса:

    <run_dir>/spec.json       — спецификация, по которой всё воспроизводится
    <run_dir>/results.jsonl   — одна строка на ячейку (кривую, ячейку сетки, пресет)
    <run_dir>/summary.csv     — та же таблица плоско (pandas)
    <run_dir>/curves.dat      — кривые калибровки для gnuplot (только fpr_calibration)
    <run_dir>/plot.png        — график (если spec.plot)

Использование:
    paths = ResultStore().save_experiment(result)
"""

import json
from pathlib import Path
from typing import Iterable, Optional

import pandas as pd

from config import Config
from errors import StorageError
from harness import CalibrationCurve, ExperimentResult

logger = Config.get_logger(__name__)


class ResultStore:
    def __init__(self, base_dir: Optional[Path] = None):
        self.base_dir: Path = Path(base_dir) if base_dir else Config.RESULTS_DIR

    def run_dir(self, result: ExperimentResult) -> Path:
        spec = result.spec
        path = Path(spec.output) if spec.output else self.base_dir / f"{spec.experiment}-seed{spec.seed}"
        path.mkdir(parents=True, exist_ok=True)
        return path

    # ====================== ФОРМАТЫ ======================
    @staticmethod
    def write_jsonl(path: Path, rows: Iterable[dict]) -> Path:
        with open(path, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row, ensure_ascii=False) + "\n")
        return path

    @staticmethod
    def read_jsonl(path: Path) -> list[dict]:
        with open(path, encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]

    @staticmethod
    def to_frame(rows: list[dict]) -> pd.DataFrame:
        """Списки (пороги, интервалы) разворачиваются в отдельные колонки."""
        flat = []
        for row in rows:
            out = {}
            for key, value in row.items():
                if isinstance(value, list):
                    for i, item in enumerate(value):
                        out[f"{key}_{i}"] = item
                else:
                    out[key] = value
            flat.append(out)
        return pd.DataFrame(flat)

    @staticmethod
    def write_gnuplot(path: Path, curves: list[CalibrationCurve]) -> Path:
        """Блоки через две пустые строки (index в gnuplot), по блоку на кривую."""
        with open(path, "w", encoding="utf-8") as f:
            for curve in curves:
                f.write(f"# {curve.source} {curve.scheme} {curve.test} h={curve.h} dedup={curve.dedup} n={curve.trials}\n")
                f.write("# target empirical ci_low ci_high\n")
                for row in zip(curve.thresholds, curve.empirical, curve.ci_low, curve.ci_high):
                    f.write(" ".join(f"{v:.6e}" for v in row) + "\n")
                f.write("\n\n")
        return path

    # ====================== СОХРАНЕНИЕ ЭКСПЕРИМЕНТА ======================
    def save_experiment(self, result: ExperimentResult) -> dict[str, str]:
        try:
            return self._save(result)
        except OSError as e:
            raise StorageError(f"не удалось сохранить результаты {result.experiment}: {e}") from e

    def _save(self, result: ExperimentResult) -> dict[str, str]:
        run_dir = self.run_dir(result)
        rows = result.rows()
        paths = {
            "spec": run_dir / "spec.json",
            "jsonl": run_dir / "results.jsonl",
            "csv": run_dir / "summary.csv",
        }
        paths["spec"].write_text(json.dumps(result.spec.to_dict(), indent=2, ensure_ascii=False), encoding="utf-8")
        self.write_jsonl(paths["jsonl"], rows)
        self.to_frame(rows).to_csv(paths["csv"], index=False)

        if result.experiment == "fpr_calibration":
            paths["dat"] = self.write_gnuplot(run_dir / "curves.dat", result.items)

        if result.spec.plot:
            from plots import PlotGenerator

            paths["png"] = PlotGenerator.save(result, run_dir / "plot.png")

        logger.info(f"✅ Результаты {result.experiment} сохранены в {run_dir}")
        return {name: str(path) for name, path in paths.items()}
