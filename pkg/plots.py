# =============================================
# plots.py — ГРАФИКИ РЕЗУЛЬТАТОВ ЭКСПЕРИМЕНТОВ
# =============================================
"""
Тёмная тема, подпись прогона в правом нижнем углу, PNG в BytesIO или на диск.

    fpr_calibration — эмпирический FPR против целевого (лог-лог) с интервалами
    robustness      — TPR до и после атаки по сетке силы водяного знака
    identification  — точность идентификации от M для каждого FPR
    h1_bounds       — среднее скора против границы и точного ожидания
"""

from io import BytesIO
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from config import Config  # noqa: E402
from harness import ExperimentResult  # noqa: E402

logger = Config.get_logger(__name__)

AXES_COLOR = "#1a1a1a"


class PlotGenerator:
    """Все методы статические."""

    COLORS = ["#FF6B6B", "#4ECDC4", "#FFD166", "#06D6A0", "#45B7D1", "#C77DFF"]

    @staticmethod
    def _add_watermark(ax: plt.Axes, text: str) -> None:
        ax.text(
            0.98, 0.02, text,
            transform=ax.transAxes,
            fontsize=10,
            color="white",
            alpha=0.25,
            ha="right",
            va="bottom",
        )

    @staticmethod
    def _style(fig: plt.Figure, ax: plt.Axes, title: str, xlabel: str, ylabel: str) -> None:
        fig.patch.set_facecolor(Config.PLOT_FACE_COLOR)
        ax.set_facecolor(AXES_COLOR)
        ax.set_title(title, color=Config.PLOT_TITLE_COLOR, fontsize=16, pad=15)
        ax.set_xlabel(xlabel, color=Config.PLOT_TEXT_COLOR)
        ax.set_ylabel(ylabel, color=Config.PLOT_TEXT_COLOR)
        ax.tick_params(colors=Config.PLOT_TEXT_COLOR)
        ax.grid(alpha=Config.PLOT_GRID_ALPHA)
        for side in ("bottom", "left"):
            ax.spines[side].set_color("white")
        for side in ("top", "right"):
            ax.spines[side].set_visible(False)

    @staticmethod
    def _finish(fig: plt.Figure) -> BytesIO:
        buf = BytesIO()
        plt.tight_layout()
        fig.savefig(buf, format="png", dpi=Config.PLOT_DPI, facecolor=fig.get_facecolor())
        buf.seek(0)
        plt.close(fig)
        return buf

    # ====================== 1. КАЛИБРОВКА ======================
    @staticmethod
    def calibration(result: ExperimentResult) -> BytesIO:
        fig, ax = plt.subplots(figsize=(10, 8))
        PlotGenerator._style(fig, ax, "Эмпирический FPR при H0", "целевой FPR", "эмпирический FPR")
        targets = np.array(result.spec.fpr_targets)
        ax.plot(targets, targets, "--", color="white", alpha=0.6, label="идеал")
        for i, curve in enumerate(result.items):
            emp = np.array(curve.empirical)
            # нулевые доли на лог-шкале рисуем на нижней границе интервала
            emp_plot = np.where(emp > 0, emp, np.array(curve.ci_high) / 10)
            low = np.maximum(np.array(curve.ci_low), emp_plot / 10)
            yerr = np.clip([emp_plot - low, np.array(curve.ci_high) - emp_plot], 0, None)
            ax.errorbar(
                curve.thresholds, emp_plot, yerr=yerr, marker="o", capsize=3,
                color=PlotGenerator.COLORS[i % len(PlotGenerator.COLORS)],
                label=f"{curve.source}/{curve.test} h={curve.h} {curve.dedup}",
            )
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.legend(fontsize=8, facecolor=AXES_COLOR, labelcolor=Config.PLOT_TEXT_COLOR)
        PlotGenerator._add_watermark(ax, f"seed={result.spec.seed}")
        return PlotGenerator._finish(fig)

    # ====================== 2. РОБАСТНОСТЬ ======================
    @staticmethod
    def robustness(result: ExperimentResult) -> BytesIO:
        df = pd.DataFrame([item.to_dict() for item in result.items])
        fig, ax = plt.subplots(figsize=(12, 7))
        PlotGenerator._style(
            fig, ax, f"TPR при p < {result.spec.fpr_threshold:g}", "ячейка (схема, сила, h)", "TPR"
        )
        labels = [f"{r.scheme}\n{r.knob}={r.value:g}\nh={r.h}" for r in df.itertuples()]
        x = np.arange(len(df))
        ax.bar(x - 0.2, df["tpr"], width=0.4, color=PlotGenerator.COLORS[1], label="чистый текст")
        ax.bar(x + 0.2, df["tpr_attacked"], width=0.4, color=PlotGenerator.COLORS[0],
               label=f"после замены p={result.spec.attack_probability:g}")
        ax.set_xticks(x)
        ax.set_xticklabels(labels, color=Config.PLOT_TEXT_COLOR, fontsize=9)
        ax.set_ylim(0, 1.05)
        ax.legend(facecolor=AXES_COLOR, labelcolor=Config.PLOT_TEXT_COLOR)
        PlotGenerator._add_watermark(ax, f"seed={result.spec.seed}")
        return PlotGenerator._finish(fig)

    # ====================== 3. ИДЕНТИФИКАЦИЯ ======================
    @staticmethod
    def identification(result: ExperimentResult) -> BytesIO:
        df = pd.DataFrame([item.to_dict() for item in result.items])
        fig, ax = plt.subplots(figsize=(10, 7))
        PlotGenerator._style(fig, ax, "Точность идентификации", "M (число сообщений)", "точность")
        for i, ((scheme, fpr), group) in enumerate(df.groupby(["scheme", "fpr_target"])):
            group = group.sort_values("num_messages")
            ax.plot(group["num_messages"], group["accuracy"], marker="o",
                    color=PlotGenerator.COLORS[i % len(PlotGenerator.COLORS)], label=f"{scheme}, FPR={fpr:g}")
        ax.set_xscale("log", base=2)
        ax.set_ylim(0, 1.05)
        ax.legend(facecolor=AXES_COLOR, labelcolor=Config.PLOT_TEXT_COLOR)
        PlotGenerator._add_watermark(ax, f"seed={result.spec.seed}")
        return PlotGenerator._finish(fig)

    # ====================== 4. ГРАНИЦЫ H1 ======================
    @staticmethod
    def h1_bounds(result: ExperimentResult) -> BytesIO:
        df = pd.DataFrame([item.to_dict() for item in result.items])
        fig, ax = plt.subplots(figsize=(10, 7))
        PlotGenerator._style(fig, ax, "Скор exponential при H1", "пресет энтропии", "средний скор")
        x = np.arange(len(df))
        ax.errorbar(x, df["mean_score"], yerr=3 * df["residual_se"], fmt="o", capsize=4,
                    color=PlotGenerator.COLORS[2], label="эмпирическое среднее ± 3 SE")
        ax.scatter(x, df["mean_bound"], marker="_", s=600, color=PlotGenerator.COLORS[0], label="нижняя граница")
        ax.scatter(x, df["mean_exact"], marker="x", s=80, color=PlotGenerator.COLORS[1], label="точное ожидание")
        ax.set_xticks(x)
        ax.set_xticklabels(df["preset"], color=Config.PLOT_TEXT_COLOR)
        ax.legend(facecolor=AXES_COLOR, labelcolor=Config.PLOT_TEXT_COLOR)
        PlotGenerator._add_watermark(ax, f"seed={result.spec.seed}")
        return PlotGenerator._finish(fig)

    # ====================== УНИВЕРСАЛЬНЫЙ ВХОД ======================
    @staticmethod
    def generate(result: ExperimentResult) -> BytesIO:
        mapping = {
            "fpr_calibration": PlotGenerator.calibration,
            "robustness": PlotGenerator.robustness,
            "identification": PlotGenerator.identification,
            "h1_bounds": PlotGenerator.h1_bounds,
        }
        return mapping[result.experiment](result)

    @staticmethod
    def save(result: ExperimentResult, path: Path) -> Path:
        buf = PlotGenerator.generate(result)
        path.write_bytes(buf.getvalue())
        logger.info(f"📸 График сохранён: {path}")
        return path
