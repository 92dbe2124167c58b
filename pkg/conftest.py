# =============================================
# conftest.py — НАСТРОЙКИ PYTEST ДЛЯ ВСЕГО РЕПОЗИТОРИЯ
# =============================================
"""
Маркер slow: прогоны Монте-Карло в полном масштабе (10⁴–10⁵ испытаний).
По умолчанию пропускаются, включаются флагом --runslow.
"""

import hypothesis
import numpy as np
import pytest

np.seterr(all="warn")

collect_ignore = ["examples"]

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.load_profile("default")


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="запускать медленные тесты")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Монте-Карло в полном масштабе, только с --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="нужен флаг --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
