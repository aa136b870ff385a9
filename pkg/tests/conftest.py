"""
共通フィクスチャ
"""
import configparser
import os
from itertools import combinations

import numpy as np
import pytest

# ディスプレイの無い環境でも Qt を動かす
os.environ.setdefault("QT_QPA_PLATFORM", "offscreen")

from models.decoration import BorelValue
from utils.numbers import gaussian, to_complex
from utils.sample_data import (
    bubbled_double_tetrahedron, collapsed_simplex_boundary, double_tetrahedron,
    figure_eight, hopf_link_join, simplex_boundary,
)


@pytest.fixture(scope="session")
def simplex():
    return simplex_boundary()


@pytest.fixture(scope="session")
def simplex_exact():
    return simplex_boundary(exact=True)


@pytest.fixture(scope="session")
def double_tet():
    return double_tetrahedron()


@pytest.fixture(scope="session")
def bubbled():
    return bubbled_double_tetrahedron()


@pytest.fixture(scope="session")
def collapsed():
    return collapsed_simplex_boundary()


@pytest.fixture(scope="session")
def hopf():
    return hopf_link_join()


@pytest.fixture(scope="session")
def figure8():
    return figure_eight()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def config(tmp_path):
    config = configparser.ConfigParser()
    config.read_dict({
        "Computation": {"default_n": "3", "memory_budget_mb": "64", "exhaustive_plan_limit": "6"},
        "Database": {"path": str(tmp_path / "results.db"), "backup_dir": str(tmp_path / "backups")},
        "Logging": {"level": "DEBUG", "dir": str(tmp_path / "logs")},
        "UI": {"window_width": "800", "window_height": "600"},
    })
    return config


@pytest.fixture
def random_borel_values():
    """
    乱数の頂点ごとの Borel 値を作る関数

    t·x が互いに十分離れるまで引き直す (コボウンダリがフルになる)
    """
    def make(rng, count, exact=False):
        while True:
            if exact:
                pairs = [
                    (int(rng.choice([1, 2, 3, -1])), 0, int(rng.integers(-3, 4)), int(rng.integers(-3, 4)))
                    for _ in range(count)
                ]
                values = [BorelValue(gaussian(t, ti), gaussian(x, xi)) for t, ti, x, xi in pairs]
            else:
                values = [
                    BorelValue(complex(rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5)),
                               complex(rng.uniform(-2, 2), rng.uniform(-2, 2)))
                    for _ in range(count)
                ]
            products = [to_complex(v.t) * to_complex(v.x) for v in values]
            if min(abs(a - b) for a, b in combinations(products, 2)) > 0.3:
                return values
    return make
