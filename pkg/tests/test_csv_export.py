"""
CSV エクスポート
"""
import math

import pandas as pd
import pytest

from controllers.asymptotics import fit_growth
from controllers.dilog import volume_report
from models.ideal import idealize_triangulation
from utils.csv_export import CSVExporter


def test_export_edge_report(simplex, tmp_path):
    tri, decoration = simplex
    _, report = idealize_triangulation(tri, decoration)
    path = tmp_path / "out" / "edges.csv"
    assert CSVExporter().export_edge_report(report, path)
    df = pd.read_csv(path, encoding="utf-8-sig")
    assert len(df) == tri.n_edges
    assert (df["deviation"] < 1e-8).all()


def test_export_asymptotics(tmp_path):
    ns = [3, 5, 7]
    fit = fit_growth(ns, [0.5 * n ** 2 / (2 * math.pi) for n in ns])
    path = tmp_path / "asymptotics.csv"
    assert CSVExporter(encoding="utf-8").export_asymptotics(fit, path)
    df = pd.read_csv(path)
    assert list(df["N"]) == ns
    assert list(df.columns) == ["N", "Re K", "Im K", "log|K|", "slope-so-far"]


def test_export_volume(figure8, tmp_path):
    _, ideal_tets, flattening = figure8
    path = tmp_path / "volume.csv"
    assert CSVExporter().export_volume(volume_report(ideal_tets, flattening), path)
    df = pd.read_csv(path, encoding="utf-8-sig")
    assert df["volume"].sum() == pytest.approx(2.029883212819, abs=1e-9)


def test_export_evaluations(tmp_path):
    rows = [{"key": "abc", "n": 3, "cut_angle": math.pi, "n_tets": 2,
             "log_h_re": 0.1, "log_h_im": 0.2, "plan_method": "exhaustive",
             "plan_cost": 81.0, "elapsed": 0.01, "created_at": "2024-01-01"}]
    path = tmp_path / "evaluations.csv"
    assert CSVExporter().export_evaluations(rows, path)
    assert pd.read_csv(path, encoding="utf-8-sig").loc[0, "n"] == 3


def test_export_failure_is_reported(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert not CSVExporter().export_evaluations([], blocker / "nested.csv")
