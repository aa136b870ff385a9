"""
結果ストア (SQLite)
"""
import math

import pytest

from controllers.asymptotics import fit_growth
from controllers.quantum import RootSystem
from controllers.statesum import StateSumResult, evaluate
from models.database import Database
from models.evaluation import EvaluationRecord, SweepRecord, result_key


@pytest.fixture
def database(tmp_path):
    database = Database(str(tmp_path / "db" / "results.db"))
    database.initialize_schema()
    yield database
    database.close()


def test_schema_and_integrity(database):
    tables = {
        row["name"] for row in
        database.connect().execute("SELECT name FROM sqlite_master WHERE type = 'table'")
    }
    assert {"evaluations", "sweeps"} <= tables
    assert database.integrity_check()


def test_result_key(simplex, double_tet):
    assert result_key(*simplex) == result_key(*simplex)
    assert result_key(*simplex) != result_key(*double_tet)
    assert len(result_key(*simplex)) == 64


def test_store_and_lookup_evaluation(database, double_tet):
    tri, decoration = double_tet
    root_system = RootSystem(3)
    result = evaluate(tri, decoration, root_system)
    records = EvaluationRecord(database.connect())
    key = result_key(tri, decoration)

    record_id = records.save(key, tri.n_tets, result, source="double.json")
    assert record_id is not None
    row = records.lookup(key, 3, root_system.cut_angle)
    assert row["plan_method"] == result.plan.method
    assert row["n_tets"] == 2

    restored = records.to_result(row)
    assert restored.log_h == pytest.approx(result.log_h)
    assert restored.log_psi == pytest.approx(result.log_psi)
    assert records.lookup(key, 5, root_system.cut_angle) is None


def test_same_key_is_replaced(database):
    records = EvaluationRecord(database.connect())
    records.save("k", 1, StateSumResult(3, 0j, complex(1, 0)))
    records.save("k", 1, StateSumResult(3, 0j, complex(2, 0)))
    rows = records.get_all("k")
    assert len(rows) == 1
    assert rows[0]["log_h_re"] == 2.0


def test_even_n_is_rejected_by_schema(database):
    records = EvaluationRecord(database.connect())
    assert records.save("k", 1, StateSumResult(4, 0j, 0j)) is None
    assert records.get_all() == []


def test_delete_evaluation(database):
    records = EvaluationRecord(database.connect())
    record_id = records.save("k", 1, StateSumResult(5, 0j, 0j))
    assert records.delete(record_id)
    assert not records.delete(record_id)
    assert records.get_all() == []


def test_store_sweep(database):
    ns = [3, 5, 7]
    fit = fit_growth(ns, [0.5 * n ** 2 / (2 * math.pi) for n in ns])
    sweeps = SweepRecord(database.connect())
    assert sweeps.save("k", fit) is not None
    rows = sweeps.get_all("k")
    assert rows[0]["ns"] == ns
    assert rows[0]["slope"] == pytest.approx(0.5)
    assert sweeps.get_all("other") == []


def test_backup(database, tmp_path):
    EvaluationRecord(database.connect()).save("k", 1, StateSumResult(3, 0j, 0j))
    backup_path = database.backup(tmp_path / "backups")
    assert backup_path is not None
    copy = Database(str(backup_path))
    assert len(EvaluationRecord(copy.connect()).get_all()) == 1
    copy.close()
