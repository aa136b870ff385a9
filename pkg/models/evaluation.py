"""
評価結果モデル
状態和の評価 (evaluations) と漸近スイープ (sweeps) の保存・取得
"""
import hashlib
import json
import sqlite3
import logging
from typing import Optional, List, Dict, Any

from controllers.asymptotics import GrowthFit
from controllers.statesum import StateSumResult
from models.decoration import GlobalDecoration
from models.triangulation import Triangulation
from utils.triangulation_io import document_dict

logger = logging.getLogger(__name__)


def result_key(triangulation: Triangulation, decoration: GlobalDecoration) -> str:
    """デコレーションつき三角形分割の SHA-256"""
    payload = json.dumps(document_dict(triangulation, decoration), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class EvaluationRecord:
    """状態和の評価結果モデルクラス"""

    def __init__(self, db_connection: sqlite3.Connection):
        self.conn = db_connection

    def save(self, key: str, n_tets: int, result: StateSumResult,
             source: Optional[str] = None) -> Optional[int]:
        """評価を保存 (同じ key, N, 切断角は上書き)"""
        cut_angle = result.root_system.cut_angle if result.root_system else 0.0
        try:
            cursor = self.conn.cursor()
            cursor.execute("""
                INSERT OR REPLACE INTO evaluations
                (key, n, cut_angle, n_tets, log_h_re, log_h_im, log_psi_re, log_psi_im,
                 plan_method, plan_cost, elapsed, source)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            """, (
                key, result.n, cut_angle, n_tets,
                result.log_h.real, result.log_h.imag, result.log_psi.real, result.log_psi.imag,
                result.plan.method if result.plan else None,
                float(result.plan_cost) if result.plan_cost is not None else None,
                result.elapsed, source,
            ))
            self.conn.commit()
            record_id = cursor.lastrowid
            logger.info(f"Evaluation stored: N={result.n} key={key[:12]} (ID: {record_id})")
            return record_id

        except sqlite3.IntegrityError as e:
            self.conn.rollback()
            logger.error(f"Integrity error: {e}")
            return None
        except Exception as e:
            self.conn.rollback()
            logger.error(f"Failed to store evaluation: {e}")
            return None

    def lookup(self, key: str, n: int, cut_angle: float) -> Optional[Dict[str, Any]]:
        """保存済みの評価を取得"""
        try:
            cursor = self.conn.cursor()
            cursor.execute("""
                SELECT * FROM evaluations
                WHERE key = ? AND n = ? AND ABS(cut_angle - ?) < 1e-12
            """, (key, n, cut_angle))
            row = cursor.fetchone()
            return dict(row) if row else None

        except Exception as e:
            logger.error(f"Failed to look up evaluation: {e}")
            return None

    def to_result(self, row: Dict[str, Any]) -> StateSumResult:
        """行から StateSumResult を復元 (計画と根の選択は持たない)"""
        return StateSumResult(
            n=row["n"],
            log_psi=complex(row["log_psi_re"], row["log_psi_im"]),
            log_h=complex(row["log_h_re"], row["log_h_im"]),
            elapsed=row["elapsed"] or 0.0,
        )

    def get_all(self, key: Optional[str] = None) -> List[Dict[str, Any]]:
        try:
            cursor = self.conn.cursor()
            if key is None:
                cursor.execute("SELECT * FROM evaluations ORDER BY key, n")
            else:
                cursor.execute("SELECT * FROM evaluations WHERE key = ? ORDER BY n", (key,))
            return [dict(row) for row in cursor.fetchall()]

        except Exception as e:
            logger.error(f"Failed to get evaluations: {e}")
            return []

    def delete(self, record_id: int) -> bool:
        try:
            cursor = self.conn.cursor()
            cursor.execute("DELETE FROM evaluations WHERE id = ?", (record_id,))
            self.conn.commit()
            if cursor.rowcount > 0:
                logger.info(f"Evaluation deleted: ID {record_id}")
                return True
            logger.warning(f"Evaluation not found: ID {record_id}")
            return False

        except Exception as e:
            self.conn.rollback()
            logger.error(f"Failed to delete evaluation: {e}")
            return False


class SweepRecord:
    """漸近スイープのあてはめ結果モデルクラス"""

    def __init__(self, db_connection: sqlite3.Connection):
        self.conn = db_connection

    def save(self, key: str, fit: GrowthFit, source: Optional[str] = None) -> Optional[int]:
        try:
            cursor = self.conn.cursor()
            cursor.execute("""
                INSERT INTO sweeps (key, ns, slope, intercept, slope_error, r2, reference_im, source)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?)
            """, (
                key, json.dumps(fit.ns), fit.slope, fit.intercept,
                fit.slope_error, fit.r2, fit.reference, source,
            ))
            self.conn.commit()
            record_id = cursor.lastrowid
            logger.info(f"Sweep stored: N={fit.ns} slope={fit.slope:.6f} (ID: {record_id})")
            return record_id

        except Exception as e:
            self.conn.rollback()
            logger.error(f"Failed to store sweep: {e}")
            return None

    def get_all(self, key: Optional[str] = None) -> List[Dict[str, Any]]:
        try:
            cursor = self.conn.cursor()
            if key is None:
                cursor.execute("SELECT * FROM sweeps ORDER BY created_at DESC, id DESC")
            else:
                cursor.execute("SELECT * FROM sweeps WHERE key = ? ORDER BY id DESC", (key,))
            rows = [dict(row) for row in cursor.fetchall()]
            for row in rows:
                row["ns"] = json.loads(row["ns"])
            return rows

        except Exception as e:
            logger.error(f"Failed to get sweeps: {e}")
            return []
