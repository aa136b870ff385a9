"""
CSVエクスポートユーティリティ
辺積レポート・漸近スイープ・体積レポート・保存済み評価を CSV に書き出す
"""
import pandas as pd
import logging
from pathlib import Path
from typing import Dict, List, Union, Any

from controllers.asymptotics import GrowthFit
from controllers.dilog import VolumeReport
from models.ideal import EdgeProductReport

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class CSVExporter:
    """CSVエクスポートクラス"""

    def __init__(self, encoding: str = "utf-8-sig", float_format: str = "%.12g"):
        self.encoding = encoding
        self.float_format = float_format

    def _write(self, df: pd.DataFrame, output_path: PathLike, kind: str) -> bool:
        try:
            Path(output_path).parent.mkdir(parents=True, exist_ok=True)
            df.to_csv(output_path, index=False, encoding=self.encoding, float_format=self.float_format)
            logger.info(f"{kind} exported: {output_path} ({len(df)} rows)")
            return True
        except Exception as e:
            logger.error(f"Failed to export {kind}: {e}")
            return False

    def export_edge_report(self, report: EdgeProductReport, output_path: PathLike) -> bool:
        """辺 ID, 積, |積 - 1|"""
        return self._write(report.to_dataframe(), output_path, "Edge report")

    def export_asymptotics(self, fit: GrowthFit, output_path: PathLike) -> bool:
        """N, Re K, Im K, log|K|, slope-so-far"""
        return self._write(fit.to_dataframe(), output_path, "Asymptotics")

    def export_volume(self, report: VolumeReport, output_path: PathLike) -> bool:
        return self._write(report.to_dataframe(), output_path, "Volume report")

    def export_evaluations(self, rows: List[Dict[str, Any]], output_path: PathLike) -> bool:
        """保存済み評価の一覧"""
        columns = ["key", "n", "cut_angle", "n_tets", "log_h_re", "log_h_im",
                   "plan_method", "plan_cost", "elapsed", "created_at"]
        df = pd.DataFrame(rows, columns=columns)
        return self._write(df, output_path, "Evaluations")
