"""
保存済み結果タブ
"""
from PySide6.QtWidgets import (QWidget, QVBoxLayout, QHBoxLayout, QPushButton,
                               QLabel, QFileDialog, QMessageBox, QTableWidget, QTableWidgetItem)
import logging

from models.evaluation import EvaluationRecord, SweepRecord
from utils.csv_export import CSVExporter

logger = logging.getLogger(__name__)

EVALUATION_COLUMNS = ["id", "key", "n", "n_tets", "log_h_re", "log_h_im", "plan_method", "created_at"]
SWEEP_COLUMNS = ["id", "key", "ns", "slope", "slope_error", "r2", "created_at"]


class ResultsTab(QWidget):
    """保存済み結果タブ"""

    def __init__(self, database, config):
        super().__init__()
        self.database = database
        self.config = config
        conn = database.connect()
        self.evaluations = EvaluationRecord(conn)
        self.sweeps = SweepRecord(conn)
        self._init_ui()
        self.refresh()

    def _init_ui(self):
        main_layout = QVBoxLayout(self)

        buttons = QHBoxLayout()
        refresh_button = QPushButton("表示更新 (F5)")
        refresh_button.setObjectName("primaryButton")
        refresh_button.clicked.connect(self.refresh)
        buttons.addWidget(refresh_button)
        export_button = QPushButton("評価をCSV出力")
        export_button.clicked.connect(self._export)
        buttons.addWidget(export_button)
        delete_button = QPushButton("選択した評価を削除")
        delete_button.clicked.connect(self._delete_selected)
        buttons.addWidget(delete_button)
        buttons.addStretch()
        main_layout.addLayout(buttons)

        main_layout.addWidget(QLabel("状態和の評価"))
        self.evaluation_table = QTableWidget(0, len(EVALUATION_COLUMNS))
        self.evaluation_table.setHorizontalHeaderLabels(EVALUATION_COLUMNS)
        main_layout.addWidget(self.evaluation_table)

        main_layout.addWidget(QLabel("漸近スイープ"))
        self.sweep_table = QTableWidget(0, len(SWEEP_COLUMNS))
        self.sweep_table.setHorizontalHeaderLabels(SWEEP_COLUMNS)
        main_layout.addWidget(self.sweep_table)

    @staticmethod
    def _fill(table: QTableWidget, rows, columns):
        table.setRowCount(len(rows))
        for r, row in enumerate(rows):
            for c, name in enumerate(columns):
                value = row.get(name)
                if name == "key" and value:
                    value = value[:12]
                table.setItem(r, c, QTableWidgetItem("" if value is None else str(value)))

    def refresh(self):
        self._fill(self.evaluation_table, self.evaluations.get_all(), EVALUATION_COLUMNS)
        self._fill(self.sweep_table, self.sweeps.get_all(), SWEEP_COLUMNS)

    def _export(self):
        path, _ = QFileDialog.getSaveFileName(self, "CSV出力", "evaluations.csv", "CSV (*.csv)")
        if not path:
            return
        exporter = CSVExporter(self.config.get('Export', 'csv_encoding', fallback='utf-8-sig'))
        if exporter.export_evaluations(self.evaluations.get_all(), path):
            QMessageBox.information(self, "完了", f"出力しました:\n{path}")

    def _delete_selected(self):
        row = self.evaluation_table.currentRow()
        if row < 0:
            return
        record_id = int(self.evaluation_table.item(row, 0).text())
        if self.evaluations.delete(record_id):
            self.refresh()
