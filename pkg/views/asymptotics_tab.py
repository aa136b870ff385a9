"""
漸近挙動タブ
"""
from PySide6.QtWidgets import (QWidget, QVBoxLayout, QHBoxLayout, QPushButton,
                               QGroupBox, QFormLayout, QLineEdit, QLabel,
                               QFileDialog, QMessageBox, QTableWidget, QTableWidgetItem)
from PySide6.QtCore import Signal, Qt
from PySide6.QtGui import QPixmap
import logging
import math
import tempfile
from pathlib import Path

from controllers.asymptotics import feasible_ns, parse_range, plot_growth, sweep
from models.evaluation import SweepRecord, result_key
from utils.csv_export import CSVExporter
from utils.exceptions import QHIError

logger = logging.getLogger(__name__)


class AsymptoticsTab(QWidget):
    """漸近挙動タブ"""

    stored = Signal()

    def __init__(self, database, config):
        super().__init__()
        self.database = database
        self.config = config
        self.records = SweepRecord(database.connect())
        self.triangulation = None
        self.decoration = None
        self.fit = None
        self._init_ui()

    def _init_ui(self):
        main_layout = QVBoxLayout(self)

        group = QGroupBox("スイープ")
        form = QFormLayout()
        self.range_edit = QLineEdit("3:9:2")
        form.addRow("N の範囲 (start:stop:step):", self.range_edit)

        buttons = QHBoxLayout()
        self.run_button = QPushButton("実行")
        self.run_button.setObjectName("primaryButton")
        self.run_button.setEnabled(False)
        self.run_button.clicked.connect(self.run)
        buttons.addWidget(self.run_button)
        self.export_button = QPushButton("CSV出力")
        self.export_button.setEnabled(False)
        self.export_button.clicked.connect(self._export_csv)
        buttons.addWidget(self.export_button)
        buttons.addStretch()
        form.addRow("", buttons)

        self.slope_label = QLabel("-")
        form.addRow("傾き:", self.slope_label)
        group.setLayout(form)
        main_layout.addWidget(group)

        self.table = QTableWidget(0, 5)
        self.table.setHorizontalHeaderLabels(["N", "Re K", "Im K", "log|K|", "slope-so-far"])
        main_layout.addWidget(self.table)

        self.plot_label = QLabel()
        self.plot_label.setAlignment(Qt.AlignCenter)
        main_layout.addWidget(self.plot_label)

    def set_input(self, triangulation, decoration):
        self.triangulation = triangulation
        self.decoration = decoration
        self.run_button.setEnabled(True)

    def run(self):
        cut_angle = self.config.getfloat('Computation', 'root_cut_angle', fallback=math.pi)
        budget = self.config.getint('Computation', 'memory_budget_mb', fallback=512) * 1024 * 1024
        try:
            ns = feasible_ns(self.triangulation, parse_range(self.range_edit.text()), budget)
            if len(ns) < 2:
                QMessageBox.warning(self, "入力エラー", f"あてはめに使える N が足りません: {ns}")
                return
            workers = self.config.getint('Computation', 'sweep_workers', fallback=2)
            fit = sweep(self.triangulation, self.decoration, ns, cut_angle, budget, workers=workers)
        except (QHIError, ValueError) as e:
            logger.error(f"Failed to run sweep: {e}")
            QMessageBox.critical(self, "スイープエラー", str(e))
            return

        self.fit = fit
        self.slope_label.setText(f"{fit.slope:.6f} ± {fit.slope_error:.1e} (R² = {fit.r2:.4f})")
        self._fill_table()
        self._show_plot()
        self.export_button.setEnabled(True)
        if self.records.save(result_key(self.triangulation, self.decoration), fit, source="gui") is not None:
            self.stored.emit()

    def _fill_table(self):
        df = self.fit.to_dataframe()
        self.table.setRowCount(len(df))
        for row, values in enumerate(df.itertuples(index=False)):
            for col, value in enumerate(values):
                self.table.setItem(row, col, QTableWidgetItem(f"{value:.8g}"))

    def _show_plot(self):
        path = Path(tempfile.gettempdir()) / "qhi_growth.png"
        plot_growth(self.fit, path)
        pixmap = QPixmap(str(path))
        self.plot_label.setPixmap(pixmap.scaledToWidth(min(800, pixmap.width())))

    def _export_csv(self):
        path, _ = QFileDialog.getSaveFileName(self, "CSV出力", "asymptotics.csv", "CSV (*.csv)")
        if not path:
            return
        exporter = CSVExporter(
            self.config.get('Export', 'csv_encoding', fallback='utf-8-sig'),
            self.config.get('Export', 'float_format', fallback='%.12g'),
        )
        if exporter.export_asymptotics(self.fit, path):
            QMessageBox.information(self, "完了", f"出力しました:\n{path}")
        else:
            QMessageBox.critical(self, "エラー", "CSV出力に失敗しました")
