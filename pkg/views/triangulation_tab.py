"""
三角形分割タブ
ファイルまたは同梱サンプルを読み込み、商複体と検証結果を表示する
"""
from PySide6.QtWidgets import (QWidget, QVBoxLayout, QHBoxLayout, QPushButton,
                               QGroupBox, QFormLayout, QComboBox, QLabel,
                               QFileDialog, QMessageBox, QTableWidget, QTableWidgetItem,
                               QTextEdit)
from PySide6.QtCore import Signal
import logging

from models.decoration import validate_d_triangulation
from models.ideal import idealize_triangulation
from utils.exceptions import QHIError
from utils.sample_data import samples
from utils.triangulation_io import load_decorated

logger = logging.getLogger(__name__)

SAMPLE_NAMES = {
    "simplex-boundary": "4-単体の境界 (5四面体)",
    "double-tetrahedron": "二重四面体 (2四面体)",
    "bubbled-double-tetrahedron": "バブルつき二重四面体 (4四面体)",
    "collapsed-simplex-boundary": "3-2 移動後の 4-単体の境界 (4四面体)",
    "hopf-link-join": "三角形の結合と Hopf 絡み目 (9四面体)",
}


class TriangulationTab(QWidget):
    """三角形分割タブ"""

    loaded = Signal(object, object)

    def __init__(self, config):
        super().__init__()
        self.config = config
        self.triangulation = None
        self.decoration = None
        self._init_ui()

    def _init_ui(self):
        """UI初期化"""
        main_layout = QVBoxLayout(self)

        source_group = QGroupBox("入力")
        source_layout = QFormLayout()

        self.sample_combo = QComboBox()
        for key, label in SAMPLE_NAMES.items():
            self.sample_combo.addItem(label, key)
        sample_button = QPushButton("サンプル読み込み")
        sample_button.clicked.connect(self.load_sample)
        sample_row = QHBoxLayout()
        sample_row.addWidget(self.sample_combo)
        sample_row.addWidget(sample_button)
        source_layout.addRow("同梱サンプル:", sample_row)

        open_button = QPushButton("JSONファイルを開く")
        open_button.setObjectName("primaryButton")
        open_button.clicked.connect(self.open_file)
        source_layout.addRow("ファイル:", open_button)

        self.source_label = QLabel("未読み込み")
        source_layout.addRow("現在:", self.source_label)

        source_group.setLayout(source_layout)
        main_layout.addWidget(source_group)

        summary_group = QGroupBox("商複体")
        summary_layout = QFormLayout()
        self.count_label = QLabel("-")
        summary_layout.addRow("T / V / E / F:", self.count_label)
        self.chi_label = QLabel("-")
        summary_layout.addRow("オイラー標数:", self.chi_label)
        self.link_label = QLabel("-")
        summary_layout.addRow("H の辺:", self.link_label)
        summary_group.setLayout(summary_layout)
        main_layout.addWidget(summary_group)

        self.edge_table = QTableWidget(0, 4)
        self.edge_table.setHorizontalHeaderLabels(["辺", "価数", "端点", "|積 - 1|"])
        main_layout.addWidget(self.edge_table)

        self.report_text = QTextEdit()
        self.report_text.setReadOnly(True)
        self.report_text.setMaximumHeight(140)
        main_layout.addWidget(self.report_text)

    def open_file(self):
        path, _ = QFileDialog.getOpenFileName(self, "三角形分割を開く", "", "JSON (*.json)")
        if not path:
            return
        try:
            triangulation, decoration = load_decorated(path)
        except QHIError as e:
            logger.error(f"Failed to load {path}: {e}")
            QMessageBox.critical(self, "読み込みエラー", str(e))
            return
        self.set_triangulation(triangulation, decoration, path)

    def load_sample(self):
        key = self.sample_combo.currentData()
        exact = self.config.getboolean('Computation', 'exact_mode', fallback=False)
        triangulation, decoration = samples(exact)[key]
        self.set_triangulation(triangulation, decoration, SAMPLE_NAMES[key])

    def set_triangulation(self, triangulation, decoration, source: str):
        self.triangulation = triangulation
        self.decoration = decoration
        self.source_label.setText(source)
        self._show_summary()
        self.loaded.emit(triangulation, decoration)
        logger.info(f"Triangulation shown: {source}")

    def _show_summary(self):
        tri = self.triangulation
        self.count_label.setText(f"{tri.n_tets} / {tri.n_vertices} / {tri.n_edges} / {tri.n_faces}")
        self.chi_label.setText(str(tri.euler_characteristic()))
        self.link_label.setText(", ".join(str(s) for s in sorted(tri.hamiltonian)) or "-")

        report = validate_d_triangulation(tri, self.decoration)
        lines = [f"{name}: {'OK' if ok else 'NG'}" for name, ok in report.items.items()]
        lines.extend(report.messages)

        deviations = {}
        if report.passed:
            try:
                _, edge_report = idealize_triangulation(tri, self.decoration)
                deviations = edge_report.deviations
            except QHIError as e:
                lines.append(f"idealization: {e}")

        self.edge_table.setRowCount(tri.n_edges)
        for s in range(tri.n_edges):
            a, b = tri.edge_endpoints(s)
            values = [str(s), str(tri.edge_valence(s)), f"{a} - {b}",
                      f"{deviations[s]:.2e}" if s in deviations else "-"]
            for col, text in enumerate(values):
                self.edge_table.setItem(s, col, QTableWidgetItem(text))
        self.report_text.setPlainText("\n".join(lines))

    def refresh(self):
        if self.triangulation is not None:
            self._show_summary()
