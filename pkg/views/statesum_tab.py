"""
状態和タブ
"""
from PySide6.QtWidgets import (QWidget, QVBoxLayout, QPushButton, QGroupBox,
                               QFormLayout, QComboBox, QLabel, QMessageBox,
                               QSpinBox, QCheckBox, QTextEdit)
from PySide6.QtCore import Signal
import json
import logging
import math

from controllers.quantum import RootSystem
from controllers.statesum import evaluate, evaluate_naive, face_indices, plan_network
from models.evaluation import EvaluationRecord, result_key
from utils.exceptions import QHIError

logger = logging.getLogger(__name__)


class StateSumTab(QWidget):
    """状態和タブ"""

    stored = Signal()

    def __init__(self, database, config):
        super().__init__()
        self.database = database
        self.config = config
        self.records = EvaluationRecord(database.connect())
        self.triangulation = None
        self.decoration = None
        self.result = None
        self._init_ui()

    def _init_ui(self):
        main_layout = QVBoxLayout(self)

        group = QGroupBox("評価")
        form = QFormLayout()

        self.n_spin = QSpinBox()
        self.n_spin.setRange(3, 99)
        self.n_spin.setSingleStep(2)
        self.n_spin.setValue(self.config.getint('Computation', 'default_n', fallback=3))
        form.addRow("N (奇数):", self.n_spin)

        self.plan_combo = QComboBox()
        self.plan_combo.addItems(["auto", "exhaustive", "greedy", "naive"])
        form.addRow("縮約計画:", self.plan_combo)

        self.store_check = QCheckBox("結果を保存")
        self.store_check.setChecked(True)
        form.addRow("", self.store_check)

        self.evaluate_button = QPushButton("評価")
        self.evaluate_button.setObjectName("primaryButton")
        self.evaluate_button.setEnabled(False)
        self.evaluate_button.clicked.connect(self.run)
        form.addRow("", self.evaluate_button)

        group.setLayout(form)
        main_layout.addWidget(group)

        result_group = QGroupBox("結果")
        result_form = QFormLayout()
        self.psi_label = QLabel("-")
        result_form.addRow("Ψ:", self.psi_label)
        self.h_label = QLabel("-")
        result_form.addRow("H:", self.h_label)
        self.k_label = QLabel("-")
        result_form.addRow("K = H^N:", self.k_label)
        self.cost_label = QLabel("-")
        result_form.addRow("コスト (計画 / 素朴):", self.cost_label)
        result_group.setLayout(result_form)
        main_layout.addWidget(result_group)

        self.detail_text = QTextEdit()
        self.detail_text.setReadOnly(True)
        main_layout.addWidget(self.detail_text)

    def set_input(self, triangulation, decoration):
        self.triangulation = triangulation
        self.decoration = decoration
        self.evaluate_button.setEnabled(True)

    def run(self):
        """状態和を評価して表示"""
        n = self.n_spin.value()
        if n % 2 == 0:
            QMessageBox.warning(self, "入力エラー", "N は奇数にしてください")
            return
        cut_angle = self.config.getfloat('Computation', 'root_cut_angle', fallback=math.pi)
        budget = self.config.getint('Computation', 'memory_budget_mb', fallback=512) * 1024 * 1024
        method = self.plan_combo.currentText()
        try:
            root_system = RootSystem(n, cut_angle)
            if method == "naive":
                result = evaluate_naive(self.triangulation, self.decoration, root_system)
            else:
                limit = {"auto": self.config.getint('Computation', 'exhaustive_plan_limit', fallback=6),
                         "exhaustive": self.triangulation.n_tets, "greedy": 1}[method]
                plan = plan_network(face_indices(self.triangulation), n, budget, limit)
                result = evaluate(self.triangulation, self.decoration, root_system, plan=plan, budget=budget)
        except QHIError as e:
            logger.error(f"Failed to evaluate state sum: {e}")
            QMessageBox.critical(self, "評価エラー", str(e))
            return

        self.result = result
        self._show(result)
        if self.store_check.isChecked():
            key = result_key(self.triangulation, self.decoration)
            if self.records.save(key, self.triangulation.n_tets, result, source="gui") is not None:
                self.stored.emit()

    def _show(self, result):
        data = result.to_dict()
        for label, name in ((self.psi_label, "psi"), (self.h_label, "h"), (self.k_label, "k")):
            value = data.get(name)
            label.setText("overflow" if value is None else f"{complex(*value):.10g}")
        if result.plan is not None:
            self.cost_label.setText(f"{result.plan_cost} / {result.naive_cost}")
        else:
            self.cost_label.setText("-")
        self.detail_text.setPlainText(json.dumps(data, indent=2, ensure_ascii=False))
