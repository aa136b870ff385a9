"""
メインウィンドウ
"""
from PySide6.QtWidgets import (QMainWindow, QWidget, QVBoxLayout,
                               QTabWidget, QStatusBar)
from PySide6.QtGui import QAction
import logging

logger = logging.getLogger(__name__)


class MainWindow(QMainWindow):
    """メインウィンドウクラス"""

    def __init__(self, database, config, confirm_close: bool = True):
        super().__init__()
        self.database = database
        self.config = config
        self.confirm_close = confirm_close

        self.setWindowTitle("量子双曲不変量 計算システム v1.0")

        # ウィンドウサイズ設定
        width = config.getint('UI', 'window_width', fallback=1200)
        height = config.getint('UI', 'window_height', fallback=800)
        self.resize(width, height)

        self._init_ui()
        self._create_menu_bar()
        self._create_status_bar()

        logger.info("Main window initialized")

    def _init_ui(self):
        """UI初期化"""
        central_widget = QWidget()
        self.setCentralWidget(central_widget)

        main_layout = QVBoxLayout(central_widget)
        main_layout.setContentsMargins(10, 10, 10, 10)

        self.tab_widget = QTabWidget()
        main_layout.addWidget(self.tab_widget)

        from views.triangulation_tab import TriangulationTab
        from views.statesum_tab import StateSumTab
        from views.asymptotics_tab import AsymptoticsTab
        from views.results_tab import ResultsTab

        self.triangulation_tab = TriangulationTab(self.config)
        self.tab_widget.addTab(self.triangulation_tab, "三角形分割")

        self.statesum_tab = StateSumTab(self.database, self.config)
        self.tab_widget.addTab(self.statesum_tab, "状態和")

        self.asymptotics_tab = AsymptoticsTab(self.database, self.config)
        self.tab_widget.addTab(self.asymptotics_tab, "漸近挙動")

        self.results_tab = ResultsTab(self.database, self.config)
        self.tab_widget.addTab(self.results_tab, "保存済み結果")

        # 読み込んだ三角形分割を各タブへ
        self.triangulation_tab.loaded.connect(self.statesum_tab.set_input)
        self.triangulation_tab.loaded.connect(self.asymptotics_tab.set_input)
        self.statesum_tab.stored.connect(self.results_tab.refresh)
        self.asymptotics_tab.stored.connect(self.results_tab.refresh)

    def _create_menu_bar(self):
        """メニューバーを作成"""
        menubar = self.menuBar()

        file_menu = menubar.addMenu("ファイル(&F)")

        open_action = QAction("開く(&O)", self)
        open_action.setShortcut("Ctrl+O")
        open_action.triggered.connect(self.triangulation_tab.open_file)
        file_menu.addAction(open_action)

        backup_action = QAction("バックアップ作成(&B)", self)
        backup_action.triggered.connect(self._on_backup)
        file_menu.addAction(backup_action)

        file_menu.addSeparator()

        exit_action = QAction("終了(&X)", self)
        exit_action.setShortcut("Ctrl+Q")
        exit_action.triggered.connect(self.close)
        file_menu.addAction(exit_action)

        compute_menu = menubar.addMenu("計算(&C)")

        sample_action = QAction("サンプル読込(&S)", self)
        sample_action.triggered.connect(self.triangulation_tab.load_sample)
        compute_menu.addAction(sample_action)

        evaluate_action = QAction("状態和を評価(&E)", self)
        evaluate_action.setShortcut("Ctrl+E")
        evaluate_action.triggered.connect(lambda: self._run_in(self.statesum_tab))
        compute_menu.addAction(evaluate_action)

        sweep_action = QAction("N のスイープ(&W)", self)
        sweep_action.triggered.connect(lambda: self._run_in(self.asymptotics_tab))
        compute_menu.addAction(sweep_action)

        compute_menu.addSeparator()

        refresh_action = QAction("保存済み結果を更新(&R)", self)
        refresh_action.setShortcut("F5")
        refresh_action.triggered.connect(self._on_refresh)
        compute_menu.addAction(refresh_action)

        help_menu = menubar.addMenu("ヘルプ(&H)")

        about_action = QAction("バージョン情報(&A)", self)
        about_action.triggered.connect(self._on_about)
        help_menu.addAction(about_action)

    def _create_status_bar(self):
        """ステータスバーを作成"""
        self.status_bar = QStatusBar()
        self.setStatusBar(self.status_bar)
        self.status_bar.showMessage("準備完了")

    def _on_backup(self):
        """バックアップ作成"""
        from pathlib import Path
        from PySide6.QtWidgets import QMessageBox

        backup_dir = Path(self.config.get('Database', 'backup_dir', fallback='backups'))
        backup_path = self.database.backup(backup_dir)

        if backup_path:
            QMessageBox.information(self, "バックアップ完了", f"バックアップを作成しました:\n{backup_path}")
            self.status_bar.showMessage(f"バックアップ作成完了: {backup_path.name}", 5000)
        else:
            QMessageBox.critical(self, "エラー", "バックアップの作成に失敗しました")

    def _run_in(self, tab):
        self.tab_widget.setCurrentWidget(tab)
        if tab.triangulation is None:
            self.status_bar.showMessage("先に三角形分割を読み込んでください", 5000)
            return
        tab.run()

    def _on_refresh(self):
        self.results_tab.refresh()
        self.status_bar.showMessage("保存済み結果を更新しました", 3000)
        logger.info("Stored results refreshed")

    def _on_about(self):
        """バージョン情報"""
        from PySide6.QtWidgets import QMessageBox

        QMessageBox.about(
            self,
            "バージョン情報",
            "<h3>量子双曲不変量 計算システム</h3>"
            "<p>Version: 1.0.0</p>"
            "<p>Python + PySide6 + NumPy + SQLite3</p>"
        )

    def closeEvent(self, event):
        """ウィンドウを閉じる際の処理"""
        from PySide6.QtWidgets import QMessageBox

        if not self.confirm_close:
            event.accept()
            return

        reply = QMessageBox.question(
            self,
            "確認",
            "アプリケーションを終了しますか？",
            QMessageBox.Yes | QMessageBox.No,
            QMessageBox.No
        )

        if reply == QMessageBox.Yes:
            logger.info("Application closing")
            event.accept()
        else:
            event.ignore()
