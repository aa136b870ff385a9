"""
PySide6 画面 (pytest-qt)
"""
import pytest

from models.database import Database

pytestmark = pytest.mark.gui


@pytest.fixture
def window(qtbot, config):
    from views.main_window import MainWindow

    database = Database(config.get('Database', 'path'))
    database.initialize_schema()
    window = MainWindow(database, config, confirm_close=False)
    qtbot.addWidget(window)
    yield window
    database.close()


def _load(window, key):
    tab = window.triangulation_tab
    tab.sample_combo.setCurrentIndex(tab.sample_combo.findData(key))
    tab.load_sample()


def test_tabs(window):
    assert window.tab_widget.count() == 4
    assert not window.statesum_tab.evaluate_button.isEnabled()


def test_load_sample_shows_summary(window):
    _load(window, "double-tetrahedron")
    tab = window.triangulation_tab
    assert tab.count_label.text() == "2 / 4 / 6 / 4"
    assert tab.edge_table.rowCount() == 6
    assert "NG" not in tab.report_text.toPlainText()
    assert window.statesum_tab.evaluate_button.isEnabled()


def test_evaluate_and_store(window, qtbot):
    _load(window, "double-tetrahedron")
    tab = window.statesum_tab
    tab.n_spin.setValue(3)
    with qtbot.waitSignal(tab.stored, timeout=10000):
        tab.run()
    assert tab.result.n == 3
    assert tab.k_label.text() != "-"
    assert window.results_tab.evaluation_table.rowCount() == 1


def test_sweep(window, qtbot):
    _load(window, "double-tetrahedron")
    tab = window.asymptotics_tab
    tab.range_edit.setText("3:5:2")
    with qtbot.waitSignal(tab.stored, timeout=30000):
        tab.run()
    assert tab.table.rowCount() == 2
    assert tab.export_button.isEnabled()
    assert window.results_tab.sweep_table.rowCount() == 1


def test_menu_evaluate_needs_input(window):
    window._run_in(window.statesum_tab)
    assert window.tab_widget.currentWidget() is window.statesum_tab
    assert "読み込んで" in window.status_bar.currentMessage()
