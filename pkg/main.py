"""
量子双曲不変量 計算システム メインエントリーポイント
"""
import sys
import json
import math
import logging
import argparse
from pathlib import Path
import configparser
from datetime import datetime
from typing import List, Optional

from utils.exceptions import QHIError

PLAN_METHODS = ("auto", "exhaustive", "greedy", "naive")
EMIT_FIELDS = ("psi", "h", "k", "json")


def setup_logging(config, level: Optional[str] = None):
    """ロギング設定"""
    log_dir = Path(config.get('Logging', 'dir', fallback='logs'))
    log_dir.mkdir(exist_ok=True)

    log_level = level or config.get('Logging', 'level', fallback='INFO')
    log_file = log_dir / f"qhi_{datetime.now().strftime('%Y%m%d')}.log"

    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format='[%(asctime)s] [%(levelname)s] %(name)s: %(message)s',
        handlers=[
            logging.FileHandler(log_file, encoding='utf-8'),
            logging.StreamHandler()
        ]
    )

    logger = logging.getLogger(__name__)
    logger.info("=" * 60)
    logger.info("Application started")
    logger.info(f"Log file: {log_file}")
    return logger


def load_config(path: str = "config.ini"):
    """設定ファイル読み込み"""
    config = configparser.ConfigParser()
    config_file = Path(path)

    if config_file.exists():
        config.read(config_file, encoding='utf-8')
    else:
        logging.warning(f"Config file not found: {config_file}")

    return config


def load_stylesheet(app, stylesheet_path):
    """スタイルシート読み込み"""
    from PySide6.QtCore import QFile, QTextStream

    qss_file = QFile(stylesheet_path)

    if qss_file.exists() and qss_file.open(QFile.ReadOnly | QFile.Text):
        stream = QTextStream(qss_file)
        app.setStyleSheet(stream.readAll())
        qss_file.close()
        logging.info(f"Stylesheet loaded: {stylesheet_path}")
    else:
        logging.warning(f"Stylesheet not found: {stylesheet_path}")


def memory_budget(config, override_mb: Optional[int] = None) -> int:
    mb = override_mb if override_mb is not None else config.getint('Computation', 'memory_budget_mb', fallback=512)
    return mb * 1024 * 1024


def open_database(config):
    """結果ストアを開く"""
    from models.database import Database

    database = Database(config.get('Database', 'path', fallback='data/qhi_results.db'))
    database.initialize_schema()
    return database


def _print_json(data, output: Optional[str] = None):
    text = json.dumps(data, indent=2, ensure_ascii=False)
    if output:
        Path(output).write_text(text, encoding="utf-8")
        logging.getLogger(__name__).info(f"Output written: {output}")
    else:
        print(text)


# ---------------------------------------------------------------------------
# サブコマンド
# ---------------------------------------------------------------------------

def parse_site(move: str, text: Optional[str], link_edge: Optional[int] = None):
    """--site の解釈 (2-3 とバブルは "t:f"、3-2 は辺番号、バブル除去は頂点番号)"""
    from controllers.transit import BUBBLE, INVERSE_BUBBLE, THREE_TWO, TWO_THREE, MoveSite

    if text is None:
        raise ValueError(f"--site is required for --move {move}")
    if move in (TWO_THREE, BUBBLE):
        t, f = (int(v) for v in text.split(":"))
        return MoveSite(move, face=(t, f), hamiltonian_edge=link_edge if move == BUBBLE else None)
    if move == THREE_TWO:
        return MoveSite(move, edge=int(text))
    if move == INVERSE_BUBBLE:
        return MoveSite(move, vertex=int(text))
    raise ValueError(f"Unknown move: {move}")


def cmd_transit(args, config) -> int:
    from controllers.scissors import build_witness, load_chain, save_chain
    from controllers.transit import replay
    from utils.triangulation_io import load_decorated, save_document

    triangulation, decoration = load_decorated(args.input)
    admissible_only = not args.allow_nonadmissible
    if args.replay:
        chain = load_chain(args.replay)
    else:
        chain = [parse_site(args.move, args.site, args.link_edge)]

    results = replay(triangulation, decoration, chain, admissible_only)
    final = results[-1]
    save_document(args.output, final.triangulation, final.decoration)
    if args.witness:
        witness = build_witness(triangulation, decoration, chain, admissible_only)
        save_chain(chain, args.witness, witness)
    _print_json({
        "moves": [r.site.to_dict() for r in results],
        "tetrahedra": final.triangulation.n_tets,
        "new_edges": final.new_edges,
        "output": args.output,
    })
    return 0


def cmd_idealize(args, config) -> int:
    from models.ideal import idealize_triangulation, solve_flattening
    from utils.csv_export import CSVExporter
    from utils.triangulation_io import load_decorated, save_document

    triangulation, decoration = load_decorated(args.input)
    tol = config.getfloat('Tolerance', 'edge_product', fallback=1e-10)
    ideal_tets, report = idealize_triangulation(triangulation, decoration, tol)
    flattening = None
    if report.passed:
        try:
            flattening = solve_flattening(ideal_tets, triangulation)
        except QHIError as e:
            logging.getLogger(__name__).warning(f"No flattening: {e}")
    if args.output:
        save_document(args.output, triangulation, decoration, ideal_tets, flattening)
    if args.edge_csv:
        exporter = CSVExporter(config.get('Export', 'csv_encoding', fallback='utf-8-sig'))
        exporter.export_edge_report(report, args.edge_csv)
    _print_json({
        "passed": report.passed,
        "max_deviation": max(report.deviations.values(), default=0.0),
        "flat_tetrahedra": report.flat_tetrahedra,
        "flattening": {"p": list(flattening.p), "q": list(flattening.q)} if flattening else None,
    })
    return 0 if report.passed else 1


def _emit_statesum(result, fields: List[str]):
    data = result.to_dict()
    if "json" in fields:
        _print_json(data)
        return
    for name in fields:
        value = data.get(name)
        if value is None:
            print(f"{name}: overflow (log|{name}| too large), log_abs_k = {data['log_abs_k']:.12g}")
        else:
            print(f"{name}: {complex(*value)}")


def cmd_statesum(args, config) -> int:
    from controllers.quantum import RootSystem
    from controllers.statesum import evaluate, evaluate_naive, face_indices, plan_network
    from models.evaluation import EvaluationRecord, result_key
    from utils.triangulation_io import load_decorated

    logger = logging.getLogger(__name__)
    triangulation, decoration = load_decorated(args.input)
    n = args.N or config.getint('Computation', 'default_n', fallback=3)
    cut_angle = args.cut_angle if args.cut_angle is not None else \
        config.getfloat('Computation', 'root_cut_angle', fallback=math.pi)
    root_system = RootSystem(n, cut_angle)
    budget = memory_budget(config, args.budget_mb)
    fields = [f.strip() for f in args.emit.split(",") if f.strip()]
    unknown = [f for f in fields if f not in EMIT_FIELDS]
    if unknown:
        raise ValueError(f"Unknown --emit fields: {unknown}")

    records, key = None, None
    if args.store:
        database = open_database(config)
        records = EvaluationRecord(database.connect())
        key = result_key(triangulation, decoration)
        row = records.lookup(key, n, cut_angle)
        if row is not None:
            logger.info(f"Using stored evaluation for N={n}")
            _emit_statesum(records.to_result(row), fields)
            return 0

    if args.plan == "naive":
        result = evaluate_naive(triangulation, decoration, root_system)
    else:
        limit = {
            "auto": config.getint('Computation', 'exhaustive_plan_limit', fallback=6),
            "exhaustive": triangulation.n_tets,
            "greedy": 1,
        }[args.plan]
        plan = plan_network(face_indices(triangulation), n, budget, limit)
        result = evaluate(triangulation, decoration, root_system, plan=plan, budget=budget)

    if records is not None:
        records.save(key, triangulation.n_tets, result, source=str(args.input))
    _emit_statesum(result, fields)
    return 0


def _load_for_volume(path):
    """イデアル四面体を含む文書か、デコレーションつき文書をイデアル化"""
    from models.ideal import idealize_triangulation
    from utils.triangulation_io import ideal_from_document, parse_document, triangulation_from_document
    from utils.triangulation_io import decoration_from_document

    with open(path, encoding="utf-8") as f:
        doc = parse_document(json.load(f))
    triangulation = triangulation_from_document(doc)
    if doc.ideal is not None:
        ideal_tets, flattening = ideal_from_document(doc)
        return triangulation, ideal_tets, flattening
    decoration = decoration_from_document(doc, triangulation)
    ideal_tets, _ = idealize_triangulation(triangulation, decoration)
    return triangulation, ideal_tets, None


def cmd_volume(args, config) -> int:
    from controllers.dilog import volume_report
    from models.ideal import solve_flattening
    from utils.csv_export import CSVExporter

    triangulation, ideal_tets, flattening = _load_for_volume(args.input)
    if args.flattening == "auto" or flattening is None:
        flattening = solve_flattening(ideal_tets, triangulation)
    report = volume_report(ideal_tets, flattening)
    if args.csv:
        CSVExporter(config.get('Export', 'csv_encoding', fallback='utf-8-sig')).export_volume(report, args.csv)
    _print_json(report.to_dict(), args.output)
    return 0


def cmd_asymptotics(args, config) -> int:
    from controllers.asymptotics import complex_probe, feasible_ns, parse_range, plot_growth, sweep
    from models.evaluation import SweepRecord, result_key
    from utils.csv_export import CSVExporter
    from utils.triangulation_io import load_decorated

    logger = logging.getLogger(__name__)
    triangulation, decoration = load_decorated(args.input)
    cut_angle = config.getfloat('Computation', 'root_cut_angle', fallback=math.pi)
    budget = memory_budget(config, args.budget_mb)

    ns = feasible_ns(triangulation, parse_range(args.N), budget)
    if len(ns) < 2:
        logger.error(f"Not enough feasible N for a fit: {ns}")
        return 1
    workers = config.getint('Computation', 'sweep_workers', fallback=2)
    fit = sweep(triangulation, decoration, ns, cut_angle, budget, workers=workers)

    if args.plot:
        plot_growth(fit, args.plot)
    if args.store:
        SweepRecord(open_database(config).connect()).save(
            result_key(triangulation, decoration), fit, source=str(args.input))

    if args.emit == "csv":
        exporter = CSVExporter(
            config.get('Export', 'csv_encoding', fallback='utf-8-sig'),
            config.get('Export', 'float_format', fallback='%.12g'),
        )
        if args.output:
            exporter.export_asymptotics(fit, args.output)
        else:
            print(fit.to_dataframe().to_csv(index=False), end="")
        return 0

    data = fit.to_dict()
    if args.probe:
        data["probe"] = complex_probe(triangulation, decoration, ns, cut_angle, budget, workers=workers).to_dict()
    _print_json(data, args.output)
    return 0


def cmd_scissors(args, config) -> int:
    from controllers.scissors import class_of, load_chain, verify_witness
    from utils.triangulation_io import load_decorated

    triangulation, decoration = load_decorated(args.input)
    data = {"class": class_of(triangulation, decoration).to_dict()}
    if args.witness:
        from controllers.scissors import build_witness
        chain = load_chain(args.witness)
        witness = build_witness(triangulation, decoration, chain)
        data["witness_verified"] = verify_witness(witness, triangulation, decoration)
    _print_json(data, args.output)
    return 0


def cmd_sample(args, config) -> int:
    from controllers.scissors import save_chain
    from utils.sample_data import figure_eight_document, sample_chain, samples
    from utils.triangulation_io import save_document

    if args.name == "figure-eight":
        _print_json(figure_eight_document(), args.output)
        return 0
    exact = args.exact or config.getboolean('Computation', 'exact_mode', fallback=False)
    triangulation, decoration = samples(exact)[args.name]
    save_document(args.output, triangulation, decoration)
    if args.chain:
        save_chain(sample_chain(triangulation, decoration), args.chain)
    return 0


def cmd_gui(args, config) -> int:
    """GUI起動"""
    from PySide6.QtWidgets import QApplication
    from views.main_window import MainWindow

    logger = logging.getLogger(__name__)
    app = QApplication.instance() or QApplication(sys.argv)
    app.setApplicationName("量子双曲不変量 計算システム")
    app.setApplicationVersion("1.0.0")

    theme = config.get('UI', 'theme', fallback='Fusion')
    app.setStyle(theme)
    logger.info(f"Qt Style: {theme}")

    font = app.font()
    font.setPointSize(config.getint('UI', 'font_size', fallback=10))
    app.setFont(font)

    stylesheet_path = config.get('UI', 'style_sheet', fallback='')
    if stylesheet_path:
        load_stylesheet(app, stylesheet_path)

    database = open_database(config)
    if config.getboolean('Database', 'auto_backup_on_startup', fallback=False):
        backup_path = database.backup(Path(config.get('Database', 'backup_dir', fallback='backups')))
        if backup_path:
            logger.info(f"Auto backup created: {backup_path}")
    if not database.integrity_check():
        logger.warning("Database integrity check: FAILED")

    main_window = MainWindow(database, config)
    main_window.show()
    logger.info("Main window displayed")

    exit_code = app.exec()
    database.close()
    logger.info("Application exited normally")
    return exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qhi", description="Quantum hyperbolic invariants")
    parser.add_argument("--config", default="config.ini")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transit", help="apply a move or replay a witness chain")
    p.add_argument("input")
    p.add_argument("--move", choices=("2-3", "3-2", "bubble", "inverse-bubble"))
    p.add_argument("--site")
    p.add_argument("--link-edge", type=int, default=None)
    p.add_argument("--replay")
    p.add_argument("--witness")
    p.add_argument("--allow-nonadmissible", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_transit)

    p = sub.add_parser("idealize", help="idealize a decorated triangulation")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--edge-csv")
    p.set_defaults(func=cmd_idealize)

    p = sub.add_parser("statesum", help="evaluate the state sum at one N")
    p.add_argument("input")
    p.add_argument("--N", type=int)
    p.add_argument("--cut-angle", type=float)
    p.add_argument("--plan", choices=PLAN_METHODS, default="auto")
    p.add_argument("--emit", default="json")
    p.add_argument("--budget-mb", type=int)
    p.add_argument("--store", action="store_true")
    p.set_defaults(func=cmd_statesum)

    p = sub.add_parser("volume", help="volume and dilogarithmic invariant")
    p.add_argument("input")
    p.add_argument("--flattening", choices=("auto", "file"), default="auto")
    p.add_argument("--csv")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("asymptotics", help="sweep N and fit the growth rate")
    p.add_argument("input")
    p.add_argument("--N", default="3:9:2")
    p.add_argument("--emit", choices=("json", "csv"), default="json")
    p.add_argument("--plot")
    p.add_argument("--probe", action="store_true")
    p.add_argument("--budget-mb", type=int)
    p.add_argument("--store", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_asymptotics)

    p = sub.add_parser("scissors", help="formal sum class and witness verification")
    p.add_argument("input")
    p.add_argument("--witness")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_scissors)

    p = sub.add_parser("sample", help="write a bundled sample")
    p.add_argument("name", choices=(
        "simplex-boundary", "double-tetrahedron", "bubbled-double-tetrahedron",
        "collapsed-simplex-boundary", "hopf-link-join", "figure-eight",
    ))
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--chain")
    p.add_argument("--exact", action="store_true")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("gui", help="open the PySide6 window")
    p.set_defaults(func=cmd_gui)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """メイン関数"""
    args = build_parser().parse_args(argv)
    config = load_config(args.config)
    logger = setup_logging(config, args.log_level)

    try:
        return args.func(args, config)
    except (QHIError, ValueError) as e:
        logger.error(f"Failed to run {args.command}: {e}")
        return 2
    except Exception as e:
        logger.critical(f"Critical error: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
