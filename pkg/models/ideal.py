"""
イデアル四面体モデル
モジュラー三つ組・イデアル化写像・辺積条件・組合せ的平坦化
"""
import cmath
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from models.decoration import (
    POSITION_PAIRS, Branching, DecoratedTetrahedron, GlobalDecoration,
)
from models.triangulation import EDGES, Triangulation
from utils.exceptions import DegenerateModulus, NoSolution, NotFull
from utils.integer_lattice import shortest_solution, solve_integer_system
from utils.numbers import Number, is_zero, simplify, to_complex

logger = logging.getLogger(__name__)

EDGE_PRODUCT_TOL = 1e-10


@dataclass(frozen=True)
class ModularTriple:
    """(w0, w1, w2) with w0 w1 w2 = -1, w0 w1 - w1 = -1"""
    w0: Number
    w1: Number
    w2: Number

    def __post_init__(self):
        for w in (self.w0, self.w1, self.w2):
            if is_zero(w) or is_zero(w - 1):
                raise DegenerateModulus(f"Modulus {w} is 0 or 1")

    def __getitem__(self, k: int) -> Number:
        return (self.w0, self.w1, self.w2)[k]

    def as_complex(self) -> Tuple[complex, complex, complex]:
        return tuple(to_complex(w) for w in (self.w0, self.w1, self.w2))

    @property
    def is_flat(self) -> bool:
        """実モジュラス (退化した四面体)"""
        return abs(to_complex(self.w0).imag) < 1e-14


def complete_triple(w0: Number) -> ModularTriple:
    """w0 から (w0, (1-w0)^-1, (1-w1)^-1) を作る"""
    if is_zero(w0) or is_zero(w0 - 1):
        raise DegenerateModulus(f"Modulus {w0} is 0 or 1")
    w1 = simplify(1 / (1 - w0))
    w2 = simplify(1 / (1 - w1))
    return ModularTriple(w0, w1, w2)


@dataclass(frozen=True)
class IdealTetrahedron:
    """I-四面体 *(Δ, b, w, c)"""
    branching: Branching
    moduli: ModularTriple
    charge: Tuple[int, ...]

    @property
    def sign(self) -> int:
        return self.branching.sign

    def pair_of_edge(self, e: int) -> int:
        """頂点名の辺 e が属する対辺の組 (0, 1, 2)"""
        pos = self.branching.position
        u, v = EDGES[e]
        pair = tuple(sorted((pos[u], pos[v])))
        for k, (first, second) in enumerate(POSITION_PAIRS):
            if pair in (first, second):
                return k
        raise ValueError(f"Edge {e} not found")

    def modulus_at(self, e: int) -> Number:
        return self.moduli[self.pair_of_edge(e)]

    def signed_modulus_at(self, e: int) -> complex:
        """w(e)^* = w(e)^{sign}"""
        return to_complex(self.modulus_at(e)) ** self.sign

    def key(self) -> Tuple:
        w = to_complex(self.moduli.w0)
        return (self.branching.order, self.sign, round(w.real, 12), round(w.imag, 12), self.charge)


def cross_ratio(v0: Number, v1: Number, v2: Number, v3: Number) -> Number:
    """(v2 - v1)(v3 - v0) / ((v2 - v0)(v3 - v1))"""
    return simplify((v2 - v1) * (v3 - v0) / ((v2 - v0) * (v3 - v1)))


def shape_parameters(dtet: DecoratedTetrahedron) -> Tuple[Number, Number, Number]:
    """p0 = x(e0)x(e0'), p1 = x(e1)x(e1'), p2 = -x(e2)x(e2')"""
    p = []
    for k, (first, second) in enumerate(POSITION_PAIRS):
        value = dtet.value_at(*first).x * dtet.value_at(*second).x
        p.append(simplify(-value if k == 2 else value))
    return tuple(p)


def idealize(dtet: DecoratedTetrahedron) -> IdealTetrahedron:
    """
    イデアル化 F: w_i = -p_{i+1} / p_{i+2}

    Parameters:
    -----------
    dtet : DecoratedTetrahedron
        フルなコサイクルをもつ D-四面体

    Returns:
    --------
    IdealTetrahedron
    """
    if not dtet.is_full():
        raise NotFull("Idealization needs a full cocycle")
    p = shape_parameters(dtet)
    if any(is_zero(v) for v in p):
        raise DegenerateModulus(f"Vanishing shape parameter: {p}")
    w = [simplify(-p[(i + 1) % 3] / p[(i + 2) % 3]) for i in range(3)]
    return IdealTetrahedron(dtet.branching, ModularTriple(*w), dtet.charge)


@dataclass
class EdgeProductReport:
    """各辺まわりの符号付きモジュラス積"""
    products: Dict[int, complex]
    flat_tetrahedra: List[int]
    tol: float = EDGE_PRODUCT_TOL

    @property
    def deviations(self) -> Dict[int, float]:
        return {s: abs(p - 1) for s, p in self.products.items()}

    @property
    def passed(self) -> bool:
        return all(d <= self.tol for d in self.deviations.values())

    def to_dataframe(self) -> pd.DataFrame:
        rows = [
            {"edge": s, "product_re": p.real, "product_im": p.imag, "deviation": abs(p - 1)}
            for s, p in sorted(self.products.items())
        ]
        return pd.DataFrame(rows, columns=["edge", "product_re", "product_im", "deviation"])


def edge_products(triangulation: Triangulation, ideal_tets: Sequence[IdealTetrahedron],
                  tol: float = EDGE_PRODUCT_TOL) -> EdgeProductReport:
    products = {}
    for s in range(triangulation.n_edges):
        value = 1 + 0j
        for t, e in triangulation.edge_preimages(s):
            value *= ideal_tets[t].signed_modulus_at(e)
        products[s] = value
    flat = [t for t, tet in enumerate(ideal_tets) if tet.moduli.is_flat]
    return EdgeProductReport(products, flat, tol)


def idealize_triangulation(triangulation: Triangulation, decoration: GlobalDecoration,
                           tol: float = EDGE_PRODUCT_TOL) -> Tuple[List[IdealTetrahedron], EdgeProductReport]:
    """全四面体のイデアル化と辺積レポート"""
    ideal_tets = [idealize(dtet) for dtet in decoration.tetrahedra(triangulation)]
    report = edge_products(triangulation, ideal_tets, tol)
    if not report.passed:
        logger.warning(f"Edge product condition fails: max deviation {max(report.deviations.values()):.3e}")
    return ideal_tets, report


# --- 平坦化 ---

def principal_logs(w0: Number) -> Tuple[complex, complex, complex]:
    """(Log w0, -Log(1 - w0), 残り) 整数シフト前の対数パラメータ"""
    w = to_complex(w0)
    l0 = cmath.log(w)
    l1 = -cmath.log(1 - w)
    return l0, l1, -l0 - l1


def log_parameters(w0: Number, p: int, q: int) -> Tuple[complex, complex, complex]:
    """l0 = Log w0 + p pi i, l1 = -Log(1 - w0) + q pi i, l2 = -l0 - l1"""
    base0, base1, _ = principal_logs(w0)
    l0 = base0 + p * cmath.pi * 1j
    l1 = base1 + q * cmath.pi * 1j
    return l0, l1, -l0 - l1


@dataclass
class Flattening:
    """四面体ごとの整数 (p, q) と核格子"""
    p: Tuple[int, ...]
    q: Tuple[int, ...]
    kernel: np.ndarray

    def log_parameters(self, ideal_tets: Sequence[IdealTetrahedron]) -> List[Tuple[complex, complex, complex]]:
        return [log_parameters(tet.moduli.w0, p, q) for tet, p, q in zip(ideal_tets, self.p, self.q)]

    def shifted(self, combination: Sequence[int]) -> "Flattening":
        """核格子の元を加えた別の平坦化"""
        delta = self.kernel @ np.array(combination, dtype=np.int64)
        x = np.array([v for pq in zip(self.p, self.q) for v in pq], dtype=np.int64) + delta
        return Flattening(tuple(int(v) for v in x[0::2]), tuple(int(v) for v in x[1::2]), self.kernel)


# 対辺の組 k における (p, q) の係数
_PAIR_COEFFICIENTS = ((1, 0), (0, 1), (-1, -1))


def flattening_system(triangulation: Triangulation,
                      ideal_tets: Sequence[IdealTetrahedron]) -> Tuple[np.ndarray, np.ndarray]:
    """
    辺ごとの Σ sign * l = 0 を整数系 A (p, q) = b に書き換える

    Returns:
    --------
    (A, b) で b は実数 (整数であるべき値)
    """
    n = len(ideal_tets)
    matrix = np.zeros((triangulation.n_edges, 2 * n), dtype=np.int64)
    rhs = np.zeros(triangulation.n_edges, dtype=complex)
    for s in range(triangulation.n_edges):
        for t, e in triangulation.edge_preimages(s):
            tet = ideal_tets[t]
            k = tet.pair_of_edge(e)
            cp, cq = _PAIR_COEFFICIENTS[k]
            matrix[s, 2 * t] += tet.sign * cp
            matrix[s, 2 * t + 1] += tet.sign * cq
            rhs[s] -= tet.sign * principal_logs(tet.moduli.w0)[k]
    return matrix, rhs / (cmath.pi * 1j)


def solve_flattening(ideal_tets: Sequence[IdealTetrahedron], triangulation: Triangulation,
                     hamiltonian: Optional[Sequence[int]] = None, tol: float = 1e-8) -> Flattening:
    """
    組合せ的平坦化を求める

    辺積条件を満たすイデアル四面体に対し、最大ノルム最小の整数解を返す
    """
    matrix, rhs = flattening_system(triangulation, ideal_tets)
    rounded = np.rint(rhs.real)
    if np.any(np.abs(rhs.imag) > tol) or np.any(np.abs(rhs.real - rounded) > tol):
        raise NoSolution("Edge log-sums are not integer multiples of pi i")
    x0, kernel = solve_integer_system(matrix.tolist(), rounded.astype(np.int64).tolist())
    best = shortest_solution(x0, kernel)
    logger.debug(f"Flattening found with max norm {int(np.abs(best).max()) if best.size else 0}")
    return Flattening(tuple(int(v) for v in best[0::2]), tuple(int(v) for v in best[1::2]), kernel)


def flattening_residuals(triangulation: Triangulation, ideal_tets: Sequence[IdealTetrahedron],
                         flattening: Flattening) -> List[complex]:
    """辺ごとの Σ sign * l (0 であるべき値)"""
    logs = flattening.log_parameters(ideal_tets)
    residuals = []
    for s in range(triangulation.n_edges):
        total = 0j
        for t, e in triangulation.edge_preimages(s):
            total += ideal_tets[t].sign * logs[t][ideal_tets[t].pair_of_edge(e)]
        residuals.append(total)
    return residuals
