"""
量子層
デコレーションの mod N 簡約・巡回表現・巡回量子二重対数・c-6j テンソル
"""
import cmath
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from controllers.transit import CatalogEntry
from models.decoration import BorelValue, Branching, DecoratedTetrahedron, GlobalDecoration
from models.triangulation import EDGES, Triangulation
from utils.exceptions import (
    ConstraintViolated, EvenN, FormulaDomain, NotFull, PoleHit,
)
from utils.numbers import log_with_cut, nth_root, to_complex

logger = logging.getLogger(__name__)

# ω^k の判定に使う相対許容誤差
ROOT_MATCH_TOL = 1e-8


@dataclass(frozen=True)
class RootSystem:
    """奇数 N と N 乗根の分岐切断の角度"""
    n: int
    cut_angle: float = math.pi

    def __post_init__(self):
        if self.n < 3 or self.n % 2 == 0:
            raise EvenN(f"N must be odd and at least 3, got {self.n}")

    @property
    def omega(self) -> complex:
        return cmath.exp(2j * math.pi / self.n)

    def root(self, value) -> complex:
        return nth_root(value, self.n, self.cut_angle)

    def log(self, value) -> complex:
        return log_with_cut(value, self.cut_angle)

    def half(self, c: int) -> int:
        """c / 2 mod N (2 の逆元を掛ける)"""
        return (c * pow(2, -1, self.n)) % self.n

    def to_dict(self) -> Dict:
        return {"N": self.n, "cut_angle": self.cut_angle}


@dataclass(frozen=True)
class CyclicRep:
    """
    N 次元巡回表現 r_N(e)

    K = a X, E = y Y (X e_j = ω^j e_j, Y e_j = e_{j+1}) で K^N = t, E^N = x
    """
    a: complex
    y: complex
    n: int

    def __post_init__(self):
        if abs(self.y) == 0:
            raise NotFull("Cyclic representation needs y != 0")

    def k_matrix(self) -> np.ndarray:
        omega = cmath.exp(2j * math.pi / self.n)
        return np.diag([self.a * omega ** j for j in range(self.n)])

    def e_matrix(self) -> np.ndarray:
        return self.y * np.roll(np.eye(self.n, dtype=complex), 1, axis=0)


@dataclass
class ReducedDecoration:
    """T_N: 辺ごとの (a, y) と四面体の辺ごとの c_N"""
    root_system: RootSystem
    reps: Dict[int, CyclicRep]
    half_charges: Tuple[Tuple[int, ...], ...]
    logs: Dict[int, complex]


def reduce_mod_n(triangulation: Triangulation, decoration: GlobalDecoration,
                 root_system: RootSystem) -> ReducedDecoration:
    """
    mod N 簡約

    固定した分岐で t, x の N 乗根を取り、c_N = c / 2 mod N を求める
    """
    reps = {}
    logs = {}
    for s, z in sorted(decoration.cocycle.items()):
        if not z.is_full():
            raise NotFull(f"Edge {s} is not full")
        reps[s] = CyclicRep(root_system.root(z.t), root_system.root(z.x), root_system.n)
        logs[s] = root_system.log(z.x)
    half = tuple(tuple(root_system.half(c) for c in charge) for charge in decoration.charges)
    logger.debug(f"Reduced decoration for N={root_system.n}: {len(reps)} edges")
    return ReducedDecoration(root_system, reps, half, logs)


def cyclic_dilog(x: complex, y: complex, z: complex, n: int, big_n: int,
                 tol: float = 1e-10, step: int = 1) -> complex:
    """
    巡回量子二重対数 w(x, y, z | n) = Π_{j=1..n} y / (z - x ζ^j), ζ = ω^step

    Parameters:
    -----------
    x, y, z : complex
        x^N + y^N = z^N を満たす
    n : int
        0 <= n < N
    big_n : int
        N
    step : int
        ζ = ω^step の指数 (N と互いに素)
    """
    if not 0 <= n < big_n:
        raise ValueError(f"State {n} out of range for N={big_n}")
    if math.gcd(step, big_n) != 1:
        raise ValueError(f"ω^{step} is not a primitive root for N={big_n}")
    powers = (x ** big_n, y ** big_n, z ** big_n)
    lhs = powers[0] + powers[1]
    rhs = powers[2]
    if abs(lhs - rhs) > tol * (1 + sum(abs(p) for p in powers)):
        raise ConstraintViolated(f"x^N + y^N != z^N: {lhs} vs {rhs}")
    root = cmath.exp(2j * math.pi * step / big_n)
    value = 1 + 0j
    for j in range(1, n + 1):
        denominator = z - x * root ** j
        if abs(denominator) < 1e-14:
            raise PoleHit(f"Pole at j={j}: z = x ζ^j")
        value *= y / denominator
    return value


# ---------------------------------------------------------------------------
# クレブシュ-ゴルダン写像と 6j テンソル
# ---------------------------------------------------------------------------

def _coproduct_e(rep_a: CyclicRep, rep_b: CyclicRep) -> np.ndarray:
    """Δ(E) = E ⊗ K^{-1} + K ⊗ E"""
    k_b_inv = np.linalg.inv(rep_b.k_matrix())
    return np.kron(rep_a.e_matrix(), k_b_inv) + np.kron(rep_a.k_matrix(), rep_b.e_matrix())


def weight_shift(rep_a: CyclicRep, rep_b: CyclicRep, rep_m: CyclicRep) -> int:
    """a_m = a_a a_b ω^k となる k"""
    n = rep_a.n
    ratio = rep_m.a / (rep_a.a * rep_b.a)
    k = int(round(cmath.phase(ratio) / (2 * math.pi / n))) % n
    if abs(ratio - cmath.exp(2j * math.pi * k / n)) > ROOT_MATCH_TOL * (1 + abs(ratio)):
        raise FormulaDomain(f"a_m / (a_a a_b) = {ratio} is not an N-th root of unity")
    return k


def clebsch_gordan(rep_a: CyclicRep, rep_b: CyclicRep, rep_m: CyclicRep) -> np.ndarray:
    """
    正準な埋め込み φ_c: V_m -> V_a ⊗ V_b (c = 0..N-1)

    φ_c(e_0) = e_c ⊗ e_{k-c}, φ_c(e_l) = y_m^{-l} Δ(E)^l φ_c(e_0)

    Returns:
    --------
    np.ndarray
        C[i, j, c, l] (e_i ⊗ e_j の係数)
    """
    n = rep_a.n
    k = weight_shift(rep_a, rep_b, rep_m)
    delta_e = _coproduct_e(rep_a, rep_b)
    result = np.zeros((n, n, n, n), dtype=complex)
    for c in range(n):
        vector = np.zeros(n * n, dtype=complex)
        vector[c * n + (k - c) % n] = 1
        for l in range(n):
            result[:, :, c, l] = vector.reshape(n, n)
            vector = delta_e @ vector / rep_m.y
    return result


def fourier_gauge(n: int) -> np.ndarray:
    """G[p, c] = ω^{-pc} / N (φ_c = Σ_p G[p, c] ψ_p)"""
    omega = cmath.exp(2j * math.pi / n)
    return np.array([[omega ** (-p * c) / n for c in range(n)] for p in range(n)])


def cyclic_clebsch_gordan(rep_a: CyclicRep, rep_b: CyclicRep, rep_m: CyclicRep) -> np.ndarray:
    """
    巡回量子二重対数で閉じた形に書いた埋め込み ψ_p: V_m -> V_a ⊗ V_b

    ψ_p(e_l) = Σ_i ω^{(p+l) i} e_i ⊗ e_{k+l-i} / w(-X ω^{1-k-p}, y_m, Y | l) (ζ = ω^{-2})。
    X = y_a / a_b, Y = a_a y_b で、二重対数の制約 -X^N + y_m^N = Y^N は
    x_m = t_a x_b + x_a / t_b と同じ。clebsch_gordan とは多重度の添字の
    fourier_gauge だけ異なる

    Returns:
    --------
    np.ndarray
        C[i, j, p, l]
    """
    n = rep_a.n
    k = weight_shift(rep_a, rep_b, rep_m)
    omega = cmath.exp(2j * math.pi / n)
    big_x = rep_a.y / rep_b.a
    big_y = rep_a.a * rep_b.y
    result = np.zeros((n, n, n, n), dtype=complex)
    for p in range(n):
        x = -big_x * omega ** ((1 - k - p) % n)
        for l in range(n):
            try:
                weight = cyclic_dilog(x, rep_m.y, big_y, l, n, step=-2)
            except (ConstraintViolated, PoleHit) as e:
                raise FormulaDomain(f"Cocycle relation fails for the intertwiner: {e}") from e
            for i in range(n):
                result[i, (k + l - i) % n, p, l] = omega ** (((p + l) * i) % n) / weight
    return result


def intertwiner_rank(rep_a: CyclicRep, rep_b: CyclicRep, rep_m: CyclicRep,
                     rel_tol: float = 1e-8) -> int:
    """(c, l) を列とする N² x N² 行列の数値ランク"""
    n = rep_a.n
    matrix = clebsch_gordan(rep_a, rep_b, rep_m).reshape(n * n, n * n)
    tol = rel_tol * np.linalg.norm(matrix)
    return int(np.linalg.matrix_rank(matrix, tol=tol))


def six_j(reps: Sequence[CyclicRep]) -> np.ndarray:
    """
    b-位置の辺 [01], [12], [23], [02], [13], [03] の表現から 6j 行列を作る

    L = (C_ab^m ⊗ id) C_mc^d と R = (id ⊗ C_bc^n) C_an^d の基底変換 R^{-1} L の
    V_d の e_0 ブロック。f[c2, c0, c1, c3] (c_j は b-位置 j の対面の多重度)。
    埋め込みは cyclic_clebsch_gordan で、clebsch_gordan との差 (各面の fourier_gauge)
    は状態和の縮約で打ち消し合う
    """
    rep_a, rep_b, rep_c, rep_m, rep_n, rep_d = reps
    n = rep_a.n
    c_ab_m = cyclic_clebsch_gordan(rep_a, rep_b, rep_m)
    c_mc_d = cyclic_clebsch_gordan(rep_m, rep_c, rep_d)
    c_bc_n = cyclic_clebsch_gordan(rep_b, rep_c, rep_n)
    c_an_d = cyclic_clebsch_gordan(rep_a, rep_n, rep_d)

    left = np.einsum("ijsm,mkrl->ijklrs", c_ab_m, c_mc_d).reshape(n ** 3, n ** 3)
    right = np.einsum("jkpv,ivql->ijklqp", c_bc_n, c_an_d).reshape(n ** 3, n ** 3)
    try:
        block = np.linalg.solve(right, left[:, : n * n])
    except np.linalg.LinAlgError as e:
        raise FormulaDomain(f"Singular recoupling matrix: {e}") from e
    return block[: n * n].reshape(n, n, n, n)


@dataclass
class StateTensor:
    """四面体の状態テンソル (軸は対頂点の名前順の面)"""
    entries: np.ndarray
    sign: int
    branching: Branching
    charge: Tuple[int, ...]
    n: int
    log_scale: complex = 0j

    def to_bytes(self, tet_id: int = 0) -> bytes:
        """ヘッダ (N, 四面体番号, 符号) と N^4 個の複素数 (行優先)"""
        header = np.array([self.n, tet_id, self.sign], dtype="<i4").tobytes()
        values = np.ascontiguousarray(self.entries * np.exp(self.log_scale), dtype="<c16")
        return header + values.tobytes()


def build_state_tensor(dtet: DecoratedTetrahedron, reps: Sequence[CyclicRep],
                       root_system: RootSystem, logs: Optional[Sequence[complex]] = None,
                       charged: bool = True) -> StateTensor:
    """
    c-6j テンソル

    Parameters:
    -----------
    dtet : DecoratedTetrahedron
        D-四面体
    reps : Sequence[CyclicRep]
        頂点名の辺 (EDGES の順) の巡回表現
    root_system : RootSystem
        N と根の分岐
    logs : Sequence[complex], optional
        辺ごとの Log x (charged のとき使う)
    charged : bool
        チャージによる正規化 Π exp(-(N-1) c / 2N Log x) を掛ける

    Returns:
    --------
    StateTensor
    """
    if not dtet.is_full():
        raise NotFull("State tensor needs a full cocycle")
    n = root_system.n
    b = dtet.branching
    by_position = [reps[b.edge_at(i, j)] for i, j in ((0, 1), (1, 2), (2, 3), (0, 2), (1, 3), (0, 3))]
    f = six_j(by_position)
    if b.sign > 0:
        tensor = f.transpose(1, 2, 0, 3)
    else:
        try:
            inverse = np.linalg.inv(f.reshape(n * n, n * n)).reshape(n, n, n, n)
        except np.linalg.LinAlgError as e:
            raise FormulaDomain(f"6j matrix is singular: {e}") from e
        tensor = inverse.transpose(3, 0, 2, 1)
    # b-位置の面から頂点名の面へ
    tensor = tensor.transpose(list(b.position))

    log_scale = 0j
    if charged:
        if logs is None:
            logs = [root_system.log(z.x) for z in dtet.cocycle]
        log_scale = sum(
            -(n - 1) * c * logs[e] / (2 * n) for e, c in enumerate(dtet.charge)
        )
    if not np.all(np.isfinite(tensor)):
        raise FormulaDomain("Non-finite entries in the state tensor")
    return StateTensor(tensor, b.sign, b, tuple(dtet.charge), n, log_scale)


def state_tensors(triangulation: Triangulation, decoration: GlobalDecoration,
                  reduced: ReducedDecoration, charged: bool = True) -> List[StateTensor]:
    """すべての四面体の状態テンソル"""
    tensors = []
    for t in range(triangulation.n_tets):
        classes = [triangulation.edge_class[(t, e)] for e in range(6)]
        tensors.append(build_state_tensor(
            decoration.tetrahedron(t, triangulation),
            [reduced.reps[s] for s in classes],
            reduced.root_system,
            [reduced.logs[s] for s in classes],
            charged,
        ))
    return tensors


# ---------------------------------------------------------------------------
# ペンタゴン関係
# ---------------------------------------------------------------------------

def _random_borel(rng: np.random.Generator) -> BorelValue:
    t = complex(rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5))
    x = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    return BorelValue(t, x)


def pentagon_defect(entry: CatalogEntry, root_system: RootSystem,
                    rng: Optional[np.random.Generator] = None) -> float:
    """
    カタログの型について、2側と3側の縮約の相対差

    5頂点に乱数のボレル値を置いた余境界コサイクルで調べる
    """
    rng = rng or np.random.default_rng(0)
    n = root_system.n
    while True:
        vertex_values = [_random_borel(rng) for _ in range(5)]
        values = {
            (p, q): vertex_values[p].inverse() * vertex_values[q]
            for p in range(5) for q in range(p + 1, 5)
        }
        if all(abs(to_complex(z.x)) > 1e-3 for z in values.values()):
            break
    reps = {
        pq: CyclicRep(root_system.root(z.t), root_system.root(z.x), n) for pq, z in values.items()
    }

    def tensor(omitted: int) -> Tuple[np.ndarray, List[frozenset]]:
        positions = [i for i in range(5) if i != omitted]
        cocycle = tuple(values[(positions[u], positions[v])] for u, v in EDGES)
        dtet = DecoratedTetrahedron(Branching((0, 1, 2, 3), entry.sign_of(omitted)), cocycle, (0,) * 6)
        edge_reps = [reps[(positions[u], positions[v])] for u, v in EDGES]
        state = build_state_tensor(dtet, edge_reps, root_system, charged=False)
        faces = [frozenset((omitted, positions[label])) for label in range(4)]
        return state.entries, faces

    def contract(omitted: Sequence[int]) -> Tuple[np.ndarray, List[frozenset]]:
        operands = [tensor(i) for i in omitted]
        all_faces = [face for _, faces in operands for face in faces]
        boundary = sorted((f for f in set(all_faces) if all_faces.count(f) == 1), key=sorted)
        letters = {face: chr(ord("a") + k) for k, face in enumerate(sorted(set(all_faces), key=sorted))}
        subscripts = ",".join("".join(letters[f] for f in faces) for _, faces in operands)
        output = "".join(letters[f] for f in boundary)
        return np.einsum(f"{subscripts}->{output}", *(entries for entries, _ in operands)), boundary

    lhs, lhs_faces = contract(entry.two_side)
    rhs, rhs_faces = contract(entry.three_side)
    if lhs_faces != rhs_faces:
        raise FormulaDomain("Boundary faces of the two sides differ")
    scale = max(np.abs(lhs).max(), 1e-300)
    defect = float(np.abs(lhs - rhs).max() / scale)
    logger.debug(f"Pentagon defect for {entry}: {defect:.3e}")
    return defect
