"""
状態和コントローラ
縮約順序の計画・対数スケールでの実行・Ψ, H, K の評価・拡張された重み付き状態和
"""
import cmath
import logging
import math
import string
import time
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from controllers.quantum import (
    ReducedDecoration, RootSystem, StateTensor, reduce_mod_n, state_tensors,
)
from models.decoration import GlobalDecoration, validate_d_triangulation
from models.triangulation import Triangulation
from utils.exceptions import (
    BudgetExceeded, FormulaDomain, InvalidDecoration, MultiplicityMismatch,
    StateSumOverflow,
)

logger = logging.getLogger(__name__)

# 複素数1要素のバイト数
ENTRY_BYTES = 16
DEFAULT_BUDGET = 512 * 1024 * 1024
EXHAUSTIVE_LIMIT = 6
NAIVE_STATE_LIMIT = 10 ** 7
# exp が倍精度に収まる実部の上限
MAX_EXPONENT = 700.0


# ---------------------------------------------------------------------------
# 縮約計画
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContractionStep:
    """2つのテンソル (right が None なら1つ) の縮約"""
    left: int
    right: Optional[int]
    result: int
    legs: Tuple[Hashable, ...]
    cost: int

    def to_dict(self) -> Dict:
        return {"left": self.left, "right": self.right, "result": self.result,
                "legs": [str(leg) for leg in self.legs], "cost": self.cost}


@dataclass
class ContractionPlan:
    """
    面の添字を共有するテンソルの対ごとの縮約列

    テンソル番号は入力が 0..k-1、以後の中間結果は k, k+1, ... の順に振る
    """
    operands: Tuple[Tuple[Hashable, ...], ...]
    steps: List[ContractionStep]
    size: int
    output: Tuple[Hashable, ...] = ()
    method: str = "greedy"
    peak_bytes: int = 0

    @property
    def cost(self) -> int:
        return sum(step.cost for step in self.steps)

    @property
    def naive_cost(self) -> int:
        """全状態の列挙 N^|F| x (テンソル数)"""
        distinct = {ix for op in self.operands for ix in op}
        return self.size ** len(distinct) * len(self.operands)

    def to_dict(self) -> Dict:
        return {
            "method": self.method,
            "cost": self.cost,
            "naive_cost": self.naive_cost,
            "peak_bytes": self.peak_bytes,
            "steps": [step.to_dict() for step in self.steps],
        }


class _Network:
    """部分集合ごとの残る添字を計算する補助"""

    def __init__(self, operands: Sequence[Tuple[Hashable, ...]], size: int):
        self.operands = [tuple(op) for op in operands]
        self.size = size
        counts = Counter(ix for op in self.operands for ix in op)
        self.output = tuple(sorted((ix for ix, c in counts.items() if c == 1), key=str))
        self._legs: Dict[FrozenSet[int], Tuple[Hashable, ...]] = {}

    def legs(self, subset: FrozenSet[int]) -> Tuple[Hashable, ...]:
        """部分集合を縮約した結果に残る添字"""
        if subset not in self._legs:
            inside = {ix for i in subset for ix in self.operands[i]}
            outside = {ix for i in range(len(self.operands)) if i not in subset for ix in self.operands[i]}
            kept = [ix for ix in inside if ix in outside or ix in self.output]
            self._legs[subset] = tuple(sorted(kept, key=str))
        return self._legs[subset]

    def operand_legs(self, subset: FrozenSet[int]) -> set:
        """縮約に入るときの添字 (入力テンソルは自己トレース分も含む)"""
        if len(subset) == 1:
            (i,) = subset
            return set(self.operands[i])
        return set(self.legs(subset))

    def step_cost(self, a: FrozenSet[int], b: FrozenSet[int]) -> int:
        return self.size ** len(self.operand_legs(a) | self.operand_legs(b))


def _greedy_order(network: _Network) -> List[Tuple[FrozenSet[int], FrozenSet[int]]]:
    """中間テンソルの大きさ最小 (同点ならコスト最小) の対から縮約する"""
    nodes = [frozenset([i]) for i in range(len(network.operands))]
    merges = []
    while len(nodes) > 1:
        best = None
        for a, b in combinations(nodes, 2):
            joined = a | b
            score = (network.size ** len(network.legs(joined)), network.step_cost(a, b))
            if best is None or score < best[0]:
                best = (score, a, b)
        _, a, b = best
        nodes = [node for node in nodes if node not in (a, b)] + [a | b]
        merges.append((a, b))
    return merges


def _optimal_order(network: _Network) -> List[Tuple[FrozenSet[int], FrozenSet[int]]]:
    """部分集合上の動的計画法で総コスト最小の縮約木を求める"""
    k = len(network.operands)
    best: Dict[FrozenSet[int], Tuple[int, Optional[Tuple[FrozenSet[int], FrozenSet[int]]]]] = {
        frozenset([i]): (0, None) for i in range(k)
    }
    for size in range(2, k + 1):
        for members in combinations(range(k), size):
            subset = frozenset(members)
            first, rest = members[0], members[1:]
            candidate = None
            # first を含む側 a を列挙して重複を避ける
            for r in range(len(rest)):
                for extra in combinations(rest, r):
                    a = frozenset((first,) + extra)
                    b = subset - a
                    cost = best[a][0] + best[b][0] + network.step_cost(a, b)
                    if candidate is None or cost < candidate[0]:
                        candidate = (cost, (a, b))
            best[subset] = candidate

    merges: List[Tuple[FrozenSet[int], FrozenSet[int]]] = []

    def unfold(subset: FrozenSet[int]) -> None:
        split = best[subset][1]
        if split is None:
            return
        a, b = split
        unfold(a)
        unfold(b)
        merges.append((a, b))

    unfold(frozenset(range(k)))
    return merges


def plan_network(index_lists: Sequence[Sequence[Hashable]], size: int,
                 budget: Optional[int] = DEFAULT_BUDGET,
                 exhaustive_limit: int = EXHAUSTIVE_LIMIT) -> ContractionPlan:
    """
    テンソルネットワークの縮約計画

    Parameters:
    -----------
    index_lists : Sequence[Sequence[Hashable]]
        テンソルごとの軸の添字 (同じ添字は同じ面)
    size : int
        各添字の次元 N
    budget : int, optional
        中間テンソルのメモリ上限 (バイト)
    exhaustive_limit : int
        この数以下のテンソルは全探索する

    Returns:
    --------
    ContractionPlan
    """
    if not index_lists:
        raise FormulaDomain("Empty tensor network")
    network = _Network(index_lists, size)
    k = len(network.operands)

    if k == 1:
        only = frozenset([0])
        steps = [ContractionStep(0, None, 1, network.output, network.step_cost(only, only))]
        method = "single"
    else:
        if k <= exhaustive_limit:
            merges, method = _optimal_order(network), "exhaustive"
        else:
            merges, method = _greedy_order(network), "greedy"
        ids = {frozenset([i]): i for i in range(k)}
        steps = []
        for a, b in merges:
            joined = a | b
            ids[joined] = k + len(steps)
            steps.append(ContractionStep(
                ids[a], ids[b], ids[joined], network.legs(joined), network.step_cost(a, b),
            ))

    sizes = [size ** len(set(op)) for op in network.operands] + [size ** len(s.legs) for s in steps]
    peak = max(sizes) * ENTRY_BYTES
    plan = ContractionPlan(
        operands=tuple(network.operands),
        steps=steps,
        size=size,
        output=network.output,
        method=method,
        peak_bytes=peak,
    )
    if budget is not None and peak > budget:
        raise BudgetExceeded(f"Contraction needs {peak} bytes, budget is {budget}")
    logger.debug(f"Plan ({method}): cost {plan.cost} vs naive {plan.naive_cost}, peak {peak} bytes")
    return plan


def plan_contraction(triangulation: Triangulation, n: int,
                     budget: Optional[int] = DEFAULT_BUDGET,
                     exhaustive_limit: int = EXHAUSTIVE_LIMIT) -> ContractionPlan:
    """三角形分割の面を添字とする縮約計画"""
    return plan_network(face_indices(triangulation), n, budget, exhaustive_limit)


def face_indices(triangulation: Triangulation) -> List[Tuple[int, ...]]:
    """四面体 t の軸 j (頂点 j の対面) の商の面番号"""
    return [
        tuple(triangulation.face_class[(t, j)] for j in range(4))
        for t in range(triangulation.n_tets)
    ]


def _subscripts(groups: Sequence[Sequence[Hashable]], output: Sequence[Hashable]) -> str:
    letters: Dict[Hashable, str] = {}
    for ix in [ix for group in groups for ix in group] + list(output):
        if ix not in letters:
            if len(letters) >= len(string.ascii_letters):
                raise FormulaDomain("Too many indices in a single contraction step")
            letters[ix] = string.ascii_letters[len(letters)]
    inputs = ",".join("".join(letters[ix] for ix in group) for group in groups)
    return f"{inputs}->{''.join(letters[ix] for ix in output)}"


def _normalized(array: np.ndarray) -> Tuple[np.ndarray, float]:
    """最大絶対値で割った配列とその対数"""
    scale = float(np.abs(array).max()) if array.size else 0.0
    if scale == 0.0 or not math.isfinite(scale):
        if not math.isfinite(scale):
            raise StateSumOverflow("Non-finite entries during contraction")
        return array, -math.inf
    return array / scale, math.log(scale)


def execute_plan(plan: ContractionPlan, tensors: Sequence[np.ndarray]) -> complex:
    """
    計画に従って縮約し、スカラーの対数を返す

    各段の結果を最大絶対値で正規化し、対数を別に積算する
    """
    if plan.output:
        raise FormulaDomain(f"Network has open indices {plan.output}")
    pool: Dict[int, Tuple[np.ndarray, Tuple[Hashable, ...]]] = {}
    log_total = 0.0
    for i, (tensor, operand) in enumerate(zip(tensors, plan.operands)):
        array, log_scale = _normalized(np.asarray(tensor, dtype=complex))
        if log_scale == -math.inf:
            return complex(-math.inf, 0.0)
        pool[i] = (array, operand)
        log_total += log_scale

    for step in plan.steps:
        groups = [pool.pop(step.left)]
        if step.right is not None:
            groups.append(pool.pop(step.right))
        expression = _subscripts([g[1] for g in groups], step.legs)
        array = np.einsum(expression, *(g[0] for g in groups))
        array, log_scale = _normalized(np.asarray(array))
        if log_scale == -math.inf:
            return complex(-math.inf, 0.0)
        log_total += log_scale
        pool[step.result] = (array, step.legs)

    (final, _), = pool.values()
    value = complex(final.reshape(-1)[0]) if final.size else 0j
    if value == 0:
        return complex(-math.inf, 0.0)
    return cmath.log(value) + log_total


# ---------------------------------------------------------------------------
# 重み
# ---------------------------------------------------------------------------

@dataclass
class WeightData:
    """頂点数・H 以外の辺の Log x・拡張形式の重複度 v0, v1, v2"""
    n_vertices: int
    edge_logs: Dict[int, complex]
    v0: Dict[int, int] = field(default_factory=dict)
    v1: Dict[int, int] = field(default_factory=dict)
    v2: Dict[int, int] = field(default_factory=dict)

    def log_weight(self, n: int) -> complex:
        """log(N^{-V} Π x(e)^{(N-1)/N})"""
        return -self.n_vertices * math.log(n) + sum(
            (n - 1) / n * log for log in self.edge_logs.values()
        )


def weight_data(triangulation: Triangulation, reduced: ReducedDecoration) -> WeightData:
    v0 = Counter(triangulation.vertex_class.values())
    v2 = Counter(triangulation.face_class.values())
    return WeightData(
        n_vertices=triangulation.n_vertices,
        edge_logs={
            s: reduced.logs[s] for s in range(triangulation.n_edges)
            if s not in triangulation.hamiltonian
        },
        v0=dict(v0),
        v1={s: triangulation.edge_valence(s) for s in range(triangulation.n_edges)},
        v2=dict(v2),
    )


def _exp(log_value: complex, name: str) -> complex:
    if log_value.real == -math.inf:
        return 0j
    if log_value.real > MAX_EXPONENT:
        raise StateSumOverflow(f"{name} exceeds double range: log|{name}| = {log_value.real:.3f}")
    return cmath.exp(log_value)


@dataclass
class StateSumResult:
    """Ψ, H, K = H^N を対数で保持する評価結果"""
    n: int
    log_psi: complex
    log_h: complex
    root_system: Optional[RootSystem] = None
    plan: Optional[ContractionPlan] = None
    elapsed: float = 0.0

    @property
    def psi(self) -> complex:
        return _exp(self.log_psi, "psi")

    @property
    def h(self) -> complex:
        return _exp(self.log_h, "H")

    @property
    def log_k(self) -> complex:
        return self.n * self.log_h

    @property
    def k(self) -> complex:
        return _exp(self.log_k, "K")

    @property
    def log_abs_k(self) -> float:
        return self.log_k.real

    @property
    def plan_cost(self) -> Optional[int]:
        return self.plan.cost if self.plan else None

    @property
    def naive_cost(self) -> Optional[int]:
        return self.plan.naive_cost if self.plan else None

    def to_dict(self) -> Dict:
        data = {
            "N": self.n,
            "log_psi": [self.log_psi.real, self.log_psi.imag],
            "log_h": [self.log_h.real, self.log_h.imag],
            "log_abs_k": self.log_abs_k,
            "elapsed": self.elapsed,
        }
        for name in ("psi", "h", "k"):
            try:
                value = getattr(self, name)
                data[name] = [value.real, value.imag]
            except StateSumOverflow:
                data[name] = None
        if self.root_system is not None:
            data["root_choice"] = self.root_system.to_dict()
        if self.plan is not None:
            data["plan"] = self.plan.to_dict()
        return data


def _prepare(triangulation: Triangulation, decoration: GlobalDecoration,
             root_system: RootSystem, charged: bool, validate: bool
             ) -> Tuple[ReducedDecoration, List[StateTensor]]:
    if validate:
        report = validate_d_triangulation(triangulation, decoration)
        if not report.passed:
            raise InvalidDecoration(f"Not a valid D-triangulation: {report.failed_items()}")
    reduced = reduce_mod_n(triangulation, decoration, root_system)
    return reduced, state_tensors(triangulation, decoration, reduced, charged)


def evaluate(triangulation: Triangulation, decoration: GlobalDecoration, root_system: RootSystem,
             plan: Optional[ContractionPlan] = None, budget: Optional[int] = DEFAULT_BUDGET,
             charged: bool = True, validate: bool = True) -> StateSumResult:
    """
    状態和 Ψ(T_N) と H(T_N) = Ψ N^{-V} Π_{e ∉ H} x(e)^{(N-1)/N}

    Parameters:
    -----------
    triangulation : Triangulation
        商複体
    decoration : GlobalDecoration
        (b, z, c)
    root_system : RootSystem
        N と N 乗根の分岐
    plan : ContractionPlan, optional
        省略時は plan_contraction で作る
    budget : int, optional
        中間テンソルのメモリ上限 (バイト)
    charged : bool
        チャージによる正規化を含めるか
    validate : bool
        事前に D-三角形分割の条件を検証するか

    Returns:
    --------
    StateSumResult
    """
    start = time.perf_counter()
    n = root_system.n
    try:
        reduced, tensors = _prepare(triangulation, decoration, root_system, charged, validate)
        if plan is None:
            plan = plan_contraction(triangulation, n, budget)
        log_psi = execute_plan(plan, [t.entries for t in tensors])
    except (FormulaDomain, BudgetExceeded) as e:
        logger.error(f"Failed to evaluate the state sum at N={n}: {e}")
        raise
    log_psi += sum(t.log_scale for t in tensors)
    log_h = log_psi + weight_data(triangulation, reduced).log_weight(n)
    result = StateSumResult(n, log_psi, log_h, root_system, plan, time.perf_counter() - start)
    logger.info(
        f"State sum N={n}: log|K| = {result.log_abs_k:.6f} "
        f"(plan cost {plan.cost}, naive {plan.naive_cost}, {result.elapsed:.3f}s)"
    )
    return result


def evaluate_naive(triangulation: Triangulation, decoration: GlobalDecoration,
                   root_system: RootSystem, charged: bool = True, validate: bool = True,
                   max_states: int = NAIVE_STATE_LIMIT) -> StateSumResult:
    """全状態 (面番号の辞書式順) を列挙する評価"""
    start = time.perf_counter()
    n = root_system.n
    n_faces = triangulation.n_faces
    work = n ** n_faces * triangulation.n_tets
    if work > max_states:
        raise BudgetExceeded(f"Naive enumeration needs {work} lookups, limit is {max_states}")
    reduced, tensors = _prepare(triangulation, decoration, root_system, charged, validate)

    states = np.indices((n,) * n_faces).reshape(n_faces, -1)
    product = np.ones(states.shape[1], dtype=complex)
    log_total = 0j
    for tensor, faces in zip(tensors, face_indices(triangulation)):
        entries, log_scale = _normalized(tensor.entries)
        if log_scale == -math.inf:
            product[:] = 0
            break
        product *= entries[tuple(states[q] for q in faces)]
        log_total += log_scale + tensor.log_scale
    total = complex(product.sum())
    log_psi = complex(-math.inf, 0.0) if total == 0 else cmath.log(total) + log_total
    log_h = log_psi + weight_data(triangulation, reduced).log_weight(n)
    logger.debug(f"Naive state sum over {states.shape[1]} states")
    return StateSumResult(n, log_psi, log_h, root_system, None, time.perf_counter() - start)


# ---------------------------------------------------------------------------
# 拡張された形式和の状態和
# ---------------------------------------------------------------------------

@dataclass
class AugmentedTetrahedron:
    """状態テンソルと、頂点・辺・面の各スロットの類と重複度"""
    tensor: StateTensor
    face_keys: Tuple[int, ...]
    vertex_keys: Tuple[int, ...]
    edge_keys: Tuple[int, ...]
    v0: Tuple[int, ...]
    v1: Tuple[int, ...]
    v2: Tuple[int, ...]
    edge_logs: Tuple[complex, ...]
    hamiltonian: Tuple[bool, ...]

    def log_phi(self, n: int) -> float:
        """log Π_w N^{-1/v0(w)}"""
        return -sum(1 / v for v in self.v0) * math.log(n)

    def log_omega(self, n: int) -> complex:
        """log Π_{e ∉ H} x(e)^{(N-1)/(v1(e) N)}"""
        return sum(
            (n - 1) / (v * n) * log
            for v, log, in_h in zip(self.v1, self.edge_logs, self.hamiltonian) if not in_h
        )


def augment(triangulation: Triangulation, decoration: GlobalDecoration,
            root_system: RootSystem, charged: bool = True) -> List[AugmentedTetrahedron]:
    """D-三角形分割から重複度付きの四面体の列を作る"""
    reduced = reduce_mod_n(triangulation, decoration, root_system)
    tensors = state_tensors(triangulation, decoration, reduced, charged)
    weights = weight_data(triangulation, reduced)
    terms = []
    for t, tensor in enumerate(tensors):
        vertices = tuple(triangulation.vertex_class[(t, v)] for v in range(4))
        edges = tuple(triangulation.edge_class[(t, e)] for e in range(6))
        faces = tuple(triangulation.face_class[(t, j)] for j in range(4))
        terms.append(AugmentedTetrahedron(
            tensor=tensor,
            face_keys=faces,
            vertex_keys=vertices,
            edge_keys=edges,
            v0=tuple(weights.v0[w] for w in vertices),
            v1=tuple(weights.v1[s] for s in edges),
            v2=tuple(weights.v2[q] for q in faces),
            edge_logs=tuple(reduced.logs[s] for s in edges),
            hamiltonian=tuple(s in triangulation.hamiltonian for s in edges),
        ))
    return terms


def _check_multiplicities(name: str, keys: Sequence[int], declared: Sequence[int]) -> None:
    counts = Counter(keys)
    for key, value in zip(keys, declared):
        if counts[key] != value:
            raise MultiplicityMismatch(
                f"{name} {key} occurs {counts[key]} times but carries multiplicity {value}"
            )


def evaluate_augmented(terms: Sequence[AugmentedTetrahedron], n: int,
                       budget: Optional[int] = DEFAULT_BUDGET) -> StateSumResult:
    """
    重みを四面体ごとに畳み込んだ状態和 H(Γ)

    Φ = Π N^{-1/v0(w)}, Ω = Π x(e)^{(N-1)/(v1(e) N)} を各四面体に掛けて縮約する
    """
    if not terms:
        raise FormulaDomain("Empty formal sum")
    start = time.perf_counter()
    _check_multiplicities("vertex", [k for t in terms for k in t.vertex_keys], [v for t in terms for v in t.v0])
    _check_multiplicities("edge", [k for t in terms for k in t.edge_keys], [v for t in terms for v in t.v1])
    _check_multiplicities("face", [k for t in terms for k in t.face_keys], [v for t in terms for v in t.v2])

    plan = plan_network([t.face_keys for t in terms], n, budget)
    log_psi = execute_plan(plan, [t.tensor.entries for t in terms])
    log_psi += sum(t.tensor.log_scale for t in terms)
    log_h = log_psi + sum(t.log_phi(n) + t.log_omega(n) for t in terms)
    logger.debug(f"Augmented state sum over {len(terms)} tetrahedra")
    return StateSumResult(n, log_psi, log_h, None, plan, time.perf_counter() - start)
