"""
デコレーションモデル
分岐・ボレル値1-コサイクル・整数チャージと大域条件の検証
"""
import logging
from dataclasses import dataclass, field, replace
from itertools import combinations, product
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from models.triangulation import (
    EDGES, FACES, Triangulation, edge_index, is_fullable, perm_sign,
    validate_hamiltonian,
)
from utils.exceptions import CoherentFace, NoTotalOrder, InvalidDecoration
from utils.numbers import Number, conj, is_exact, is_zero, simplify, to_complex

logger = logging.getLogger(__name__)

# b-位置で見た対辺の組 (e0|e0'), (e1|e1'), (e2|e2')
POSITION_PAIRS: Tuple[Tuple[Tuple[int, int], Tuple[int, int]], ...] = (
    ((0, 1), (2, 3)),
    ((1, 2), (0, 3)),
    ((0, 2), (1, 3)),
)

COCYCLE_TOL = 1e-12


@dataclass(frozen=True)
class BorelValue:
    """上三角行列 [[t, x], [0, 1/t]]"""
    t: Number
    x: Number

    def __mul__(self, other: "BorelValue") -> "BorelValue":
        return BorelValue(
            simplify(self.t * other.t),
            simplify(self.t * other.x + self.x / other.t),
        )

    def inverse(self) -> "BorelValue":
        return BorelValue(simplify(1 / self.t), simplify(-self.x))

    def conjugate(self) -> "BorelValue":
        return BorelValue(conj(self.t), conj(self.x))

    def scaled(self, factor: Number) -> "BorelValue":
        return BorelValue(self.t, simplify(factor * self.x))

    def is_full(self) -> bool:
        return not is_zero(self.x)

    def matrix(self) -> np.ndarray:
        t = to_complex(self.t)
        return np.array([[t, to_complex(self.x)], [0, 1 / t]], dtype=complex)

    def close_to(self, other: "BorelValue", tol: float = COCYCLE_TOL) -> bool:
        if is_exact(self.t) and is_exact(self.x) and is_exact(other.t) and is_exact(other.x):
            return is_zero(self.t - other.t) and is_zero(self.x - other.x)
        for a, b in ((self.t, other.t), (self.x, other.x)):
            a, b = to_complex(a), to_complex(b)
            if abs(a - b) > tol * (1 + abs(a) + abs(b)):
                return False
        return True

    def to_dict(self) -> Dict[str, List[float]]:
        t, x = to_complex(self.t), to_complex(self.x)
        return {"t": [t.real, t.imag], "x": [x.real, x.imag]}


@dataclass(frozen=True)
class Branching:
    """
    分岐（頂点の全順序）と符号

    order[k] は b-位置 k の頂点名
    """
    order: Tuple[int, int, int, int]
    sign: int = 1

    @property
    def position(self) -> Tuple[int, ...]:
        pos = [0, 0, 0, 0]
        for k, v in enumerate(self.order):
            pos[v] = k
        return tuple(pos)

    def oriented(self, u: int, v: int) -> bool:
        """辺 [u, v] が u から v へ向くか"""
        pos = self.position
        return pos[u] < pos[v]

    def edge_orientations(self) -> Tuple[bool, ...]:
        """頂点名の小さい方から大きい方へ向く辺は True"""
        return tuple(self.oriented(u, v) for u, v in EDGES)

    def edge_at(self, i: int, j: int) -> int:
        """b-位置 i, j の頂点を結ぶ辺番号"""
        return edge_index(self.order[i], self.order[j])

    def face_position(self, f: int) -> int:
        """面 f (頂点 f の対面) の対頂点の b-位置"""
        return self.position[f]

    def reversed(self) -> "Branching":
        return Branching(tuple(reversed(self.order)), -self.sign)


@dataclass(frozen=True)
class DecoratedTetrahedron:
    """D-四面体 *(Δ, b, z, c)"""
    branching: Branching
    cocycle: Tuple[BorelValue, ...]
    charge: Tuple[int, ...]

    @property
    def sign(self) -> int:
        return self.branching.sign

    def value_at(self, i: int, j: int) -> BorelValue:
        """b-位置 i < j の辺のコサイクル値"""
        return self.cocycle[self.branching.edge_at(i, j)]

    def pair_charges(self) -> Tuple[int, int, int]:
        return tuple(self.charge[self.branching.edge_at(*pair[0])] for pair in POSITION_PAIRS)

    def is_full(self) -> bool:
        return all(z.is_full() for z in self.cocycle)

    def key(self) -> Tuple:
        """多重集合比較用のキー"""
        values = tuple(
            (round(to_complex(z.t).real, 12), round(to_complex(z.t).imag, 12),
             round(to_complex(z.x).real, 12), round(to_complex(z.x).imag, 12))
            for z in self.cocycle
        )
        return (self.branching.order, self.sign, values, self.charge)


def check_branching(orientations: Sequence[bool], sign: int = 1) -> Branching:
    """
    6辺の向きから分岐を構成

    orientations[i] が True なら EDGES[i] は頂点名の小さい方から向く
    """
    if len(orientations) != 6:
        raise NoTotalOrder(f"Expected 6 edge orientations, got {len(orientations)}")

    def directed(u: int, v: int) -> bool:
        value = bool(orientations[edge_index(u, v)])
        return value if u < v else not value

    for f, (a, b, c) in enumerate(FACES):
        if (directed(a, b) and directed(b, c) and directed(c, a)) or \
                (directed(b, a) and directed(c, b) and directed(a, c)):
            raise CoherentFace(f"Face {f} has a coherent boundary orientation")

    indegree = [sum(1 for u in range(4) if u != v and directed(u, v)) for v in range(4)]
    if sorted(indegree) != [0, 1, 2, 3]:
        raise NoTotalOrder(f"Edge orientations do not define a total order: {indegree}")
    order = tuple(sorted(range(4), key=lambda v: indegree[v]))
    return Branching(order, sign)


def s4_act(perm: Sequence[int], dtet: DecoratedTetrahedron) -> DecoratedTetrahedron:
    """
    S4 作用 ε(s)*(Δ, s(b), s(z), s(c))

    perm は b-位置の置換で、位置 k の頂点は位置 perm[k] へ移る
    """
    old = dtet.branching
    order = [0, 0, 0, 0]
    for k, v in enumerate(old.order):
        order[perm[k]] = v
    branching = Branching(tuple(order), old.sign * perm_sign(perm))

    cocycle = list(dtet.cocycle)
    for i, (u, v) in enumerate(EDGES):
        if old.oriented(u, v) != branching.oriented(u, v):
            cocycle[i] = cocycle[i].inverse()
    return DecoratedTetrahedron(branching, tuple(cocycle), dtet.charge)


def is_valid_charge(charge: Sequence[int]) -> bool:
    """対辺で等しく、3組の和が 1"""
    if any(charge[e] != charge[5 - e] for e in range(3)):
        return False
    return charge[0] + charge[1] + charge[2] == 1


@dataclass
class GlobalDecoration:
    """三角形分割上の (b, z, c)"""
    branchings: Tuple[Branching, ...]
    cocycle: Dict[int, BorelValue]
    charges: Tuple[Tuple[int, ...], ...]

    def tetrahedron(self, t: int, triangulation: Triangulation) -> DecoratedTetrahedron:
        values = tuple(self.cocycle[triangulation.edge_class[(t, e)]] for e in range(6))
        return DecoratedTetrahedron(self.branchings[t], values, tuple(self.charges[t]))

    def tetrahedra(self, triangulation: Triangulation) -> List[DecoratedTetrahedron]:
        return [self.tetrahedron(t, triangulation) for t in range(triangulation.n_tets)]

    def to_dict(self) -> Dict:
        return {
            "z": {str(s): z.to_dict() for s, z in sorted(self.cocycle.items())},
            "c": {
                f"{t}:{e}": int(c)
                for t, charge in enumerate(self.charges) for e, c in enumerate(charge)
            },
            "b": {str(t): list(b.order) for t, b in enumerate(self.branchings)},
            "signs": {str(t): b.sign for t, b in enumerate(self.branchings)},
        }


@dataclass(frozen=True)
class ChargeReport:
    """チャージ検証結果"""
    local_violations: Tuple[int, ...]
    edge_violations: Tuple[Tuple[int, int, int], ...]
    cycle_weights: Tuple[int, ...]

    @property
    def class_vanishes(self) -> bool:
        return all(w % 2 == 0 for w in self.cycle_weights)

    @property
    def valid(self) -> bool:
        return not self.local_violations and not self.edge_violations and self.class_vanishes


@dataclass
class DecorationReport:
    """D-三角形分割の各条件の項目別結果"""
    items: Dict[str, bool] = field(default_factory=dict)
    messages: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.items.values())

    def failed_items(self) -> List[str]:
        return [name for name, ok in self.items.items() if not ok]


def branching_compatible(triangulation: Triangulation, branchings: Sequence[Branching]) -> List[str]:
    """貼り合わせが分岐の順序を保つか。違反面のリスト"""
    problems = []
    for (t, f), (t2, _, perm) in sorted(triangulation.gluing.items()):
        pos, pos2 = branchings[t].position, branchings[t2].position
        for u, v in combinations(FACES[f], 2):
            if (pos[u] < pos[v]) != (pos2[perm[u]] < pos2[perm[v]]):
                problems.append(f"gluing {(t, f)} does not preserve branching")
                break
    return problems


def cocycle_check(triangulation: Triangulation, decoration: GlobalDecoration,
                  tol: float = COCYCLE_TOL) -> bool:
    """すべての面で z(e0) z(e1) = z(e2)"""
    return not cocycle_failures(triangulation, decoration, tol)


def cocycle_failures(triangulation: Triangulation, decoration: GlobalDecoration,
                     tol: float = COCYCLE_TOL) -> List[Tuple[int, int]]:
    failures = []
    for t in range(triangulation.n_tets):
        dtet = decoration.tetrahedron(t, triangulation)
        for j in range(4):
            i0, i1, i2 = [k for k in range(4) if k != j]
            lhs = dtet.value_at(i0, i1) * dtet.value_at(i1, i2)
            if not lhs.close_to(dtet.value_at(i0, i2), tol):
                failures.append((t, dtet.branching.order[j]))
    return failures


def non_full_edges(decoration: GlobalDecoration) -> List[int]:
    return sorted(s for s, z in decoration.cocycle.items() if not z.is_full())


def _face_between(f: int, g: int) -> int:
    """面 f と面 g の共通辺"""
    u, v = [w for w in range(4) if w not in (f, g)]
    return edge_index(u, v)


def charge_cycle_weights(triangulation: Triangulation,
                         charges: Sequence[Sequence[int]]) -> List[int]:
    """
    双対グラフの基本閉路ごとの重み

    四面体を面 f から入り面 g から出るとき、f と g の共通辺のチャージを加える
    """
    parent: Dict[int, Optional[Tuple[int, int, int]]] = {}
    depth: Dict[int, int] = {}
    tree_slots = set()
    for root in range(triangulation.n_tets):
        if root in parent:
            continue
        parent[root], depth[root] = None, 0
        queue = [root]
        while queue:
            t = queue.pop(0)
            for f in range(4):
                t2, f2, _ = triangulation.gluing[(t, f)]
                if t2 not in parent:
                    parent[t2] = (t, f2, f)
                    depth[t2] = depth[t] + 1
                    tree_slots.update({(t, f), (t2, f2)})
                    queue.append(t2)

    weights = []
    for (a, fa), (b, fb, _) in sorted(triangulation.gluing.items()):
        if (a, fa) in tree_slots or (a, fa) > (b, fb):
            continue
        # 移動の列 (出発四面体, 出る面, 到着四面体, 入る面)
        up_b, up_a = [], []
        x, y = b, a
        while depth[x] > depth[y]:
            p, face_child, face_parent = parent[x]
            up_b.append((x, face_child, p, face_parent))
            x = p
        while depth[y] > depth[x]:
            p, face_child, face_parent = parent[y]
            up_a.append((y, face_child, p, face_parent))
            y = p
        while x != y:
            p, face_child, face_parent = parent[x]
            up_b.append((x, face_child, p, face_parent))
            x = p
            p, face_child, face_parent = parent[y]
            up_a.append((y, face_child, p, face_parent))
            y = p
        hops = [(a, fa, b, fb)] + up_b + [
            (p, face_parent, child, face_child) for child, face_child, p, face_parent in reversed(up_a)
        ]
        total = 0
        for k, hop in enumerate(hops):
            nxt = hops[(k + 1) % len(hops)]
            tet, entry, exit_face = hop[2], hop[3], nxt[1]
            total += charges[tet][_face_between(entry, exit_face)]
        weights.append(total)
    return weights


def charge_check(triangulation: Triangulation, charges: Sequence[Sequence[int]],
                 hamiltonian: Optional[Iterable[int]] = None) -> ChargeReport:
    """
    チャージの検証

    H 以外の辺で和 2、H の辺で和 0、[c] の消滅
    """
    hamiltonian = set(triangulation.hamiltonian if hamiltonian is None else hamiltonian)
    local = tuple(t for t, c in enumerate(charges) if not is_valid_charge(c))

    edge_violations = []
    for s in range(triangulation.n_edges):
        total = sum(charges[t][e] for t, e in triangulation.edge_preimages(s))
        expected = 0 if s in hamiltonian else 2
        if total != expected:
            edge_violations.append((s, total, expected))

    weights = charge_cycle_weights(triangulation, charges)
    return ChargeReport(local, tuple(edge_violations), tuple(weights))


def orientation_failures(triangulation: Triangulation,
                         branchings: Sequence[Branching]) -> List[Tuple[int, int]]:
    """符号と分岐の向きが大域的な向きを定めるか"""
    failures = []
    local = [b.sign * perm_sign(b.order) for b in branchings]
    for (t, f), (t2, _, perm) in sorted(triangulation.gluing.items()):
        if local[t] * local[t2] * perm_sign(perm) != -1:
            failures.append((t, f))
    return failures


def validate_d_triangulation(triangulation: Triangulation,
                             decoration: GlobalDecoration) -> DecorationReport:
    """分岐・コサイクル・チャージの各条件とフル性・H の検証"""
    report = DecorationReport()

    try:
        if len(decoration.branchings) != triangulation.n_tets or \
                len(decoration.charges) != triangulation.n_tets or \
                set(decoration.cocycle) != set(range(triangulation.n_edges)):
            raise InvalidDecoration("Decoration does not match the triangulation")

        problems = branching_compatible(triangulation, decoration.branchings)
        report.items["branching"] = not problems
        report.messages.extend(problems)

        failures = cocycle_failures(triangulation, decoration) if not problems else [(-1, -1)]
        report.items["cocycle"] = not failures
        if failures:
            report.messages.append(f"cocycle condition fails on faces {failures[:5]}")

        non_full = non_full_edges(decoration)
        report.items["fullness"] = not non_full
        if non_full:
            report.messages.append(f"non-full edges: {non_full}")

        report.items["fullable"] = is_fullable(triangulation)

        orientation = orientation_failures(triangulation, decoration.branchings)
        report.items["orientation"] = not orientation
        if orientation:
            report.messages.append(f"signs disagree with branching orientation at {orientation[:5]}")

        h_report = validate_hamiltonian(triangulation)
        report.items["hamiltonian"] = h_report.valid
        report.messages.extend(h_report.problems)

        charges = charge_check(triangulation, decoration.charges)
        report.items["charge"] = not charges.local_violations
        report.items["edge_sums"] = not charges.edge_violations
        report.items["charge_class"] = charges.class_vanishes
        if charges.edge_violations:
            report.messages.append(f"charge sum violations: {list(charges.edge_violations)[:5]}")

    except InvalidDecoration as e:
        logger.error(f"Failed to validate decoration: {e}")
        report.items["shape"] = False
        report.messages.append(str(e))

    logger.debug(f"Decoration report: {report.items}")
    return report


# --- 構成補助 ---

def induced_branchings(triangulation: Triangulation, rank: Sequence[int],
                       orientation_sign: int = 1) -> Tuple[Branching, ...]:
    """頂点類の全順序から誘導される分岐と符号"""
    if triangulation.orientation is None:
        raise InvalidDecoration("Triangulation is not orientable")
    branchings = []
    for t in range(triangulation.n_tets):
        keys = [rank[triangulation.vertex_class[(t, v)]] for v in range(4)]
        if len(set(keys)) != 4:
            raise InvalidDecoration(f"Tetrahedron {t} has repeated vertex classes")
        order = tuple(sorted(range(4), key=lambda v: keys[v]))
        sign = orientation_sign * triangulation.orientation[t] * perm_sign(order)
        branchings.append(Branching(order, sign))
    return tuple(branchings)


def coboundary_cocycle(triangulation: Triangulation, branchings: Sequence[Branching],
                       vertex_values: Mapping[int, BorelValue]) -> Dict[int, BorelValue]:
    """z([vi, vj]) = u(vi)^{-1} u(vj)"""
    cocycle = {}
    for s in range(triangulation.n_edges):
        t, e = triangulation.edge_rep(s)
        u, v = EDGES[e]
        if not branchings[t].oriented(u, v):
            u, v = v, u
        tail = vertex_values[triangulation.vertex_class[(t, u)]]
        head = vertex_values[triangulation.vertex_class[(t, v)]]
        cocycle[s] = tail.inverse() * head
    return cocycle


def rescale(decoration: GlobalDecoration, factor: Number) -> GlobalDecoration:
    """射影的スケール x -> λx"""
    return replace(decoration, cocycle={s: z.scaled(factor) for s, z in decoration.cocycle.items()})


def mirror(decoration: GlobalDecoration) -> GlobalDecoration:
    """
    (-W, L, ρ*) に対応するデコレーション

    符号反転・分岐反転・逆向きに読んだ共役コサイクル
    """
    return GlobalDecoration(
        branchings=tuple(b.reversed() for b in decoration.branchings),
        cocycle={s: z.inverse().conjugate() for s, z in decoration.cocycle.items()},
        charges=decoration.charges,
    )


def all_branchings() -> List[Branching]:
    """1つの四面体上の分岐をすべて列挙 (2^6 通りの向きから)"""
    found = []
    for bits in product((False, True), repeat=6):
        try:
            found.append(check_branching(bits))
        except (CoherentFace, NoTotalOrder):
            continue
    return found
