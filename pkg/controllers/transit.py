"""
移動エンジン
2-3 / 3-2 / バブル移動と分岐・コサイクル・チャージ・イデアルの各層の遷移
"""
import cmath
import logging
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

from models.decoration import (
    Branching, BorelValue, DecoratedTetrahedron, GlobalDecoration,
)
from models.ideal import (
    IdealTetrahedron, complete_triple, cross_ratio, log_parameters, principal_logs,
    shape_parameters,
)
from models.triangulation import (
    EDGES, FACES, FacePairing, Triangulation, build_quotient, edge_index,
)
from utils.exceptions import (
    BadValence, DegenerateModuli, FullnessLost, InvalidDecoration, NoSolution,
    NonBrancheable, NotAdjacent, NoValidCharge,
)
from utils.numbers import Number, gaussian, is_exact, is_zero, simplify

logger = logging.getLogger(__name__)

TWO_THREE = "2-3"
THREE_TWO = "3-2"
BUBBLE = "bubble"
INVERSE_BUBBLE = "inverse-bubble"

# 移動の5頂点の名前
MOVE_NAMES = ("A", "B", "C", "D", "E")


# ---------------------------------------------------------------------------
# 分岐付き 2-3 移動のカタログ
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    """分岐付き 2-3 移動の型"""
    two_side: Tuple[int, int]
    epsilon: int

    @property
    def three_side(self) -> Tuple[int, ...]:
        return tuple(i for i in range(5) if i not in self.two_side)

    @property
    def admissible(self) -> bool:
        return is_admissible(*self.two_side)

    def sign_of(self, omitted: int) -> int:
        """位置 omitted を除いた四面体の符号"""
        sign = self.epsilon * (-1) ** omitted
        return -sign if omitted in self.two_side else sign


def is_admissible(i: int, j: int) -> bool:
    """2側の四面体の除外位置が巡回的に隣接しない"""
    return abs(i - j) in (2, 3)


def branched_catalog() -> List[CatalogEntry]:
    """2側の位置の組と ε のすべての組合せ (20 通り)"""
    return [
        CatalogEntry((i, j), epsilon)
        for i, j in combinations(range(5), 2)
        for epsilon in (1, -1)
    ]


# ---------------------------------------------------------------------------
# 結果型
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MoveSite:
    """移動の場所"""
    kind: str
    face: Optional[Tuple[int, int]] = None
    edge: Optional[int] = None
    vertex: Optional[int] = None
    hamiltonian_edge: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class TransitResult:
    """移動の結果"""
    site: MoveSite
    triangulation: Triangulation
    decoration: GlobalDecoration
    correspondence: Dict[int, int]
    new_edges: List[int] = field(default_factory=list)
    removed_edges: List[int] = field(default_factory=list)
    old_tetrahedra: List[DecoratedTetrahedron] = field(default_factory=list)
    new_tetrahedra: List[DecoratedTetrahedron] = field(default_factory=list)
    entry: Optional[CatalogEntry] = None

    @property
    def new_edge(self) -> Optional[int]:
        return self.new_edges[0] if self.new_edges else None


@dataclass
class _Rebuild:
    """組合せ的な置き換えの結果"""
    triangulation: Triangulation
    kept: Dict[int, int]
    new_sets: List[Tuple[int, ...]]
    first_new: int
    roles: Dict[int, Dict[int, int]]
    edge_map: Dict[int, int]


# ---------------------------------------------------------------------------
# 組合せ的な置き換え
# ---------------------------------------------------------------------------

def _face_pairing(slot: Tuple[int, int], target: Tuple[int, int], label_map: Dict[int, int]) -> FacePairing:
    return FacePairing(slot, target, tuple(label_map[v] for v in FACES[slot[1]]))


def _replace_tetrahedra(triangulation: Triangulation, removed: Sequence[int],
                        roles: Dict[int, Dict[int, int]],
                        new_sets: Sequence[Tuple[int, ...]]) -> _Rebuild:
    """
    removed の四面体を new_sets の四面体で置き換える

    roles[X][v] は除去する四面体 X の頂点 v の移動位置。
    new_sets の各要素は新四面体の頂点の移動位置 (昇順、頂点名 0..3 に対応)
    """
    kept_list = [t for t in range(triangulation.n_tets) if t not in removed]
    kept = {t: i for i, t in enumerate(kept_list)}
    first_new = len(kept_list)

    owners: Dict[frozenset, List[Tuple[int, int]]] = {}
    for j, positions in enumerate(new_sets):
        for label in range(4):
            face = frozenset(p for p in positions if p != positions[label])
            owners.setdefault(face, []).append((j, label))

    # 除去する四面体の境界面 -> (新スロット, 頂点名の対応)
    boundary: Dict[Tuple[int, int], Tuple[Tuple[int, int], Dict[int, int]]] = {}
    for x in removed:
        for g in range(4):
            face = frozenset(roles[x][v] for v in FACES[g])
            slots = owners.get(face, [])
            if len(slots) == 1:
                j, label = slots[0]
                relabel = {v: new_sets[j].index(roles[x][v]) for v in FACES[g]}
                boundary[(x, g)] = ((first_new + j, label), relabel)

    def locate(slot):
        t, f = slot
        if t in kept:
            return (kept[t], f), {v: v for v in FACES[f]}
        return boundary.get(slot)

    pairings: List[FacePairing] = []
    for slot, (t2, f2, perm) in sorted(triangulation.gluing.items()):
        other = (t2, f2)
        if other < slot:
            continue
        a, b = locate(slot), locate(other)
        if a is None and b is None:
            continue
        if a is None or b is None:
            raise InvalidDecoration(f"Gluing {slot} -> {other} crosses the move boundary inconsistently")
        (new_a, relabel_a), (new_b, relabel_b) = a, b
        inverse_a = {w: v for v, w in relabel_a.items()}
        label_map = {w: relabel_b[perm[inverse_a[w]]] for w in FACES[new_a[1]]}
        pairings.append(_face_pairing(new_a, new_b, label_map))

    for face, slots in sorted(owners.items(), key=lambda item: sorted(item[0])):
        if len(slots) != 2:
            continue
        (j1, l1), (j2, l2) = slots
        label_map = {
            v: new_sets[j2].index(new_sets[j1][v]) for v in FACES[l1]
        }
        pairings.append(_face_pairing((first_new + j1, l1), (first_new + j2, l2), label_map))

    new_tri = build_quotient(first_new + len(new_sets), pairings)

    edge_map: Dict[int, int] = {}
    for s in range(triangulation.n_edges):
        for t, e in triangulation.edge_preimages(s):
            if t in kept:
                edge_map[s] = new_tri.edge_class[(kept[t], e)]
                break
            u, v = EDGES[e]
            pu, pv = roles[t][u], roles[t][v]
            target = next(
                (j for j, positions in enumerate(new_sets) if pu in positions and pv in positions),
                None,
            )
            if target is not None:
                positions = new_sets[target]
                edge_map[s] = new_tri.edge_class[
                    (first_new + target, edge_index(positions.index(pu), positions.index(pv)))
                ]
                break

    hamiltonian = frozenset(edge_map[s] for s in triangulation.hamiltonian if s in edge_map)
    new_tri = replace(new_tri, hamiltonian=hamiltonian)
    return _Rebuild(new_tri, kept, list(new_sets), first_new, roles, edge_map)


def _oriented_value(cocycle: Dict[int, BorelValue], triangulation: Triangulation,
                    branchings: Sequence[Branching], t: int, u: int, v: int) -> BorelValue:
    """四面体 t の頂点 u から v への向きで読んだコサイクル値"""
    value = cocycle[triangulation.find_edge(t, u, v)]
    return value if branchings[t].oriented(u, v) else value.inverse()


# ---------------------------------------------------------------------------
# チャージ遷移
# ---------------------------------------------------------------------------

def _charge_key(a: str, b: str) -> frozenset:
    return frozenset((a, b))


def charge_transit_23(old_d: Dict[frozenset, Any], old_e: Dict[frozenset, Any],
                      free: Any) -> Dict[str, Dict[frozenset, Any]]:
    """
    2-3 移動の対辺組の値の遷移 (チャージにも符号付き対数にも使う)

    old_d: [ABCD] の各辺の値, old_e: [ABCE] の各辺の値。
    戻り値は新四面体 'A'=[BCDE], 'B'=[ACDE], 'C'=[ABDE] ごとの辺の値
    """
    k = _charge_key
    a1, b1, c1 = old_d[k("A", "B")], old_d[k("B", "C")], old_d[k("A", "C")]
    a2, b2, c2 = old_e[k("A", "B")], old_e[k("B", "C")], old_e[k("A", "C")]
    r = free
    u = b1 - free
    p = a2 - free
    v = c1 - a2 + free
    s = b2 - c1 + a2 - free
    q = a1 - b2 + c1 - a2 + free

    def pairs(first, second, third, values):
        table = {}
        for (x, y), value in zip((first, second, third), values):
            table[k(*x)] = value
            table[k(*y)] = value
        return table

    return {
        "C": pairs((("A", "B"), ("D", "E")), (("A", "D"), ("B", "E")), (("A", "E"), ("B", "D")),
                   (a1 + a2, u, v)),
        "A": pairs((("B", "C"), ("D", "E")), (("B", "D"), ("C", "E")), (("B", "E"), ("C", "D")),
                   (b1 + b2, p, q)),
        "B": pairs((("A", "C"), ("D", "E")), (("A", "D"), ("C", "E")), (("A", "E"), ("C", "D")),
                   (c1 + c2, r, s)),
    }


def charge_transit_32(new_values: Dict[str, Dict[frozenset, Any]]) -> Dict[str, Dict[frozenset, Any]]:
    """3-2 移動: 残る辺の和から2つの四面体の値を復元"""
    k = _charge_key

    def edge_sum(a, b):
        return sum(table[k(a, b)] for table in new_values.values() if k(a, b) in table)

    result = {}
    for apex, other in (("D", "E"), ("E", "D")):
        table = {}
        for x, y in (("A", "B"), ("B", "C"), ("A", "C")):
            z = ({"A", "B", "C"} - {x, y}).pop()
            value = edge_sum(z, apex)
            table[k(x, y)] = value
            table[k(z, apex)] = value
        result[apex] = table
    return result


def _choose_free_charge(old_d, old_e, search: int = 10) -> Dict[str, Dict[frozenset, int]]:
    """最大絶対値が最小となる自由パラメータ (同点は小さい方)"""
    best = None
    for free in range(-search, search + 1):
        values = charge_transit_23(old_d, old_e, free)
        norm = max(abs(v) for table in values.values() for v in table.values())
        if best is None or norm < best[0]:
            best = (norm, values)
    return best[1]


def _tet_charge_table(charge: Sequence[int], names: Dict[int, str]) -> Dict[frozenset, int]:
    return {_charge_key(names[u], names[v]): charge[e] for e, (u, v) in enumerate(EDGES)}


# ---------------------------------------------------------------------------
# 2-3 移動
# ---------------------------------------------------------------------------

@dataclass
class _TwoThreeData:
    positions: Dict[str, int]
    roles: Dict[int, Dict[int, int]]
    entry: CatalogEntry
    names: Dict[int, Dict[int, str]]


def _two_three_setup(triangulation: Triangulation, branchings: Sequence[Branching],
                     face: Tuple[int, int], admissible_only: bool) -> _TwoThreeData:
    t, f = face
    if face not in triangulation.gluing:
        raise NotAdjacent(f"Face {face} does not exist")
    t2, f2, perm = triangulation.gluing[face]
    if t2 == t:
        raise NotAdjacent(f"Face {face} is glued to its own tetrahedron")

    b1, b2 = branchings[t], branchings[t2]
    face_t = sorted(FACES[f], key=lambda v: b1.position[v])
    if sorted((perm[v] for v in face_t), key=lambda v: b2.position[v]) != [perm[v] for v in face_t]:
        raise NonBrancheable(f"Gluing at {face} does not respect the branchings")

    gap_d = sum(1 for v in face_t if b1.position[v] < b1.position[f])
    gap_e = sum(1 for v in face_t if b2.position[perm[v]] < b2.position[f2])

    def sequence(d_first: bool) -> List[str]:
        seq = []
        for g in range(4):
            inserted = [n for n, gap in (("D", gap_d), ("E", gap_e)) if gap == g]
            if len(inserted) == 2 and not d_first:
                inserted.reverse()
            seq.extend(inserted)
            if g < 3:
                seq.append("ABC"[g])
        return seq

    options = [sequence(True)] if gap_d != gap_e else [sequence(True), sequence(False)]
    chosen = None
    for seq in options:
        pos = {name: i for i, name in enumerate(seq)}
        if is_admissible(pos["D"], pos["E"]):
            chosen = seq
            break
    if chosen is None:
        if admissible_only:
            raise NonBrancheable(f"No admissible branched 2-3 move at face {face}")
        chosen = options[0]
    positions = {name: i for i, name in enumerate(chosen)}

    names_t = {face_t[i]: "ABC"[i] for i in range(3)}
    names_t[f] = "D"
    names_t2 = {perm[face_t[i]]: "ABC"[i] for i in range(3)}
    names_t2[f2] = "E"
    roles = {
        t: {v: positions[n] for v, n in names_t.items()},
        t2: {v: positions[n] for v, n in names_t2.items()},
    }

    epsilon = -b1.sign * (-1) ** positions["E"]
    if b2.sign != -epsilon * (-1) ** positions["D"]:
        raise InvalidDecoration(f"Signs of tetrahedra {t} and {t2} are inconsistent")
    entry = CatalogEntry(tuple(sorted((positions["D"], positions["E"]))), epsilon)
    return _TwoThreeData(positions, roles, entry, {t: names_t, t2: names_t2})


def transit23(triangulation: Triangulation, decoration: GlobalDecoration,
              face: Tuple[int, int], admissible_only: bool = True) -> TransitResult:
    """
    2-3 D-遷移

    Parameters:
    -----------
    face : Tuple[int, int]
        (四面体, 面) で、その面で貼り合わされた2つの四面体を3つに置き換える
    admissible_only : bool
        ペンタゴン関係が成り立つ型に限る

    Returns:
    --------
    TransitResult
    """
    t, f = face
    data = _two_three_setup(triangulation, decoration.branchings, face, admissible_only)
    t2 = triangulation.gluing[face][0]
    pos = data.positions

    three_side = [pos[n] for n in ("A", "B", "C")]
    new_sets = [tuple(i for i in range(5) if i != omit) for omit in sorted(three_side)]
    rebuild = _replace_tetrahedra(triangulation, [t, t2], data.roles, new_sets)
    new_tri = rebuild.triangulation

    # コサイクル
    cocycle = {rebuild.edge_map[s]: z for s, z in decoration.cocycle.items()}
    d_label = f
    a_label = next(v for v, n in data.names[t].items() if n == "A")
    e_label = next(v for v, n in data.names[t2].items() if n == "E")
    a_label2 = next(v for v, n in data.names[t2].items() if n == "A")
    branchings = decoration.branchings
    d_to_a = _oriented_value(decoration.cocycle, triangulation, branchings, t, d_label, a_label)
    a_to_e = _oriented_value(decoration.cocycle, triangulation, branchings, t2, a_label2, e_label)
    d_to_e = d_to_a * a_to_e
    new_value = d_to_e if pos["D"] < pos["E"] else d_to_e.inverse()
    if not new_value.is_full():
        raise FullnessLost(f"New edge of the 2-3 move at {face} has x = 0")

    new_edges = sorted(set(range(new_tri.n_edges)) - set(rebuild.edge_map.values()))
    for s in new_edges:
        cocycle[s] = new_value

    # チャージ
    old_d = _tet_charge_table(decoration.charges[t], data.names[t])
    old_e = _tet_charge_table(decoration.charges[t2], data.names[t2])
    values = _choose_free_charge(old_d, old_e)
    by_position = {pos[n]: n for n in MOVE_NAMES}

    branching_list = [None] * new_tri.n_tets
    charge_list = [None] * new_tri.n_tets
    for old, new in rebuild.kept.items():
        branching_list[new] = decoration.branchings[old]
        charge_list[new] = tuple(decoration.charges[old])
    for j, positions in enumerate(new_sets):
        omitted = next(i for i in range(5) if i not in positions)
        table = values[by_position[omitted]]
        charge = tuple(
            table[_charge_key(by_position[positions[u]], by_position[positions[v]])]
            for u, v in EDGES
        )
        branching_list[rebuild.first_new + j] = Branching((0, 1, 2, 3), data.entry.sign_of(omitted))
        charge_list[rebuild.first_new + j] = charge

    new_decoration = GlobalDecoration(tuple(branching_list), cocycle, tuple(charge_list))
    logger.info(f"2-3 transit at face {face}: entry {data.entry}, new edge {new_edges}")
    return TransitResult(
        site=MoveSite(TWO_THREE, face=face),
        triangulation=new_tri,
        decoration=new_decoration,
        correspondence=dict(rebuild.edge_map),
        new_edges=new_edges,
        old_tetrahedra=[decoration.tetrahedron(t, triangulation), decoration.tetrahedron(t2, triangulation)],
        new_tetrahedra=[
            new_decoration.tetrahedron(rebuild.first_new + j, new_tri) for j in range(len(new_sets))
        ],
        entry=data.entry,
    )


# ---------------------------------------------------------------------------
# 3-2 移動
# ---------------------------------------------------------------------------

def _edge_star(triangulation: Triangulation, edge: int) -> Tuple[List[int], Dict[int, Dict[int, str]]]:
    """価数3の辺のまわりの3つの四面体と頂点の名前"""
    preimages = triangulation.edge_preimages(edge)
    if len(preimages) != 3:
        raise BadValence(f"Edge {edge} has valence {len(preimages)}")
    tets = [t for t, _ in preimages]
    if len(set(tets)) != 3:
        raise BadValence(f"Edge {edge} meets a tetrahedron more than once")

    t0, e0 = preimages[0]
    d0, e_0 = EDGES[e0]
    x1, x2 = [v for v in range(4) if v not in (d0, e_0)]
    names = {t0: {d0: "D", e_0: "E", x1: "A", x2: "B"}}

    # D, E を保ったまま辺のまわりを一周する
    current, cur_names = t0, names[t0]
    for leave, arriving in (("B", "C"), ("A", "B")):
        label_leave = next(v for v, n in cur_names.items() if n == leave)
        t_next, f_next, perm = triangulation.gluing[(current, label_leave)]
        if t_next in names:
            raise BadValence(f"Edge {edge} does not bound a cycle of three distinct tetrahedra")
        mapped = {perm[v]: n for v, n in cur_names.items() if v != label_leave}
        mapped[f_next] = arriving
        names[t_next] = mapped
        current, cur_names = t_next, mapped

    label_leave = next(v for v, n in cur_names.items() if n == "C")
    t_back, f_back, perm = triangulation.gluing[(current, label_leave)]
    expected = {perm[v]: n for v, n in cur_names.items() if v != label_leave}
    if t_back != t0 or any(names[t0].get(v) != n for v, n in expected.items()):
        raise BadValence(f"Edge {edge} does not bound a cycle of three distinct tetrahedra")
    return tets, names


def transit32(triangulation: Triangulation, decoration: GlobalDecoration, edge: int,
              admissible_only: bool = True) -> TransitResult:
    """3-2 D-遷移 (価数3の辺を除去)"""
    if edge in triangulation.hamiltonian:
        raise InvalidDecoration(f"Edge {edge} belongs to the link and cannot be removed")
    tets, names = _edge_star(triangulation, edge)

    # 5頂点の全順序
    before = set()
    for t in tets:
        b = decoration.branchings[t]
        for u, v in combinations(range(4), 2):
            first, second = (u, v) if b.position[u] < b.position[v] else (v, u)
            before.add((names[t][first], names[t][second]))
    if any((y, x) in before for x, y in before):
        raise NonBrancheable(f"Branchings around edge {edge} are not compatible")
    ranked = sorted(MOVE_NAMES, key=lambda n: sum(1 for x, y in before if y == n))
    for x, y in zip(ranked, ranked[1:]):
        if (x, y) not in before:
            raise NonBrancheable(f"Branchings around edge {edge} admit no branched 3-2 move")
    positions = {n: i for i, n in enumerate(ranked)}

    entry_signs = {}
    for t in tets:
        omitted = positions[({"A", "B", "C"} - set(names[t].values())).pop()]
        entry_signs[omitted] = decoration.branchings[t].sign
    omit0, sign0 = next(iter(entry_signs.items()))
    epsilon = sign0 * (-1) ** omit0
    if any(s != epsilon * (-1) ** o for o, s in entry_signs.items()):
        raise InvalidDecoration(f"Signs around edge {edge} are inconsistent")
    entry = CatalogEntry(tuple(sorted((positions["D"], positions["E"]))), epsilon)
    if admissible_only and not entry.admissible:
        raise NonBrancheable(f"3-2 move at edge {edge} is not admissible")

    roles = {t: {v: positions[n] for v, n in names[t].items()} for t in tets}
    new_sets = [tuple(i for i in range(5) if i != omit) for omit in sorted(entry.two_side)]
    rebuild = _replace_tetrahedra(triangulation, tets, roles, new_sets)
    new_tri = rebuild.triangulation

    for s, z in decoration.cocycle.items():
        if s != edge and not z.is_full():
            raise FullnessLost(f"Edge {s} is not full")
    cocycle = {rebuild.edge_map[s]: z for s, z in decoration.cocycle.items() if s in rebuild.edge_map}

    tables = {
        ({"A", "B", "C"} - set(names[t].values())).pop(): _tet_charge_table(decoration.charges[t], names[t])
        for t in tets
    }
    values = charge_transit_32(tables)
    by_position = {positions[n]: n for n in MOVE_NAMES}

    branching_list = [None] * new_tri.n_tets
    charge_list = [None] * new_tri.n_tets
    for old, new in rebuild.kept.items():
        branching_list[new] = decoration.branchings[old]
        charge_list[new] = tuple(decoration.charges[old])
    for j, positions_j in enumerate(new_sets):
        omitted = next(i for i in range(5) if i not in positions_j)
        apex = "D" if by_position[omitted] == "E" else "E"
        table = values[apex]
        charge = tuple(
            table[_charge_key(by_position[positions_j[u]], by_position[positions_j[v]])]
            for u, v in EDGES
        )
        branching_list[rebuild.first_new + j] = Branching((0, 1, 2, 3), entry.sign_of(omitted))
        charge_list[rebuild.first_new + j] = charge

    new_decoration = GlobalDecoration(tuple(branching_list), cocycle, tuple(charge_list))
    logger.info(f"3-2 transit at edge {edge}: entry {entry}")
    return TransitResult(
        site=MoveSite(THREE_TWO, edge=edge),
        triangulation=new_tri,
        decoration=new_decoration,
        correspondence=dict(rebuild.edge_map),
        removed_edges=[edge],
        old_tetrahedra=[decoration.tetrahedron(t, triangulation) for t in tets],
        new_tetrahedra=[
            new_decoration.tetrahedron(rebuild.first_new + j, new_tri) for j in range(len(new_sets))
        ],
        entry=entry,
    )


# ---------------------------------------------------------------------------
# バブル移動
# ---------------------------------------------------------------------------

# 新しい辺の x の候補
BUBBLE_CANDIDATES: Tuple[Tuple[int, int], ...] = (
    (1, 0), (2, 0), (-1, 0), (3, 0), (1, 1), (0, 1), (2, 1), (-2, 0), (1, -1), (0, 2),
)


def _candidate_value(re: int, im: int, exact: bool) -> Number:
    return gaussian(re, im) if exact else complex(re, im)


def _bubble_tetrahedron(values: Dict[Tuple[int, int], BorelValue], sign: int,
                        charge: Tuple[int, ...]) -> DecoratedTetrahedron:
    return DecoratedTetrahedron(
        Branching((0, 1, 2, 3), sign),
        tuple(values[(u, v)] for u, v in EDGES),
        charge,
    )


def transit_bubble(triangulation: Triangulation, decoration: GlobalDecoration,
                   face: Tuple[int, int], hamiltonian_edge: Optional[int] = None,
                   value: Optional[BorelValue] = None) -> TransitResult:
    """
    バブル D-遷移

    面 face を2つの四面体で膨らませ、新しい頂点 p を分岐の最後に置く。
    face の H-辺 [ua ub] を p 経由に付け替える
    """

    t, f = face
    if face not in triangulation.gluing:
        raise NotAdjacent(f"Face {face} does not exist")
    t2, f2, perm = triangulation.gluing[face]
    b = decoration.branchings[t]
    u = sorted(FACES[f], key=lambda v: b.position[v])

    h_pairs = [
        (i, j) for i, j in combinations(range(3), 2)
        if triangulation.find_edge(t, u[i], u[j]) in triangulation.hamiltonian
    ]
    if hamiltonian_edge is not None:
        h_pairs = [
            (i, j) for i, j in h_pairs if triangulation.find_edge(t, u[i], u[j]) == hamiltonian_edge
        ]
    if not h_pairs:
        raise NoValidCharge(f"Face {face} has no link edge to reroute")
    ia, ib = h_pairs[0]
    ic = 3 - ia - ib
    h_class = triangulation.find_edge(t, u[ia], u[ib])

    values: Dict[Tuple[int, int], BorelValue] = {}
    for i, j in combinations(range(3), 2):
        values[(i, j)] = _oriented_value(decoration.cocycle, triangulation, decoration.branchings, t, u[i], u[j])

    exact = any(is_exact(z.x) for z in decoration.cocycle.values())
    candidates = [value] if value is not None else [
        BorelValue(_candidate_value(1, 0, exact), _candidate_value(re, im, exact))
        for re, im in BUBBLE_CANDIDATES
    ]
    sign_p1 = b.sign * (-1) ** b.position[f]
    charge = [0] * 6
    charge[edge_index(ia, ib)] = charge[edge_index(ic, 3)] = 1
    charge = tuple(charge)

    chosen = None
    for candidate in candidates:
        trial = dict(values)
        trial[(2, 3)] = candidate
        trial[(0, 3)] = values[(0, 2)] * candidate
        trial[(1, 3)] = values[(1, 2)] * candidate
        if not all(trial[(k, 3)].is_full() for k in range(3)):
            continue
        dtet = _bubble_tetrahedron(trial, sign_p1, charge)
        if any(is_zero(p) for p in shape_parameters(dtet)):
            continue
        chosen = trial
        break
    if chosen is None:
        raise FullnessLost(f"No full value for the bubble at face {face}")

    p1, p2 = triangulation.n_tets, triangulation.n_tets + 1
    pairings = [
        p for p in triangulation.pairings
        if {p.source, p.target} != {face, (t2, f2)}
    ]
    pairings.append(_face_pairing(face, (p1, 3), {v: u.index(v) for v in FACES[f]}))
    other = [perm[v] for v in u]
    pairings.append(_face_pairing((t2, f2), (p2, 3), {v: other.index(v) for v in FACES[f2]}))
    for k in range(3):
        pairings.append(FacePairing((p1, k), (p2, k), FACES[k]))
    new_tri = build_quotient(triangulation.n_tets + 2, pairings)

    edge_map = {
        s: new_tri.edge_class[triangulation.edge_rep(s)] for s in range(triangulation.n_edges)
    }
    new_class = {k: new_tri.edge_class[(p1, edge_index(k, 3))] for k in range(3)}
    hamiltonian = {edge_map[s] for s in triangulation.hamiltonian if s != h_class}
    hamiltonian |= {new_class[ia], new_class[ib]}
    new_tri = replace(new_tri, hamiltonian=frozenset(hamiltonian))

    cocycle = {edge_map[s]: z for s, z in decoration.cocycle.items()}
    for k in range(3):
        cocycle[new_class[k]] = chosen[(k, 3)]
    new_decoration = GlobalDecoration(
        decoration.branchings + (Branching((0, 1, 2, 3), sign_p1), Branching((0, 1, 2, 3), -sign_p1)),
        cocycle,
        tuple(decoration.charges) + (charge, charge),
    )
    logger.info(f"Bubble transit at face {face}: link edge {h_class} rerouted, new vertex {new_tri.n_vertices - 1}")
    return TransitResult(
        site=MoveSite(BUBBLE, face=face, hamiltonian_edge=h_class),
        triangulation=new_tri,
        decoration=new_decoration,
        correspondence=edge_map,
        new_edges=[new_class[k] for k in range(3)],
        new_tetrahedra=[new_decoration.tetrahedron(p1, new_tri), new_decoration.tetrahedron(p2, new_tri)],
    )


def inverse_bubble(triangulation: Triangulation, decoration: GlobalDecoration,
                   vertex: int) -> TransitResult:
    """バブルの除去 (2つの四面体だけに含まれる頂点を潰す)"""
    slots = sorted(slot for slot, c in triangulation.vertex_class.items() if c == vertex)
    if len(slots) != 2 or slots[0][0] == slots[1][0]:
        raise BadValence(f"Vertex {vertex} is not the tip of a bubble")
    (p1, v1), (p2, v2) = slots

    correspondence = {v1: v2}
    for k in range(4):
        if k == v1:
            continue
        t_other, _, perm = triangulation.gluing[(p1, k)]
        if t_other != p2:
            raise BadValence(f"Vertex {vertex} is not the tip of a bubble")
        for v in FACES[k]:
            if correspondence.setdefault(v, perm[v]) != perm[v]:
                raise BadValence(f"Bubble faces at vertex {vertex} are glued inconsistently")

    o1, g1, perm1 = triangulation.gluing[(p1, v1)]
    o2, g2, perm2 = triangulation.gluing[(p2, v2)]
    if o1 in (p1, p2) or o2 in (p1, p2):
        raise BadValence(f"Bubble at vertex {vertex} is glued to itself")

    at_tip = {k: triangulation.find_edge(p1, k, v1) for k in range(4) if k != v1}
    h_ends = [k for k, s in at_tip.items() if s in triangulation.hamiltonian]
    if len(h_ends) != 2:
        raise InvalidDecoration(f"Vertex {vertex} is not crossed by the link")

    kept_list = [t for t in range(triangulation.n_tets) if t not in (p1, p2)]
    kept = {t: i for i, t in enumerate(kept_list)}
    pairings = []
    for p in triangulation.pairings:
        if p.source[0] in kept and p.target[0] in kept:
            pairings.append(FacePairing(
                (kept[p.source[0]], p.source[1]), (kept[p.target[0]], p.target[1]), p.vertex_map,
            ))
    inverse1 = {w: v for v, w in enumerate(perm1)}
    label_map = {w: perm2[correspondence[inverse1[w]]] for w in FACES[g1]}
    pairings.append(_face_pairing((kept[o1], g1), (kept[o2], g2), label_map))
    new_tri = build_quotient(len(kept_list), pairings)

    edge_map = {}
    for s in range(triangulation.n_edges):
        slot = next(((t, e) for t, e in triangulation.edge_preimages(s) if t in kept), None)
        if slot is not None:
            edge_map[s] = new_tri.edge_class[(kept[slot[0]], slot[1])]
    rejoined = new_tri.find_edge(kept[o1], perm1[h_ends[0]], perm1[h_ends[1]])
    hamiltonian = {edge_map[s] for s in triangulation.hamiltonian if s in edge_map}
    hamiltonian.add(rejoined)
    new_tri = replace(new_tri, hamiltonian=frozenset(hamiltonian))

    new_decoration = GlobalDecoration(
        tuple(decoration.branchings[t] for t in kept_list),
        {edge_map[s]: z for s, z in decoration.cocycle.items() if s in edge_map},
        tuple(tuple(decoration.charges[t]) for t in kept_list),
    )
    logger.info(f"Inverse bubble at vertex {vertex}: tetrahedra {p1}, {p2} removed")
    return TransitResult(
        site=MoveSite(INVERSE_BUBBLE, vertex=vertex),
        triangulation=new_tri,
        decoration=new_decoration,
        correspondence=edge_map,
        removed_edges=sorted(set(at_tip.values())),
        old_tetrahedra=[decoration.tetrahedron(p1, triangulation), decoration.tetrahedron(p2, triangulation)],
    )


# ---------------------------------------------------------------------------
# 移動の列
# ---------------------------------------------------------------------------

def apply_move(triangulation: Triangulation, decoration: GlobalDecoration, site: MoveSite,
               admissible_only: bool = True) -> TransitResult:
    if site.kind == TWO_THREE:
        return transit23(triangulation, decoration, tuple(site.face), admissible_only)
    if site.kind == THREE_TWO:
        return transit32(triangulation, decoration, site.edge, admissible_only)
    if site.kind == BUBBLE:
        return transit_bubble(triangulation, decoration, tuple(site.face), site.hamiltonian_edge)
    if site.kind == INVERSE_BUBBLE:
        return inverse_bubble(triangulation, decoration, site.vertex)
    raise ValueError(f"Unknown move kind: {site.kind}")


def replay(triangulation: Triangulation, decoration: GlobalDecoration,
           chain: Sequence[MoveSite], admissible_only: bool = True) -> List[TransitResult]:
    """移動の列を順に適用し、各段の結果を返す"""
    results = []
    for k, site in enumerate(chain):
        result = apply_move(triangulation, decoration, site, admissible_only)
        logger.debug(f"Replay step {k}: {site.kind} -> T={result.triangulation.n_tets}")
        results.append(result)
        triangulation, decoration = result.triangulation, result.decoration
    return results


def available_two_three(triangulation: Triangulation, decoration: GlobalDecoration,
                        admissible_only: bool = True) -> List[Tuple[int, int]]:
    """2-3 移動が可能な面 (各面は片側のスロットで1回だけ)"""
    sites = []
    for slot, (t2, f2, _) in sorted(triangulation.gluing.items()):
        if (t2, f2) < slot:
            continue
        try:
            _two_three_setup(triangulation, decoration.branchings, slot, admissible_only)
        except (NotAdjacent, NonBrancheable, InvalidDecoration):
            continue
        sites.append(slot)
    return sites


def available_three_two(triangulation: Triangulation, admissible_only: bool = True,
                        decoration: Optional[GlobalDecoration] = None) -> List[int]:
    """価数3で H に属さない辺"""
    edges = []
    for s in range(triangulation.n_edges):
        if triangulation.edge_valence(s) != 3 or s in triangulation.hamiltonian:
            continue
        try:
            _edge_star(triangulation, s)
        except BadValence:
            continue
        edges.append(s)
    return edges


# ---------------------------------------------------------------------------
# イデアル遷移と平坦化の遷移
# ---------------------------------------------------------------------------

@dataclass
class IdealTransitResult:
    """イデアル 2-3 遷移の結果"""
    triangulation: Triangulation
    ideal_tetrahedra: List[IdealTetrahedron]
    old_tetrahedra: List[IdealTetrahedron]
    new_tetrahedra: List[IdealTetrahedron]
    points: Dict[str, Number]
    positions: Dict[str, int]
    names: Dict[str, Dict[int, str]]
    entry: CatalogEntry


BASE_POINTS: Tuple[Tuple[Tuple[int, int], ...], ...] = (
    ((0, 0), (1, 0), (-1, 0)),
    ((0, 0), (1, 0), (0, 1)),
    ((1, 0), (2, 0), (5, 0)),
    ((0, 0), (2, 1), (-1, 3)),
)


def _solve_point(points: List[Optional[Number]], w: Number) -> Optional[Number]:
    """cross_ratio(points) = w を満たす未知点 (None の位置) を求める。解けなければ None"""
    k = points.index(None)

    def residual(value):
        v = list(points)
        v[k] = value
        return (v[2] - v[1]) * (v[3] - v[0]) - w * (v[2] - v[0]) * (v[3] - v[1])

    beta = simplify(residual(0))
    alpha = simplify(residual(1) - beta)
    if is_zero(alpha):
        return None
    return simplify(-beta / alpha)


def transit_ideal23(triangulation: Triangulation, ideal_tets: Sequence[IdealTetrahedron],
                    face: Tuple[int, int], admissible_only: bool = True) -> IdealTransitResult:
    """
    イデアル 2-3 遷移

    2つの四面体のモジュラスから5点を再構成し、新しい3つの四面体の交差比を返す
    """
    t, f = face
    branchings = [tet.branching for tet in ideal_tets]
    data = _two_three_setup(triangulation, branchings, face, admissible_only)
    t2 = triangulation.gluing[face][0]
    pos = data.positions
    exact = any(is_exact(tet.moduli.w0) for tet in ideal_tets)

    def tet_points(x: int, table: Dict[str, Number]) -> List[Optional[Number]]:
        order = sorted(data.names[x].items(), key=lambda item: pos[item[1]])
        return [table.get(name) for _, name in order]

    points = None
    for base in BASE_POINTS:
        table = {name: _candidate_value(re, im, exact) for name, (re, im) in zip("ABC", base)}
        point_d = _solve_point(tet_points(t, table), ideal_tets[t].moduli.w0)
        point_e = _solve_point(tet_points(t2, table), ideal_tets[t2].moduli.w0)
        if point_d is None or point_e is None:
            continue
        table["D"], table["E"] = point_d, point_e
        points = table
        break
    if points is None:
        raise DegenerateModuli(f"Could not develop the five vertices at face {face}")
    if is_zero(points["D"] - points["E"]):
        raise DegenerateModuli(f"Apexes of the move at face {face} coincide")

    three_side = sorted(pos[n] for n in ("A", "B", "C"))
    new_sets = [tuple(i for i in range(5) if i != omit) for omit in three_side]
    rebuild = _replace_tetrahedra(triangulation, [t, t2], data.roles, new_sets)
    by_position = {pos[n]: n for n in MOVE_NAMES}

    old_d = _tet_charge_table(ideal_tets[t].charge, data.names[t])
    old_e = _tet_charge_table(ideal_tets[t2].charge, data.names[t2])
    charges = _choose_free_charge(old_d, old_e)

    result = [None] * rebuild.triangulation.n_tets
    for old, new in rebuild.kept.items():
        result[new] = ideal_tets[old]
    new_tets = []
    for j, positions in enumerate(new_sets):
        omitted = next(i for i in range(5) if i not in positions)
        names = [by_position[p] for p in positions]
        w0 = cross_ratio(*(points[n] for n in names))
        table = charges[by_position[omitted]]
        charge = tuple(table[_charge_key(names[u], names[v])] for u, v in EDGES)
        tet = IdealTetrahedron(
            Branching((0, 1, 2, 3), data.entry.sign_of(omitted)), complete_triple(w0), charge,
        )
        result[rebuild.first_new + j] = tet
        new_tets.append(tet)

    logger.info(f"Ideal 2-3 transit at face {face}: entry {data.entry}")
    return IdealTransitResult(
        triangulation=rebuild.triangulation,
        ideal_tetrahedra=result,
        old_tetrahedra=[ideal_tets[t], ideal_tets[t2]],
        new_tetrahedra=new_tets,
        points=points,
        positions=dict(pos),
        names={"D": data.names[t], "E": data.names[t2]},
        entry=data.entry,
    )


def transit_flattening(result: IdealTransitResult, old_flattening: Sequence[Tuple[int, int]],
                       tol: float = 1e-8) -> List[Tuple[int, int]]:
    """
    平坦化の 2-3 遷移

    old_flattening は2側の四面体の (p, q)。符号付き対数パラメータにチャージと同じ遷移を
    適用し、新しい3つの四面体の (p, q) を返す
    """
    tables = []
    for tet, (p, q), names in zip(result.old_tetrahedra, old_flattening,
                                  (result.names["D"], result.names["E"])):
        logs = log_parameters(tet.moduli.w0, p, q)
        tables.append({
            _charge_key(names[u], names[v]): tet.sign * logs[tet.pair_of_edge(e)]
            for e, (u, v) in enumerate(EDGES)
        })

    ranked = sorted(MOVE_NAMES, key=lambda n: result.positions[n])
    omitted_names = sorted(("A", "B", "C"), key=lambda n: result.positions[n])
    new_by_omitted = dict(zip(omitted_names, result.new_tetrahedra))

    def vertex_names(omitted: str) -> List[str]:
        return [n for n in ranked if n != omitted]

    # 自由パラメータは [ACDE] の辺 AD の主値
    tet_b = new_by_omitted["B"]
    names_b = vertex_names("B")
    edge_ad = edge_index(names_b.index("A"), names_b.index("D"))
    free = tet_b.sign * principal_logs(tet_b.moduli.w0)[tet_b.pair_of_edge(edge_ad)]
    values = charge_transit_23(tables[0], tables[1], free)

    flattening = []
    for omitted in omitted_names:
        tet = new_by_omitted[omitted]
        names = vertex_names(omitted)
        logs = [0j, 0j, 0j]
        for e, (u, v) in enumerate(EDGES):
            logs[tet.pair_of_edge(e)] = values[omitted][_charge_key(names[u], names[v])] * tet.sign
        base = principal_logs(tet.moduli.w0)
        shifts = [(logs[k] - base[k]) / (cmath.pi * 1j) for k in range(2)]
        rounded = [round(s.real) for s in shifts]
        if any(abs(s - r) > tol for s, r in zip(shifts, rounded)):
            raise NoSolution(f"Transported log-parameters are not a flattening: {shifts}")
        flattening.append((int(rounded[0]), int(rounded[1])))
    logger.debug(f"Flattening transported: {flattening}")
    return flattening
