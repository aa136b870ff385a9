"""
サンプル三角形分割
テスト・GUI・README で使う小さな D-三角形分割とイデアル三角形分割を構成する
"""
import cmath
import logging
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from controllers.transit import (
    BUBBLE, INVERSE_BUBBLE, THREE_TWO, TWO_THREE, MoveSite,
    available_two_three, transit23, transit32, transit_bubble,
)
from models.decoration import BorelValue, Branching, GlobalDecoration, coboundary_cocycle, induced_branchings
from models.ideal import Flattening, IdealTetrahedron, complete_triple, solve_flattening
from models.triangulation import EDGES, FACES, FacePairing, Triangulation, build_quotient
from utils.exceptions import UnpairedFace
from utils.numbers import Number, gaussian

logger = logging.getLogger(__name__)

# 頂点ごとの Borel 値 (t, x)。t·x が相異なればフル
SIMPLEX_VALUES: Tuple[Tuple[Tuple[int, int], Tuple[int, int]], ...] = (
    ((1, 0), (0, 0)),
    ((1, 0), (1, 0)),
    ((1, 0), (1, 1)),
    ((1, 0), (0, 2)),
    ((2, 0), (3, -1)),
)

# 2つの三角形の結合の頂点 a0, a1, a2, b0, b1, b2 の Borel 値
JOIN_VALUES: Tuple[Tuple[Tuple[int, int], Tuple[int, int]], ...] = (
    ((1, 0), (0, 0)),
    ((1, 0), (1, 1)),
    ((2, 0), (3, -1)),
    ((1, 1), (2, 1)),
    ((1, 0), (0, 2)),
    ((1, -1), (1, 2)),
)

FIGURE_EIGHT_GLUING: Tuple[Tuple[int, int, int, int], ...] = (
    (1, 3, 0, 2),
    (2, 0, 3, 1),
    (0, 3, 2, 1),
    (2, 1, 0, 3),
)


def _value(re_im: Tuple[int, int], exact: bool) -> Number:
    re, im = re_im
    return gaussian(re, im) if exact else complex(re, im)


def _borel_values(count: int, exact: bool,
                  table: Sequence[Tuple[Tuple[int, int], Tuple[int, int]]] = SIMPLEX_VALUES) -> List[BorelValue]:
    return [
        BorelValue(_value(t, exact), _value(x, exact)) for t, x in table[:count]
    ]


def _label(global_vertex: int, omitted: int) -> int:
    """∂Δ⁴ の四面体 T_omitted における大域頂点のラベル"""
    return global_vertex - (global_vertex > omitted)


def _global(label: int, omitted: int) -> int:
    return label + (label >= omitted)


def simplex_boundary_triangulation() -> Triangulation:
    """
    4-単体の境界 (S³ の5四面体の三角形分割)

    T_i は頂点 i を除く4頂点を昇順にラベルづけし、H は 5-閉路 0-1-2-3-4-0
    """
    pairings = []
    for i, j in combinations(range(5), 2):
        face_i = _label(j, i)
        vertex_map = tuple(_label(_global(v, i), j) for v in FACES[face_i])
        pairings.append(FacePairing((i, face_i), (j, _label(i, j)), vertex_map))
    triangulation = build_quotient(5, pairings)

    hamiltonian = []
    for a in range(5):
        b = (a + 1) % 5
        c = next(k for k in range(5) if k not in (a, b))
        hamiltonian.append(triangulation.find_edge(c, _label(a, c), _label(b, c)))
    return triangulation.with_hamiltonian(hamiltonian)


def _charges_off_link(triangulation: Triangulation) -> Tuple[Tuple[int, ...], ...]:
    """各四面体で両辺とも H に属さない対辺の組にチャージ 1"""
    charges = []
    for t in range(triangulation.n_tets):
        charge = [0] * 6
        for e in range(3):
            pair = (triangulation.edge_class[(t, e)], triangulation.edge_class[(t, 5 - e)])
            if not any(s in triangulation.hamiltonian for s in pair):
                charge[e] = charge[5 - e] = 1
                break
        charges.append(tuple(charge))
    return tuple(charges)


def simplex_boundary(exact: bool = False,
                     values: Optional[Sequence[BorelValue]] = None) -> Tuple[Triangulation, GlobalDecoration]:
    """∂Δ⁴ 上の D-三角形分割 (分岐は大域頂点の順序から誘導、values は頂点ごとの Borel 値)"""
    triangulation = simplex_boundary_triangulation()
    values = list(values) if values is not None else _borel_values(5, exact)
    rank: Dict[int, int] = {}
    vertex_values: Dict[int, BorelValue] = {}
    for (t, v), w in triangulation.vertex_class.items():
        g = _global(v, t)
        rank[w] = g
        vertex_values[w] = values[g]
    branchings = induced_branchings(triangulation, [rank[w] for w in range(triangulation.n_vertices)])
    decoration = GlobalDecoration(
        branchings,
        coboundary_cocycle(triangulation, branchings, vertex_values),
        _charges_off_link(triangulation),
    )
    logger.debug(f"Sample simplex boundary built (exact={exact})")
    return triangulation, decoration


def double_tetrahedron(exact: bool = False) -> Tuple[Triangulation, GlobalDecoration]:
    """2つの四面体を全ての面で恒等的に貼った S³、H は 4-閉路 0-1-2-3-0"""
    pairings = [FacePairing((0, f), (1, f), FACES[f]) for f in range(4)]
    triangulation = build_quotient(2, pairings)
    hamiltonian = [triangulation.find_edge(0, u, v) for u, v in ((0, 1), (1, 2), (2, 3), (0, 3))]
    triangulation = triangulation.with_hamiltonian(hamiltonian)

    values = _borel_values(4, exact)
    vertex_values = {triangulation.vertex_class[(0, v)]: values[v] for v in range(4)}
    rank = [0] * 4
    for v in range(4):
        rank[triangulation.vertex_class[(0, v)]] = v
    branchings = induced_branchings(triangulation, rank)
    decoration = GlobalDecoration(
        branchings,
        coboundary_cocycle(triangulation, branchings, vertex_values),
        _charges_off_link(triangulation),
    )
    return triangulation, decoration


def bubbled_double_tetrahedron(exact: bool = False) -> Tuple[Triangulation, GlobalDecoration]:
    """二重四面体の面 (0, 3) にバブルを加えた4四面体・5頂点の例"""
    triangulation, decoration = double_tetrahedron(exact)
    result = transit_bubble(triangulation, decoration, (0, 3))
    return result.triangulation, result.decoration


def collapsed_simplex_boundary(exact: bool = False) -> Tuple[Triangulation, GlobalDecoration]:
    """∂Δ⁴ の辺 [13] で 3-2 移動を行った4四面体の例"""
    triangulation, decoration = simplex_boundary(exact)
    edge = triangulation.find_edge(0, _label(1, 0), _label(3, 0))
    result = transit32(triangulation, decoration, edge, admissible_only=False)
    return result.triangulation, result.decoration


def simplicial_triangulation(tets: Sequence[Tuple[int, int, int, int]]) -> Triangulation:
    """
    大域頂点の4つ組 (昇順) の列から、同じ3頂点をもつ面どうしを貼った三角形分割

    四面体 t の頂点ラベル v は大域頂点 tets[t][v]
    """
    owners: Dict[frozenset, List[Tuple[int, int]]] = {}
    for t, vertices in enumerate(tets):
        for f in range(4):
            owners.setdefault(frozenset(vertices[v] for v in FACES[f]), []).append((t, f))
    pairings = []
    for face, slots in sorted(owners.items(), key=lambda item: sorted(item[0])):
        if len(slots) != 2:
            raise UnpairedFace(f"Face {sorted(face)} belongs to {len(slots)} tetrahedra")
        (t, f), (t2, f2) = slots
        vertex_map = tuple(tets[t2].index(tets[t][v]) for v in FACES[f])
        pairings.append(FacePairing((t, f), (t2, f2), vertex_map))
    return build_quotient(len(tets), pairings)


def hopf_link_join(exact: bool = False,
                   values: Optional[Sequence[BorelValue]] = None) -> Tuple[Triangulation, GlobalDecoration]:
    """
    2つの三角形 a0a1a2, b0b1b2 の結合 (S³ の9四面体の三角形分割)

    H は2つの三角形で、Hopf 絡み目をなす。四面体 {a_{m+1}, a_{m+2}, b_{n+1}, b_{n+2}} では
    平行な対辺 a_{m+1}b_{n+1}, a_{m+2}b_{n+2} にチャージ 1
    """
    tets = []
    matched = []
    for m in range(3):
        for n in range(3):
            a1, a2 = (m + 1) % 3, (m + 2) % 3
            b1, b2 = 3 + (n + 1) % 3, 3 + (n + 2) % 3
            tets.append(tuple(sorted((a1, a2, b1, b2))))
            matched.append(({a1, b1}, {a2, b2}))
    triangulation = simplicial_triangulation(tets)

    hamiltonian = {triangulation.find_edge(t, 0, 1) for t in range(len(tets))}
    hamiltonian |= {triangulation.find_edge(t, 2, 3) for t in range(len(tets))}
    triangulation = triangulation.with_hamiltonian(hamiltonian)

    charges = []
    for vertices, pairs in zip(tets, matched):
        charges.append(tuple(
            int({vertices[u], vertices[v]} in pairs) for u, v in EDGES
        ))

    values = list(values) if values is not None else _borel_values(6, exact, JOIN_VALUES)
    rank = [0] * triangulation.n_vertices
    vertex_values: Dict[int, BorelValue] = {}
    for (t, v), w in triangulation.vertex_class.items():
        rank[w] = tets[t][v]
        vertex_values[w] = values[tets[t][v]]
    branchings = induced_branchings(triangulation, rank)
    decoration = GlobalDecoration(
        branchings,
        coboundary_cocycle(triangulation, branchings, vertex_values),
        tuple(charges),
    )
    logger.debug(f"Sample Hopf link join built (exact={exact})")
    return triangulation, decoration


def samples(exact: bool = False) -> Dict[str, Tuple[Triangulation, GlobalDecoration]]:
    """名前つきのサンプル一覧"""
    return {
        "simplex-boundary": simplex_boundary(exact),
        "double-tetrahedron": double_tetrahedron(exact),
        "bubbled-double-tetrahedron": bubbled_double_tetrahedron(exact),
        "collapsed-simplex-boundary": collapsed_simplex_boundary(exact),
        "hopf-link-join": hopf_link_join(exact),
    }


def sample_chain(triangulation: Triangulation, decoration: GlobalDecoration) -> List[MoveSite]:
    """
    2-3, 3-2, バブル, バブル除去 の4手からなる移動の列

    最初の許容 2-3 面と、H の辺を含む最初の面を使う
    """
    face = available_two_three(triangulation, decoration)[0]
    first = transit23(triangulation, decoration, face)
    second = transit32(first.triangulation, first.decoration, first.new_edge)

    tri2, dec2 = second.triangulation, second.decoration
    bubble_face = next(
        (t, f) for (t, f) in sorted(tri2.gluing)
        if any(tri2.find_edge(t, u, v) in tri2.hamiltonian for u, v in combinations(FACES[f], 2))
    )
    third = transit_bubble(tri2, dec2, bubble_face)
    tip = third.triangulation.n_vertices - 1
    return [
        MoveSite(TWO_THREE, face=face),
        MoveSite(THREE_TWO, edge=first.new_edge),
        MoveSite(BUBBLE, face=bubble_face, hamiltonian_edge=third.site.hamiltonian_edge),
        MoveSite(INVERSE_BUBBLE, vertex=tip),
    ]


# ---------------------------------------------------------------------------
# イデアル三角形分割
# ---------------------------------------------------------------------------

def figure_eight_triangulation() -> Triangulation:
    """8の字結び目補空間の2四面体の理想三角形分割 (頂点1つ、辺2つ)"""
    pairings = []
    for f, perm in enumerate(FIGURE_EIGHT_GLUING):
        pairings.append(FacePairing((0, f), (1, perm[f]), tuple(perm[v] for v in FACES[f])))
    return build_quotient(2, pairings)


def figure_eight(solve: bool = True) -> Tuple[Triangulation, List[IdealTetrahedron], Flattening]:
    """完備双曲構造 w = e^{iπ/3} の正四面体2つ"""
    triangulation = figure_eight_triangulation()
    w0 = cmath.exp(1j * cmath.pi / 3)
    ideal_tets = [
        IdealTetrahedron(Branching((0, 1, 2, 3), 1), complete_triple(w0), (0, 0, 1, 1, 0, 0))
        for _ in range(2)
    ]
    flattening = solve_flattening(ideal_tets, triangulation) if solve else None
    return triangulation, ideal_tets, flattening


def figure_eight_document() -> Dict:
    """figure-eight の入力ファイル相当の辞書"""
    triangulation, ideal_tets, _ = figure_eight(solve=False)
    data = triangulation.to_dict()
    w0 = ideal_tets[0].moduli.w0
    data["ideal"] = [
        {"order": [0, 1, 2, 3], "sign": 1, "w0": [w0.real, w0.imag], "c": [0, 0, 1, 1, 0, 0]}
        for _ in ideal_tets
    ]
    return data

