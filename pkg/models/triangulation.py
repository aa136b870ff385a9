"""
三角形分割モデル
面の貼り合わせ規則から商複体（辺・頂点・面の同値類）を構成する
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from scipy.cluster.hierarchy import DisjointSet

from utils.exceptions import UnpairedFace, InconsistentVertexMap

logger = logging.getLogger(__name__)

# 四面体の辺 (頂点名の昇順)。i と 5 - i が対辺
EDGES: Tuple[Tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
EDGE_INDEX: Dict[Tuple[int, int], int] = {e: i for i, e in enumerate(EDGES)}
# 面 j は頂点 j の対面
FACES: Tuple[Tuple[int, int, int], ...] = tuple(
    tuple(v for v in range(4) if v != j) for j in range(4)
)

Slot = Tuple[int, int]
Perm = Tuple[int, int, int, int]


def edge_index(u: int, v: int) -> int:
    """頂点対から辺番号を得る"""
    return EDGE_INDEX[(u, v) if u < v else (v, u)]


def opposite_edge(e: int) -> int:
    return 5 - e


def face_edges(f: int) -> List[int]:
    """面 f に含まれる3辺"""
    return [edge_index(u, v) for u, v in combinations(FACES[f], 2)]


def perm_sign(perm: Iterable[int]) -> int:
    """置換の符号"""
    p = list(perm)
    sign = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class FacePairing:
    """面の貼り合わせ規則"""
    source: Slot
    target: Slot
    vertex_map: Tuple[int, int, int]

    def permutation(self) -> Perm:
        """source 四面体の頂点から target 四面体の頂点への置換"""
        perm = [0, 0, 0, 0]
        for v, w in zip(FACES[self.source[1]], self.vertex_map):
            perm[v] = w
        perm[self.source[1]] = self.target[1]
        return tuple(perm)

    def reversed(self) -> "FacePairing":
        perm = self.permutation()
        inverse = [0, 0, 0, 0]
        for v, w in enumerate(perm):
            inverse[w] = v
        return FacePairing(
            source=self.target,
            target=self.source,
            vertex_map=tuple(inverse[v] for v in FACES[self.target[1]]),
        )


@dataclass(frozen=True)
class HamiltonianReport:
    """H の検証結果"""
    valid: bool
    components: int
    problems: Tuple[str, ...] = ()


@dataclass
class Triangulation:
    """
    閉じた向き付き3次元多様体の特異三角形分割

    gluing[(t, f)] = (t', f', perm) で perm は t の頂点から t' の頂点への置換。
    辺・頂点の類番号は最小の (四面体, 辺) 代表元の辞書式順で決める。
    """
    n_tets: int
    pairings: Tuple[FacePairing, ...]
    gluing: Dict[Slot, Tuple[int, int, Perm]]
    vertex_class: Dict[Slot, int]
    edge_class: Dict[Slot, int]
    face_class: Dict[Slot, int]
    n_vertices: int
    n_edges: int
    n_faces: int
    hamiltonian: FrozenSet[int] = frozenset()
    orientation: Optional[Tuple[int, ...]] = None
    _edge_preimages: List[List[Slot]] = field(default_factory=list, repr=False)

    # --- 射影 p: E -> E(T) ---
    def edge_preimages(self, s: int) -> List[Slot]:
        """p^{-1}(s)"""
        return list(self._edge_preimages[s])

    def edge_rep(self, s: int) -> Slot:
        return self._edge_preimages[s][0]

    def edge_valence(self, s: int) -> int:
        return len(self._edge_preimages[s])

    def edge_endpoints(self, s: int) -> Tuple[int, int]:
        """代表元の頂点名順での端点の頂点類"""
        t, e = self.edge_rep(s)
        u, v = EDGES[e]
        return self.vertex_class[(t, u)], self.vertex_class[(t, v)]

    def find_edge(self, t: int, u: int, v: int) -> int:
        """四面体 t の頂点 u, v を結ぶ辺の類"""
        return self.edge_class[(t, edge_index(u, v))]

    def face_preimages(self, q: int) -> List[Slot]:
        return sorted(slot for slot, c in self.face_class.items() if c == q)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces - self.n_tets

    def is_orientable(self) -> bool:
        return self.orientation is not None

    def with_hamiltonian(self, hamiltonian: Iterable[int]) -> "Triangulation":
        """H を置き換えた複製"""
        return build_quotient(self.n_tets, self.pairings, hamiltonian)

    def to_dict(self) -> Dict:
        return {
            "tetrahedra": self.n_tets,
            "pairings": [
                {"src": list(p.source), "dst": list(p.target), "map": list(p.vertex_map)}
                for p in self.pairings
            ],
            "hamiltonian": sorted(self.hamiltonian),
        }


def _normalize_pairings(n_tets: int, pairings: Iterable[FacePairing]) -> Dict[Slot, FacePairing]:
    """両方向の貼り合わせ表を作り整合性を検査"""
    table: Dict[Slot, FacePairing] = {}
    for pairing in pairings:
        for slot in (pairing.source, pairing.target):
            if not (0 <= slot[0] < n_tets and 0 <= slot[1] < 4):
                raise InconsistentVertexMap(f"Face slot out of range: {slot}")
        if pairing.source == pairing.target:
            raise InconsistentVertexMap(f"Face {pairing.source} paired with itself")
        target_vertices = set(FACES[pairing.target[1]])
        if len(set(pairing.vertex_map)) != 3 or set(pairing.vertex_map) != target_vertices:
            raise InconsistentVertexMap(
                f"Vertex map {pairing.vertex_map} is not a bijection onto face {pairing.target}"
            )
        for p in (pairing, pairing.reversed()):
            previous = table.get(p.source)
            if previous is not None and previous != p:
                raise InconsistentVertexMap(f"Face {p.source} paired twice")
            table[p.source] = p
    return table


def build_quotient(n_tets: int, pairings: Iterable[FacePairing],
                   hamiltonian: Optional[Iterable[int]] = None) -> Triangulation:
    """
    貼り合わせ規則から商複体を構成

    Parameters:
    -----------
    n_tets : int
        四面体の数
    pairings : Iterable[FacePairing]
        面の貼り合わせ (片方向でも両方向でも可)
    hamiltonian : Iterable[int], optional
        H に属する辺の類番号

    Returns:
    --------
    Triangulation
    """
    if n_tets < 1:
        raise UnpairedFace("Triangulation needs at least one tetrahedron")
    pairings = list(pairings)
    table = _normalize_pairings(n_tets, pairings)

    unpaired = [(t, f) for t in range(n_tets) for f in range(4) if (t, f) not in table]
    if unpaired:
        raise UnpairedFace(f"Unpaired faces: {unpaired[:6]}")

    vertices = DisjointSet([(t, v) for t in range(n_tets) for v in range(4)])
    edges = DisjointSet([(t, e) for t in range(n_tets) for e in range(6)])
    faces = DisjointSet([(t, f) for t in range(n_tets) for f in range(4)])

    gluing: Dict[Slot, Tuple[int, int, Perm]] = {}
    for slot, pairing in table.items():
        perm = pairing.permutation()
        t, f = slot
        t2, f2 = pairing.target
        gluing[slot] = (t2, f2, perm)
        faces.merge(slot, pairing.target)
        for v in FACES[f]:
            vertices.merge((t, v), (t2, perm[v]))
        for u, v in combinations(FACES[f], 2):
            edges.merge((t, edge_index(u, v)), (t2, edge_index(perm[u], perm[v])))

    def _classes(dsu: DisjointSet, slots: List[Slot]) -> Tuple[Dict[Slot, int], int]:
        ids: Dict[Slot, int] = {}
        root_ids: Dict[Slot, int] = {}
        for slot in slots:
            root = dsu[slot]
            if root not in root_ids:
                root_ids[root] = len(root_ids)
            ids[slot] = root_ids[root]
        return ids, len(root_ids)

    vertex_class, n_vertices = _classes(vertices, [(t, v) for t in range(n_tets) for v in range(4)])
    edge_class, n_edges = _classes(edges, [(t, e) for t in range(n_tets) for e in range(6)])
    face_class, n_faces = _classes(faces, [(t, f) for t in range(n_tets) for f in range(4)])

    preimages: List[List[Slot]] = [[] for _ in range(n_edges)]
    for slot in sorted(edge_class):
        preimages[edge_class[slot]].append(slot)

    hamiltonian = frozenset(hamiltonian or ())
    bad = [s for s in hamiltonian if not 0 <= s < n_edges]
    if bad:
        raise InconsistentVertexMap(f"Hamiltonian edges out of range: {bad}")

    triangulation = Triangulation(
        n_tets=n_tets,
        pairings=tuple(sorted(
            (p for p in table.values() if p.source < p.target),
            key=lambda p: p.source,
        )),
        gluing=gluing,
        vertex_class=vertex_class,
        edge_class=edge_class,
        face_class=face_class,
        n_vertices=n_vertices,
        n_edges=n_edges,
        n_faces=n_faces,
        hamiltonian=hamiltonian,
        orientation=_orient(n_tets, gluing),
        _edge_preimages=preimages,
    )
    logger.debug(
        f"Quotient built: T={n_tets} V={n_vertices} E={n_edges} F={n_faces} "
        f"chi={triangulation.euler_characteristic()}"
    )
    return triangulation


def _orient(n_tets: int, gluing: Dict[Slot, Tuple[int, int, Perm]]) -> Optional[Tuple[int, ...]]:
    """貼り合わせ置換が奇置換になるよう各四面体の向きを決める"""
    orientation: List[Optional[int]] = [None] * n_tets
    for start in range(n_tets):
        if orientation[start] is not None:
            continue
        orientation[start] = 1
        stack = [start]
        while stack:
            t = stack.pop()
            for f in range(4):
                t2, _, perm = gluing[(t, f)]
                expected = -orientation[t] * perm_sign(perm)
                if orientation[t2] is None:
                    orientation[t2] = expected
                    stack.append(t2)
                elif orientation[t2] != expected:
                    return None
    return tuple(orientation)


def is_fullable(triangulation: Triangulation) -> bool:
    """すべての辺が相異なる2頂点をもつか"""
    return all(
        a != b for a, b in (triangulation.edge_endpoints(s) for s in range(triangulation.n_edges))
    )


def validate_hamiltonian(triangulation: Triangulation,
                         hamiltonian: Optional[Iterable[int]] = None) -> HamiltonianReport:
    """H が全頂点を通る互いに素な閉路の和かを検証"""
    edges = sorted(triangulation.hamiltonian if hamiltonian is None else set(hamiltonian))
    problems: List[str] = []

    degree = [0] * triangulation.n_vertices
    components = DisjointSet(range(triangulation.n_vertices))
    for s in edges:
        if not 0 <= s < triangulation.n_edges:
            problems.append(f"edge {s} does not exist")
            continue
        a, b = triangulation.edge_endpoints(s)
        degree[a] += 1
        degree[b] += 1
        components.merge(a, b)

    for w, d in enumerate(degree):
        if d == 0:
            problems.append(f"vertex {w} not covered")
        elif d != 2:
            problems.append(f"vertex {w} has degree {d}")

    count = len(components.subsets()) if not problems else 0
    return HamiltonianReport(valid=not problems, components=count, problems=tuple(problems))
