"""
形式和モデル
Z[D], Z[I] の元を四面体の (符号を係数に畳み込んだ) 多重集合として保持する
"""
import logging
from dataclasses import dataclass, field
from itertools import permutations
from typing import Dict, Iterable, Iterator, List, Tuple, Union

from models.decoration import Branching, DecoratedTetrahedron, s4_act
from models.ideal import IdealTetrahedron, ModularTriple
from models.triangulation import EDGES, perm_sign
from utils.numbers import Number, is_exact, simplify, to_complex

logger = logging.getLogger(__name__)

Tetrahedron = Union[DecoratedTetrahedron, IdealTetrahedron]


def _number_key(value: Number) -> Tuple:
    if is_exact(value):
        return ("exact", str(simplify(value)))
    z = to_complex(value)
    return ("float", round(z.real, 10) + 0.0, round(z.imag, 10) + 0.0)


def term_key(tet: Tetrahedron) -> Tuple:
    """頂点名に依らない (b-位置で読んだ) 比較キー。符号は含めない"""
    b = tet.branching
    charges = tuple(tet.charge[b.edge_at(i, j)] for i, j in EDGES)
    if isinstance(tet, DecoratedTetrahedron):
        values = tuple(
            _number_key(tet.value_at(i, j).t) + _number_key(tet.value_at(i, j).x) for i, j in EDGES
        )
        return ("D", values, charges)
    return ("I", _number_key(tet.moduli.w0), charges)


def with_sign(tet: Tetrahedron, sign: int) -> Tetrahedron:
    branching = Branching(tet.branching.order, sign)
    if isinstance(tet, DecoratedTetrahedron):
        return DecoratedTetrahedron(branching, tet.cocycle, tet.charge)
    return IdealTetrahedron(branching, tet.moduli, tet.charge)


def s4_act_ideal(perm: Tuple[int, ...], tet: IdealTetrahedron) -> IdealTetrahedron:
    """s(w)(e) = w(e)^{ε(s)}"""
    old = tet.branching
    order = [0, 0, 0, 0]
    for k, v in enumerate(old.order):
        order[perm[k]] = v
    epsilon = perm_sign(perm)
    branching = Branching(tuple(order), old.sign * epsilon)
    probe = IdealTetrahedron(branching, tet.moduli, tet.charge)
    moduli = []
    for k in range(3):
        # 新しい組 k に属する辺の旧モジュラス
        e = next(e for e in range(6) if probe.pair_of_edge(e) == k)
        w = tet.modulus_at(e)
        moduli.append(simplify(w if epsilon == 1 else 1 / w))
    return IdealTetrahedron(branching, ModularTriple(*moduli), tet.charge)


def act(perm: Tuple[int, ...], tet: Tetrahedron) -> Tetrahedron:
    if isinstance(tet, DecoratedTetrahedron):
        return s4_act(perm, tet)
    return s4_act_ideal(perm, tet)


@dataclass
class FormalSum:
    """
    整数係数の形式和

    係数 -1 の *(Δ,...) は係数 +1 の符号反転した四面体と等しい。
    内部では各項の符号を係数に畳み込み、四面体は符号 +1 で保持する
    """
    terms: Dict[Tuple, Tuple[Tetrahedron, int]] = field(default_factory=dict)

    @classmethod
    def from_terms(cls, terms: Iterable[Tuple[int, Tetrahedron]]) -> "FormalSum":
        result = cls()
        for coefficient, tet in terms:
            result.add(coefficient, tet)
        return result

    @classmethod
    def of(cls, tetrahedra: Iterable[Tetrahedron]) -> "FormalSum":
        return cls.from_terms((1, tet) for tet in tetrahedra)

    def add(self, coefficient: int, tet: Tetrahedron) -> None:
        coefficient *= tet.sign
        tet = with_sign(tet, 1)
        key = term_key(tet)
        _, current = self.terms.get(key, (tet, 0))
        total = current + coefficient
        if total == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = (tet, total)

    def __iter__(self) -> Iterator[Tuple[int, Tetrahedron]]:
        for key in sorted(self.terms):
            tet, coefficient = self.terms[key]
            yield coefficient, tet

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "FormalSum") -> "FormalSum":
        result = FormalSum(dict(self.terms))
        for coefficient, tet in other:
            result.add(coefficient, tet)
        return result

    def __neg__(self) -> "FormalSum":
        return FormalSum({k: (tet, -c) for k, (tet, c) in self.terms.items()})

    def __sub__(self, other: "FormalSum") -> "FormalSum":
        return self + (-other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FormalSum):
            return NotImplemented
        return {k: c for k, (_, c) in self.terms.items()} == {k: c for k, (_, c) in other.terms.items()}

    def is_zero(self) -> bool:
        return not self.terms

    def total_coefficient(self) -> int:
        return sum(c for _, c in self.terms.values())

    def to_dict(self) -> List[Dict]:
        rows = []
        for coefficient, tet in self:
            row = {"coefficient": coefficient, "order": list(tet.branching.order), "c": list(tet.charge)}
            if isinstance(tet, DecoratedTetrahedron):
                row["z"] = [z.to_dict() for z in tet.cocycle]
            else:
                w = to_complex(tet.moduli.w0)
                row["w0"] = [w.real, w.imag]
            rows.append(row)
        return rows


def _orbit_representative(tet: Tetrahedron) -> Tuple[Tetrahedron, int]:
    """S4 軌道の代表 (符号を除いたキーが辞書式最小) と作用の符号"""
    best = None
    for perm in permutations(range(4)):
        image = act(perm, tet)
        key = term_key(image)
        if best is None or key < best[0]:
            best = (key, image)
    image = best[1]
    return with_sign(image, 1), image.sign * tet.sign


def normalize_s4(formal_sum: FormalSum) -> FormalSum:
    """各項を S4 軌道の正準代表に置き換え、係数を ε で調整する"""
    result = FormalSum()
    for coefficient, tet in formal_sum:
        representative, epsilon = _orbit_representative(tet)
        result.add(coefficient * epsilon, representative)
    logger.debug(f"S4-normalized {len(formal_sum)} terms into {len(result)}")
    return result
