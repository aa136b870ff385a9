"""
シザーズ類コントローラ
c_D(T), c_I(F(T)) の代表元、遷移からの五項関係、同値の証拠 (移動の列)
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from controllers.transit import (
    THREE_TWO, TWO_THREE, MoveSite, TransitResult, replay,
)
from models.decoration import GlobalDecoration, validate_d_triangulation
from models.formal_sum import FormalSum
from models.ideal import IdealTetrahedron
from models.triangulation import Triangulation
from utils.exceptions import FileFormatError, InvalidDecoration

logger = logging.getLogger(__name__)


@dataclass
class FiveTermRelation:
    """2項 = 3項 の関係 (符号込み)"""
    lhs: FormalSum
    rhs: FormalSum
    provenance: MoveSite

    def element(self) -> FormalSum:
        """関係元 lhs - rhs"""
        return self.lhs - self.rhs


def class_of(triangulation: Triangulation, decoration: GlobalDecoration,
             validate: bool = True) -> FormalSum:
    """すべての係数が 1 の形式和 c_D(T)"""
    if validate:
        report = validate_d_triangulation(triangulation, decoration)
        if not report.passed:
            raise InvalidDecoration(f"Not a valid D-triangulation: {report.failed_items()}")
    return FormalSum.of(decoration.tetrahedra(triangulation))


def class_of_ideal(ideal_tets: Sequence[IdealTetrahedron]) -> FormalSum:
    """c_I(F(T))"""
    return FormalSum.of(ideal_tets)


def relation_from_transit(result: TransitResult) -> FiveTermRelation:
    """2-3 / 3-2 遷移から五項関係を作る (2つの四面体の側が lhs)"""
    if result.site.kind == TWO_THREE:
        two, three = result.old_tetrahedra, result.new_tetrahedra
    elif result.site.kind == THREE_TWO:
        two, three = result.new_tetrahedra, result.old_tetrahedra
    else:
        raise InvalidDecoration(f"Move {result.site.kind} does not produce a five term relation")
    return FiveTermRelation(FormalSum.of(two), FormalSum.of(three), result.site)


def differs_by(before: FormalSum, after: FormalSum, relation: FiveTermRelation) -> bool:
    """after - before が関係元 (の ±1 倍) に等しいか"""
    difference = after - before
    element = relation.element()
    return difference == -element if relation.provenance.kind == TWO_THREE else difference == element


@dataclass
class EquivalenceWitness:
    """移動の列による2つの形式和の同値の証拠"""
    source: FormalSum
    target: FormalSum
    chain: List[MoveSite]
    relations: List[FiveTermRelation] = field(default_factory=list)
    admissible_only: bool = True

    def to_dict(self) -> Dict:
        return {
            "chain": [site.to_dict() for site in self.chain],
            "admissible_only": self.admissible_only,
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
        }


def build_witness(triangulation: Triangulation, decoration: GlobalDecoration,
                  chain: Sequence[MoveSite], admissible_only: bool = True) -> EquivalenceWitness:
    """移動の列を適用し、各段の五項関係を記録した証拠を作る"""
    results = replay(triangulation, decoration, chain, admissible_only)
    relations = [
        relation_from_transit(r) for r in results if r.site.kind in (TWO_THREE, THREE_TWO)
    ]
    final = results[-1] if results else None
    target = class_of(final.triangulation, final.decoration, validate=False) if final else \
        class_of(triangulation, decoration, validate=False)
    logger.info(f"Witness built: {len(chain)} moves, {len(relations)} five term relations")
    return EquivalenceWitness(
        source=class_of(triangulation, decoration, validate=False),
        target=target,
        chain=list(chain),
        relations=relations,
        admissible_only=admissible_only,
    )


def verify_witness(witness: EquivalenceWitness, triangulation: Triangulation,
                   decoration: GlobalDecoration) -> bool:
    """列を再生し、出発点・到達点と各段の関係が一致するか"""
    current = class_of(triangulation, decoration, validate=False)
    if current != witness.source:
        logger.warning("Witness source does not match the given triangulation")
        return False
    results = replay(triangulation, decoration, witness.chain, witness.admissible_only)
    for result in results:
        after = class_of(result.triangulation, result.decoration, validate=False)
        if result.site.kind in (TWO_THREE, THREE_TWO):
            if not differs_by(current, after, relation_from_transit(result)):
                logger.warning(f"Step {result.site} does not differ by its five term relation")
                return False
        current = after
    return current == witness.target


def load_chain(path: Union[str, Path]) -> List[MoveSite]:
    """証拠ファイル (移動の列の JSON) の読み込み"""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise FileFormatError(f"Cannot read witness file {path}: {e}") from e
    entries = data.get("chain", data) if isinstance(data, dict) else data
    chain = []
    for entry in entries:
        try:
            chain.append(MoveSite(
                kind=entry["kind"],
                face=tuple(entry["face"]) if entry.get("face") is not None else None,
                edge=entry.get("edge"),
                vertex=entry.get("vertex"),
                hamiltonian_edge=entry.get("hamiltonian_edge"),
            ))
        except (KeyError, TypeError) as e:
            raise FileFormatError(f"Malformed witness entry {entry}: {e}") from e
    return chain


def save_chain(chain: Sequence[MoveSite], path: Union[str, Path],
               witness: Optional[EquivalenceWitness] = None) -> None:
    payload = witness.to_dict() if witness is not None else {"chain": [s.to_dict() for s in chain]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False)
    logger.info(f"Witness chain saved: {path}")
