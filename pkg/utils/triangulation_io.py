"""
三角形分割ファイル入出力
JSON の三角形分割・デコレーション・イデアル四面体を pydantic で検証して読み書きする
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import sympy
from pydantic import BaseModel, Field, ValidationError, field_validator

from models.decoration import Branching, BorelValue, GlobalDecoration
from models.ideal import Flattening, IdealTetrahedron, complete_triple
from models.triangulation import FacePairing, Triangulation, build_quotient, perm_sign
from utils.exceptions import FileFormatError, QHIError
from utils.numbers import Number, is_exact, to_complex

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
RawNumber = Union[List[float], str, float]


def parse_number(raw: RawNumber) -> Number:
    """[re, im] は倍精度、文字列は sympy の厳密値"""
    if isinstance(raw, str):
        try:
            return sympy.nsimplify(sympy.sympify(raw))
        except (sympy.SympifyError, TypeError) as e:
            raise FileFormatError(f"Cannot parse exact value {raw!r}: {e}") from e
    if isinstance(raw, (int, float)):
        return complex(raw)
    if len(raw) != 2:
        raise FileFormatError(f"Complex values must be [re, im], got {raw}")
    return complex(raw[0], raw[1])


def format_number(value: Number) -> RawNumber:
    if is_exact(value):
        return str(value)
    z = to_complex(value)
    return [z.real, z.imag]


class PairingModel(BaseModel):
    src: Tuple[int, int]
    dst: Tuple[int, int]
    map: Tuple[int, int, int]


class BorelModel(BaseModel):
    t: RawNumber = Field(default_factory=lambda: [1.0, 0.0])
    x: RawNumber


class DecorationModel(BaseModel):
    z: Dict[str, BorelModel]
    c: Dict[str, int]
    b: Dict[str, Tuple[int, int, int, int]]
    signs: Optional[Dict[str, int]] = None

    @field_validator("b")
    @classmethod
    def _orders_are_permutations(cls, value):
        for key, order in value.items():
            if sorted(order) != [0, 1, 2, 3]:
                raise ValueError(f"Branching of tetrahedron {key} is not a permutation: {order}")
        return value


class IdealTetModel(BaseModel):
    order: Tuple[int, int, int, int] = (0, 1, 2, 3)
    sign: int = 1
    w0: RawNumber
    c: Tuple[int, int, int, int, int, int] = (0, 0, 1, 1, 0, 0)


class FlatteningModel(BaseModel):
    p: List[int]
    q: List[int]


class TriangulationDocument(BaseModel):
    tetrahedra: int = Field(ge=1)
    pairings: List[PairingModel]
    hamiltonian: List[int] = Field(default_factory=list)
    decoration: Optional[DecorationModel] = None
    ideal: Optional[List[IdealTetModel]] = None
    flattening: Optional[FlatteningModel] = None


def _read_document(path: PathLike) -> TriangulationDocument:
    try:
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise FileFormatError(f"Cannot read {path}: {e}") from e
    return parse_document(payload)


def parse_document(payload: Dict) -> TriangulationDocument:
    try:
        return TriangulationDocument.model_validate(payload)
    except ValidationError as e:
        raise FileFormatError(f"Invalid triangulation document: {e}") from e


def triangulation_from_document(doc: TriangulationDocument) -> Triangulation:
    pairings = [FacePairing(tuple(p.src), tuple(p.dst), tuple(p.map)) for p in doc.pairings]
    try:
        return build_quotient(doc.tetrahedra, pairings, doc.hamiltonian)
    except QHIError as e:
        logger.error(f"Failed to build quotient: {e}")
        raise


def decoration_from_document(doc: TriangulationDocument, triangulation: Triangulation) -> GlobalDecoration:
    deco = doc.decoration
    if deco is None:
        raise FileFormatError("Document has no decoration")
    n = triangulation.n_tets
    try:
        orders = [tuple(deco.b[str(t)]) for t in range(n)]
        cocycle = {
            s: BorelValue(parse_number(deco.z[str(s)].t), parse_number(deco.z[str(s)].x))
            for s in range(triangulation.n_edges)
        }
        charges = tuple(tuple(deco.c[f"{t}:{e}"] for e in range(6)) for t in range(n))
    except KeyError as e:
        raise FileFormatError(f"Decoration is missing entry {e}") from e

    if deco.signs is not None:
        signs = [deco.signs.get(str(t)) for t in range(n)]
        if any(s not in (1, -1) for s in signs):
            raise FileFormatError(f"Signs must be +1 or -1: {signs}")
    elif triangulation.orientation is not None:
        # 大域的な向きと整合する符号
        signs = [triangulation.orientation[t] * perm_sign(orders[t]) for t in range(n)]
    else:
        raise FileFormatError("Signs are required for a non-orientable gluing")

    branchings = tuple(Branching(order, sign) for order, sign in zip(orders, signs))
    return GlobalDecoration(branchings, cocycle, charges)


def ideal_from_document(doc: TriangulationDocument) -> Tuple[List[IdealTetrahedron], Optional[Flattening]]:
    if doc.ideal is None:
        raise FileFormatError("Document has no ideal tetrahedra")
    tets = [
        IdealTetrahedron(Branching(tuple(m.order), m.sign), complete_triple(parse_number(m.w0)), tuple(m.c))
        for m in doc.ideal
    ]
    flattening = None
    if doc.flattening is not None:
        flattening = Flattening(tuple(doc.flattening.p), tuple(doc.flattening.q),
                                np.zeros((2 * len(tets), 0), dtype=np.int64))
    return tets, flattening


def load_triangulation(path: PathLike) -> Triangulation:
    """三角形分割のみを読む"""
    triangulation = triangulation_from_document(_read_document(path))
    logger.info(f"Triangulation loaded: {path} ({triangulation.n_tets} tetrahedra)")
    return triangulation


def load_decorated(path: PathLike) -> Tuple[Triangulation, GlobalDecoration]:
    """三角形分割とデコレーションを読む"""
    doc = _read_document(path)
    triangulation = triangulation_from_document(doc)
    decoration = decoration_from_document(doc, triangulation)
    logger.info(f"Decorated triangulation loaded: {path}")
    return triangulation, decoration


def load_ideal(path: PathLike) -> Tuple[Triangulation, List[IdealTetrahedron], Optional[Flattening]]:
    doc = _read_document(path)
    triangulation = triangulation_from_document(doc)
    tets, flattening = ideal_from_document(doc)
    if len(tets) != triangulation.n_tets:
        raise FileFormatError(f"{len(tets)} ideal tetrahedra for {triangulation.n_tets} tetrahedra")
    return triangulation, tets, flattening


def decoration_to_dict(decoration: GlobalDecoration) -> Dict:
    data = decoration.to_dict()
    data["z"] = {
        str(s): {"t": format_number(z.t), "x": format_number(z.x)}
        for s, z in sorted(decoration.cocycle.items())
    }
    return data


def ideal_to_list(ideal_tets: List[IdealTetrahedron]) -> List[Dict]:
    return [
        {"order": list(tet.branching.order), "sign": tet.sign,
         "w0": format_number(tet.moduli.w0), "c": list(tet.charge)}
        for tet in ideal_tets
    ]


def document_dict(triangulation: Triangulation, decoration: Optional[GlobalDecoration] = None,
                  ideal_tets: Optional[List[IdealTetrahedron]] = None,
                  flattening: Optional[Flattening] = None) -> Dict:
    data = triangulation.to_dict()
    if decoration is not None:
        data["decoration"] = decoration_to_dict(decoration)
    if ideal_tets is not None:
        data["ideal"] = ideal_to_list(ideal_tets)
    if flattening is not None:
        data["flattening"] = {"p": list(flattening.p), "q": list(flattening.q)}
    return data


def save_document(path: PathLike, triangulation: Triangulation,
                  decoration: Optional[GlobalDecoration] = None,
                  ideal_tets: Optional[List[IdealTetrahedron]] = None,
                  flattening: Optional[Flattening] = None) -> None:
    data = document_dict(triangulation, decoration, ideal_tets, flattening)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
    logger.info(f"Document saved: {path}")
