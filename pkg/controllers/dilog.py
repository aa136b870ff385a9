"""
二重対数コントローラ
Bloch-Wigner 関数・Lobachevsky 関数・平坦化つきの持ち上げた Rogers 二重対数と体積レポート
"""
import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import mpmath
import pandas as pd

from models.ideal import Flattening, IdealTetrahedron, log_parameters
from utils.exceptions import DegenerateModulus
from utils.numbers import Number, is_zero, to_complex

logger = logging.getLogger(__name__)

# 二重対数不変量の不定性 (π²/2)Z
ROGERS_MODULUS = math.pi ** 2 / 2
DILOG_DPS = 30


def _check_modulus(w: Number) -> complex:
    if is_zero(w) or is_zero(w - 1):
        raise DegenerateModulus(f"Modulus {w} is 0 or 1")
    return to_complex(w)


def li2(w: Number) -> complex:
    """主枝の二重対数 Li₂ (切断は [1, ∞))"""
    z = to_complex(w)
    with mpmath.workdps(DILOG_DPS):
        return complex(mpmath.polylog(2, z))


def bloch_wigner(w: Number) -> float:
    """D(w) = Im Li₂(w) + arg(1 - w) log|w|"""
    z = _check_modulus(w)
    if z.imag == 0:
        return 0.0
    return li2(z).imag + cmath.phase(1 - z) * math.log(abs(z))


def lobachevsky(theta: float) -> float:
    """Λ(θ) = ½ Cl₂(2θ)"""
    with mpmath.workdps(DILOG_DPS):
        return float(mpmath.clsin(2, 2 * theta)) / 2


@dataclass(frozen=True)
class DilogValue:
    """(π²/2)Z の不定性をもつ複素数"""
    value: complex
    modulus: float = ROGERS_MODULUS

    def reduced(self) -> "DilogValue":
        """実部を [0, modulus) に正規化"""
        re = math.fmod(self.value.real, self.modulus)
        if re < 0:
            re += self.modulus
        if math.isclose(re, self.modulus, rel_tol=0, abs_tol=1e-12):
            re = 0.0
        return DilogValue(complex(re, self.value.imag), self.modulus)

    def distance(self, other: "DilogValue") -> float:
        """剰余類としての距離"""
        diff = self.value - other.value
        k = round(diff.real / self.modulus)
        return abs(complex(diff.real - k * self.modulus, diff.imag))

    def congruent(self, other: "DilogValue", tol: float = 1e-8) -> bool:
        return self.distance(other) <= tol

    def __add__(self, other: "DilogValue") -> "DilogValue":
        return DilogValue(self.value + other.value, self.modulus)

    def to_dict(self) -> Dict:
        r = self.reduced()
        return {"re": r.value.real, "im": r.value.imag, "modulus": self.modulus}


def rogers_lifted(w: Number, p: int, q: int) -> DilogValue:
    """
    平坦化 (p, q) をもつ持ち上げた Rogers 二重対数

    R(w; p, q) = Li₂(w) + ½ Log w Log(1 - w) + (πi/2)(q Log w + p Log(1 - w)) - π²/6

    l0 = Log w + pπi と l1 = -Log(1 - w) + qπi から読むと、q は Log w に、p は
    Log(1 - w) に掛かる。実装は ½ (Log w + pπi)(Log(1 - w) + qπi) で、上の式と
    pqπ²/2 だけ異なる (不定性 (π²/2)Z の中)

    Parameters:
    -----------
    w : Number
        w0 モジュラス
    p, q : int
        平坦化の整数

    Returns:
    --------
    DilogValue
    """
    z = _check_modulus(w)
    value = (
        li2(z)
        + 0.5 * (cmath.log(z) + p * math.pi * 1j) * (cmath.log(1 - z) + q * math.pi * 1j)
        - math.pi ** 2 / 6
    )
    return DilogValue(value)


def dilog_invariant(ideal_tets: Sequence[IdealTetrahedron], flattening: Flattening) -> DilogValue:
    """Σ sign · R(w_i; p_i, q_i) mod (π²/2)"""
    total = 0j
    for tet, p, q in zip(ideal_tets, flattening.p, flattening.q):
        total += tet.sign * rogers_lifted(tet.moduli.w0, p, q).value
    result = DilogValue(total).reduced()
    logger.debug(f"Dilogarithmic invariant: {result.value}")
    return result


def five_term_sum(tetrahedra: Sequence[IdealTetrahedron], flattening: Sequence[Sequence[int]]) -> DilogValue:
    """符号付きの R の和 (2-3 遷移の5つの四面体では (π²/2)Z に入る)"""
    total = sum(
        (tet.sign * rogers_lifted(tet.moduli.w0, p, q).value for tet, (p, q) in zip(tetrahedra, flattening)),
        0j,
    )
    return DilogValue(total)


@dataclass
class VolumeReport:
    """四面体ごとの体積と合計、Rogers 和と Lobachevsky による検算"""
    volumes: List[float]
    total: float
    lobachevsky_total: float
    rogers: Optional[DilogValue] = None
    flattening: Optional[Flattening] = None
    signs: List[int] = field(default_factory=list)

    @property
    def cs(self) -> Optional[float]:
        """-Re R mod π²/2"""
        if self.rogers is None:
            return None
        return DilogValue(complex(-self.rogers.value.real, 0)).reduced().value.real

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame({
            "tetrahedron": list(range(len(self.volumes))),
            "sign": self.signs,
            "volume": self.volumes,
        })

    def to_dict(self) -> Dict:
        data = {
            "volumes": self.volumes,
            "total": self.total,
            "lobachevsky_total": self.lobachevsky_total,
        }
        if self.rogers is not None:
            data["rogers"] = self.rogers.to_dict()
            data["cs"] = self.cs
        if self.flattening is not None:
            data["flattening"] = {"p": list(self.flattening.p), "q": list(self.flattening.q)}
        return data


def _milnor_volume(w: complex) -> float:
    """Λ(arg w0) + Λ(arg w1) + Λ(arg w2)"""
    w1 = 1 / (1 - w)
    w2 = 1 - 1 / w
    return sum(lobachevsky(cmath.phase(v)) for v in (w, w1, w2))


def volume_report(ideal_tets: Sequence[IdealTetrahedron],
                  flattening: Optional[Flattening] = None) -> VolumeReport:
    """
    体積レポート

    各四面体は sign · D(w0) を寄与し、平らな四面体は 0
    """
    volumes = []
    lobachevsky_total = 0.0
    for tet in ideal_tets:
        w = to_complex(tet.moduli.w0)
        volumes.append(tet.sign * bloch_wigner(w))
        lobachevsky_total += tet.sign * _milnor_volume(w)
    rogers = dilog_invariant(ideal_tets, flattening) if flattening is not None else None
    report = VolumeReport(
        volumes=volumes,
        total=sum(volumes),
        lobachevsky_total=lobachevsky_total,
        rogers=rogers,
        flattening=flattening,
        signs=[tet.sign for tet in ideal_tets],
    )
    logger.info(f"Volume report: total {report.total:.12f} over {len(volumes)} tetrahedra")
    return report


def log_parameter_table(ideal_tets: Sequence[IdealTetrahedron], flattening: Flattening) -> pd.DataFrame:
    """四面体ごとの (l0, l1, l2)"""
    rows = []
    for t, (tet, p, q) in enumerate(zip(ideal_tets, flattening.p, flattening.q)):
        l0, l1, l2 = log_parameters(tet.moduli.w0, p, q)
        rows.append({"tetrahedron": t, "p": p, "q": q, "l0": l0, "l1": l1, "l2": l2})
    return pd.DataFrame(rows)
