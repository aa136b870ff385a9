"""
数値ユーティリティ
倍精度複素数とガウス有理数 (sympy) の両方を扱う
"""
import cmath
from typing import Any, Union

import sympy

Number = Union[complex, float, int, sympy.Expr]

# 倍精度モードで 0 とみなす閾値
ZERO_TOL = 1e-13


def is_exact(value: Any) -> bool:
    return isinstance(value, sympy.Basic)


def simplify(value: Number) -> Number:
    """厳密値は展開して正規形にする"""
    if is_exact(value):
        return sympy.expand(value)
    return value


def is_zero(value: Number, tol: float = ZERO_TOL) -> bool:
    if is_exact(value):
        return sympy.expand(value) == 0
    return abs(value) <= tol


def to_complex(value: Number) -> complex:
    if is_exact(value):
        return complex(sympy.N(value, 20))
    return complex(value)


def gaussian(re: Any, im: Any = 0) -> sympy.Expr:
    """ガウス有理数 re + i im"""
    return sympy.Rational(re) + sympy.I * sympy.Rational(im)


def conj(value: Number) -> Number:
    if is_exact(value):
        return sympy.expand(sympy.conjugate(value))
    return complex(value).conjugate()


def principal_log(value: Number) -> complex:
    """主値対数 (偏角は (-pi, pi])"""
    return cmath.log(to_complex(value))


def nth_root(value: Number, n: int, cut_angle: float = cmath.pi) -> complex:
    """
    分岐切断 arg = cut_angle の下での N 乗根

    偏角を (cut_angle - 2pi, cut_angle] に取ってから 1/n 倍する
    """
    z = to_complex(value)
    if z == 0:
        return 0j
    arg = cmath.phase(z)
    while arg > cut_angle:
        arg -= 2 * cmath.pi
    while arg <= cut_angle - 2 * cmath.pi:
        arg += 2 * cmath.pi
    return cmath.rect(abs(z) ** (1.0 / n), arg / n)


def log_with_cut(value: Number, cut_angle: float = cmath.pi) -> complex:
    """nth_root と同じ分岐での対数"""
    z = to_complex(value)
    arg = cmath.phase(z)
    while arg > cut_angle:
        arg -= 2 * cmath.pi
    while arg <= cut_angle - 2 * cmath.pi:
        arg += 2 * cmath.pi
    return complex(cmath.log(abs(z)), arg)
