"""
整数線形系ユーティリティ
列基本変形による階段形で A x = b の整数解と核の格子基底を求める
"""
import logging
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np

from utils.exceptions import NoSolution

logger = logging.getLogger(__name__)


def column_echelon(matrix: Sequence[Sequence[int]]) -> Tuple[List[List[int]], List[List[int]], List[Tuple[int, int]]]:
    """
    A U = H となるユニモジュラ U と下階段形 H

    Returns:
    --------
    (H, U, pivots) で pivots は (行, 列) のリスト
    """
    h = [[int(v) for v in row] for row in matrix]
    m = len(h)
    n = len(h[0]) if m else 0
    u = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def swap(a: int, b: int):
        for row in h:
            row[a], row[b] = row[b], row[a]
        for row in u:
            row[a], row[b] = row[b], row[a]

    def subtract(target: int, source: int, factor: int):
        for row in h:
            row[target] -= factor * row[source]
        for row in u:
            row[target] -= factor * row[source]

    pivots = []
    col = 0
    for r in range(m):
        if col >= n:
            break
        while True:
            nonzero = [j for j in range(col, n) if h[r][j] != 0]
            if not nonzero:
                break
            j_min = min(nonzero, key=lambda j: (abs(h[r][j]), j))
            if j_min != col:
                swap(col, j_min)
            reduced = True
            for j in range(col + 1, n):
                if h[r][j] != 0:
                    subtract(j, col, h[r][j] // h[r][col])
                    if h[r][j] != 0:
                        reduced = False
            if reduced:
                break
        if h[r][col] != 0:
            if h[r][col] < 0:
                for row in h:
                    row[col] = -row[col]
                for row in u:
                    row[col] = -row[col]
            pivots.append((r, col))
            col += 1
    return h, u, pivots


def solve_integer_system(matrix: Sequence[Sequence[int]],
                         rhs: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """
    A x = b の整数解

    Returns:
    --------
    (特殊解, 核基底) 核基底は列ベクトルを並べた行列
    """
    h, u, pivots = column_echelon(matrix)
    m = len(h)
    n = len(u)
    y = [0] * n
    pivot_rows = {r for r, _ in pivots}
    for r, c in pivots:
        residual = int(rhs[r]) - sum(h[r][j] * y[j] for j in range(c))
        if residual % h[r][c] != 0:
            raise NoSolution(f"Row {r}: {residual} is not divisible by pivot {h[r][c]}")
        y[c] = residual // h[r][c]
    for r in range(m):
        if r in pivot_rows:
            continue
        if sum(h[r][j] * y[j] for j in range(n)) != int(rhs[r]):
            raise NoSolution(f"Row {r} is inconsistent")

    u_arr = np.array(u, dtype=np.int64).reshape(n, n)
    x0 = u_arr @ np.array(y, dtype=np.int64)
    kernel = u_arr[:, len(pivots):]
    return x0, kernel


def shortest_solution(x0: np.ndarray, kernel: np.ndarray, rounds: int = 6) -> np.ndarray:
    """
    x0 + kernel k のうち最大ノルム最小の解を局所探索で選ぶ

    同点は辞書式順で最小のもの
    """
    dim = kernel.shape[1]
    if dim == 0:
        return x0
    radius = 2 if dim <= 6 else 1
    steps = np.array(list(product(range(-radius, radius + 1), repeat=dim)), dtype=np.int64)

    best = x0
    for _ in range(rounds):
        candidates = best[None, :] + steps @ kernel.T
        norms = np.abs(candidates).max(axis=1)
        minimum = norms.min()
        tied = candidates[norms == minimum]
        chosen = min(tied.tolist())
        if np.array_equal(np.array(chosen), best):
            break
        best = np.array(chosen, dtype=np.int64)
    return best
