"""
漸近解析コントローラ
N を動かした K_N の増大度の推定と複素数のあてはめ (K_N^8 の仮説形)
"""
import cmath
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score

from controllers.dilog import DilogValue
from controllers.quantum import RootSystem
from controllers.statesum import DEFAULT_BUDGET, StateSumResult, evaluate, plan_contraction
from models.decoration import GlobalDecoration
from models.triangulation import Triangulation
from utils.exceptions import BudgetExceeded, PhaseUnwrapFailure

logger = logging.getLogger(__name__)

MAX_EXPONENT = 700.0
MIN_PROBE_SAMPLES = 4
# N ごとの評価を並列に走らせるスレッド数 (メモリ上限は N ごと)
DEFAULT_SWEEP_WORKERS = 2


def parse_range(text: str) -> List[int]:
    """'3:21:2' -> [3, 5, ..., 21]、'3,5,9' も可"""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 2
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",") if p.strip()]


def _weighted_fit(x: np.ndarray, y: np.ndarray, weights: np.ndarray) -> Tuple[float, float, float, float]:
    """重み付き最小二乗 (傾き, 切片, 傾きの標準誤差, R²)"""
    model = LinearRegression()
    model.fit(x.reshape(-1, 1), y, sample_weight=weights)
    slope = float(model.coef_[0])
    intercept = float(model.intercept_)
    predicted = model.predict(x.reshape(-1, 1))
    if len(x) > 2:
        residual = y - predicted
        sigma2 = float(np.sum(weights * residual ** 2) / (len(x) - 2))
        center = np.average(x, weights=weights)
        spread = float(np.sum(weights * (x - center) ** 2))
        error = math.sqrt(sigma2 / spread) if spread > 0 else math.inf
        r2 = float(r2_score(y, predicted, sample_weight=weights))
    else:
        error, r2 = math.inf, 1.0
    return slope, intercept, error, r2


@dataclass
class GrowthFit:
    """
    log|K_N| を N²/2π に対して重み N であてはめた結果

    psi_slope は log|Ψ| を N/2π に対してあてはめた比較用の推定値
    """
    ns: List[int]
    log_abs_k: List[float]
    log_abs_psi: List[Optional[float]]
    phases: List[float]
    slope: float
    intercept: float
    slope_error: float
    r2: float
    psi_slope: Optional[float] = None
    psi_error: Optional[float] = None
    slopes_so_far: List[float] = field(default_factory=list)
    reference: Optional[float] = None

    @property
    def estimators_agree(self) -> bool:
        if self.psi_slope is None:
            return True
        tolerance = self.slope_error + (self.psi_error or 0.0)
        return abs(self.slope - self.psi_slope) <= tolerance

    @property
    def discrepancy(self) -> Optional[float]:
        """Im R との差 (探索的な比較)"""
        return None if self.reference is None else self.slope - self.reference

    def to_dataframe(self) -> pd.DataFrame:
        rows = []
        for n, log_k, phase, so_far in zip(self.ns, self.log_abs_k, self.phases, self.slopes_so_far):
            if log_k < MAX_EXPONENT:
                k = cmath.rect(math.exp(log_k), phase)
                re_k, im_k = k.real, k.imag
            else:
                re_k, im_k = math.nan, math.nan
            rows.append({"N": n, "Re K": re_k, "Im K": im_k, "log|K|": log_k, "slope-so-far": so_far})
        return pd.DataFrame(rows, columns=["N", "Re K", "Im K", "log|K|", "slope-so-far"])

    def to_dict(self) -> Dict:
        return {
            "N": self.ns,
            "log_abs_k": self.log_abs_k,
            "slope": self.slope,
            "slope_error": self.slope_error,
            "intercept": self.intercept,
            "r2": self.r2,
            "psi_slope": self.psi_slope,
            "psi_error": self.psi_error,
            "reference": self.reference,
            "discrepancy": self.discrepancy,
        }


def fit_growth(ns: Sequence[int], log_abs_k: Sequence[float],
               log_abs_psi: Optional[Sequence[Optional[float]]] = None,
               phases: Optional[Sequence[float]] = None,
               reference: Optional[float] = None) -> GrowthFit:
    """
    増大度のあてはめ

    Parameters:
    -----------
    ns : Sequence[int]
        昇順の奇数 N
    log_abs_k : Sequence[float]
        log|K_N|
    log_abs_psi : Sequence[float], optional
        log|Ψ(T_N)|
    phases : Sequence[float], optional
        arg K_N (CSV 出力用)
    reference : float, optional
        比較する Im R

    Returns:
    --------
    GrowthFit
    """
    if len(ns) < 2:
        raise ValueError("At least two values of N are needed for a growth fit")
    n_arr = np.asarray(ns, dtype=float)
    y = np.asarray(log_abs_k, dtype=float)
    x = n_arr ** 2 / (2 * math.pi)
    slope, intercept, error, r2 = _weighted_fit(x, y, n_arr)

    so_far = [math.nan]
    for m in range(2, len(ns) + 1):
        so_far.append(_weighted_fit(x[:m], y[:m], n_arr[:m])[0])

    psi_slope = psi_error = None
    if log_abs_psi is not None and all(v is not None for v in log_abs_psi):
        psi_slope, _, psi_error, _ = _weighted_fit(
            n_arr / (2 * math.pi), np.asarray(log_abs_psi, dtype=float), n_arr
        )

    return GrowthFit(
        ns=list(ns),
        log_abs_k=[float(v) for v in y],
        log_abs_psi=list(log_abs_psi) if log_abs_psi is not None else [None] * len(ns),
        phases=list(phases) if phases is not None else [0.0] * len(ns),
        slope=slope,
        intercept=intercept,
        slope_error=error,
        r2=r2,
        psi_slope=psi_slope,
        psi_error=psi_error,
        slopes_so_far=so_far,
        reference=reference,
    )


Evaluator = Callable[[int], StateSumResult]


def _evaluator(triangulation: Triangulation, decoration: GlobalDecoration,
               cut_angle: float, budget: Optional[int]) -> Evaluator:
    def run(n: int) -> StateSumResult:
        return evaluate(triangulation, decoration, RootSystem(n, cut_angle), budget=budget)
    return run


def _evaluate_all(run: Evaluator, ns: Sequence[int], workers: int) -> List[StateSumResult]:
    """N ごとの評価をスレッドプールで並列に行う (結果は ns の順)"""
    if workers <= 1 or len(ns) <= 1:
        return [run(n) for n in ns]
    with ThreadPoolExecutor(max_workers=min(workers, len(ns)), thread_name_prefix="sweep") as pool:
        return list(pool.map(run, ns))


def feasible_ns(triangulation: Triangulation, ns: Sequence[int],
                budget: Optional[int] = DEFAULT_BUDGET) -> List[int]:
    """縮約計画がメモリ上限に収まる N だけを残す"""
    kept = []
    for n in ns:
        try:
            plan_contraction(triangulation, n, budget)
        except BudgetExceeded:
            logger.warning(f"N={n} and larger exceed the memory budget")
            break
        kept.append(n)
    return kept


def sweep(triangulation: Triangulation, decoration: GlobalDecoration, ns: Sequence[int],
          cut_angle: float = math.pi, budget: Optional[int] = DEFAULT_BUDGET,
          reference: Optional[DilogValue] = None,
          evaluator: Optional[Evaluator] = None,
          workers: int = DEFAULT_SWEEP_WORKERS) -> GrowthFit:
    """N ごとに K_N を並列に評価し増大度をあてはめる"""
    ns = sorted(ns)
    if any(n % 2 == 0 for n in ns):
        raise ValueError(f"All N must be odd: {ns}")
    run = evaluator or _evaluator(triangulation, decoration, cut_angle, budget)
    log_k, log_psi, phases = [], [], []
    for n, result in zip(ns, _evaluate_all(run, ns, workers)):
        log_k.append(result.log_abs_k)
        log_psi.append(result.log_psi.real)
        phases.append(result.log_k.imag)
        logger.info(f"Sweep N={n}: log|K| = {result.log_abs_k:.6f}")
    fit = fit_growth(ns, log_k, log_psi, phases, reference.value.imag if reference else None)
    logger.info(f"Growth slope {fit.slope:.6f} ± {fit.slope_error:.2e} (psi estimate {fit.psi_slope})")
    return fit


# ---------------------------------------------------------------------------
# 複素数のあてはめ
# ---------------------------------------------------------------------------

def _wrap(angle: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """(-π, π] へ"""
    return np.pi - np.mod(np.pi - angle, 2 * np.pi)


def _circular_mean(angles: np.ndarray) -> Tuple[float, float]:
    """平均角と合成ベクトルの長さ"""
    resultant = np.mean(np.exp(1j * angles))
    return float(np.angle(resultant)), float(abs(resultant))


@dataclass
class ComplexFitProbe:
    """
    log K_N^8 = 8N (C + N R) / (2πi) + log D のあてはめ

    実部 Re R, Re C は周期 r_period, c_period を法として (arg D と合わせて) 決まる
    """
    ns: List[int]
    log_k8: List[complex]
    im_r: float
    im_c: float
    log_abs_d: float
    re_r: float
    re_c: float
    arg_d: float
    step: int
    magnitude_residual: float
    phase_residual: float

    @property
    def r_period(self) -> float:
        return math.pi ** 2 / (4 * self.step ** 2)

    @property
    def c_period(self) -> float:
        return math.pi ** 2 / (2 * self.step)

    @property
    def r(self) -> complex:
        return complex(self.re_r, self.im_r)

    @property
    def c(self) -> complex:
        return complex(self.re_c, self.im_c)

    @property
    def d(self) -> complex:
        return cmath.rect(math.exp(self.log_abs_d), self.arg_d)

    def compare(self, invariant: DilogValue) -> Dict[str, float]:
        """二重対数不変量との差 (実部は r_period を法として)"""
        diff = self.re_r - invariant.value.real
        k = round(diff / self.r_period)
        return {
            "im_difference": self.im_r - invariant.value.imag,
            "re_difference": diff - k * self.r_period,
        }

    def to_dict(self) -> Dict:
        return {
            "N": self.ns,
            "R": [self.re_r, self.im_r],
            "C": [self.re_c, self.im_c],
            "D": [self.d.real, self.d.imag],
            "r_period": self.r_period,
            "c_period": self.c_period,
            "magnitude_residual": self.magnitude_residual,
            "phase_residual": self.phase_residual,
        }


def ansatz_log_k(ns: Sequence[int], c: complex, r: complex, d: complex) -> List[complex]:
    """仮説形から log K_N を作る (log K_N^8 / 8)"""
    return [(8 * n * (c + n * r) / (2j * math.pi) + cmath.log(d)) / 8 for n in ns]


def fit_complex(ns: Sequence[int], log_k: Sequence[complex]) -> ComplexFitProbe:
    """
    K_N^8 の絶対値と偏角の両方をあてはめる

    絶対値: log|K^8| = (4/π)(N Im C + N² Im R) + log|D| を最小二乗で解く。
    偏角: 等間隔の N の二階差分から Re R、一階差分から Re C を求める
    """
    ns = list(ns)
    if len(ns) < MIN_PROBE_SAMPLES:
        raise PhaseUnwrapFailure(f"Need at least {MIN_PROBE_SAMPLES} values of N, got {len(ns)}")
    steps = {b - a for a, b in zip(ns, ns[1:])}
    if len(steps) != 1 or next(iter(steps)) <= 0:
        raise PhaseUnwrapFailure(f"N must be equally spaced and increasing: {ns}")
    h = next(iter(steps))
    n_arr = np.asarray(ns, dtype=float)
    log_k8 = 8 * np.asarray(log_k, dtype=complex)

    features = np.column_stack([4 * n_arr / math.pi, 4 * n_arr ** 2 / math.pi])
    model = LinearRegression()
    model.fit(features, log_k8.real)
    im_c, im_r = (float(v) for v in model.coef_)
    log_abs_d = float(model.intercept_)
    magnitude_residual = float(np.sqrt(np.mean((model.predict(features) - log_k8.real) ** 2)))

    phases = log_k8.imag
    second = _wrap(phases[2:] - 2 * phases[1:-1] + phases[:-2])
    mean_second, length = _circular_mean(second)
    if length < 1e-6:
        raise PhaseUnwrapFailure("Second differences of the phase have no preferred direction")
    r_period = math.pi ** 2 / (4 * h ** 2)
    re_r = float(np.mod(-math.pi * mean_second / (8 * h ** 2), r_period))

    reduced = phases + 4 / math.pi * n_arr ** 2 * re_r
    mean_first, _ = _circular_mean(_wrap(np.diff(reduced)))
    c_period = math.pi ** 2 / (2 * h)
    re_c = float(np.mod(-math.pi * mean_first / (4 * h), c_period))

    arg_d, _ = _circular_mean(_wrap(reduced + 4 / math.pi * n_arr * re_c))
    model_phase = -(4 / math.pi) * (n_arr * re_c + n_arr ** 2 * re_r) + arg_d
    phase_residual = float(np.sqrt(np.mean(_wrap(phases - model_phase) ** 2)))

    probe = ComplexFitProbe(
        ns=ns,
        log_k8=list(log_k8),
        im_r=im_r,
        im_c=im_c,
        log_abs_d=log_abs_d,
        re_r=re_r,
        re_c=re_c,
        arg_d=arg_d,
        step=h,
        magnitude_residual=magnitude_residual,
        phase_residual=phase_residual,
    )
    logger.debug(f"Complex fit: R = {probe.r}, C = {probe.c}, residuals {magnitude_residual:.2e}/{phase_residual:.2e}")
    return probe


def complex_probe(triangulation: Triangulation, decoration: GlobalDecoration, ns: Sequence[int],
                  cut_angle: float = math.pi, budget: Optional[int] = DEFAULT_BUDGET,
                  evaluator: Optional[Evaluator] = None,
                  workers: int = DEFAULT_SWEEP_WORKERS) -> ComplexFitProbe:
    """N ごとの K_N から (R, C, D) をあてはめる"""
    ns = sorted(ns)
    run = evaluator or _evaluator(triangulation, decoration, cut_angle, budget)
    log_k = [result.log_k for result in _evaluate_all(run, ns, workers)]
    probe = fit_complex(ns, log_k)
    logger.info(f"Complex probe over N={ns}: R = {probe.r:.6f}, phase residual {probe.phase_residual:.2e}")
    return probe


def plot_growth(fit: GrowthFit, output_path: Union[str, Path]) -> None:
    """log|K_N| を N²/2π に対して描き、あてはめた直線を重ねる"""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x = np.asarray(fit.ns, dtype=float) ** 2 / (2 * math.pi)
    fig, ax = plt.subplots(figsize=(10, 6))
    ax.scatter(x, fit.log_abs_k, s=60, alpha=0.7, edgecolors="black", label="log|K_N|")
    grid = np.linspace(x.min(), x.max(), 100)
    ax.plot(grid, fit.slope * grid + fit.intercept, "r-", linewidth=2,
            label=f"slope = {fit.slope:.4f} ± {fit.slope_error:.1e}")
    ax.set_xlabel("N² / 2π", fontsize=12)
    ax.set_ylabel("log|K_N|", fontsize=12)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(output_path)
    plt.close(fig)
    logger.info(f"Growth plot saved: {output_path}")
