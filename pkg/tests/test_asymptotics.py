"""
増大度のあてはめと複素数のあてはめ
"""
import cmath
import math
import threading
import time

import numpy as np
import pytest

from controllers.asymptotics import (
    ansatz_log_k, complex_probe, feasible_ns, fit_complex, fit_growth, parse_range, plot_growth,
    sweep,
)
from controllers.dilog import DilogValue
from controllers.statesum import StateSumResult, plan_contraction
from utils.exceptions import PhaseUnwrapFailure

NS = [3, 5, 7, 9, 11]
SLOPE = 0.8
C = 0.7 + 0.2j
R = 0.3 + 0.05j
D = cmath.rect(1.5, 0.4)


def _synthetic(n):
    """log|K_N| = SLOPE · N²/2π + 0.25, log|Ψ| = SLOPE · N/2π - 1"""
    log_h = complex(SLOPE * n / (2 * math.pi) + 0.25 / n, 0.1 * n)
    log_psi = complex(SLOPE * n / (2 * math.pi) - 1, 0.0)
    return StateSumResult(n, log_psi, log_h)


def test_parse_range():
    assert parse_range("3:9:2") == [3, 5, 7, 9]
    assert parse_range("3:9") == [3, 5, 7, 9]
    assert parse_range("3,5, 9") == [3, 5, 9]


def test_fit_growth_recovers_slope():
    log_k = [SLOPE * n ** 2 / (2 * math.pi) + 0.25 for n in NS]
    log_psi = [SLOPE * n / (2 * math.pi) - 1 for n in NS]
    fit = fit_growth(NS, log_k, log_psi)
    assert fit.slope == pytest.approx(SLOPE)
    assert fit.intercept == pytest.approx(0.25)
    assert fit.r2 == pytest.approx(1.0)
    assert fit.psi_slope == pytest.approx(SLOPE)
    assert math.isnan(fit.slopes_so_far[0])
    assert fit.slopes_so_far[1:] == pytest.approx([SLOPE] * (len(NS) - 1))


def test_fit_growth_window_is_stable(rng):
    noise = rng.normal(scale=1e-3, size=len(NS) + 2)
    ns = NS + [13, 15]
    log_k = [SLOPE * n ** 2 / (2 * math.pi) + e for n, e in zip(ns, noise)]
    small = fit_growth(ns[:-2], log_k[:-2])
    large = fit_growth(ns, log_k)
    assert abs(large.slope - small.slope) < small.slope_error + large.slope_error + 1e-3


def test_fit_growth_needs_two_points():
    with pytest.raises(ValueError):
        fit_growth([3], [1.0])


def test_growth_table():
    fit = fit_growth([3, 5], [1.0, 800.0], phases=[0.5, 0.0])
    df = fit.to_dataframe()
    assert list(df.columns) == ["N", "Re K", "Im K", "log|K|", "slope-so-far"]
    assert df.loc[0, "Re K"] == pytest.approx(math.e * math.cos(0.5))
    assert math.isnan(df.loc[1, "Re K"])


def test_sweep_with_reference():
    reference = DilogValue(complex(0.1, SLOPE))
    fit = sweep(None, None, list(reversed(NS)), reference=reference, evaluator=_synthetic)
    assert fit.ns == NS
    assert fit.slope == pytest.approx(SLOPE)
    assert fit.psi_slope == pytest.approx(SLOPE)
    assert fit.reference == SLOPE
    assert fit.discrepancy == pytest.approx(0, abs=1e-9)
    data = fit.to_dict()
    assert data["N"] == NS


def test_sweep_rejects_even_n():
    with pytest.raises(ValueError):
        sweep(None, None, [3, 4], evaluator=_synthetic)


def test_sweep_runs_in_parallel_and_keeps_order():
    seen = []
    lock = threading.Lock()

    def slow_small_n(n):
        # 小さい N ほど遅く終わる
        time.sleep(0.01 * (12 - n))
        with lock:
            seen.append((n, threading.current_thread().name))
        return _synthetic(n)

    parallel = sweep(None, None, NS, evaluator=slow_small_n, workers=4)
    serial = sweep(None, None, NS, evaluator=_synthetic, workers=1)
    assert parallel.ns == NS
    assert parallel.log_abs_k == pytest.approx(serial.log_abs_k)
    assert parallel.phases == pytest.approx(serial.phases)
    assert parallel.slope == pytest.approx(serial.slope)
    assert sorted(n for n, _ in seen) == NS
    assert all(name.startswith("sweep") for _, name in seen)


def test_feasible_ns_respects_budget(simplex):
    tri, _ = simplex
    assert feasible_ns(tri, [3, 5], budget=None) == [3, 5]
    budget = plan_contraction(tri, 3, budget=None).peak_bytes
    assert feasible_ns(tri, [3, 5, 7], budget=budget) == [3]


def test_complex_fit_recovers_ansatz():
    log_k = ansatz_log_k(NS, C, R, D)
    probe = fit_complex(NS, log_k)
    assert probe.r == pytest.approx(R, abs=1e-6)
    assert probe.c == pytest.approx(C, abs=1e-6)
    assert probe.d == pytest.approx(D, abs=1e-6)
    assert probe.magnitude_residual < 1e-6
    assert probe.phase_residual < 1e-6
    assert probe.r_period == pytest.approx(math.pi ** 2 / 16)


def test_complex_fit_is_deterministic():
    log_k = ansatz_log_k(NS, C, R, D)
    assert fit_complex(NS, log_k).to_dict() == fit_complex(NS, log_k).to_dict()


def test_complex_fit_compare():
    probe = fit_complex(NS, ansatz_log_k(NS, C, R, D))
    shifted = DilogValue(complex(R.real + probe.r_period, R.imag))
    differences = probe.compare(shifted)
    assert differences["re_difference"] == pytest.approx(0, abs=1e-6)
    assert differences["im_difference"] == pytest.approx(0, abs=1e-6)


@pytest.mark.parametrize("ns", [[3, 5, 7], [3, 5, 9, 11]])
def test_complex_fit_rejects_bad_samples(ns):
    log_k = ansatz_log_k(ns, C, R, D)
    with pytest.raises(PhaseUnwrapFailure):
        fit_complex(ns, log_k)


def test_complex_probe_uses_evaluator():
    def evaluator(n):
        log_k = ansatz_log_k([n], C, R, D)[0]
        return StateSumResult(n, 0j, log_k / n)

    probe = complex_probe(None, None, NS, evaluator=evaluator)
    assert probe.r == pytest.approx(R, abs=1e-6)


def test_plot_growth(tmp_path):
    fit = fit_growth(NS, [SLOPE * n ** 2 / (2 * math.pi) for n in NS])
    path = tmp_path / "growth.png"
    plot_growth(fit, path)
    assert path.exists()
    assert path.stat().st_size > 0
    assert np.isfinite(fit.slope)


def test_complex_fit_parallel_matches_serial():
    def evaluator(n):
        log_k = ansatz_log_k([n], C, R, D)[0]
        return StateSumResult(n, 0j, log_k / n)

    serial = complex_probe(None, None, NS, evaluator=evaluator, workers=1)
    parallel = complex_probe(None, None, list(reversed(NS)), evaluator=evaluator, workers=3)
    assert parallel.r == pytest.approx(serial.r, abs=1e-12)
    assert parallel.c == pytest.approx(serial.c, abs=1e-12)
