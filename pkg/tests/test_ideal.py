"""
イデアル化・辺積・平坦化
"""
import cmath
from itertools import permutations

import numpy as np
import pytest

from models.decoration import BorelValue, Branching, DecoratedTetrahedron, GlobalDecoration, s4_act
from models.formal_sum import s4_act_ideal
from models.ideal import (
    IdealTetrahedron, complete_triple, cross_ratio, edge_products, flattening_residuals, idealize,
    idealize_triangulation, principal_logs, shape_parameters, solve_flattening,
)
from models.triangulation import EDGES
from utils.exceptions import DegenerateModulus, NoSolution, NotFull
from utils.integer_lattice import solve_integer_system
from utils.numbers import gaussian, is_exact, to_complex
from utils.sample_data import figure_eight_triangulation

VERTICES = (0, 1, 1 + 1j, 2j)


def _parabolic(points, scale=1):
    cocycle = tuple(BorelValue(1, scale * (points[v] - points[u])) for u, v in EDGES)
    return DecoratedTetrahedron(Branching((0, 1, 2, 3), 1), cocycle, (1, 0, 0, 0, 0, 1))


def test_complete_triple_examples():
    triple = complete_triple(1j)
    assert to_complex(triple.w1) == pytest.approx((1 + 1j) / 2)
    assert to_complex(triple.w2) == pytest.approx(1 + 1j)
    assert np.prod(triple.as_complex()) == pytest.approx(-1)

    regular = cmath.exp(1j * cmath.pi / 3)
    assert all(w == pytest.approx(regular) for w in complete_triple(regular).as_complex())


@pytest.mark.parametrize("w0", [0, 1])
def test_complete_triple_degenerate(w0):
    with pytest.raises(DegenerateModulus):
        complete_triple(w0)


def test_complete_triple_identities(rng):
    for re, im in rng.normal(scale=3, size=(1000, 2)):
        w0, w1, w2 = complete_triple(complex(re, im)).as_complex()
        assert abs(w0 * w1 * w2 + 1) < 1e-12 * max(1, abs(w0 * w1 * w2))
        assert abs(w0 * w1 - w1 + 1) < 1e-12 * max(1, abs(w0 * w1))


def test_complete_triple_exact():
    triple = complete_triple(gaussian(0, 1))
    assert all(is_exact(w) for w in (triple.w0, triple.w1, triple.w2))
    assert to_complex(triple.w2) == pytest.approx(1 + 1j)


def test_idealize_matches_cross_ratio():
    dtet = _parabolic(VERTICES)
    p = shape_parameters(dtet)
    assert [to_complex(v) for v in p] == pytest.approx([1j - 1, -2, 3 - 1j])
    assert sum(to_complex(v) for v in p) == pytest.approx(0)

    ideal = idealize(dtet)
    assert to_complex(ideal.moduli.w0) == pytest.approx((3 + 1j) / 5)
    assert to_complex(ideal.moduli.w0) == pytest.approx(to_complex(cross_ratio(*VERTICES)))
    assert ideal.sign == 1
    assert ideal.charge == dtet.charge


def test_idealize_is_projective():
    base = idealize(_parabolic(VERTICES)).moduli.as_complex()
    scaled = idealize(_parabolic(VERTICES, scale=2 - 3j)).moduli.as_complex()
    assert scaled == pytest.approx(base)


def test_idealize_commutes_with_s4():
    dtet = _parabolic(VERTICES)
    ideal = idealize(dtet)
    for perm in permutations(range(4)):
        direct = idealize(s4_act(perm, dtet))
        moved = s4_act_ideal(perm, ideal)
        assert direct.branching == moved.branching
        assert direct.moduli.as_complex() == pytest.approx(moved.moduli.as_complex())


def test_idealize_needs_full_cocycle():
    dtet = _parabolic((0, 0, 1, 1j))
    with pytest.raises(NotFull):
        idealize(dtet)


@pytest.mark.parametrize("fixture", ["simplex", "double_tet", "bubbled", "collapsed", "hopf"])
def test_edge_products_of_samples(fixture, request):
    tri, decoration = request.getfixturevalue(fixture)
    ideal_tets, report = idealize_triangulation(tri, decoration)
    assert len(ideal_tets) == tri.n_tets
    assert report.passed, report.deviations
    df = report.to_dataframe()
    assert list(df.columns) == ["edge", "product_re", "product_im", "deviation"]
    assert len(df) == tri.n_edges


def test_broken_cocycle_breaks_edge_products(simplex):
    tri, decoration = simplex
    cocycle = dict(decoration.cocycle)
    z = cocycle[0]
    cocycle[0] = BorelValue(z.t, 3 * z.x)
    broken = GlobalDecoration(decoration.branchings, cocycle, decoration.charges)
    ideal_tets = [idealize(dtet) for dtet in broken.tetrahedra(tri)]
    assert not edge_products(tri, ideal_tets).passed


def test_figure_eight_edge_products(figure8):
    tri, ideal_tets, _ = figure8
    report = edge_products(tri, ideal_tets)
    assert report.passed
    assert report.flat_tetrahedra == []


def test_figure_eight_flattening(figure8):
    tri, ideal_tets, flattening = figure8
    assert max(abs(v) for v in flattening.p + flattening.q) <= 2
    assert all(abs(r) < 1e-9 for r in flattening_residuals(tri, ideal_tets, flattening))
    for l0, l1, l2 in flattening.log_parameters(ideal_tets):
        assert l0 + l1 + l2 == 0


def test_flattening_kernel_shifts(figure8):
    tri, ideal_tets, flattening = figure8
    for k in range(flattening.kernel.shape[1]):
        combination = [0] * flattening.kernel.shape[1]
        combination[k] = 1
        shifted = flattening.shifted(combination)
        assert all(abs(r) < 1e-9 for r in flattening_residuals(tri, ideal_tets, shifted))


def test_flattening_is_deterministic(figure8):
    tri, ideal_tets, flattening = figure8
    again = solve_flattening(ideal_tets, tri)
    assert (again.p, again.q) == (flattening.p, flattening.q)


def test_flattening_without_edge_condition():
    tri = figure_eight_triangulation()
    ideal_tets = [
        IdealTetrahedron(Branching((0, 1, 2, 3), 1), complete_triple(2j), (0, 0, 1, 1, 0, 0))
        for _ in range(2)
    ]
    with pytest.raises(NoSolution):
        solve_flattening(ideal_tets, tri)


def test_principal_logs_close():
    l0, l1, l2 = principal_logs(0.3 + 0.4j)
    assert l0 + l1 + l2 == pytest.approx(0)
    assert cmath.exp(l0) == pytest.approx(0.3 + 0.4j)


def test_integer_system():
    x0, kernel = solve_integer_system([[2, 4], [0, 3]], [2, 3])
    assert list(x0) == [-1, 1]
    assert kernel.shape == (2, 0)
    x0, kernel = solve_integer_system([[1, 1]], [3])
    assert int(x0.sum()) == 3
    assert kernel.shape == (2, 1)
    with pytest.raises(NoSolution):
        solve_integer_system([[2]], [1])
