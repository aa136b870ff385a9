"""
縮約計画と状態和の評価
"""
import cmath

import numpy as np
import pytest

from controllers.quantum import RootSystem
from controllers.statesum import (
    StateSumResult, augment, evaluate, evaluate_augmented, evaluate_naive, execute_plan,
    face_indices, plan_contraction, plan_network,
)
from controllers.transit import available_two_three, transit23, transit32
from models.decoration import GlobalDecoration, mirror, rescale
from utils.exceptions import (
    BudgetExceeded, FormulaDomain, InvalidDecoration, MultiplicityMismatch, StateSumOverflow,
)


def _same_log(a, b, tol=1e-8):
    """2πi の違いを無視した対数の一致"""
    return abs(cmath.exp(a - b) - 1) < tol


def _random_tensor(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def test_triangle_network(rng):
    operands = [("a", "b"), ("b", "c"), ("c", "a")]
    tensors = [_random_tensor(rng, (3, 3)) for _ in operands]
    plan = plan_network(operands, 3)
    assert plan.method == "exhaustive"
    assert len(plan.steps) == 2
    assert plan.cost <= plan.naive_cost
    expected = np.einsum("ab,bc,ca->", *tensors)
    assert _same_log(execute_plan(plan, tensors), cmath.log(expected))


def test_greedy_and_exhaustive_agree(rng):
    operands = [(0, 1, 2), (2, 3, 4), (4, 5, 0), (1, 3, 5)]
    tensors = [_random_tensor(rng, (3, 3, 3)) for _ in operands]
    exhaustive = plan_network(operands, 3, exhaustive_limit=6)
    greedy = plan_network(operands, 3, exhaustive_limit=1)
    assert greedy.method == "greedy"
    assert exhaustive.cost <= greedy.cost
    assert _same_log(execute_plan(exhaustive, tensors), execute_plan(greedy, tensors))


def test_open_indices_rejected(rng):
    plan = plan_network([("a", "b"), ("b", "c")], 3)
    assert plan.output == ("a", "c")
    with pytest.raises(FormulaDomain):
        execute_plan(plan, [_random_tensor(rng, (3, 3))] * 2)


def test_single_tensor_trace(rng):
    tensor = _random_tensor(rng, (3, 3))
    plan = plan_network([("a", "a")], 3)
    assert plan.method == "single"
    assert _same_log(execute_plan(plan, [tensor]), cmath.log(np.trace(tensor)))


def test_empty_network():
    with pytest.raises(FormulaDomain):
        plan_network([], 3)


def test_budget_exceeded(simplex):
    tri, _ = simplex
    with pytest.raises(BudgetExceeded):
        plan_contraction(tri, 3, budget=64)


def test_face_indices(simplex):
    tri, _ = simplex
    indices = face_indices(tri)
    assert len(indices) == tri.n_tets
    flat = [q for faces in indices for q in faces]
    assert sorted(set(flat)) == list(range(tri.n_faces))
    assert all(flat.count(q) == 2 for q in set(flat))


@pytest.mark.parametrize("fixture", ["double_tet", "simplex"])
def test_planned_matches_naive(fixture, request):
    tri, decoration = request.getfixturevalue(fixture)
    root_system = RootSystem(3)
    planned = evaluate(tri, decoration, root_system)
    naive = evaluate_naive(tri, decoration, root_system)
    assert planned.plan is not None
    assert planned.plan_cost <= planned.naive_cost
    assert _same_log(planned.log_psi, naive.log_psi)
    assert _same_log(planned.log_h, naive.log_h)


def test_naive_limit(simplex):
    tri, decoration = simplex
    with pytest.raises(BudgetExceeded):
        evaluate_naive(tri, decoration, RootSystem(3), max_states=100)


def test_invalid_decoration_rejected(double_tet):
    tri, decoration = double_tet
    broken = GlobalDecoration(decoration.branchings, decoration.cocycle, ((1, 0, 0, 0, 0, 1),) * 2)
    with pytest.raises(InvalidDecoration):
        evaluate(tri, broken, RootSystem(3))


def test_k_is_h_to_the_n(double_tet):
    tri, decoration = double_tet
    result = evaluate(tri, decoration, RootSystem(5))
    assert result.log_k == 5 * result.log_h
    assert _same_log(cmath.log(result.k), 5 * cmath.log(result.h), tol=1e-7)
    data = result.to_dict()
    assert data["N"] == 5
    assert data["root_choice"]["N"] == 5
    assert "plan" in data


def test_overflow_is_reported():
    result = StateSumResult(3, complex(900, 0), complex(900, 0))
    with pytest.raises(StateSumOverflow):
        _ = result.h
    data = result.to_dict()
    assert data["h"] is None
    assert data["log_abs_k"] == pytest.approx(2700)


def test_augmented_matches_direct(simplex):
    tri, decoration = simplex
    root_system = RootSystem(3)
    direct = evaluate(tri, decoration, root_system)
    terms = augment(tri, decoration, root_system)
    augmented = evaluate_augmented(terms, 3)
    assert _same_log(augmented.log_psi, direct.log_psi)
    assert _same_log(augmented.log_h, direct.log_h)


def test_augmented_multiplicity_mismatch(simplex):
    tri, decoration = simplex
    terms = augment(tri, decoration, RootSystem(3))
    with pytest.raises(MultiplicityMismatch):
        evaluate_augmented(terms[1:], 3)
    with pytest.raises(FormulaDomain):
        evaluate_augmented([], 3)


@pytest.mark.slow
def test_k_invariant_under_transit(simplex):
    tri, decoration = simplex
    root_system = RootSystem(3)
    before = evaluate(tri, decoration, root_system)
    moved = transit23(tri, decoration, available_two_three(tri, decoration)[0])
    after = evaluate(moved.triangulation, moved.decoration, root_system)
    assert _same_log(before.log_k, after.log_k, tol=1e-6)


@pytest.mark.slow
def test_mirror_conjugates_k(simplex):
    tri, decoration = simplex
    root_system = RootSystem(3)
    k = evaluate(tri, decoration, root_system).log_k
    k_mirror = evaluate(tri, mirror(decoration), root_system).log_k
    assert _same_log(k_mirror, k.conjugate(), tol=1e-6)


@pytest.mark.slow
def test_k_invariant_under_rescaling(simplex):
    tri, decoration = simplex
    root_system = RootSystem(3)
    k = evaluate(tri, decoration, root_system).log_k
    k_scaled = evaluate(tri, rescale(decoration, 2.5 - 1j), root_system).log_k
    assert _same_log(k_scaled, k, tol=1e-6)


# ---------------------------------------------------------------------------
# 非自明な絡み目 (三角形の結合) での不変性
# ---------------------------------------------------------------------------

def _apexes_differ(tri, face):
    t2, f2, _ = tri.gluing[face]
    return tri.vertex_class[face] != tri.vertex_class[(t2, f2)]


def _move_chain(tri, decoration):
    """2-3, 2-3, 3-2 の3手 (新しい辺の両端が異なる面を選ぶ)"""
    first = transit23(tri, decoration, available_two_three(tri, decoration)[0])
    tri1, dec1 = first.triangulation, first.decoration
    face = [f for f in available_two_three(tri1, dec1) if _apexes_differ(tri1, f)][-1]
    second = transit23(tri1, dec1, face)
    third = transit32(second.triangulation, second.decoration, second.new_edge)
    return [first, second, third]


@pytest.mark.slow
@pytest.mark.parametrize("fixture,n", [("simplex", 3), ("hopf", 3), ("simplex", 5), ("hopf", 5)])
def test_k_invariant_along_move_chain(fixture, n, request):
    tri, decoration = request.getfixturevalue(fixture)
    root_system = RootSystem(n)
    reference = evaluate(tri, decoration, root_system)
    for step in _move_chain(tri, decoration):
        result = evaluate(step.triangulation, step.decoration, root_system)
        assert _same_log(result.log_k, reference.log_k, tol=1e-6)
        assert abs(cmath.exp(n * (result.log_h - reference.log_h)) - 1) < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_k_invariant_under_random_rescaling(seed, simplex):
    tri, decoration = simplex
    rng = np.random.default_rng(seed)
    factor = complex(rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0))
    root_system = RootSystem(3)
    k = evaluate(tri, decoration, root_system).log_k
    k_scaled = evaluate(tri, rescale(decoration, factor), root_system).log_k
    assert _same_log(k_scaled, k, tol=1e-6)


@pytest.mark.slow
def test_hopf_join_rescaling_and_mirror(hopf):
    tri, decoration = hopf
    root_system = RootSystem(3)
    k = evaluate(tri, decoration, root_system).log_k
    assert _same_log(evaluate(tri, rescale(decoration, 0.75 + 0.5j), root_system).log_k, k, tol=1e-6)
    k_mirror = evaluate(tri, mirror(decoration), root_system).log_k
    assert _same_log(k_mirror, k.conjugate(), tol=1e-8)


@pytest.mark.parametrize("fixture", ["simplex", "double_tet", "bubbled", "collapsed", "hopf"])
def test_augmented_h_to_the_n_is_k(fixture, request):
    tri, decoration = request.getfixturevalue(fixture)
    root_system = RootSystem(3)
    direct = evaluate(tri, decoration, root_system)
    augmented = evaluate_augmented(augment(tri, decoration, root_system), 3)
    assert _same_log(3 * augmented.log_h, direct.log_k, tol=1e-8)
    assert _same_log(augmented.log_k, direct.log_k, tol=1e-8)
