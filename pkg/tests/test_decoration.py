"""
分岐・コサイクル・チャージの検証
"""
import pytest

from models.decoration import (
    BorelValue, Branching, DecoratedTetrahedron, GlobalDecoration, all_branchings,
    charge_check, check_branching, coboundary_cocycle, cocycle_check, is_valid_charge, mirror, rescale, s4_act,
    validate_d_triangulation,
)
from models.triangulation import validate_hamiltonian
from utils.exceptions import CoherentFace, NoTotalOrder
from utils.numbers import gaussian, is_exact


def test_check_branching_identity():
    branching = check_branching([True] * 6)
    assert branching.order == (0, 1, 2, 3)
    assert branching.position == (0, 1, 2, 3)


def test_check_branching_reversed():
    branching = check_branching([False] * 6, sign=-1)
    assert branching.order == (3, 2, 1, 0)
    assert branching.sign == -1


def test_coherent_face_rejected():
    # 0->1, 1->2, 2->0
    orientations = [True, False, True, True, True, True]
    with pytest.raises((CoherentFace, NoTotalOrder)):
        check_branching(orientations)


def test_all_branchings_are_total_orders():
    found = all_branchings()
    assert len(found) == 24
    assert len({b.order for b in found}) == 24


def test_wrong_length_rejected():
    with pytest.raises(NoTotalOrder):
        check_branching([True] * 5)


def test_valid_charge():
    assert is_valid_charge((1, 0, 0, 0, 0, 1))
    assert is_valid_charge((0, 1, 0, 0, 1, 0))
    assert is_valid_charge((2, -1, 0, 0, -1, 2))
    assert not is_valid_charge((1, 0, 0, 0, 1, 0))
    assert not is_valid_charge((1, 1, 0, 0, 1, 1))


def _tetrahedron():
    values = tuple(BorelValue(1, complex(k + 1, k)) for k in range(6))
    return DecoratedTetrahedron(Branching((0, 1, 2, 3), 1), values, (1, 0, 0, 0, 0, 1))


def test_s4_identity():
    dtet = _tetrahedron()
    assert s4_act((0, 1, 2, 3), dtet) == dtet


def test_s4_transposition_flips_sign_and_inverts():
    dtet = _tetrahedron()
    moved = s4_act((1, 0, 2, 3), dtet)
    assert moved.sign == -1
    assert moved.branching.order == (1, 0, 2, 3)
    # 辺 [01] だけ向きが変わる
    assert moved.cocycle[0] == dtet.cocycle[0].inverse()
    assert moved.cocycle[1:] == dtet.cocycle[1:]
    assert moved.charge == dtet.charge


def test_borel_arithmetic():
    a = BorelValue(2, 3)
    b = BorelValue(0.5, 1)
    product = a * b
    assert product.t == pytest.approx(1)
    assert product.x == pytest.approx(2 * 1 + 3 / 0.5)
    identity = a * a.inverse()
    assert identity.close_to(BorelValue(1, 0))
    assert (a.matrix() @ b.matrix()) == pytest.approx(product.matrix())


@pytest.mark.parametrize("fixture", ["simplex", "double_tet", "bubbled", "collapsed", "hopf"])
def test_samples_are_valid(fixture, request):
    tri, decoration = request.getfixturevalue(fixture)
    report = validate_d_triangulation(tri, decoration)
    assert report.passed, report.failed_items()


def test_hopf_join_structure(hopf):
    tri, decoration = hopf
    assert (tri.n_tets, tri.n_vertices, tri.n_edges, tri.n_faces) == (9, 6, 15, 18)
    assert tri.euler_characteristic() == 0
    assert tri.orientation is not None
    assert validate_hamiltonian(tri).components == 2
    # 三角形の辺は価数3、結合の辺は価数4
    valences = sorted(tri.edge_valence(s) for s in range(tri.n_edges))
    assert valences == [3] * 6 + [4] * 9
    assert {s for s in range(tri.n_edges) if tri.edge_valence(s) == 3} == set(tri.hamiltonian)
    report = charge_check(tri, decoration.charges)
    assert report.valid
    assert report.class_vanishes


def test_exact_sample_is_valid(simplex_exact):
    tri, decoration = simplex_exact
    assert all(is_exact(z.x) for z in decoration.cocycle.values())
    assert validate_d_triangulation(tri, decoration).passed


def test_simplex_charges(simplex):
    tri, decoration = simplex
    report = charge_check(tri, decoration.charges)
    assert report.valid
    assert report.class_vanishes


def test_charge_violation_reported(simplex):
    tri, decoration = simplex
    charges = list(decoration.charges)
    charges[0] = (1, 0, 0, 0, 0, 1) if charges[0] != (1, 0, 0, 0, 0, 1) else (0, 0, 1, 1, 0, 0)
    report = charge_check(tri, charges)
    assert report.edge_violations
    assert not report.valid
    result = validate_d_triangulation(tri, GlobalDecoration(decoration.branchings, decoration.cocycle, tuple(charges)))
    assert "edge_sums" in result.failed_items()


def test_broken_cocycle_reported(double_tet):
    tri, decoration = double_tet
    cocycle = dict(decoration.cocycle)
    cocycle[0] = BorelValue(cocycle[0].t, cocycle[0].x + 1)
    broken = GlobalDecoration(decoration.branchings, cocycle, decoration.charges)
    assert not cocycle_check(tri, broken)
    assert "cocycle" in validate_d_triangulation(tri, broken).failed_items()


def test_wrong_sign_reported(double_tet):
    tri, decoration = double_tet
    branchings = (Branching(decoration.branchings[0].order, -decoration.branchings[0].sign),) + \
        decoration.branchings[1:]
    broken = GlobalDecoration(branchings, decoration.cocycle, decoration.charges)
    assert "orientation" in validate_d_triangulation(tri, broken).failed_items()


def test_shape_mismatch_reported(double_tet):
    tri, decoration = double_tet
    broken = GlobalDecoration(decoration.branchings[:1], decoration.cocycle, decoration.charges)
    report = validate_d_triangulation(tri, broken)
    assert not report.passed
    assert "shape" in report.failed_items()


def test_rescale_keeps_validity(simplex):
    tri, decoration = simplex
    scaled = rescale(decoration, 3 - 2j)
    assert validate_d_triangulation(tri, scaled).passed
    for s, z in decoration.cocycle.items():
        assert complex(scaled.cocycle[s].x) == pytest.approx((3 - 2j) * complex(z.x))


def test_mirror_is_valid_and_involutive(simplex):
    tri, decoration = simplex
    mirrored = mirror(decoration)
    assert validate_d_triangulation(tri, mirrored).passed
    assert all(b.sign == -a.sign for a, b in zip(decoration.branchings, mirrored.branchings))
    twice = mirror(mirrored)
    for s, z in decoration.cocycle.items():
        assert twice.cocycle[s].close_to(z)


def test_exact_values_stay_exact():
    a = BorelValue(gaussian(1), gaussian(2, 1))
    b = BorelValue(gaussian(2), gaussian(0, 1))
    assert is_exact((a * b).x)
    assert (a * a.inverse()).close_to(BorelValue(gaussian(1), gaussian(0)))


def test_coboundary_is_cocycle(double_tet):
    tri, decoration = double_tet
    values = {
        tri.vertex_class[(0, v)]: BorelValue(t, x)
        for v, (t, x) in enumerate([(1, 0), (2 + 1j, 0.5), (0.5j, -1), (1.5, 2 - 1j)])
    }
    cocycle = coboundary_cocycle(tri, decoration.branchings, values)
    rebuilt = GlobalDecoration(decoration.branchings, cocycle, decoration.charges)
    assert cocycle_check(tri, rebuilt)
    z = cocycle[tri.find_edge(0, 0, 1)]
    expected = values[tri.vertex_class[(0, 0)]].inverse() * values[tri.vertex_class[(0, 1)]]
    assert complex(z.t) == pytest.approx(complex(expected.t))
    assert complex(z.x) == pytest.approx(complex(expected.x))
