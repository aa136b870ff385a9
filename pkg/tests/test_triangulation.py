"""
商複体の構成と H の検証
"""
import pytest

from models.triangulation import (
    EDGES, FACES, FacePairing, build_quotient, edge_index, face_edges, is_fullable,
    opposite_edge, perm_sign, validate_hamiltonian,
)
from utils.exceptions import InconsistentVertexMap, UnpairedFace
from utils.sample_data import figure_eight_triangulation


def test_edge_numbering():
    assert [edge_index(u, v) for u, v in EDGES] == list(range(6))
    assert edge_index(3, 1) == edge_index(1, 3)
    for e in range(6):
        assert set(EDGES[e]).isdisjoint(EDGES[opposite_edge(e)])
    assert sorted(face_edges(0)) == [3, 4, 5]


def test_perm_sign():
    assert perm_sign((0, 1, 2, 3)) == 1
    assert perm_sign((1, 0, 2, 3)) == -1
    assert perm_sign((1, 2, 0, 3)) == 1
    assert perm_sign((3, 2, 1, 0)) == 1


def test_pairing_reversed_is_inverse():
    pairing = FacePairing((0, 1), (1, 2), (3, 0, 1))
    back = pairing.reversed()
    perm, inverse = pairing.permutation(), back.permutation()
    assert all(inverse[perm[v]] == v for v in range(4))
    assert back.reversed() == pairing


def test_single_tetrahedron_self_gluing():
    pairings = [
        FacePairing((0, 0), (0, 1), (0, 2, 3)),
        FacePairing((0, 2), (0, 3), (0, 1, 2)),
    ]
    tri = build_quotient(1, pairings)
    assert tri.n_edges == 3
    assert tri.n_vertices == 2
    assert tri.n_faces == 2
    assert tri.euler_characteristic() == 0
    assert tri.edge_valence(tri.edge_class[(0, edge_index(1, 2))]) == 4


def test_simplex_boundary_quotient(simplex):
    tri, _ = simplex
    assert (tri.n_tets, tri.n_vertices, tri.n_edges, tri.n_faces) == (5, 5, 10, 10)
    assert tri.euler_characteristic() == 0
    assert tri.is_orientable()
    assert all(tri.edge_valence(s) == 3 for s in range(tri.n_edges))
    assert is_fullable(tri)


def test_simplex_boundary_hamiltonian(simplex):
    tri, _ = simplex
    report = validate_hamiltonian(tri)
    assert report.valid
    assert report.components == 1
    assert len(tri.hamiltonian) == 5


def test_double_tetrahedron_quotient(double_tet):
    tri, _ = double_tet
    assert (tri.n_vertices, tri.n_edges, tri.n_faces) == (4, 6, 4)
    assert all(tri.edge_valence(s) == 2 for s in range(tri.n_edges))
    assert tri.orientation[0] == -tri.orientation[1]


def test_figure_eight_is_not_fullable():
    tri = figure_eight_triangulation()
    assert tri.n_vertices == 1
    assert tri.n_edges == 2
    assert sorted(tri.edge_valence(s) for s in range(2)) == [6, 6]
    assert tri.is_orientable()
    assert not is_fullable(tri)


def test_unpaired_face_raises():
    with pytest.raises(UnpairedFace):
        build_quotient(2, [FacePairing((0, f), (1, f), FACES[f]) for f in range(3)])


def test_non_bijective_map_raises():
    with pytest.raises(InconsistentVertexMap):
        build_quotient(2, [FacePairing((0, 0), (1, 0), (1, 1, 2))])


def test_face_paired_twice_raises():
    pairings = [FacePairing((0, f), (1, f), FACES[f]) for f in range(4)]
    pairings.append(FacePairing((0, 0), (1, 1), (0, 2, 3)))
    with pytest.raises(InconsistentVertexMap):
        build_quotient(2, pairings)


def test_hamiltonian_out_of_range(double_tet):
    tri, _ = double_tet
    with pytest.raises(InconsistentVertexMap):
        tri.with_hamiltonian([99])


def test_hamiltonian_missing_vertex(double_tet):
    tri, _ = double_tet
    partial = sorted(tri.hamiltonian)[:2]
    report = validate_hamiltonian(tri, partial)
    assert not report.valid
    assert report.problems


def test_relabeling_keeps_counts(simplex):
    tri, _ = simplex
    order = [3, 0, 4, 1, 2]
    new_id = {old: new for new, old in enumerate(order)}
    pairings = [
        FacePairing((new_id[p.source[0]], p.source[1]), (new_id[p.target[0]], p.target[1]), p.vertex_map)
        for p in tri.pairings
    ]
    relabeled = build_quotient(5, pairings)
    assert (relabeled.n_vertices, relabeled.n_edges, relabeled.n_faces) == (5, 10, 10)
    assert sorted(relabeled.edge_valence(s) for s in range(10)) == [3] * 10


def test_to_dict_round_trip(simplex):
    tri, _ = simplex
    data = tri.to_dict()
    pairings = [FacePairing(tuple(p["src"]), tuple(p["dst"]), tuple(p["map"])) for p in data["pairings"]]
    rebuilt = build_quotient(data["tetrahedra"], pairings, data["hamiltonian"])
    assert rebuilt.edge_class == tri.edge_class
    assert rebuilt.hamiltonian == tri.hamiltonian
