"""
量子層: 巡回表現・量子二重対数・6j テンソル
"""
import cmath

import numpy as np
import pytest

from controllers.quantum import (
    CyclicRep, RootSystem, build_state_tensor, clebsch_gordan, cyclic_clebsch_gordan, cyclic_dilog,
    fourier_gauge, intertwiner_rank, pentagon_defect, reduce_mod_n, six_j, state_tensors, weight_shift,
)
from controllers.transit import branched_catalog
from models.decoration import BorelValue
from utils.exceptions import ConstraintViolated, EvenN, FormulaDomain, NotFull, PoleHit

A = BorelValue(1.2 + 0.1j, 0.7 - 0.3j)
B = BorelValue(0.9 + 0j, 0.4 + 0.5j)


def _rep(root_system, z):
    return CyclicRep(root_system.root(z.t), root_system.root(z.x), root_system.n)


@pytest.mark.parametrize("n", [1, 2, 4, 10])
def test_root_system_rejects_even(n):
    with pytest.raises(EvenN):
        RootSystem(n)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_root_system(n):
    root_system = RootSystem(n)
    assert root_system.omega ** n == pytest.approx(1)
    for c in range(-3, 4):
        assert (2 * root_system.half(c)) % n == c % n
    assert root_system.root(2 + 1j) ** n == pytest.approx(2 + 1j)


def test_cyclic_rep_relations():
    root_system = RootSystem(5)
    rep = _rep(root_system, A)
    k, e = rep.k_matrix(), rep.e_matrix()
    assert np.allclose(np.linalg.matrix_power(k, 5), A.t * np.eye(5))
    assert np.allclose(np.linalg.matrix_power(e, 5), A.x * np.eye(5))
    assert np.allclose(k @ e, root_system.omega * e @ k)


def test_cyclic_rep_needs_full_value():
    with pytest.raises(NotFull):
        CyclicRep(1, 0, 3)


def _triple(n):
    x, y = 0.8 + 0.3j, 1.1 - 0.2j
    z = (x ** n + y ** n) ** (1 / n)
    return x, y, z


@pytest.mark.parametrize("n", [3, 5])
def test_cyclic_dilog_recursion(n):
    x, y, z = _triple(n)
    omega = cmath.exp(2j * cmath.pi / n)
    assert cyclic_dilog(x, y, z, 0, n) == 1
    for m in range(n - 1):
        ratio = cyclic_dilog(x, y, z, m + 1, n) / cyclic_dilog(x, y, z, m, n)
        assert ratio == pytest.approx(y / (z - x * omega ** (m + 1)))
    # 周期性: N 個の因子の積は 1
    assert cyclic_dilog(x, y, z, n - 1, n) * y / (z - x) == pytest.approx(1)


def test_cyclic_dilog_errors():
    x, y, z = _triple(3)
    with pytest.raises(ConstraintViolated):
        cyclic_dilog(x, y, z + 1, 1, 3)
    with pytest.raises(ValueError):
        cyclic_dilog(x, y, z, 3, 3)
    omega = cmath.exp(2j * cmath.pi / 3)
    # z = x ω が極
    with pytest.raises(PoleHit):
        cyclic_dilog(1 + 0j, 1e-20, omega, 2, 3)


@pytest.mark.parametrize("n", [3, 5])
def test_clebsch_gordan_is_full_rank(n):
    root_system = RootSystem(n)
    rep_a, rep_b, rep_m = _rep(root_system, A), _rep(root_system, B), _rep(root_system, A * B)
    assert 0 <= weight_shift(rep_a, rep_b, rep_m) < n
    assert clebsch_gordan(rep_a, rep_b, rep_m).shape == (n, n, n, n)
    assert intertwiner_rank(rep_a, rep_b, rep_m) == n * n


def test_six_j_shape():
    root_system = RootSystem(3)
    c = BorelValue(0.8 - 0.2j, -0.5 + 0.9j)
    values = [A, B, c, A * B, B * c, A * B * c]
    f = six_j([_rep(root_system, z) for z in values])
    assert f.shape == (3, 3, 3, 3)
    assert np.all(np.isfinite(f))


def test_state_tensors_of_simplex(simplex):
    tri, decoration = simplex
    root_system = RootSystem(3)
    reduced = reduce_mod_n(tri, decoration, root_system)
    assert set(reduced.reps) == set(range(tri.n_edges))
    for charge, half in zip(decoration.charges, reduced.half_charges):
        assert all((2 * h - c) % 3 == 0 for c, h in zip(charge, half))

    tensors = state_tensors(tri, decoration, reduced)
    assert len(tensors) == tri.n_tets
    for t, tensor in enumerate(tensors):
        assert tensor.entries.shape == (3, 3, 3, 3)
        assert tensor.sign == decoration.branchings[t].sign
        payload = tensor.to_bytes(t)
        assert len(payload) == 12 + 16 * 3 ** 4


def test_uncharged_tensor_has_no_scale(simplex):
    tri, decoration = simplex
    root_system = RootSystem(3)
    reduced = reduce_mod_n(tri, decoration, root_system)
    dtet = decoration.tetrahedron(0, tri)
    reps = [reduced.reps[tri.edge_class[(0, e)]] for e in range(6)]
    plain = build_state_tensor(dtet, reps, root_system, charged=False)
    charged = build_state_tensor(dtet, reps, root_system)
    assert plain.log_scale == 0
    assert np.allclose(plain.entries, charged.entries)


@pytest.mark.slow
@pytest.mark.parametrize("entry", [e for e in branched_catalog() if e.admissible])
def test_pentagon_relation(entry):
    defect = pentagon_defect(entry, RootSystem(3), np.random.default_rng(7))
    assert defect < 1e-6


@pytest.mark.parametrize("n", [3, 5])
def test_cyclic_dilog_with_inverse_square_root(n):
    x, y, z = _triple(n)
    zeta = cmath.exp(-4j * cmath.pi / n)
    for m in range(n - 1):
        ratio = cyclic_dilog(x, y, z, m + 1, n, step=-2) / cyclic_dilog(x, y, z, m, n, step=-2)
        assert ratio == pytest.approx(y / (z - x * zeta ** (m + 1)))
    with pytest.raises(ValueError):
        cyclic_dilog(x, y, z, 1, 9, step=3)


@pytest.mark.parametrize("n", [3, 5])
def test_dilog_intertwiner_matches_coproduct_iteration(n):
    root_system = RootSystem(n)
    reps = _rep(root_system, A), _rep(root_system, B), _rep(root_system, A * B)
    closed = cyclic_clebsch_gordan(*reps)
    iterated = clebsch_gordan(*reps)
    assert np.allclose(np.einsum("ijpl,pc->ijcl", closed, fourier_gauge(n)), iterated)


@pytest.mark.parametrize("n", [3, 5])
def test_dilog_intertwiner_commutes_with_coproduct(n):
    root_system = RootSystem(n)
    rep_a, rep_b, rep_m = _rep(root_system, A), _rep(root_system, B), _rep(root_system, A * B)
    closed = cyclic_clebsch_gordan(rep_a, rep_b, rep_m)
    delta_k = np.kron(rep_a.k_matrix(), rep_b.k_matrix())
    delta_e = (np.kron(rep_a.e_matrix(), np.linalg.inv(rep_b.k_matrix()))
               + np.kron(rep_a.k_matrix(), rep_b.e_matrix()))
    for p in range(n):
        embedding = closed[:, :, p, :].reshape(n * n, n)
        assert np.allclose(delta_k @ embedding, embedding @ rep_m.k_matrix())
        assert np.allclose(delta_e @ embedding, embedding @ rep_m.e_matrix())


def test_dilog_intertwiner_needs_cocycle_relation():
    root_system = RootSystem(3)
    rep_a, rep_b = _rep(root_system, A), _rep(root_system, B)
    product = A * B
    # t は合わせ、x だけずらす
    wrong = CyclicRep(root_system.root(product.t), root_system.root(product.x + 0.5), 3)
    with pytest.raises(FormulaDomain):
        cyclic_clebsch_gordan(rep_a, rep_b, wrong)
