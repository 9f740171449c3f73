import itertools
from math import comb

import numpy as np
import pytest

from pqst.ensembles import (EnsembleError, check_members, clifford_ensemble,
                            clifford_group_order, enumerate_clifford_group,
                            ensemble_info, maximal_isotropic_subspaces,
                            mub_ensemble, mub_partition, num_symplectics,
                            parse_ensemble_list, parse_ensemble_spec,
                            pauli_from_xz_vector, pauli_local_ensemble,
                            sample_global_clifford, stabilizer_basis_unitaries,
                            symplectic_matrix, clifford_from_tableau,
                            zeta_A, zeta_m_active, zeta_union, zeta_x)
from pqst.qcore import dag, is_unitary, spawn_rng


def test_zeta_A_sizes_and_p():
    for n in (1, 2, 3, 4):
        for r in range(1, n + 1):
            for a in itertools.combinations(range(1, n + 1), r):
                ens = zeta_A(n, a)
                assert ens.size == 2**r + 1
                assert ens.p == 2**r + 1
                assert ens.activity_signature == frozenset({frozenset(a)})
                assert ens.diagonal_trusted == (r == n)
                check_members(ens.name, ens.members)


def test_zeta_x_is_full_register():
    ens = zeta_x(2)
    assert ens.name == "zeta-X"
    assert ens.size == 5 and ens.diagonal_trusted


def test_zeta_union_sizes():
    z1 = zeta_union(2, [{1}, {2}])
    assert z1.size == 5 and z1.p == 5
    z2 = zeta_union(3, [{1, 2}, {1, 3}])
    assert z2.size == 9 and z2.p == 9  # the n=3 two-subset double-active union
    assert zeta_m_active(3, 1).size == 7
    assert zeta_m_active(3, 2).size == 13
    assert zeta_m_active(3, 3).size == 9
    for n in (2, 3):
        for m in range(1, n + 1):
            assert zeta_m_active(n, m).size == comb(n, m) * 2**m + 1


def test_zeta_validation_errors():
    with pytest.raises(EnsembleError):
        zeta_A(2, [])
    with pytest.raises(EnsembleError):
        zeta_A(2, [3])
    with pytest.raises(EnsembleError):
        zeta_union(3, [{1}, {2, 3}])  # unequal cardinality
    with pytest.raises(EnsembleError):
        zeta_union(2, [{1}, {1}])  # duplicates
    with pytest.raises(EnsembleError):
        zeta_m_active(2, 3)


def test_pauli_local_ensemble():
    ens = pauli_local_ensemble(2)
    assert ens.size == 9
    assert ens.inverse_kind == "per-site-pauli"
    assert ens.diagonal_trusted
    assert len(ens.activity_signature) == 3  # {1}, {2}, {1,2}
    check_members(ens.name, ens.members)


def test_clifford_closure_orders():
    assert len(enumerate_clifford_group(1)) == 24 == clifford_group_order(1)
    assert len(enumerate_clifford_group(2)) == 11520 == clifford_group_order(2)
    assert num_symplectics(3) == 1451520


def test_symplectic_matrices_are_symplectic():
    n = 2
    omega = np.zeros((2 * n, 2 * n), dtype=int)
    for i in range(n):
        omega[2 * i, 2 * i + 1] = 1
        omega[2 * i + 1, 2 * i] = 1
    for i in (0, 1, 17, 719):
        g = symplectic_matrix(i, n)
        assert np.array_equal((g @ omega @ g.T) % 2, omega)


def test_clifford_from_tableau_conjugation():
    rng = spawn_rng(99)
    n = 3
    for idx in (0, 12345, 999_999):
        g = symplectic_matrix(idx, n)
        signs = rng.integers(0, 2, size=2 * n)
        u = clifford_from_tableau(g, signs, n)
        assert is_unitary(u, tol=1e-9)
        for j in range(n):
            x_j = pauli_from_xz_vector(np.eye(2 * n, dtype=int)[2 * j], n)
            img = u @ x_j @ dag(u)
            want = (-1) ** int(signs[2 * j]) * pauli_from_xz_vector(g[2 * j], n)
            assert np.abs(img - want).max() < 1e-9


def test_sample_global_clifford_unitary():
    rng = spawn_rng(3)
    for n in (1, 2, 3):
        for _ in range(3):
            assert is_unitary(sample_global_clifford(n, rng), tol=1e-9)
    with pytest.raises(EnsembleError):
        sample_global_clifford(4, rng)


def test_isotropic_subspace_counts():
    assert len(maximal_isotropic_subspaces(1)) == 3
    assert len(maximal_isotropic_subspaces(2)) == 15
    assert len(maximal_isotropic_subspaces(3)) == 135


def test_stabilizer_basis_unitaries_unitary():
    for u in stabilizer_basis_unitaries(2):
        assert is_unitary(u, tol=1e-9)


def test_mub_partition_and_unbiasedness():
    for n in (1, 2, 3):
        partition = mub_partition(n)
        assert len(partition) == 2**n + 1
        covered = set()
        for cls in partition:
            assert len(cls) == 2**n - 1
            covered.update(cls)
        assert len(covered) == 4**n - 1  # all nontrivial Pauli words, disjointly
        members = mub_ensemble(n).members
        d = 2**n
        for a, b in itertools.combinations(members, 2):
            overlaps = np.abs(a @ dag(b)) ** 2
            assert np.abs(overlaps - 1 / d).max() < 1e-9


def test_clifford_ensemble_reduction():
    ens = clifford_ensemble(2)
    assert ens.size == 15
    assert ens.p == 5
    assert ens.inverse_kind == "global-depolarizing"
    assert ens.sampler is not None
    with pytest.raises(EnsembleError):
        clifford_ensemble(4)


def test_parse_ensemble_specs():
    assert parse_ensemble_spec("zeta-X", 2).name == "zeta-X"
    assert parse_ensemble_spec("zeta-A:1,3", 3).size == 5
    assert parse_ensemble_spec("zeta-m:2", 3).size == 13
    union = parse_ensemble_spec("zeta-A:1|zeta-A:2", 2)
    assert union.size == 5 and len(union.activity_signature) == 2
    for name in ("pauli", "clifford", "mub"):
        assert parse_ensemble_spec(name, 2).name == name
    with pytest.raises(EnsembleError):
        parse_ensemble_spec("nope", 2)
    with pytest.raises(EnsembleError):
        parse_ensemble_spec("zeta-X|zeta-A:1", 2)


def test_parse_ensemble_list_reattaches_digits():
    sets = parse_ensemble_list("zeta-X,zeta-A:1,3,zeta-m:1", 3)
    assert [e.name for e in sets] == ["zeta-X", "zeta-A:1,3", "zeta-m:1"]
    names = [e.name for e in parse_ensemble_list("zeta-A:1|zeta-A:2,mub", 2)]
    assert names == ["zeta-A:1|zeta-A:2", "mub"]


def test_ensemble_info_text():
    text = ensemble_info(zeta_m_active(3, 2))
    assert "members: 13" in text
    assert "p: 13.0" in text
    assert "diagonal trusted: False" in text
