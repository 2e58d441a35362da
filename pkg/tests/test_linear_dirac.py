import numpy as np
import pytest
from hypothesis import given, strategies as st

from diracflow.linear_dirac import (
    LinearDiracStructure,
    PairedVector,
    Subspace,
    SubspaceKind,
    classify,
    from_bivector,
    from_pair,
    from_subspace,
    from_two_form,
    orthogonal_complement,
    pairing,
    recover_pair,
)


def _subspace(*pairs, n=None):
    return Subspace.from_vectors([PairedVector(v, a) for v, a in pairs], ambient_dim=n)


def _random_subspace(rng, n, k):
    if k == 0:
        return Subspace(np.zeros((2 * n, 0)), n)
    while True:
        mat = rng.normal(size=(2 * n, k))
        if np.linalg.matrix_rank(mat) == k:
            return Subspace(mat, n)


def _random_skew(rng, n):
    a = rng.normal(size=(n, n))
    return a - a.T


# -- pairing


def test_pairing_isotropic_self():
    p = PairedVector([1.0, 0.0], [0.0, 1.0])
    assert pairing(p, p) == 0.0


def test_pairing_hand_value():
    p = PairedVector([1.0, 0.0], [1.0, 0.0])
    assert pairing(p, p) == pytest.approx(2.0)


def test_pairing_with_zero():
    z = PairedVector([0.0, 0.0], [0.0, 0.0])
    p = PairedVector([1.0, 2.0], [3.0, 4.0])
    assert pairing(p, z) == 0.0


def test_pairing_dimension_mismatch():
    with pytest.raises(ValueError):
        pairing(PairedVector([1.0], [1.0]), PairedVector([1.0, 0.0], [0.0, 1.0]))


@given(st.integers(0, 10_000))
def test_pairing_symmetry(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    p1 = PairedVector(rng.normal(size=n), rng.normal(size=n))
    p2 = PairedVector(rng.normal(size=n), rng.normal(size=n))
    assert pairing(p1, p2) == pytest.approx(pairing(p2, p1), abs=1e-12)


# -- orthogonal complement


def test_complement_of_zero_subspace():
    u = Subspace.from_vectors([], ambient_dim=2)
    assert orthogonal_complement(u).dim == 4


def test_complement_in_dim_one():
    u = _subspace(([1.0], [0.0]))
    perp = orthogonal_complement(u)
    assert perp.dim == 1
    assert perp.same_span(u)


def test_dirac_equals_own_complement():
    d = from_two_form([[0.0, 1.0], [-1.0, 0.0]])
    assert orthogonal_complement(d.subspace).same_span(d.subspace)


@given(st.integers(0, 10_000))
def test_double_complement_and_dimension_count(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    k = int(rng.integers(0, 2 * n + 1))
    u = _random_subspace(rng, n, k)
    perp = orthogonal_complement(u)
    assert u.dim + perp.dim == 2 * n
    assert orthogonal_complement(perp).same_span(u)


# -- classification


def test_classify_graph_of_symplectic_form():
    d = from_two_form([[0.0, 1.0], [-1.0, 0.0]])
    assert classify(d.subspace) is SubspaceKind.DIRAC


def test_classify_full_space_coisotropic():
    u = Subspace(np.eye(4), 2)
    assert classify(u) is SubspaceKind.COISOTROPIC


def test_classify_isotropic_line_not_dirac():
    u = _subspace(([1.0, 0.0], [0.0, 0.0]))
    assert classify(u) is SubspaceKind.ISOTROPIC


def test_classify_generic_none():
    u = _subspace(([1.0, 0.0], [1.0, 0.0]))
    assert classify(u) is SubspaceKind.NONE


# -- constructors


def test_from_subspace_full():
    d = from_subspace([[1.0, 0.0], [0.0, 1.0]])
    expected = Subspace(np.vstack([np.eye(2), np.zeros((2, 2))]), 2)
    assert d.subspace.same_span(expected)


def test_from_subspace_line():
    d = from_subspace([[1.0, 0.0]])
    expected = _subspace(([1.0, 0.0], [0.0, 0.0]), ([0.0, 0.0], [0.0, 1.0]))
    assert d.subspace.same_span(expected)


def test_from_subspace_zero():
    d = from_subspace([], ambient_dim=2)
    expected = Subspace(np.vstack([np.zeros((2, 2)), np.eye(2)]), 2)
    assert d.subspace.same_span(expected)


def test_from_subspace_rejects_dependent_basis():
    with pytest.raises(ValueError):
        from_subspace([[1.0, 0.0], [2.0, 0.0]])


def test_from_two_form_zero_matches_full_subspace():
    d = from_two_form(np.zeros((2, 2)))
    assert d.subspace.same_span(from_subspace(np.eye(2).tolist()).subspace)


def test_from_two_form_graph_direction():
    d = from_two_form([[0.0, 1.0], [-1.0, 0.0]])
    # the lift of e1 is omega @ e1 = -e2*
    mat = d.subspace.matrix
    coeff, *_ = np.linalg.lstsq(mat, np.array([1.0, 0.0, 0.0, -1.0]), rcond=None)
    assert np.allclose(mat @ coeff, [1.0, 0.0, 0.0, -1.0], atol=1e-12)


def test_from_two_form_rejects_non_skew():
    with pytest.raises(ValueError):
        from_two_form([[0.0, 1.0], [1.0, 0.0]])


def test_from_bivector_rigid_body_point():
    from diracflow.models import RigidBody
    d = from_bivector(RigidBody().bivector(np.array([0.0, 0.0, 1.0])))
    assert d.subspace.dim == 3
    assert classify(d.subspace) is SubspaceKind.DIRAC


def test_from_pair_full_space_matches_two_form():
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])
    d1 = from_pair(np.eye(2).tolist(), omega)
    d2 = from_two_form(omega)
    assert d1.subspace.same_span(d2.subspace)


def test_from_pair_zero_subspace():
    d = from_pair([], np.zeros((0, 0)), ambient_dim=2)
    assert d.subspace.same_span(from_subspace([], ambient_dim=2).subspace)


def test_from_pair_partial_subspace_in_r3():
    F = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])
    d = from_pair(F, omega)
    assert d.subspace.dim == 3
    assert classify(d.subspace) is SubspaceKind.DIRAC


def test_recover_pair_round_trip():
    rng = np.random.default_rng(42)
    F = rng.normal(size=(4, 2))
    W = _random_skew(rng, 2)
    d = from_pair(list(F.T), W)
    F2, W2 = recover_pair(d)
    d2 = from_pair(list(F2.T), W2)
    assert d.subspace.same_span(d2.subspace)


# -- property tests over the constructors


@given(st.integers(0, 10_000))
def test_two_form_constructions_are_dirac(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    assert classify(from_two_form(_random_skew(rng, n)).subspace) is SubspaceKind.DIRAC


@given(st.integers(0, 10_000))
def test_bivector_constructions_are_dirac(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    assert classify(from_bivector(_random_skew(rng, n)).subspace) is SubspaceKind.DIRAC


@given(st.integers(0, 10_000))
def test_bivector_codistribution_constructions_are_dirac(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    k = int(rng.integers(1, n))
    cod = rng.normal(size=(k, n))
    d = from_bivector(_random_skew(rng, n), codistribution=list(cod))
    assert classify(d.subspace) is SubspaceKind.DIRAC


@given(st.integers(0, 10_000))
def test_subspace_constructions_are_dirac(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    k = int(rng.integers(0, n + 1))
    f = rng.normal(size=(k, n))
    d = from_subspace(list(f), ambient_dim=n)
    assert classify(d.subspace) is SubspaceKind.DIRAC


@given(st.integers(0, 10_000))
def test_dirac_invariant_enforced(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    d = from_two_form(_random_skew(rng, n))
    # the validating wrapper accepts exactly the dirac case
    LinearDiracStructure(d.subspace)
    with pytest.raises(ValueError):
        LinearDiracStructure(Subspace(np.eye(2 * n), n))
