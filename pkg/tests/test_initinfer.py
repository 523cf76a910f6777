import numpy as np
import pytest
from hypothesis import given, strategies as st

from explorecd.initinfer import (_update_memberships, _update_prototypes, agm_sample_initial,
                                 boolean_product, hamming_error, mac_decompose)


def planted(seed=0):
    # K=2, N=8, D=6, disjoint prototypes
    U = np.array([[1, 1, 1, 0, 0, 0], [0, 0, 0, 1, 1, 1]], dtype=bool)
    C = np.array([[1, 0]] * 3 + [[0, 1]] * 3 + [[1, 1]] * 2, dtype=bool)
    return boolean_product(C, U), C, U


def test_planted_decomposition_is_exact():
    X, _, _ = planted()
    res = mac_decompose(X, 2, seed=0)
    assert res.error == 0
    assert np.array_equal(boolean_product(res.C, res.U), X)


def test_single_community_gives_majority_bits():
    rng = np.random.default_rng(3)
    X = rng.random((15, 9)) < 0.4
    res = mac_decompose(X, 1, seed=1)
    assert res.C.all()
    majority = X.sum(axis=0) > X.shape[0] / 2
    assert np.array_equal(res.U[0].astype(bool), majority)
    assert res.error == hamming_error(X, np.ones((15, 1)), majority[None, :])


def test_identity_rows_with_k_equal_n():
    X = np.eye(5, dtype=bool)
    assert mac_decompose(X, 5, seed=0).error == 0


def test_errors():
    X = np.eye(3, dtype=bool)
    with pytest.raises(ValueError):
        mac_decompose(X, 4)
    with pytest.raises(ValueError):
        mac_decompose(X, 0)
    with pytest.raises(ValueError):
        mac_decompose(np.zeros((3, 0)), 1)


def test_deterministic_given_seed():
    rng = np.random.default_rng(0)
    X = rng.random((30, 12)) < 0.3
    a, b = mac_decompose(X, 3, seed=5), mac_decompose(X, 3, seed=5)
    assert np.array_equal(a.C, b.C) and np.array_equal(a.U, b.U)


@given(st.integers(0, 10_000), st.integers(1, 4))
def test_rounds_never_increase_error(seed, K):
    rng = np.random.default_rng(seed)
    X = rng.random((20, 10)) < 0.3
    res = mac_decompose(X, K, seed=seed, n_init=1)
    assert all(b <= a for a, b in zip(res.history, res.history[1:]))
    assert (res.C.sum(axis=1) >= 1).all()
    assert res.U.any(axis=1).all()


@given(st.integers(0, 10_000))
def test_single_steps_never_increase_error(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((15, 8)) < 0.35
    C = rng.random((15, 3)) < 0.4
    U = rng.random((3, 8)) < 0.4
    e0 = hamming_error(X, C, U)
    C1 = _update_memberships(X, C, U)
    e1 = hamming_error(X, C1, U)
    U1 = _update_prototypes(X, C1, U)
    assert e1 <= e0
    assert hamming_error(X, C1, U1) <= e1


def test_agm_initial_single_community_frequency():
    C = np.ones((2, 1), dtype=bool)
    hits = sum(len(agm_sample_initial(C, 0.3, seed=s)) for s in range(4000))
    assert abs(hits - 1200) <= 3 * np.sqrt(4000 * 0.3 * 0.7)


def test_agm_initial_triple_overlap_frequency():
    C = np.ones((2, 3), dtype=bool)
    p = 1 - 0.8 ** 3
    assert p == pytest.approx(0.488)
    hits = sum(len(agm_sample_initial(C, 0.2, seed=s)) for s in range(4000))
    assert abs(hits - 4000 * p) <= 3 * np.sqrt(4000 * p * (1 - p))


def test_cross_block_pair_never_sampled():
    C = np.zeros((100, 2), dtype=bool)
    C[:50, 0] = True
    C[50:, 1] = True
    for s in range(5000):
        E = agm_sample_initial(C[[0, 99]], 0.9, seed=s)
        assert not E
    E = agm_sample_initial(C, 0.5, seed=1)
    assert all((u < 50) == (v < 50) for u, v in E)
    assert all(u != v for u, v in E)


def test_agm_initial_rejects_bad_p():
    with pytest.raises(ValueError):
        agm_sample_initial(np.ones((3, 1)), 0.0, seed=0)
