import numpy as np
import pytest

from explorecd.data import CommunityCover
from explorecd.generators import generate_theorem_instance
from explorecd.graph import degree_stats
from explorecd.runner import THEOREM_PROFILES, verify_theorems
from explorecd.theory import (binomial_degree_means, check_assumptions, degree_ordering,
                              epsilon_bound, expected_degrees)


def test_epsilon_bound():
    assert epsilon_bound(31, 3) == pytest.approx(9.0)


def test_expected_degree_matches_pair_sum():
    c = CommunityCover(4, [[0, 1, 2], [2, 3]])
    p = 0.3
    ed = expected_degrees(c, p)
    # node 2 shares one community with each of 0, 1, 3
    assert ed[2] == pytest.approx(3 * p)
    assert ed[3] == pytest.approx(p)
    assert binomial_degree_means(c, p)[2] == pytest.approx((2 + 1) * p)


def test_checker_flags_violations():
    # sizes 10 and 3 spread by 7 > eps
    c = CommunityCover(12, [list(range(10)), [9, 10, 11]])
    rep = check_assumptions(c, 0.1, eps=2)
    assert "size_spread" in rep.failed
    assert not rep.ok and "failed" in rep.summary()


def test_degree_ordering_on_compliant_instance():
    n_min, counts = THEOREM_PROFILES[2]
    inst = generate_theorem_instance(2, n_min, epsilon_bound(n_min, 2), 0.3, counts, seed=2)
    deg, _ = degree_stats(inst.bundle.n_nodes, inst.bundle.hidden.truth_handle().edges())
    order = degree_ordering(deg, inst.multiplicity)
    assert order.pairwise[(2, 1)]
    assert order.above_global[2]


def test_degree_ordering_detects_inversion():
    order = degree_ordering(np.array([5.0, 5.0, 1.0]), np.array([1, 1, 2]))
    assert not order.ok


def test_verify_theorems_accounts_for_every_instance():
    res = verify_theorems(n_instances=4, Ks=(2, 3), p=0.1, seed=0)
    assert res["n_compliant"] + len(res["excluded"]) == 4
    assert all(r["hypothesis_holds"] for r in res["instances"])


def test_violating_instance_is_excluded_and_recorded():
    res = verify_theorems(n_instances=2, Ks=(2,), p=0.1, seed=0, profiles={2: (30, [60, 0])})
    assert res["n_compliant"] == 0
    assert len(res["excluded"]) == 2 and "n1_fraction" in res["excluded"][0]["reason"]
