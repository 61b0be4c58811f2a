import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinninglab import hierarchy as H
from pinninglab import oracles
from pinninglab.errors import InvalidParameter

B_GRID = [1.2, 1.3, H.B_CRITICAL, 1.6, 1.9]


@given(st.floats(min_value=1.0001, max_value=1.9999))
@settings(max_examples=50)
def test_annealed_fixed_points(B):
    assert H.annealed_map_step(1.0, B) == pytest.approx(1.0)
    assert H.annealed_map_step(B - 1.0, B) == pytest.approx(B - 1.0)


def test_annealed_map_examples():
    assert H.annealed_map_step(0.0, math.sqrt(2)) == pytest.approx(
        (math.sqrt(2) - 1) / math.sqrt(2))
    with pytest.raises(InvalidParameter):
        H.annealed_map_step(-0.1, 1.5)


def test_alpha_of_B():
    assert H.alpha_of_B(H.B_CRITICAL) == pytest.approx(0.5)
    assert H.alpha_of_B(1.9999) < 1e-3
    assert H.alpha_of_B(1.0001) > 0.999
    with pytest.raises(InvalidParameter):
        H.alpha_of_B(2.0)


def test_envelope_monotone():
    prev = -1.0
    for n in range(0, 40):
        x = H.annealed_envelope(n, H.B_CRITICAL)
        assert x > prev
        assert x < H.B_CRITICAL - 1.0
        prev = x
    assert H.annealed_envelope(0, 1.5) == 0.0
    n_star = H.envelope_generation(H.B_CRITICAL, 1e-6)
    assert (H.B_CRITICAL - 1.0) - H.annealed_envelope(n_star, H.B_CRITICAL) < 1e-6


def test_subtree_node_count_examples():
    assert H.subtree_node_count(H.TreeIndexSet(n=4, leaves=(4, 6, 13))) == 9
    assert H.subtree_node_count(H.TreeIndexSet(n=1, leaves=(1, 2))) == 1
    for n in (1, 3, 5):
        for leaf in (1, 2**n):
            assert H.subtree_node_count(H.TreeIndexSet(n=n, leaves=(leaf,))) == n


@given(st.integers(min_value=1, max_value=6), st.data())
@settings(max_examples=60, deadline=None)
def test_subtree_node_count_vs_path_oracle(n, data):
    leaves = data.draw(st.sets(st.integers(1, 2**n), min_size=1, max_size=min(2**n, 8)))
    idx = H.TreeIndexSet(n=n, leaves=tuple(leaves))
    assert H.subtree_node_count(idx) == oracles.subtree_nodes_by_paths(n, leaves)


@pytest.mark.parametrize("B", [H.B_CRITICAL, 1.3])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_gw_expectation_vs_enumeration(n, B):
    import itertools
    for r in range(1, 2**n + 1):
        for leaves in itertools.combinations(range(1, 2**n + 1), r):
            idx = H.TreeIndexSet(n=n, leaves=leaves)
            assert H.gw_product_expectation(idx, B) == pytest.approx(
                oracles.gw_enumeration_expectation(n, leaves, B), abs=1e-12)


def test_gw_single_leaf_green():
    for n in (2, 5, 9):
        idx = H.TreeIndexSet(n=n, leaves=(3 % 2**n + 1,))
        assert H.gw_product_expectation(idx, H.B_CRITICAL) == pytest.approx(
            H.B_CRITICAL**-n)


def test_pair_overlap_critical_identity():
    for n in range(1, 31):
        assert H.pair_overlap_sum(n, H.B_CRITICAL) == pytest.approx(n, abs=1e-12)


def test_pair_overlap_example_value():
    # 4 * (1.5^-4 + 2 * 1.5^-6) for two generations at B = 1.5
    expect = 4.0 * (1.5**-4 + 2 * 1.5**-6)
    assert H.pair_overlap_sum(2, 1.5) == pytest.approx(expect, rel=1e-12)
    assert H.pair_overlap_sum(2, 1.5) == pytest.approx(
        oracles.overlap_sum_brute(2, 1.5), rel=1e-12)


def test_pair_overlap_trends():
    # above the critical point the pair sum dies; below it explodes
    sup = [H.pair_overlap_sum(n, 1.6) for n in range(3, 16)]
    sub = [H.pair_overlap_sum(n, 1.25) for n in range(1, 16)]
    assert all(b < a for a, b in zip(sup, sup[1:]))
    assert sup[-1] < 0.1 * sup[0]
    assert all(b > a for a, b in zip(sub, sub[1:]))
    assert sub[-1] > 100 * sub[0]


def test_sample_leafset_statistics():
    rng = np.random.default_rng(2)
    n, B = 5, H.B_CRITICAL
    m = 100_000
    alive = H.sample_leafset_batch(n, B, rng, m)
    p1 = alive[:, 0].mean()
    t1 = B**-n
    assert abs(p1 - t1) <= 3 * math.sqrt(t1 * (1 - t1) / m)
    # extinction at the first generation: the root stays childless
    gen1 = H.sample_leafset_batch(1, B, rng, m)
    p_ext = (~gen1.any(axis=1)).mean()
    t_ext = (B - 1.0) / B
    assert abs(p_ext - t_ext) <= 3 * math.sqrt(t_ext * (1 - t_ext) / m)
    # pair frequency against the closed two-point form
    pair = (alive[:, 0] & alive[:, 5]).mean()
    t2 = H.gw_product_expectation(H.TreeIndexSet(n=n, leaves=(1, 6)), B)
    assert abs(pair - t2) <= 3 * math.sqrt(t2 * (1 - t2) / m)


def test_log_partition_initial_and_annealed():
    params = H.HierParams(B=1.5, beta=0.7, h=0.2)
    om = np.array([0.4])
    assert H.hier_log_partition(params, 0, om) == pytest.approx(
        0.7 * 0.4 - 0.5 * 0.49 + 0.2)
    pure = H.HierParams(B=1.5, beta=0.0, h=0.2)
    for n in (1, 5, 12, 20):
        lx = H.hier_log_partition(pure, n, np.zeros(2**n))
        ref = H.annealed_log_iterate(0.2, n, 1.5)
        assert lx == pytest.approx(ref, rel=1e-12)


@given(st.integers(min_value=1, max_value=7), st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_log_partition_floor_and_symmetry(n, seed):
    rng = np.random.default_rng(seed)
    params = H.HierParams(B=H.B_CRITICAL, beta=1.0, h=-0.3)
    om = rng.standard_normal(2**n)
    lx = H.hier_log_partition(params, n, om)
    assert lx >= math.log(H.annealed_envelope(n, params.B))
    swapped = np.concatenate([om[2**(n-1):], om[:2**(n-1)]])
    assert H.hier_log_partition(params, n, swapped) == pytest.approx(lx, rel=1e-12)


def test_log_partition_no_overflow():
    params = H.HierParams(B=H.B_CRITICAL, beta=1.0, h=0.0)
    huge = np.full(4, 5e5)
    val = H.hier_log_partition(params, 2, huge)
    assert np.isfinite(val)
    assert val > 1e6  # products of enormous leaf values survive in log form


def test_log_partition_mc_mean_vs_annealed():
    rng = np.random.default_rng(6)
    n = 8
    params = H.HierParams(B=H.B_CRITICAL, beta=0.6, h=0.05)
    om = rng.standard_normal((40_000, 2**n))
    x = np.exp(H.hier_log_partition_batch(params, n, om))
    ref = H.annealed_iterate(math.exp(0.05), n, H.B_CRITICAL)
    se = x.std(ddof=1) / math.sqrt(x.shape[0])
    assert abs(x.mean() - ref) <= 3 * se


def test_y_statistic_empty_and_exact_mean():
    assert H.y_statistic(H.LeafSet(n=3, alive=np.array([])), H.B_CRITICAL) == 0.0
    assert H.y_statistic(H.LeafSet(n=3, alive=np.array([5])), H.B_CRITICAL) == 0.0
    mean2 = oracles.y_mean_by_enumeration(2, H.B_CRITICAL)
    assert mean2 == pytest.approx(1.0, abs=1e-12)


def test_y_statistic_batch_matches_single():
    rng = np.random.default_rng(9)
    for n in (2, 4, 7):
        alive = H.sample_leafset_batch(n, H.B_CRITICAL, rng, 200)
        batch = H.y_statistic_batch(alive, n, H.B_CRITICAL)
        for i in range(0, 200, 17):
            ls = H.LeafSet(n=n, alive=np.flatnonzero(alive[i]) + 1)
            assert batch[i] == pytest.approx(H.y_statistic(ls, H.B_CRITICAL), abs=1e-12)


def test_gw_overlap_samples_match_dense_moments():
    rng = np.random.default_rng(14)
    n = 6
    y, counts = H.gw_overlap_samples(n, H.B_CRITICAL, rng, 200_000)
    se = y.std(ddof=1) / math.sqrt(y.size)
    assert abs(y.mean() - 1.0) <= 3 * se
    t = (2.0 / H.B_CRITICAL) ** n
    se_c = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - t) <= 3 * se_c


def test_y_mc_mean_is_one():
    rng = np.random.default_rng(3)
    y, _ = H.gw_overlap_samples(8, H.B_CRITICAL, rng, 100_000)
    se = y.std(ddof=1) / math.sqrt(y.size)
    assert abs(y.mean() - 1.0) <= 3 * se


def test_y_second_moment_methods_agree():
    for n in (2, 3, 4, 5, 6):
        assert H.y_second_moment(n, "brute") == pytest.approx(
            H.y_second_moment(n, "topology"), abs=1e-10)
    with pytest.raises(InvalidParameter):
        H.y_second_moment(1)


def test_y_second_moment_vs_mc():
    rng = np.random.default_rng(21)
    n = 6
    y, _ = H.gw_overlap_samples(n, H.B_CRITICAL, rng, 300_000)
    exact = H.y_second_moment(n)
    se = (y**2).std(ddof=1) / math.sqrt(y.size)
    assert abs((y**2).mean() - exact) <= 3 * se


def test_y_second_moment_bounded_and_jensen():
    vals = [H.y_second_moment(n, "topology") for n in range(2, 31)]
    assert all(v >= 1.0 for v in vals)
    assert H.k_hat(30) == pytest.approx(max(vals))


def test_fractional_threshold_values():
    t = H.fractional_threshold(H.B_CRITICAL, 0.8)
    assert t == pytest.approx(2**0.4 - 2 * (math.sqrt(2) - 1) ** 0.8, rel=1e-12)
    assert t == pytest.approx(0.3313, abs=2e-4)
    # near unit moment order the threshold root approaches 2 - B
    g = 1 - 1e-9
    root = H.fractional_threshold(1.5, g) ** (1 / g)
    assert root == pytest.approx(0.5, abs=1e-6)


@given(st.floats(min_value=1.05, max_value=1.95),
       st.floats(min_value=0.05, max_value=0.95))
@settings(max_examples=80)
def test_fractional_threshold_sign(B, gamma):
    t = H.fractional_threshold(B, gamma)
    crossing = H.gamma_positive_threshold(B)
    if gamma > crossing + 1e-9:
        assert t > 0
    elif gamma < crossing - 1e-9:
        assert t < 0


def test_gamma_for_gap_meets_target():
    for zeta in (0.05, 0.2, 0.5):
        g = H.gamma_for_gap(H.B_CRITICAL, zeta)
        t = H.fractional_threshold(H.B_CRITICAL, g) ** (1 / g)
        assert t >= 2 - H.B_CRITICAL - zeta / 4 - 1e-9
        # the boundary is tight: slightly smaller orders fail
        g2 = g - 1e-3
        t2 = H.fractional_threshold(H.B_CRITICAL, g2)
        assert t2 <= 0 or t2 ** (1 / g2) < 2 - H.B_CRITICAL - zeta / 4
