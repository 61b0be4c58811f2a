import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinninglab import renewal as R
from pinninglab.errors import HorizonExceeded, InvalidParameter
from pinninglab import oracles


@pytest.fixture(scope="module")
def half_law():
    return R.make_power_law(0.5, 4000)


@pytest.fixture(scope="module")
def two_point():
    return R.law_from_mass([0.6, 0.4])


def test_power_law_normalizer_series_oracle():
    # independent series + tail-integral evaluation of the normalizer
    law = R.make_power_law(0.5, 100)
    z = oracles.zeta_by_series(1.5)
    assert law.c_k == pytest.approx(1.0 / z, rel=1e-6)
    assert 0.38 < law.c_k < 0.39


def test_power_law_total_and_tail():
    law = R.make_power_law(0.5, 5000)
    assert law.total < 1.0
    assert law.grand_total == pytest.approx(1.0, abs=1e-12)
    assert law.tail_consistency() < 0.01
    assert law.mass[1] == pytest.approx(law.c_k)  # largest single mass
    assert np.all(np.diff(law.mass[1:]) < 0)


def test_make_power_law_windows():
    with pytest.raises(InvalidParameter):
        R.make_power_law(0.0, 100)
    with pytest.raises(InvalidParameter):
        R.make_power_law(0.5, 1)


def test_green_hand_convolution(two_point):
    t = R.green_function(two_point, 2)
    assert t.u[0] == 1.0
    assert t.u[1] == pytest.approx(0.6)
    assert t.u[2] == pytest.approx(0.76)


def test_green_horizon_guard(half_law, two_point):
    with pytest.raises(HorizonExceeded):
        R.green_function(half_law, half_law.n_max + 1)
    # finite-support laws extend exactly: no mass lives beyond the horizon
    t = R.green_function(two_point, 6)
    assert R.renewal_residual(t) < 1e-12


def test_green_direct_vs_fft(half_law):
    a = R.green_function(half_law, 3000, method="direct").u
    b = R.green_function(half_law, 3000, method="fft").u
    assert np.max(np.abs(a - b) / a) < 1e-10


def test_green_matches_path_enumeration():
    law = R.law_from_mass([0.5, 0.3, 0.2])
    u = R.green_function(law, 3).u
    u_ref = oracles.green_by_enumeration(law, 3)
    assert np.allclose(u, u_ref, atol=1e-12)


def test_renewal_residual(half_law):
    table = R.green_function(half_law, 4000)
    assert R.renewal_residual(table) < 1e-12


def test_partial_sum_constant():
    law = R.make_power_law(0.5, 100_000)
    u = R.green_function(law, 100_000).u
    ratio = u[1:].sum() / math.sqrt(100_000) * math.pi * law.c_k
    assert abs(ratio - 1.0) < 0.03


@given(st.integers(min_value=2, max_value=30), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=25, deadline=None)
def test_green_residual_random_laws(size, seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.05, 1.0, size)
    law = R.law_from_mass(w / w.sum())
    table = R.green_function(law, size)
    assert R.renewal_residual(table) < 1e-12


def test_sample_path_deterministic(half_law):
    p1 = R.sample_path(half_law, 500, np.random.default_rng(5))
    p2 = R.sample_path(half_law, 500, np.random.default_rng(5))
    assert np.array_equal(p1.points, p2.points)
    assert p1.points[0] == 0
    assert np.all(np.diff(p1.points) >= 1)


def test_sample_path_gap_frequency(half_law):
    rng = np.random.default_rng(11)
    n = 1_000_000
    gaps = np.searchsorted(half_law.cdf[1:], rng.random(n)) + 1
    freq = np.mean(gaps == 1)
    p = half_law.mass[1]
    assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_sample_path_mean_points_vs_green(half_law):
    L = 400
    expected = R.green_function(half_law, L).u[1:].sum()
    rng = np.random.default_rng(17)
    counts = np.array([R.sample_path(half_law, L, rng).points.size - 1
                       for _ in range(10_000)])
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - expected) <= 3 * se


def test_sample_path_tail_guard(half_law):
    with pytest.raises(HorizonExceeded):
        R.sample_path(half_law, half_law.n_max + 1, np.random.default_rng(0))


def test_sample_path_occupancy_matches_green(half_law):
    # empirical occupancy frequencies against the Green marginals, with a
    # Bonferroni-wide band over the probed positions
    L = 300
    u = R.green_function(half_law, L).u
    rng = np.random.default_rng(23)
    m = 20_000
    probes = np.array([1, 2, 5, 10, 50, 200])
    hits = np.zeros(probes.size)
    for _ in range(m):
        pts = R.sample_path(half_law, L, rng).points
        hits += np.isin(probes, pts)
    freq = hits / m
    for p, f in zip(probes, freq):
        se = math.sqrt(u[p] * (1 - u[p]) / m)
        assert abs(f - u[p]) <= 4 * se


def test_free_energy_zero_for_nonpositive_reward(half_law):
    assert R.homogeneous_free_energy(half_law, 0.0) == 0.0
    assert R.homogeneous_free_energy(half_law, -0.5) == 0.0


def test_free_energy_root_solves_characteristic(half_law):
    f = R.homogeneous_free_energy(half_law, 0.3)
    assert R.characteristic_sum(half_law, f) == pytest.approx(math.exp(-0.3), rel=1e-9)


def test_free_energy_monotone_convex(half_law):
    hs = np.linspace(0.05, 1.0, 12)
    f = np.array([R.homogeneous_free_energy(half_law, h) for h in hs])
    assert np.all(np.diff(f) > 0)
    assert np.all(np.diff(f, 2) > -1e-9)


def test_free_energy_marginal_slope():
    law = R.make_power_law(0.5, 100_000)
    hs = np.logspace(-3, -2, 5)
    f = np.array([R.homogeneous_free_energy(law, h) for h in hs])
    slope = np.polyfit(np.log(hs), np.log(f), 1)[0]
    assert abs(slope - 2.0) < 0.1


def test_terminating_shift_identity():
    base = R.make_power_law(0.5, 2000)
    halved = R.RenewalLaw(mass=base.mass * 0.5, alpha=0.5,
                          c_k=base.c_k * 0.5, tail_mass=base.tail_mass * 0.5)
    shifted, deficit = R.terminating_shift(halved)
    assert deficit == pytest.approx(math.log(0.5))
    assert shifted.grand_total == pytest.approx(1.0)

    # independent oracle: bisect the raw characteristic equation of the
    # transient law and compare with the shifted solution
    law08 = R.RenewalLaw(mass=base.mass * 0.8, alpha=0.5,
                         c_k=base.c_k * 0.8, tail_mass=base.tail_mass * 0.8)
    sh, d = R.terminating_shift(law08)
    h = 0.5
    lo, hi = 0.0, 5.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if R.characteristic_sum(law08, mid) > math.exp(-h):
            lo = mid
        else:
            hi = mid
    direct = 0.5 * (lo + hi)
    assert R.homogeneous_free_energy(sh, h + d) == pytest.approx(direct, rel=1e-7)


def test_terminating_shift_identity_case(half_law):
    same, deficit = R.terminating_shift(half_law)
    assert deficit == 0.0
    assert same is half_law


def test_free_energy_requires_recurrent():
    base = R.make_power_law(0.5, 500)
    transient = R.RenewalLaw(mass=base.mass * 0.8, alpha=0.5,
                             c_k=base.c_k * 0.8, tail_mass=base.tail_mass * 0.8)
    with pytest.raises(InvalidParameter):
        R.homogeneous_free_energy(transient, 0.2)


def test_homogeneous_decay_single_term(two_point):
    assert R.homogeneous_decay(two_point, -0.5, 1) == pytest.approx(
        math.exp(-0.5) * 0.6)


def test_homogeneous_decay_matches_green(two_point):
    u = R.green_function(two_point, 2).u
    prof = R.homogeneous_decay_profile(two_point, 0.0, 2)
    assert prof[1] == pytest.approx(u[1], rel=1e-12)
    assert prof[2] == pytest.approx(u[2], rel=1e-12)


def test_homogeneous_decay_negative_reward_vanishes():
    law = R.reduced_power_law(0.8, 10_000)
    prof = R.homogeneous_decay_profile(law, -0.5, 10_000)
    peak = prof.max()
    assert prof[-1] < 1e-3 * peak
    assert np.all(np.diff(prof[200:]) <= 1e-15)


def test_conditioning_ratio_brute(two_point):
    three = R.law_from_mass([0.5, 0.3, 0.2])
    for law in (two_point, three):
        for N in (1, 2, 3):
            ours = R.conditioning_ratio(law, N)
            ref = max(oracles.conditioning_ratio_brute(law, M)
                      for M in range(1, N + 1))
            assert ours == pytest.approx(ref, abs=1e-12)


def test_conditioning_ratio_plateau():
    law = R.make_power_law(0.5, 4000)
    curve = R.conditioning_ratio_curve(law, 2000)
    assert curve[-1] >= curve[999]  # running max
    assert curve[-1] <= curve[999] * 1.01  # plateaus within 1%


def test_conditioning_ratio_marginalized(two_point):
    # with the test function identically 1 both sides integrate to 1: the
    # weighted average of the per-bin ratios against the conditional law is 1
    law = two_point
    u = R.green_function(law, 2).u
    N = 1
    num = []
    den = []
    for n in (0, 1):
        pn = u[n] * law.survival(N - n)
        pc_raw = 0.0
        for g in range(N - n + 1, 2 * N - n + 1):
            pc_raw += law.mass[g] * u[2 * N - n - g]
        num.append(u[n] * pc_raw / u[2 * N])
        den.append(pn)
    assert sum(num) == pytest.approx(1.0, abs=1e-12)
    assert sum(den) == pytest.approx(1.0, abs=1e-12)
