"""Unit tests for the binomial QoS core."""

import math
import random
from fractions import Fraction

import pytest

from surgeshare import (
    ScenarioParams,
    binom_cdf,
    binom_cdf_cont,
    binom_pmf_cont,
    min_items_for_qos,
    normal_approx_reserve,
    qos_all,
)

CAR = ScenarioParams(1000, 0.1, 0.3, 0.01)
CHARGER = ScenarioParams(1000, 0.005, 0.015, 0.01)


def exact_pmf(k: int, n: int, p: Fraction) -> Fraction:
    return math.comb(n, k) * p**k * (1 - p) ** (n - k)


def exact_cdf(a: int, n: int, p: Fraction) -> Fraction:
    return sum(exact_pmf(k, n, p) for k in range(0, min(a, n) + 1))


def test_cdf_full_support():
    assert binom_cdf(3, 3, 0.5) == 1.0


def test_cdf_zero_successes():
    assert binom_cdf(0, 3, 0.5) == pytest.approx(0.125, abs=1e-12)


def test_cdf_out_of_range_thresholds():
    assert binom_cdf(-1, 10, 0.5) == 0.0
    assert binom_cdf(-7, 10, 0.5) == 0.0
    assert binom_cdf(11, 10, 0.5) == 1.0
    assert binom_cdf(1000, 10, 0.5) == 1.0


def test_cdf_car_nonsurge_pool():
    # A pool of 120 covers 1000 consumers at p=0.1 with at least 98% QoS.
    assert binom_cdf(120, 1000, 0.1) >= 0.98


@pytest.mark.parametrize("a,n,p_frac", [
    (10, 20, Fraction(3, 10)),
    (5, 50, Fraction(1, 100)),
    (0, 40, Fraction(1, 10)),
    (37, 40, Fraction(1, 2)),
    (123, 1000, Fraction(1, 10)),
])
def test_cdf_against_rational_summation(a, n, p_frac):
    expected = float(exact_cdf(a, n, p_frac))
    assert binom_cdf(a, n, float(p_frac)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("bad_p", [0.0, 1.0, -0.2, 1.3])
def test_cdf_rejects_bad_probability(bad_p):
    with pytest.raises(ValueError):
        binom_cdf(3, 10, bad_p)


def test_cdf_random_property_suite():
    # Bounds, monotonicity in the threshold, and anti-monotonicity in p.
    rng = random.Random(1234)
    for _ in range(1000):
        n = rng.randint(1, 2000)
        a = rng.randint(-2, n + 2)
        p = rng.uniform(0.001, 0.999)
        v = binom_cdf(a, n, p)
        assert 0.0 <= v <= 1.0
        assert binom_cdf(a + 1, n, p) >= v
        p2 = min(p + rng.uniform(0.0, 0.999 - p), 0.999)
        assert binom_cdf(a, n, p2) <= v + 1e-12
        assert binom_cdf(n, n, p) == 1.0


@pytest.mark.parametrize("n,p", [(10, 0.5), (215, 0.01), (500, 0.3), (2000, 0.1)])
def test_cdf_cont_matches_integers(n, p):
    for a in range(0, n + 1, max(1, n // 97)):
        assert binom_cdf_cont(float(a), n, p) == pytest.approx(
            binom_cdf(a, n, p), abs=1e-10)
    assert binom_cdf_cont(float(n), n, p) == pytest.approx(1.0, abs=1e-10)


def test_cdf_cont_midpoint_interpolates():
    lo = binom_cdf(4, 10, 0.5)
    hi = binom_cdf(5, 10, 0.5)
    mid = binom_cdf_cont(4.5, 10, 0.5)
    assert lo < mid < hi


def test_cdf_cont_clamps():
    assert binom_cdf_cont(-1.5, 10, 0.3) == 0.0
    assert binom_cdf_cont(10.0, 10, 0.3) == 1.0
    assert binom_cdf_cont(99.0, 10, 0.3) == 1.0


def test_cdf_cont_monotone_in_x():
    xs = [i * 0.37 for i in range(0, 60)]
    vals = [binom_cdf_cont(x, 20, 0.25) for x in xs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_pmf_cont_trivial_values():
    assert binom_pmf_cont(0.0, 4, 0.5) == pytest.approx(0.0625, abs=1e-12)
    assert binom_pmf_cont(2.0, 4, 0.5) == pytest.approx(0.375, abs=1e-12)


def test_pmf_cont_outside_support():
    assert binom_pmf_cont(-0.5, 10, 0.3) == 0.0
    assert binom_pmf_cont(10.5, 10, 0.3) == 0.0


def test_pmf_cont_positive_in_tail():
    assert binom_pmf_cont(7.3, 215, 0.01) > 0.0


@pytest.mark.parametrize("n,p_frac", [(12, Fraction(3, 10)), (40, Fraction(1, 100)),
                                      (200, Fraction(1, 10))])
def test_pmf_cont_matches_integers(n, p_frac):
    p = float(p_frac)
    for k in range(0, n + 1):
        assert binom_pmf_cont(float(k), n, p) == pytest.approx(
            float(exact_pmf(k, n, p_frac)), abs=1e-10)


@pytest.mark.parametrize("n", [100, 1000, 10000])
@pytest.mark.parametrize("p", [0.005, 0.01, 0.1, 0.3])
def test_pmf_normalization(n, p):
    total = math.fsum(binom_pmf_cont(float(k), n, p) for k in range(n + 1))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_qos_all_car_design():
    rep = qos_all(CAR, 120, 216, 6)
    assert rep.qos_ns >= 0.98 and rep.qos_s >= 0.98 and rep.qos_b >= 0.98


def test_qos_all_charger_design():
    rep = qos_all(CHARGER, 10, 14, 1)
    assert rep.qos_ns >= 0.98 and rep.qos_s >= 0.98 and rep.qos_b >= 0.98


def test_qos_all_saturating_design():
    rep = qos_all(CAR, CAR.n_consumers, 0, 0)
    assert rep.qos_ns == 1.0 and rep.qos_s == 1.0 and rep.qos_b == 1.0


def test_qos_all_rejects_reserve_above_pool():
    with pytest.raises(ValueError):
        qos_all(CAR, 10, 20, 11)


def test_qos_s_depends_only_on_m_minus_q_plus_t():
    base = qos_all(CAR, 120, 216, 6).qos_s
    for delta in (-30, -5, 1, 12, 50):
        shifted = qos_all(CAR, 120 + delta, 216 - delta, 6).qos_s
        assert shifted == pytest.approx(base, abs=1e-12)


def test_min_items_car_surge():
    assert abs(min_items_for_qos(1000, 0.3, 0.98) - 330) <= 1


def test_min_items_charger_surge():
    assert abs(min_items_for_qos(1000, 0.015, 0.98) - 23) <= 1


def test_min_items_matches_linear_scan():
    for n, p, target in [(10, 0.5, 0.999), (25, 0.1, 0.98), (60, 0.3, 0.9)]:
        expected = next(a for a in range(n + 1) if binom_cdf(a, n, p) >= target)
        assert min_items_for_qos(n, p, target) == expected


def test_min_items_is_minimal():
    a = min_items_for_qos(1000, 0.3, 0.98)
    assert binom_cdf(a, 1000, 0.3) >= 0.98
    assert binom_cdf(a - 1, 1000, 0.3) < 0.98


def test_min_items_near_normal_approximation():
    z99 = 2.3263478740408408
    for n in (100, 400, 1500, 5000):
        for p in (0.05, 0.1, 0.3, 0.5):
            approx = n * p + z99 * math.sqrt(n * p * (1 - p))
            assert abs(min_items_for_qos(n, p, 0.99) - approx) <= 2


def test_normal_approx_reserve_value():
    assert normal_approx_reserve(216, 0.01, 0.98) == pytest.approx(5.16, abs=0.01)


def test_normal_approx_reserve_median_target():
    # At a 50% target the quantile term vanishes, leaving the mean.
    assert normal_approx_reserve(500, 0.03, 0.5) == pytest.approx(15.0, abs=1e-9)


def test_normal_approx_reserve_consistent_with_table():
    assert abs(math.ceil(normal_approx_reserve(215, 0.01, 0.98)) - 6) <= 1
