from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auxbandit.arrivals import gen_stationary
from auxbandit.bounds import (
    aie_index,
    aucb1_upper_bound,
    corollary_bound,
    is_vacuous,
    logsumexp_rate,
    minimax_lower_bound,
    tail_series,
    unknown_mapping_lower_bound,
)
from auxbandit.core import ArrivalMatrix, DomainError

rows = st.lists(st.integers(0, 50), min_size=1, max_size=60)
rates = st.floats(0.0, 5.0, allow_nan=False)


def lse_reference(h, c) -> float:
    with mpmath.workdps(50):
        cum = np.cumsum(h)
        return float(mpmath.log(mpmath.fsum(mpmath.exp(-c * int(x)) for x in cum)))


def test_lse_examples():
    assert logsumexp_rate([0] * 37, 1.3) == math.log(37)
    assert logsumexp_rate([5, 2, 9], 0.0) == math.log(3)
    # The cumulative sum includes epoch t itself.
    assert logsumexp_rate([3] + [0] * 99, math.log(10)) == pytest.approx(math.log(0.1), rel=1e-12)
    assert logsumexp_rate([0, 3] + [0] * 98, math.log(10)) == pytest.approx(math.log(1.099), rel=1e-12)
    with pytest.raises(DomainError):
        logsumexp_rate([], 1.0)
    with pytest.raises(DomainError):
        logsumexp_rate([1], -1.0)


def test_lse_is_stable_for_huge_counts():
    v = logsumexp_rate([10**6, 0, 0], 2.0)
    assert v == pytest.approx(-2.0 * 10**6 + math.log(3), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(rows, rates)
def test_lse_matches_high_precision_reference(h, c):
    assert logsumexp_rate(h, c) == pytest.approx(lse_reference(h, c), rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(rows, rates, st.data())
def test_lse_monotone_in_arrivals(h, c, data):
    i = data.draw(st.integers(0, len(h) - 1))
    more = list(h)
    more[i] += data.draw(st.integers(1, 5))
    assert logsumexp_rate(more, c) <= logsumexp_rate(h, c) + 1e-12
    # Moving one arrival earlier.
    j = data.draw(st.integers(0, len(h) - 1))
    if j > 0 and h[j] > 0:
        earlier = list(h)
        earlier[j] -= 1
        earlier[j - 1] += 1
        assert logsumexp_rate(earlier, c) <= logsumexp_rate(h, c) + 1e-12


def test_minimax_zero_arrivals_closed_form():
    K, D, s, T = 2, 0.2, 0.5, 10_000
    v = minimax_lower_bound(ArrivalMatrix.zeros(K, T), D, s, s)
    assert v == pytest.approx(s * s * (K - 1) / (4 * D) * math.log(D * D * T / (s * s * K)), rel=1e-12)
    assert v == pytest.approx(0.3125 * math.log(800), rel=1e-12)


def test_minimax_is_vacuous_for_tiny_horizon_and_monotone():
    v = minimax_lower_bound(ArrivalMatrix.zeros(2, 5), 0.2, 0.5, 0.5)
    assert v < 0 and is_vacuous(v)
    H = gen_stationary(3, 500, 0.02, 1)
    more = H.h.copy()
    more[1, 10] += 3
    assert minimax_lower_bound(ArrivalMatrix(more), 0.2, 0.5, 0.5) <= minimax_lower_bound(H, 0.2, 0.5, 0.5)
    with pytest.raises(DomainError):
        minimax_lower_bound(H, 0.0, 0.5, 0.5)


def test_aucb1_zero_arrivals_reduction():
    gaps, s, c, T = (0.0, 0.2, 0.3), 0.5, 3.0, 1000
    v = aucb1_upper_bound(ArrivalMatrix.zeros(3, T), gaps, s, s, c)
    tail = sum(2.0 / t ** (c / 2) for t in range(1, T + 1))
    ref = sum(d * (4 * c * s * s / (d * d) * math.log(T) + tail) for d in gaps if d > 0)
    assert v == pytest.approx(ref, rel=1e-12)
    assert tail_series(T, c) == pytest.approx(tail, rel=1e-12)


def test_aucb1_smaller_with_arrivals_and_moves():
    gaps = (0.0, 0.2, 0.2)
    H = gen_stationary(3, 10_000, 0.05, 42)
    assert aucb1_upper_bound(H, gaps, 0.5, 0.5, 3.0) < aucb1_upper_bound(ArrivalMatrix.zeros(3, 10_000), gaps, 0.5, 0.5, 3.0)
    h = np.zeros((3, 200), dtype=np.int64)
    h[1, 120] = 2
    moved = h.copy()
    moved[1, 120], moved[1, 119] = 1, 1
    assert aucb1_upper_bound(moved, gaps, 0.5, 0.5, 3.0) <= aucb1_upper_bound(h, gaps, 0.5, 0.5, 3.0)
    # An arrival in the last epoch is lagged past the horizon.
    last = np.zeros((3, 200), dtype=np.int64)
    last[:, -1] = 5
    assert aucb1_upper_bound(last, gaps, 0.5, 0.5, 3.0) == aucb1_upper_bound(np.zeros((3, 200), dtype=int), gaps, 0.5, 0.5, 3.0)
    with pytest.raises(DomainError):
        aucb1_upper_bound(H, gaps, 0.5, 0.5, 2.0)


def test_corollary_stationary_kernel():
    T = 10**4
    base = corollary_bound("stationary", [0.2], 0.5, 0.5, 1.0, T, lam=0.0)
    assert base == pytest.approx(0.2 * 18 * 0.25 / 0.04 * math.log(T + 1))
    assert corollary_bound("stationary", [0.2], 0.5, 0.5, 1.0, T, lam=1e-9) == pytest.approx(base)
    a = corollary_bound("stationary", [0.2], 0.5, 0.5, 1.0, T, lam=0.5)
    b = corollary_bound("stationary", [0.2], 0.5, 0.5, 1.0, T, lam=0.25)
    assert b - a == pytest.approx(0.2 * 18 * 0.25 / 0.04 * math.log(2.0))
    with pytest.raises(DomainError):
        corollary_bound("stationary", [0.2], 0.5, 0.5, 1.0, T, lam=2.0)
    with pytest.raises(DomainError):
        corollary_bound("nope", [0.2], 0.5, 0.5, 1.0, T)


def test_corollary_diminishing_plateaus():
    # kappa / (72 c) > 1 and kappa sigma_hat^2 / (20 Delta^2) > 1.
    vals = [corollary_bound("diminishing", [0.2], 0.5, 0.5, 1.0, T, kappa=200.0) for T in (10**3, 10**4, 10**5)]
    assert vals[2] - vals[1] < 1e-3 * vals[2]
    grow = [corollary_bound("diminishing", [0.2], 0.5, 0.5, 1.0, T, kappa=1.0) for T in (10**3, 10**4, 10**5)]
    assert grow[2] - grow[1] > 1.0


def test_unknown_mapping_lower_bound_cases():
    T = 1000
    zero = [0] * T
    v2 = unknown_mapping_lower_bound(zero, 2, 0.2, 0.1)
    coef = (0.3**2) * 0.01
    assert v2 == pytest.approx((1 / 0.04) * (math.log(coef * T / (2 * math.log(T)))), rel=1e-12)
    busy = [1] * T
    assert unknown_mapping_lower_bound(busy, 2, 0.2, 0.1) <= v2
    v1 = unknown_mapping_lower_bound(busy, 2, 0.2, -0.1)
    m = min(4 * 0.2**4, (0.3**2) * 0.01)
    assert v1 == pytest.approx(25 * math.log(m * T / (2 * math.log(T))), rel=1e-12)
    with pytest.raises(DomainError):
        unknown_mapping_lower_bound(zero, 2, 0.2, 0.0)
    with pytest.raises(DomainError):
        unknown_mapping_lower_bound([0], 2, 0.2, 0.1)


def test_aie_examples():
    assert aie_index([0] * 500, 0.03, 0.25, 4.0) == 0.0
    c = 0.2 * (0.2 / (0.5 * 1.0)) ** 2
    big = int(math.ceil(50 / c))
    # A huge arrival in epoch 2 leaves only the t = 1 term.
    v = aie_index([0, big] + [0] * 998, 0.2, 0.5, 1.0)
    assert v == pytest.approx(math.log(1000) - math.log1p(999 * math.exp(-c * big)), rel=1e-12)
    assert v == pytest.approx(math.log(1000), rel=1e-12)
    # In epoch 1 it discounts every term.
    assert aie_index([big] + [0] * 999, 0.2, 0.5, 1.0) == pytest.approx(c * big, rel=1e-12)
    with pytest.raises(DomainError):
        aie_index([1], 0.2, 0.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(rows, st.floats(0.01, 0.5), st.floats(0.5, 16.0))
def test_aie_nonnegative_and_bounded(h, delta, alpha):
    v = aie_index(h, delta, 0.25, alpha)
    c = 0.2 * (delta / (0.25 * alpha)) ** 2
    assert -1e-12 <= v <= c * sum(h) * (1 + 1e-12) + 1e-12
