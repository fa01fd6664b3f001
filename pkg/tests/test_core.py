from __future__ import annotations

import math

import numpy as np
import pytest

from auxbandit.core import (
    ArrivalMatrix,
    ConfigError,
    DomainError,
    PolicyState,
    ProblemInstance,
    advance_virtual_time,
    known_mapping_stats,
    optimistic_stats,
    reward_stats,
    smallest_argmax,
    update_on_aux,
    update_on_reward,
)


def test_instance_derived_accessors():
    inst = ProblemInstance(mu=(0.7, 0.5, 0.5), sigma=0.5, sigma_hat=0.5)
    assert inst.K == 3
    assert inst.best_arm == 0
    assert inst.mu_star == 0.7
    assert inst.gaps == pytest.approx((0.0, 0.2, 0.2))
    assert inst.min_gap == pytest.approx(0.2)
    assert inst.y == inst.mu and inst.alpha == (1.0, 1.0, 1.0)
    assert inst.well_specified


def test_instance_flags_misspecification_and_scales():
    inst = ProblemInstance(mu=(0.4, 0.2), sigma=0.5, sigma_hat=0.1, y=(0.2, 0.2), alpha=(2.0, 2.0))
    assert not inst.well_specified
    assert inst.mapped_scale() == pytest.approx((0.2, 0.2))


@pytest.mark.parametrize(
    "kw",
    [
        dict(mu=(0.5,), sigma=1.0),
        dict(mu=(0.5, 0.4), sigma=0.0),
        dict(mu=(0.5, 0.4), sigma=1.0, sigma_hat=-1.0),
        dict(mu=(0.5, 0.4), sigma=1.0, alpha=(1.0,)),
        dict(mu=(0.5, 0.4), sigma=1.0, y=(-0.1, 0.1)),
        dict(mu=(1.5, 0.4), sigma=1.0, reward_family="bernoulli"),
    ],
)
def test_instance_rejects_bad_parameters(kw):
    with pytest.raises(ConfigError):
        ProblemInstance(**kw)


def test_smallest_argmax_breaks_ties_low():
    assert smallest_argmax([0.1, 0.3, 0.3]) == 1
    assert smallest_argmax([math.inf, math.inf]) == 0


def test_arrival_matrix_validation():
    with pytest.raises(DomainError):
        ArrivalMatrix([[0, -1]])
    with pytest.raises(DomainError):
        ArrivalMatrix([[0.5, 1]])
    with pytest.raises(DomainError):
        ArrivalMatrix([0, 1])
    H = ArrivalMatrix([[0, 1, 2], [3, 0, 0]])
    assert (H.K, H.T) == (2, 3)
    assert H.cum(0, 0) == 0 and H.cum(0, 3) == 3
    assert np.array_equal(H.cumulative()[1], [3, 3, 3])
    with pytest.raises(ValueError):
        H.h[0, 0] = 5


def test_reward_update_examples():
    st = PolicyState(3)
    update_on_reward(st, 1, 1.0)
    assert st.n_pi[1] == 1 and reward_stats(st, 1) == (1.0, 1.0)

    st = PolicyState(3)
    update_on_reward(st, 1, 1.0, clicked=False)
    assert st.n_pi[1] == 0 and reward_stats(st, 1) == (0.0, 0.0)
    assert st.t == 1 and st.t_tilde == 0

    st = PolicyState(3)
    for r in (0.2, 0.4, 0.6):
        update_on_reward(st, 2, r)
    mean, n = reward_stats(st, 2)
    assert n == 3 and mean == pytest.approx(0.4)
    with pytest.raises(DomainError):
        update_on_reward(st, 3, 1.0)


def test_aux_update_examples():
    st = PolicyState(2, alpha=[2.0, 1.0])
    update_on_aux(st, 0, [])
    assert st.n_aux == [0, 0] and st.aux_sum == [0.0, 0.0]
    update_on_aux(st, 0, [0.5])
    assert st.n_aux[0] == 1 and st.mapped_aux_sum[0] == 1.0

    st = PolicyState(2, alpha=[1.0, 1.0])
    update_on_aux(st, 1, [0.2])
    update_on_aux(st, 1, [0.6])
    assert st.n_aux[1] == 2 and st.aux_sum[1] / st.n_aux[1] == pytest.approx(0.4)
    with pytest.raises(DomainError):
        update_on_aux(st, -1, [0.1])


def test_known_mapping_examples():
    st = PolicyState(2, alpha=[1.0, 1.0])
    update_on_reward(st, 0, 1.0)
    update_on_aux(st, 0, [0.5])
    mean, count = known_mapping_stats(st, 0, 0.5, 0.5)
    assert count == 2.0 and mean == pytest.approx(0.75)

    st = PolicyState(2, alpha=[1.0, 1.0])
    update_on_reward(st, 0, 1.0)
    update_on_aux(st, 0, [0.0])
    mean, count = known_mapping_stats(st, 0, 0.5, 1.0)
    assert count == pytest.approx(1.25) and mean == pytest.approx(0.8)

    assert known_mapping_stats(PolicyState(2), 1, 0.5, 0.5) == (0.0, 0.0)


def test_known_mapping_matches_precision_weighting():
    rng = np.random.default_rng(3)
    st = PolicyState(2, alpha=[1.7, 1.0])
    for _ in range(20):
        update_on_reward(st, 0, rng.normal())
        update_on_aux(st, 0, rng.normal(size=3))
    sigma, s_hat = 0.7, 0.4
    n, m = st.n_pi[0], st.n_aux[0]
    ref = (st.reward_sum[0] / sigma**2 + st.mapped_aux_sum[0] / s_hat**2) / (n / sigma**2 + m / s_hat**2)
    mean, count = known_mapping_stats(st, 0, sigma, s_hat)
    assert mean == pytest.approx(ref, rel=1e-12)
    assert count == pytest.approx(n + sigma**2 / s_hat**2 * m, rel=1e-12)


def test_known_mapping_without_aux_is_plain_average_bitwise():
    st = PolicyState(2)
    for r in (0.1, 0.7, 0.35):
        update_on_reward(st, 0, r)
    assert known_mapping_stats(st, 0, 0.5, 0.3) == reward_stats(st, 0)


def test_zero_aux_scale_with_data_is_rejected():
    st = PolicyState(2)
    update_on_aux(st, 0, [0.1])
    with pytest.raises(DomainError):
        known_mapping_stats(st, 0, 0.5, 0.0)
    with pytest.raises(DomainError):
        optimistic_stats(st, 0, 0.5, 0.0, 2.0)


def test_optimistic_example():
    st = PolicyState(2)
    update_on_reward(st, 0, 0.4)
    update_on_aux(st, 0, [0.3] * 4)
    mean, count = optimistic_stats(st, 0, 0.5, 0.5, 2.0)
    assert count == pytest.approx(2.0)
    assert mean == pytest.approx(0.5)


def test_optimistic_reduces_without_aux_and_unbiased_at_population_values():
    st = PolicyState(2)
    update_on_reward(st, 0, 0.4)
    update_on_reward(st, 0, 0.8)
    assert optimistic_stats(st, 0, 0.5, 0.5, 3.0) == reward_stats(st, 0)
    # Population values: X = mu, Y = y, alpha_bar = alpha, alpha * y = mu.
    mu, alpha = 0.6, 1.5
    st = PolicyState(2)
    update_on_reward(st, 1, mu)
    update_on_aux(st, 1, [mu / alpha] * 5)
    mean, _ = optimistic_stats(st, 1, 0.5, 0.2, alpha)
    assert mean == pytest.approx(mu, rel=1e-12)


def test_optimistic_floor_and_disabled_aux():
    st = PolicyState(2)
    update_on_aux(st, 0, [0.3])
    # count = 0.25 / (4 * 0.25) = 0.25 < 1: floor 1 divides by 1, floor 0 by the count.
    m1, c1 = optimistic_stats(st, 0, 0.5, 0.5, 2.0, floor=1.0)
    m0, c0 = optimistic_stats(st, 0, 0.5, 0.5, 2.0, floor=0.0)
    assert c1 == c0 == pytest.approx(0.25)
    assert m1 == pytest.approx(0.15)
    assert m0 == pytest.approx(0.6)
    assert optimistic_stats(st, 0, 0.5, 0.5, math.inf) == (0.0, 0.0)
    with pytest.raises(DomainError):
        optimistic_stats(st, 0, 0.5, 0.5, 0.0)


def test_virtual_time_update():
    st = PolicyState(2)
    assert advance_virtual_time(st, 0, 1, math.log(2.0)) == pytest.approx(2.0)
    for t in range(1, 6):
        assert advance_virtual_time(st, 1, 0, 0.7) == float(t)
    # tau >= t once arrivals happen.
    st = PolicyState(2)
    rng = np.random.default_rng(0)
    for t in range(1, 200):
        tau = advance_virtual_time(st, 0, int(rng.integers(0, 2)), 0.05)
        assert tau >= t - 1e-9


def test_config_error_keeps_all_messages():
    e = ConfigError("two problems", ["a", "b"])
    assert e.errors == ["a", "b"]
    assert ConfigError("one").errors == ["one"]
