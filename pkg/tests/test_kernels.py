"""The compiled kernels and the pure-Python fallback must agree exactly."""
from __future__ import annotations

import numpy as np
import pytest

from auxbandit import _backend, _pykernels
from auxbandit.arrivals import gen_stationary
from auxbandit.core import Family, ProblemInstance
from auxbandit.policies import PolicyConfig, PolicyKind
from auxbandit.replay import CorpusParams, replay_trajectory, synth_article_days
from auxbandit.sim import draw_aux, draw_rewards, policy_table, run_kernel

compiled = pytest.importorskip("auxbandit._kernels")

CONFIGS = [
    PolicyConfig("UCB1", c=2.0),
    PolicyConfig("aUCB1", c=1.0),
    PolicyConfig("TS", c=0.5),
    PolicyConfig("aTS", c=0.5),
    PolicyConfig("EG", c=1.0, delta=0.2),
    PolicyConfig("nEG", c=1.0, delta=0.2),
    PolicyConfig("aEG", c=1.0, delta=0.2),
    PolicyConfig("Myopic", c=1.0),
    PolicyConfig("UCB1plus", c=3.0, alpha_bar=1.2),
    PolicyConfig("TwoUCBs", c=3.0, alpha_bar=1.5),
]


def instances():
    yield ProblemInstance(mu=(0.7, 0.5, 0.5), sigma=0.5, sigma_hat=0.5)
    yield ProblemInstance(mu=(0.2, 0.6, 0.4, 0.55), sigma=0.3, sigma_hat=0.2, y=(0.1, 0.3, 0.2, 0.5), alpha=(2.0, 2.0, 2.0, 1.1))
    yield ProblemInstance(mu=(0.3, 0.5), sigma=0.5, sigma_hat=0.5, y=(0.3, 0.5), aux_family=Family.CONSTANT)
    yield ProblemInstance(mu=(0.6, 0.4), sigma=0.5, sigma_hat=0.5, reward_family="bernoulli", aux_family="bernoulli")


def test_backend_selection(monkeypatch):
    assert _backend.BACKEND == "compiled"
    assert _backend.select("python")[1] is _pykernels
    assert _backend.select("compiled")[1] is compiled
    with pytest.raises(ValueError):
        _backend.select("fortran")


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: c.label)
def test_episode_kernels_agree(cfg):
    T = 400
    for i, inst in enumerate(instances()):
        for seed in (1, 2):
            H = gen_stationary(inst.K, T, 0.1, seed + 10 * i)
            rewards = draw_rewards(inst, T, seed)
            aux = draw_aux(inst, H, seed)
            table = policy_table(cfg, inst.K, T, seed)
            a = run_kernel(inst, H, cfg, rewards, aux, table, compiled)
            b = run_kernel(inst, H, cfg, rewards, aux, table, _pykernels)
            assert np.array_equal(a, b), (cfg.label, i, seed)


@pytest.mark.parametrize("kind", ["UCB1", "aUCB1", "TwoUCBs"])
def test_replay_kernels_agree(kind):
    cfg = PolicyConfig(kind, c=0.05, alpha_bar=1.1 if kind == "TwoUCBs" else None)
    cases = synth_article_days(4, CorpusParams(T=600, arrival_rate=1.0, alpha_ratio=1.5), seed=3)
    for case in cases:
        for seed in range(3):
            a = replay_trajectory(case, cfg, seed, compiled)
            b = replay_trajectory(case, cfg, seed, _pykernels)
            assert np.array_equal(a["arms"], b["arms"])
            assert a["regret"] == b["regret"]


def test_kernel_rejects_short_random_table():
    inst = ProblemInstance(mu=(0.7, 0.5), sigma=0.5, sigma_hat=0.5)
    cfg = PolicyConfig("TS", c=0.5)
    H = gen_stationary(2, 20, 0.0, 0)
    with pytest.raises((ValueError, IndexError)):
        run_kernel(inst, H, cfg, draw_rewards(inst, 20, 0), draw_aux(inst, H, 0), np.zeros((5, 2)), _pykernels)
