"""Pure-Python episode kernels.

Same signatures and bit-identical outputs as the compiled ``_kernels``
module, built directly on the reference code in :mod:`core` and
:mod:`policies`.  Random draws come from pre-drawn tables so both backends
consume identical numbers.
"""
from __future__ import annotations

import numpy as np

from .core import PolicyState, known_mapping_stats, update_on_aux, update_on_reward
from .policies import KIND_CODES, Policy, PolicyConfig, log_term, radius, two_ucbs_index

CODE_KINDS = {v: k for k, v in KIND_CODES.items()}


class TableRng:
    """Serves rows of a pre-drawn table in place of a generator."""

    def __init__(self, table):
        self.rows = np.asarray(table, dtype=np.float64).tolist()
        self.i = 0

    def _next(self, n):
        row = self.rows[self.i]
        self.i += 1
        if len(row) < n:
            raise ValueError("random table row too short")
        return row[:n]

    def standard_normal(self, n):
        return self._next(n)

    def random(self, n):
        return self._next(n)


def episode(kind, c, sigma, delta, alpha_bar, scale, alpha, caps, H, aux_vals, aux_off, rewards, rand):
    H = np.asarray(H)
    K, T = H.shape
    cfg = PolicyConfig(CODE_KINDS[int(kind)], c=c, delta=delta or None, alpha_bar=alpha_bar)
    pol = Policy(cfg, K, sigma, aux_scale=list(scale), alpha=list(alpha), caps=list(caps), rng=TableRng(rand))
    hcols = H.T.tolist()
    vals = np.asarray(aux_vals, dtype=np.float64).tolist()
    pos = [int(o) for o in aux_off]
    rw = np.asarray(rewards, dtype=np.float64).tolist()
    arms = np.empty(T, dtype=np.int64)
    for t in range(1, T + 1):
        h = hcols[t - 1]
        batches = []
        for k in range(K):
            batches.append(vals[pos[k]:pos[k] + h[k]])
            pos[k] += h[k]
        pol.observe_aux(h, batches)
        arm = pol.select(t)
        pol.observe_reward(arm, rw[arm][pol.state.n_pi[arm]])
        arms[t - 1] = arm
    return arms


def replay_episode(kind, c, sigma, scale, alpha_coef, alpha_bar, cvr0, h, y, W, X1):
    """One-armed replay: arm 0 is the known option, arm 1 learns.

    Returns the chosen arm per epoch.  Counters move only on clicks.
    """
    code = int(kind)
    name = CODE_KINDS[code]
    T = len(h)
    state = PolicyState(2, alpha=[1.0, float(alpha_coef)])
    hs = np.asarray(h).tolist()
    ys = np.asarray(y, dtype=np.float64).tolist()
    ws = np.asarray(W).tolist()
    xs = np.asarray(X1, dtype=np.float64).tolist()
    sc = [0.0, float(scale)]
    pos = 0
    arms = np.empty(T, dtype=np.int64)
    for t in range(T):
        n = hs[t]
        if n and name != "UCB1":
            update_on_aux(state, 1, ys[pos:pos + n])
        pos += n
        lt = log_term(state.t_tilde)
        if name == "UCB1":
            n_pi = state.n_pi[1]
            mean = state.reward_sum[1] / n_pi if n_pi > 0 else 0.0
            u = mean + radius(c, sigma, lt, float(n_pi))
        elif name == "aUCB1":
            mean, count = known_mapping_stats(state, 1, sigma, sc[1])
            u = mean + radius(c, sigma, lt, count)
        else:
            u = two_ucbs_index(state, 1, lt, c, sigma, sc, alpha_bar, 0.0)
        arm = 1 if u >= cvr0 else 0
        arms[t] = arm
        clicked = ws[t] != 0
        if arm == 1:
            update_on_reward(state, 1, xs[t], clicked)
        elif clicked:
            state.t_tilde += 1
    return arms
