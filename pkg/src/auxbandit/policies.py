"""Reference implementations of the decision rules.

Each ``*_select`` reads a :class:`~auxbandit.core.PolicyState` and returns an
arm index.  :class:`Policy` wires one rule to its own state and random stream
and is what the pure-Python episode kernel drives step by step.

Randomised rules consume a fixed number of draws per epoch whatever the
outcome (Thompson sampling: ``K`` normals; epsilon-greedy: two uniforms;
myopic: one uniform).  That fixed budget lets the compiled kernel replay the
same stream from a pre-drawn table.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import (
    ConfigError,
    PolicyState,
    advance_virtual_time,
    known_mapping_stats,
    optimistic_stats,
    reward_stats,
    smallest_argmax,
    update_on_aux,
    update_on_reward,
)


class PolicyKind(str, enum.Enum):
    UCB1 = "UCB1"
    AUCB1 = "aUCB1"
    TS = "TS"
    ATS = "aTS"
    EG = "EG"
    NEG = "nEG"
    AEG = "aEG"
    MYOPIC = "Myopic"
    UCB1PLUS = "UCB1plus"
    TWO_UCBS = "TwoUCBs"


USES_KNOWN_AUX = {PolicyKind.AUCB1, PolicyKind.ATS, PolicyKind.NEG, PolicyKind.AEG, PolicyKind.MYOPIC}
EG_KINDS = {PolicyKind.EG, PolicyKind.NEG, PolicyKind.AEG}
# Integer codes shared with the compiled kernels.
KIND_CODES = {kind: i for i, kind in enumerate(PolicyKind)}


@dataclass
class PolicyConfig:
    kind: PolicyKind
    c: float = 2.0
    delta: Optional[float] = None
    alpha_bar: Optional[float] = None
    alpha_low: float = 0.0
    label: Optional[str] = None

    def __post_init__(self):
        self.kind = PolicyKind(self.kind)
        if self.alpha_bar is not None:
            self.alpha_bar = float(self.alpha_bar)
        if self.label is None:
            self.label = self.kind.value

    @property
    def use_aux(self) -> bool:
        return self.kind in USES_KNOWN_AUX or self.kind is PolicyKind.TWO_UCBS

    def errors(self) -> list:
        errs = []
        if not self.c > 0:
            errs.append(f"policy {self.label}: c must be positive")
        if self.kind in EG_KINDS and (self.delta is None or not self.delta > 0):
            errs.append(f"policy {self.label}: delta must be positive for {self.kind.value}")
        if self.kind in (PolicyKind.UCB1PLUS, PolicyKind.TWO_UCBS):
            if self.alpha_bar is None or not self.alpha_bar > 0:
                errs.append(f"policy {self.label}: alpha_bar must be positive for {self.kind.value}")
        if self.alpha_low < 0:
            errs.append(f"policy {self.label}: alpha_low must be non-negative")
        return errs

    def validate(self, sigma: Optional[float] = None) -> list:
        """Raise on errors; return advisory warnings (untuned constants)."""
        errs = self.errors()
        if errs:
            raise ConfigError("; ".join(errs))
        warnings = []
        if self.kind in (PolicyKind.UCB1, PolicyKind.AUCB1, PolicyKind.UCB1PLUS, PolicyKind.TWO_UCBS) and self.c <= 2:
            warnings.append(f"{self.label}: c={self.c} <= 2, outside the analysed range")
        if self.kind is PolicyKind.AEG and sigma is not None:
            floor = max(16.0, 10.0 * self.delta**2 / sigma**2)
            if self.c <= floor:
                warnings.append(f"{self.label}: c={self.c} <= {floor:g}, outside the analysed range")
        return warnings

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "c": self.c, "label": self.label}
        if self.delta is not None:
            d["delta"] = self.delta
        if self.alpha_bar is not None:
            d["alpha_bar"] = self.alpha_bar
        if self.alpha_low:
            d["alpha_low"] = self.alpha_low
        return d


def log_term(t: float) -> float:
    # t~ = 0 clicks means no information yet: radius term 0.
    return math.log(t) if t > 0 else 0.0


def radius(c: float, sigma: float, lt: float, count: float) -> float:
    if count <= 0:
        return math.inf
    return math.sqrt(c * (sigma * sigma) * lt / count)


def mean_count(state: PolicyState, arm: int, use_aux: bool, sigma: float, aux_scale: Sequence[float]):
    if use_aux:
        return known_mapping_stats(state, arm, sigma, aux_scale[arm])
    return reward_stats(state, arm)


def ucb_index(state, arm, lt, c, sigma, aux_scale, use_aux) -> float:
    mean, count = mean_count(state, arm, use_aux, sigma, aux_scale)
    return mean + radius(c, sigma, lt, count)


def two_ucbs_index(state, arm, lt, c, sigma, raw_scale, alpha_bar, floor=1.0) -> float:
    mean, count = reward_stats(state, arm)
    u_pi = mean + radius(c, sigma, lt, count)
    o_mean, o_count = optimistic_stats(state, arm, sigma, raw_scale[arm], alpha_bar, floor)
    u_aux = o_mean + radius(c, sigma, lt, o_count)
    return min(u_pi, u_aux)


def ucb_select(state: PolicyState, t: int, cfg: PolicyConfig, sigma: float, aux_scale, replay: bool = False) -> int:
    """UCB1 / aUCB1: round-robin for t <= K, then the smallest argmax index."""
    K = state.K
    if not replay and t <= K:
        return t - 1
    lt = log_term(state.t_tilde if replay else t)
    use_aux = cfg.kind is PolicyKind.AUCB1
    return smallest_argmax([ucb_index(state, k, lt, cfg.c, sigma, aux_scale, use_aux) for k in range(K)])


def ts_select(state: PolicyState, t: int, cfg: PolicyConfig, rng, sigma: float, aux_scale) -> int:
    K = state.K
    z = rng.standard_normal(K)
    use_aux = cfg.kind is PolicyKind.ATS
    s2 = sigma * sigma
    theta = []
    for k in range(K):
        mean, count = mean_count(state, k, use_aux, sigma, aux_scale)
        theta.append(mean + math.sqrt(cfg.c * s2 / (count + 1.0)) * z[k])
    return smallest_argmax(theta)


def aeg_step(state: PolicyState, t: int, cfg: PolicyConfig, rng, sigma: float, aux_scale) -> tuple:
    """One epsilon-greedy decision; virtual times must already be advanced.

    Returns ``(arm, explored)``.
    """
    K = state.K
    u = rng.random(2)
    inv = [1.0 / state.tau[k] for k in range(K)]
    total = 0.0
    for w in inv:
        total += w
    p = cfg.c * (sigma * sigma) / (cfg.delta * cfg.delta) * total
    if u[0] < min(1.0, p):
        target = u[1] * total
        acc = 0.0
        for k in range(K):
            acc += inv[k]
            if target < acc:
                return k, True
        return K - 1, True
    use_aux = cfg.kind is not PolicyKind.EG
    means = [mean_count(state, k, use_aux, sigma, aux_scale)[0] for k in range(K)]
    return smallest_argmax(means), False


def exploration_probability(state: PolicyState, cfg: PolicyConfig, sigma: float) -> float:
    total = 0.0
    for k in range(state.K):
        total += 1.0 / state.tau[k]
    return min(1.0, cfg.c * (sigma * sigma) / (cfg.delta * cfg.delta) * total)


def virtual_time_rate(cfg: PolicyConfig, aux_scale_k: float) -> float:
    if cfg.kind is not PolicyKind.AEG:
        return 0.0
    return cfg.delta * cfg.delta / (cfg.c * aux_scale_k * aux_scale_k)


def myopic_select(state: PolicyState, t: int, rng, sigma: float, aux_scale) -> int:
    K = state.K
    u = rng.random(1)[0]
    if t <= K:
        return t - 1
    means = [known_mapping_stats(state, k, sigma, aux_scale[k])[0] for k in range(K)]
    best = max(means)
    ties = [k for k in range(K) if means[k] == best]
    return ties[min(len(ties) - 1, int(u * len(ties)))]


def ucb1plus_select(state: PolicyState, t: int, cfg: PolicyConfig, sigma: float, caps: Sequence[float]) -> int:
    """UCB1 index capped at ``alpha_bar * y_k``; ``caps`` holds those products."""
    K = state.K
    if caps is None or len(caps) != K:
        raise ConfigError("UCB1plus needs one noiseless auxiliary mean per arm")
    for k in range(K):
        if state.n_pi[k] == 0:
            return k
    lt = log_term(t)
    idx = []
    for k in range(K):
        mean, count = reward_stats(state, k)
        idx.append(min(mean + radius(cfg.c, sigma, lt, count), caps[k]))
    return smallest_argmax(idx)


def two_ucbs_select(state: PolicyState, t: int, cfg: PolicyConfig, sigma: float, raw_scale, replay: bool = False) -> int:
    K = state.K
    if cfg.alpha_bar is None or not cfg.alpha_bar > 0:
        raise ConfigError("TwoUCBs needs alpha_bar > 0")
    if not replay:
        for k in range(K):
            if state.n_pi[k] == 0:
                return k
    lt = log_term(state.t_tilde if replay else t)
    return smallest_argmax([two_ucbs_index(state, k, lt, cfg.c, sigma, raw_scale, cfg.alpha_bar) for k in range(K)])


class Policy:
    """A decision rule bound to its state, scales and random stream.

    ``alpha`` is the mapping assumed by known-mapping rules; ``aux_scale`` is
    the per-arm noise scale the rule weights auxiliary data with (mapped scale
    for known-mapping rules, raw scale for TwoUCBs).
    """

    def __init__(self, cfg: PolicyConfig, K: int, sigma: float, aux_scale=None, alpha=None, caps=None, rng=None):
        cfg.validate()
        self.cfg = cfg
        self.K = K
        self.sigma = float(sigma)
        self.aux_scale = list(aux_scale) if aux_scale is not None else [0.0] * K
        self.caps = list(caps) if caps is not None else None
        self.rng = rng
        self.state = PolicyState(K, alpha=alpha if alpha is not None else [1.0] * K)
        if cfg.kind is PolicyKind.UCB1PLUS and self.caps is None:
            raise ConfigError("UCB1plus needs the auxiliary means y")

    def observe_aux(self, h: Sequence[int], batches: Sequence[Sequence[float]]) -> None:
        """Deliver one epoch's arrivals; ``batches[k]`` holds ``h[k]`` raw observations."""
        kind = self.cfg.kind
        if kind in EG_KINDS:
            for k in range(self.K):
                advance_virtual_time(self.state, k, h[k] if kind is PolicyKind.AEG else 0, virtual_time_rate(self.cfg, self.aux_scale[k]))
        if self.cfg.use_aux:
            for k in range(self.K):
                if h[k]:
                    update_on_aux(self.state, k, batches[k])

    def select(self, t: int) -> int:
        kind = self.cfg.kind
        st = self.state
        if kind in (PolicyKind.UCB1, PolicyKind.AUCB1):
            return ucb_select(st, t, self.cfg, self.sigma, self.aux_scale)
        if kind in (PolicyKind.TS, PolicyKind.ATS):
            return ts_select(st, t, self.cfg, self.rng, self.sigma, self.aux_scale)
        if kind in EG_KINDS:
            return aeg_step(st, t, self.cfg, self.rng, self.sigma, self.aux_scale)[0]
        if kind is PolicyKind.MYOPIC:
            return myopic_select(st, t, self.rng, self.sigma, self.aux_scale)
        if kind is PolicyKind.UCB1PLUS:
            return ucb1plus_select(st, t, self.cfg, self.sigma, self.caps)
        return two_ucbs_select(st, t, self.cfg, self.sigma, self.aux_scale)

    def observe_reward(self, arm: int, reward: float, clicked: bool = True) -> None:
        update_on_reward(self.state, arm, reward, clicked)
