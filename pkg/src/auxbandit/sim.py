"""Episodes, replication batches and their summaries.

Regret here is pseudo-regret: ``mu* - mu_{pi_t}`` from the true means.

Every random input of an episode is drawn up front from streams keyed by
(replication seed, phase, arm or policy label): a K x T reward table, one
auxiliary-value pool per arm and one table of policy draws.  The reward
table is indexed by pull count (the n-th pull of arm k reads ``rewards[k, n]``),
so all policies in a replication see the same reward sequence per arm and
the same auxiliary values, and adding a policy never shifts another
policy's draws.
"""
from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .arrivals import ArrivalSpec
from .core import ArrivalMatrix, ConfigError, DomainError, Family, ProblemInstance
from .policies import KIND_CODES, PolicyConfig, PolicyKind
from .rng import derive_seed, stream

log = logging.getLogger(__name__)

QUANTILES = (5, 25, 50, 75, 95)


@dataclass
class EpisodeResult:
    arms: np.ndarray
    per_step_regret: np.ndarray
    cum_regret: np.ndarray
    seed: int
    label: str = ""

    @property
    def T(self) -> int:
        return len(self.arms)

    @property
    def final(self) -> float:
        return float(self.cum_regret[-1])

    def pulls(self, K: int) -> np.ndarray:
        return np.bincount(self.arms, minlength=K)


@dataclass
class BatchSummary:
    """Pointwise mean and standard error of cumulative regret over replications.

    ``cum`` keeps the raw (n_reps x T) trajectories and ``arms`` the chosen
    arms, for CSV output and further analysis.
    """

    label: str
    n_reps: int
    mean: np.ndarray
    stderr: np.ndarray
    quantiles: dict
    cum: Optional[np.ndarray] = field(default=None, repr=False)
    arms: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def finals(self) -> np.ndarray:
        return self.cum[:, -1]

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])

    @property
    def final_stderr(self) -> float:
        return float(self.stderr[-1])

    def paired_gap(self, other: "BatchSummary") -> tuple:
        """Mean and standard error of ``final(self) - final(other)`` over paired replications."""
        if other.n_reps != self.n_reps:
            raise DomainError("paired comparison needs equal replication counts")
        d = self.finals - other.finals
        se = float(d.std(ddof=1) / np.sqrt(len(d))) if len(d) > 1 else 0.0
        return float(d.mean()), se

    def share_after(self, t0: int) -> float:
        """Fraction of mean final regret accrued in epochs ``t0+1 .. T``."""
        total = self.mean[-1]
        if total <= 0:
            return 0.0
        return float((total - self.mean[t0 - 1]) / total)


def nearest_rank(values, q: float) -> float:
    """Smallest value with at least ``q`` percent of the sample at or below it."""
    return float(np.percentile(np.asarray(values, dtype=np.float64), q, method="inverted_cdf"))


def summarize_matrix(cum: np.ndarray, label: str = "", arms=None) -> BatchSummary:
    cum = np.asarray(cum, dtype=np.float64)
    if cum.ndim != 2 or cum.shape[0] == 0:
        raise DomainError("need at least one replication")
    n = cum.shape[0]
    mean = cum.mean(axis=0)
    if n > 1:
        stderr = cum.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        stderr = np.zeros(cum.shape[1])
    finals = cum[:, -1]
    qs = {q: nearest_rank(finals, q) for q in QUANTILES}
    return BatchSummary(label, n, mean, stderr, qs, cum, arms)


def summarize(results: Sequence[EpisodeResult]) -> BatchSummary:
    if not results:
        raise DomainError("cannot summarize an empty batch")
    T = results[0].T
    if any(r.T != T for r in results):
        raise DomainError("all episodes must share the horizon")
    cum = np.vstack([r.cum_regret for r in results])
    arms = np.vstack([r.arms for r in results])
    return summarize_matrix(cum, results[0].label, arms)



def draw_rewards(instance: ProblemInstance, T: int, seed: int) -> np.ndarray:
    K = instance.K
    out = np.empty((K, T))
    for k in range(K):
        g = stream(seed, "reward-noise", k)
        mu = instance.mu[k]
        if instance.reward_family is Family.GAUSSIAN:
            out[k] = mu + instance.sigma * g.standard_normal(T)
        elif instance.reward_family is Family.BERNOULLI:
            out[k] = (g.random(T) < mu).astype(np.float64)
        else:
            out[k] = mu
    return out


def draw_aux(instance: ProblemInstance, H: ArrivalMatrix, seed: int) -> tuple:
    """Per-arm pools of raw auxiliary observations, concatenated, with offsets."""
    totals = H.h.sum(axis=1)
    parts = []
    for k in range(instance.K):
        n = int(totals[k])
        g = stream(seed, "aux-noise", k)
        y = instance.y[k]
        if instance.aux_family is Family.GAUSSIAN:
            parts.append(y + instance.sigma_hat * g.standard_normal(n))
        elif instance.aux_family is Family.BERNOULLI:
            parts.append((g.random(n) < y).astype(np.float64))
        else:
            parts.append(np.full(n, y))
    off = np.concatenate(([0], np.cumsum(totals)[:-1])).astype(np.int64)
    vals = np.concatenate(parts) if parts else np.zeros(0)
    return vals, off


# Variants of one rule share a draw table, so e.g. TS and aTS are compared
# on common random numbers.
STREAM_FAMILY = {
    PolicyKind.TS: "TS",
    PolicyKind.ATS: "TS",
    PolicyKind.EG: "EG",
    PolicyKind.NEG: "EG",
    PolicyKind.AEG: "EG",
    PolicyKind.MYOPIC: "Myopic",
}


def policy_table(cfg: PolicyConfig, K: int, T: int, seed: int) -> np.ndarray:
    g = stream(seed, "policy", STREAM_FAMILY.get(cfg.kind, cfg.label))
    if cfg.kind in (PolicyKind.TS, PolicyKind.ATS):
        return g.standard_normal((T, K))
    if cfg.kind in (PolicyKind.EG, PolicyKind.NEG, PolicyKind.AEG):
        return g.random((T, 2))
    if cfg.kind is PolicyKind.MYOPIC:
        return g.random((T, 1))
    return np.zeros((1, 1))


def policy_vectors(instance: ProblemInstance, cfg: PolicyConfig) -> tuple:
    """(aux scale, assumed mapping, caps) as the kernels expect them."""
    K = instance.K
    if cfg.kind is PolicyKind.TWO_UCBS:
        scale = [instance.sigma_hat] * K
    else:
        scale = list(instance.mapped_scale())
    alpha = list(instance.alpha)
    if cfg.kind is PolicyKind.UCB1PLUS:
        caps = [cfg.alpha_bar * y for y in instance.y]
    else:
        caps = [np.inf] * K
    return scale, alpha, caps


def check_inputs(instance: ProblemInstance, H: ArrivalMatrix, cfg: PolicyConfig, T: Optional[int] = None):
    if H.K != instance.K:
        raise ConfigError(f"arrival matrix has {H.K} rows, instance has {instance.K} arms")
    if T is not None and H.T != T:
        raise ConfigError(f"arrival matrix covers {H.T} epochs, expected {T}")
    errs = cfg.errors()
    if errs:
        raise ConfigError("; ".join(errs))
    if cfg.use_aux and H.h.any():
        scale, _, _ = policy_vectors(instance, cfg)
        bad = [k for k in range(instance.K) if H.h[k].any() and not scale[k] > 0]
        if bad:
            raise ConfigError(f"{cfg.label}: auxiliary scale must be positive on arms {bad} that receive arrivals")


def run_kernel(instance, H: ArrivalMatrix, cfg: PolicyConfig, rewards, aux, table, kernels=None) -> np.ndarray:
    kernels = kernels or _backend.kernels
    scale, alpha, caps = policy_vectors(instance, cfg)
    delta = cfg.delta if cfg.delta is not None else 0.0
    abar = cfg.alpha_bar if cfg.alpha_bar is not None else np.inf
    return kernels.episode(
        KIND_CODES[cfg.kind], float(cfg.c), float(instance.sigma), float(delta), float(abar),
        scale, alpha, caps, H.h, aux[0], aux[1], rewards, table,
    )


def regret_from_arms(instance: ProblemInstance, arms: np.ndarray) -> tuple:
    gaps = np.asarray(instance.gaps)
    per_step = gaps[arms]
    return per_step, np.cumsum(per_step)


def run_episode(instance: ProblemInstance, H: ArrivalMatrix, cfg: PolicyConfig, seed: int, kernels=None) -> EpisodeResult:
    """One episode; every draw is a function of ``seed`` alone."""
    check_inputs(instance, H, cfg)
    T = H.T
    rewards = draw_rewards(instance, T, seed)
    aux = draw_aux(instance, H, seed)
    table = policy_table(cfg, instance.K, T, seed)
    arms = run_kernel(instance, H, cfg, rewards, aux, table, kernels)
    per_step, cum = regret_from_arms(instance, arms)
    return EpisodeResult(arms, per_step, cum, seed, cfg.label)


@dataclass
class Scenario:
    """One arrival process and the policies run under it."""

    name: str
    arrivals: ArrivalSpec
    policies: list

    def to_dict(self) -> dict:
        return {"name": self.name, "arrivals": self.arrivals.to_dict(), "policies": [p.to_dict() for p in self.policies]}


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("AUXBANDIT_THREADS", "1")))
    except ValueError:
        return 1


def run_scenarios(
    instance: ProblemInstance,
    scenarios: Sequence[Scenario],
    T: int,
    n_reps: int,
    base_seed: int,
    regenerate_H: bool = True,
    threads: Optional[int] = None,
    kernels=None,
) -> dict:
    """Run every (scenario, policy) pair for ``n_reps`` replications.

    Returns ``{(scenario, label): BatchSummary}`` in input order.  Output
    does not depend on ``threads``: replication ``r`` uses seed
    ``derive_seed(base_seed, r)`` and results are reduced in replication order.
    """
    if n_reps < 1:
        raise ConfigError("n_reps must be at least 1")
    K = instance.K
    kernels = kernels or _backend.kernels
    keys = []
    for sc in scenarios:
        for cfg in sc.policies:
            key = (sc.name, cfg.label)
            if key in keys:
                raise ConfigError(f"duplicate policy label {cfg.label!r} in scenario {sc.name!r}")
            keys.append(key)
    fixed = {}
    if not regenerate_H:
        for sc in scenarios:
            fixed[sc.name] = sc.arrivals.generate(K, T, base_seed)
    for sc in scenarios:
        probe = fixed.get(sc.name) or ArrivalMatrix.zeros(K, T)
        for cfg in sc.policies:
            check_inputs(instance, probe, cfg, T)

    def one(r: int) -> list:
        seed = derive_seed(base_seed, r)
        rewards = draw_rewards(instance, T, seed)
        out = []
        for sc in scenarios:
            H = fixed[sc.name] if not regenerate_H else sc.arrivals.generate(K, T, seed)
            for cfg in sc.policies:
                check_inputs(instance, H, cfg, T)
            aux = draw_aux(instance, H, seed)
            for cfg in sc.policies:
                table = policy_table(cfg, K, T, seed)
                out.append(run_kernel(instance, H, cfg, rewards, aux, table, kernels))
        return out

    n_threads = threads if threads is not None else default_threads()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as ex:
            per_rep = list(ex.map(one, range(n_reps)))
    else:
        per_rep = [one(r) for r in range(n_reps)]

    gaps = np.asarray(instance.gaps)
    small = np.int8 if K < 128 else np.int32
    result = {}
    for i, key in enumerate(keys):
        arms = np.vstack([per_rep[r][i] for r in range(n_reps)])
        cum = np.cumsum(gaps[arms], axis=1)
        result[key] = summarize_matrix(cum, key[1], arms.astype(small))
    return result


def run_replications(
    instance: ProblemInstance,
    arrival_spec: ArrivalSpec,
    policy_cfgs: Sequence[PolicyConfig],
    n_reps: int,
    base_seed: int,
    T: int,
    regenerate_H: bool = True,
    threads: Optional[int] = None,
    kernels=None,
) -> dict:
    """Single-scenario convenience wrapper: ``{label: BatchSummary}``."""
    sc = Scenario("default", arrival_spec, list(policy_cfgs))
    res = run_scenarios(instance, [sc], T, n_reps, base_seed, regenerate_H, threads, kernels)
    return {label: s for (_, label), s in res.items()}


# -- CSV output --------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def sample_times(T: int, stride: int) -> list:
    stride = max(1, int(stride))
    ts = list(range(stride, T + 1, stride))
    if not ts or ts[-1] != T:
        ts.append(T)
    return ts


def write_trajectories(path, results: dict, stride: int = 1) -> None:
    """Long format: scenario, policy, replication, t, arm, cum_regret."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "policy", "replication", "t", "arm", "cum_regret"])
        for (scen, label), s in results.items():
            T = s.cum.shape[1]
            ts = sample_times(T, stride)
            for r in range(s.n_reps):
                for t in ts:
                    w.writerow([scen, label, r, t, int(s.arms[r, t - 1]), _fmt(s.cum[r, t - 1])])


def write_summary(path, results: dict, stride: int = 1) -> None:
    """Per-epoch mean, standard error and nearest-rank quantiles of cumulative regret."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "policy", "t", "mean", "stderr"] + [f"q{q:02d}" for q in QUANTILES])
        for (scen, label), s in results.items():
            T = s.cum.shape[1]
            ts = sample_times(T, stride)
            idx = np.asarray(ts) - 1
            qs = np.percentile(s.cum[:, idx], QUANTILES, axis=0, method="inverted_cdf")
            for j, t in enumerate(ts):
                row = [scen, label, t, _fmt(s.mean[t - 1]), _fmt(s.stderr[t - 1])]
                row += [_fmt(qs[i, j]) for i in range(len(QUANTILES))]
                w.writerow(row)
