"""One-armed content-recommendation replay on synthetic article-day cases.

Arm 0 is the current article version with a known conversion rate
``CVR0 = CVR + s * delta``; arm 1 is the new version with unknown rate
``CVR``.  A recommendation is clicked with probability ``CTR`` and the
conversion outcome is observed only on a click.  Readers arriving from
search give Bernoulli(``CVR_search``) auxiliary outcomes for arm 1, mapped
to the recommendation scale by ``alpha = CVR / CVR_search``.

The arrival row and the auxiliary outcomes are frozen per case; the sign
``s``, clicks and conversion outcomes are redrawn per replication.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .bounds import aie_index
from .core import ConfigError, DomainError
from .policies import KIND_CODES, PolicyConfig, PolicyKind
from .rng import derive_seed, stream

# Reward scale for Bernoulli conversions, and the raw auxiliary scale: the
# mapped observation alpha*Y then has variance alpha^2/4.
SIGMA = 0.5
RAW_SIGMA_HAT = 0.5
# Scale used by the effectiveness index for Bernoulli observations.
AIE_SIGMA_HAT = 0.25
ALPHA_BAR_FACTOR = 1.1
REPLAY_KINDS = (PolicyKind.UCB1, PolicyKind.AUCB1, PolicyKind.TWO_UCBS)


@dataclass
class ReplayCase:
    case_id: str
    CTR: float
    CVR_recom: float
    delta: float
    CVR_search: float
    alpha_hat: float
    h_row: np.ndarray
    Y_stream: np.ndarray

    def __post_init__(self):
        self.h_row = np.asarray(self.h_row, dtype=np.int64)
        self.Y_stream = np.asarray(self.Y_stream, dtype=np.int64)

    @property
    def T(self) -> int:
        return int(self.h_row.size)

    @property
    def alpha_true(self) -> float:
        return self.CVR_recom / self.CVR_search

    @property
    def alpha_bar(self) -> float:
        return ALPHA_BAR_FACTOR * self.alpha_hat

    def cvr0(self, s: int) -> float:
        return self.CVR_recom + s * self.delta

    def errors(self) -> list:
        errs = []
        if not 0 <= self.CTR <= 1:
            errs.append(f"case {self.case_id}: CTR must lie in [0, 1]")
        if not 0 < self.CVR_recom < 1:
            errs.append(f"case {self.case_id}: CVR_recom must lie in (0, 1)")
        if not 0 < self.CVR_search < 1:
            errs.append(f"case {self.case_id}: CVR_search must lie in (0, 1)")
        if not self.delta >= 0:
            errs.append(f"case {self.case_id}: delta must be non-negative")
        elif not (0 < self.CVR_recom - self.delta and self.CVR_recom + self.delta < 1):
            errs.append(f"case {self.case_id}: CVR_recom +/- delta must stay inside (0, 1)")
        if not self.alpha_hat >= 0:
            errs.append(f"case {self.case_id}: alpha_hat must be non-negative")
        if self.h_row.ndim != 1 or self.h_row.size == 0:
            errs.append(f"case {self.case_id}: h_row must be a non-empty list")
        elif (self.h_row < 0).any():
            errs.append(f"case {self.case_id}: h_row counts must be non-negative")
        elif self.Y_stream.size != int(self.h_row.sum()):
            errs.append(f"case {self.case_id}: Y_stream needs one outcome per arrival")
        if self.Y_stream.size and not np.isin(self.Y_stream, (0, 1)).all():
            errs.append(f"case {self.case_id}: Y_stream outcomes must be 0 or 1")
        return errs

    def validate(self) -> "ReplayCase":
        errs = self.errors()
        if errs:
            raise ConfigError("; ".join(errs))
        return self

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "CTR": self.CTR,
            "CVR_recom": self.CVR_recom,
            "delta": self.delta,
            "CVR_search": self.CVR_search,
            "alpha_hat": self.alpha_hat,
            "h_row": self.h_row.tolist(),
            "Y_stream": self.Y_stream.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReplayCase":
        keys = {"case_id", "CTR", "CVR_recom", "delta", "CVR_search", "alpha_hat", "h_row", "Y_stream"}
        missing = sorted(keys - set(d))
        unknown = sorted(set(d) - keys)
        if missing or unknown:
            raise ConfigError(f"replay case: missing {missing}, unknown {unknown}")
        return cls(
            str(d["case_id"]), float(d["CTR"]), float(d["CVR_recom"]), float(d["delta"]),
            float(d["CVR_search"]), float(d["alpha_hat"]), d["h_row"], d["Y_stream"],
        ).validate()


# -- metrics -----------------------------------------------------------------

def relative_improvement(r_ucb1: float, r_policy: float) -> Optional[float]:
    """(R_UCB1 - R_pi) / R_UCB1, or None when R_UCB1 <= 0."""
    if not r_ucb1 > 0:
        return None
    return (r_ucb1 - r_policy) / r_ucb1


def relative_mapping_misspecification(cvr: float, alpha_hat: float, alpha_true: float) -> float:
    if not alpha_true > 0:
        raise DomainError("alpha_true must be positive")
    return cvr * abs(1.0 - alpha_hat / alpha_true)


def no_harm_rate(pairs) -> float:
    """Fraction of ``(r_policy, r_ucb1)`` pairs with ``r_policy <= r_ucb1``."""
    pairs = list(pairs)
    if not pairs:
        raise DomainError("no-harm rate of an empty set")
    return sum(1 for rp, ru in pairs if rp <= ru) / len(pairs)


def case_aie(case: ReplayCase, c_tilde: float = 0.2) -> float:
    return aie_index(case.h_row, case.delta, AIE_SIGMA_HAT, case.alpha_true, c_tilde)


def case_rmm(case: ReplayCase) -> float:
    return relative_mapping_misspecification(case.CVR_recom, case.alpha_hat, case.alpha_true)


# -- one replication ---------------------------------------------------------

def draw_replication(case: ReplayCase, seed: int) -> tuple:
    """(s, W, X0, X1) for one replication; shared by every policy."""
    g = stream(seed, "replay")
    T = case.T
    s = 1 if g.random() < 0.5 else -1
    W = (g.random(T) < case.CTR).astype(np.int64)
    X0 = (g.random(T) < case.cvr0(s)).astype(np.float64)
    X1 = (g.random(T) < case.CVR_recom).astype(np.float64)
    return s, W, X0, X1


def _kernel_args(case: ReplayCase, cfg: PolicyConfig) -> tuple:
    """(scale, alpha_coef, alpha_bar) for the replay kernel.

    For TwoUCBs ``cfg.alpha_bar`` is a multiplier on the case's mapping
    estimate, so one config serves every case.
    """
    if cfg.kind is PolicyKind.UCB1:
        return RAW_SIGMA_HAT, 1.0, math.inf
    if not case.alpha_hat > 0:
        raise ConfigError(f"case {case.case_id}: {cfg.label} needs alpha_hat > 0")
    if cfg.kind is PolicyKind.AUCB1:
        return case.alpha_hat * RAW_SIGMA_HAT, case.alpha_hat, math.inf
    factor = cfg.alpha_bar if cfg.alpha_bar is not None else ALPHA_BAR_FACTOR
    return RAW_SIGMA_HAT, case.alpha_hat, factor * case.alpha_hat


def replay_trajectory(case: ReplayCase, cfg: PolicyConfig, seed: int, kernels=None) -> dict:
    """Chosen arms, clicks, outcomes and realized regret of one replication."""
    if cfg.kind not in REPLAY_KINDS:
        raise ConfigError(f"replay supports UCB1, aUCB1 and TwoUCBs, not {cfg.kind.value}")
    kernels = kernels or _backend.kernels
    s, W, X0, X1 = draw_replication(case, seed)
    cvr0 = case.cvr0(s)
    scale, coef, abar = _kernel_args(case, cfg)
    arms = kernels.replay_episode(
        KIND_CODES[cfg.kind], float(cfg.c), SIGMA, float(scale), float(coef), float(abar),
        float(cvr0), case.h_row, case.Y_stream.astype(np.float64), W, X1,
    )
    X = np.where(arms == 1, X1, X0)
    best = max(cvr0, case.CVR_recom)
    regret = float(np.dot(W, best - X))
    return {"s": s, "arms": arms, "W": W, "X": X, "regret": regret}


def simulate_article_day(case: ReplayCase, policy_cfg: PolicyConfig, seed: int, kernels=None) -> float:
    """Realized click-gated regret sum_t W_t (max CVR - X_{pi_t, t})."""
    return replay_trajectory(case, policy_cfg, seed, kernels)["regret"]


# -- synthetic corpus --------------------------------------------------------

@dataclass
class CorpusParams:
    """Ranges for synthetic article-day cases.

    ``arrival_rate`` is the mean number of search arrivals per epoch
    (Poisson).  ``alpha_ratio`` scales every mapping estimate and
    ``misspec`` adds a log-uniform jitter: ``alpha_hat = alpha * ratio * exp(misspec * U(-1, 1))``.
    """

    T: int = 2000
    ctr_range: tuple = (0.01, 0.2)
    cvr_range: tuple = (0.05, 0.5)
    alpha_range: tuple = (1.0, 16.0)
    delta_range: tuple = (0.01, 0.04)
    arrival_rate: float = 0.5
    alpha_ratio: float = 1.0
    misspec: float = 0.0

    def errors(self) -> list:
        errs = []

        def rng_ok(name, r, lo, hi):
            if len(r) != 2 or not (lo <= r[0] <= r[1] <= hi):
                errs.append(f"corpus.{name} must satisfy {lo} <= low <= high <= {hi}")

        if not self.T >= 2:
            errs.append("corpus.T must be at least 2")
        rng_ok("ctr_range", self.ctr_range, 0.01, 0.2)
        rng_ok("cvr_range", self.cvr_range, 0.05, 0.5)
        rng_ok("alpha_range", self.alpha_range, 1.0, 16.0)
        rng_ok("delta_range", self.delta_range, 0.01, 0.04)
        if not self.arrival_rate >= 0:
            errs.append("corpus.arrival_rate must be non-negative")
        if not self.alpha_ratio > 0:
            errs.append("corpus.alpha_ratio must be positive")
        if not self.misspec >= 0:
            errs.append("corpus.misspec must be non-negative")
        return errs

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "ctr_range": list(self.ctr_range),
            "cvr_range": list(self.cvr_range),
            "alpha_range": list(self.alpha_range),
            "delta_range": list(self.delta_range),
            "arrival_rate": self.arrival_rate,
            "alpha_ratio": self.alpha_ratio,
            "misspec": self.misspec,
        }


def _uniform(g, r) -> float:
    lo, hi = r
    return lo + (hi - lo) * g.random()


def synth_article_days(n_cases: int, params: Optional[CorpusParams] = None, seed: int = 0) -> list:
    params = params or CorpusParams()
    errs = params.errors()
    if n_cases < 1:
        errs.append("n_cases must be at least 1")
    if errs:
        raise ConfigError("; ".join(errs))
    cases = []
    for i in range(n_cases):
        g = stream(seed, "corpus", i)
        ctr = _uniform(g, params.ctr_range)
        cvr = _uniform(g, params.cvr_range)
        lo, hi = params.alpha_range
        alpha = math.exp(_uniform(g, (math.log(lo), math.log(hi))))
        delta = _uniform(g, params.delta_range)
        jitter = params.misspec * (2.0 * g.random() - 1.0)
        cvr_search = cvr / alpha
        # Built from the stored ratio so that no misspecification gives RMM = 0 exactly.
        alpha_hat = (cvr / cvr_search) * params.alpha_ratio * math.exp(jitter)
        h = g.poisson(params.arrival_rate, params.T).astype(np.int64)
        y = (g.random(int(h.sum())) < cvr_search).astype(np.int64)
        cases.append(ReplayCase(f"case-{i:04d}", ctr, cvr, delta, cvr_search, alpha_hat, h, y).validate())
    return cases


def save_corpus(cases: Sequence[ReplayCase], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for case in cases:
            fh.write(json.dumps(case.to_dict(), separators=(",", ":")) + "\n")


def load_corpus(path) -> list:
    cases = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                cases.append(ReplayCase.from_dict(json.loads(line)))
            except (ValueError, TypeError, KeyError) as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    if not cases:
        raise ConfigError(f"{path}: empty corpus")
    return cases


# -- batch scoring -----------------------------------------------------------

@dataclass
class CaseResult:
    case_id: str
    AIE: float
    RMM: float
    mean_regret: dict = field(default_factory=dict)

    def ri(self, label: str, baseline: str = "UCB1") -> Optional[float]:
        return relative_improvement(self.mean_regret[baseline], self.mean_regret[label])


def score_case(case: ReplayCase, policies: Sequence[PolicyConfig], n_reps: int, seed: int, kernels=None) -> CaseResult:
    totals = {cfg.label: 0.0 for cfg in policies}
    for r in range(n_reps):
        rep_seed = derive_seed(seed, r)
        for cfg in policies:
            totals[cfg.label] += simulate_article_day(case, cfg, rep_seed, kernels)
    means = {k: v / n_reps for k, v in totals.items()}
    return CaseResult(case.case_id, case_aie(case), case_rmm(case), means)


def run_replay(
    cases: Sequence[ReplayCase],
    policies: Sequence[PolicyConfig],
    n_reps: int,
    base_seed: int,
    threads: int = 1,
    kernels=None,
) -> list:
    """Score every case; results come back in case order whatever ``threads``."""
    if n_reps < 1:
        raise ConfigError("n_reps must be at least 1")
    labels = [cfg.label for cfg in policies]
    if "UCB1" not in labels:
        raise ConfigError("replay scoring needs a UCB1 baseline labelled 'UCB1'")
    if len(set(labels)) != len(labels):
        raise ConfigError("duplicate policy labels")
    for cfg in policies:
        if cfg.kind not in REPLAY_KINDS:
            raise ConfigError(f"replay supports UCB1, aUCB1 and TwoUCBs, not {cfg.kind.value}")
        cfg.validate()

    def one(i: int) -> CaseResult:
        return score_case(cases[i], policies, n_reps, derive_seed(base_seed, i), kernels)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(one, range(len(cases))))
    return [one(i) for i in range(len(cases))]


def mean_ri(results: Sequence[CaseResult], label: str) -> Optional[float]:
    vals = [v for v in (res.ri(label) for res in results) if v is not None]
    return float(np.mean(vals)) if vals else None


def case_no_harm(results: Sequence[CaseResult], label: str) -> float:
    return no_harm_rate((res.mean_regret[label], res.mean_regret["UCB1"]) for res in results)


def write_results(path, results: Sequence[CaseResult]) -> None:
    """CSV: case_id, policy, mean_regret, RI, AIE, RMM (RI blank when undefined)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case_id", "policy", "mean_regret", "RI", "AIE", "RMM"])
        for res in results:
            for label, reg in res.mean_regret.items():
                ri = res.ri(label)
                w.writerow([
                    res.case_id, label, repr(float(reg)),
                    "" if ri is None else repr(float(ri)),
                    repr(float(res.AIE)), repr(float(res.RMM)),
                ])
