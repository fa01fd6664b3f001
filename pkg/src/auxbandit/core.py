"""Domain model and the precision-weighted counter algebra shared by all policies.

Arms are indexed ``0 .. K-1``.  Decision epochs are 1-based (``t = 1 .. T``)
because several indices use ``log t``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A configuration is malformed or internally inconsistent.

    ``errors`` lists every problem found, not just the first.
    """

    def __init__(self, message: str, errors: Optional[Sequence[str]] = None):
        super().__init__(message)
        self.errors = list(errors) if errors else [message]


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"
    # Point mass at the mean; used for adversarial constant auxiliary streams.
    CONSTANT = "constant"


def smallest_argmax(values: Sequence[float]) -> int:
    best = 0
    best_val = values[0]
    for k in range(1, len(values)):
        if values[k] > best_val:
            best = k
            best_val = values[k]
    return best


@dataclass(frozen=True)
class ProblemInstance:
    """True reward and auxiliary-observation parameters of a K-armed problem.

    ``sigma_hat`` is the sub-Gaussian scale of the *raw* auxiliary observation
    ``Y``.  With the linear mapping ``phi_k(Y) = alpha_k * Y`` the mapped
    observation has scale ``alpha_k * sigma_hat``; see :meth:`mapped_scale`.
    """

    mu: tuple
    sigma: float
    sigma_hat: float = 0.0
    y: Optional[tuple] = None
    alpha: Optional[tuple] = None
    reward_family: Family = Family.GAUSSIAN
    aux_family: Family = Family.GAUSSIAN

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        object.__setattr__(self, "mu", mu)
        K = len(mu)
        if K < 2:
            raise ConfigError("a problem instance needs at least two arms")
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if self.sigma_hat < 0:
            raise ConfigError("sigma_hat must be non-negative")
        object.__setattr__(self, "reward_family", Family(self.reward_family))
        object.__setattr__(self, "aux_family", Family(self.aux_family))
        # Default: auxiliary data are draws from the reward distributions.
        y = mu if self.y is None else tuple(float(v) for v in self.y)
        alpha = (1.0,) * K if self.alpha is None else tuple(float(a) for a in self.alpha)
        if len(y) != K or len(alpha) != K:
            raise ConfigError("mu, y and alpha must have the same length")
        if any(v < 0 for v in y):
            raise ConfigError("auxiliary means y must be non-negative")
        if any(a < 0 for a in alpha):
            raise ConfigError("mapping coefficients alpha must be non-negative")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "alpha", alpha)
        if self.reward_family is Family.BERNOULLI and not all(0.0 <= m <= 1.0 for m in mu):
            raise ConfigError("Bernoulli rewards need mu in [0, 1]")
        if self.aux_family is Family.BERNOULLI and not all(0.0 <= v <= 1.0 for v in y):
            raise ConfigError("Bernoulli auxiliary observations need y in [0, 1]")

    @property
    def K(self) -> int:
        return len(self.mu)

    @property
    def best_arm(self) -> int:
        return smallest_argmax(self.mu)

    @property
    def mu_star(self) -> float:
        return self.mu[self.best_arm]

    @property
    def gaps(self) -> tuple:
        m = self.mu_star
        return tuple(m - v for v in self.mu)

    @property
    def min_gap(self) -> float:
        """Smallest gap over suboptimal arms (0 when several arms share the max)."""
        k_star = self.best_arm
        return min(g for k, g in enumerate(self.gaps) if k != k_star)

    @property
    def well_specified(self) -> bool:
        return all(
            math.isclose(a * v, m, rel_tol=1e-12, abs_tol=1e-12)
            for a, v, m in zip(self.alpha, self.y, self.mu)
            if a > 0
        )

    def mapped_scale(self) -> tuple:
        return tuple(a * self.sigma_hat for a in self.alpha)


class ArrivalMatrix:
    """K x T grid ``h[k, t-1]`` of auxiliary arrival counts."""

    def __init__(self, h, warnings: Optional[list] = None):
        arr = np.asarray(h)
        if arr.ndim != 2:
            raise DomainError("arrival matrix must be two-dimensional")
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise DomainError("arrival counts must be integers")
        arr = arr.astype(np.int64)
        if (arr < 0).any():
            raise DomainError("arrival counts must be non-negative")
        arr.setflags(write=False)
        self.h = arr
        self.warnings = list(warnings or [])

    @classmethod
    def zeros(cls, K: int, T: int) -> "ArrivalMatrix":
        return cls(np.zeros((K, T), dtype=np.int64))

    @property
    def K(self) -> int:
        return self.h.shape[0]

    @property
    def T(self) -> int:
        return self.h.shape[1]

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.h, axis=1)

    def cum(self, k: int, t: int) -> int:
        """Arrivals on arm ``k`` during epochs ``1..t`` (``cum(k, 0) == 0``)."""
        if t <= 0:
            return 0
        return int(self.h[k, :t].sum())

    def __eq__(self, other):
        return isinstance(other, ArrivalMatrix) and np.array_equal(self.h, other.h)

    def __repr__(self):
        return f"ArrivalMatrix(K={self.K}, T={self.T}, total={int(self.h.sum())})"


@dataclass
class PolicyState:
    """Per-arm counters and running sums.

    ``alpha`` is the mapping the policy *believes*; it only feeds
    ``mapped_aux_sum``.  Raw sums are always kept so the same state serves
    known-mapping and unknown-mapping estimators.
    """

    K: int
    alpha: Optional[Sequence[float]] = None
    n_pi: list = field(default_factory=list)
    reward_sum: list = field(default_factory=list)
    n_aux: list = field(default_factory=list)
    aux_sum: list = field(default_factory=list)
    mapped_aux_sum: list = field(default_factory=list)
    tau: list = field(default_factory=list)
    t: int = 0
    t_tilde: int = 0

    def __post_init__(self):
        K = self.K
        if self.alpha is not None:
            self.alpha = [float(a) for a in self.alpha]
            if len(self.alpha) != K:
                raise ConfigError("alpha length must equal K")
        self.n_pi = self.n_pi or [0] * K
        self.reward_sum = self.reward_sum or [0.0] * K
        self.n_aux = self.n_aux or [0] * K
        self.aux_sum = self.aux_sum or [0.0] * K
        self.mapped_aux_sum = self.mapped_aux_sum or [0.0] * K
        self.tau = self.tau or [0.0] * K

    def _check(self, arm: int):
        if not 0 <= arm < self.K:
            raise DomainError(f"arm {arm} out of range for K={self.K}")


def update_on_reward(state: PolicyState, arm: int, reward: float, clicked: bool = True) -> PolicyState:
    state._check(arm)
    state.t += 1
    if clicked:
        state.n_pi[arm] += 1
        state.reward_sum[arm] += reward
        state.t_tilde += 1
    return state


def update_on_aux(state: PolicyState, arm: int, observations: Sequence[float]) -> PolicyState:
    state._check(arm)
    a = state.alpha[arm] if state.alpha is not None else None
    for obs in observations:
        state.n_aux[arm] += 1
        state.aux_sum[arm] += obs
        if a is not None:
            state.mapped_aux_sum[arm] += a * obs
    return state


def advance_virtual_time(state: PolicyState, arm: int, h: int, rate: float) -> float:
    """tau <- (tau + 1) * exp(rate * h); ``rate = 0`` gives plain time."""
    state._check(arm)
    state.tau[arm] = (state.tau[arm] + 1.0) * math.exp(rate * h)
    return state.tau[arm]


def reward_stats(state: PolicyState, arm: int) -> tuple:
    n = state.n_pi[arm]
    mean = state.reward_sum[arm] / n if n > 0 else 0.0
    return mean, float(n)


def known_mapping_stats(state: PolicyState, arm: int, sigma: float, sigma_hat: float) -> tuple:
    """Precision-weighted mean and weighted count under a known mapping.

    ``sigma_hat`` is the scale of the *mapped* observations.  The weights are
    scaled by ``sigma**2`` so that with no auxiliary data the result is the
    plain reward average, bit for bit.
    """
    state._check(arm)
    n = state.n_pi[arm]
    m = state.n_aux[arm]
    if m > 0:
        if not sigma_hat > 0:
            raise DomainError("sigma_hat must be positive once auxiliary data arrived")
        ratio = (sigma * sigma) / (sigma_hat * sigma_hat)
        count = n + ratio * m
        num = state.reward_sum[arm] + ratio * state.mapped_aux_sum[arm]
    else:
        count = float(n)
        num = state.reward_sum[arm]
    if count <= 0:
        return 0.0, 0.0
    return num / count, count


def optimistic_stats(
    state: PolicyState, arm: int, sigma: float, sigma_hat: float, alpha_bar: float, floor: float = 1.0
) -> tuple:
    """Optimistic mean: rewards pooled with ``alpha_bar``-scaled raw auxiliary data.

    ``sigma_hat`` is the scale of the *raw* observations.  ``alpha_bar = inf``
    switches the auxiliary term off entirely.  The mean divides by
    ``max(floor, count)``; ``floor=0`` gives the plain weighted average
    (0 when nothing was observed).
    """
    state._check(arm)
    if not alpha_bar > 0:
        raise DomainError("alpha_bar must be positive")
    n = state.n_pi[arm]
    m = state.n_aux[arm]
    if m > 0 and math.isfinite(alpha_bar):
        if not sigma_hat > 0:
            raise DomainError("sigma_hat must be positive once auxiliary data arrived")
        s2 = sigma * sigma
        sh2 = sigma_hat * sigma_hat
        # n_aux weight and the weight on the raw sum (weight * alpha_bar).
        w_count = s2 / (alpha_bar * alpha_bar * sh2)
        w_sum = s2 / (alpha_bar * sh2)
        count = n + w_count * m
        num = state.reward_sum[arm] + w_sum * state.aux_sum[arm]
    else:
        count = float(n)
        num = state.reward_sum[arm]
    denom = max(floor, count)
    if denom <= 0:
        return 0.0, count
    return num / denom, count
