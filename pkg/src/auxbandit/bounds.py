"""Closed-form regret bound evaluators and the log-sum-exp rate functional.

All evaluators are pure functions of the arrival matrix and the instance
constants.  Lower bounds can be negative for tiny horizons (they are vacuous
there); they are returned unclamped and :func:`is_vacuous` reports it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ArrivalMatrix, DomainError


def _row(h_row) -> np.ndarray:
    h = np.asarray(h_row)
    if h.ndim != 1 or h.size == 0:
        raise DomainError("arrival row must be a non-empty 1-D sequence")
    if (h < 0).any():
        raise DomainError("arrival counts must be non-negative")
    return h.astype(np.int64)


def _lse_cum(cum: np.ndarray, c: float) -> float:
    """log sum_t exp(-c * cum[t]) for a nondecreasing ``cum``."""
    T = cum.size
    if c == 0.0 or cum[-1] == 0:
        return math.log(T)
    # The first term is the largest; shift by it.
    rel = cum[1:] - cum[0]
    tail = math.fsum(np.exp(-c * rel.astype(np.float64)).tolist())
    return -c * float(cum[0]) + math.log1p(tail)


def logsumexp_rate(h_row, c: float) -> float:
    """log sum_{t=1..T} exp(-c * sum_{s<=t} h_s), stable for large counts."""
    if not c >= 0:
        raise DomainError("rate constant c must be non-negative")
    h = _row(h_row)
    return _lse_cum(np.cumsum(h), float(c))


def is_vacuous(value: float) -> bool:
    return value < 0


def _matrix(H) -> np.ndarray:
    if isinstance(H, ArrivalMatrix):
        return H.h
    h = np.asarray(H)
    if h.ndim == 1:
        h = h[None, :]
    return ArrivalMatrix(h).h


def minimax_lower_bound(H, Delta: float, sigma: float, sigma_hat: float) -> float:
    """sigma^2 (K-1)/(4 K Delta) * sum_k log( Delta^2/(sigma^2 K) * sum_t exp(-2 Delta^2/sigma_hat^2 * cum) )."""
    h = _matrix(H)
    K = h.shape[0]
    if not (Delta > 0 and sigma > 0 and sigma_hat > 0):
        raise DomainError("Delta, sigma and sigma_hat must be positive")
    rate = 2.0 * Delta * Delta / (sigma_hat * sigma_hat)
    lead = math.log(Delta * Delta / (sigma * sigma * K))
    total = math.fsum(lead + logsumexp_rate(h[k], rate) for k in range(K))
    return sigma * sigma * (K - 1) / (4.0 * K * Delta) * total


def tail_series(T: int, c: float) -> float:
    t = np.arange(1, T + 1, dtype=np.float64)
    return math.fsum((2.0 / t ** (c / 2.0)).tolist())


def aucb1_upper_bound(H, gaps: Sequence[float], sigma: float, sigma_hat: float, c: float) -> float:
    """Regret bound for aUCB1 on a fixed arrival matrix.

    Per suboptimal arm ``k`` the expected pull count is at most
    ``4 c sigma^2/Delta_k^2 * log sum_t exp(-Delta_k^2/(4 c sigma_hat^2) * cum_{t-1}) + sum_t 2/t^(c/2)``;
    the bound is the Delta_k-weighted sum.  ``sigma_hat`` is the scale of the
    mapped auxiliary observations.
    """
    if not c > 2:
        raise DomainError("the aUCB1 bound needs c > 2")
    if not (sigma > 0 and sigma_hat > 0):
        raise DomainError("sigma and sigma_hat must be positive")
    h = _matrix(H)
    K, T = h.shape
    if len(gaps) != K:
        raise DomainError("need one gap per arm")
    tail = tail_series(T, c)
    total = []
    for k in range(K):
        d = float(gaps[k])
        if d <= 0:
            continue
        # One-period lag: cum_0 = 0, ..., cum_{T-1}.
        lagged = np.concatenate(([0], np.cumsum(h[k])[:-1]))
        lse = _lse_cum(lagged, d * d / (4.0 * c * sigma_hat * sigma_hat))
        total.append(d * (4.0 * c * sigma * sigma / (d * d) * lse + tail))
    return math.fsum(total)


def _check_cor(gaps, Delta, sigma, sigma_hat, c, T):
    if not (sigma > 0 and sigma_hat > 0 and c > 0):
        raise DomainError("sigma, sigma_hat and c must be positive")
    if T < 1:
        raise DomainError("T must be at least 1")
    pos = [g for g in gaps if g > 0]
    if not pos:
        raise DomainError("need at least one suboptimal arm")
    if Delta is None:
        Delta = min(pos)
    if not 0 < Delta <= min(pos) * (1 + 1e-12):
        raise DomainError("Delta must lie in (0, min gap]")
    return pos, Delta


def stationary_kernel(T: int, lam: float, Delta: float, sigma_hat: float, c: float) -> float:
    if lam == 0:
        return math.log(T + 1)
    return math.log(min(T + 1.0, (18 * c * sigma_hat**2 + 10 * Delta**2) / (Delta**2 * lam)))


def _power_term(T: int, a: float) -> float:
    # (T^(1-a) - 1)/(1-a), continuous at a = 1 where it equals log T.
    e = 1.0 - a
    if abs(e) < 1e-12:
        return math.log(T)
    return math.expm1(e * math.log(T)) / e


def diminishing_kernel(T: int, kappa: float, Delta: float, sigma_hat: float, c: float) -> float:
    a = kappa / (72.0 * c)
    b = kappa * sigma_hat**2 / (20.0 * Delta**2)
    return math.log(2.0 + _power_term(T, a) + _power_term(T, b))


def corollary_bound(
    kind: str,
    gaps: Sequence[float],
    sigma: float,
    sigma_hat: float,
    c: float,
    T: int,
    lam: Optional[float] = None,
    kappa: Optional[float] = None,
    Delta: Optional[float] = None,
    C: float = 0.0,
) -> float:
    """Expected-regret envelopes for aTS under stationary or diminishing arrivals.

    ``C`` is an absolute constant left to the caller (default 0, so the
    value is the rate-carrying part only).
    """
    pos, Delta = _check_cor(gaps, Delta, sigma, sigma_hat, c, T)
    if kind in ("stationary", "StationaryTS"):
        if lam is None or not 0 <= lam <= 1:
            raise DomainError("lambda must lie in [0, 1]")
        kernel = stationary_kernel(T, lam, Delta, sigma_hat, c)
    elif kind in ("diminishing", "DiminishingTS"):
        if kappa is None or not kappa > 0:
            raise DomainError("kappa must be positive")
        kernel = diminishing_kernel(T, kappa, Delta, sigma_hat, c)
    else:
        raise DomainError(f"unknown corollary kind {kind!r}")
    lead = 18.0 * c * sigma * sigma / (Delta * Delta)
    return math.fsum(d * (lead * kernel + C * (1.0 + 1.0 / d**4)) for d in pos)


def unknown_mapping_lower_bound(
    h_row,
    K: int,
    gap: float,
    delta: float,
    C5: float = 1.0,
    C6: float = 1.0,
    C7: float = 1.0,
) -> float:
    """Lower bound on the expected pull count of one arm when mappings are unknown.

    ``delta = mu* - alpha_bar * y_k``.  Negative ``delta`` (optimistic
    auxiliary mean above mu*) gives the log-T case; positive ``delta`` the
    log-sum-exp case.  ``C5..C7`` are positive constants left to the caller.
    """
    h = _row(h_row)
    T = h.size
    if T < 2:
        raise DomainError("T must be at least 2")
    if not gap > 0:
        raise DomainError("gap must be positive")
    if delta == 0:
        raise DomainError("alpha_bar * y_k == mu* lies outside both cases")
    if not (C5 > 0 and C6 > 0 and C7 > 0):
        raise DomainError("constants must be positive")
    lead = C5 / (gap * gap)
    loglogT = math.log(math.log(T))
    if delta < 0:
        m = min(4.0 * gap**4, (gap - delta) ** 2 * delta**2)
        return lead * (math.log(C6 * m / K) + math.log(T) - loglogT)
    coef = (gap + delta) ** 2 * delta**2
    return lead * (math.log(C6 * coef / K) - loglogT + logsumexp_rate(h, C7 * delta * delta))


def aie_index(h_row, Delta: float, sigma_hat: float, alpha: float, c_tilde: float = 0.2) -> float:
    """Auxiliary information effectiveness: log T minus the rate functional."""
    h = _row(h_row)
    if not (sigma_hat > 0 and alpha > 0):
        raise DomainError("sigma_hat and alpha must be positive")
    rate = c_tilde * (Delta / (sigma_hat * alpha)) ** 2
    return math.log(h.size) - logsumexp_rate(h, rate)


@dataclass
class BoundInputs:
    """Bundle of everything the evaluators read; used by the ``bound`` command."""

    H: ArrivalMatrix
    sigma: float = 1.0
    sigma_hat: float = 1.0
    gaps: Optional[Sequence[float]] = None
    Delta: Optional[float] = None
    c: float = 2.0
    delta: Optional[Sequence[float]] = None

    @property
    def min_gap(self) -> float:
        if self.Delta is not None:
            return self.Delta
        if not self.gaps:
            raise DomainError("need Delta or per-arm gaps")
        return min(g for g in self.gaps if g > 0)
