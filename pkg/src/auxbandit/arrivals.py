"""Generators, loaders and writers for auxiliary arrival matrices."""
from __future__ import annotations

import csv
import enum
import io
import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import ArrivalMatrix, ConfigError, DomainError
from .rng import stream

log = logging.getLogger(__name__)


class ArrivalParseError(ValueError):
    def __init__(self, row: int, col: int, msg: str):
        super().__init__(f"row {row}, column {col}: {msg}")
        self.row = row
        self.col = col


class ArrivalKind(str, enum.Enum):
    STATIONARY = "stationary"
    DIMINISHING_BERNOULLI = "diminishing-bernoulli"
    DIMINISHING_DETERMINISTIC = "diminishing-deterministic"
    GAMMA = "gamma"
    FROM_FILE = "file"
    NONE = "none"


@dataclass
class ArrivalSpec:
    kind: ArrivalKind = ArrivalKind.NONE
    lam: Optional[float] = None
    kappa: Optional[float] = None
    kappa_aux: Optional[float] = None
    gamma: Optional[float] = None
    delta: Optional[float] = None
    sigma_hat: Optional[float] = None
    path: Optional[str] = None
    # Restrict arrivals to these arms (None = all arms).
    arms: Optional[tuple] = None

    def __post_init__(self):
        self.kind = ArrivalKind(self.kind)
        if self.arms is not None:
            self.arms = tuple(int(a) for a in self.arms)

    def errors(self) -> list:
        errs = []
        kind = self.kind

        def need(name, ok, why):
            value = getattr(self, name)
            if value is None:
                errs.append(f"arrivals.{name} is required for kind '{kind.value}'")
            elif not ok(value):
                errs.append(f"arrivals.{name}={value!r} out of range: {why}")

        if kind in (ArrivalKind.STATIONARY, ArrivalKind.GAMMA):
            need("lam", lambda v: 0.0 <= v <= 1.0, "must lie in [0, 1]")
        if kind is ArrivalKind.GAMMA:
            need("gamma", lambda v: 0.0 <= v < 1.0, "must lie in [0, 1); use a diminishing kind for gamma -> 1")
        if kind is ArrivalKind.DIMINISHING_BERNOULLI:
            need("kappa_aux", lambda v: v > 0, "must be positive")
        if kind is ArrivalKind.DIMINISHING_DETERMINISTIC:
            need("kappa", lambda v: v > 0, "must be positive")
            need("delta", lambda v: v > 0, "must be positive")
            need("sigma_hat", lambda v: v > 0, "must be positive")
        if kind is ArrivalKind.FROM_FILE and not self.path:
            errs.append("arrivals.path is required for kind 'file'")
        return errs

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if v is not None}
        d["kind"] = self.kind.value
        if self.arms is not None:
            d["arms"] = list(self.arms)
        return d

    def generate(self, K: int, T: int, seed: int) -> ArrivalMatrix:
        errs = self.errors()
        if errs:
            raise ConfigError("; ".join(errs))
        kind = self.kind
        if kind is ArrivalKind.NONE:
            H = ArrivalMatrix.zeros(K, T)
        elif kind is ArrivalKind.STATIONARY:
            H = gen_stationary(K, T, self.lam, seed)
        elif kind is ArrivalKind.GAMMA:
            H = gen_gamma_family(K, T, self.lam, self.gamma, seed)
        elif kind is ArrivalKind.DIMINISHING_BERNOULLI:
            H = gen_diminishing(K, T, self, seed)
        elif kind is ArrivalKind.DIMINISHING_DETERMINISTIC:
            H = gen_diminishing(K, T, self, seed)
        else:
            H = load_matrix(self.path)
            if H.K != K or H.T != T:
                raise ConfigError(f"matrix file is {H.K}x{H.T}, expected {K}x{T}")
        if self.arms is not None:
            mask = np.zeros((K, 1), dtype=np.int64)
            for a in self.arms:
                if not 0 <= a < K:
                    raise ConfigError(f"arrivals.arms contains {a}, outside 0..{K - 1}")
                mask[a] = 1
            H = ArrivalMatrix(H.h * mask, H.warnings)
        return H


def _bernoulli_grid(K: int, T: int, p: np.ndarray, seed: int) -> np.ndarray:
    # One uniform per (k, t) from the arrivals stream; kinds with equal p agree.
    u = stream(seed, "arrivals").random((K, T))
    return (u < p).astype(np.int64)


def gen_stationary(K: int, T: int, lam: float, seed: int) -> ArrivalMatrix:
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda={lam} outside [0, 1]")
    return ArrivalMatrix(_bernoulli_grid(K, T, np.float64(lam), seed))


def diminishing_scale(kappa: float, delta: float, sigma_hat: float) -> float:
    return sigma_hat * sigma_hat * kappa / (2.0 * delta * delta)


def gen_diminishing(K: int, T: int, spec: ArrivalSpec, seed: int = 0) -> ArrivalMatrix:
    """Diminishing arrivals, either deterministic (floor of c*log t) or Bernoulli(min(1, kappa_aux/t))."""
    t = np.arange(1, T + 1, dtype=np.float64)
    if spec.kind is ArrivalKind.DIMINISHING_DETERMINISTIC:
        if spec.kappa is None or not spec.kappa > 0:
            raise DomainError("kappa must be positive")
        c_k = diminishing_scale(spec.kappa, spec.delta, spec.sigma_hat)
        cum = np.floor(c_k * np.log(t)).astype(np.int64)
        row = np.diff(cum, prepend=0)
        return ArrivalMatrix(np.tile(row, (K, 1)))
    if spec.kind is ArrivalKind.DIMINISHING_BERNOULLI:
        if spec.kappa_aux is None or not spec.kappa_aux > 0:
            raise DomainError("kappa_aux must be positive")
        raw = spec.kappa_aux / t
        warnings = []
        if raw[0] > 1.0:
            n_clip = int((raw > 1.0).sum())
            warnings.append(f"kappa_aux/t clipped to 1 in {n_clip} periods; expected arrivals distorted")
            log.info(warnings[-1])
        p = np.minimum(1.0, raw)
        return ArrivalMatrix(_bernoulli_grid(K, T, p, seed), warnings)
    raise DomainError(f"kind {spec.kind.value} is not a diminishing process")


def gamma_increments(T: int, lam: float, gamma: float) -> np.ndarray:
    """Expected arrivals per period; cumulative mean is lam * T**gamma * t**(1-gamma)."""
    if gamma == 0.0:
        return np.full(T, float(lam))
    e = 1.0 - gamma
    t = np.arange(1, T + 1, dtype=np.float64)
    return lam * T * (t**e - (t - 1.0) ** e) / float(T) ** e


def gen_gamma_family(K: int, T: int, lam: float, gamma: float, seed: int) -> ArrivalMatrix:
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda={lam} outside [0, 1]")
    if not 0.0 <= gamma < 1.0:
        raise DomainError("gamma must lie in [0, 1); the gamma -> 1 limit is the diminishing process")
    raw = gamma_increments(T, lam, gamma)
    warnings = []
    if (raw > 1.0).any():
        warnings.append(
            f"per-period mean clipped to 1 in {int((raw > 1.0).sum())} periods; expected arrivals distorted"
        )
        log.info(warnings[-1])
    p = np.clip(raw, 0.0, 1.0)
    return ArrivalMatrix(_bernoulli_grid(K, T, p, seed), warnings)


def parse_matrix(text: str) -> ArrivalMatrix:
    rows = []
    width = None
    for i, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row:
            continue
        vals = []
        for j, cell in enumerate(row, start=1):
            cell = cell.strip()
            try:
                v = int(cell)
            except ValueError:
                raise ArrivalParseError(i, j, f"{cell!r} is not an integer") from None
            if v < 0:
                raise ArrivalParseError(i, j, f"negative count {v}")
            vals.append(v)
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ArrivalParseError(i, len(vals), f"ragged row: {len(vals)} cells, expected {width}")
        rows.append(vals)
    if not rows:
        raise ArrivalParseError(1, 1, "empty matrix")
    return ArrivalMatrix(np.array(rows, dtype=np.int64))


def load_matrix(path) -> ArrivalMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_matrix(fh.read())


def format_matrix(matrix: ArrivalMatrix) -> str:
    return "".join(",".join(str(int(v)) for v in row) + "\n" for row in matrix.h)


def save_matrix(matrix: ArrivalMatrix, path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(format_matrix(matrix))
