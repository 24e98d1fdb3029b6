"""Pearson correlation, paired t-test, standard error and BCa bootstrap."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats as sps

from .validation import ValidationError

P_FLOOR = 1e-300


class ZeroVarianceError(ValidationError):
    """A correlation input has zero variance."""


def _cap(p: float) -> float:
    return max(float(p), P_FLOOR)


class CorrelationResult(NamedTuple):
    r: float
    pvalue: float

    @property
    def p_capped(self) -> bool:
        return self.pvalue <= P_FLOOR


class TTestResult(NamedTuple):
    statistic: float
    pvalue: float

    @property
    def p_capped(self) -> bool:
        return self.pvalue <= P_FLOOR


def pearson(xs, ys) -> CorrelationResult:
    """Sample Pearson r with a two-sided p-value from the t transform."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("pearson needs two 1-D sequences of equal length")
    n = x.size
    if n < 3:
        raise ValidationError(f"pearson needs at least 3 pairs, got {n}")
    dx = x - math.fsum(x) / n
    dy = y - math.fsum(y) / n
    sxx = math.fsum(dx * dx)
    syy = math.fsum(dy * dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVarianceError("pearson is undefined when an input has zero variance")
    r = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    r = min(1.0, max(-1.0, r))
    if abs(r) == 1.0:
        return CorrelationResult(r, P_FLOOR)
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return CorrelationResult(r, _cap(2.0 * sps.t.sf(abs(t), n - 2)))


def paired_t(xs, ys) -> TTestResult:
    """Student's t on paired differences ``xs - ys``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("paired_t needs two 1-D sequences of equal length")
    n = x.size
    if n < 2:
        raise ValidationError(f"paired_t needs at least 2 pairs, got {n}")
    d = x - y
    mean = math.fsum(d) / n
    ss = math.fsum((d - mean) ** 2)
    if ss == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0)
        return TTestResult(math.copysign(math.inf, mean), P_FLOOR)
    sd = math.sqrt(ss / (n - 1))
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t, _cap(2.0 * sps.t.sf(abs(t), n - 1)))


def standard_error(values) -> float:
    """Standard error of the mean (ddof=1); 0.0 for fewer than two values."""
    v = [float(x) for x in values]
    n = len(v)
    if n < 2:
        return 0.0
    mean = math.fsum(v) / n
    ss = math.fsum((x - mean) ** 2 for x in v)
    return math.sqrt(ss / (n - 1) / n)


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 10_000
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if int(self.replicates) != self.replicates or self.replicates < 100:
            raise ValidationError(f"replicates must be an integer >= 100, got {self.replicates}")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must be in (0, 1), got {self.alpha}")


def _apply(statistic, data: np.ndarray, vectorized: bool) -> np.ndarray:
    if vectorized:
        return np.asarray(statistic(data, axis=-1), dtype=float)
    return np.array([statistic(row) for row in data], dtype=float)


def resample_indices(n: int, cfg: BootstrapConfig) -> np.ndarray:
    """``(replicates, n)`` index matrix; row ``b`` depends only on (seed, b, n)."""
    rng = np.random.default_rng(cfg.seed)
    return rng.integers(0, n, size=(cfg.replicates, n))


def bootstrap_replicates(samples, statistic, cfg: BootstrapConfig, *, vectorized=False):
    """Statistic evaluated on each seeded resample with replacement."""
    data = np.asarray(samples, dtype=float)
    return _apply(statistic, data[resample_indices(data.size, cfg)], vectorized)


def jackknife_acceleration(samples, statistic, *, vectorized=False) -> float:
    """Acceleration from the skewness of leave-one-out statistics."""
    data = np.asarray(samples, dtype=float)
    n = data.size
    keep = ~np.eye(n, dtype=bool)
    loo = _apply(statistic, np.broadcast_to(data, (n, n))[keep].reshape(n, n - 1), vectorized)
    dev = loo.mean() - loo
    num = math.fsum(dev**3)
    den = 6.0 * math.fsum(dev**2) ** 1.5
    return 0.0 if den == 0.0 else num / den


def nearest_rank(sorted_values: np.ndarray, q: float) -> float:
    """Nearest-rank quantile of an ascending array."""
    b = sorted_values.size
    k = min(b - 1, max(0, math.ceil(q * b) - 1))
    return float(sorted_values[k])


class BCaInterval(NamedTuple):
    low: float
    high: float


def bca_bootstrap(
    samples,
    statistic,
    cfg: BootstrapConfig | None = None,
    *,
    vectorized=False,
    replicates=None,
) -> BCaInterval:
    """Bias-corrected and accelerated bootstrap interval for ``statistic``.

    ``replicates`` may be passed to reuse a precomputed replicate set (it
    must come from ``bootstrap_replicates`` with the same inputs).
    """
    cfg = cfg or BootstrapConfig()
    data = np.asarray(samples, dtype=float)
    if data.size == 0:
        raise ValidationError("bca_bootstrap needs at least one sample")
    if data.size < 10:
        warnings.warn(f"BCa interval from only {data.size} samples is unreliable", stacklevel=2)
    observed = float(_apply(statistic, data[None, :], vectorized)[0])
    if replicates is None:
        replicates = bootstrap_replicates(data, statistic, cfg, vectorized=vectorized)
    reps = np.sort(np.asarray(replicates, dtype=float))
    if reps[0] == reps[-1]:
        c = float(reps[0])
        return BCaInterval(c, c)

    b = reps.size
    below = np.count_nonzero(reps < observed)
    # keep the bias term finite when the observed value sits outside the replicates
    frac = min(max(below, 0.5), b - 0.5) / b
    z0 = float(sps.norm.ppf(frac))
    a = jackknife_acceleration(data, statistic, vectorized=vectorized)

    def adjusted(q: float) -> float:
        zq = float(sps.norm.ppf(q))
        return float(sps.norm.cdf(z0 + (z0 + zq) / (1.0 - a * (z0 + zq))))

    low = nearest_rank(reps, adjusted(cfg.alpha / 2))
    high = nearest_rank(reps, adjusted(1 - cfg.alpha / 2))
    if low > high:
        low, high = high, low
    return BCaInterval(low, high)


def percentile_interval(replicates, alpha=0.05) -> BCaInterval:
    """Plain percentile interval from a replicate set (nearest rank)."""
    reps = np.sort(np.asarray(replicates, dtype=float))
    return BCaInterval(nearest_rank(reps, alpha / 2), nearest_rank(reps, 1 - alpha / 2))
