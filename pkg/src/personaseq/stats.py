"""Welch's t-test, Bonferroni thresholds, sample summaries and Gaussian KDE."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from personaseq.errors import ContractViolation

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000

_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # renamed in numpy 2.0


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def _betainc(a: float, b: float, x: float, y: float) -> float:
    # y = 1 - x, supplied separately so callers can keep it exact near x = 1
    if x == 0.0 or y == 0.0:
        return 0.0 if x == 0.0 else 1.0
    lx = math.log1p(-y) if y < 0.5 else math.log(x)
    ly = math.log1p(-x) if x < 0.5 else math.log(y)
    front = math.exp(math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * lx + b * ly)
    # the fraction converges fastest on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def betainc(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    return _betainc(a, b, x, 1.0 - x)


def t_two_sided_p(t: float, df: float) -> float:
    """``P(|T| >= |t|)`` for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    t2 = t * t
    return min(1.0, _betainc(df / 2.0, 0.5, df / (df + t2), t2 / (df + t2)))


@dataclass(frozen=True)
class SampleSummary:
    n: int
    mean: float
    variance: float  # unbiased

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def summarize(samples) -> SampleSummary:
    x = np.asarray(samples, dtype=float)
    if x.size < 1:
        raise ContractViolation("need at least one sample")
    var = float(x.var(ddof=1)) if x.size > 1 else 0.0
    return SampleSummary(int(x.size), float(x.mean()), var)


@dataclass(frozen=True)
class StatResult:
    t: float
    df: float
    p: float
    significant: bool
    threshold: float
    label: tuple = ()
    degenerate: bool = False


def welch_t_test(a, b, threshold: float = 0.05, label: tuple = ()) -> StatResult:
    """Two-sided Welch's t-test of ``mean(a) == mean(b)``."""
    sa, sb = summarize(a), summarize(b)
    if sa.n < 2 or sb.n < 2:
        raise ContractViolation("each sample needs at least two values")
    va, vb = sa.variance / sa.n, sb.variance / sb.n
    if va == 0.0 and vb == 0.0:
        df = float(sa.n + sb.n - 2)
        if sa.mean == sb.mean:
            return StatResult(0.0, df, 1.0, 1.0 <= threshold, threshold, label, degenerate=True)
        t = math.copysign(math.inf, sa.mean - sb.mean)
        return StatResult(t, df, 0.0, True, threshold, label, degenerate=True)
    t = (sa.mean - sb.mean) / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va * va / (sa.n - 1) + vb * vb / (sb.n - 1))
    p = t_two_sided_p(t, df)
    return StatResult(t, df, p, p <= threshold, threshold, label)


def bonferroni_threshold(alpha: float, m: int) -> float:
    if not 0.0 < alpha < 1.0:
        raise ContractViolation("alpha must lie in (0, 1)")
    if m < 1:
        raise ContractViolation("need at least one comparison")
    return alpha / m


@dataclass(frozen=True)
class KDECurve:
    x: np.ndarray
    density: np.ndarray
    bandwidth: float
    degenerate: bool = False

    def integral(self) -> float:
        return float(_trapezoid(self.density, self.x))


def silverman_bandwidth(x: np.ndarray) -> float:
    sd = float(x.std(ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) or sd
    return 0.9 * spread * x.size ** -0.2


def kde(samples, bandwidth: float | None = None, points: int = 256) -> KDECurve:
    """Gaussian KDE on ``points`` evenly spaced values over [min - 3h, max + 3h]."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ContractViolation("kde needs at least two samples")
    if not np.all(np.isfinite(x)):
        raise ContractViolation("kde samples must be finite")
    degenerate = False
    if bandwidth is not None:
        h = bandwidth
    else:
        h = silverman_bandwidth(x) if np.ptp(x) > 0 else 0.0
    if not h > 0:
        # all samples equal: narrow fixed kernel
        h = 0.01 * max(1.0, float(np.abs(x).max()))
        degenerate = True
    grid = np.linspace(x.min() - 3 * h, x.max() + 3 * h, points)
    density = np.zeros(points)
    for chunk in np.array_split(x, max(1, x.size // 4096)):
        z = (grid[:, None] - chunk[None, :]) / h
        density += np.exp(-0.5 * z * z).sum(axis=1)
    density /= x.size * h * math.sqrt(2 * math.pi)
    return KDECurve(grid, density, float(h), degenerate)
