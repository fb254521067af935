"""Descriptive statistics and two-sample t tests."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.special import betainc


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class TwoSampleResult:
    mean_a: float
    mean_b: float
    sd_a: float
    sd_b: float
    t: float
    df: float
    p: float


@dataclass(frozen=True)
class GroupComparison:
    control_mean: float
    control_sd: float
    patient_mean: float
    patient_sd: float
    t: float
    df: float
    p: float
    n_control: int
    n_patient: int


def mean(values: Sequence[float]) -> float:
    if len(values) == 0:
        raise InsufficientDataError("mean of an empty sample")
    # shifting by the first value keeps constant samples exact
    x0 = values[0]
    return x0 + math.fsum(x - x0 for x in values) / len(values)


def mean_sd(values: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and sample standard deviation (n - 1 denominator)."""
    m = mean(values)
    if len(values) < 2:
        raise InsufficientDataError("standard deviation needs at least two values")
    var = math.fsum((x - m) ** 2 for x in values) / (len(values) - 1)
    return m, math.sqrt(var)


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom.

    Uses the regularized incomplete beta identity
    P(|T| >= t) = I_{df/(df+t^2)}(df/2, 1/2), accurate to about 1e-10.
    """
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return float(min(1.0, max(0.0, betainc(df / 2.0, 0.5, x))))


def t_cdf(t: float, df: float) -> float:
    half_tail = 0.5 * t_sf_two_sided(t, df)
    return 1.0 - half_tail if t > 0 else half_tail


def _check(a, b):
    if len(a) < 2 or len(b) < 2:
        raise InsufficientDataError(f"each sample needs >= 2 values (got {len(a)} and {len(b)})")


def _finish(ma, mb, sa, sb, se2, df) -> TwoSampleResult:
    diff = ma - mb
    if se2 == 0.0:
        if diff == 0.0:
            # identical constant samples: no evidence of a difference
            return TwoSampleResult(ma, mb, sa, sb, 0.0, df, 1.0)
        raise InsufficientDataError(
            "both samples have zero variance but different means; t is infinite"
        )
    t = diff / math.sqrt(se2)
    return TwoSampleResult(ma, mb, sa, sb, t, df, t_sf_two_sided(t, df))


def welch_t(a: Sequence[float], b: Sequence[float]) -> TwoSampleResult:
    """Unequal-variance two-sample t test with Welch-Satterthwaite df.

    When both samples are constant the df falls back to n_a + n_b - 2.
    """
    _check(a, b)
    (ma, sa), (mb, sb) = mean_sd(a), mean_sd(b)
    va, vb = sa * sa / len(a), sb * sb / len(b)
    se2 = va + vb
    if se2 == 0.0:
        df = float(len(a) + len(b) - 2)
    else:
        df = se2 * se2 / (va * va / (len(a) - 1) + vb * vb / (len(b) - 1))
    return _finish(ma, mb, sa, sb, se2, df)


def student_t(a: Sequence[float], b: Sequence[float]) -> TwoSampleResult:
    """Pooled-variance two-sample t test."""
    _check(a, b)
    (ma, sa), (mb, sb) = mean_sd(a), mean_sd(b)
    na, nb = len(a), len(b)
    df = float(na + nb - 2)
    pooled = ((na - 1) * sa * sa + (nb - 1) * sb * sb) / df
    return _finish(ma, mb, sa, sb, pooled * (1.0 / na + 1.0 / nb), df)


def compare_groups(
    control: Sequence[float], patient: Sequence[float], equal_var: bool = False
) -> GroupComparison:
    test = student_t if equal_var else welch_t
    r = test(control, patient)
    return GroupComparison(r.mean_a, r.sd_a, r.mean_b, r.sd_b, r.t, r.df, r.p, len(control), len(patient))
