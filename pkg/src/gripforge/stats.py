"""Inferential statistics: two-group t comparison and balanced 2x2 ANOVA.

The t comparison is the pooled-variance two-sample form,

    t = (mean_a - mean_b) / sqrt(s_p^2 (1/n1 + 1/n2)),   df = n1 + n2 - 2,

which matches the reported df = 18 for two groups of ten sessions.  A paired
variant is exposed separately for completeness.  The ANOVA accepts only
balanced 2x2 designs and computes definitional sums of squares; rejecting
unbalanced input avoids silently wrong SS-type choices.

p-values come from the regularized incomplete beta function, evaluated by
the standard continued-fraction expansion (absolute error well below 1e-8).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_BETA_EPS = 1e-16
_BETA_ITMAX = 400
_TINY = 1e-300


class DegenerateVarianceError(ValueError):
    """Zero error variance: the test statistic is undefined."""


class UnbalancedDesignError(ValueError):
    """ANOVA cells have unequal sizes; only balanced designs are supported."""


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, by modified Lentz."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_ITMAX + 1):
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
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if x < 0 or x > 1:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    """CDF of Student's t distribution with ``df`` degrees of freedom."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if t == 0.0:
        return 0.5
    tail = 0.5 * betainc_reg(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def f_cdf(f: float, df1: float, df2: float) -> float:
    """CDF of the F distribution with (df1, df2) degrees of freedom."""
    if df1 < 1 or df2 < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got ({df1}, {df2})")
    if f <= 0.0:
        return 0.0
    return betainc_reg(df1 / 2.0, df2 / 2.0, df1 * f / (df1 * f + df2))


def _t_two_tailed_p(t: float, df: float) -> float:
    # I_x(df/2, 1/2) at x = df/(df+t^2) is exactly the two-tailed p.
    if t == 0.0:
        return 1.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def _f_sf(f: float, df1: float, df2: float) -> float:
    if f <= 0.0:
        return 1.0
    return betainc_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


def p_label(p: float) -> str:
    """The conventional report form: 'p<.001' below the millesimal."""
    return "p<.001" if p < 0.001 else f"p={p:.3f}"


@dataclass(frozen=True)
class TwoGroupResult:
    t: float
    df: int
    p: float
    mean_a: float
    mean_b: float
    n_a: int
    n_b: int


def two_group_t(a, b) -> TwoGroupResult:
    """Pooled-variance two-sample t test, two-tailed.

    Raises:
        ValueError: fewer than two observations in a group.
        DegenerateVarianceError: zero pooled variance with unequal means.
    """
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    n1, n2 = xa.size, xb.size
    if n1 < 2 or n2 < 2:
        raise ValueError(f"need at least 2 observations per group, got {n1} and {n2}")
    m1, m2 = float(xa.mean()), float(xb.mean())
    df = n1 + n2 - 2
    pooled_var = (float(((xa - m1) ** 2).sum()) + float(((xb - m2) ** 2).sum())) / df
    if pooled_var == 0.0:
        if m1 == m2:
            return TwoGroupResult(t=0.0, df=df, p=1.0, mean_a=m1, mean_b=m2, n_a=n1, n_b=n2)
        raise DegenerateVarianceError("zero pooled variance with unequal group means")
    t = (m1 - m2) / math.sqrt(pooled_var * (1.0 / n1 + 1.0 / n2))
    return TwoGroupResult(
        t=t, df=df, p=_t_two_tailed_p(t, df), mean_a=m1, mean_b=m2, n_a=n1, n_b=n2
    )


def paired_t(a, b) -> TwoGroupResult:
    """Paired-samples t test on element-wise differences, two-tailed."""
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    if xa.size != xb.size:
        raise ValueError(f"paired groups must have equal size, got {xa.size} and {xb.size}")
    if xa.size < 2:
        raise ValueError("need at least 2 pairs")
    d = xa - xb
    n = d.size
    df = n - 1
    md = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if md == 0.0:
            return TwoGroupResult(t=0.0, df=df, p=1.0, mean_a=float(xa.mean()),
                                  mean_b=float(xb.mean()), n_a=n, n_b=n)
        raise DegenerateVarianceError("zero difference variance with nonzero mean difference")
    t = md / (sd / math.sqrt(n))
    return TwoGroupResult(
        t=t, df=df, p=_t_two_tailed_p(t, df),
        mean_a=float(xa.mean()), mean_b=float(xb.mean()), n_a=n, n_b=n,
    )


@dataclass(frozen=True)
class Anova2x2Result:
    n_per_cell: int
    cell_means: tuple[tuple[float, float], tuple[float, float]]
    ss_a: float
    ss_b: float
    ss_ab: float
    ss_error: float
    ss_total: float
    df_a: int
    df_b: int
    df_ab: int
    df_error: int
    f_a: float
    f_b: float
    f_ab: float
    p_a: float
    p_b: float
    p_ab: float


def anova_2x2(cells) -> Anova2x2Result:
    """Balanced two-way ANOVA with interaction, definitional sums of squares.

    ``cells`` is a 2x2 nest of observation lists: cells[i][j] holds factor-A
    level i crossed with factor-B level j.

    Raises:
        UnbalancedDesignError: unequal cell sizes.
        ValueError: fewer than 2 observations per cell.
        DegenerateVarianceError: zero within-cell variance.
    """
    if len(cells) != 2 or any(len(row) != 2 for row in cells):
        raise ValueError("cells must form a 2x2 grid")
    data = [[np.asarray(cells[i][j], dtype=np.float64) for j in range(2)] for i in range(2)]
    sizes = {data[i][j].size for i in range(2) for j in range(2)}
    if len(sizes) != 1:
        raise UnbalancedDesignError(f"unequal cell sizes {sorted(sizes)}; balanced-only by design")
    n = sizes.pop()
    if n < 2:
        raise ValueError(f"need at least 2 observations per cell, got {n}")

    cell_mean = np.array([[data[i][j].mean() for j in range(2)] for i in range(2)])
    grand = float(np.concatenate([data[i][j] for i in range(2) for j in range(2)]).mean())
    a_mean = cell_mean.mean(axis=1)
    b_mean = cell_mean.mean(axis=0)

    ss_a = 2 * n * float(((a_mean - grand) ** 2).sum())
    ss_b = 2 * n * float(((b_mean - grand) ** 2).sum())
    ss_ab = n * float(
        sum(
            (cell_mean[i, j] - a_mean[i] - b_mean[j] + grand) ** 2
            for i in range(2)
            for j in range(2)
        )
    )
    ss_error = float(
        sum(((data[i][j] - cell_mean[i, j]) ** 2).sum() for i in range(2) for j in range(2))
    )
    ss_total = float(
        sum(((data[i][j] - grand) ** 2).sum() for i in range(2) for j in range(2))
    )
    df_error = 4 * (n - 1)
    if ss_error == 0.0:
        raise DegenerateVarianceError("zero within-cell variance")
    ms_error = ss_error / df_error
    f_a, f_b, f_ab = ss_a / ms_error, ss_b / ms_error, ss_ab / ms_error
    return Anova2x2Result(
        n_per_cell=n,
        cell_means=tuple(tuple(row) for row in cell_mean.tolist()),
        ss_a=ss_a, ss_b=ss_b, ss_ab=ss_ab, ss_error=ss_error, ss_total=ss_total,
        df_a=1, df_b=1, df_ab=1, df_error=df_error,
        f_a=f_a, f_b=f_b, f_ab=f_ab,
        p_a=_f_sf(f_a, 1, df_error),
        p_b=_f_sf(f_b, 1, df_error),
        p_ab=_f_sf(f_ab, 1, df_error),
    )
