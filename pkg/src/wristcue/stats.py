"""Within-subject statistics: one-way repeated-measures ANOVA and paired t contrasts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AnovaResult:
    F: float
    df1: int
    df2: int
    p: float
    degenerate: bool = False  # zero residual variance with a nonzero effect

    def as_dict(self) -> dict:
        return {"F": self.F, "df1": self.df1, "df2": self.df2, "p": self.p,
                "degenerate": self.degenerate}


def rm_anova(values) -> AnovaResult:
    """One-way repeated-measures ANOVA on a participants x conditions matrix.

    Partitions total variance into condition, subject, and residual;
    F = MS_condition / MS_residual with df (k-1, (k-1)(n-1)).
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 2:
        raise ValueError("need a 2-D participants x conditions matrix")
    n, k = x.shape
    if n < 2 or k < 2:
        raise ValueError("need at least 2 participants and 2 conditions")
    if not np.isfinite(x).all():
        raise ValueError("matrix must be complete and finite")

    grand = x.mean()
    ss_cond = n * ((x.mean(axis=0) - grand) ** 2).sum()
    ss_subj = k * ((x.mean(axis=1) - grand) ** 2).sum()
    ss_total = ((x - grand) ** 2).sum()
    ss_err = ss_total - ss_cond - ss_subj

    df1 = k - 1
    df2 = (k - 1) * (n - 1)
    ms_cond = ss_cond / df1
    ms_err = ss_err / df2

    if ss_cond <= 1e-12 * max(1.0, ss_total):
        return AnovaResult(0.0, df1, df2, 1.0)
    if ms_err <= 0.0:
        return AnovaResult(math.inf, df1, df2, 0.0, degenerate=True)
    from scipy import stats as sps  # deferred: keeps CLI startup light

    f = ms_cond / ms_err
    p = float(sps.f.sf(f, df1, df2))
    return AnovaResult(float(f), df1, df2, p)


@dataclass(frozen=True)
class PairedResult:
    pair: tuple[int, int]   # column indices compared
    t: float
    p: float
    degenerate: bool = False  # zero-variance nonzero difference

    def as_dict(self) -> dict:
        return {"pair": list(self.pair), "t": self.t, "p": self.p,
                "degenerate": self.degenerate}


def paired_comparisons(values, correction: str = "none") -> list[PairedResult]:
    """Paired t-test for every condition pair of a participants x conditions matrix."""
    if correction not in ("none", "bonferroni"):
        raise ValueError(f"unknown correction {correction!r}")
    x = np.asarray(values, dtype=float)
    if x.ndim != 2:
        raise ValueError("need a 2-D participants x conditions matrix")
    n, k = x.shape
    if n < 2:
        raise ValueError("need at least 2 participants")
    from scipy import stats as sps  # deferred: keeps CLI startup light

    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    m = len(pairs)
    out: list[PairedResult] = []
    for i, j in pairs:
        d = x[:, i] - x[:, j]
        sd = d.std(ddof=1)
        if sd == 0.0:
            if d.mean() == 0.0:
                out.append(PairedResult((i, j), 0.0, 1.0))
            else:
                out.append(PairedResult((i, j), math.copysign(math.inf, d.mean()), 0.0,
                                        degenerate=True))
            continue
        t = d.mean() / (sd / math.sqrt(n))
        p = 2.0 * float(sps.t.sf(abs(t), n - 1))
        if correction == "bonferroni":
            p = min(1.0, p * m)
        out.append(PairedResult((i, j), float(t), p))
    return out
