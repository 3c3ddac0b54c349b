"""E-step, pseudo log-likelihood and closed-form M-step for the BVPA shapes.

Everything here works on normalized data; locations and scales only enter
through :func:`sufficient_stats`.  The pseudo log-likelihood drops every term
that does not involve the shapes, so it is defined up to an additive constant.

Two M-step families share one code path.  With observed counts the
log-coefficients use the partition sizes (n0, n1, n2); with expected counts
they use ``ntilde_i = n * alpha_i / (alpha0 + alpha1 + alpha2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateDataError
from .model import Partition, normalize

__all__ = [
    "ShapeTriple",
    "Posteriors",
    "SufficientStats",
    "e_step",
    "sufficient_stats",
    "log_coefficients",
    "pseudo_likelihood",
    "m_step",
]


class ShapeTriple(NamedTuple):
    alpha0: float
    alpha1: float
    alpha2: float

    def validate(self) -> "ShapeTriple":
        if not all(np.isfinite(a) and a > 0 for a in self):
            raise ValueError(f"shapes must be positive and finite, got {tuple(self)}")
        return self


@dataclass(frozen=True)
class Posteriors:
    """u1 = P(Delta2 = 0 | I1), w1 = P(Delta1 = 0 | I2) and their complements."""

    u1: float
    u2: float
    w1: float
    w2: float
    ntilde: Optional[tuple[float, float, float]] = None


@dataclass(frozen=True)
class SufficientStats:
    t0: float
    t1: float
    t2: float
    n0: int
    n1: int
    n2: int

    @property
    def n(self) -> int:
        return self.n0 + self.n1 + self.n2

    @property
    def t(self) -> np.ndarray:
        return np.array([self.t0, self.t1, self.t2])


def e_step(shapes, n: int = 0, expected_counts: bool = False) -> Posteriors:
    a0, a1, a2 = shapes
    u1 = a0 / (a0 + a2)
    u2 = a2 / (a0 + a2)
    w1 = a0 / (a0 + a1)
    w2 = a1 / (a0 + a1)
    ntilde = None
    if expected_counts:
        s = a0 + a1 + a2
        ntilde = (n * a0 / s, n * a1 / s, n * a2 / s)
    return Posteriors(u1, u2, w1, w2, ntilde)


def sufficient_stats(data, part: Partition, mu1, mu2, sigma1, sigma2) -> SufficientStats:
    """Log-sum denominators of the three M-step equations.

    ``t0`` collects the common-shock exposure: the tie value on I0, z1 on I2 and
    z2 on I1.  ``t1`` (``t2``) collects z1 (z2) over I1 and I2 plus the tie value.
    """
    z1, z2 = normalize(data, mu1, mu2, sigma1, sigma2)
    if z1.size and (z1.min() <= -1.0 or z2.min() <= -1.0):
        raise DegenerateDataError(
            "normalized value <= -1; location/scale inconsistent with the data"
        )
    l1 = np.log1p(z1)
    l2 = np.log1p(z2)
    i0, i1, i2 = part.i0, part.i1, part.i2
    tie = l1[i0].sum()
    t0 = tie + l1[i2].sum() + l2[i1].sum()
    t1 = tie + l1[i1].sum() + l1[i2].sum()
    t2 = tie + l2[i1].sum() + l2[i2].sum()
    return SufficientStats(float(t0), float(t1), float(t2), part.n0, part.n1, part.n2)


def log_coefficients(stats: SufficientStats, post: Posteriors, expected_counts: bool) -> np.ndarray:
    """Coefficients of (ln alpha0, ln alpha1, ln alpha2) in the pseudo log-likelihood."""
    if expected_counts:
        if post.ntilde is None:
            raise ValueError("posteriors carry no expected counts")
        m0, m1, m2 = post.ntilde
    else:
        m0, m1, m2 = stats.n0, stats.n1, stats.n2
    return np.array([
        m0 + post.u1 * m1 + post.w1 * m2,
        m1 + post.w2 * m2,
        m2 + post.u2 * m1,
    ])


def pseudo_likelihood(
    stats: SufficientStats, post: Posteriors, shapes, expected_counts: bool = False
) -> float:
    a = np.asarray(shapes, dtype=float)
    c = log_coefficients(stats, post, expected_counts)
    # 0 * log(a) is taken as 0 so the empty sample gives 0
    logs = np.where(c != 0.0, c * np.log(a), 0.0)
    return float(np.sum(logs - a * stats.t))


def m_step(stats: SufficientStats, post: Posteriors, expected_counts: bool = False) -> ShapeTriple:
    """Closed-form maximizer ``alpha_j = c_j / t_j`` of the pseudo log-likelihood."""
    t = stats.t
    if np.any(t <= 0.0):
        raise DegenerateDataError(f"log-sum statistic is zero: t = {tuple(t)}")
    c = log_coefficients(stats, post, expected_counts)
    a = c / t
    if np.any(a <= 0.0) or not np.all(np.isfinite(a)):
        raise DegenerateDataError(f"M-step produced a non-positive shape: {tuple(a)}")
    return ShapeTriple(float(a[0]), float(a[1]), float(a[2]))
