"""Marshall-Olkin bivariate Pareto law BVPA(mu1, mu2, sigma1, sigma2, alpha0, alpha1, alpha2).

Built from three independent Pareto variables: a common shock
``U0 ~ Pa(II)(0, 1, alpha0)`` and ``Uj ~ Pa(II)(muj, sigmaj, alphaj)``, with
``Xj = min(sigmaj * U0 + muj, Uj)``.  In normalized coordinates
``zj = (xj - muj) / sigmaj`` the law has an absolutely continuous part on the
two wedges ``z1 < z2`` / ``z1 > z2`` and a singular part on the diagonal
``z1 == z2`` carrying mass ``alpha0 / (alpha0 + alpha1 + alpha2)``.

Samples are ``(n, 2)`` float arrays throughout.
"""
from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from typing import NamedTuple

import numpy as np

from .errors import PreconditionError
from .pareto import ParetoParams

__all__ = [
    "PARAM_NAMES",
    "BvpaParams",
    "BivariatePoint",
    "LatentDraw",
    "Partition",
    "XI1",
    "XI2",
    "XI3",
    "XI4",
    "bvpa_sample",
    "bvpa_sample_latent",
    "bvpa_pdf",
    "bvpa_sf",
    "bvpa_marginal",
    "bvpa_min_distribution",
    "normalize",
    "partition_sample",
    "density_grid",
    "write_density_grid",
]

PARAM_NAMES = ("mu1", "mu2", "sigma1", "sigma2", "alpha0", "alpha1", "alpha2")


@dataclass(frozen=True)
class BvpaParams:
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    alpha0: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        for name in ("mu1", "mu2"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for name in ("sigma1", "sigma2", "alpha0", "alpha1", "alpha2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @classmethod
    def from_sequence(cls, values) -> "BvpaParams":
        values = [float(v) for v in values]
        if len(values) != 7:
            raise ValueError(f"expected 7 parameters, got {len(values)}")
        return cls(*values)

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    def as_dict(self) -> dict:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    @property
    def alpha_sum(self) -> float:
        return self.alpha0 + self.alpha1 + self.alpha2


# parameter sets used for the figures and simulation tables
XI1 = BvpaParams(0.0, 0.0, 1.0, 0.5, 1.0, 0.3, 1.4)
XI2 = BvpaParams(1.0, 2.0, 0.4, 0.5, 2.0, 1.2, 1.4)
XI3 = BvpaParams(0.0, 0.0, 1.4, 0.5, 1.0, 1.0, 1.4)
XI4 = BvpaParams(0.0, 0.0, 1.4, 0.5, 2.0, 0.4, 0.5)


class BivariatePoint(NamedTuple):
    x1: float
    x2: float


class LatentDraw(NamedTuple):
    """Latent variables behind one observation, vectorized over a sample.

    ``delta1`` is 0 where X1 came from the common shock and 1 otherwise;
    ``delta2`` is 0 or 2 likewise.
    """

    u0: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray


@dataclass(frozen=True)
class Partition:
    i0: np.ndarray
    i1: np.ndarray
    i2: np.ndarray

    @property
    def n0(self) -> int:
        return len(self.i0)

    @property
    def n1(self) -> int:
        return len(self.i1)

    @property
    def n2(self) -> int:
        return len(self.i2)

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.n0, self.n1, self.n2


def _pareto_inverse(u: np.ndarray, alpha: float) -> np.ndarray:
    # standard Pa(II)(0, 1, alpha) quantile at level u
    return np.expm1(-np.log1p(-u) / alpha)


def bvpa_sample_latent(p: BvpaParams, n: int, seed=None) -> tuple[np.ndarray, LatentDraw]:
    """Sample ``n`` pairs and return them with the latent draws that produced them."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    v = rng.random((n, 3))
    u0 = _pareto_inverse(v[:, 0], p.alpha0)
    u1 = p.mu1 + p.sigma1 * _pareto_inverse(v[:, 1], p.alpha1)
    u2 = p.mu2 + p.sigma2 * _pareto_inverse(v[:, 2], p.alpha2)
    shock1 = p.sigma1 * u0 + p.mu1
    shock2 = p.sigma2 * u0 + p.mu2
    x = np.column_stack([np.minimum(shock1, u1), np.minimum(shock2, u2)])
    delta1 = np.where(shock1 <= u1, 0, 1)
    delta2 = np.where(shock2 <= u2, 0, 2)
    return x, LatentDraw(u0, u1, u2, delta1, delta2)


def bvpa_sample(p: BvpaParams, n: int, seed=None) -> np.ndarray:
    """``n`` i.i.d. BVPA pairs as an ``(n, 2)`` array."""
    return bvpa_sample_latent(p, n, seed)[0]


def normalize(data: np.ndarray, mu1: float, mu2: float, sigma1: float, sigma2: float):
    data = np.asarray(data, dtype=float).reshape(-1, 2)
    return (data[:, 0] - mu1) / sigma1, (data[:, 1] - mu2) / sigma2


def partition_sample(
    data, mu1: float, mu2: float, sigma1: float, sigma2: float, rtol: float = 0.0
) -> Partition:
    """Split a sample into the tie set and the two wedges.

    With the default ``rtol=0`` a tie means bit-identical normalized values.
    A positive ``rtol`` treats ``|z1 - z2| <= rtol * max(|z1|, |z2|)`` as a tie,
    for generating parameters whose normalization is not exact in floating
    point.
    """
    if not (sigma1 > 0 and sigma2 > 0):
        raise PreconditionError("scales must be positive")
    z1, z2 = normalize(data, mu1, mu2, sigma1, sigma2)
    if rtol > 0.0:
        tie = np.abs(z1 - z2) <= rtol * np.maximum(np.abs(z1), np.abs(z2))
    else:
        tie = z1 == z2
    return Partition(
        i0=np.flatnonzero(tie),
        i1=np.flatnonzero(~tie & (z1 < z2)),
        i2=np.flatnonzero(~tie & (z1 > z2)),
    )


def _branch(z1: float, z2: float) -> str:
    if z1 == z2:
        return "f0"
    return "f1" if z1 < z2 else "f2"


def bvpa_pdf(p: BvpaParams, pt) -> tuple[str, float]:
    """Branch tag and density at a single point.

    ``f1``/``f2`` are densities in data units on the wedges.  ``f0`` is the
    density of the common normalized value ``z`` on the diagonal, with respect
    to Lebesgue measure in ``z``, written exactly as
    ``alpha0 * (1 + z)**-(alpha0 + alpha1 + alpha2 + 1)`` without a scale
    Jacobian.  Points outside the support have density 0.
    """
    x1, x2 = pt
    z1 = (x1 - p.mu1) / p.sigma1
    z2 = (x2 - p.mu2) / p.sigma2
    branch = _branch(z1, z2)
    if z1 < 0.0 or z2 < 0.0:
        return branch, 0.0
    a0, a1, a2 = p.alpha0, p.alpha1, p.alpha2
    if branch == "f0":
        return branch, a0 * (1.0 + z1) ** (-(a0 + a1 + a2 + 1.0))
    jac = 1.0 / (p.sigma1 * p.sigma2)
    if branch == "f1":
        val = a1 * (a0 + a2) * (1.0 + z2) ** (-(a0 + a2 + 1.0)) * (1.0 + z1) ** (-(a1 + 1.0))
    else:
        val = a2 * (a0 + a1) * (1.0 + z1) ** (-(a0 + a1 + 1.0)) * (1.0 + z2) ** (-(a2 + 1.0))
    return branch, jac * val


def bvpa_sf(p: BvpaParams, pt) -> float:
    """Joint survival P(X1 >= x1, X2 >= x2).

    Equivalent to ``(1+max(z1,z2))**-alpha0 * (1+z1)**-alpha1 * (1+z2)**-alpha2``
    with normalized coordinates clipped at 0.
    """
    x1, x2 = pt
    z1 = max((x1 - p.mu1) / p.sigma1, 0.0)
    z2 = max((x2 - p.mu2) / p.sigma2, 0.0)
    a0, a1, a2 = p.alpha0, p.alpha1, p.alpha2
    if z1 < z2:
        return (1.0 + z1) ** (-a1) * (1.0 + z2) ** (-(a0 + a2))
    if z1 > z2:
        return (1.0 + z1) ** (-(a0 + a1)) * (1.0 + z2) ** (-a2)
    return (1.0 + z1) ** (-(a0 + a1 + a2))


def bvpa_marginal(p: BvpaParams, which: int) -> ParetoParams:
    if which == 1:
        return ParetoParams(p.mu1, p.sigma1, p.alpha0 + p.alpha1)
    if which == 2:
        return ParetoParams(p.mu2, p.sigma2, p.alpha0 + p.alpha2)
    raise ValueError(f"which must be 1 or 2, got {which}")


def bvpa_min_distribution(p: BvpaParams) -> ParetoParams:
    """Law of ``min(X1, X2)``; only Pareto when both coordinates share location and scale."""
    if p.mu1 != p.mu2 or p.sigma1 != p.sigma2:
        raise PreconditionError(
            "minimum is Pareto only for common location and scale "
            f"(got mu=({p.mu1}, {p.mu2}), sigma=({p.sigma1}, {p.sigma2}))"
        )
    return ParetoParams(p.mu1, p.sigma1, p.alpha_sum)


def density_grid(p: BvpaParams, x1_values, x2_values) -> list[tuple[float, float, str, float]]:
    """Tabulate the density on the lattice ``x1_values x x2_values``."""
    return [(float(a), float(b), *bvpa_pdf(p, (a, b))) for a in x1_values for b in x2_values]


def write_density_grid(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "branch", "density"])
        for x1, x2, branch, dens in rows:
            w.writerow([f"{x1:.17g}", f"{x2:.17g}", branch, f"{dens:.17g}"])
