"""The five EM estimation procedures for the BVPA.

``base``   marginal-MLE location/scale, fixed partition, observed counts.
``mod1``   as ``base`` but with expected counts in the M-step.
``mod2``   coordinate-minimum locations; each iteration re-partitions, takes one
           gradient-ascent step on each scale against its marginal likelihood,
           then an expected-count E/M update.  ``mod2t`` is the same run capped
           at 2000 iterations.
``mod3``   as ``mod2`` with one sweep of the scale fixed-point map instead of
           the gradient step.
``mod4``   ``mod3`` run until the scales settle (absolute change below
           ``fp_inner_tol``), then continued until the pseudo log-likelihood
           settles.

Every variant stops on ``|Q_t - Q_{t-1}| / |Q_{t-1}| < tol``, where ``Q_t`` is
the pseudo log-likelihood at the iterate ``t`` with posteriors (and expected
counts) evaluated at that same iterate.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .em_core import ShapeTriple, e_step, m_step, pseudo_likelihood, sufficient_stats
from .errors import ConvergenceError, DegenerateDataError
from .model import PARAM_NAMES, BvpaParams, partition_sample
from .pareto import marginal_scale_gradient, pareto_mle, scale_fixed_point

__all__ = [
    "VARIANTS",
    "EmConfig",
    "FitResult",
    "estimate_locations",
    "fit",
    "fit_base",
    "fit_mod1",
    "fit_mod2",
    "fit_mod3",
    "fit_mod4",
    "scale_gradient_step",
]

log = logging.getLogger(__name__)

VARIANTS = ("base", "mod1", "mod2", "mod2t", "mod3", "mod4")
MOD2_TRUNCATION = 2000
MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class EmConfig:
    """Settings shared by all variants.

    ``gd_step=None`` selects the scale-relative learning rate
    ``0.01 * sigma_j0 / (1 + |g_j0|)`` from the starting gradient ``g_j0``.
    ``init_scales=None`` means marginal-MLE scales for ``base``/``mod1`` (where
    they stay fixed) and ``(1, 1)`` for the scale-updating variants.
    ``fixed_locations`` overrides the estimated locations (testing hook).
    """

    variant: str = "mod1"
    tol: float = 1e-5
    max_iter: Optional[int] = 50_000
    truncate_at: Optional[int] = None
    gd_step: Optional[float] = None
    init_shapes: tuple[float, float, float] = (1.0, 1.0, 1.0)
    init_scales: Optional[tuple[float, float]] = None
    fixed_locations: Optional[tuple[float, float]] = None
    fp_inner_tol: float = 1e-5

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.gd_step is not None and not self.gd_step > 0:
            raise ValueError("gd_step must be > 0")
        if not self.fp_inner_tol > 0:
            raise ValueError("fp_inner_tol must be > 0")
        ShapeTriple(*self.init_shapes).validate()
        if self.init_scales is not None and not all(s > 0 for s in self.init_scales):
            raise ValueError("init_scales must be positive")

    @property
    def iteration_cap(self) -> Optional[int]:
        caps = [c for c in (self.max_iter, self.truncate_at) if c is not None]
        return min(caps) if caps else None


@dataclass(frozen=True)
class FitResult:
    params: BvpaParams
    iterations: int
    q_trace: tuple[float, ...]
    converged: bool
    variant: str
    truncated: bool = False
    phase1_iterations: Optional[int] = None
    backtracks: int = 0
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self, include_trace: bool = False) -> dict:
        out = {
            "variant": self.variant,
            "params": self.params.as_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "truncated": self.truncated,
        }
        if self.phase1_iterations is not None:
            out["phase1_iterations"] = self.phase1_iterations
        if self.backtracks:
            out["backtracks"] = self.backtracks
        if include_trace:
            out["q_trace"] = list(self.q_trace)
        return out

    def to_json(self, include_trace: bool = False) -> str:
        return json.dumps(self.to_dict(include_trace), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        params = BvpaParams(**{k: float(d["params"][k]) for k in PARAM_NAMES})
        trace = tuple(float(q) for q in d.get("q_trace", ()))
        return cls(
            params=params,
            iterations=int(d["iterations"]),
            q_trace=trace,
            converged=bool(d["converged"]),
            variant=str(d["variant"]),
            truncated=bool(d.get("truncated", False)),
            phase1_iterations=d.get("phase1_iterations"),
            backtracks=int(d.get("backtracks", 0)),
        )


def _as_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[1] != 2:
        x = x.reshape(-1, 2)
    if len(x) == 0:
        raise DegenerateDataError("empty sample")
    if not np.all(np.isfinite(x)):
        raise DegenerateDataError("sample contains non-finite values")
    return x


def estimate_locations(data) -> tuple[float, float]:
    x = _as_data(data)
    return float(x[:, 0].min()), float(x[:, 1].min())


def _converged(q_new: float, q_old: float, tol: float) -> bool:
    if q_old == 0.0:
        return q_new == 0.0
    return abs(q_new - q_old) / abs(q_old) < tol


class _Problem:
    """Data with fixed locations; caches excesses for repeated re-partitioning."""

    def __init__(self, data: np.ndarray, mu1: float, mu2: float):
        self.data = data
        self.n = len(data)
        self.mu1, self.mu2 = mu1, mu2
        self.y1 = data[:, 0] - mu1
        self.y2 = data[:, 1] - mu2

    def stats(self, s1: float, s2: float):
        part = partition_sample(self.data, self.mu1, self.mu2, s1, s2)
        return sufficient_stats(self.data, part, self.mu1, self.mu2, s1, s2)

    def q(self, stats, shapes, expected: bool) -> float:
        return pseudo_likelihood(stats, e_step(shapes, self.n, expected), shapes, expected)


def _em_update(prob: _Problem, stats, shapes: ShapeTriple, expected: bool) -> ShapeTriple:
    return m_step(stats, e_step(shapes, prob.n, expected), expected)


def _fit_fixed_scales(data, config: EmConfig, expected: bool) -> FitResult:
    x = _as_data(data)
    if config.fixed_locations is not None or config.init_scales is not None:
        mu1, mu2 = config.fixed_locations or estimate_locations(x)
        if config.init_scales is not None:
            s1, s2 = config.init_scales
        else:
            s1, s2 = pareto_mle(x[:, 0]).sigma, pareto_mle(x[:, 1]).sigma
    else:
        m1, m2 = pareto_mle(x[:, 0]), pareto_mle(x[:, 1])
        mu1, mu2, s1, s2 = m1.mu, m2.mu, m1.sigma, m2.sigma
    prob = _Problem(x, mu1, mu2)
    stats = prob.stats(s1, s2)
    shapes = ShapeTriple(*config.init_shapes)
    trace = [prob.q(stats, shapes, expected)]
    converged = False
    cap = config.iteration_cap
    it = 0
    while cap is None or it < cap:
        shapes = _em_update(prob, stats, shapes, expected)
        trace.append(prob.q(stats, shapes, expected))
        it += 1
        if _converged(trace[-1], trace[-2], config.tol):
            converged = True
            break
    notes = ()
    if not expected and shapes.alpha0 < 0.01:
        notes = (f"alpha0 collapsed towards 0 with n0={stats.n0} exact ties",)
    params = BvpaParams(mu1, mu2, s1, s2, *shapes)
    return FitResult(params, it, tuple(trace), converged, config.variant, notes=notes)


def fit_base(data, config: EmConfig = EmConfig(variant="base")) -> FitResult:
    return _fit_fixed_scales(data, replace(config, variant="base"), expected=False)


def fit_mod1(data, config: EmConfig = EmConfig(variant="mod1")) -> FitResult:
    return _fit_fixed_scales(data, replace(config, variant="mod1"), expected=True)


def scale_gradient_step(y: np.ndarray, sigma: float, alpha: float, rate: float) -> tuple[float, int]:
    """One gradient-ascent step on a marginal scale, halving the step while it would go non-positive.

    Returns the new scale and the number of halvings.
    """
    g = marginal_scale_gradient(y, sigma, alpha)
    step = rate * g
    halvings = 0
    while sigma + step <= 0.0:
        halvings += 1
        if halvings > MAX_BACKTRACKS:
            raise ConvergenceError(f"gradient step cannot keep the scale positive (sigma={sigma})")
        step *= 0.5
    return sigma + step, halvings


class _GradientScales:
    def __init__(self, prob: _Problem, sigma, shapes, gd_step: Optional[float]):
        self.prob = prob
        a0, a1, a2 = shapes
        if gd_step is None:
            g1 = marginal_scale_gradient(prob.y1, sigma[0], a0 + a1)
            g2 = marginal_scale_gradient(prob.y2, sigma[1], a0 + a2)
            self.rates = (0.01 * sigma[0] / (1.0 + abs(g1)), 0.01 * sigma[1] / (1.0 + abs(g2)))
        else:
            self.rates = (gd_step, gd_step)
        self.backtracks = 0

    def __call__(self, sigma, shapes):
        a0, a1, a2 = shapes
        s1, h1 = scale_gradient_step(self.prob.y1, sigma[0], a0 + a1, self.rates[0])
        s2, h2 = scale_gradient_step(self.prob.y2, sigma[1], a0 + a2, self.rates[1])
        self.backtracks += h1 + h2
        return s1, s2


class _FixedPointScales:
    backtracks = 0

    def __init__(self, prob: _Problem):
        self.prob = prob

    def __call__(self, sigma, shapes):
        a0, a1, a2 = shapes
        s1 = scale_fixed_point(self.prob.y1, sigma[0], a0 + a1)
        s2 = scale_fixed_point(self.prob.y2, sigma[1], a0 + a2)
        if not (s1 > 0.0 and s2 > 0.0):
            raise DegenerateDataError("scale fixed point collapsed to zero")
        return s1, s2


def _fit_moving_scales(data, config: EmConfig, updater: str, two_phase: bool = False) -> FitResult:
    x = _as_data(data)
    mu1, mu2 = config.fixed_locations or estimate_locations(x)
    prob = _Problem(x, mu1, mu2)
    sigma = tuple(config.init_scales or (1.0, 1.0))
    shapes = ShapeTriple(*config.init_shapes)
    if updater == "gradient":
        update = _GradientScales(prob, sigma, shapes, config.gd_step)
    else:
        update = _FixedPointScales(prob)

    stats = prob.stats(*sigma)
    trace = [prob.q(stats, shapes, True)]
    cap = config.iteration_cap
    it = 0
    phase1 = None
    converged = truncated = False
    in_phase1 = two_phase
    while True:
        if cap is not None and it >= cap:
            truncated = config.truncate_at is not None and it >= config.truncate_at
            break
        # partition and statistics at the current scales, then one scale move
        new_sigma = update(sigma, shapes)
        shapes = _em_update(prob, stats, shapes, True)
        d_sigma = max(abs(new_sigma[0] - sigma[0]), abs(new_sigma[1] - sigma[1]))
        sigma = new_sigma
        stats = prob.stats(*sigma)
        trace.append(prob.q(stats, shapes, True))
        it += 1
        if in_phase1:
            if d_sigma < config.fp_inner_tol:
                in_phase1 = False
                phase1 = it
            continue
        if _converged(trace[-1], trace[-2], config.tol):
            converged = True
            break
    if two_phase and phase1 is None:
        phase1 = it

    params = BvpaParams(mu1, mu2, sigma[0], sigma[1], *shapes)
    notes = ()
    if update.backtracks:
        notes = (f"scale step halved {update.backtracks} times to stay positive",)
    return FitResult(
        params, it, tuple(trace), converged, config.variant,
        truncated=truncated, phase1_iterations=phase1,
        backtracks=update.backtracks, notes=notes,
    )


def fit_mod2(data, config: EmConfig = EmConfig(variant="mod2")) -> FitResult:
    if config.variant not in ("mod2", "mod2t"):
        config = replace(config, variant="mod2")
    if config.variant == "mod2t" and config.truncate_at is None:
        config = replace(config, truncate_at=MOD2_TRUNCATION)
    return _fit_moving_scales(data, config, "gradient")


def fit_mod3(data, config: EmConfig = EmConfig(variant="mod3")) -> FitResult:
    return _fit_moving_scales(data, replace(config, variant="mod3"), "fixed_point")


def fit_mod4(data, config: EmConfig = EmConfig(variant="mod4")) -> FitResult:
    return _fit_moving_scales(data, replace(config, variant="mod4"), "fixed_point", two_phase=True)


_DISPATCH = {
    "base": fit_base,
    "mod1": fit_mod1,
    "mod2": fit_mod2,
    "mod2t": fit_mod2,
    "mod3": fit_mod3,
    "mod4": fit_mod4,
}


def fit(data, config: EmConfig) -> FitResult:
    """Run the variant named in ``config``."""
    return _DISPATCH[config.variant](data, config)
