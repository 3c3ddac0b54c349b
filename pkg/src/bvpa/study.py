"""Replication studies and parametric bootstrap intervals.

Each replication draws its own sample from a ``SeedSequence`` keyed by
``(base_seed, n, replication)``, so any single replication can be replayed in
isolation.  The key does not include the variant: all variants see the same
datasets, which makes variant comparisons paired and lets ``mod2t`` act as a
cap on the very runs that ``mod2`` finishes.

Results are collected into index order before any reduction, so aggregates do
not depend on ``parallelism``.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .em import VARIANTS, EmConfig, fit
from .errors import BvpaError
from .model import PARAM_NAMES, BvpaParams, bvpa_sample

__all__ = [
    "StudyConfig",
    "Replication",
    "CellSummary",
    "StudyReport",
    "BootstrapCI",
    "replication_seed",
    "run_replication",
    "run_study",
    "bootstrap_ci",
    "empirical_quantiles",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = ("variant", "n", "parameter", "average_estimate", "mse", "avg_iterations", "failures")
STUDY_DOMAIN = 0
BOOTSTRAP_DOMAIN = 1


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass(frozen=True)
class StudyConfig:
    true_params: BvpaParams
    sample_sizes: tuple[int, ...] = (150, 250, 350, 450)
    replications: int = 1000
    variants: tuple[str, ...] = ("mod1", "mod2", "mod2t", "mod3", "mod4")
    base_seed: int = 0
    parallelism: int = 1
    em: EmConfig = field(default_factory=EmConfig)

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.sample_sizes or min(self.sample_sizes) < 10:
            raise ValueError("sample sizes must be >= 10")
        if not self.variants:
            raise ValueError("at least one variant is required")
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}; choose from {VARIANTS}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass(frozen=True)
class Replication:
    variant: str
    n: int
    index: int
    estimates: Optional[tuple[float, ...]]
    iterations: Optional[int] = None
    converged: bool = False
    truncated: bool = False
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.estimates is None


@dataclass(frozen=True)
class CellSummary:
    variant: str
    n: int
    replications: int
    failures: int
    average_iterations: float
    average_estimates: tuple[float, ...]
    mse: tuple[float, ...]
    nonconverged: int = 0
    truncated: int = 0


@dataclass(frozen=True)
class StudyReport:
    true_params: BvpaParams
    cells: tuple[CellSummary, ...]

    def cell(self, variant: str, n: int) -> CellSummary:
        for c in self.cells:
            if c.variant == variant and c.n == n:
                return c
        raise KeyError((variant, n))

    def csv_rows(self) -> list[tuple]:
        """One row per (variant, n, parameter) followed by an ``iterations`` summary row."""
        rows = []
        for c in self.cells:
            for name, ae, mse in zip(PARAM_NAMES, c.average_estimates, c.mse):
                rows.append((c.variant, c.n, name, ae, mse, c.average_iterations, c.failures))
            rows.append((c.variant, c.n, "iterations", c.average_iterations, None,
                         c.average_iterations, c.failures))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.csv_rows():
            w.writerow([_fmt(v) if i >= 3 else v for i, v in enumerate(row)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "true_params": self.true_params.as_dict(),
            "cells": [
                asdict(c) | {
                    "average_estimates": dict(zip(PARAM_NAMES, c.average_estimates)),
                    "mse": dict(zip(PARAM_NAMES, c.mse)),
                }
                for c in self.cells
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)


@dataclass(frozen=True)
class BootstrapCI:
    lower: dict
    upper: dict
    resamples: int
    failures: int
    estimates: np.ndarray = field(repr=False, compare=False)

    def csv_rows(self) -> list[tuple[str, float, float]]:
        return [(k, self.lower[k], self.upper[k]) for k in PARAM_NAMES]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("parameter", "lower", "upper"))
        for name, lo, hi in self.csv_rows():
            w.writerow((name, _fmt(lo), _fmt(hi)))
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"resamples": self.resamples, "failures": self.failures,
             "intervals": {k: [self.lower[k], self.upper[k]] for k in PARAM_NAMES}},
            indent=2,
        )


def replication_seed(base_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(k) for k in key))


def run_replication(params: BvpaParams, n: int, index: int, em: EmConfig,
                    seed: np.random.SeedSequence) -> Replication:
    """Sample and fit one dataset; fit failures are returned, not raised."""
    data = bvpa_sample(params, n, seed=seed)
    try:
        res = fit(data, em)
    except (BvpaError, ArithmeticError, ValueError) as exc:
        log.debug("replication %s n=%d #%d failed: %s", em.variant, n, index, exc)
        return Replication(em.variant, n, index, None, error=f"{type(exc).__name__}: {exc}")
    return Replication(em.variant, n, index, tuple(res.params.as_array()), res.iterations,
                       res.converged, res.truncated)


def _task(args) -> Replication:
    return run_replication(*args)


def _execute(tasks: list, parallelism: int) -> list[Replication]:
    if parallelism == 1 or len(tasks) <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        # map preserves submission order, so reductions see the same sequence
        return list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * parallelism))))


def _summarize(variant: str, n: int, reps: Sequence[Replication], truth: np.ndarray) -> CellSummary:
    ok = [r for r in sorted(reps, key=lambda r: r.index) if not r.failed]
    failures = len(reps) - len(ok)
    if ok:
        est = np.array([r.estimates for r in ok])
        ae = tuple(float(v) for v in est.mean(axis=0))
        mse = tuple(float(v) for v in ((est - truth) ** 2).mean(axis=0))
        ai = float(np.mean([r.iterations for r in ok]))
    else:
        ae = mse = (float("nan"),) * len(PARAM_NAMES)
        ai = float("nan")
    return CellSummary(
        variant, n, len(reps), failures, ai, ae, mse,
        nonconverged=sum(not r.converged for r in ok),
        truncated=sum(r.truncated for r in ok),
    )


def run_study(config: StudyConfig) -> StudyReport:
    """Fit every (variant, n) cell over ``config.replications`` simulated datasets."""
    tasks = []
    for variant in config.variants:
        em = replace(config.em, variant=variant)
        for n in config.sample_sizes:
            for i in range(config.replications):
                seed = replication_seed(config.base_seed, STUDY_DOMAIN, n, i)
                tasks.append((config.true_params, n, i, em, seed))
    results = _execute(tasks, config.parallelism)

    truth = config.true_params.as_array()
    cells = []
    k = 0
    for variant in config.variants:
        for n in config.sample_sizes:
            chunk = results[k:k + config.replications]
            k += config.replications
            cell = _summarize(variant, n, chunk, truth)
            if cell.failures:
                log.warning("%s n=%d: %d of %d replications failed", variant, n,
                            cell.failures, cell.replications)
            cells.append(cell)
    return StudyReport(config.true_params, tuple(cells))


def empirical_quantiles(values: np.ndarray, levels=(0.025, 0.975)) -> np.ndarray:
    """Type-7 (linear interpolation) sample quantiles along axis 0."""
    return np.quantile(np.asarray(values, dtype=float), levels, axis=0, method="linear")


def bootstrap_ci(fitted: BvpaParams, n: int, variant: str = "mod1", resamples: int = 1000,
                 seed: int = 0, em: Optional[EmConfig] = None, parallelism: int = 1) -> BootstrapCI:
    """Parametric bootstrap: simulate from ``fitted``, refit, take 2.5% / 97.5% quantiles."""
    if resamples < 2:
        raise ValueError("resamples must be >= 2")
    if n < 1:
        raise ValueError("n must be >= 1")
    em = replace(em or EmConfig(), variant=variant)
    tasks = [(fitted, n, i, em, replication_seed(seed, BOOTSTRAP_DOMAIN, i)) for i in range(resamples)]
    results = _execute(tasks, parallelism)
    ok = [r.estimates for r in results if not r.failed]
    failures = resamples - len(ok)
    if failures:
        log.warning("bootstrap: %d of %d refits failed", failures, resamples)
    if not ok:
        raise BvpaError("every bootstrap refit failed")
    est = np.array(ok)
    lo, hi = empirical_quantiles(est)
    return BootstrapCI(
        dict(zip(PARAM_NAMES, map(float, lo))),
        dict(zip(PARAM_NAMES, map(float, hi))),
        resamples, failures, est,
    )
