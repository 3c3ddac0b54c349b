"""Loss/ALAE ingestion, peaks-over-threshold transform and empirical diagnostics.

Input is a UTF-8 CSV whose header is ``loss,alae``.  All emitted tables use
17 significant digits so floats round-trip exactly.
"""
from __future__ import annotations

import csv
import io
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DataFormatError, DegenerateDataError

__all__ = [
    "RawDataset",
    "PotConfig",
    "ScanRow",
    "load_csv",
    "load_pairs",
    "pot_transform",
    "threshold_scan",
    "empirical_survival",
    "ks_distance",
    "tail_linearity_r2",
    "density_grid_2d",
    "grid_to_csv",
    "table_to_csv",
    "atomic_write_text",
]

log = logging.getLogger(__name__)

HEADER = ("loss", "alae")
GRID_COLUMNS = ("x1_lo", "x1_hi", "x2_lo", "x2_hi", "density")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


@dataclass(frozen=True)
class RawDataset:
    rows: np.ndarray
    source: str = ""

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 2:
            raise DataFormatError("rows must be an (n, 2) array")
        if not (np.all(np.isfinite(rows)) and np.all(rows > 0)):
            raise DataFormatError("loss and ALAE values must be positive and finite")
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class PotConfig:
    """Joint thresholds; retained values are divided by ``scale_divisors`` (default: the thresholds)."""

    threshold1: float
    threshold2: float
    scale_divisors: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if not (self.threshold1 > 0 and self.threshold2 > 0):
            raise ValueError("thresholds must be positive")
        if self.scale_divisors is not None and not all(d > 0 for d in self.scale_divisors):
            raise ValueError("scale divisors must be positive")

    @property
    def divisors(self) -> tuple[float, float]:
        return self.scale_divisors or (self.threshold1, self.threshold2)


def load_pairs(path, header: Optional[Sequence[str]] = None) -> tuple[tuple[str, str], np.ndarray]:
    """Read a two-column numeric CSV with a header row.

    ``header`` pins the expected column names (case-insensitive).  Blank lines
    are skipped; any other malformed record raises ``DataFormatError`` naming
    its line.
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        names = next(reader, None)
        if names is None:
            raise DataFormatError(f"{path}: file is empty")
        names = tuple(h.strip().lower() for h in names)
        if header is not None and names != tuple(header):
            raise DataFormatError(
                f"{path}: line 1: expected header {','.join(header)!r}, got {','.join(names)!r}"
            )
        if len(names) != 2:
            raise DataFormatError(f"{path}: line 1: expected 2 columns, got {len(names)}")
        rows = []
        for record in reader:
            line = reader.line_num
            if not record or all(not f.strip() for f in record):
                continue
            if len(record) != 2:
                raise DataFormatError(f"{path}: line {line}: expected 2 fields, got {len(record)}")
            try:
                a, b = float(record[0]), float(record[1])
            except ValueError:
                raise DataFormatError(f"{path}: line {line}: non-numeric value in {','.join(record)!r}") from None
            if not (np.isfinite(a) and np.isfinite(b)):
                raise DataFormatError(f"{path}: line {line}: values must be finite")
            rows.append((a, b))
    if not rows:
        raise DegenerateDataError(f"{path}: no data rows")
    return names, np.array(rows)


def load_csv(path) -> RawDataset:
    """Read a ``loss,alae`` CSV.  Errors name the offending line."""
    _, rows = load_pairs(path, HEADER)
    bad = np.flatnonzero(~np.all(rows > 0, axis=1))
    if bad.size:
        # rows are 1-based after the header; blank lines are not counted here
        raise DataFormatError(f"{path}: data row {bad[0] + 1}: values must be positive")
    log.info("loaded %d rows from %s", len(rows), path)
    return RawDataset(rows, source=str(path))


def pot_transform(data: RawDataset, cfg: PotConfig) -> np.ndarray:
    """Keep rows at or above both thresholds and rescale each coordinate."""
    x = data.rows
    keep = (x[:, 0] >= cfg.threshold1) & (x[:, 1] >= cfg.threshold2)
    if not keep.any():
        raise DegenerateDataError(
            f"thresholds ({cfg.threshold1:g}, {cfg.threshold2:g}) retain no rows"
        )
    out = x[keep] / np.asarray(cfg.divisors)
    log.info("peaks over threshold retained %d of %d rows", len(out), len(x))
    return out


@dataclass(frozen=True)
class ScanRow:
    q1: float
    q2: float
    threshold1: float
    threshold2: float
    retained: int


def threshold_scan(data: RawDataset, levels1: Sequence[float], levels2: Optional[Sequence[float]] = None,
                   target: Optional[int] = None) -> list[ScanRow]:
    """Retained counts over a grid of marginal quantile levels (type-7 quantiles).

    With ``target`` only rows retaining exactly that many observations are returned.
    """
    levels2 = levels1 if levels2 is None else levels2
    x = data.rows
    t1 = np.quantile(x[:, 0], levels1)
    t2 = np.quantile(x[:, 1], levels2)
    rows = []
    for q1, a in zip(levels1, t1):
        above1 = x[:, 0] >= a
        for q2, b in zip(levels2, t2):
            kept = int(np.count_nonzero(above1 & (x[:, 1] >= b)))
            if target is None or kept == target:
                rows.append(ScanRow(float(q1), float(q2), float(a), float(b), kept))
    return rows


def empirical_survival(values) -> tuple[np.ndarray, np.ndarray]:
    """Distinct sorted values and the level ``#{x_i >= x} / n`` at each."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise DegenerateDataError("empirical survival of an empty sample")
    xs, first = np.unique(v, return_index=True)
    return xs, (v.size - first) / v.size


def ks_distance(values, sf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Kolmogorov distance between the sample and a model survival function."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise DegenerateDataError("KS distance of an empty sample")
    n = v.size
    cdf = 1.0 - np.asarray(sf(v), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def tail_linearity_r2(values, mu: float, sigma: float) -> float:
    """R^2 of log empirical survival against log(1 + (x - mu)/sigma).

    A Pareto II tail makes the relation linear with slope ``-alpha``.
    """
    xs, level = empirical_survival(values)
    keep = xs >= mu
    u = np.log1p((xs[keep] - mu) / sigma)
    w = np.log(level[keep])
    if u.size < 3:
        raise DegenerateDataError("need at least 3 distinct values for the tail regression")
    r = np.corrcoef(u, w)[0, 1]
    return float(r * r)


def density_grid_2d(data, bins: tuple[int, int] = (20, 20)) -> list[tuple[float, float, float, float, float]]:
    """Histogram cells ``(x1_lo, x1_hi, x2_lo, x2_hi, mass)``; masses sum to one."""
    x = np.asarray(data, dtype=float).reshape(-1, 2)
    if len(x) == 0:
        raise DegenerateDataError("density grid of an empty sample")
    b1, b2 = bins
    if b1 < 2 or b2 < 2:
        raise ValueError("need at least 2 bins per axis")
    counts, e1, e2 = np.histogram2d(x[:, 0], x[:, 1], bins=(b1, b2))
    mass = counts / len(x)
    return [
        (e1[i], e1[i + 1], e2[j], e2[j + 1], mass[i, j])
        for i in range(b1)
        for j in range(b2)
    ]


def table_to_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def grid_to_csv(rows) -> str:
    return table_to_csv(GRID_COLUMNS, rows)
