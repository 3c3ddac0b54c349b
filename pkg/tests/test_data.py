import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from bvpa.data import (
    GRID_COLUMNS,
    PotConfig,
    RawDataset,
    atomic_write_text,
    density_grid_2d,
    empirical_survival,
    grid_to_csv,
    ks_distance,
    load_csv,
    load_pairs,
    pot_transform,
    tail_linearity_r2,
    threshold_scan,
)
from bvpa.errors import DataFormatError, DegenerateDataError
from bvpa.model import XI2, BvpaParams, bvpa_sample
from bvpa.pareto import ParetoParams, pareto_mle, pareto_sample, pareto_sf


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def claims(tmp_path):
    x = bvpa_sample(XI2, 1500, seed=8)
    return write(tmp_path, "loss,alae\n" + "".join(f"{a:.17g},{b:.17g}\n" for a, b in x)), x


def test_load_csv_round_trip(claims):
    path, x = claims
    raw = load_csv(path)
    assert len(raw) == 1500
    np.testing.assert_array_equal(raw.rows, x)


def test_load_csv_malformed_row_names_line(tmp_path):
    path = write(tmp_path, "loss,alae\n1,2\n3,abc\n")
    with pytest.raises(DataFormatError, match="line 3"):
        load_csv(path)
    path = write(tmp_path, "loss,alae\n1,2\n3,4,5\n")
    with pytest.raises(DataFormatError, match="line 3"):
        load_csv(path)


def test_load_csv_header_and_empty(tmp_path):
    with pytest.raises(DataFormatError, match="header"):
        load_csv(write(tmp_path, "a,b\n1,2\n"))
    with pytest.raises(DegenerateDataError):
        load_csv(write(tmp_path, "loss,alae\n\n"))
    with pytest.raises(DataFormatError):
        load_csv(write(tmp_path, ""))
    with pytest.raises(DataFormatError):
        load_csv(write(tmp_path, "loss,alae\n1,-2\n"))
    with pytest.raises(OSError):
        load_csv(tmp_path / "missing.csv")


def test_load_pairs_any_header_and_blank_lines(tmp_path):
    names, x = load_pairs(write(tmp_path, "X1, x2\n-1,2\n\n3.5,4e-3\n"))
    assert names == ("x1", "x2")
    np.testing.assert_array_equal(x, [[-1, 2], [3.5, 4e-3]])


def test_raw_dataset_validation():
    with pytest.raises(DataFormatError):
        RawDataset(np.array([[1.0, 0.0]]))
    with pytest.raises(DataFormatError):
        RawDataset(np.array([1.0, 2.0, 3.0]))


def test_pot_thresholds_at_minima_retain_all(claims):
    raw = load_csv(claims[0])
    out = pot_transform(raw, PotConfig(*raw.rows.min(axis=0)))
    assert len(out) == len(raw)


def test_pot_rescales_and_shrinks(claims):
    raw = load_csv(claims[0])
    t = np.quantile(raw.rows, 0.5, axis=0)
    out = pot_transform(raw, PotConfig(*t))
    keep = (raw.rows[:, 0] >= t[0]) & (raw.rows[:, 1] >= t[1])
    assert len(out) == keep.sum() < len(raw)
    np.testing.assert_allclose(out, raw.rows[keep] / t)
    assert np.all(out >= 1.0)
    div = pot_transform(raw, PotConfig(*t, scale_divisors=(2.0, 4.0)))
    np.testing.assert_allclose(div, raw.rows[keep] / [2.0, 4.0])


def test_pot_idempotent(claims):
    raw = load_csv(claims[0])
    once = pot_transform(raw, PotConfig(*np.quantile(raw.rows, 0.3, axis=0)))
    again = pot_transform(RawDataset(once), PotConfig(*once.min(axis=0), scale_divisors=(1.0, 1.0)))
    np.testing.assert_array_equal(again, once)


def test_pot_empty_result(claims):
    raw = load_csv(claims[0])
    with pytest.raises(DegenerateDataError):
        pot_transform(raw, PotConfig(1e12, 1e12))
    with pytest.raises(ValueError):
        PotConfig(0.0, 1.0)


def test_pot_retained_marginal_is_pareto_like(claims):
    raw = load_csv(claims[0])
    out = pot_transform(raw, PotConfig(*np.quantile(raw.rows, 0.2, axis=0)))
    for j in (0, 1):
        m = pareto_mle(out[:, j])
        assert tail_linearity_r2(out[:, j], m.mu, m.sigma) > 0.98


def test_threshold_scan_finds_target(claims):
    raw = load_csv(claims[0])
    levels = np.round(np.arange(0, 1, 0.05), 10)
    rows = threshold_scan(raw, levels)
    assert len(rows) == len(levels) ** 2
    assert rows[0].retained == 1500
    target = rows[37].retained
    hits = threshold_scan(raw, levels, target=target)
    assert hits and all(r.retained == target for r in hits)
    for r in hits:
        assert len(pot_transform(raw, PotConfig(r.threshold1, r.threshold2))) == target


def test_empirical_survival_examples():
    xs, level = empirical_survival([1, 2, 3])
    assert level[list(xs).index(2)] == pytest.approx(2 / 3)
    assert level[0] == 1.0 and level[-1] == pytest.approx(1 / 3)
    xs, level = empirical_survival([2, 1, 2, 5])
    np.testing.assert_array_equal(xs, [1, 2, 5])
    np.testing.assert_allclose(level, [1, 0.75, 0.25])
    with pytest.raises(DegenerateDataError):
        empirical_survival([])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60))
def test_empirical_survival_monotone(values):
    xs, level = empirical_survival(values)
    assert np.all(np.diff(level) < 0)
    assert level[0] == 1.0
    assert level[-1] == pytest.approx(np.sum(np.array(values) == xs[-1]) / len(values))


def test_ks_distance_matches_scipy():
    p = ParetoParams(0, 1, 2)
    x = pareto_sample(p, 300, seed=1)
    d = ks_distance(x, lambda v: pareto_sf(p, v))
    assert d == pytest.approx(stats.kstest(x, lambda t: 1 - pareto_sf(p, t)).statistic, rel=1e-12)
    with pytest.raises(DegenerateDataError):
        ks_distance([], lambda v: v)


def test_density_grid_single_point():
    cells = density_grid_2d([(1.0, 2.0)], (2, 2))
    masses = [c[4] for c in cells]
    assert sorted(masses) == [0, 0, 0, 1]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 500), st.integers(2, 30), st.integers(2, 30))
def test_density_grid_total_mass(seed, n, b1, b2):
    x = bvpa_sample(XI2, n, seed=seed)
    cells = density_grid_2d(x, (b1, b2))
    assert len(cells) == b1 * b2
    masses = np.array([c[4] for c in cells])
    assert np.all(masses >= 0)
    assert abs(masses.sum() - 1.0) <= 1e-12


def test_density_grid_diagonal_band_carries_singular_mass():
    p = BvpaParams(0, 0, 1, 1, 3.0, 0.3, 0.3)
    n = 20_000
    x = bvpa_sample(p, n, seed=4)
    x = x[(x[:, 0] < 1) & (x[:, 1] < 1)]
    cells = density_grid_2d(x, (10, 10))
    band = sum(m for lo1, hi1, lo2, hi2, m in cells if lo1 < hi2 and lo2 < hi1)
    # every tie sits in a cell the diagonal crosses, so the band mass is at least the tie share
    ties = np.mean(x[:, 0] == x[:, 1])
    assert ties > 0.8 and band >= ties


def test_density_grid_errors():
    with pytest.raises(DegenerateDataError):
        density_grid_2d(np.empty((0, 2)))
    with pytest.raises(ValueError):
        density_grid_2d([(1, 2)], (1, 5))


def test_grid_csv_round_trips():
    cells = density_grid_2d(bvpa_sample(XI2, 100, seed=1), (3, 4))
    rows = list(csv.reader(io.StringIO(grid_to_csv(cells))))
    assert tuple(rows[0]) == GRID_COLUMNS
    back = np.array(rows[1:], dtype=float)
    np.testing.assert_array_equal(back, np.array(cells))


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    target = tmp_path / "out.csv"
    atomic_write_text(target, "ok\n")
    with pytest.raises(TypeError):
        atomic_write_text(target, None)
    assert target.read_text() == "ok\n"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["out.csv"]
