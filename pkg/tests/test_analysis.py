"""Correlation analysis tests: formula oracle, windows, matrix, report export."""

from __future__ import annotations

import math

import numpy as np
import pytest

from vitalcast.emotion_ingest import AlignedDataset
from vitalcast.errors import TooFewPairs, UnknownFeature, ZeroVariance
from vitalcast.analysis import (
    WindowCorrelation,
    correlation_matrix,
    export_report,
    pearson,
    read_matrix_csv,
    read_windows_csv,
    tradeoff_series,
    windowed_correlation,
)


def pearson_oracle(x, y) -> float:
    """Direct formula in pure Python floats."""
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return num / math.sqrt(sxx * syy)


def dataset(columns: dict, duration: int) -> AlignedDataset:
    grid = np.arange(duration + 1, dtype=np.int64)
    return AlignedDataset(grid, {k: np.asarray(v, dtype=np.float64) for k, v in columns.items()})


# --- pearson -------------------------------------------------------------------------

def test_exact_linear_relations():
    assert pearson([1, 2, 3], [2, 4, 6]) == 1.0
    assert pearson([1, 2, 3], [3, 2, 1]) == -1.0


def test_textbook_value():
    assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-15)


def test_too_few_pairs():
    with pytest.raises(TooFewPairs):
        pearson([1.0], [2.0])


def test_zero_variance():
    with pytest.raises(ZeroVariance):
        pearson([1, 1, 1], [1, 2, 3])


def test_matches_direct_formula_on_random_vectors():
    rng = np.random.default_rng(10)
    for _ in range(200):
        n = int(rng.integers(2, 100))
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        assert abs(pearson(x, y) - pearson_oracle(x.tolist(), y.tolist())) < 1e-12


def test_symmetry_is_exact():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 60))
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        assert pearson(x, y) == pearson(y, x)


def test_affine_scale_sign_property():
    rng = np.random.default_rng(12)
    for _ in range(50):
        n = int(rng.integers(3, 60))
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        a = float(rng.uniform(-5, 5)) or 1.0
        b = float(rng.uniform(-10, 10))
        r = pearson(x, y)
        assert pearson(a * x + b, y) == pytest.approx(math.copysign(1.0, a) * r, abs=1e-12)


# --- windowed correlation --------------------------------------------------------------

def test_linear_relation_gives_unit_windows():
    power = np.arange(121, dtype=np.float64) % 60 + np.arange(121) * 0.01  # non-constant per window
    data = dataset({"power": power, "valence": 2.0 * power}, duration=120)
    windows = windowed_correlation(data, ("power", "valence"), window_s=60, step_s=60)
    assert [(w.start_s, w.end_s) for w in windows] == [(0, 60), (60, 120)]
    assert all(w.r == 1.0 for w in windows)
    assert all(w.n_pairs == 60 for w in windows)


def test_constant_window_reports_absent_r_with_pairs():
    power = np.concatenate([np.full(60, 150.0), np.arange(61, dtype=np.float64)])
    valence = np.arange(121, dtype=np.float64)
    data = dataset({"power": power, "valence": valence}, duration=120)
    windows = windowed_correlation(data, ("power", "valence"))
    assert windows[0].r is None
    assert windows[0].reason == "zero_variance"
    assert windows[0].n_pairs == 60
    assert windows[1].r == 1.0


def test_gaps_shrink_n_pairs():
    power = np.arange(121, dtype=np.float64)
    valence = 3.0 * power
    valence[10:20] = np.nan
    data = dataset({"power": power, "valence": valence}, duration=120)
    windows = windowed_correlation(data, ("power", "valence"))
    assert windows[0].n_pairs == 50
    assert windows[0].r == 1.0


def test_unknown_feature():
    data = dataset({"power": np.arange(121, dtype=np.float64)}, duration=120)
    with pytest.raises(UnknownFeature):
        windowed_correlation(data, ("power", "nope"))


def test_short_tail_window_dropped():
    data = dataset({"a": np.arange(91, dtype=np.float64), "b": np.arange(91, dtype=np.float64)}, duration=90)
    windows = windowed_correlation(data, ("a", "b"), window_s=60, step_s=60)
    assert [(w.start_s, w.end_s) for w in windows] == [(0, 60)]


# --- correlation matrix -----------------------------------------------------------------

def test_matrix_anticorrelated_pair():
    x = np.arange(10, dtype=np.float64)
    report = correlation_matrix(dataset({"x": x, "y": -x}, duration=9))
    assert report.value("x", "y") == -1.0
    assert report.value("x", "x") == 1.0
    assert report.value("y", "y") == 1.0


def test_matrix_absent_feature_gets_reason():
    x = np.arange(10, dtype=np.float64)
    empty = np.full(10, np.nan)
    report = correlation_matrix(dataset({"x": x, "void": empty}, duration=9))
    assert report.value("x", "void") is None
    assert report.reasons[("x", "void")] == "too_few_pairs"
    assert report.value("void", "void") is None


def test_matrix_matches_pairwise_oracle():
    rng = np.random.default_rng(13)
    cols = {name: rng.normal(size=50) for name in ("a", "b", "c")}
    report = correlation_matrix(dataset(cols, duration=49))
    for i, a in enumerate(("a", "b", "c")):
        for j, b in enumerate(("a", "b", "c")):
            expected = 1.0 if i == j else pearson_oracle(cols[a].tolist(), cols[b].tolist())
            assert abs(report.matrix[i, j] - expected) < 1e-12
    assert np.allclose(report.matrix, report.matrix.T, equal_nan=True)


def test_matrix_complete_case_per_pair():
    a = np.arange(20, dtype=np.float64)
    b = 2 * a
    b[:5] = np.nan
    report = correlation_matrix(dataset({"a": a, "b": b}, duration=19))
    assert report.value("a", "b") == 1.0  # over the 15 complete pairs


# --- tradeoff series ---------------------------------------------------------------------

def test_tradeoff_alpha_one_is_raw_alignment():
    att = np.array([5.0, np.nan, 7.0, 9.0])
    val = np.array([1.0, 2.0, np.nan, 4.0])
    data = AlignedDataset(np.arange(4), {"attention": att, "valence": val})
    out = tradeoff_series(data, ("attention", "valence"), alpha=1.0)
    assert np.array_equal(out["attention"], att, equal_nan=True)
    assert np.array_equal(out["valence"], val, equal_nan=True)


def test_tradeoff_constant_columns():
    data = AlignedDataset(np.arange(5), {"attention": np.full(5, 3.0), "valence": np.full(5, 8.0)})
    out = tradeoff_series(data, ("attention", "valence"), alpha=0.2)
    assert (out["attention"] == 3.0).all()
    assert (out["valence"] == 8.0).all()


def test_tradeoff_matches_recurrence_oracle_and_keeps_gaps():
    values = np.array([10.0, np.nan, 20.0, 30.0, np.nan])
    data = AlignedDataset(np.arange(5), {"a": values, "b": values.copy()})
    out = tradeoff_series(data, ("a", "b"), alpha=0.5)
    state = 10.0
    expected = [10.0]
    for x in (20.0, 30.0):
        state = state + 0.5 * (x - state)
        expected.append(state)
    present = out["a"][np.isfinite(out["a"])]
    assert present.tolist() == expected
    assert np.isnan(out["a"][[1, 4]]).all()


def test_tradeoff_unknown_feature():
    data = AlignedDataset(np.arange(3), {"a": np.arange(3, dtype=np.float64)})
    with pytest.raises(UnknownFeature):
        tradeoff_series(data, ("a", "missing"))


# --- export ---------------------------------------------------------------------------------

def make_report():
    rng = np.random.default_rng(14)
    cols = {"power": rng.normal(size=130), "valence": rng.normal(size=130)}
    data = dataset(cols, duration=129)
    windows = windowed_correlation(data, ("power", "valence"))
    return correlation_matrix(data, windows=windows), tradeoff_series(data, ("power", "valence"), 0.5)


def test_export_writes_fixed_names(tmp_path):
    report, tradeoff = make_report()
    written = export_report(report, tradeoff, tmp_path, manifest={"seed": 1})
    assert sorted(p.name for p in written) == ["matrix.csv", "session.json", "tradeoff.csv", "windows.csv"]


def test_export_empty_windows_header_only(tmp_path):
    report, tradeoff = make_report()
    report.windows = []
    export_report(report, tradeoff, tmp_path)
    assert (tmp_path / "windows.csv").read_text().strip() == "start_s,end_s,feature_a,feature_b,r,n_pairs"


def test_export_is_deterministic(tmp_path):
    report, tradeoff = make_report()
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    export_report(report, tradeoff, a_dir, manifest={"seed": 1})
    export_report(report, tradeoff, b_dir, manifest={"seed": 1})
    for name in ("matrix.csv", "windows.csv", "tradeoff.csv", "session.json"):
        assert (a_dir / name).read_bytes() == (b_dir / name).read_bytes()


def test_export_roundtrips_to_memory(tmp_path):
    report, tradeoff = make_report()
    export_report(report, tradeoff, tmp_path, manifest={"seed": 1})
    features, matrix = read_matrix_csv(tmp_path / "matrix.csv")
    assert features == report.features
    assert np.array_equal(matrix, report.matrix, equal_nan=True)  # repr round-trip is exact
    windows = read_windows_csv(tmp_path / "windows.csv")
    assert [(w.start_s, w.r, w.n_pairs) for w in windows] == [
        (w.start_s, w.r, w.n_pairs) for w in report.windows
    ]
    import json

    session = json.loads((tmp_path / "session.json").read_text())
    assert session["manifest"] == {"seed": 1}
    assert session["matrix"]["power"]["valence"] == report.value("power", "valence")


def test_session_includes_undefined_cells(tmp_path):
    x = np.arange(10, dtype=np.float64)
    report = correlation_matrix(dataset({"x": x, "flat": np.full(10, 2.0)}, duration=9))
    export_report(report, {}, tmp_path)
    import json

    session = json.loads((tmp_path / "session.json").read_text())
    assert {"feature_a": "flat", "feature_b": "flat", "reason": "zero_variance"} in session["undefined_cells"]
    assert {"feature_a": "x", "feature_b": "flat", "reason": "zero_variance"} in session["undefined_cells"]
