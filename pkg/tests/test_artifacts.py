"""Tests for on-disk artifact round trips."""

import csv
import hashlib
import os

import numpy as np
import pytest

from donut.artifacts import (
    atomic_write_json,
    atomic_write_text,
    read_embeddings_csv,
    read_features_csv,
    read_forecasts_csv,
    read_json,
    read_series_csv,
    read_weights_csv,
    sha256_file,
    write_embeddings_csv,
    write_features_csv,
    write_forecasts_csv,
    write_series_csv,
    write_table_csv,
    write_weights_csv,
)
from donut.model_pool import MODEL_ORDER, ForecastMatrix
from donut.stat_features import FEATURE_NAMES, StatFeatures


def _matrices(rng, n=3, h=6):
    out = []
    for i in range(n):
        flags = rng.random(len(MODEL_ORDER)) < 0.2
        out.append(ForecastMatrix(
            series_id=f"S{i}",
            b=rng.normal(100.0, 10.0, (len(MODEL_ORDER), h)),
            fallback_flags=flags,
        ))
    return out


def test_atomic_write_creates_and_overwrites(tmp_path):
    p = tmp_path / "sub" / "a.txt"
    atomic_write_text(p, "one\n")
    assert p.read_text() == "one\n"
    atomic_write_text(p, "two\n")
    assert p.read_text() == "two\n"
    assert [f for f in os.listdir(p.parent) if f.startswith(".")] == []


def test_atomic_write_failure_keeps_old_content(tmp_path):
    p = tmp_path / "a.txt"
    atomic_write_text(p, "keep me\n")
    with pytest.raises(TypeError):
        atomic_write_text(p, object())
    assert p.read_text() == "keep me\n"
    assert [f for f in os.listdir(tmp_path) if f.startswith(".")] == []


def test_json_round_trip_sorted_and_nan(tmp_path):
    p = tmp_path / "x.json"
    atomic_write_json(p, {"b": 2, "a": [1.5, float("nan")]})
    text = p.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")
    back = read_json(p)
    assert back["b"] == 2
    assert back["a"][0] == 1.5
    assert np.isnan(back["a"][1])


def test_sha256_matches_hashlib(tmp_path):
    p = tmp_path / "blob.bin"
    payload = b"donut" * 1000
    p.write_bytes(payload)
    assert sha256_file(p) == hashlib.sha256(payload).hexdigest()


def test_forecasts_round_trip_exact(tmp_path):
    rng = np.random.default_rng(0)
    mats = _matrices(rng)
    p = tmp_path / "forecasts.csv"
    write_forecasts_csv(p, mats)
    back = read_forecasts_csv(p)
    assert set(back) == {"S0", "S1", "S2"}
    for fm in mats:
        np.testing.assert_array_equal(back[fm.series_id].b, fm.b)
        np.testing.assert_array_equal(back[fm.series_id].fallback_flags,
                                      fm.fallback_flags)


def test_forecasts_missing_model_rejected(tmp_path):
    rng = np.random.default_rng(1)
    p = tmp_path / "forecasts.csv"
    write_forecasts_csv(p, _matrices(rng, n=1))
    lines = p.read_text().splitlines(keepends=True)
    p.write_text("".join(lines[1:]))
    with pytest.raises(ValueError, match="missing forecasts"):
        read_forecasts_csv(p)


def test_features_round_trip_with_missing(tmp_path):
    rng = np.random.default_rng(2)
    n = len(FEATURE_NAMES)
    missing = np.zeros(n, bool)
    missing[[4, 17]] = True
    feats = StatFeatures(values=rng.normal(0, 1, n), missing=missing)
    p = tmp_path / "features.csv"
    write_features_csv(p, {"S9": feats})
    back = read_features_csv(p)["S9"]
    np.testing.assert_array_equal(back.missing, missing)
    assert back.values[4] == 0.0
    assert back.values[17] == 0.0
    ok = ~missing
    np.testing.assert_array_equal(back.values[ok], feats.values[ok])


def test_features_header_checked(tmp_path):
    p = tmp_path / "features.csv"
    p.write_text("id,bogus\nS1,0.5\n")
    with pytest.raises(ValueError, match="unexpected feature columns"):
        read_features_csv(p)


def test_embeddings_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    emb = {"S1": rng.normal(0, 1, 32), "S2": rng.normal(0, 1, 32)}
    p = tmp_path / "emb.csv"
    write_embeddings_csv(p, emb)
    back = read_embeddings_csv(p)
    for sid in emb:
        np.testing.assert_array_equal(back[sid], emb[sid])


def test_weights_round_trip_and_header(tmp_path):
    rng = np.random.default_rng(4)
    w = {"S1": rng.dirichlet(np.ones(len(MODEL_ORDER)))}
    p = tmp_path / "weights.csv"
    write_weights_csv(p, w)
    with open(p, newline="") as fh:
        header = next(csv.reader(fh))
    assert header == ["id", *(f"w_{m.value}" for m in MODEL_ORDER)]
    np.testing.assert_array_equal(read_weights_csv(p)["S1"], w["S1"])


def test_series_round_trip_ragged(tmp_path):
    series = {"A": np.array([1.0, 2.0]), "B": np.arange(5.0)}
    p = tmp_path / "series.csv"
    write_series_csv(p, series)
    back = read_series_csv(p)
    np.testing.assert_array_equal(back["A"], series["A"])
    np.testing.assert_array_equal(back["B"], series["B"])


def test_table_formats_floats_only(tmp_path):
    p = tmp_path / "table.csv"
    write_table_csv(p, ["id", "x", "label"],
                    [["S1", 0.1, "keep"], ["S2", 2.0, "raw"]])
    with open(p, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["id", "x", "label"]
    assert rows[1] == ["S1", repr(0.1), "keep"]
    assert float(rows[1][1]) == 0.1
    assert rows[2][2] == "raw"
