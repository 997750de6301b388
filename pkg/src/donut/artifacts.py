"""Flat-file artifact IO: atomic writes, digests, and the CSV/JSON
schemas shared by the pipeline stages. Floats are written with repr so
float64 values round-trip exactly and reruns are byte-stable."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .model_pool import MODEL_ORDER, ForecastMatrix, ModelId
from .stat_features import FEATURE_NAMES, StatFeatures


def atomic_write_text(path, text):
    """Write via a same-directory temp file + rename so readers never
    observe a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path, payload):
    atomic_write_text(path, json.dumps(payload, indent=1, sort_keys=True,
                                       allow_nan=True) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _csv_text(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _fmt(x):
    return repr(float(x))


def write_forecasts_csv(path, matrices):
    """Rows: id, model_name, v1..vh, fallback (0/1)."""
    rows = []
    for fm in matrices:
        for i, model in enumerate(MODEL_ORDER):
            rows.append([fm.series_id, model.value,
                         *(_fmt(v) for v in fm.b[i]),
                         int(fm.fallback_flags[i])])
    atomic_write_text(path, _csv_text(rows))


def read_forecasts_csv(path):
    """Returns {series_id: ForecastMatrix}; horizons may differ per id."""
    per_id = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            sid, model = row[0], ModelId(row[1])
            per_id.setdefault(sid, {})[model] = (
                np.array([float(v) for v in row[2:-1]]), bool(int(row[-1])))
    out = {}
    for sid, models in per_id.items():
        if set(models) != set(MODEL_ORDER):
            missing = [m.value for m in MODEL_ORDER if m not in models]
            raise ValueError(f"{sid}: missing forecasts for {missing}")
        b = np.stack([models[m][0] for m in MODEL_ORDER])
        flags = np.array([models[m][1] for m in MODEL_ORDER], dtype=bool)
        out[sid] = ForecastMatrix(series_id=sid, b=b, fallback_flags=flags)
    return out


def write_features_csv(path, feature_map):
    """feature_map: {series_id: StatFeatures}; missing entries are
    written as nan and re-flagged on read."""
    rows = [["id", *FEATURE_NAMES]]
    for sid, feats in feature_map.items():
        vals = [float("nan") if feats.missing[i] else feats.values[i]
                for i in range(len(FEATURE_NAMES))]
        rows.append([sid, *(_fmt(v) for v in vals)])
    atomic_write_text(path, _csv_text(rows))


def read_features_csv(path):
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[1:] != list(FEATURE_NAMES):
            raise ValueError(f"{path}: unexpected feature columns")
        for row in reader:
            if not row:
                continue
            vals = np.array([float(v) for v in row[1:]])
            missing = ~np.isfinite(vals)
            out[row[0]] = StatFeatures(values=np.where(missing, 0.0, vals),
                                       missing=missing)
    return out


def write_embeddings_csv(path, embedding_map):
    width = len(next(iter(embedding_map.values())))
    rows = [["id", *(f"emb_{i:02d}" for i in range(width))]]
    for sid, emb in embedding_map.items():
        rows.append([sid, *(_fmt(v) for v in emb)])
    atomic_write_text(path, _csv_text(rows))


def read_embeddings_csv(path):
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if row:
                out[row[0]] = np.array([float(v) for v in row[1:]])
    return out


def write_weights_csv(path, weight_map):
    rows = [["id", *(f"w_{m.value}" for m in MODEL_ORDER)]]
    for sid, w in weight_map.items():
        rows.append([sid, *(_fmt(v) for v in w)])
    atomic_write_text(path, _csv_text(rows))


def read_weights_csv(path):
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if row:
                out[row[0]] = np.array([float(v) for v in row[1:]])
    return out


def write_series_csv(path, series_map, prefix="v"):
    """Generic id -> vector table (final forecasts, holdouts)."""
    rows = []
    for sid, values in series_map.items():
        rows.append([sid, *(_fmt(v) for v in values)])
    atomic_write_text(path, _csv_text(rows))


def read_series_csv(path):
    out = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if row:
                out[row[0]] = np.array([float(v) for v in row[1:]])
    return out


def write_table_csv(path, header, rows):
    body = [list(header)]
    for row in rows:
        body.append([_fmt(v) if isinstance(v, float) else v for v in row])
    atomic_write_text(path, _csv_text(body))
