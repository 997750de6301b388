"""Command-line pipeline: stage orchestration, manifests, and reports.

Every artifact is flat CSV/JSON written atomically; a manifest of
content digests makes reruns skip stages whose inputs, outputs, and
configuration are unchanged. With a fixed seed and --threads 1 the
whole output tree is byte-reproducible (the manifest stores no
timestamps; timings are printed, not persisted).
"""

from __future__ import annotations

import argparse
import functools
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict, field, replace
from pathlib import Path

import numpy as np

from . import artifacts as art
from .analysis import (cluster_features, cluster_importance, cut_clusters,
                       importance_table, owa_breakdown)
from .autoencoder import (AeConfig, LstmAutoencoder, desk_ae_config, encode,
                          train_autoencoder)
from .corpus import (Corpus, CorpusError, PeriodName, SeriesType, load_corpus,
                     save_corpus, split)
from .metrics import (MetricError, mase, mase_denominator, naive2, owa,
                      owa_single, smape)
from .model_pool import MODEL_ORDER, ModelId, forecast_all
from .oracle import greedy_pool, optimal_weights
from .stat_features import FEATURE_NAMES, extract_stat_features
from .synthetic import make_synthetic
from .weight_net import (Standardizer, WeightNet, WeightNetConfig, combine,
                         desk_weightnet_config, ensemble_usage_stats,
                         make_training_row, train_weight_net)

SCHEMA_VERSION = 1


class ConfigError(Exception):
    pass


class StageFailed(Exception):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    work_dir: str
    corpus_dir: str = ""          # empty: synthesize into the work dir
    ae: AeConfig = field(default_factory=AeConfig)
    weightnet: WeightNetConfig = field(default_factory=WeightNetConfig)
    pool: tuple = tuple(m.value for m in MODEL_ORDER)
    seed: int = 0
    threads: int = 1
    desk_scale: bool = False
    synth_n: int = 160

    def validate(self):
        if not self.pool:
            raise ConfigError("pool must be non-empty")
        for name in self.pool:
            try:
                ModelId(name)
            except ValueError:
                raise ConfigError(f"unknown pool model {name!r}") from None
        if self.corpus_dir and not Path(self.corpus_dir).is_dir():
            raise ConfigError(f"corpus dir {self.corpus_dir!r} not found")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.synth_n < 2:
            raise ConfigError("synth_n must be >= 2")

    def semantic_hash(self):
        """Hash of everything that affects artifact bytes; paths and
        parallelism degree are excluded (results are order-restored)."""
        payload = {"schema": SCHEMA_VERSION, "ae": asdict(self.ae),
                   "weightnet": asdict(self.weightnet),
                   "pool": list(self.pool), "seed": self.seed,
                   "desk_scale": self.desk_scale, "synth_n": self.synth_n}
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def desk_pipeline_config(**overrides):
    base = dict(ae=desk_ae_config(), weightnet=desk_weightnet_config(),
                desk_scale=True)
    base.update(overrides)
    return PipelineConfig(**base)


def stage_seed(master, stage):
    blob = f"{master}:{stage}".encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big") >> 1


class Manifest:
    def __init__(self, work_dir, config_hash):
        self.path = Path(work_dir) / "manifest.json"
        self.work_dir = Path(work_dir)
        self.data = {"schema_version": SCHEMA_VERSION,
                     "config_hash": config_hash, "seeds": {}, "stages": {}}
        self.timings = {}
        if self.path.exists():
            try:
                old = art.read_json(self.path)
                if (old.get("schema_version") == SCHEMA_VERSION
                        and old.get("config_hash") == config_hash):
                    self.data = old
                    self.data.setdefault("seeds", {})
                    self.data.setdefault("stages", {})
            except (json.JSONDecodeError, OSError):
                pass  # treat unreadable manifests as absent

    def _rel(self, path):
        return os.path.relpath(path, self.work_dir)

    def up_to_date(self, stage, inputs, outputs):
        entry = self.data["stages"].get(stage)
        if entry is None:
            return False
        try:
            ins = {self._rel(p): art.sha256_file(p) for p in inputs}
        except OSError:
            return False
        if entry.get("inputs") != ins:
            return False
        for rel, digest in entry.get("outputs", {}).items():
            p = self.work_dir / rel
            if not p.exists() or art.sha256_file(p) != digest:
                return False
        if set(entry.get("outputs", {})) != {self._rel(p) for p in outputs}:
            return False
        return True

    def record(self, stage, inputs, outputs, seed=None):
        self.data["stages"][stage] = {
            "inputs": {self._rel(p): art.sha256_file(p) for p in inputs},
            "outputs": {self._rel(p): art.sha256_file(p) for p in outputs},
        }
        if seed is not None:
            self.data["seeds"][stage] = seed
        self.save()

    def save(self):
        art.atomic_write_json(self.path, self.data)


def run_stage(manifest, stage, inputs, outputs, fn, seed=None, log=None):
    inputs = [Path(p) for p in inputs]
    outputs = [Path(p) for p in outputs]
    if manifest.up_to_date(stage, inputs, outputs):
        manifest.timings[stage] = "skipped"
        if log:
            log(f"[{stage}] up to date, skipped")
        return False
    t0 = time.time()
    try:
        fn()
    except Exception as exc:
        raise StageFailed(stage, exc) from exc
    for out in outputs:
        if not out.exists():
            raise StageFailed(stage, f"expected output {out} was not written")
    manifest.record(stage, inputs, outputs, seed=seed)
    manifest.timings[stage] = time.time() - t0
    if log:
        log(f"[{stage}] done in {manifest.timings[stage]:.1f}s")
    return True


def _pmap(fn, items, threads):
    """Order-preserving map, optionally across processes."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        chunk = max(1, len(items) // (threads * 4))
        return list(pool.map(fn, items, chunksize=chunk))


def _corpus_paths(corpus_dir):
    d = Path(corpus_dir)
    return d / "train.csv", d / "meta.csv"


def _load_corpus(corpus_dir):
    train, meta = _corpus_paths(corpus_dir)
    return load_corpus(train, meta)


def _forecast_one(packed):
    sid, values, m, h = packed
    fit = values[:-h]
    return forecast_all(fit, m, h, sid)


def _features_one(packed):
    sid, values, m, h = packed
    return sid, extract_stat_features(values[:-h], m)


def _pack(corpus):
    return [(ts.id, ts.values, ts.period.m, ts.period.h) for ts in corpus]


# ---------------------------------------------------------------- stages

def stage_synth(cfg, corpus_dir):
    corpus = make_synthetic(cfg.synth_n, seed=stage_seed(cfg.seed, "synth"))
    train, meta = _corpus_paths(corpus_dir)
    generators = {ts.id: ts.id.split("-")[1] for ts in corpus}
    save_corpus(corpus, train, meta, extra_meta={"generator": generators})


def stage_forecast(cfg, corpus, out_path):
    matrices = _pmap(_forecast_one, _pack(corpus), cfg.threads)
    art.write_forecasts_csv(out_path, matrices)


def stage_features(cfg, corpus, out_path):
    pairs = _pmap(_features_one, _pack(corpus), cfg.threads)
    art.write_features_csv(out_path, dict(pairs))


def stage_train_ae(cfg, corpus, out_path):
    fits = [ts.values[:-ts.period.h] for ts in corpus]
    model = train_autoencoder(fits, cfg.ae, seed=stage_seed(cfg.seed, "ae"))
    art.atomic_write_json(out_path, model.to_state())


def stage_encode(cfg, corpus, ae_path, out_path):
    model = LstmAutoencoder.from_state(art.read_json(ae_path))
    embeddings = {}
    for ts in corpus:
        embeddings[ts.id] = encode(model, ts.values[:-ts.period.h])
    art.write_embeddings_csv(out_path, embeddings)


def _assemble_rows(corpus, features, embeddings, forecasts):
    rows = []
    for ts in corpus:
        h = ts.period.h
        fit, hold = split(ts)
        n2 = naive2(fit.values, ts.period.m, h)
        denom = mase_denominator(fit.values, ts.period.m)
        rows.append(make_training_row(
            ts.id, features.get(ts.id), embeddings.get(ts.id),
            ts.period.name, ts.series_type, forecasts[ts.id], hold,
            smape(hold, n2), mase(fit.values, ts.period.m, hold, n2), denom))
    return rows


def stage_train_weightnet(cfg, corpus, features_path, embeddings_path,
                          forecasts_path, out_path, history_path):
    rows = _assemble_rows(corpus, art.read_features_csv(features_path),
                          art.read_embeddings_csv(embeddings_path),
                          art.read_forecasts_csv(forecasts_path))
    net, standardizer, history = train_weight_net(
        rows, cfg.weightnet, seed=stage_seed(cfg.seed, "weightnet"))
    state = net.to_state()
    state["standardizer"] = standardizer.to_state()
    art.atomic_write_json(out_path, state)
    art.write_table_csv(history_path, ["epoch", "train_owa", "val_owa"],
                        [(e, float(tr), float(va)) for e, tr, va in history])


def _load_net(path):
    state = art.read_json(path)
    return (WeightNet.from_state(state),
            Standardizer.from_state(state["standardizer"]))


def stage_predict(cfg, corpus, net_path, features_path, embeddings_path,
                  forecasts_path, weights_path, finals_path):
    net, standardizer = _load_net(net_path)
    rows = _assemble_rows(corpus, art.read_features_csv(features_path),
                          art.read_embeddings_csv(embeddings_path),
                          art.read_forecasts_csv(forecasts_path))
    raw = np.stack([r.features_raw for r in rows])
    X = standardizer.transform(raw)
    W, _ = net.forward(X, training=False)
    weights = {}
    finals = {}
    for row, w in zip(rows, W):
        weights[row.series_id] = w
        finals[row.series_id] = combine(w, row.forecasts)
    art.write_weights_csv(weights_path, weights)
    art.write_series_csv(finals_path, finals)


def stage_evaluate(cfg, corpus, finals_path, weights_path, eval_json,
                   per_series_path):
    finals = art.read_series_csv(finals_path)
    per_rows = []
    method = []
    reference = []
    for ts in corpus:
        fit, hold = split(ts)
        m = ts.period.m
        fc = finals[ts.id]
        n2 = naive2(fit.values, m, ts.period.h)
        s = smape(hold, fc)
        ms = mase(fit.values, m, hold, fc)
        s_ref = smape(hold, n2)
        m_ref = mase(fit.values, m, hold, n2)
        per_rows.append((ts.id, s, ms, s_ref, m_ref,
                         owa_single(s, ms, s_ref, m_ref)))
        method.append((s, ms))
        reference.append((s_ref, m_ref))
    art.write_table_csv(per_series_path,
                        ["id", "smape", "mase", "smape_naive2",
                         "mase_naive2", "owa"], per_rows)
    weights = art.read_weights_csv(weights_path)
    usage = ensemble_usage_stats(np.stack([weights[r[0]] for r in per_rows]))
    payload = {
        "n_series": len(per_rows),
        "pooled_owa": owa(np.array(method), np.array(reference)),
        "mean_per_series_owa": float(np.mean([r[5] for r in per_rows])),
        "mean_smape": float(np.mean([r[1] for r in per_rows])),
        "mean_mase": float(np.mean([r[2] for r in per_rows])),
        "effective_size_histogram": {str(k): v for k, v in
                                     usage["histogram"].items()},
        "mean_weight": {m.value: usage["mean_weight"][m]
                        for m in MODEL_ORDER},
    }
    art.atomic_write_json(eval_json, payload)


def stage_oracle(cfg, corpus, forecasts_path, out_path):
    forecasts = art.read_forecasts_csv(forecasts_path)
    pool_idx = [i for i, m in enumerate(MODEL_ORDER) if m.value in cfg.pool]
    rows = []
    for ts in corpus:
        fit, hold = split(ts)
        denom = mase_denominator(fit.values, ts.period.m)
        B = forecasts[ts.id].b[pool_idx, :]
        sol = optimal_weights(B, hold, mase_denom=denom)
        w_full = np.zeros(len(MODEL_ORDER))
        w_full[pool_idx] = sol.x
        rows.append((ts.id, float(sol.objective), float(sol.e_loss_mase),
                     sol.active_count, *map(float, w_full)))
    art.write_table_csv(out_path,
                        ["id", "objective", "e_loss_mase", "active_count",
                         *(f"w_{m.value}" for m in MODEL_ORDER)], rows)


def stage_greedy(cfg, corpus, forecasts_path, out_path, max_size=None):
    forecasts = art.read_forecasts_csv(forecasts_path)
    pool_idx = [i for i, m in enumerate(MODEL_ORDER) if m.value in cfg.pool]
    instances = []
    for ts in corpus:
        fit, hold = split(ts)
        denom = mase_denominator(fit.values, ts.period.m)
        instances.append((forecasts[ts.id].b[pool_idx, :], hold, denom))
    order, curve = greedy_pool(instances, max_size=max_size)
    rows = [(step + 1, MODEL_ORDER[pool_idx[c]].value, float(curve[step]))
            for step, c in enumerate(order)]
    art.write_table_csv(out_path, ["pool_size", "added_model", "mean_loss"],
                        rows)


# ---------------------------------------------------------------- report

def _svg_header(width, height, title):
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">',
            f'<title>{title}</title>',
            f'<rect width="{width}" height="{height}" fill="white"/>',
            f'<text x="12" y="22" font-family="sans-serif" font-size="15" '
            f'font-weight="bold">{title}</text>']


def svg_bar_chart(title, labels, values):
    width, height = 640, 360
    top, bottom, left = 40, 60, 60
    span = max(max(values), 0.0) or 1.0
    parts = _svg_header(width, height, title)
    n = len(values)
    band = (width - left - 20) / max(n, 1)
    for i, (lab, val) in enumerate(zip(labels, values)):
        bh = (height - top - bottom) * (val / span)
        x = left + i * band
        y = height - bottom - bh
        parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" '
                     f'width="{band * 0.8:.2f}" height="{bh:.2f}" '
                     f'fill="#4878a8"/>')
        parts.append(f'<text x="{x + band * 0.4:.2f}" y="{height - bottom + 14}" '
                     f'font-family="sans-serif" font-size="10" '
                     f'text-anchor="middle">{lab}</text>')
        parts.append(f'<text x="{x + band * 0.4:.2f}" y="{y - 4:.2f}" '
                     f'font-family="sans-serif" font-size="10" '
                     f'text-anchor="middle">{val:.3f}</text>')
    parts.append('</svg>')
    return "\n".join(parts) + "\n"


def _heat_color(v):
    # 0 -> pale blue, 1 -> deep red
    v = min(max(v, 0.0), 1.0)
    r = int(round(235 * v + 220 * (1 - v)))
    g = int(round(80 * v + 230 * (1 - v)))
    b = int(round(70 * v + 250 * (1 - v)))
    return f"#{r:02x}{g:02x}{b:02x}"


def svg_heatmap(title, row_labels, col_labels, cells):
    """cells: {(row, col): value}; absent cells are left gray."""
    cw, ch, left, top = 88, 34, 110, 60
    width = left + cw * len(col_labels) + 20
    height = top + ch * len(row_labels) + 30
    vals = [v for v in cells.values() if v is not None]
    lo = min(vals) if vals else 0.0
    hi = max(vals) if vals else 1.0
    spread = (hi - lo) or 1.0
    parts = _svg_header(width, height, title)
    for j, col in enumerate(col_labels):
        parts.append(f'<text x="{left + j * cw + cw / 2:.2f}" y="{top - 8}" '
                     f'font-family="sans-serif" font-size="11" '
                     f'text-anchor="middle">{col}</text>')
    for i, row in enumerate(row_labels):
        parts.append(f'<text x="{left - 8}" y="{top + i * ch + ch / 2 + 4:.2f}" '
                     f'font-family="sans-serif" font-size="11" '
                     f'text-anchor="end">{row}</text>')
        for j, col in enumerate(col_labels):
            v = cells.get((row, col))
            color = "#dddddd" if v is None else _heat_color((v - lo) / spread)
            parts.append(f'<rect x="{left + j * cw}" y="{top + i * ch}" '
                         f'width="{cw - 2}" height="{ch - 2}" fill="{color}"/>')
            if v is not None:
                parts.append(f'<text x="{left + j * cw + cw / 2 - 1:.2f}" '
                             f'y="{top + i * ch + ch / 2 + 4:.2f}" '
                             f'font-family="sans-serif" font-size="11" '
                             f'text-anchor="middle">{v:.3f}</text>')
    parts.append('</svg>')
    return "\n".join(parts) + "\n"


def stage_report(cfg, corpus, per_series_path, out_dir):
    out_dir = Path(out_dir)
    rows = {}
    with open(per_series_path, newline="") as fh:
        import csv as _csv
        reader = _csv.reader(fh)
        next(reader)
        for row in reader:
            rows[row[0]] = float(row[5])
    owa_values, periods, types = [], [], []
    for ts in corpus:
        owa_values.append(rows[ts.id])
        periods.append(ts.period.name)
        types.append(ts.series_type)
    bd = owa_breakdown(owa_values, periods, types)
    table = []
    for (p, t), cell in sorted(bd["cells"].items(),
                               key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        table.append((p.value, t.value, cell["n"], float(cell["mean"]),
                      float(cell["p_value"])))
    art.write_table_csv(out_dir / "breakdown.csv",
                        ["period", "type", "n", "mean_owa", "p_value"], table)
    heat = {(p.value, t.value): cell["mean"]
            for (p, t), cell in bd["cells"].items()}
    art.atomic_write_text(
        out_dir / "breakdown.svg",
        svg_heatmap("Mean OWA by period and type",
                    [p.value for p in PeriodName],
                    [t.value for t in SeriesType], heat))
    art.atomic_write_text(
        out_dir / "owa_by_period.svg",
        svg_bar_chart("Mean OWA by period",
                      [p.value for p in bd["row_means"]],
                      [float(v) for v in bd["row_means"].values()]))


# --------------------------------------------------------------- run-all

def run_all(cfg, log=None):
    cfg.validate()
    work = Path(cfg.work_dir)
    work.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(work, cfg.semantic_hash())
    if cfg.corpus_dir:
        corpus_dir = Path(cfg.corpus_dir)
    else:
        corpus_dir = work / "corpus"
        run_stage(manifest, "synth", [], list(_corpus_paths(corpus_dir)),
                  lambda: stage_synth(cfg, corpus_dir),
                  seed=[cfg.seed, "synth"], log=log)
    train_csv, meta_csv = _corpus_paths(corpus_dir)
    corpus = _load_corpus(corpus_dir)

    fc = work / "forecasts.csv"
    feats = work / "features.csv"
    ae_json = work / "ae.json"
    emb = work / "embeddings.csv"
    wn = work / "wn.json"
    wn_hist = work / "wn_history.csv"
    weights = work / "weights.csv"
    finals = work / "final_forecasts.csv"
    eval_json = work / "evaluation.json"
    per_series = work / "per_series_owa.csv"
    oracle_csv = work / "oracle.csv"
    report_dir = work / "report"

    corpus_inputs = [train_csv, meta_csv]
    run_stage(manifest, "forecast", corpus_inputs, [fc],
              lambda: stage_forecast(cfg, corpus, fc), log=log)
    run_stage(manifest, "features", corpus_inputs, [feats],
              lambda: stage_features(cfg, corpus, feats), log=log)
    run_stage(manifest, "train-ae", corpus_inputs, [ae_json],
              lambda: stage_train_ae(cfg, corpus, ae_json),
              seed=[cfg.seed, "ae"], log=log)
    run_stage(manifest, "encode", corpus_inputs + [ae_json], [emb],
              lambda: stage_encode(cfg, corpus, ae_json, emb), log=log)
    run_stage(manifest, "train-weightnet",
              corpus_inputs + [feats, emb, fc], [wn, wn_hist],
              lambda: stage_train_weightnet(cfg, corpus, feats, emb, fc,
                                            wn, wn_hist),
              seed=[cfg.seed, "weightnet"], log=log)
    run_stage(manifest, "predict", corpus_inputs + [wn, feats, emb, fc],
              [weights, finals],
              lambda: stage_predict(cfg, corpus, wn, feats, emb, fc,
                                    weights, finals), log=log)
    run_stage(manifest, "evaluate", corpus_inputs + [finals, weights],
              [eval_json, per_series],
              lambda: stage_evaluate(cfg, corpus, finals, weights,
                                     eval_json, per_series), log=log)
    run_stage(manifest, "oracle", corpus_inputs + [fc], [oracle_csv],
              lambda: stage_oracle(cfg, corpus, fc, oracle_csv), log=log)
    run_stage(manifest, "report", corpus_inputs + [per_series],
              [report_dir / "breakdown.csv", report_dir / "breakdown.svg",
               report_dir / "owa_by_period.svg"],
              lambda: stage_report(cfg, corpus, per_series, report_dir),
              log=log)
    return manifest


# ---------------------------------------------------------------- verify

def run_verify():
    """Fast self-checks of the core numeric contracts; returns a list of
    (name, passed, detail)."""
    results = []

    def check(name, fn):
        try:
            fn()
            results.append((name, True, ""))
        except Exception as exc:
            results.append((name, False, f"{type(exc).__name__}: {exc}"))

    def metrics_identity():
        rng = np.random.default_rng(0)
        for _ in range(20):
            train = rng.uniform(10, 20, 40)
            hold = rng.uniform(10, 20, 6)
            n2 = naive2(train, 12, 6)
            s = smape(hold, n2)
            ms = mase(train, 12, hold, n2)
            assert abs(owa_single(s, ms, s, ms) - 1.0) < 1e-15

    def smape_bounds():
        rng = np.random.default_rng(1)
        for _ in range(50):
            a = rng.normal(size=8)
            b = rng.normal(size=8)
            v = smape(a, b)
            assert 0.0 <= v <= 200.0

    def lp_dominance():
        rng = np.random.default_rng(2)
        for _ in range(50):
            B = rng.normal(0, 1, (4, 5))
            y = rng.normal(0, 1, 5)
            sol = optimal_weights(B, y)
            best = min(np.abs(B - y).mean(axis=1))
            assert sol.objective / 5 <= best + 1e-9
            assert abs(sol.x.sum() - 1) < 1e-9 and (sol.x >= 0).all()

    def weightnet_uniform():
        net = WeightNet(WeightNetConfig(hidden_dim=8), seed=0,
                        n_features=10, n_models=14)
        w, _ = net.forward(np.random.default_rng(3).normal(size=(5, 10)))
        assert np.all(w == 1.0 / 14)

    def feature_count():
        assert len(FEATURE_NAMES) == 42
        f = extract_stat_features(np.arange(40.0), 1)
        assert len(f.values) == 42

    check("metrics_identity_owa_1", metrics_identity)
    check("smape_bounds", smape_bounds)
    check("lp_combination_dominance", lp_dominance)
    check("weightnet_uniform_init", weightnet_uniform)
    check("stat_feature_count", feature_count)
    return results


# ------------------------------------------------------------------ main

def _add_common(p):
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="output file/dir")


def _build_parser():
    ap = argparse.ArgumentParser(prog="donut",
                                 description="Forecast weighting pipeline")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--n", type=int, default=160)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("ingest", help="validate + normalize a corpus")
    p.add_argument("--train", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--out", required=True)

    for name in ("forecast", "features"):
        p = sub.add_parser(name)
        p.add_argument("--corpus", required=True)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", required=True)

    p = sub.add_parser("train-ae")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--desk-scale", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("encode")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ae", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-weightnet")
    p.add_argument("--corpus", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--forecasts", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--desk-scale", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("predict")
    p.add_argument("--corpus", required=True)
    p.add_argument("--net", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--forecasts", required=True)
    p.add_argument("--out", required=True,
                   help="weights.csv,final_forecasts.csv")

    p = sub.add_parser("evaluate")
    p.add_argument("--corpus", required=True)
    p.add_argument("--forecast", required=True, help="final_forecasts.csv")
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True,
                   help="evaluation.json,per_series_owa.csv")

    p = sub.add_parser("oracle")
    p.add_argument("--corpus", required=True)
    p.add_argument("--forecasts", required=True)
    p.add_argument("--pool", nargs="*", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("greedy")
    p.add_argument("--corpus", required=True)
    p.add_argument("--forecasts", required=True)
    p.add_argument("--pool", nargs="*", default=None)
    p.add_argument("--max-size", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("importance")
    p.add_argument("--corpus", required=True)
    p.add_argument("--net", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--forecasts", required=True)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clusters", type=int, default=0,
                   help="also report joint importance for k clusters")
    p.add_argument("--out", required=True)

    p = sub.add_parser("cluster")
    p.add_argument("--features", required=True)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--out", required=True,
                   help="dendrogram.json,clusters.csv")

    p = sub.add_parser("report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--per-series", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify")
    p.add_argument("--out", default=None)

    p = sub.add_parser("run-all")
    p.add_argument("--corpus", default="")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--desk-scale", action="store_true")
    p.add_argument("--synth-n", type=int, default=None)
    p.add_argument("--out", default=None, help="work dir")
    return ap


def _work_dir(args):
    out = getattr(args, "out", None)
    if out:
        return out
    env = os.environ.get("DONUT_WORKDIR")
    if env:
        return env
    raise ConfigError("no output directory: pass --out or set DONUT_WORKDIR")


def _load_pipeline_config(args):
    payload = {}
    if getattr(args, "config", None):
        try:
            payload = art.read_json(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
    desk = bool(getattr(args, "desk_scale", False) or
                payload.get("desk_scale"))
    ae_over = payload.get("ae", {})
    wn_over = payload.get("weightnet", {})
    try:
        ae = (desk_ae_config(**ae_over) if desk else AeConfig(**ae_over))
        wn = (desk_weightnet_config(**wn_over) if desk
              else WeightNetConfig(**wn_over))
    except TypeError as exc:
        raise ConfigError(f"bad config field: {exc}")
    cfg = PipelineConfig(
        work_dir=_work_dir(args),
        corpus_dir=getattr(args, "corpus", "") or payload.get("corpus_dir", ""),
        ae=ae, weightnet=wn,
        pool=tuple(payload.get("pool", [m.value for m in MODEL_ORDER])),
        seed=getattr(args, "seed", 0),
        threads=getattr(args, "threads", 1),
        desk_scale=desk,
        synth_n=(getattr(args, "synth_n", None) or
                 payload.get("synth_n", 160)),
    )
    cfg.validate()
    return cfg


def _split_pair(out, expected):
    parts = [p.strip() for p in str(out).split(",")]
    if len(parts) != expected:
        raise ConfigError(f"--out expects {expected} comma-separated paths")
    return parts


def _cmd_importance(args):
    corpus = _load_corpus(args.corpus)
    net, standardizer = _load_net(args.net)
    rows = _assemble_rows(corpus, art.read_features_csv(args.features),
                          art.read_embeddings_csv(args.embeddings),
                          art.read_forecasts_csv(args.forecasts))
    X = standardizer.transform(np.stack([r.features_raw for r in rows]))
    records = importance_table(net, X, rows, args.seed, repeats=args.repeats)
    out_rows = [(r.feature, float(r.importance), float(r.t_stat),
                 float(r.p_value), r.repeats) for r in records]
    if args.clusters > 1:
        dg = cluster_features(X)
        labels = cut_clusters(dg, args.clusters)
        for rec in cluster_importance(net, X, rows, labels, args.seed,
                                      repeats=args.repeats):
            out_rows.append((rec.feature, float(rec.importance),
                             float(rec.t_stat), float(rec.p_value),
                             rec.repeats))
    art.write_table_csv(args.out,
                        ["feature", "importance", "t_stat", "p_value",
                         "repeats"], out_rows)


def _cmd_cluster(args):
    feats = art.read_features_csv(args.features)
    ids = sorted(feats)
    X = np.stack([feats[i].values for i in ids])
    dg = cluster_features(X)
    labels = cut_clusters(dg, args.k)
    dg_path, cl_path = _split_pair(args.out, 2)
    art.atomic_write_json(dg_path, {
        "n_leaves": dg.n_leaves,
        "leaf_order": list(dg.leaf_order),
        "leaf_names": list(FEATURE_NAMES),
        "merges": [[int(a), int(b), float(h), int(s)]
                   for a, b, h, s in dg.merges],
    })
    art.write_table_csv(cl_path, ["feature", "cluster"],
                        [(FEATURE_NAMES[i], int(labels[i]))
                         for i in range(len(FEATURE_NAMES))])


def main(argv=None):
    args = _build_parser().parse_args(argv)
    log = lambda msg: print(msg, file=sys.stderr)
    try:
        if args.command == "synth":
            corpus = make_synthetic(args.n, seed=args.seed)
            train, meta = _corpus_paths(args.out)
            generators = {ts.id: ts.id.split("-")[1] for ts in corpus}
            save_corpus(corpus, train, meta,
                        extra_meta={"generator": generators})
        elif args.command == "ingest":
            corpus = load_corpus(args.train, args.meta)
            save_corpus(corpus, *_corpus_paths(args.out))
        elif args.command == "forecast":
            cfg = PipelineConfig(work_dir=".", threads=args.threads)
            stage_forecast(cfg, _load_corpus(args.corpus), args.out)
        elif args.command == "features":
            cfg = PipelineConfig(work_dir=".", threads=args.threads)
            stage_features(cfg, _load_corpus(args.corpus), args.out)
        elif args.command == "train-ae":
            over = {}
            if args.config:
                over = art.read_json(args.config).get("ae", {})
            ae_cfg = desk_ae_config(**over) if args.desk_scale \
                else AeConfig(**over)
            corpus = _load_corpus(args.corpus)
            fits = [ts.values[:-ts.period.h] for ts in corpus]
            model = train_autoencoder(fits, ae_cfg, seed=args.seed)
            art.atomic_write_json(args.out, model.to_state())
        elif args.command == "encode":
            stage_encode(None, _load_corpus(args.corpus), args.ae, args.out)
        elif args.command == "train-weightnet":
            over = {}
            if args.config:
                over = art.read_json(args.config).get("weightnet", {})
            wn_cfg = desk_weightnet_config(**over) if args.desk_scale \
                else WeightNetConfig(**over)
            corpus = _load_corpus(args.corpus)
            rows = _assemble_rows(corpus,
                                  art.read_features_csv(args.features),
                                  art.read_embeddings_csv(args.embeddings),
                                  art.read_forecasts_csv(args.forecasts))
            net, standardizer, history = train_weight_net(rows, wn_cfg,
                                                          seed=args.seed)
            state = net.to_state()
            state["standardizer"] = standardizer.to_state()
            art.atomic_write_json(args.out, state)
        elif args.command == "predict":
            weights_path, finals_path = _split_pair(args.out, 2)
            stage_predict(None, _load_corpus(args.corpus), args.net,
                          args.features, args.embeddings, args.forecasts,
                          weights_path, finals_path)
        elif args.command == "evaluate":
            eval_json, per_series = _split_pair(args.out, 2)
            stage_evaluate(None, _load_corpus(args.corpus), args.forecast,
                           args.weights, eval_json, per_series)
        elif args.command == "oracle":
            cfg = PipelineConfig(work_dir=".",
                                 pool=tuple(args.pool) if args.pool
                                 else tuple(m.value for m in MODEL_ORDER))
            cfg.validate()
            stage_oracle(cfg, _load_corpus(args.corpus), args.forecasts,
                         args.out)
        elif args.command == "greedy":
            cfg = PipelineConfig(work_dir=".",
                                 pool=tuple(args.pool) if args.pool
                                 else tuple(m.value for m in MODEL_ORDER))
            cfg.validate()
            stage_greedy(cfg, _load_corpus(args.corpus), args.forecasts,
                         args.out, max_size=args.max_size)
        elif args.command == "importance":
            _cmd_importance(args)
        elif args.command == "cluster":
            _cmd_cluster(args)
        elif args.command == "report":
            stage_report(None, _load_corpus(args.corpus), args.per_series,
                         args.out)
        elif args.command == "verify":
            results = run_verify()
            for name, ok, detail in results:
                print(f"{'PASS' if ok else 'FAIL'} {name}"
                      + (f"  ({detail})" if detail else ""))
            if args.out:
                art.atomic_write_json(args.out, [
                    {"check": n, "passed": ok, "detail": d}
                    for n, ok, d in results])
            if not all(ok for _, ok, _ in results):
                return 4
        elif args.command == "run-all":
            cfg = _load_pipeline_config(args)
            manifest = run_all(cfg, log=log)
            for stage, t in manifest.timings.items():
                if isinstance(t, float):
                    log(f"timing {stage}: {t:.1f}s")
        return 0
    except ConfigError as exc:
        log(f"config error: {exc}")
        return 2
    except (CorpusError, MetricError, FileNotFoundError) as exc:
        log(f"config error: {exc}")
        return 2
    except StageFailed as exc:
        log(str(exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
