"""Corpus handling: domain types, CSV ingestion, train/test splitting and
seeded partitioning.

File formats
------------
Train CSV: one row per series, first cell the id, remaining cells the
observations oldest first. Trailing empty cells are ignored so ragged
exports from spreadsheet tools load cleanly; an empty cell before the
last observation is an error.

Meta CSV: columns ``id,type,period`` with optional ``m`` and ``h``
overrides. A header row is detected by the literal first cell ``id``.
Unknown extra columns are ignored.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np


class CorpusError(Exception):
    """Base class for ingestion and splitting failures."""


class MissingMeta(CorpusError):
    def __init__(self, series_id):
        super().__init__(f"no metadata row for series {series_id!r}")
        self.series_id = series_id


class NonFiniteValue(CorpusError):
    def __init__(self, series_id, index):
        super().__init__(
            f"series {series_id!r} has a missing or non-finite value at index {index}")
        self.series_id = series_id
        self.index = index


class TooShort(CorpusError):
    def __init__(self, series_id, n):
        super().__init__(f"series {series_id!r} has {n} observations, minimum is 3")
        self.series_id = series_id


class TooShortForSplit(CorpusError):
    def __init__(self, series_id, n, h):
        super().__init__(
            f"series {series_id!r} has {n} observations, need more than h + 2 = {h + 2}")
        self.series_id = series_id


class PeriodName(Enum):
    YEARLY = "Yearly"
    QUARTERLY = "Quarterly"
    MONTHLY = "Monthly"
    WEEKLY = "Weekly"
    DAILY = "Daily"
    HOURLY = "Hourly"


# Default seasonal length m and forecast horizon h per period.
PERIOD_DEFAULTS = {
    PeriodName.YEARLY: (1, 6),
    PeriodName.QUARTERLY: (4, 8),
    PeriodName.MONTHLY: (12, 18),
    PeriodName.WEEKLY: (1, 13),
    PeriodName.DAILY: (1, 14),
    PeriodName.HOURLY: (24, 48),
}


class SeriesType(Enum):
    DEMOGRAPHIC = "Demographic"
    FINANCE = "Finance"
    INDUSTRY = "Industry"
    MACRO = "Macro"
    MICRO = "Micro"
    OTHER = "Other"


@dataclass(frozen=True)
class Period:
    name: PeriodName
    m: int
    h: int

    @classmethod
    def default(cls, name):
        m, h = PERIOD_DEFAULTS[name]
        return cls(name=name, m=m, h=h)

    def with_overrides(self, m=None, h=None):
        return Period(self.name, self.m if m is None else m, self.h if h is None else h)


@dataclass(frozen=True)
class TimeSeries:
    id: str
    values: np.ndarray
    period: Period
    series_type: SeriesType

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


@dataclass
class Corpus:
    series: list
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {}
        for i, ts in enumerate(self.series):
            if ts.id in self._index:
                raise CorpusError(f"duplicate series id {ts.id!r}")
            self._index[ts.id] = i

    def __len__(self):
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    def __getitem__(self, series_id):
        return self.series[self._index[series_id]]

    def __contains__(self, series_id):
        return series_id in self._index

    def ids(self):
        return [ts.id for ts in self.series]


def _parse_values(series_id, cells):
    # strip trailing empties, then every remaining cell must parse finite
    end = len(cells)
    while end > 0 and cells[end - 1].strip() == "":
        end -= 1
    vals = np.empty(end)
    for i in range(end):
        cell = cells[i].strip()
        if cell == "":
            raise NonFiniteValue(series_id, i)
        try:
            x = float(cell)
        except ValueError:
            raise NonFiniteValue(series_id, i) from None
        if not np.isfinite(x):
            raise NonFiniteValue(series_id, i)
        vals[i] = x
    return vals


def _read_meta(meta_path):
    rows = {}
    with open(meta_path, newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for raw in reader:
            if not raw or all(c.strip() == "" for c in raw):
                continue
            if header is None and raw[0].strip().lower() == "id":
                header = [c.strip().lower() for c in raw]
                continue
            if header is None:
                header = ["id", "type", "period", "m", "h"]
            rec = {header[i]: raw[i].strip() for i in range(min(len(header), len(raw)))}
            sid = rec.get("id", "")
            if sid == "":
                raise CorpusError(f"meta row without an id in {meta_path}")
            if sid in rows:
                raise CorpusError(f"duplicate meta row for series {sid!r}")
            rows[sid] = rec
    return rows


def _meta_to_fields(rec):
    try:
        stype = SeriesType(rec["type"])
    except (KeyError, ValueError):
        raise CorpusError(
            f"series {rec.get('id')!r}: unknown type {rec.get('type')!r}") from None
    try:
        pname = PeriodName(rec["period"])
    except (KeyError, ValueError):
        raise CorpusError(
            f"series {rec.get('id')!r}: unknown period {rec.get('period')!r}") from None
    period = Period.default(pname)
    m = rec.get("m", "")
    h = rec.get("h", "")
    period = period.with_overrides(
        m=int(m) if m not in ("", None) else None,
        h=int(h) if h not in ("", None) else None)
    if period.m < 1 or period.h < 1:
        raise CorpusError(f"series {rec.get('id')!r}: m and h must be positive")
    return period, stype


def load_corpus(train_path, meta_path):
    """Read a train CSV plus its meta CSV into a Corpus.

    Every series needs at least 3 finite observations and a meta row.
    """
    meta = _read_meta(meta_path)
    series = []
    with open(train_path, newline="") as fh:
        reader = csv.reader(fh)
        first = True
        for raw in reader:
            if not raw or all(c.strip() == "" for c in raw):
                continue
            sid = raw[0].strip()
            if first and sid.lower() == "id":
                first = False
                continue
            first = False
            values = _parse_values(sid, raw[1:])
            if len(values) < 3:
                raise TooShort(sid, len(values))
            if sid not in meta:
                raise MissingMeta(sid)
            period, stype = _meta_to_fields(meta[sid])
            series.append(TimeSeries(id=sid, values=values, period=period,
                                     series_type=stype))
    return Corpus(series)


def save_corpus(corpus, train_path, meta_path, extra_meta=None):
    """Write a corpus back to the CSV pair; load_corpus(save_corpus(c)) == c.

    Values are written with repr so float64 round-trips are exact.
    extra_meta ({column: {series_id: value}}) appends informational meta
    columns (e.g. known generating process labels); load_corpus ignores
    unknown columns.
    """
    train_path = Path(train_path)
    meta_path = Path(meta_path)
    train_path.parent.mkdir(parents=True, exist_ok=True)
    meta_path.parent.mkdir(parents=True, exist_ok=True)
    extra_meta = extra_meta or {}
    extra_cols = sorted(extra_meta)
    with open(train_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for ts in corpus:
            writer.writerow([ts.id] + [repr(float(v)) for v in ts.values])
    with open(meta_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "type", "period", "m", "h"] + extra_cols)
        for ts in corpus:
            writer.writerow([ts.id, ts.series_type.value, ts.period.name.value,
                             ts.period.m, ts.period.h]
                            + [extra_meta[c].get(ts.id, "") for c in extra_cols])


def split(ts, h=None):
    """Split off the last h points as the holdout.

    Returns (fit, holdout) where fit keeps the series identity. Needs
    n > h + 2 so at least 3 points remain for fitting.
    """
    if h is None:
        h = ts.period.h
    n = len(ts.values)
    if n <= h + 2:
        raise TooShortForSplit(ts.id, n, h)
    fit = TimeSeries(id=ts.id, values=ts.values[:n - h].copy(),
                     period=ts.period, series_type=ts.series_type)
    return fit, ts.values[n - h:].copy()


def partition_indices(n, fraction, seed):
    """Index sets of a seeded random partition, len(a) = round(n * fraction).

    Both sides are returned in ascending (original) order.
    """
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_a = int(round(n * float(fraction)))
    n_a = min(max(n_a, 0), n)
    take = np.zeros(n, dtype=bool)
    take[perm[:n_a]] = True
    idx = np.arange(n)
    return idx[take], idx[~take]


def partition(corpus, fraction, seed):
    """Seeded random partition into two corpora, len(a) = round(n * fraction).

    Order within each side follows the original corpus order.
    """
    idx_a, idx_b = partition_indices(len(corpus), fraction, seed)
    a = [corpus.series[i] for i in idx_a]
    b = [corpus.series[i] for i in idx_b]
    return Corpus(a), Corpus(b)
