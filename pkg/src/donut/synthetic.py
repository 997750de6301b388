"""Synthetic corpora: desk-scale stand-ins with controlled signal/noise.

Generators: linear trends, seasonal sines, AR(1), Ornstein-Uhlenbeck,
random walks. Levels are kept positive so multiplicative seasonal
adjustment stays well defined. SNR here is signal std over noise std.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, Period, PeriodName, SeriesType, TimeSeries

GENERATORS = ("trend", "seasonal_sine", "ar1", "ou", "random_walk")

_TYPE_CYCLE = tuple(SeriesType)


def _signal(kind, rng, length, m):
    t = np.arange(length, dtype=float)
    level = rng.uniform(60.0, 140.0)
    if kind == "trend":
        slope = rng.uniform(-0.2, 0.6) * level / length
        return level + slope * t
    if kind == "seasonal_sine":
        amp = rng.uniform(0.1, 0.4) * level
        phase = rng.uniform(0.0, 2.0 * np.pi)
        slope = rng.uniform(-0.1, 0.3) * level / length
        return level + slope * t + amp * np.sin(2.0 * np.pi * t / m + phase)
    if kind == "ar1":
        phi = rng.uniform(0.5, 0.95)
        innov_sd = rng.uniform(0.02, 0.08) * level
        x = np.empty(length)
        x[0] = level
        eps = rng.normal(0.0, innov_sd, length)
        for i in range(1, length):
            x[i] = level * (1.0 - phi) + phi * x[i - 1] + eps[i]
        return x
    if kind == "ou":
        gamma = rng.uniform(0.05, 0.5)
        sd = rng.uniform(0.02, 0.10) * level
        x = np.empty(length)
        x[0] = level * rng.uniform(0.8, 1.2)
        eps = rng.normal(0.0, sd, length)
        for i in range(1, length):
            x[i] = x[i - 1] + gamma * (level - x[i - 1]) + eps[i]
        return x
    if kind == "random_walk":
        drift = rng.uniform(-0.05, 0.15) * level / length
        sd = rng.uniform(0.01, 0.05) * level
        return level + np.cumsum(rng.normal(drift, sd, length))
    raise ValueError(f"unknown generator {kind!r}")


def _add_noise(signal, snr, rng):
    if not np.isfinite(snr):
        return signal
    sd = float(signal.std())
    if sd == 0.0:
        sd = 1.0
    return signal + rng.normal(0.0, sd / snr, len(signal))


def make_synthetic(n, seed, period_name=PeriodName.MONTHLY,
                   kinds=GENERATORS, length_range=(66, 120),
                   snr_range=(2.0, 10.0)):
    """Corpus of n series cycling through the generators; the generator
    name is embedded in each id (SYN-<kind>-<i>)."""
    rng = np.random.default_rng(seed)
    period = Period.default(period_name)
    out = []
    for i in range(n):
        kind = kinds[i % len(kinds)]
        length = int(rng.integers(length_range[0], length_range[1] + 1))
        snr = rng.uniform(*snr_range)
        y = _signal(kind, rng, length, period.m)
        y = _add_noise(y, snr, rng)
        shift = float(y.min())
        if shift < 1.0:
            y = y + (1.0 - shift)  # keep strictly positive levels
        out.append(TimeSeries(
            id=f"SYN-{kind}-{i:05d}",
            values=y,
            period=period,
            series_type=_TYPE_CYCLE[i % len(_TYPE_CYCLE)],
        ))
    return Corpus(out)


def sine_snr_set(counts, length, seed, freq_range=(1.5, 6.0)):
    """Noisy sine set for reconstruction experiments.

    counts: sequence of (snr, n) pairs; snr may be np.inf for clean.
    Returns (noisy list, clean list, snr array) in a seeded shuffle so
    noise levels are interleaved rather than blocked.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(length, dtype=float)
    noisy, clean, snrs = [], [], []
    for snr, n in counts:
        for _ in range(int(n)):
            cycles = rng.uniform(*freq_range)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            sig = np.sin(2.0 * np.pi * cycles * t / length + phase)
            noisy.append(_add_noise(sig, snr, rng))
            clean.append(sig)
            snrs.append(snr)
    order = rng.permutation(len(noisy))
    noisy = [noisy[i] for i in order]
    clean = [clean[i] for i in order]
    snrs = np.asarray(snrs, dtype=float)[order]
    return noisy, clean, snrs
