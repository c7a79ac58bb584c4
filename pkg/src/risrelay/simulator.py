"""Monte Carlo BER sweeps and curve comparison."""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channel_models import RngStream
from .dnn_detector import ClassMap, classify_symbol
from .errors import ConfigError, UnreachableTargetError
from .qam_modem import demodulate_ml
from .scenario import Models, ScenarioConfig, observe

CSV_HEADER = ("scenario", "scheme", "phase_mode", "detector_mode", "L", "N", "K", "m", "c",
              "snr_db", "trials", "bit_errors", "ber", "seed")
CURVE_KEY = CSV_HEADER[:9]


@dataclass(frozen=True)
class BerRecord:
    config: ScenarioConfig
    snr_db: float
    trials: int
    bit_errors: int
    wall_time: float = 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.trials * self.config.bits_per_symbol)

    def row(self) -> dict:
        c = self.config
        return {"scenario": c.scenario, "scheme": c.scheme, "phase_mode": c.phase_mode,
                "detector_mode": c.detector_mode, "L": c.L, "N": c.N, "K": c.K, "m": c.m,
                "c": c.c, "snr_db": self.snr_db, "trials": self.trials,
                "bit_errors": self.bit_errors, "ber": self.ber, "seed": c.seed}


def detect(config: ScenarioConfig, obs, models: Models) -> np.ndarray:
    """Symbol decisions for a batch of observations."""
    if config.detector_mode == "dnn":
        cls, _ = classify_symbol(models.detector, obs.r, ClassMap(config.constellation),
                                 config.detector_normalize)
        return cls
    idx, _ = demodulate_ml(obs.r, obs.h, config.constellation)
    return idx


def run_batch(config: ScenarioConfig, snr_db: float, models: Models | None, rng, n: int):
    """Transmit ``n`` symbols; returns ``(tx_bits, rx_bits)`` as (n, log2 M) arrays."""
    models = models or Models()
    models.check(config)
    obs = observe(config, snr_db, n, rng, models)
    decided = detect(config, obs, models)
    labels = config.constellation.labels
    return labels[obs.symbols], labels[decided]


def run_trial(config: ScenarioConfig, snr_db: float, models: Models | None, rng):
    """One symbol through freshly drawn channels."""
    tx, rx = run_batch(config, snr_db, models, rng, 1)
    return tx[0], rx[0]


def _block_errors(config, snr_db, models, seed_key, n) -> int:
    tx, rx = run_batch(config, snr_db, models, RngStream(config.seed, seed_key), n)
    return int(np.count_nonzero(tx != rx))


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("RCS_THREADS")
        threads = int(env) if env else 1
    return max(1, int(threads))


def run_point(config: ScenarioConfig, snr_index: int, models: Models | None = None,
              threads: int | None = None) -> BerRecord:
    """Simulate one SNR point until ``min_errors`` bit errors or ``max_trials``.

    Trials are cut into fixed blocks; block ``b`` always uses stream
    ``(snr_index, b)``. Blocks run in waves across workers but are
    accumulated in order and the stop rule is applied to that prefix, so the
    record depends only on ``(seed, config)``.
    """
    models = models or Models()
    models.check(config)
    snr = config.snr_db[snr_index]
    workers = resolve_threads(threads)
    sizes = []
    left = config.max_trials
    while left > 0:
        sizes.append(min(config.block_size, left))
        left -= sizes[-1]

    t0 = time.perf_counter()
    trials = errors = 0
    b = 0
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while b < len(sizes):
            wave = range(b, min(b + workers, len(sizes)))
            if pool is None:
                results = [_block_errors(config, snr, models, (snr_index, i), sizes[i])
                           for i in wave]
            else:
                futures = [pool.submit(_block_errors, config, snr, models, (snr_index, i),
                                       sizes[i]) for i in wave]
                results = [f.result() for f in futures]
            done = False
            for i, e in zip(wave, results):
                trials += sizes[i]
                errors += e
                b = i + 1
                if errors >= config.min_errors:
                    done = True
                    break
            if done:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return BerRecord(config, snr, trials, errors, time.perf_counter() - t0)


def run_sweep(config: ScenarioConfig, models: Models | None = None,
              threads: int | None = None) -> list[BerRecord]:
    return [run_point(config, i, models, threads) for i in range(len(config.snr_db))]


def records_to_csv(records: Iterable[BerRecord]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    w.writeheader()
    for rec in records:
        row = rec.row()
        row["m"] = repr(float(row["m"]))
        row["c"] = repr(float(row["c"]))
        row["snr_db"] = repr(float(row["snr_db"]))
        row["ber"] = repr(float(row["ber"]))
        w.writerow(row)
    return buf.getvalue()


def write_csv(records: Iterable[BerRecord], path) -> str:
    text = records_to_csv(records)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return text


@dataclass(frozen=True)
class Curve:
    key: tuple
    snr_db: np.ndarray
    ber: np.ndarray
    trials: np.ndarray
    bit_errors: np.ndarray

    @property
    def label(self) -> str:
        return "_".join(f"{k}{v}" for k, v in zip(CURVE_KEY, self.key))


def curve_from_records(records: Sequence[BerRecord]) -> Curve:
    if not records:
        raise ConfigError("empty record list")
    row = records[0].row()
    key = tuple(str(row[k]) for k in CURVE_KEY)
    return Curve(key,
                 np.array([r.snr_db for r in records]),
                 np.array([r.ber for r in records]),
                 np.array([r.trials for r in records]),
                 np.array([r.bit_errors for r in records]))


def read_csv_curves(path) -> list[Curve]:
    """Group a results CSV into curves keyed by configuration, in file order."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_HEADER:
            raise ConfigError(f"{path}: header does not match {','.join(CSV_HEADER)}")
        groups: dict[tuple, list[dict]] = {}
        for row in reader:
            groups.setdefault(tuple(row[k] for k in CURVE_KEY), []).append(row)
    curves = []
    for key, rows in groups.items():
        try:
            curves.append(Curve(key,
                                np.array([float(r["snr_db"]) for r in rows]),
                                np.array([float(r["ber"]) for r in rows]),
                                np.array([int(r["trials"]) for r in rows]),
                                np.array([int(r["bit_errors"]) for r in rows])))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: malformed row: {exc}") from exc
    return curves


def snr_at_ber(snr_db, ber, target: float) -> float:
    """SNR where the curve first crosses ``target``.

    Piecewise-linear interpolation of log10(BER) against dB; zero-BER
    points end the usable part of the curve.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    order = np.argsort(snr_db)
    snr_db, ber = snr_db[order], ber[order]
    lt = math.log10(target)
    for i in range(len(ber) - 1):
        a, b = ber[i], ber[i + 1]
        if a <= 0:
            break
        if a >= target and 0 < b <= target:
            la, lb = math.log10(a), math.log10(b)
            if la == lb:
                return float(snr_db[i])
            return float(snr_db[i] + (lt - la) / (lb - la) * (snr_db[i + 1] - snr_db[i]))
        if a >= target and b == 0:
            break
    if len(ber) and ber[0] == target:
        return float(snr_db[0])
    raise UnreachableTargetError(f"BER {target:g} is not crossed by the curve")


def compare_pipelines(curve_a, curve_b, targets=(1e-3,)) -> dict[float, float]:
    """Horizontal gap ``snr_a - snr_b`` (dB) at each target BER.

    Negative means ``a`` reaches the target at lower SNR. Accepts
    :class:`Curve` objects or record lists.
    """
    if not isinstance(curve_a, Curve):
        curve_a = curve_from_records(curve_a)
    if not isinstance(curve_b, Curve):
        curve_b = curve_from_records(curve_b)
    return {t: snr_at_ber(curve_a.snr_db, curve_a.ber, t) - snr_at_ber(curve_b.snr_db, curve_b.ber, t)
            for t in targets}
