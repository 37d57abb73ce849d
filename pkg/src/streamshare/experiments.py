"""Synthetic engagement generation and the revenue-share sweep harness.

The generator follows a simple listener model: each user picks how many
artists they follow uniformly from a range, picks that many distinct
artists uniformly, and streams each a Poisson-distributed number of times.
Sweeps compare rules by their top-k and bottom-k pay-per-stream relative
to the platform-proportional baseline, replicated over seeds.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .core import Instance, with_alpha
from .metrics import DegenerateEnvyError, max_envy, topk_bottomk_relative_pps
from .rules import RuleId, coerce_rule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthConfig:
    n_users: int
    n_artists: int
    artist_count_range: tuple = (1, 100)
    stream_lambda: float = 1.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.artist_count_range
        if self.n_users < 1 or self.n_artists < 1:
            raise ValueError("n_users and n_artists must be positive")
        if not 1 <= lo <= hi <= self.n_artists:
            raise ValueError(
                f"artist_count_range {self.artist_count_range} must sit inside "
                f"[1, {self.n_artists}]"
            )
        if not self.stream_lambda > 0:
            raise ValueError("stream_lambda must be positive")


@dataclass(frozen=True)
class ExperimentRow:
    rule: str
    alpha: float
    seed: int
    k: int
    top_mean: float
    bottom_mean: float
    max_envy: float
    runtime_ms: float


@dataclass(frozen=True)
class AggregateRow:
    rule: str
    alpha: float
    k: int
    n_seeds: int
    top_median: float
    top_iqr: float
    bottom_median: float
    bottom_iqr: float
    envy_median: float
    envy_iqr: float


def desk_config(seed: int = 0) -> SynthConfig:
    """Default desk-scale setup: 1,000 users over 100 artists, each
    following 1 to 10 artists."""
    return SynthConfig(
        n_users=1000, n_artists=100, artist_count_range=(1, 10), seed=seed
    )


DESK_SEEDS = 20
DESK_K = 10


def gen_synthetic(config: SynthConfig) -> Instance:
    """Draw one instance from the listener model, deterministically per seed.

    A drawn row can come out all zeros (the Poisson can yield 0 for every
    chosen artist); such rows are redrawn from scratch so every user in the
    result has positive total engagement.
    """
    rng = np.random.default_rng(config.seed)
    lo, hi = config.artist_count_range
    w = np.zeros((config.n_users, config.n_artists))
    resamples = 0
    for i in range(config.n_users):
        while True:
            count = int(rng.integers(lo, hi + 1))
            chosen = rng.choice(config.n_artists, size=count, replace=False)
            streams = rng.poisson(config.stream_lambda, size=count)
            if streams.sum() > 0:
                w[i, chosen] = streams
                break
            resamples += 1
    if resamples:
        logger.debug("redrew %d all-zero rows for seed %d", resamples, config.seed)
    return Instance(w, 1.0)


def _measure(rule, instance: Instance, k: int):
    start = time.perf_counter()
    try:
        top, bottom = topk_bottomk_relative_pps(rule, instance, k)
        envy = max_envy(rule, instance)
    except DegenerateEnvyError:
        top = bottom = envy = math.inf
    return top, bottom, envy, (time.perf_counter() - start) * 1e3


def alpha_sweep(instance: Instance, rules, alphas, k: int, seed: int = 0):
    """One ExperimentRow per (rule, alpha).

    Every rule here pays each artist an amount linear in alpha, which
    cancels out of pay-per-stream ratios and envy, except the scaled
    user-proportional rule whose per-user caps move with alpha. So only
    that rule is re-evaluated per alpha; the others are measured once.
    """
    alphas = [float(a) for a in alphas]
    if any(not 0.0 < a <= 1.0 for a in alphas):
        raise ValueError(f"alphas must lie in (0, 1], got {alphas}")
    rows = []
    for rule in rules:
        rule = coerce_rule(rule)
        if rule is RuleId.SCALED_USER_PROP:
            for a in alphas:
                top, bottom, envy, ms = _measure(rule, with_alpha(instance, a), k)
                rows.append(
                    ExperimentRow(rule.value, a, seed, k, top, bottom, envy, ms)
                )
        else:
            top, bottom, envy, ms = _measure(
                rule, with_alpha(instance, alphas[0]), k
            )
            for a in alphas:
                rows.append(
                    ExperimentRow(rule.value, a, seed, k, top, bottom, envy, ms)
                )
    return rows


def sweep_seeds(config: SynthConfig, rules, alphas, k: int, n_seeds: int):
    """Run the sweep on n_seeds instances seeded config.seed, +1, +2, ..."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be at least 1")
    rows = []
    for offset in range(n_seeds):
        cfg = dataclasses.replace(config, seed=config.seed + offset)
        instance = gen_synthetic(cfg)
        rows.extend(alpha_sweep(instance, rules, alphas, k, seed=cfg.seed))
    return rows


def replicate(config: SynthConfig, rules, alphas, k: int, n_seeds: int):
    """Median and interquartile range per (rule, alpha) over seeds."""
    rows = sweep_seeds(config, rules, alphas, k, n_seeds)
    groups = {}
    for row in rows:
        groups.setdefault((row.rule, row.alpha), []).append(row)
    aggregates = []
    for (rule, a), cell in sorted(groups.items()):
        tops = np.array([r.top_mean for r in cell])
        bottoms = np.array([r.bottom_mean for r in cell])
        envies = np.array([r.max_envy for r in cell])
        aggregates.append(
            AggregateRow(
                rule=rule,
                alpha=a,
                k=k,
                n_seeds=len(cell),
                top_median=float(np.median(tops)),
                top_iqr=_iqr(tops),
                bottom_median=float(np.median(bottoms)),
                bottom_iqr=_iqr(bottoms),
                envy_median=float(np.median(envies)),
                envy_iqr=_iqr(envies),
            )
        )
    return aggregates


def _iqr(values: np.ndarray) -> float:
    lo, hi = np.percentile(values, [25.0, 75.0])
    return float(hi - lo)


def _write_csv(path, rows, fields):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            record = []
            for name in fields:
                value = getattr(row, name)
                record.append(f"{value:.12g}" if isinstance(value, float) else value)
            writer.writerow(record)


def write_rows_csv(path, rows) -> None:
    _write_csv(path, rows, [f.name for f in dataclasses.fields(ExperimentRow)])


def write_aggregates_csv(path, aggregates) -> None:
    _write_csv(path, aggregates, [f.name for f in dataclasses.fields(AggregateRow)])
