"""Sample-size sweeps: how fast do finite-sample rates settle on the limit?

For each (sample size, seed) cell the sweep draws a fresh dataset, runs the
model's sample surrogate to its own fixed point, measures the rate pair there
and tabulates the absolute deviation from the infinite-data rate.  Cells are
independent, so they fan out to a worker pool and are merged in sorted order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .rates import FDSpec, H4Violated, curvature_at, theoretical_rates
from .rng import CounterRNG
from .surrogate import StopRule, iterate

THREADS_ENV = "SURRO_THREADS"


class SweepError(Exception):
    pass


@dataclass(frozen=True)
class SweepRow:
    k: int
    seed: int
    rho_samp: float
    abs_dev: float
    theta_hat: float


@dataclass(frozen=True)
class SweepSummaryRow:
    k: int
    median_abs_dev: float
    q90_abs_dev: float


@dataclass(frozen=True)
class SweepTable:
    rho_pop: float
    rows: list[SweepRow]
    summary: list[SweepSummaryRow]


def worker_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise SweepError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _run_cell(model, k: int, seed: int, rho_pop: float, stop: StopRule, fd: FDSpec) -> SweepRow:
    rng = CounterRNG((seed, k))
    data = model.sample_y(k, rng)
    problem = model.sample_problem(data)
    trace = iterate(problem, model.default_theta0(), stop)
    theta_hat = trace.final
    frame = curvature_at(problem, theta_hat, fd)
    try:
        rho = theoretical_rates(frame).rho_sup
    except H4Violated:
        rho = 0.0  # indicator convention when the reduced pencil is not PD
    return SweepRow(
        k=int(k),
        seed=int(seed),
        rho_samp=float(rho),
        abs_dev=float(abs(rho - rho_pop)),
        theta_hat=float(theta_hat[0]),
    )


def sample_rate_sweep(
    model,
    ks,
    seeds,
    stop: StopRule | None = None,
    fd: FDSpec = FDSpec(),
    max_workers: int | None = None,
) -> SweepTable:
    """Measure the per-sample-size spread of fixed-point rates around the limit.

    `ks` must be ascending and nonempty; `seeds` nonempty.  The model must
    provide sample_y / sample_problem / population_rate / default_theta0
    (both shipped latent models do).
    """
    ks = [int(k) for k in ks]
    seeds = [int(s) for s in seeds]
    if not ks:
        raise SweepError("ks must be nonempty")
    if ks != sorted(ks):
        raise SweepError("ks must be ascending")
    if not seeds:
        raise SweepError("seeds must be nonempty")
    stop = stop or StopRule()
    rho_pop = float(model.population_rate())

    cells = [(k, s) for k in ks for s in seeds]
    workers = max_workers or worker_count()
    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: _run_cell(model, c[0], c[1], rho_pop, stop, fd), cells))
    else:
        rows = [_run_cell(model, k, s, rho_pop, stop, fd) for k, s in cells]
    rows.sort(key=lambda r: (r.k, r.seed))

    summary = []
    for k in ks:
        devs = np.array([r.abs_dev for r in rows if r.k == k])
        summary.append(
            SweepSummaryRow(
                k=k,
                median_abs_dev=float(np.median(devs)),
                q90_abs_dev=float(np.quantile(devs, 0.9)),
            )
        )
    return SweepTable(rho_pop=rho_pop, rows=rows, summary=summary)
