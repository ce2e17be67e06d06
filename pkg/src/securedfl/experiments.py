"""Parameter sweeps behind the ``sweep`` subcommands, plus CSV output."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .aggregate import GROUPED, AdmmConfig, contraction_factor, initial_duals, run_aggregation
from .params import ParamVector, mse
from .schedule import GroupSchedule, SearchBudget, generate_schedule, validate_schedule


class SweepError(ValueError):
    pass


def random_checkpoints(n: int, dim: int, seed: int) -> list[ParamVector]:
    """Stand-in for per-peer model checkpoints: i.i.d. normal parameters."""
    rng = np.random.default_rng([seed, 0xC4EC])
    return [ParamVector.from_array(rng.normal(size=dim)) for _ in range(n)]


def oracle_mse_curve(
    ws: Sequence[ParamVector], lambda0: Sequence[ParamVector], rho: float, iterations: int
) -> list[float]:
    """MSE of z^i against the mean, without running any peer-level ADMM.

    z^1 comes straight from its definition with z^0 = 0; after that the error
    contracts by exactly rho / (rho + 2) per iteration.
    """
    W = np.stack([w.data for w in ws])
    L = np.stack([lam.data for lam in lambda0])
    target = W.mean(axis=0)
    z1 = (2.0 * W / (2.0 + rho) + L * (1.0 / rho - 1.0 / (2.0 + rho))).mean(axis=0)
    err = z1 - target
    base = float(err @ err) / err.size
    r = contraction_factor(rho)
    return [base * r ** (2 * (i - 1)) for i in range(1, iterations + 1)]


def first_iteration_below(curve: Sequence[float], threshold: float) -> int | None:
    for i, v in enumerate(curve, start=1):
        if v < threshold:
            return i
    return None


@dataclass
class IterationRow:
    dim: int
    iterations: int
    mean_mse: float
    ratio: float | None
    predicted_ratio: float


def sweep_iterations(
    n: int = 9,
    s: int = 3,
    rho: float = 1.0,
    dims: Sequence[int] = (10_000,),
    iteration_range: Sequence[int] = range(1, 8),
    seeds: Sequence[int] = range(5),
    schedule: GroupSchedule | None = None,
    schedule_seed: int = 0,
    unsafe: bool = False,
) -> list[IterationRow]:
    """Mean MSE of the grouped aggregate after each iteration count.

    Each seed draws fresh checkpoints and duals; MSE is averaged over seeds.
    """
    iters = sorted(set(int(i) for i in iteration_range))
    if not iters or iters[0] < 1:
        raise SweepError("iteration counts must be >= 1")
    if not seeds:
        raise SweepError("need at least one seed")
    schedule = schedule or generate_schedule(n, s, schedule_seed)
    if not validate_schedule(schedule).valid:
        raise SweepError("invalid schedule")
    cfg = AdmmConfig(rho, iters[-1], GROUPED, schedule, unsafe=unsafe)
    r2 = contraction_factor(rho) ** 2
    rows = []
    for dim in dims:
        per_iter = np.zeros(iters[-1])
        for seed in seeds:
            ws = random_checkpoints(n, dim, seed)
            result = run_aggregation(ws, cfg, seed)
            per_iter += [mse(t.z, result.target) for t in result.traces]
        per_iter /= len(seeds)
        prev = None
        for i in iters:
            value = float(per_iter[i - 1])
            ratio = value / prev if prev and i - 1 in iters else None
            rows.append(IterationRow(dim, i, value, ratio, r2))
            prev = value
    return rows


def oracle_iteration_below(
    threshold: float, n: int, dim: int, rho: float, seeds: Sequence[int], horizon: int = 100
) -> int | None:
    """Iteration where the seed-averaged oracle MSE first drops below ``threshold``."""
    total = np.zeros(horizon)
    for seed in seeds:
        ws = random_checkpoints(n, dim, seed)
        total += oracle_mse_curve(ws, initial_duals(n, ws[0].shape, seed), rho, horizon)
    return first_iteration_below(total / len(seeds), threshold)


@dataclass
class ScheduleRow:
    n: int
    s: int
    median_classes: float
    min_classes: int
    max_classes: int
    counts: list[int]


def sweep_schedule(
    n_range: Iterable[int],
    s: int = 3,
    seeds: Sequence[int] = range(10),
    budget: SearchBudget | None = None,
) -> list[ScheduleRow]:
    rows = []
    for n in n_range:
        counts = []
        for seed in seeds:
            sch = generate_schedule(n, s, seed, budget)
            if not validate_schedule(sch).valid:
                raise SweepError(f"generator produced an invalid schedule for n={n}, seed={seed}")
            counts.append(sch.gap)
        rows.append(ScheduleRow(n, s, float(np.median(counts)), min(counts), max(counts), counts))
    return rows


def nondecreasing(values: Sequence[float]) -> bool:
    return all(b >= a for a, b in zip(values, values[1:]))


# -- CSV -----------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def iteration_rows_csv(rows: Sequence[IterationRow]) -> str:
    return to_csv(
        ["dim", "iterations", "mean_mse", "ratio", "predicted_ratio"],
        [(r.dim, r.iterations, r.mean_mse, r.ratio, r.predicted_ratio) for r in rows],
    )


def schedule_rows_csv(rows: Sequence[ScheduleRow]) -> str:
    return to_csv(
        ["n", "s", "median_classes", "min_classes", "max_classes", "counts"],
        [(r.n, r.s, r.median_classes, r.min_classes, r.max_classes, r.counts) for r in rows],
    )
