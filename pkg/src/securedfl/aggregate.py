"""ADMM consensus averaging, all-to-all or over a gap-constrained schedule.

Each peer ``k`` holds a private vector ``w_k``. Iteration ``i`` runs

    x_k  = (2 w_k - lam_k + rho z) / (2 + rho)
    y_k  = x_k + lam_k / rho
    z    = sum over groups g of (1/n) sum_{u in g} y_u
    lam_k = lam_k + rho (x_k - z)

In all-to-all mode there is a single group. Sums run in ascending peer id
within a group, then ascending group index, so the consensus value is the same
on every peer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .params import (
    ParamVector,
    ShapeMismatchError,
    check_same_shape,
    exact_mean,
    l2_distance,
    vector_sum,
)
from .schedule import (
    GroupSchedule,
    ParallelClass,
    class_for_iteration,
    max_secure_iterations,
    validate_schedule,
)


class AggregationError(ValueError):
    pass


class PrivacyGuardError(AggregationError):
    """Grouped run asked for more iterations than the gap allows."""


ALL_TO_ALL = "all"
GROUPED = "grouped"


@dataclass(frozen=True)
class AdmmConfig:
    rho: float = 1.0
    max_iterations: int = 2
    mode: str = ALL_TO_ALL
    schedule: GroupSchedule | None = None
    lambda_zero: bool = False
    unsafe: bool = False
    tolerance: float | None = None

    def __post_init__(self):
        if not self.rho > 0:
            raise AggregationError(f"rho must be positive, got {self.rho}")
        if self.max_iterations < 1:
            raise AggregationError("need at least one iteration")
        if self.mode not in (ALL_TO_ALL, GROUPED):
            raise AggregationError(f"unknown mode {self.mode!r}")
        if self.mode == GROUPED and self.schedule is None:
            raise AggregationError("grouped mode needs a schedule")


@dataclass
class PeerAdmmState:
    k: int
    w: ParamVector
    x: ParamVector
    lam: ParamVector
    z: ParamVector


@dataclass
class IterationTrace:
    iteration: int
    groups: ParallelClass
    y: dict[int, ParamVector]
    partial_z: list[ParamVector]
    z: ParamVector
    residual_l2: float
    max_dual_sum: float


@dataclass
class AggregationResult:
    z: ParamVector
    traces: list[IterationTrace]
    lambda0: list[ParamVector]
    target: ParamVector
    states: list[PeerAdmmState] = field(default_factory=list)

    def z_sequence(self) -> list[ParamVector]:
        return [t.z for t in self.traces]


# -- single-step operations ----------------------------------------------

def x_minimize(w: ParamVector, lam: ParamVector, z: ParamVector, rho: float) -> ParamVector:
    check_same_shape(w, lam, z)
    return w.with_data((2.0 * w.data - lam.data + rho * z.data) / (2.0 + rho))


def y_message(x: ParamVector, lam: ParamVector, rho: float) -> ParamVector:
    check_same_shape(x, lam)
    if not rho > 0:
        raise AggregationError("rho must be positive")
    return x.with_data(x.data + lam.data / rho)


def partial_z(group_ys: Sequence[ParamVector], n: int) -> ParamVector:
    """Group contribution ``(1/n) * sum(group_ys)``; ``n`` is the global peer count."""
    if not group_ys:
        raise AggregationError("empty group")
    if n < len(group_ys):
        raise AggregationError(f"group of {len(group_ys)} larger than population {n}")
    total = vector_sum(group_ys)
    return total.with_data(total.data / n)


def combine_z(partials: Sequence[ParamVector]) -> ParamVector:
    if not partials:
        raise AggregationError("no partial sums")
    return vector_sum(partials)


def lambda_update(lam: ParamVector, x: ParamVector, z: ParamVector, rho: float) -> ParamVector:
    check_same_shape(lam, x, z)
    return lam.with_data(lam.data + rho * (x.data - z.data))


# -- full run -----------------------------------------------------------

def initial_duals(n: int, shape: tuple[int, ...], seed: int, zero: bool = False) -> list[ParamVector]:
    """Per-peer lambda^0 ~ U[0, 1), each peer drawing from its own seeded stream."""
    size = int(np.prod(shape))
    if zero:
        return [ParamVector(np.zeros(size), shape) for _ in range(n)]
    return [
        ParamVector(np.random.default_rng([seed, k]).random(size), shape) for k in range(n)
    ]


def iteration_groups(cfg: AdmmConfig, n: int, i: int) -> ParallelClass:
    if cfg.mode == ALL_TO_ALL:
        return (tuple(range(n)),)
    return class_for_iteration(cfg.schedule, i)


def check_run(ws: Sequence[ParamVector], cfg: AdmmConfig) -> None:
    if len(ws) < 2:
        raise AggregationError("aggregation needs at least two peers")
    try:
        check_same_shape(*ws)
    except ShapeMismatchError as exc:
        raise AggregationError(str(exc)) from exc
    if cfg.mode != GROUPED:
        return
    sch = cfg.schedule
    if sch.n != len(ws):
        raise AggregationError(f"schedule is for {sch.n} peers, got {len(ws)}")
    report = validate_schedule(sch)
    if not report.valid:
        raise AggregationError("invalid schedule: " + "; ".join(report.violations[:3]))
    bound = max_secure_iterations(sch).iterations
    if cfg.max_iterations > bound and not cfg.unsafe:
        raise PrivacyGuardError(
            f"{cfg.max_iterations} iterations exceed the secure limit {bound} for gap {sch.gap}"
        )


def run_aggregation(
    ws: Sequence[ParamVector],
    cfg: AdmmConfig,
    seed: int = 0,
    lambda0: Sequence[ParamVector] | None = None,
) -> AggregationResult:
    """Run ``cfg.max_iterations`` ADMM iterations and return ``z`` with traces.

    ``lambda0`` overrides the seeded dual initialisation. Residuals against
    the exact mean are recorded for analysis only; no peer sees them.
    """
    check_run(ws, cfg)
    n = len(ws)
    shape = ws[0].shape
    lam = list(lambda0) if lambda0 is not None else initial_duals(n, shape, seed, cfg.lambda_zero)
    if len(lam) != n:
        raise AggregationError("one initial dual per peer required")
    check_same_shape(*ws, *lam)
    lam0 = list(lam)
    target = exact_mean(ws)
    z = ParamVector.zeros(shape)
    xs: list[ParamVector] = list(ws)
    traces: list[IterationTrace] = []
    for i in range(1, cfg.max_iterations + 1):
        groups = iteration_groups(cfg, n, i)
        xs = [x_minimize(ws[k], lam[k], z, cfg.rho) for k in range(n)]
        ys = {k: y_message(xs[k], lam[k], cfg.rho) for k in range(n)}
        partials = [partial_z([ys[u] for u in sorted(g)], n) for g in groups]
        z_new = combine_z(partials)
        lam = [lambda_update(lam[k], xs[k], z_new, cfg.rho) for k in range(n)]
        dual_sum = vector_sum(lam)
        traces.append(
            IterationTrace(
                iteration=i,
                groups=groups,
                y=ys,
                partial_z=partials,
                z=z_new,
                residual_l2=l2_distance(z_new, target),
                max_dual_sum=float(np.max(np.abs(dual_sum.data))),
            )
        )
        step = l2_distance(z_new, z)
        z = z_new
        if cfg.tolerance is not None and step <= cfg.tolerance:
            break
    states = [PeerAdmmState(k, ws[k], xs[k], lam[k], z) for k in range(n)]
    return AggregationResult(z, traces, lam0, target, states)


def contraction_factor(rho: float) -> float:
    return rho / (rho + 2.0)
