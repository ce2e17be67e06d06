"""Federated training with gap-scheduled ADMM aggregation and two baselines.

``secured``
    every round ends with the grouped ADMM aggregation; the starting point
    is itself an aggregation of each peer's random initialisation.
``fedavg``
    a server averages the locally trained parameters exactly.
``local``
    peers never communicate.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .aggregate import ALL_TO_ALL, GROUPED, AdmmConfig, run_aggregation
from .data import LocalDataset
from .models import Model, make_model
from .params import ParamVector, exact_mean, l2_distance
from .schedule import GroupSchedule, SearchBudget, generate_schedule

SECURED = "secured"
FEDAVG = "fedavg"
LOCAL = "local"
MODES = (SECURED, FEDAVG, LOCAL)
CONFIG_SCHEMA_VERSION = 1


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class FLConfig:
    rounds: int = 50
    local_epochs: int = 1
    batch_size: int = 32
    learning_rate: float = 0.05
    peers: int = 9
    model: str = "logistic"
    hidden: int = 16
    rho: float = 1.0
    admm_iterations: int = 2
    group_size: int = 3
    aggregation_mode: str = GROUPED
    schedule_restarts: int = 400
    unsafe: bool = False
    seed: int = 0

    def __post_init__(self):
        if min(self.rounds, self.local_epochs, self.batch_size, self.peers) < 1:
            raise TrainingError("rounds, local_epochs, batch_size and peers must be >= 1")
        if not self.learning_rate > 0:
            raise TrainingError("learning rate must be positive")

    @classmethod
    def from_dict(cls, obj: dict) -> "FLConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        version = obj.get("schema_version", CONFIG_SCHEMA_VERSION)
        if version != CONFIG_SCHEMA_VERSION:
            raise TrainingError(f"unsupported config schema_version {version}")
        unknown = set(obj) - names - {"schema_version"}
        if unknown:
            raise TrainingError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in obj.items() if k in names})

    def to_dict(self) -> dict:
        return {"schema_version": CONFIG_SCHEMA_VERSION, **dataclasses.asdict(self)}


@dataclass
class RoundMetrics:
    round: int
    test_accuracy: float | None
    test_loss: float
    peer_accuracy: list[float | None]
    peer_loss: list[float]
    aggregation_residual: float | None
    gap: int | None
    admm_iterations: int | None


@dataclass
class TrainingReport:
    mode: str
    config: dict
    gap: int | None
    rounds: list[RoundMetrics] = field(default_factory=list)
    final_params: list[ParamVector] = field(default_factory=list)

    @property
    def final_accuracy(self) -> float | None:
        return self.rounds[-1].test_accuracy if self.rounds else None

    def residual_series(self) -> list[float | None]:
        return [r.aggregation_residual for r in self.rounds]

    def to_json_obj(self) -> dict:
        return {
            "mode": self.mode,
            "config": self.config,
            "gap": self.gap,
            "rounds": [dataclasses.asdict(r) for r in self.rounds],
            "final_accuracy": self.final_accuracy,
            "final_params": [p.to_json_obj() for p in self.final_params],
        }


def round_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def local_update(
    params: ParamVector,
    data: LocalDataset,
    cfg: FLConfig,
    model: Model,
    rng: np.random.Generator,
    on_step: Callable[[np.ndarray], None] | None = None,
    learning_rate: float | None = None,
) -> ParamVector:
    """``cfg.local_epochs`` epochs of mini-batch SGD over a shuffled train split.

    ``learning_rate`` overrides ``cfg.learning_rate``; unlike the config it
    may be zero.
    """
    eta = cfg.learning_rate if learning_rate is None else float(learning_rate)
    if eta < 0:
        raise TrainingError("learning rate must be non-negative")
    X, y = data.X_train, data.y_train
    m = len(y)
    if m == 0:
        raise TrainingError("empty training split")
    if cfg.batch_size > m:
        raise TrainingError(f"batch size {cfg.batch_size} exceeds {m} training rows")
    theta = params.data.copy()
    for _ in range(cfg.local_epochs):
        order = rng.permutation(m)
        for start in range(0, m, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grad = model.loss_and_grad(theta, X[batch], y[batch])
            if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise TrainingError("training diverged: non-finite loss or gradient")
            theta -= eta * grad
            if on_step is not None:
                on_step(theta)
    if not np.all(np.isfinite(theta)):
        raise TrainingError("training diverged: non-finite parameters")
    return params.with_data(theta)


def build_schedule(cfg: FLConfig) -> GroupSchedule | None:
    if cfg.aggregation_mode == ALL_TO_ALL:
        return None
    return generate_schedule(
        cfg.peers,
        cfg.group_size,
        cfg.seed,
        SearchBudget(max_class_restarts=cfg.schedule_restarts),
    )


def _classes(data: Sequence[LocalDataset]) -> int:
    return int(max(max(d.y_train.max(), d.y_test.max(initial=0)) for d in data)) + 1


def _evaluate(model: Model, params: list[ParamVector], data: Sequence[LocalDataset]):
    """Score every peer's parameters on the pooled test split of all peers."""
    X = np.concatenate([d.X_test for d in data])
    y = np.concatenate([d.y_test for d in data])
    accs, losses = [], []
    for p in params:
        accs.append(model.accuracy(p.data, X, y))
        losses.append(model.loss(p.data, X, y))
    acc = None if accs[0] is None else float(np.mean(accs))
    return acc, float(np.mean(losses)), accs, losses


def train(
    mode: str,
    cfg: FLConfig,
    data: Sequence[LocalDataset],
    model: Model | None = None,
    schedule: GroupSchedule | None = None,
) -> TrainingReport:
    if mode not in MODES:
        raise TrainingError(f"unknown mode {mode!r}; expected one of {MODES}")
    if len(data) != cfg.peers:
        raise TrainingError(f"{len(data)} datasets for {cfg.peers} peers")
    n = cfg.peers
    if model is None:
        classes = 2 if cfg.model == "linear" else _classes(data)
        model = make_model(cfg.model, data[0].dim, classes, cfg.hidden)

    admm = None
    if mode == SECURED:
        if n < 2:
            raise TrainingError("secure aggregation needs at least two peers")
        if cfg.aggregation_mode == GROUPED:
            schedule = schedule or build_schedule(cfg)
            admm = AdmmConfig(cfg.rho, cfg.admm_iterations, GROUPED, schedule, unsafe=cfg.unsafe)
        else:
            admm = AdmmConfig(cfg.rho, cfg.admm_iterations, ALL_TO_ALL)
    gap = None
    if admm is not None:
        gap = admm.schedule.gap if admm.mode == GROUPED else 1

    def aggregate(params: list[ParamVector], r: int) -> tuple[ParamVector, float | None]:
        if mode == FEDAVG:
            return exact_mean(params), 0.0
        result = run_aggregation(params, admm, round_seed(cfg.seed, 0xA66, r))
        return result.z, l2_distance(result.z, result.target)

    report = TrainingReport(mode, cfg.to_dict(), gap)
    inits = [
        ParamVector.from_array(model.init_params(np.random.default_rng([cfg.seed, k, 0x1D])))
        for k in range(n)
    ]
    if mode == LOCAL:
        current = inits
    else:
        shared, _ = aggregate(inits, 0)
        current = [shared] * n

    for r in range(1, cfg.rounds + 1):
        updated = [
            local_update(current[k], data[k], cfg, model, np.random.default_rng([cfg.seed, r, k]))
            for k in range(n)
        ]
        residual = None
        if mode == LOCAL:
            current = updated
        else:
            shared, residual = aggregate(updated, r)
            current = [shared] * n
        acc, loss, accs, losses = _evaluate(model, current, data)
        report.rounds.append(
            RoundMetrics(
                round=r,
                test_accuracy=acc,
                test_loss=loss,
                peer_accuracy=accs,
                peer_loss=losses,
                aggregation_residual=residual,
                gap=gap,
                admm_iterations=admm.max_iterations if admm else None,
            )
        )
    report.final_params = current
    return report

