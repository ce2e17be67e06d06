"""Decentralized federated averaging with ADMM over gap-scheduled groups."""

from .adversary import (
    AttackError,
    InsufficientObservationsError,
    ReconstructionResult,
    assemble_system,
    attack,
    breach_iteration,
    predicted_counts,
    reconstruct_closed_form,
    solve,
)
from .aggregate import (
    ALL_TO_ALL,
    GROUPED,
    AdmmConfig,
    AggregationError,
    PrivacyGuardError,
    run_aggregation,
)
from .data import LocalDataset, make_regression, make_synthetic
from .fedtrain import FLConfig, TrainingError, train
from .models import make_model
from .params import ParamError, ParamVector
from .schedule import GroupSchedule, SearchBudget, generate_schedule, validate_schedule
from .simnet import Transcript, peer_view, replay, run_simulation

__version__ = "0.1.0"
