"""Honest-but-curious reconstruction of another peer's private input.

The observer knows rho, the schedule, every consensus value ``z^i`` and every
``y`` message sent inside its own group. For a target peer it writes, per
iteration ``i``:

    (2 + rho) x^i - 2 w + lam^{i-1}    = rho z^{i-1}     (x-update)
    x^i + lam^{i-1} / rho - y^i        = 0               (y definition)
    lam^i - lam^{i-1} - rho x^i        = -rho z^i        (dual update)

``y^i`` moves to the right-hand side when the observer received it, and is a
separate unknown otherwise. Every equation is elementwise, so one small dense
system is shared by all coordinates and only the right-hand side differs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .params import ParamVector
from .schedule import GroupSchedule, class_for_iteration, discard_condition
from .simnet import ObserverView, Transcript, peer_view

RANK_RTOL = 1e-8
UNIQUE = "unique"
UNDERDETERMINED = "underdetermined"

__all__ = [
    "AttackError",
    "InsufficientObservationsError",
    "LinearSystem",
    "ObserverView",
    "ReconstructionResult",
    "PredictedCounts",
    "assemble_system",
    "attack",
    "breach_iteration",
    "predicted_counts",
    "reconstruct_closed_form",
    "solve",
]


class AttackError(ValueError):
    pass


class InsufficientObservationsError(AttackError):
    pass


def reconstruct_closed_form(view: ObserverView, target: int) -> ParamVector:
    """Recover ``w_target`` from y messages at two consecutive iterations.

    From ``lam^i = rho (y^i - z^i)`` and ``x^{i+1} = y^{i+1} - lam^i / rho``
    the x-update inverts to ``w = ((2 + rho) x^{i+1} + lam^i - rho z^i) / 2``.
    """
    _check_target(view, target)
    if target == view.observer:
        return view.own_w
    seen = view.observed_iterations(target)
    pairs = [i for i in seen if i + 1 in seen]
    if not pairs:
        raise InsufficientObservationsError(
            f"insufficient iterations: need y of peer {target} at two consecutive "
            f"iterations, observed {seen}"
        )
    i = pairs[0]
    rho = view.rho
    y1, y2, z1 = view.y[(i, target)].data, view.y[(i + 1, target)].data, view.z[i].data
    lam1 = rho * (y1 - z1)
    x2 = y2 - lam1 / rho
    return view.own_w.with_data(((2.0 + rho) * x2 + lam1 - rho * z1) / 2.0)


@dataclass
class LinearSystem:
    target: int
    iterations: int
    columns: list[str]
    rows: list[str]
    matrix: np.ndarray
    rhs: np.ndarray
    shape: tuple[int, ...]
    observed: list[int]
    group_sum_rows: bool

    @property
    def unknown_count(self) -> int:
        return len(self.columns)

    @property
    def equation_count(self) -> int:
        return len(self.rows)


@dataclass
class ReconstructionResult:
    """Outcome of :func:`solve`.

    ``status`` is ``"unique"`` when the system has full column rank.
    ``w_hat`` is filled whenever the target's input is pinned down by the
    system, which is always the case for a unique solve.
    """

    status: str
    rank: int
    nullity: int
    unknown_count: int
    equation_count: int
    w_identifiable: bool
    residual: float
    observed_iterations: list[int]
    w_hat: ParamVector | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def unique(self) -> bool:
        return self.status == UNIQUE

    def to_json_obj(self) -> dict:
        return {
            "status": self.status,
            "rank": self.rank,
            "nullity": self.nullity,
            "unknown_count": self.unknown_count,
            "equation_count": self.equation_count,
            "w_identifiable": self.w_identifiable,
            "residual": self.residual,
            "observed_iterations": self.observed_iterations,
            "w_hat": self.w_hat.to_json_obj() if self.w_hat is not None else None,
            "notes": self.notes,
        }


def _check_target(view: ObserverView, target: int) -> None:
    if not 0 <= target < view.n:
        raise AttackError(f"peer {target} is not part of the run")


def assemble_system(
    view: ObserverView,
    target: int,
    T: int | None = None,
    include_group_sums: bool | None = None,
) -> LinearSystem:
    """Build the observer's equations about ``target`` over iterations ``1..T``.

    Unknowns are ``w, x^1..x^T, lam^0..lam^T`` plus each y message the
    observer did not receive. Group-sum rows ``n z_g = sum_{u in g} y_u`` for
    the target's group are added by default only when the schedule fails
    ``s > gap / (gap - 1)``; pass ``include_group_sums`` to force either way.
    """
    _check_target(view, target)
    T = view.iterations if T is None else T
    if not 1 <= T <= view.iterations:
        raise AttackError(f"T={T} outside the {view.iterations} recorded iterations")
    sch = view.schedule
    if include_group_sums is None:
        include_group_sums = not discard_condition(sch.gap, sch.s)
    rho, n = view.rho, view.n

    columns = ["w"] + [f"x{i}" for i in range(1, T + 1)] + [f"lam{i}" for i in range(T + 1)]
    index = {c: j for j, c in enumerate(columns)}

    def col(name: str) -> int:
        if name not in index:
            index[name] = len(columns)
            columns.append(name)
        return index[name]

    rows: list[tuple[str, dict[int, float], np.ndarray]] = []
    zero = np.zeros(view.own_w.data.size)
    observed = []
    for i in range(1, T + 1):
        x, lam_prev, lam = col(f"x{i}"), col(f"lam{i - 1}"), col(f"lam{i}")
        rows.append((f"xupdate{i}", {x: 2.0 + rho, col("w"): -2.0, lam_prev: 1.0},
                     rho * view.z[i - 1].data))
        coeffs = {x: 1.0, lam_prev: 1.0 / rho}
        if (i, target) in view.y:
            observed.append(i)
            rows.append((f"ydef{i}", coeffs, view.y[(i, target)].data))
        else:
            coeffs[col(f"y[{target},{i}]")] = -1.0
            rows.append((f"ydef{i}", coeffs, zero))
        rows.append((f"dual{i}", {lam: 1.0, lam_prev: -1.0, x: -rho}, -rho * view.z[i].data))
        if include_group_sums and (i, target) not in view.y:
            groups = class_for_iteration(sch, i)
            members = next(tuple(sorted(b)) for b in groups if target in b)
            value = next(v for m, v in view.partial_z.get(i, []) if m == members)
            coeffs, rhs = {}, n * value.data
            for u in members:
                if (i, u) in view.y:
                    rhs = rhs - view.y[(i, u)].data
                else:
                    coeffs[col(f"y[{u},{i}]")] = 1.0
            rows.append((f"groupsum{i}", coeffs, rhs))

    A = np.zeros((len(rows), len(columns)))
    for r, (_, coeffs, _) in enumerate(rows):
        for c, v in coeffs.items():
            A[r, c] += v
    b = np.stack([rhs for _, _, rhs in rows])
    return LinearSystem(
        target=target,
        iterations=T,
        columns=columns,
        rows=[name for name, _, _ in rows],
        matrix=A,
        rhs=b,
        shape=view.own_w.shape,
        observed=observed,
        group_sum_rows=include_group_sums,
    )


def solve(system: LinearSystem, rtol: float = RANK_RTOL) -> ReconstructionResult:
    """Rank-revealing least squares, one right-hand side per coordinate."""
    A, b = system.matrix, system.rhs
    U, S, Vt = np.linalg.svd(A, full_matrices=True)
    cutoff = rtol * S[0] if S.size else 0.0
    rank = int(np.sum(S > cutoff))
    nullity = A.shape[1] - rank
    sol = Vt[:rank].T @ ((U[:, :rank].T @ b) / S[:rank, None])
    residual = float(np.max(np.abs(A @ sol - b))) if b.size else 0.0
    null_w = Vt[rank:, 0]
    w_identifiable = bool(np.all(np.abs(null_w) <= 1e-8))
    status = UNIQUE if nullity == 0 else UNDERDETERMINED
    w_hat = ParamVector(sol[0], system.shape) if w_identifiable else None
    notes = [
        "unknowns: w, x^1..x^T, lam^0..lam^T and each y message the observer did not receive",
    ]
    if system.group_sum_rows:
        notes.append("group-sum equations included")
    return ReconstructionResult(
        status=status,
        rank=rank,
        nullity=nullity,
        unknown_count=system.unknown_count,
        equation_count=system.equation_count,
        w_identifiable=w_identifiable,
        residual=residual,
        observed_iterations=list(system.observed),
        w_hat=w_hat,
        notes=notes,
    )


class PredictedCounts(NamedTuple):
    unknowns: int
    equations: int
    discard_intermediate: bool


def predicted_counts(T: int, gap: int, s: int) -> PredictedCounts:
    """Unknown and equation counts for T iterations when the pair meets every gap-th one."""
    if gap < 1 or T < 1:
        raise AttackError("T and gap must be positive")
    if T % gap:
        raise AttackError(f"T={T} is not a multiple of the gap {gap}")
    unknowns = (3 * T * gap - T) // gap + 2
    return PredictedCounts(unknowns, 3 * T, discard_condition(gap, s))


def breach_iteration(sch: GroupSchedule, observer: int, target: int) -> int | None:
    """First T at which the observer has seen the target's y twice.

    Two observed y values fix the two free parameters (w and lam^0) of the
    target's trajectory, so the default system becomes uniquely solvable
    there. Returns None if the pair never shares a group.
    """
    if observer == target:
        return 1
    for c, pc in enumerate(sch.classes):
        if any(observer in b and target in b for b in pc):
            return c + 1 + sch.gap
    return None


def attack(
    tr: Transcript,
    observer: int,
    target: int,
    T: int | None = None,
    include_group_sums: bool | None = None,
) -> ReconstructionResult:
    view = peer_view(tr, observer)
    return solve(assemble_system(view, target, T, include_group_sums))
