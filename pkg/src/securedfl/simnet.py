"""In-memory message passing around the aggregation engine.

Every value exchanged during a run becomes a :class:`Message`. The resulting
:class:`Transcript` is the ground truth for what each peer saw and feeds the
honest-but-curious attacker through :func:`peer_view`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .aggregate import (
    ALL_TO_ALL,
    AdmmConfig,
    combine_z,
    iteration_groups,
    partial_z,
    run_aggregation,
)
from .params import ParamVector
from .schedule import GroupSchedule, all_to_all

Y = "Y"
PARTIAL_Z = "PARTIAL_Z"
FINAL_Z = "FINAL_Z"
STATE = "STATE"
_KIND_ORDER = {STATE: -1, Y: 0, PARTIAL_Z: 1, FINAL_Z: 2}
FORMAT_VERSION = 1


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class Message:
    """One exchanged value.

    ``sender`` is a peer id for Y and STATE records, a group index for
    PARTIAL_Z, and -1 for FINAL_Z (computed locally by every peer).
    ``audience`` lists the peers that receive it. STATE records carry a
    peer's private inputs for offline evaluation and are never part of any
    peer's view but the owner's.
    """

    iteration: int
    kind: str
    sender: int
    audience: tuple[int, ...]
    payload: ParamVector
    field: str = ""

    def order_key(self) -> tuple:
        return (self.iteration, _KIND_ORDER[self.kind], self.sender, self.field)

    def to_json_obj(self) -> dict:
        obj = {
            "iteration": self.iteration,
            "kind": self.kind,
            "sender": self.sender,
            "audience": list(self.audience),
            "payload": self.payload.to_json_obj(),
        }
        if self.field:
            obj["field"] = self.field
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Message":
        return cls(
            int(obj["iteration"]),
            obj["kind"],
            int(obj["sender"]),
            tuple(int(a) for a in obj["audience"]),
            ParamVector.from_json_obj(obj["payload"]),
            obj.get("field", ""),
        )


@dataclass
class Transcript:
    n: int
    rho: float
    mode: str
    schedule: GroupSchedule | None
    seed: int
    iterations: int
    messages: list[Message] = field(default_factory=list)

    def append(self, msg: Message) -> None:
        if self.messages and msg.order_key() < self.messages[-1].order_key():
            raise SimulationError("messages must be appended in canonical order")
        self.messages.append(msg)

    def of_kind(self, kind: str) -> list[Message]:
        return [m for m in self.messages if m.kind == kind]

    def final_z(self) -> list[ParamVector]:
        return [m.payload for m in self.of_kind(FINAL_Z)]

    def effective_schedule(self) -> GroupSchedule:
        return self.schedule if self.schedule is not None else all_to_all(self.n)

    # -- JSON lines ----------------------------------------------------
    def header(self) -> dict:
        return {
            "format": "securedfl-transcript",
            "version": FORMAT_VERSION,
            "n": self.n,
            "rho": self.rho,
            "mode": self.mode,
            "seed": self.seed,
            "iterations": self.iterations,
            "schedule": self.schedule.to_json_obj() if self.schedule else None,
        }

    def dumps(self) -> str:
        lines = [json.dumps(self.header())]
        lines.extend(json.dumps(m.to_json_obj()) for m in self.messages)
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), newline="\n")

    @classmethod
    def loads(cls, text: str) -> "Transcript":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise SimulationError("empty transcript")
        head = json.loads(lines[0])
        if head.get("format") != "securedfl-transcript":
            raise SimulationError("missing transcript header")
        sch = head.get("schedule")
        tr = cls(
            n=int(head["n"]),
            rho=float(head["rho"]),
            mode=head["mode"],
            schedule=GroupSchedule.from_json_obj(sch) if sch else None,
            seed=int(head["seed"]),
            iterations=int(head["iterations"]),
        )
        for ln in lines[1:]:
            tr.append(Message.from_json_obj(json.loads(ln)))
        return tr

    @classmethod
    def load(cls, path: str | Path) -> "Transcript":
        return cls.loads(Path(path).read_text())


def run_simulation(
    ws: Sequence[ParamVector],
    cfg: AdmmConfig,
    seed: int = 0,
    lambda0: Sequence[ParamVector] | None = None,
):
    """Run the engine and route each exchanged value through a Message.

    Returns ``(z_final, transcript, result)``; ``result`` is the raw engine
    output kept for ground-truth checks.
    """
    result = run_aggregation(ws, cfg, seed, lambda0)
    n = len(ws)
    everyone = tuple(range(n))
    tr = Transcript(
        n=n,
        rho=cfg.rho,
        mode=cfg.mode,
        schedule=None if cfg.mode == ALL_TO_ALL else cfg.schedule,
        seed=seed,
        iterations=len(result.traces),
    )
    for k in range(n):
        tr.append(Message(0, STATE, k, (k,), result.lambda0[k], "lambda0"))
        tr.append(Message(0, STATE, k, (k,), ws[k], "w"))
    for trace in result.traces:
        groups = trace.groups
        group_of = {p: g for g, block in enumerate(groups) for p in block}
        for k in range(n):
            members = tuple(sorted(groups[group_of[k]]))
            tr.append(Message(trace.iteration, Y, k, members, trace.y[k]))
        for g, pz in enumerate(trace.partial_z):
            tr.append(Message(trace.iteration, PARTIAL_Z, g, everyone, pz))
        # every peer combines the same partials in the same order
        local = [combine_z(trace.partial_z) for _ in range(n)]
        if any(v != local[0] for v in local):
            raise SimulationError("peers disagree on consensus value")
        tr.append(Message(trace.iteration, FINAL_Z, -1, everyone, local[0]))
    return result.z, tr, result


def replay(tr: Transcript) -> list[ParamVector]:
    """Recompute every consensus value from the recorded Y messages."""
    cfg_groups = AdmmConfig(
        rho=tr.rho, max_iterations=max(tr.iterations, 1), mode=tr.mode,
        schedule=tr.schedule, unsafe=True,
    )
    ys: dict[tuple[int, int], ParamVector] = {
        (m.iteration, m.sender): m.payload for m in tr.of_kind(Y)
    }
    out = []
    for i in range(1, tr.iterations + 1):
        groups = iteration_groups(cfg_groups, tr.n, i)
        partials = [partial_z([ys[(i, u)] for u in sorted(g)], tr.n) for g in groups]
        out.append(combine_z(partials))
    return out


# -- observer views ----------------------------------------------------

@dataclass
class ObserverView:
    """Everything one honest-but-curious peer has seen during a run.

    ``y`` maps ``(iteration, peer)`` to the y messages the observer received
    (its own group members, itself included). ``partial_z`` maps an iteration
    to ``(members, value)`` per group and ``z`` maps iterations to consensus
    values, with ``z[0]`` the all-zero start.
    """

    observer: int
    n: int
    rho: float
    mode: str
    schedule: GroupSchedule
    iterations: int
    y: dict[tuple[int, int], ParamVector]
    partial_z: dict[int, list[tuple[tuple[int, ...], ParamVector]]]
    z: dict[int, ParamVector]
    own_w: ParamVector
    own_lambda0: ParamVector

    def observed_iterations(self, peer: int) -> list[int]:
        return sorted(i for (i, p) in self.y if p == peer)


def _visible(msg: Message, observer: int) -> bool:
    return observer in msg.audience


def peer_view(tr: Transcript, observer: int) -> ObserverView:
    if not 0 <= observer < tr.n:
        raise SimulationError(f"unknown observer {observer}")
    sch = tr.effective_schedule()
    y: dict[tuple[int, int], ParamVector] = {}
    partial: dict[int, list] = {}
    z: dict[int, ParamVector] = {}
    own: dict[str, ParamVector] = {}
    for m in tr.messages:
        if not _visible(m, observer):
            continue
        if m.kind == STATE:
            own[m.field] = m.payload
        elif m.kind == Y:
            y[(m.iteration, m.sender)] = m.payload
        elif m.kind == PARTIAL_Z:
            groups = sch.classes[(m.iteration - 1) % sch.gap]
            partial.setdefault(m.iteration, []).append((tuple(sorted(groups[m.sender])), m.payload))
        elif m.kind == FINAL_Z:
            z[m.iteration] = m.payload
    if "w" not in own:
        raise SimulationError(f"observer {observer} has no recorded private state")
    z[0] = ParamVector.zeros(own["w"].shape)
    return ObserverView(
        observer=observer,
        n=tr.n,
        rho=tr.rho,
        mode=tr.mode,
        schedule=sch,
        iterations=tr.iterations,
        y=y,
        partial_z=partial,
        z=z,
        own_w=own["w"],
        own_lambda0=own.get("lambda0", ParamVector.zeros(own["w"].shape)),
    )


def message_counts(tr: Transcript) -> dict[int, dict[str, int]]:
    counts: dict[int, dict[str, int]] = {}
    for m in tr.messages:
        if m.kind == STATE:
            continue
        counts.setdefault(m.iteration, {Y: 0, PARTIAL_Z: 0, FINAL_Z: 0})[m.kind] += 1
    return counts


def true_private_inputs(tr: Transcript) -> list[ParamVector]:
    """Ground-truth w per peer, for scoring attacks in experiments."""
    ws = {m.sender: m.payload for m in tr.of_kind(STATE) if m.field == "w"}
    return [ws[k] for k in range(tr.n)]
