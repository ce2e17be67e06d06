"""Gap-constrained group schedules from randomized resolvable block designs.

A schedule is a list of parallel classes over peers ``0..n-1``. Each class
partitions the peers into blocks of size ``s`` and no unordered pair shares a
block more than once across the whole schedule. Cycling through the classes,
two peers therefore meet at most once every ``len(classes)`` iterations, which
is the gap ``t_g``.

Classes are found by random s-clique removal on the graph of still-unused
pairs: sample ``s`` remaining peers, keep them as a block if every pair among
them is unused, and repeat until the peers are exhausted. A class whose
remaining peers admit no clique is abandoned and restarted.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np


class ScheduleError(ValueError):
    pass


Block = tuple[int, ...]
ParallelClass = tuple[Block, ...]


@dataclass(frozen=True)
class SearchBudget:
    """Limits for :func:`generate_schedule`.

    ``max_sample_attempts_per_class`` caps rejection-sampling draws spent on
    one attempt at a class. ``max_class_restarts`` is how many abandoned
    attempts are tolerated before giving up on the next class. Generation
    also stops once ``target_classes`` classes exist.
    """

    max_sample_attempts_per_class: int = 20_000
    max_class_restarts: int = 400
    target_classes: int | None = None

    def __post_init__(self):
        if self.max_sample_attempts_per_class < 1 or self.max_class_restarts < 0:
            raise ScheduleError("search budget must be positive")
        if self.target_classes is not None and self.target_classes < 1:
            raise ScheduleError("target_classes must be >= 1")


@dataclass(frozen=True)
class GroupSchedule:
    n: int
    s: int
    classes: tuple[ParallelClass, ...]
    seed: int | None = None

    @property
    def gap(self) -> int:
        return len(self.classes)

    def group_of(self, class_index: int, peer: int) -> int:
        for g, block in enumerate(self.classes[class_index]):
            if peer in block:
                return g
        raise ScheduleError(f"peer {peer} missing from class {class_index}")

    def to_json_obj(self) -> dict:
        return {
            "n": self.n,
            "s": self.s,
            "seed": self.seed,
            "classes": [[list(b) for b in cls] for cls in self.classes],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_obj()) + "\n", newline="\n")

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GroupSchedule":
        classes = tuple(
            tuple(tuple(int(p) for p in block) for block in pc) for pc in obj["classes"]
        )
        return cls(int(obj["n"]), int(obj["s"]), classes, obj.get("seed"))

    @classmethod
    def load(cls, path: str | Path) -> "GroupSchedule":
        return cls.from_json_obj(json.loads(Path(path).read_text()))


def canonical_class(blocks: Sequence[Sequence[int]]) -> ParallelClass:
    return tuple(sorted(tuple(sorted(int(p) for p in b)) for b in blocks))


def block_pairs(block: Sequence[int]) -> Iterator[tuple[int, int]]:
    for a, b in itertools.combinations(sorted(block), 2):
        yield (a, b)


def all_to_all(n: int) -> GroupSchedule:
    """Degenerate single-class schedule where everyone shares one group."""
    return GroupSchedule(n, n, ((tuple(range(n)),),), None)


# -- validation ---------------------------------------------------------

@dataclass
class ValidationReport:
    n: int
    s: int
    gap: int
    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def to_json_obj(self) -> dict:
        return {**asdict(self), "valid": self.valid}


def validate_schedule(sch: GroupSchedule) -> ValidationReport:
    report = ValidationReport(sch.n, sch.s, sch.gap)
    out = report.violations
    if sch.gap < 1:
        out.append("schedule has no parallel classes")
    peers = set(range(sch.n))
    seen: dict[tuple[int, int], tuple[int, int]] = {}
    for ci, pc in enumerate(sch.classes):
        members: list[int] = []
        for bi, block in enumerate(pc):
            if len(block) != sch.s:
                out.append(f"class {ci} block {bi}: size {len(block)} != {sch.s}")
            if len(set(block)) != len(block):
                out.append(f"class {ci} block {bi}: repeated peer")
            for p in block:
                if p not in peers:
                    out.append(f"class {ci} block {bi}: unknown peer {p}")
            members.extend(block)
            for pair in block_pairs(set(block)):
                if pair in seen:
                    pci, pbi = seen[pair]
                    out.append(
                        f"pair {pair} covered twice: class {pci} block {pbi} and class {ci} block {bi}"
                    )
                else:
                    seen[pair] = (ci, bi)
        if len(members) != len(set(members)):
            out.append(f"class {ci}: blocks are not disjoint")
        if set(members) != peers:
            missing = sorted(peers - set(members))
            if missing:
                out.append(f"class {ci}: does not cover peers {missing}")
    return report


# -- iteration mapping and privacy bound -------------------------------

def class_for_iteration(sch: GroupSchedule, i: int) -> ParallelClass:
    """Class used at 1-indexed ADMM iteration ``i``; cycles with period gap."""
    if i < 1:
        raise ScheduleError("iterations are 1-indexed")
    return sch.classes[(i - 1) % sch.gap]


def co_grouped(sch: GroupSchedule, i: int, a: int, b: int) -> bool:
    return any(a in block and b in block for block in class_for_iteration(sch, i))


class SecureBound(NamedTuple):
    iterations: int
    discard_condition: bool


def discard_condition(gap: int, s: int) -> bool:
    """Whether ``s > gap / (gap - 1)``; never true for gap 1."""
    if gap <= 1:
        return False
    return s * (gap - 1) > gap


def max_secure_iterations(sch: GroupSchedule) -> SecureBound:
    return SecureBound(2 * sch.gap - 1, discard_condition(sch.gap, sch.s))


# -- generation ---------------------------------------------------------

_DEAD_END_CHECK = 32


def _find_clique(remaining: list[int], s: int, used: set[tuple[int, int]]) -> bool:
    """Exhaustive check for any s-clique of unused pairs among ``remaining``."""

    def extend(chosen: list[int], start: int) -> bool:
        if len(chosen) == s:
            return True
        for idx in range(start, len(remaining) - (s - len(chosen)) + 1):
            v = remaining[idx]
            if all((min(u, v), max(u, v)) not in used for u in chosen):
                chosen.append(v)
                if extend(chosen, idx + 1):
                    return True
                chosen.pop()
        return False

    return extend([], 0)


def _rejection_class(n, s, used, rng, max_attempts) -> ParallelClass | None:
    """One literal attempt: draw s remaining peers, keep them if they form a clique."""
    remaining = list(range(n))
    tentative: set[tuple[int, int]] = set()
    blocks: list[Block] = []
    attempts = misses = 0
    while remaining:
        if attempts >= max_attempts:
            return None
        attempts += 1
        if len(remaining) == s:
            draw = remaining[:]
        else:
            draw = sorted(int(v) for v in rng.choice(remaining, size=s, replace=False))
        pairs = list(block_pairs(draw))
        if all(p not in used and p not in tentative for p in pairs):
            blocks.append(tuple(draw))
            tentative.update(pairs)
            drawn = set(draw)
            remaining = [v for v in remaining if v not in drawn]
            misses = 0
            continue
        misses += 1
        if len(remaining) == s:
            return None
        # sampling alone cannot tell a dead end from bad luck
        if misses % _DEAD_END_CHECK == 0 and not _find_clique(remaining, s, used | tentative):
            return None
    used.update(tentative)
    return canonical_class(blocks)


def _available_cliques(n: int, s: int, used: set[tuple[int, int]]) -> np.ndarray:
    """All s-subsets of peers whose pairs are all unused, as an (m, s) array."""
    adj = np.ones((n, n), dtype=bool)
    np.fill_diagonal(adj, False)
    for a, b in used:
        adj[a, b] = adj[b, a] = False
    found: list[tuple[int, ...]] = []

    def extend(chosen: list[int], candidates: list[int]) -> None:
        if len(chosen) == s:
            found.append(tuple(chosen))
            return
        for idx, v in enumerate(candidates):
            nxt = [u for u in candidates[idx + 1:] if adj[v, u]]
            if len(nxt) >= s - len(chosen) - 1:
                chosen.append(v)
                extend(chosen, nxt)
                chosen.pop()

    extend([], list(range(n)))
    return np.array(found, dtype=np.int64).reshape(-1, s)


def _clique_class(n, s, cliques, contains, rng) -> ParallelClass | None:
    """One attempt drawing uniformly among cliques disjoint from earlier picks.

    Same distribution as the rejection sampler conditioned on acceptance, but
    dead ends show up as an empty candidate set instead of wasted draws.
    """
    alive = np.ones(len(cliques), dtype=bool)
    blocks: list[Block] = []
    for _ in range(n // s):
        candidates = np.flatnonzero(alive)
        if candidates.size == 0:
            return None
        pick = cliques[candidates[rng.integers(candidates.size)]]
        blocks.append(tuple(int(v) for v in pick))
        for v in pick:
            alive &= ~contains[v]
    return canonical_class(blocks)


def generate_schedule(
    n: int,
    s: int,
    seed: int,
    budget: SearchBudget | None = None,
    sampler: str = "clique",
) -> GroupSchedule:
    """Randomized s-clique removal search for pairwise-disjoint parallel classes.

    ``sampler="rejection"`` draws s remaining peers uniformly and keeps them
    only if they form a clique of unused pairs; ``"clique"`` (default) draws
    uniformly from the cliques that would be accepted. Deterministic for a
    given ``(n, s, seed, budget, sampler)``.

    Raises :class:`ScheduleError` when ``s`` does not divide ``n`` or no class
    could be completed within the budget.
    """
    if s < 2 or n < s:
        raise ScheduleError(f"need n >= s >= 2, got n={n}, s={s}")
    if n % s:
        raise ScheduleError(f"group size {s} does not divide {n} peers")
    if sampler not in ("clique", "rejection"):
        raise ScheduleError(f"unknown sampler {sampler!r}")
    budget = budget or SearchBudget()
    rng = np.random.default_rng(seed)
    used: set[tuple[int, int]] = set()
    classes: list[ParallelClass] = []
    # each class consumes n(s-1)/2 of the n(n-1)/2 pairs
    pair_bound = (n - 1) // (s - 1)
    target = min(budget.target_classes or pair_bound, pair_bound)
    while len(classes) < target:
        pc = None
        if sampler == "clique":
            cliques = _available_cliques(n, s, used)
            if len(cliques) == 0:
                break
            contains = np.zeros((n, len(cliques)), dtype=bool)
            for col in range(s):
                contains[cliques[:, col], np.arange(len(cliques))] = True
        for _ in range(budget.max_class_restarts + 1):
            if sampler == "clique":
                pc = _clique_class(n, s, cliques, contains, rng)
            else:
                pc = _rejection_class(n, s, used, rng, budget.max_sample_attempts_per_class)
            if pc is not None:
                break
        if pc is None:
            break
        if sampler == "clique":
            for block in pc:
                used.update(block_pairs(block))
        classes.append(pc)
    if not classes:
        raise ScheduleError(f"no parallel class found for n={n}, s={s} within budget")
    return GroupSchedule(n, s, tuple(classes), seed)
