"""Greedy group scheduling, with and without topic precedence constraints.

The unconstrained scheduler fills ``d`` timeslots by repeatedly taking the
topic occurrence with the largest marginal group benefit.  Because each
occurrence's gain is fixed (independent of everything else in the schedule)
and per-topic gains are non-increasing in the occurrence index, the greedy
choice is globally optimal: the d slots end up holding exactly the d
largest-gain occurrences.  We exploit that directly: build the per-topic
gain table once, then take the top d entries ordered by
(gain desc, topic asc, occurrence asc), which reproduces the step-by-step
greedy including its lowest-topic-index tie-break.

The constrained variant replays the greedy one slot at a time, restricting
each pick to topics whose prerequisites have accumulated enough earlier
repetitions.  No optimality is claimed for it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from cohortsched import _kernels
from cohortsched.model import (
    BenefitFunction,
    RequirementMatrix,
    Schedule,
    _as_student_group,
)


class TieBreakPolicy(enum.Enum):
    """How to resolve equal marginal benefits (sole policy: lowest topic index)."""

    LOWEST_TOPIC_INDEX = "lowest_topic_index"


class StepTrace(NamedTuple):
    topic: int
    occurrence: int
    gain: float


class CyclicConstraintError(ValueError):
    pass


class InfeasibleConstraintsError(RuntimeError):
    pass


@dataclass(frozen=True)
class PrecedenceConstraint:
    """Topic ``target`` may first appear only after every prerequisite
    ``(topic, min_reps)`` has accumulated at least ``min_reps`` occurrences."""

    target: int
    prerequisites: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.prerequisites:
            raise ValueError("constraint needs at least one prerequisite")
        for topic, r in self.prerequisites:
            if r < 1:
                raise ValueError("min_reps must be >= 1")
            if topic == self.target:
                raise ValueError("target cannot be its own prerequisite")


def validate_constraints(constraints: Sequence[PrecedenceConstraint], n_topics: int) -> None:
    """Check index ranges and reject cyclic prerequisite graphs."""
    adj: dict[int, set[int]] = {}
    for c in constraints:
        if not 0 <= c.target < n_topics:
            raise ValueError(f"constraint target {c.target} out of range")
        for topic, _ in c.prerequisites:
            if not 0 <= topic < n_topics:
                raise ValueError(f"prerequisite topic {topic} out of range")
            adj.setdefault(topic, set()).add(c.target)
    # Kahn's algorithm over the prerequisite -> target edges
    indeg = {t: 0 for t in adj}
    for src, dsts in adj.items():
        for dst in dsts:
            indeg[dst] = indeg.get(dst, 0) + 1
    queue = [t for t, deg in indeg.items() if deg == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for dst in adj.get(node, ()):
            indeg[dst] -= 1
            if indeg[dst] == 0:
                queue.append(dst)
    if seen != len(indeg):
        raise CyclicConstraintError("precedence constraints contain a cycle")


def _greedy_selection(req_group: np.ndarray, d: int, bf: BenefitFunction):
    """Topics and gains of the d greedy picks, in pick order."""
    n_topics = req_group.shape[1]
    table, lengths = _kernels.marginal_table(req_group, d, bf is BenefitFunction.GEOMETRIC)
    l_max = table.shape[1]
    if l_max == 0:
        t_sel = np.empty(0, dtype=np.int64)
        occ_sel = np.empty(0, dtype=np.int64)
        mb_sel = np.empty(0, dtype=np.float64)
    else:
        occ_grid = np.arange(1, l_max + 1, dtype=np.int64)
        mask = (occ_grid[None, :] <= lengths[:, None]) & (table > 0.0)
        t_sel, occ_pos = np.nonzero(mask)
        occ_sel = occ_pos + 1
        mb_sel = table[t_sel, occ_pos]
    order = np.lexsort((occ_sel, t_sel, -mb_sel))
    take = min(d, order.size)
    chosen = order[:take]
    topics = np.empty(d, dtype=np.int64)
    gains = np.zeros(d, dtype=np.float64)
    topics[:take] = t_sel[chosen]
    gains[:take] = mb_sel[chosen]
    # leftover slots carry zero gain; the lowest topic index wins every tie
    topics[take:] = 0
    return topics, gains


def greedy_reps(req_group: np.ndarray, d: int, bf: BenefitFunction) -> np.ndarray:
    """Repetition vector of the optimal d-slot schedule for a group's rows."""
    topics, _ = _greedy_selection(req_group, d, bf)
    return np.bincount(topics, minlength=req_group.shape[1]).astype(np.int64)


def _slots_from_topics(topics: np.ndarray, n_topics: int) -> tuple[tuple[int, int], ...]:
    counts = np.zeros(n_topics, dtype=np.int64)
    slots = []
    for t in topics:
        counts[t] += 1
        slots.append((int(t), int(counts[t])))
    return tuple(slots)


def schedule_group_traced(
    matrix: RequirementMatrix,
    group: Iterable[int],
    d: int,
    bf: BenefitFunction = BenefitFunction.UNIFORM,
    tie_break: TieBreakPolicy = TieBreakPolicy.LOWEST_TOPIC_INDEX,
) -> tuple[Schedule, list[StepTrace]]:
    """Optimal d-slot schedule plus the per-slot (topic, occurrence, gain) trace."""
    if tie_break is not TieBreakPolicy.LOWEST_TOPIC_INDEX:
        raise ValueError("unsupported tie-break policy")
    if d < 0:
        raise ValueError("d must be >= 0")
    idx = _as_student_group(group, matrix.n_students)
    topics, gains = _greedy_selection(matrix.req[idx], d, bf)
    slots = _slots_from_topics(topics, matrix.n_topics)
    sched = Schedule(slots, matrix.n_topics)
    trace = [StepTrace(t, i, float(gain)) for (t, i), gain in zip(slots, gains)]
    return sched, trace


def schedule_group(
    matrix: RequirementMatrix,
    group: Iterable[int],
    d: int,
    bf: BenefitFunction = BenefitFunction.UNIFORM,
    tie_break: TieBreakPolicy = TieBreakPolicy.LOWEST_TOPIC_INDEX,
) -> Schedule:
    """Optimal d-slot schedule for a group (ties: lowest topic index)."""
    sched, _ = schedule_group_traced(matrix, group, d, bf, tie_break)
    return sched


def schedule_group_constrained(
    matrix: RequirementMatrix,
    group: Iterable[int],
    d: int,
    bf: BenefitFunction = BenefitFunction.UNIFORM,
    tie_break: TieBreakPolicy = TieBreakPolicy.LOWEST_TOPIC_INDEX,
    constraints: Sequence[PrecedenceConstraint] = (),
) -> Schedule:
    sched, _ = schedule_group_constrained_traced(matrix, group, d, bf, tie_break, constraints)
    return sched


def schedule_group_constrained_traced(
    matrix: RequirementMatrix,
    group: Iterable[int],
    d: int,
    bf: BenefitFunction = BenefitFunction.UNIFORM,
    tie_break: TieBreakPolicy = TieBreakPolicy.LOWEST_TOPIC_INDEX,
    constraints: Sequence[PrecedenceConstraint] = (),
) -> tuple[Schedule, list[StepTrace]]:
    """Greedy schedule restricted at each step to topics whose prerequisites
    are met.  With an empty constraint list this reproduces ``schedule_group``
    exactly.
    """
    if tie_break is not TieBreakPolicy.LOWEST_TOPIC_INDEX:
        raise ValueError("unsupported tie-break policy")
    if d < 0:
        raise ValueError("d must be >= 0")
    idx = _as_student_group(group, matrix.n_students)
    n_topics = matrix.n_topics
    validate_constraints(constraints, n_topics)

    by_target: dict[int, list[tuple[int, int]]] = {}
    for c in constraints:
        by_target.setdefault(c.target, []).extend(c.prerequisites)

    table, lengths = _kernels.marginal_table(matrix.req[idx], d, bf is BenefitFunction.GEOMETRIC)
    reps = np.zeros(n_topics, dtype=np.int64)
    slots: list[tuple[int, int]] = []
    trace: list[StepTrace] = []

    def unlocked(t: int) -> bool:
        return all(reps[p] >= r for p, r in by_target.get(t, ()))

    for _ in range(d):
        best_t = -1
        best_gain = -1.0
        for t in range(n_topics):
            if not unlocked(t):
                continue
            i = reps[t] + 1
            gain = table[t, i - 1] if i <= lengths[t] else 0.0
            if gain > best_gain:
                best_gain = gain
                best_t = t
        if best_t < 0:
            raise InfeasibleConstraintsError("no eligible topic for the next slot")
        reps[best_t] += 1
        slots.append((best_t, int(reps[best_t])))
        trace.append(StepTrace(best_t, int(reps[best_t]), float(best_gain)))
    return Schedule(tuple(slots), n_topics), trace


def check_schedule_constraints(
    sched: Schedule, constraints: Sequence[PrecedenceConstraint]
) -> list[str]:
    """Replay the slot sequence and report any precedence violations."""
    by_target: dict[int, list[tuple[int, int]]] = {}
    for c in constraints:
        by_target.setdefault(c.target, []).extend(c.prerequisites)
    counts = np.zeros(sched.n_topics, dtype=np.int64)
    violations = []
    for slot_no, (t, i) in enumerate(sched.slots, start=1):
        for p, r in by_target.get(t, ()):
            if counts[p] < r:
                violations.append(
                    f"slot {slot_no}: occurrence {i} of topic {t} before "
                    f"{r} repetitions of topic {p} (have {int(counts[p])})"
                )
        counts[t] += 1
    return violations
