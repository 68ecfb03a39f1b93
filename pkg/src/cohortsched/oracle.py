"""Exact brute-force solvers for desk-scale verification.

These enumerate the full search space and evaluate benefits straight from
the per-occurrence definition, deliberately sharing no code with the greedy
scheduler or the partition heuristics they are used to check.

Schedules are enumerated as d-multisets over topics (benefit is independent
of slot order, so multisets cover all schedules); partitions as canonical
restricted-growth labelings, which skips relabelings of the same grouping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from cohortsched.model import (
    BenefitFunction,
    RequirementMatrix,
    RepetitionVector,
    _as_student_group,
    occurrence_benefit,
)


@dataclass(frozen=True)
class OracleLimits:
    """Hard caps; requests beyond them are rejected, never truncated."""

    max_students: int = 6
    max_topics: int = 6
    max_d: int = 8
    max_partition_students: int = 10


DEFAULT_LIMITS = OracleLimits()


class OracleLimitError(ValueError):
    pass


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Non-negative integer vectors of length ``parts`` summing to ``total``,
    in lexicographically increasing order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def _multiset_benefit(req_rows: np.ndarray, reps: tuple[int, ...], bf: BenefitFunction) -> float:
    """Group benefit of a repetition multiset, summed occurrence by occurrence."""
    total = 0.0
    for row in req_rows:
        for t, count in enumerate(reps):
            for i in range(1, count + 1):
                total += occurrence_benefit(bf, int(row[t]), i)
    return total


def brute_force_schedule(
    matrix: RequirementMatrix,
    group: Iterable[int],
    d: int,
    bf: BenefitFunction = BenefitFunction.UNIFORM,
    limits: OracleLimits = DEFAULT_LIMITS,
) -> tuple[float, RepetitionVector]:
    """Optimal benefit over all d-slot schedules, with one optimal repetition
    vector (the lexicographically smallest among maximizers)."""
    idx = _as_student_group(group, matrix.n_students)
    if idx.size > limits.max_students:
        raise OracleLimitError(f"group size {idx.size} exceeds limit {limits.max_students}")
    if matrix.n_topics > limits.max_topics:
        raise OracleLimitError(f"{matrix.n_topics} topics exceed limit {limits.max_topics}")
    if d > limits.max_d:
        raise OracleLimitError(f"d={d} exceeds limit {limits.max_d}")
    if d < 0:
        raise ValueError("d must be >= 0")
    rows = matrix.req[idx]
    best = -1.0
    best_vec: tuple[int, ...] | None = None
    for reps in _compositions(d, matrix.n_topics):
        benefit = _multiset_benefit(rows, reps, bf)
        if benefit > best:
            best = benefit
            best_vec = reps
    assert best_vec is not None
    return best, RepetitionVector(np.array(best_vec, dtype=np.int64))


def _partitions_rgs(n: int, max_groups: int) -> Iterator[tuple[int, ...]]:
    """Restricted-growth strings of length n with at most ``max_groups``
    blocks, in lexicographically increasing order."""
    labels = [0] * n

    def rec(pos: int, used: int) -> Iterator[tuple[int, ...]]:
        if pos == n:
            yield tuple(labels)
            return
        for g in range(min(used + 1, max_groups)):
            labels[pos] = g
            yield from rec(pos + 1, max(used, g + 1))

    yield from rec(1, 1)


def brute_force_partition(
    matrix: RequirementMatrix,
    K: int,
    d: int,
    bf: BenefitFunction = BenefitFunction.UNIFORM,
    limits: OracleLimits = DEFAULT_LIMITS,
) -> tuple[float, np.ndarray]:
    """Optimal total benefit over all partitions into at most K groups, with
    one optimal assignment (lexicographically smallest labeling)."""
    n = matrix.n_students
    if n > limits.max_partition_students:
        raise OracleLimitError(f"{n} students exceed limit {limits.max_partition_students}")
    if matrix.n_topics > limits.max_topics:
        raise OracleLimitError(f"{matrix.n_topics} topics exceed limit {limits.max_topics}")
    if d > limits.max_d:
        raise OracleLimitError(f"d={d} exceeds limit {limits.max_d}")
    if K < 1:
        raise ValueError("K must be >= 1")
    # groups recur across labelings, so cache optimal benefits per member set
    group_limits = OracleLimits(
        max_students=limits.max_partition_students,
        max_topics=limits.max_topics,
        max_d=limits.max_d,
        max_partition_students=limits.max_partition_students,
    )
    cache: dict[frozenset, float] = {}

    def group_opt(members: tuple[int, ...]) -> float:
        key = frozenset(members)
        val = cache.get(key)
        if val is None:
            val, _ = brute_force_schedule(matrix, members, d, bf, group_limits)
            cache[key] = val
        return val

    best = -1.0
    best_assign: tuple[int, ...] | None = None
    for labels in _partitions_rgs(n, K):
        groups: dict[int, list[int]] = {}
        for s, g in enumerate(labels):
            groups.setdefault(g, []).append(s)
        objective = sum(group_opt(tuple(members)) for members in groups.values())
        if objective > best:
            best = objective
            best_assign = labels
    assert best_assign is not None
    return best, np.array(best_assign, dtype=np.int64)
