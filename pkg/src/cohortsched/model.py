"""Domain types and benefit arithmetic for repetition scheduling.

The learning model: student ``s`` must hear topic ``t`` a known number of
times, ``req(s, t) >= 1``, to master it.  Under the uniform benefit
function each of the first ``req(s, t)`` occurrences of ``t`` is worth
``1 / req(s, t)`` to ``s`` and later occurrences are worth nothing, so a
student's benefit from a schedule depends only on how often each topic
appears, never on slot order.  The geometric variant instead pays ``1/2**i``
for the i-th occurrence (still zero past the requirement).

A schedule assigns one topic occurrence to each of ``d`` timeslots; its
per-topic occurrence counts form a repetition vector, which is the object
all benefit computations consume.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

#: Comparison tolerance for benefit values (greedy ties, oracle equality).
BENEFIT_TOL = 1e-9

#: Requirement values are clamped here on ingestion to keep 1/req well away
#: from double-precision noise.
REQ_CAP = 10**6

#: Exponent cap for the geometric benefit curve: 1 - 2**-k == 1.0 in doubles
#: for k >= 54, so clamping at 64 loses nothing.
GEOMETRIC_EXP_CAP = 64


class BenefitFunction(enum.Enum):
    """Selects the per-occurrence benefit curve."""

    UNIFORM = "uniform"
    GEOMETRIC = "geometric"


def _as_student_group(group: Iterable[int], n_students: int) -> np.ndarray:
    """Normalize a student-index set to a sorted unique int64 array."""
    idx = np.unique(np.asarray(list(group), dtype=np.int64))
    if idx.size == 0:
        raise ValueError("group must contain at least one student")
    if idx[0] < 0 or idx[-1] >= n_students:
        raise ValueError(f"student index out of range [0, {n_students})")
    return idx


class RequirementMatrix:
    """Dense per-(student, topic) repetition requirements.

    ``req`` is an (n_students, n_topics) int64 array with every entry >= 1.
    Values above ``REQ_CAP`` are clamped.  Instances are immutable after
    construction (the arrays are marked read-only) and safe to share across
    threads.
    """

    def __init__(
        self,
        req,
        student_ids: Sequence[str] | None = None,
        topic_ids: Sequence[str] | None = None,
    ):
        arr = np.asarray(req)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("requirement matrix must be 2-D and non-empty")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise ValueError("requirements must be integers")
        arr = arr.astype(np.int64)
        if arr.min() < 1:
            raise ValueError("requirements must be >= 1")
        arr = np.minimum(arr, REQ_CAP)
        arr.setflags(write=False)
        self.req = arr
        n, m = arr.shape
        self.student_ids = list(student_ids) if student_ids is not None else [f"s{i + 1}" for i in range(n)]
        self.topic_ids = list(topic_ids) if topic_ids is not None else [f"t{j + 1}" for j in range(m)]
        if len(self.student_ids) != n or len(self.topic_ids) != m:
            raise ValueError("id labels do not match matrix shape")
        inv = 1.0 / arr
        inv.setflags(write=False)
        self._inv_req = inv

    @property
    def n_students(self) -> int:
        return self.req.shape[0]

    @property
    def n_topics(self) -> int:
        return self.req.shape[1]

    @property
    def inv_req(self) -> np.ndarray:
        """Precomputed 1/req, shared with the compiled kernels."""
        return self._inv_req

    def take(self, rows: Iterable[int]) -> "RequirementMatrix":
        """Submatrix restricted to the given student rows (order preserved)."""
        rows = np.asarray(list(rows), dtype=np.int64)
        return RequirementMatrix(
            self.req[rows],
            student_ids=[self.student_ids[r] for r in rows],
            topic_ids=self.topic_ids,
        )

    def row_sums(self) -> np.ndarray:
        """Per-student total requirement, sum_t req(s, t)."""
        return self.req.sum(axis=1)

    @classmethod
    def from_csv(cls, path) -> "RequirementMatrix":
        """Read the matrix CSV: header ``student_id,<topic>,...``, int cells >= 1."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ValueError(f"{path}: empty file") from None
            if len(header) < 2 or header[0] != "student_id":
                raise ValueError(f"{path}: expected header 'student_id,<topic>,...'")
            topic_ids = header[1:]
            student_ids, rows = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise ValueError(f"{path}:{lineno}: expected {len(header)} cells")
                student_ids.append(row[0])
                try:
                    rows.append([int(c) for c in row[1:]])
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: non-integer requirement") from None
        if not rows:
            raise ValueError(f"{path}: no student rows")
        return cls(np.array(rows, dtype=np.int64), student_ids=student_ids, topic_ids=topic_ids)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["student_id", *self.topic_ids])
            for sid, row in zip(self.student_ids, self.req):
                writer.writerow([sid, *(int(v) for v in row)])


class RepetitionVector:
    """Per-topic occurrence counts of a schedule."""

    def __init__(self, reps):
        arr = np.asarray(reps, dtype=np.int64).copy()
        if arr.ndim != 1:
            raise ValueError("repetition vector must be 1-D")
        if arr.size and arr.min() < 0:
            raise ValueError("repetition counts must be >= 0")
        arr.setflags(write=False)
        self.reps = arr
        self.total = int(arr.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, RepetitionVector) and np.array_equal(self.reps, other.reps)

    def __repr__(self) -> str:
        return f"RepetitionVector({self.reps.tolist()})"


@dataclass(frozen=True)
class Schedule:
    """An ordered, collision-free assignment of topic occurrences to slots.

    ``slots[r] = (t, i)`` places the i-th occurrence (1-based) of topic ``t``
    in timeslot ``r``.  For each topic the occurrence indices present are
    exactly 1..count and appear in increasing slot order.
    """

    slots: tuple[tuple[int, int], ...]
    n_topics: int

    def __post_init__(self):
        counts: dict[int, int] = {}
        for t, i in self.slots:
            if not 0 <= t < self.n_topics:
                raise ValueError(f"topic index {t} out of range")
            expected = counts.get(t, 0) + 1
            if i != expected:
                raise ValueError(f"occurrence {i} of topic {t} out of order (expected {expected})")
            counts[t] = expected

    @property
    def d(self) -> int:
        return len(self.slots)


@dataclass
class Partition:
    """An assignment of every student to one of K groups plus group schedules.

    ``objective`` caches the total benefit; ``partition_benefit`` recomputes
    and refreshes it.  Groups may be empty (they contribute nothing).
    """

    assignment: np.ndarray
    K: int
    group_schedules: list[RepetitionVector]
    objective: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.assignment, dtype=np.int64).copy()
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("assignment must be a non-empty 1-D array")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if arr.min() < 0 or arr.max() >= self.K:
            raise ValueError("group index out of range")
        if len(self.group_schedules) != self.K:
            raise ValueError("need one schedule per group")
        arr.setflags(write=False)
        self.assignment = arr

    def groups(self) -> list[np.ndarray]:
        """Member indices per group (possibly empty arrays)."""
        return [np.flatnonzero(self.assignment == j) for j in range(self.K)]


# ---------------------------------------------------------------------------
# Benefit computations
# ---------------------------------------------------------------------------

def occurrence_benefit(bf: BenefitFunction, req_st: int, i: int) -> float:
    """Benefit of the i-th occurrence of a topic to a student requiring req_st.

    Uniform: 1/req_st while i <= req_st, else 0.  Geometric: 1/2**i while
    i <= req_st, else 0.
    """
    if req_st < 1:
        raise ValueError("req_st must be >= 1")
    if i < 1:
        raise ValueError("occurrence index must be >= 1")
    if i > req_st:
        return 0.0
    if bf is BenefitFunction.UNIFORM:
        return 1.0 / req_st
    return float(np.ldexp(1.0, -min(i, 1100)))


def _check_rv(matrix: RequirementMatrix, rv: RepetitionVector) -> None:
    if rv.reps.shape[0] != matrix.n_topics:
        raise ValueError(
            f"repetition vector covers {rv.reps.shape[0]} topics, matrix has {matrix.n_topics}"
        )


def student_benefit(
    matrix: RequirementMatrix, s: int, rv: RepetitionVector, bf: BenefitFunction
) -> float:
    """Total benefit student ``s`` draws from a repetition vector.

    Uniform kind: sum_t min(req(s,t), rv(t)) / req(s,t).  Geometric kind:
    sum_t (1 - 2**-min(req(s,t), rv(t))).
    """
    if not 0 <= s < matrix.n_students:
        raise ValueError("student index out of range")
    _check_rv(matrix, rv)
    row = matrix.req[s]
    if bf is BenefitFunction.UNIFORM:
        return float(np.sum(np.minimum(row, rv.reps) / row))
    k = np.minimum(np.minimum(row, rv.reps), GEOMETRIC_EXP_CAP)
    return float(np.sum(1.0 - np.ldexp(1.0, -k)))


def group_benefit(
    matrix: RequirementMatrix, group: Iterable[int], rv: RepetitionVector, bf: BenefitFunction
) -> float:
    """Sum of student benefits over a non-empty group."""
    idx = _as_student_group(group, matrix.n_students)
    _check_rv(matrix, rv)
    sub = matrix.req[idx]
    if bf is BenefitFunction.UNIFORM:
        return float(np.sum(np.minimum(sub, rv.reps) / sub))
    k = np.minimum(np.minimum(sub, rv.reps), GEOMETRIC_EXP_CAP)
    return float(np.sum(1.0 - np.ldexp(1.0, -k)))


def marginal_benefit(
    matrix: RequirementMatrix, group: Iterable[int], t: int, i: int, bf: BenefitFunction
) -> float:
    """Increase in group benefit from adding the i-th occurrence of topic t."""
    idx = _as_student_group(group, matrix.n_students)
    if not 0 <= t < matrix.n_topics:
        raise ValueError("topic index out of range")
    if i < 1:
        raise ValueError("occurrence index must be >= 1")
    col = matrix.req[idx, t]
    live = col[col >= i]
    if bf is BenefitFunction.UNIFORM:
        return float(np.sum(1.0 / live))
    return float(live.size * np.ldexp(1.0, -min(i, 1100)))


def partition_benefit(matrix: RequirementMatrix, p: Partition, bf: BenefitFunction) -> float:
    """Total benefit of a partition; refreshes ``p.objective``."""
    if p.assignment.shape[0] != matrix.n_students:
        raise ValueError("partition assignment does not match matrix")
    total = 0.0
    for j, members in enumerate(p.groups()):
        if members.size == 0:
            continue
        total += group_benefit(matrix, members, p.group_schedules[j], bf)
    p.objective = total
    return total


def repetition_vector_of(sched: Schedule) -> RepetitionVector:
    """Per-topic slot counts of a schedule (total equals d)."""
    reps = np.zeros(sched.n_topics, dtype=np.int64)
    for t, _ in sched.slots:
        reps[t] += 1
    return RepetitionVector(reps)
