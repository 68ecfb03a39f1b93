"""Cohort partitioning heuristics and baselines.

``cohpart`` alternates k-means-style between (a) assigning every student to
the group whose current schedule benefits them most and (b) recomputing each
group's optimal schedule, starting from a uniform random partition.  Both
steps can only raise the total benefit, so the objective trace is
non-decreasing and the loop terminates.  ``cohpart_sampled`` clusters a
small sample and places everyone else under the resulting schedules.
``random_partition`` and ``kmeans_partition`` (Lloyd iterations on the raw
requirement rows) are the comparison baselines; all four are scored with
the same per-group-optimal-schedule objective and are bit-reproducible for
a fixed (matrix, config).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from cohortsched import _kernels
from cohortsched.model import (
    BENEFIT_TOL,
    GEOMETRIC_EXP_CAP,
    BenefitFunction,
    Partition,
    RequirementMatrix,
    RepetitionVector,
)
from cohortsched.scheduling import greedy_reps
from cohortsched.streams import rng_for

# stream tags under the config seed (see streams module)
_STREAM_COHPART = 0
_STREAM_RANDOM = 1
_STREAM_KMEANS = 2
_STREAM_SAMPLE = 3


@dataclass(frozen=True)
class PartitionConfig:
    """Shared knobs for the partitioning algorithms.

    ``sample_c`` sizes the cohort sample at K * sample_c students;
    ``restarts`` runs that many independently seeded attempts and keeps the
    best (cohpart only).
    """

    K: int
    d: int
    seed: int = 0
    max_iters: int = 100
    sample_c: int = 4
    restarts: int = 1

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.d < 0:
            raise ValueError("d must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.sample_c < 1:
            raise ValueError("sample_c must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass
class PartitionResult:
    partition: Partition
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = True
    runtime_ms: float = 0.0


def _check_k(matrix: RequirementMatrix, K: int) -> None:
    if K > matrix.n_students:
        raise ValueError(f"K={K} exceeds the number of students ({matrix.n_students})")


def _benefit_matrix(matrix: RequirementMatrix, centers: np.ndarray, bf: BenefitFunction) -> np.ndarray:
    if bf is BenefitFunction.UNIFORM:
        return _kernels.uniform_benefit_matrix(matrix.req, matrix.inv_req, centers)
    return _kernels.geometric_benefit_matrix(matrix.req, centers)


def _rows_benefit(req_rows, inv_rows, center, bf: BenefitFunction) -> float:
    """Total benefit of a block of students under one repetition vector."""
    if bf is BenefitFunction.UNIFORM:
        return float(np.sum(np.minimum(req_rows, center) * inv_rows))
    k = np.minimum(np.minimum(req_rows, center), GEOMETRIC_EXP_CAP)
    return float(np.sum(1.0 - np.ldexp(1.0, -k)))


def _partition_objective(
    matrix: RequirementMatrix, assign: np.ndarray, centers: np.ndarray, bf: BenefitFunction
) -> float:
    total = 0.0
    for j in range(centers.shape[0]):
        members = np.flatnonzero(assign == j)
        if members.size:
            total += _rows_benefit(matrix.req[members], matrix.inv_req[members], centers[j], bf)
    return total


def _update_centers(
    matrix: RequirementMatrix, assign: np.ndarray, K: int, d: int, bf: BenefitFunction
) -> np.ndarray:
    """Optimal schedule per group; empty groups get the zero vector."""
    centers = np.zeros((K, matrix.n_topics), dtype=np.int64)
    for j in range(K):
        members = np.flatnonzero(assign == j)
        if members.size:
            centers[j] = greedy_reps(matrix.req[members], d, bf)
    return centers


def _assign_step(b: np.ndarray, current: np.ndarray) -> np.ndarray:
    """Move each student to the best group; within tolerance of the best,
    keep the current group, otherwise take the lowest group index."""
    n = current.shape[0]
    best = b.max(axis=1)
    eligible = b >= (best[:, None] - BENEFIT_TOL)
    keep = eligible[np.arange(n), current]
    first = np.argmax(eligible, axis=1)
    return np.where(keep, current, first).astype(np.int64)


def _repair_empty_groups(b: np.ndarray, assign: np.ndarray, K: int) -> tuple[np.ndarray, bool]:
    """Re-seed each empty group with the worst-served student (the one with
    the lowest benefit under its current group's schedule) that is not the
    sole member of its group; ties go to the lowest student index."""
    counts = np.bincount(assign, minlength=K)
    if counts.min() > 0:
        return assign, False
    assign = assign.copy()
    n = assign.shape[0]
    for j in range(K):
        if counts[j] > 0:
            continue
        bcur = b[np.arange(n), assign]
        candidates = np.flatnonzero(counts[assign] > 1)
        s = int(candidates[np.argmin(bcur[candidates])])
        counts[assign[s]] -= 1
        counts[j] += 1
        assign[s] = j
    return assign, True


def _result_partition(
    matrix: RequirementMatrix, assign: np.ndarray, K: int, centers: np.ndarray, objective: float
) -> Partition:
    schedules = [RepetitionVector(centers[j]) for j in range(K)]
    return Partition(assign, K, schedules, objective)


def _cohpart_once(matrix: RequirementMatrix, cfg: PartitionConfig, bf: BenefitFunction, rng):
    assign = rng.integers(0, cfg.K, size=matrix.n_students, dtype=np.int64)
    centers = _update_centers(matrix, assign, cfg.K, cfg.d, bf)
    trace = [_partition_objective(matrix, assign, centers, bf)]
    converged = False
    iterations = 0
    for _ in range(cfg.max_iters):
        iterations += 1
        b = _benefit_matrix(matrix, centers, bf)
        new_assign = _assign_step(b, assign)
        moved = not np.array_equal(new_assign, assign)
        new_assign, repaired = _repair_empty_groups(b, new_assign, cfg.K)
        assign = new_assign
        if not (moved or repaired):
            converged = True
            break
        centers = _update_centers(matrix, assign, cfg.K, cfg.d, bf)
        trace.append(_partition_objective(matrix, assign, centers, bf))
    return assign, centers, trace, iterations, converged


def cohpart(
    matrix: RequirementMatrix, cfg: PartitionConfig, bf: BenefitFunction = BenefitFunction.UNIFORM
) -> PartitionResult:
    """Alternating benefit-clustering heuristic; best of ``cfg.restarts``."""
    _check_k(matrix, cfg.K)
    start = time.perf_counter()
    best = None
    for r in range(cfg.restarts):
        rng = rng_for(cfg.seed, _STREAM_COHPART, r)
        outcome = _cohpart_once(matrix, cfg, bf, rng)
        if best is None or outcome[2][-1] > best[2][-1]:
            best = outcome
    assign, centers, trace, iterations, converged = best
    runtime_ms = (time.perf_counter() - start) * 1000.0
    partition = _result_partition(matrix, assign, cfg.K, centers, trace[-1])
    return PartitionResult(partition, trace, iterations, converged, runtime_ms)


def cohpart_sampled(
    matrix: RequirementMatrix, cfg: PartitionConfig, bf: BenefitFunction = BenefitFunction.UNIFORM
) -> PartitionResult:
    """Run ``cohpart`` on a K * sample_c student sample, then place everyone
    else under the sample's schedules and recompute centers once."""
    _check_k(matrix, cfg.K)
    n = matrix.n_students
    n_sample = cfg.K * cfg.sample_c
    if n_sample >= n:
        return cohpart(matrix, cfg, bf)
    start = time.perf_counter()
    rng = rng_for(cfg.seed, _STREAM_SAMPLE)
    sample = np.sort(rng.choice(n, size=n_sample, replace=False))
    sub = matrix.take(sample)
    sub_res = cohpart(sub, cfg, bf)
    centers = np.stack([rv.reps for rv in sub_res.partition.group_schedules])

    b = _benefit_matrix(matrix, centers, bf)
    eligible = b >= (b.max(axis=1)[:, None] - BENEFIT_TOL)
    assign = np.argmax(eligible, axis=1).astype(np.int64)
    assign[sample] = sub_res.partition.assignment

    centers = _update_centers(matrix, assign, cfg.K, cfg.d, bf)
    objective = _partition_objective(matrix, assign, centers, bf)
    runtime_ms = (time.perf_counter() - start) * 1000.0
    partition = _result_partition(matrix, assign, cfg.K, centers, objective)
    trace = [*sub_res.objective_trace, objective]
    return PartitionResult(partition, trace, sub_res.iterations, sub_res.converged, runtime_ms)


def random_partition(
    matrix: RequirementMatrix, cfg: PartitionConfig, bf: BenefitFunction = BenefitFunction.UNIFORM
) -> PartitionResult:
    """Independent uniform group assignment (baseline); empty groups score 0."""
    _check_k(matrix, cfg.K)
    start = time.perf_counter()
    rng = rng_for(cfg.seed, _STREAM_RANDOM)
    assign = rng.integers(0, cfg.K, size=matrix.n_students, dtype=np.int64)
    centers = _update_centers(matrix, assign, cfg.K, cfg.d, bf)
    objective = _partition_objective(matrix, assign, centers, bf)
    runtime_ms = (time.perf_counter() - start) * 1000.0
    partition = _result_partition(matrix, assign, cfg.K, centers, objective)
    return PartitionResult(partition, [objective], 0, True, runtime_ms)


def kmeans_partition(
    matrix: RequirementMatrix, cfg: PartitionConfig, bf: BenefitFunction = BenefitFunction.UNIFORM
) -> PartitionResult:
    """Lloyd's algorithm on the raw requirement rows, then score the groups
    with per-group optimal schedules.

    Centers start from K distinct random rows; an empty cluster gets its
    center re-seeded to the row of the point farthest from its own center
    (ties: lowest student index), taking effect at the next assignment pass.
    """
    _check_k(matrix, cfg.K)
    start = time.perf_counter()
    rng = rng_for(cfg.seed, _STREAM_KMEANS)
    X = matrix.req.astype(np.float64)
    n = matrix.n_students
    centers = X[rng.choice(n, size=cfg.K, replace=False)].copy()
    assign = None
    converged = False
    iterations = 0
    x_sq = np.sum(X * X, axis=1)
    for _ in range(cfg.max_iters):
        iterations += 1
        d2 = x_sq[:, None] - 2.0 * (X @ centers.T) + np.sum(centers * centers, axis=1)[None, :]
        new_assign = np.argmin(d2, axis=1).astype(np.int64)
        if assign is not None and np.array_equal(new_assign, assign):
            converged = True
            break
        counts = np.bincount(new_assign, minlength=cfg.K)
        if (counts == 0).any():
            dcur = d2[np.arange(n), new_assign]
            order = np.argsort(-dcur, kind="stable")
            used: set[int] = set()
            for j in range(cfg.K):
                if counts[j] > 0:
                    continue
                far = next(int(s) for s in order if int(s) not in used)
                used.add(far)
                centers[j] = X[far]
        for j in range(cfg.K):
            members = np.flatnonzero(new_assign == j)
            if members.size:
                centers[j] = X[members].mean(axis=0)
        assign = new_assign
    sched_centers = _update_centers(matrix, assign, cfg.K, cfg.d, bf)
    objective = _partition_objective(matrix, assign, sched_centers, bf)
    runtime_ms = (time.perf_counter() - start) * 1000.0
    partition = _result_partition(matrix, assign, cfg.K, sched_centers, objective)
    return PartitionResult(partition, [objective], iterations, converged, runtime_ms)


def evaluate_partition(
    matrix: RequirementMatrix,
    assignment,
    d: int,
    bf: BenefitFunction = BenefitFunction.UNIFORM,
    K: int | None = None,
) -> Partition:
    """Score an arbitrary assignment with per-group optimal schedules."""
    assign = np.asarray(assignment, dtype=np.int64)
    if assign.shape != (matrix.n_students,):
        raise ValueError("assignment must map every student to a group")
    if assign.min() < 0:
        raise ValueError("group indices must be >= 0")
    if K is None:
        K = int(assign.max()) + 1
    elif assign.max() >= K:
        raise ValueError(f"group index {int(assign.max())} out of range for K={K}")
    centers = _update_centers(matrix, assign, K, d, bf)
    objective = _partition_objective(matrix, assign, centers, bf)
    return _result_partition(matrix, assign, K, centers, objective)


def partition_similarity(a, b) -> float:
    """Adjusted Rand index between two labelings (1.0 iff identical up to
    relabeling, ~0 for independent labelings)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("labelings must be 1-D and of equal length")
    n = a.shape[0]

    def comb2(x):
        return x * (x - 1) / 2.0

    _, a_codes = np.unique(a, return_inverse=True)
    _, b_codes = np.unique(b, return_inverse=True)
    n_b = int(b_codes.max()) + 1
    pair_counts = np.bincount(a_codes * n_b + b_codes)
    sum_ij = float(np.sum(comb2(pair_counts)))
    sum_a = float(np.sum(comb2(np.bincount(a_codes))))
    sum_b = float(np.sum(comb2(np.bincount(b_codes))))
    total = comb2(n)
    if total == 0:
        return 1.0
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    if denom == 0.0:
        return 1.0
    return (sum_ij - expected) / denom
