"""Repetition-based content scheduling for student groups and benefit-driven
cohort partitioning, with exact brute-force oracles and synthetic dataset
generators for verification."""

from cohortsched._kernels import get_backend as kernel_backend
from cohortsched.model import (
    BENEFIT_TOL,
    BenefitFunction,
    Partition,
    RepetitionVector,
    RequirementMatrix,
    Schedule,
    group_benefit,
    marginal_benefit,
    occurrence_benefit,
    partition_benefit,
    repetition_vector_of,
    student_benefit,
)
from cohortsched.partitioning import (
    PartitionConfig,
    PartitionResult,
    cohpart,
    cohpart_sampled,
    evaluate_partition,
    kmeans_partition,
    partition_similarity,
    random_partition,
)
from cohortsched.scheduling import (
    PrecedenceConstraint,
    TieBreakPolicy,
    check_schedule_constraints,
    schedule_group,
    schedule_group_constrained,
)

__version__ = "0.1.0"

__all__ = [
    "BENEFIT_TOL",
    "BenefitFunction",
    "Partition",
    "PartitionConfig",
    "PartitionResult",
    "PrecedenceConstraint",
    "RepetitionVector",
    "RequirementMatrix",
    "Schedule",
    "TieBreakPolicy",
    "check_schedule_constraints",
    "cohpart",
    "cohpart_sampled",
    "evaluate_partition",
    "group_benefit",
    "kernel_backend",
    "kmeans_partition",
    "marginal_benefit",
    "occurrence_benefit",
    "partition_benefit",
    "partition_similarity",
    "random_partition",
    "repetition_vector_of",
    "schedule_group",
    "schedule_group_constrained",
    "student_benefit",
]
