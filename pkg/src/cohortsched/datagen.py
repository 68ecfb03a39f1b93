"""Synthetic requirement-matrix generators.

Four families:

* planted ground truth: groups of students share a small set of selected
  topics whose per-student repetitions sum exactly to the deadline, buried
  under filler requirements whose mean matches the composition mean, so the
  grouping is invisible to raw-geometry clustering;
* i.i.d. cell distributions (pareto / normal / uniform);
* a graded-response generator: student abilities and course difficulties
  drive grade probabilities through logistic category curves, and grades
  map to repetition requirements via base + step * grade_rank;
* the grade-to-repetition transform on its own.

All draws go through per-(seed, stream) generators (see ``streams``):
stream (0,) holds dataset-level draws, stream (1, row) the draws of student
row ``row``, so rows can be generated independently in any order.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cohortsched.model import REQ_CAP, RequirementMatrix
from cohortsched.streams import rng_for

DEFAULT_GRADE_CATEGORIES = ("A", "A-", "B+", "B", "B-", "C+", "C", "C-", "D", "F")

#: Category boundaries relative to a course's difficulty; 9 boundaries
#: separate the 10 grade categories, so difficulty acts as a location shift.
DEFAULT_THRESHOLD_OFFSETS = (-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5)


# ---------------------------------------------------------------------------
# Planted ground truth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundTruthSpec:
    n_groups: int = 10
    group_size: int = 40
    n_topics: int = 40
    selected_per_group: int = 5
    deadline: int = 50
    filler_sigma: float = 3.0

    def __post_init__(self):
        if min(self.n_groups, self.group_size, self.n_topics, self.selected_per_group) < 1:
            raise ValueError("all counts must be >= 1")
        if self.selected_per_group > self.n_topics:
            raise ValueError("selected_per_group exceeds n_topics")
        if self.deadline < self.selected_per_group:
            raise ValueError("deadline must cover one repetition per selected topic")

    @property
    def n_students(self) -> int:
        return self.n_groups * self.group_size

    @property
    def filler_mu(self) -> float:
        return self.deadline / 5.0


def _random_composition(total: int, parts: int, rng) -> np.ndarray:
    """Uniformly random positive integer composition of ``total``."""
    if parts == 1:
        return np.array([total], dtype=np.int64)
    cuts = np.sort(rng.choice(total - 1, size=parts - 1, replace=False)) + 1
    return np.diff(np.concatenate(([0], cuts, [total]))).astype(np.int64)


def gen_ground_truth(spec: GroundTruthSpec, seed: int) -> tuple[RequirementMatrix, np.ndarray]:
    """Planted-cluster matrix plus the planted group label per student.

    Each group draws ``selected_per_group`` distinct topics; every member's
    repetitions on those topics are a random composition of the deadline
    (so they sum to it exactly), and the remaining topics get
    round(Normal(deadline/5, filler_sigma)) clamped to >= 1.
    """
    master = rng_for(seed, 0)
    selected = [
        np.sort(master.choice(spec.n_topics, size=spec.selected_per_group, replace=False))
        for _ in range(spec.n_groups)
    ]
    n = spec.n_students
    req = np.empty((n, spec.n_topics), dtype=np.int64)
    labels = np.empty(n, dtype=np.int64)
    for s in range(n):
        g = s // spec.group_size
        rng = rng_for(seed, 1, s)
        row = np.rint(rng.normal(spec.filler_mu, spec.filler_sigma, size=spec.n_topics))
        row = np.clip(row, 1, REQ_CAP).astype(np.int64)
        row[selected[g]] = _random_composition(spec.deadline, spec.selected_per_group, rng)
        req[s] = row
        labels[s] = g
    return RequirementMatrix(req), labels


# ---------------------------------------------------------------------------
# i.i.d. cell distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistributionSpec:
    family: str  # pareto | normal | uniform
    n_students: int = 400
    n_topics: int = 40
    pareto_alpha: float = 2.0
    normal_mu: float = 30.0
    normal_sigma: float = 5.0
    uniform_low: int = 5
    uniform_high: int = 100

    def __post_init__(self):
        if self.family not in ("pareto", "normal", "uniform"):
            raise ValueError(f"unknown distribution family {self.family!r}")
        if min(self.n_students, self.n_topics) < 1:
            raise ValueError("matrix dimensions must be >= 1")
        if self.pareto_alpha <= 0:
            raise ValueError("pareto_alpha must be positive")
        if not 1 <= self.uniform_low <= self.uniform_high:
            raise ValueError("need 1 <= uniform_low <= uniform_high")


def gen_distribution(spec: DistributionSpec, seed: int) -> RequirementMatrix:
    """i.i.d. requirements: Pareto(alpha, scale 1) rounded up, rounded
    Normal(mu, sigma) clamped to >= 1, or uniform integers in [low, high]."""
    req = np.empty((spec.n_students, spec.n_topics), dtype=np.int64)
    for s in range(spec.n_students):
        rng = rng_for(seed, 1, s)
        if spec.family == "pareto":
            u = rng.random(spec.n_topics)
            row = np.ceil(np.power(1.0 - u, -1.0 / spec.pareto_alpha))
        elif spec.family == "normal":
            row = np.rint(rng.normal(spec.normal_mu, spec.normal_sigma, size=spec.n_topics))
        else:
            row = rng.integers(spec.uniform_low, spec.uniform_high + 1, size=spec.n_topics)
        req[s] = np.clip(row, 1, REQ_CAP).astype(np.int64)
    return RequirementMatrix(req)


# ---------------------------------------------------------------------------
# Graded-response generator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrmSpec:
    n_students: int = 2000
    n_topics: int = 100
    ability_mu: float = 1.13
    ability_sigma: float = 1.41
    discrimination: float = 1.0
    categories: tuple[str, ...] = DEFAULT_GRADE_CATEGORIES
    threshold_offsets: tuple[float, ...] = DEFAULT_THRESHOLD_OFFSETS
    difficulty_pool: tuple[float, ...] | None = None
    pool_size: int = 41
    kde_bandwidth: float | None = None
    ability_values: tuple[float, ...] | None = None
    base: int = 5
    step: int = 1

    def __post_init__(self):
        if min(self.n_students, self.n_topics) < 1:
            raise ValueError("matrix dimensions must be >= 1")
        if self.ability_sigma <= 0:
            raise ValueError("ability_sigma must be positive")
        if self.discrimination < 0:
            raise ValueError("discrimination must be >= 0")
        if len(self.categories) < 2:
            raise ValueError("need at least two grade categories")
        if len(self.threshold_offsets) != len(self.categories) - 1:
            raise ValueError("need one threshold offset per category boundary")
        if any(b >= c for b, c in zip(self.threshold_offsets, self.threshold_offsets[1:])):
            raise ValueError("threshold offsets must be strictly increasing")
        if self.difficulty_pool is not None and len(self.difficulty_pool) < 1:
            raise ValueError("difficulty pool must be non-empty")
        if self.ability_values is not None and len(self.ability_values) != self.n_students:
            raise ValueError("need one ability value per student")
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")
        if self.base < 1 or self.step < 1:
            raise ValueError("base and step must be >= 1")


def _expit(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def grm_cumulative_probs(theta: float, thresholds: np.ndarray, a: float) -> np.ndarray:
    """P(grade at or above the category just above each boundary):
    logistic(a * (theta - b)) per boundary b."""
    return _expit(a * (theta - np.asarray(thresholds, dtype=np.float64)))


def _silverman_bandwidth(values: np.ndarray) -> float:
    m = values.size
    if m < 2:
        return 0.0
    std = float(np.std(values, ddof=1))
    q75, q25 = np.percentile(values, [75, 25])
    iqr = float(q75 - q25)
    scale = min(std, iqr / 1.34) if iqr > 0 else std
    return 0.9 * scale * m ** (-0.2)


def gen_grm(spec: GrmSpec, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample a grade matrix from the graded-response model.

    Course difficulties come from a kernel-density resample of the pool
    (drawn from Normal(0, 1) when no pool is supplied); per-course category
    boundaries are difficulty + the fixed offsets.  Abilities are drawn from
    Normal(ability_mu, ability_sigma) unless ``ability_values`` pins them.
    Returns (grades as category symbols, student abilities, course
    difficulties).
    """
    master = rng_for(seed, 0)
    if spec.difficulty_pool is not None:
        pool = np.asarray(spec.difficulty_pool, dtype=np.float64)
    else:
        pool = master.normal(0.0, 1.0, size=spec.pool_size)
    bw = spec.kde_bandwidth if spec.kde_bandwidth is not None else _silverman_bandwidth(pool)
    picks = master.integers(0, pool.size, size=spec.n_topics)
    difficulties = pool[picks] + master.normal(0.0, bw, size=spec.n_topics)
    if spec.ability_values is not None:
        abilities = np.asarray(spec.ability_values, dtype=np.float64)
    else:
        abilities = master.normal(spec.ability_mu, spec.ability_sigma, size=spec.n_students)

    offsets = np.asarray(spec.threshold_offsets, dtype=np.float64)
    thresholds = difficulties[:, None] + offsets[None, :]  # (topics, boundaries)
    n_cat = len(spec.categories)
    cat_arr = np.asarray(spec.categories)
    grades = np.empty((spec.n_students, spec.n_topics), dtype=cat_arr.dtype)
    for s in range(spec.n_students):
        rng = rng_for(seed, 1, s)
        u = rng.random(spec.n_topics)
        cum = _expit(spec.discrimination * (abilities[s] - thresholds))
        levels = np.sum(u[:, None] < cum, axis=1)  # boundaries cleared
        ranks = (n_cat - 1) - levels  # 0 = best category
        grades[s] = cat_arr[ranks]
    return grades, abilities, difficulties


def grades_to_repetitions(
    grades: np.ndarray,
    base: int = 5,
    step: int = 1,
    categories: tuple[str, ...] = DEFAULT_GRADE_CATEGORIES,
) -> RequirementMatrix:
    """req = base + step * rank(grade), rank 0 for the best category."""
    if base < 1 or step < 1:
        raise ValueError("base and step must be >= 1")
    rank = {cat: i for i, cat in enumerate(categories)}
    grades = np.asarray(grades)
    uniq, inverse = np.unique(grades, return_inverse=True)
    uniq_ranks = np.empty(uniq.size, dtype=np.int64)
    for i, g in enumerate(uniq):
        if str(g) not in rank:
            raise ValueError(f"unknown grade symbol {g!r}")
        uniq_ranks[i] = rank[str(g)]
    req = base + step * uniq_ranks[inverse].reshape(grades.shape)
    return RequirementMatrix(req)


# ---------------------------------------------------------------------------
# Declarative dataset specs (config files)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetSpec:
    """Parsed dataset recipe: family plus its parameter object."""

    family: str
    seed: int
    params: object
    base: int = 5
    step: int = 1

    @classmethod
    def from_file(cls, path) -> "DatasetSpec":
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ValueError(f"cannot read dataset spec {path}")
        if "dataset" not in parser:
            raise ValueError(f"{path}: missing [dataset] section")
        family = parser.get("dataset", "family", fallback="").strip().lower()
        seed = parser.getint("dataset", "seed", fallback=0)
        section = parser[family] if family in parser else {}

        def geti(key, default):
            return int(section.get(key, default))

        def getf(key, default):
            return float(section.get(key, default))

        if family == "groundtruth":
            params = GroundTruthSpec(
                n_groups=geti("n_groups", 10),
                group_size=geti("group_size", 40),
                n_topics=geti("n_topics", 40),
                selected_per_group=geti("selected_per_group", 5),
                deadline=geti("deadline", 50),
                filler_sigma=getf("filler_sigma", 3.0),
            )
            return cls(family, seed, params)
        if family in ("pareto", "normal", "uniform"):
            params = DistributionSpec(
                family=family,
                n_students=geti("n_students", 400),
                n_topics=geti("n_topics", 40),
                pareto_alpha=getf("alpha", 2.0),
                normal_mu=getf("mu", 30.0),
                normal_sigma=getf("sigma", 5.0),
                uniform_low=geti("low", 5),
                uniform_high=geti("high", 100),
            )
            return cls(family, seed, params)
        if family == "grm":
            pool = None
            pool_path = section.get("difficulties", "").strip() if section else ""
            if pool_path:
                pool = tuple(_load_value_csv(Path(path).parent / pool_path, "difficulty"))
            abilities = None
            ability_path = section.get("abilities", "").strip() if section else ""
            if ability_path:
                abilities = tuple(_load_value_csv(Path(path).parent / ability_path, "ability"))
            base = geti("base", 5)
            step = geti("step", 1)
            bw = section.get("bandwidth", "").strip() if section else ""
            params = GrmSpec(
                n_students=geti("n_students", 2000),
                n_topics=geti("n_topics", 100),
                ability_mu=getf("ability_mu", 1.13),
                ability_sigma=getf("ability_sigma", 1.41),
                discrimination=getf("discrimination", 1.0),
                difficulty_pool=pool,
                pool_size=geti("pool_size", 41),
                kde_bandwidth=float(bw) if bw else None,
                ability_values=abilities,
                base=base,
                step=step,
            )
            return cls(family, seed, params, base=base, step=step)
        raise ValueError(f"{path}: unknown dataset family {family!r}")


def _load_value_csv(path, column: str) -> list[float]:
    """Read a two-column CSV ``<id>,<column>`` and return the values."""
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) != 2 or header[1] != column:
            raise ValueError(f"{path}: expected header '<id>,{column}'")
        return [float(row[1]) for row in reader if row]


def generate_dataset(spec: DatasetSpec) -> tuple[RequirementMatrix, np.ndarray | None]:
    """Materialize a dataset spec; returns (matrix, planted labels or None)."""
    if spec.family == "groundtruth":
        return gen_ground_truth(spec.params, spec.seed)
    if spec.family in ("pareto", "normal", "uniform"):
        return gen_distribution(spec.params, spec.seed), None
    if spec.family == "grm":
        grades, _, _ = gen_grm(spec.params, spec.seed)
        return grades_to_repetitions(grades, spec.base, spec.step, spec.params.categories), None
    raise ValueError(f"unknown dataset family {spec.family!r}")
