"""Command-line experiment harness.

Subcommands:

* ``generate``  - materialize a dataset spec into a requirement CSV
* ``run``       - execute an experiment plan (algorithm x K x d x trial
  sweep) and emit raw + aggregated result CSVs
* ``verify``    - randomized equivalence checks against the brute-force
  oracles
* ``schedule``  - schedule one group from a matrix CSV (optionally under
  precedence constraints) and print the schedule as JSON
* ``partition`` - run a single partitioning algorithm and write the
  assignment CSV plus a metadata JSON

Exit codes: 0 success, 1 usage, 2 validation, 3 verification failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from cohortsched.datagen import DatasetSpec, generate_dataset
from cohortsched.model import (
    BENEFIT_TOL,
    BenefitFunction,
    RequirementMatrix,
    repetition_vector_of,
    group_benefit,
)
from cohortsched.oracle import brute_force_partition, brute_force_schedule
from cohortsched.partitioning import (
    PartitionConfig,
    cohpart,
    cohpart_sampled,
    evaluate_partition,
    kmeans_partition,
    partition_similarity,
    random_partition,
)
from cohortsched.scheduling import (
    PrecedenceConstraint,
    schedule_group,
    schedule_group_constrained,
)
from cohortsched.streams import rng_for

RESULT_COLUMNS = ["dataset", "algorithm", "K", "d", "seed", "objective", "iterations", "runtime_ms", "ari"]
AGG_COLUMNS = ["dataset", "algorithm", "K", "d", "trials", "objective_mean", "objective_ci95", "runtime_ms_mean", "ari_mean"]

ALGORITHMS = {
    "random": random_partition,
    "kmeans": kmeans_partition,
    "cohpart": cohpart,
    "cohpart_s": cohpart_sampled,
}

# two-sided 95% Student-t critical values by degrees of freedom
_T95 = {
    1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571, 6: 2.447, 7: 2.365,
    8: 2.306, 9: 2.262, 10: 2.228, 11: 2.201, 12: 2.179, 13: 2.160, 14: 2.145,
    15: 2.131, 16: 2.120, 17: 2.110, 18: 2.101, 19: 2.093, 20: 2.086,
    21: 2.080, 22: 2.074, 23: 2.069, 24: 2.064, 25: 2.060, 26: 2.056,
    27: 2.052, 28: 2.048, 29: 2.045, 30: 2.042,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    spec = DatasetSpec.from_file(args.spec)
    seed = args.seed if args.seed is not None else spec.seed
    base = args.base if args.base is not None else spec.base
    step = args.step if args.step is not None else spec.step
    spec = DatasetSpec(spec.family, seed, spec.params, base, step)
    matrix, labels = generate_dataset(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    matrix.to_csv(out)
    written = [str(out)]
    if labels is not None:
        labels_path = out.parent / "labels.csv"
        with open(labels_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["student_id", "planted_group"])
            for sid, g in zip(matrix.student_ids, labels):
                writer.writerow([sid, int(g)])
        written.append(str(labels_path))
    print(f"wrote {', '.join(written)}")
    return 0


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _parse_list(raw: str, caster):
    vals = [v.strip() for v in raw.split(",") if v.strip()]
    if not vals:
        raise ValueError("empty list")
    return [caster(v) for v in vals]


def _load_plan(path):
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ValueError(f"cannot read plan {path}")
    if "plan" not in parser:
        raise ValueError(f"{path}: missing [plan] section")
    plan = parser["plan"]
    base_dir = Path(path).parent

    if plan.get("matrix", "").strip():
        matrix_path = base_dir / plan["matrix"].strip()
        matrix = RequirementMatrix.from_csv(matrix_path)
        labels = None
        if plan.get("labels", "").strip():
            labels = _read_labels(base_dir / plan["labels"].strip(), matrix)
        dataset_name = Path(plan["matrix"].strip()).stem
    elif plan.get("spec", "").strip():
        spec = DatasetSpec.from_file(base_dir / plan["spec"].strip())
        base = plan.getint("base", spec.base)
        step = plan.getint("step", spec.step)
        spec = DatasetSpec(spec.family, spec.seed, spec.params, base, step)
        matrix, labels = generate_dataset(spec)
        dataset_name = spec.family
    else:
        raise ValueError(f"{path}: plan needs 'matrix' or 'spec'")

    algorithms = _parse_list(plan.get("algorithms", "random,kmeans,cohpart,cohpart_s"), str)
    for name in algorithms:
        if name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {name!r}")
    k_list = _parse_list(plan.get("k", "10"), int)
    d_list = []
    for tok in _parse_list(plan.get("d", "avg"), str):
        if tok == "avg":
            d_list.append(int(round(float(np.mean(matrix.row_sums())))))
        else:
            d_list.append(int(tok))
    trials = plan.getint("trials", 5)
    if trials < 1 or not k_list or not d_list:
        raise ValueError("plan needs trials >= 1 and non-empty k/d sweeps")
    return {
        "dataset": dataset_name,
        "matrix": matrix,
        "labels": labels,
        "algorithms": algorithms,
        "k_list": k_list,
        "d_list": d_list,
        "trials": trials,
        "seed": plan.getint("seed", 0),
        "sample_c": plan.getint("sample_c", 4),
        "restarts": plan.getint("restarts", 1),
        "out": plan.get("out", "results.csv").strip(),
    }


def _read_labels(path, matrix: RequirementMatrix) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["student_id", "planted_group"]:
            raise ValueError(f"{path}: expected header 'student_id,planted_group'")
        by_id = {row[0]: int(row[1]) for row in reader if row}
    try:
        return np.array([by_id[sid] for sid in matrix.student_ids], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"{path}: missing label for student {exc}") from None


def _aggregate(rows):
    cells: dict[tuple, list[dict]] = {}
    for row in rows:
        if row["objective"] is None:
            continue
        cells.setdefault((row["dataset"], row["algorithm"], row["K"], row["d"]), []).append(row)
    agg = []
    for (dataset, algorithm, k, d), cell in sorted(cells.items()):
        objs = np.array([r["objective"] for r in cell], dtype=np.float64)
        n = objs.size
        mean = float(np.mean(objs))
        if n > 1:
            half = _T95.get(n - 1, 1.96) * float(np.std(objs, ddof=1)) / math.sqrt(n)
            ci = half
        else:
            ci = None
        runtimes = [r["runtime_ms"] for r in cell if r["runtime_ms"] is not None]
        rt_mean = float(np.mean(runtimes)) if runtimes else None
        aris = [r["ari"] for r in cell if r["ari"] is not None]
        ari_mean = float(np.mean(aris)) if aris else None
        agg.append(
            {
                "dataset": dataset, "algorithm": algorithm, "K": k, "d": d, "trials": n,
                "objective_mean": mean, "objective_ci95": ci,
                "runtime_ms_mean": rt_mean, "ari_mean": ari_mean,
            }
        )
    return agg


def cmd_run(args) -> int:
    plan = _load_plan(args.plan)
    if args.out:
        plan["out"] = args.out
    if args.trials:
        plan["trials"] = args.trials
    if args.seed is not None:
        plan["seed"] = args.seed
    matrix, labels = plan["matrix"], plan["labels"]

    rows = []
    for algorithm in plan["algorithms"]:
        for k in plan["k_list"]:
            for d in plan["d_list"]:
                for trial in range(plan["trials"]):
                    seed = plan["seed"] + trial
                    row = {
                        "dataset": plan["dataset"], "algorithm": algorithm, "K": k, "d": d,
                        "seed": seed, "objective": None, "iterations": None,
                        "runtime_ms": None, "ari": None,
                    }
                    try:
                        cfg = PartitionConfig(
                            K=k, d=d, seed=seed,
                            sample_c=plan["sample_c"], restarts=plan["restarts"],
                        )
                        res = ALGORITHMS[algorithm](matrix, cfg)
                    except ValueError as exc:
                        print(f"warning: {algorithm} K={k} d={d} seed={seed}: {exc}", file=sys.stderr)
                        rows.append(row)
                        continue
                    row["objective"] = res.partition.objective
                    row["iterations"] = res.iterations
                    row["runtime_ms"] = None if args.no_timing else res.runtime_ms
                    if labels is not None:
                        row["ari"] = partition_similarity(res.partition.assignment, labels)
                    rows.append(row)

    rows.sort(key=lambda r: (r["dataset"], r["algorithm"], r["K"], r["d"], r["seed"]))
    out = Path(plan["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])

    agg_path = out.with_suffix(".agg.csv")
    with open(agg_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGG_COLUMNS)
        for row in _aggregate(rows):
            writer.writerow([_fmt(row[c]) for c in AGG_COLUMNS])
    print(f"wrote {out} and {agg_path}")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _random_schedule_instance(seed: int, index: int):
    rng = rng_for(seed, 10, index)
    n = int(rng.integers(1, 5))
    m = int(rng.integers(1, 6))
    d = int(rng.integers(0, 7))
    req = rng.integers(1, 5, size=(n, m))
    return RequirementMatrix(req), list(range(n)), d


def _random_partition_instance(seed: int, index: int):
    rng = rng_for(seed, 11, index)
    n = int(rng.integers(2, 7))
    m = int(rng.integers(1, 5))
    d = int(rng.integers(1, 6))
    k = int(rng.integers(1, min(n, 3) + 1))
    req = rng.integers(1, 4, size=(n, m))
    return RequirementMatrix(req), k, d


def _verify_schedule_instance(matrix, group, d) -> tuple[bool, float, float]:
    sched = schedule_group(matrix, group, d)
    greedy_val = group_benefit(matrix, group, repetition_vector_of(sched), BenefitFunction.UNIFORM)
    opt_val, _ = brute_force_schedule(matrix, group, d)
    return abs(greedy_val - opt_val) <= BENEFIT_TOL, greedy_val, opt_val


def cmd_verify(args) -> int:
    failures = 0
    if args.replay is not None:
        matrix, group, d = _random_schedule_instance(args.seed, args.replay)
        ok, greedy_val, opt_val = _verify_schedule_instance(matrix, group, d)
        print(f"instance {args.replay}: req=\n{matrix.req}\nd={d}")
        print(f"greedy={greedy_val!r} oracle={opt_val!r} -> {'OK' if ok else 'MISMATCH'}")
        return 0 if ok else 3

    for i in range(args.instances):
        matrix, group, d = _random_schedule_instance(args.seed, i)
        ok, greedy_val, opt_val = _verify_schedule_instance(matrix, group, d)
        if not ok:
            failures += 1
            print(f"schedule instance {i}: greedy={greedy_val!r} != oracle={opt_val!r}", file=sys.stderr)
    print(f"schedule oracle: {args.instances - failures}/{args.instances} matched")

    part_failures = 0
    for i in range(args.partition_instances):
        matrix, k, d = _random_partition_instance(args.seed, i)
        opt_val, _ = brute_force_partition(matrix, k, d)
        rng = rng_for(args.seed, 12, i)
        for _ in range(5):
            assign = rng.integers(0, k, size=matrix.n_students)
            val = evaluate_partition(matrix, assign, d, K=k).objective
            if val > opt_val + BENEFIT_TOL:
                part_failures += 1
                print(f"partition instance {i}: random {val!r} beats oracle {opt_val!r}", file=sys.stderr)
    print(f"partition oracle: {args.partition_instances - part_failures}/{args.partition_instances} dominated")

    return 3 if failures or part_failures else 0


# ---------------------------------------------------------------------------
# schedule
# ---------------------------------------------------------------------------

def _parse_group(raw: str, matrix: RequirementMatrix) -> list[int]:
    if raw.strip().lower() == "all":
        return list(range(matrix.n_students))
    ids = {sid: i for i, sid in enumerate(matrix.student_ids)}
    group = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok in ids:
            group.append(ids[tok])
        else:
            try:
                group.append(int(tok))
            except ValueError:
                raise ValueError(f"unknown student {tok!r}") from None
    return group


def _load_constraints(path, matrix: RequirementMatrix) -> list[PrecedenceConstraint]:
    topic_index = {tid: i for i, tid in enumerate(matrix.topic_ids)}

    def topic(tok: str) -> int:
        tok = tok.strip()
        if tok in topic_index:
            return topic_index[tok]
        try:
            return int(tok)
        except ValueError:
            raise ValueError(f"unknown topic {tok!r}") from None

    by_target: dict[int, list[tuple[int, int]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and header != ["target_topic", "prereq_topic", "min_reps"]:
            raise ValueError(f"{path}: expected header 'target_topic,prereq_topic,min_reps'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 cells")
            by_target.setdefault(topic(row[0]), []).append((topic(row[1]), int(row[2])))
    return [PrecedenceConstraint(t, tuple(prereqs)) for t, prereqs in sorted(by_target.items())]


def cmd_schedule(args) -> int:
    matrix = RequirementMatrix.from_csv(args.matrix)
    group = _parse_group(args.group, matrix)
    bf = BenefitFunction(args.benefit)
    if args.constraints:
        constraints = _load_constraints(args.constraints, matrix)
        sched = schedule_group_constrained(matrix, group, args.d, bf, constraints=constraints)
    else:
        sched = schedule_group(matrix, group, args.d, bf)
    benefit = group_benefit(matrix, group, repetition_vector_of(sched), bf)
    doc = {
        "d": sched.d,
        "benefit": benefit,
        "slots": [
            {"slot": r + 1, "topic": matrix.topic_ids[t], "occurrence": i}
            for r, (t, i) in enumerate(sched.slots)
        ],
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------------
# partition
# ---------------------------------------------------------------------------

def cmd_partition(args) -> int:
    matrix = RequirementMatrix.from_csv(args.matrix)
    cfg = PartitionConfig(
        K=args.k, d=args.d, seed=args.seed, sample_c=args.sample_c, restarts=args.restarts
    )
    res = ALGORITHMS[args.algo](matrix, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["student_id", "group"])
        for sid, g in zip(matrix.student_ids, res.partition.assignment):
            writer.writerow([sid, int(g)])
    meta = {
        "algorithm": args.algo,
        "K": args.k,
        "d": args.d,
        "seed": args.seed,
        "objective": res.partition.objective,
        "iterations": res.iterations,
        "runtime_ms": res.runtime_ms,
    }
    meta_path = out.with_suffix(".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out} and {meta_path}")
    return 0


# ---------------------------------------------------------------------------
# parser / main
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="cohortsched", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a dataset from a spec file")
    p.add_argument("spec", help="dataset spec (INI)")
    p.add_argument("--out", required=True, help="output matrix CSV path")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.add_argument("--base", type=int, default=None, help="grade-to-repetition base override")
    p.add_argument("--step", type=int, default=None, help="grade-to-repetition step override")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="run an experiment plan")
    p.add_argument("plan", help="experiment plan (INI)")
    p.add_argument("--out", default=None, help="override plan output CSV")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-timing", action="store_true",
                   help="blank the runtime_ms column for byte-reproducible output")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="randomized checks against the brute-force oracles")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--partition-instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replay", type=int, default=None, help="re-run one schedule instance verbosely")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("schedule", help="schedule one group from a matrix CSV")
    p.add_argument("matrix", help="requirement matrix CSV")
    p.add_argument("--group", default="all", help="comma-separated students or 'all'")
    p.add_argument("--d", type=int, required=True, help="number of timeslots")
    p.add_argument("--benefit", choices=["uniform", "geometric"], default="uniform")
    p.add_argument("--constraints", default=None, help="precedence constraints CSV")
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("partition", help="run one partitioning algorithm")
    p.add_argument("matrix", help="requirement matrix CSV")
    p.add_argument("--algo", choices=sorted(ALGORITHMS), default="cohpart")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-c", type=int, default=4, dest="sample_c")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--out", required=True, help="output partition CSV path")
    p.set_defaults(func=cmd_partition)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
