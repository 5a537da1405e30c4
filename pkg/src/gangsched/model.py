"""Periodic rigid gang tasks, their jobs, and the integer arithmetic around them.

Tasks are listed in decreasing priority order: index 0 is the highest
priority task. Time is discrete and every parameter is a non-negative integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from gangsched.errors import (
    ArithmeticOverflow,
    ValidationError,
    Violation,
    ViolationKind,
)

# Largest value any derived time quantity may take (signed 64-bit).
INT_LIMIT = 2**63 - 1

# Label used for an idle processor in schedules; no task may use it as id.
IDLE_LABEL = "0"


@dataclass(frozen=True)
class Platform:
    m: int


@dataclass(frozen=True)
class Task:
    id: str
    O: int  # offset
    v: int  # width
    C: int  # worst-case execution
    D: int  # relative deadline
    T: int  # period

    def job(self, index: int, k: int) -> "Job":
        r = self.O + (k - 1) * self.T
        return Job(self.id, index, k, r, self.v, self.C, r + self.D)


@dataclass(frozen=True)
class TaskSet:
    tasks: tuple[Task, ...]
    platform: Platform

    def __init__(self, tasks: Iterable[Task], platform: Platform | int):
        if isinstance(platform, int):
            platform = Platform(platform)
        object.__setattr__(self, "tasks", tuple(tasks))
        object.__setattr__(self, "platform", platform)

    @property
    def m(self) -> int:
        return self.platform.m

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self):
        return iter(self.tasks)

    def __getitem__(self, i):
        return self.tasks[i]

    def index_of(self, task_id: str) -> int:
        for i, t in enumerate(self.tasks):
            if t.id == task_id:
                return i
        raise KeyError(task_id)

    def prefix(self, n: int) -> "TaskSet":
        return TaskSet(self.tasks[:n], self.platform)

    def reordered(self, order: Sequence[str]) -> "TaskSet":
        by_id = {t.id: t for t in self.tasks}
        return TaskSet([by_id[i] for i in order], self.platform)


@dataclass(frozen=True, order=True)
class Job:
    """One released instance ``(r, v, e_wc, d)``.

    ``task_index`` is the priority rank of the generating task, so
    ``priority_key`` orders jobs by fixed task priority first, then by
    instance number.
    """

    task_id: str = field(compare=False)
    task_index: int
    k: int
    r: int = field(compare=False)
    v: int = field(compare=False)
    e_wc: int = field(compare=False)
    d: int = field(compare=False)

    @property
    def priority_key(self) -> tuple[int, int]:
        return (self.task_index, self.k)

    @property
    def key(self) -> tuple[str, int]:
        return (self.task_id, self.k)

    @property
    def name(self) -> str:
        return self.task_id if self.k == 1 else f"{self.task_id}#{self.k}"


def job_set(specs: Sequence[tuple[int, int, int, int]], names: Sequence[str] | None = None) -> list[Job]:
    """Build a finite job set from ``(r, v, e, d)`` tuples listed by decreasing priority."""
    if names is None:
        names = [f"J{i + 1}" for i in range(len(specs))]
    return [Job(name, i, 1, r, v, e, d) for i, (name, (r, v, e, d)) in enumerate(zip(names, specs))]


class ExecutionProfile:
    """Actual execution time of each job, keyed by ``(task_id, k)``.

    Jobs missing from the mapping run for their worst case. ``per_task``
    gives a default per task id, used when a job has no explicit entry.
    """

    def __init__(self, executions: Mapping[tuple[str, int], int] | None = None,
                 per_task: Mapping[str, int] | None = None):
        self._executions = dict(executions or {})
        self._per_task = dict(per_task or {})

    @classmethod
    def worst_case(cls) -> "ExecutionProfile":
        return cls()

    def execution(self, job: Job) -> int:
        e = self._executions.get(job.key)
        if e is None:
            e = self._per_task.get(job.task_id, job.e_wc)
        return e

    @property
    def is_worst_case(self) -> bool:
        return not self._executions and not self._per_task

    def items(self):
        return self._executions.items()

    def check(self, jobs: Iterable[Job]) -> None:
        bad = []
        for job in jobs:
            e = self.execution(job)
            if not 1 <= e <= job.e_wc:
                bad.append(f"{job.name}: e={e} outside [1, {job.e_wc}]")
        if bad:
            raise ValueError("invalid execution profile: " + "; ".join(bad))

    def __eq__(self, other):
        if not isinstance(other, ExecutionProfile):
            return NotImplemented
        return self._executions == other._executions and self._per_task == other._per_task

    def __repr__(self):
        return f"ExecutionProfile({self._executions!r}, per_task={self._per_task!r})"


def task_set_violations(ts: TaskSet) -> list[Violation]:
    out: list[Violation] = []
    m = ts.platform.m
    if m < 1:
        out.append(Violation(ViolationKind.NON_POSITIVE_FIELD, None, f"platform m={m} must be >= 1"))
    if not ts.tasks:
        out.append(Violation(ViolationKind.EMPTY_TASK_SET, None, "task set has no tasks"))
    seen: set[str] = set()
    for t in ts.tasks:
        if t.id in seen:
            out.append(Violation(ViolationKind.DUPLICATE_ID, t.id, "duplicate task id"))
        seen.add(t.id)
        if t.id == IDLE_LABEL:
            out.append(Violation(ViolationKind.RESERVED_ID, t.id, "id collides with the idle label"))
        positive = {"v": t.v, "C": t.C, "D": t.D, "T": t.T}
        non_positive = [f"{k}={val}" for k, val in positive.items() if val < 1]
        if t.O < 0:
            non_positive.append(f"O={t.O}")
        if non_positive:
            out.append(Violation(ViolationKind.NON_POSITIVE_FIELD, t.id, ", ".join(non_positive)))
            continue
        if t.D > t.T:
            out.append(Violation(ViolationKind.DEADLINE_EXCEEDS_PERIOD, t.id, f"D={t.D} > T={t.T}"))
        if t.C > t.D:
            out.append(Violation(ViolationKind.EXECUTION_EXCEEDS_DEADLINE, t.id, f"C={t.C} > D={t.D}"))
        if m >= 1 and t.v > m:
            out.append(Violation(ViolationKind.WIDTH_EXCEEDS_PLATFORM, t.id, f"v={t.v} > m={m}"))
    return out


def validate_task_set(ts: TaskSet) -> TaskSet:
    """Return ``ts`` unchanged, or raise ValidationError listing every violation."""
    violations = task_set_violations(ts)
    if violations:
        raise ValidationError(violations)
    return ts


def generate_jobs(ts: TaskSet, horizon: int) -> list[Job]:
    """All jobs released strictly before ``horizon``, in priority order."""
    jobs = []
    for i, task in enumerate(ts.tasks):
        if horizon <= task.O:
            continue
        count = ceil_div(horizon - task.O, task.T)
        jobs.extend(task.job(i, k) for k in range(1, count + 1))
    return jobs


def is_parallelism_monotonic(ts: TaskSet) -> bool:
    widths = [t.v for t in ts.tasks]
    return all(a <= b for a, b in zip(widths, widths[1:]))


def ceil_div(a: int, b: int) -> int:
    """Exact integer ceiling of a / b for b > 0, including negative a."""
    return -((-a) // b)


def _checked(value: int, limit: int, what: str) -> int:
    if value > limit:
        raise ArithmeticOverflow(f"{what} = {value} exceeds limit {limit}")
    return value


def hyperperiod(ts: TaskSet, limit: int = INT_LIMIT) -> int:
    if not ts.tasks:
        raise ValueError("hyperperiod of an empty task set")
    p = 1
    for t in ts.tasks:
        p = _checked(p // math.gcd(p, t.T) * t.T, limit, "hyperperiod")
    return p


def stabilization_points(ts: TaskSet, limit: int = INT_LIMIT) -> list[int]:
    """Instants S_1..S_n from which each priority prefix repeats.

    S_1 is the first offset; each later S_i is the first release of task i
    that is not before S_{i-1}.
    """
    points: list[int] = []
    for t in ts.tasks:
        if not points:
            s = t.O
        else:
            s = max(t.O, t.O + ceil_div(points[-1] - t.O, t.T) * t.T)
        points.append(_checked(s, limit, "stabilization point"))
    return points
