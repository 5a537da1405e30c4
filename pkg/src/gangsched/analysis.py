"""Schedulability, periodicity and predictability checks built on the engine."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from gangsched.engine import (
    Digest,
    ScheduleTrace,
    horizon_cap,
    simulate,
    simulate_jobs,
    start_finish_times,
    state_digest,
)
from gangsched.errors import HorizonOverflow, PolicyNotPredictable
from gangsched.model import (
    ExecutionProfile,
    Job,
    TaskSet,
    hyperperiod,
    is_parallelism_monotonic,
    stabilization_points,
    validate_task_set,
)
from gangsched.schedulers import GANG_FJP, Policy, get_policy

DEFAULT_PROFILE_CAP = 1 << 16


@dataclass(frozen=True)
class DeadlineMissWitness:
    task_id: str
    k: int
    t: int


@dataclass(frozen=True)
class StateMismatchWitness:
    at_start: Digest
    at_end: Digest


@dataclass(frozen=True)
class Verdict:
    schedulable: bool
    witness: DeadlineMissWitness | StateMismatchWitness | None
    window: tuple[int, int]
    S: tuple[int, ...]
    P: int
    policy: str
    forced: bool = False

    @property
    def wording(self) -> str:
        if not self.schedulable:
            return "not schedulable"
        return "worst-case-schedulable only" if self.forced else "schedulable"


def _check_exact_policy(ts: TaskSet, policy: Policy, force: bool) -> bool:
    """Return True when the verdict has to be downgraded because of ``force``."""
    if policy.name == GANG_FJP.name and not is_parallelism_monotonic(ts):
        if not force:
            raise PolicyNotPredictable(
                "gang-fjp without a parallelism monotonic priority order is not "
                "predictable; pass force=True for a worst-case-only verdict")
        return True
    return False


def exact_schedulability_test(ts: TaskSet, policy: Policy | str, *, force: bool = False,
                              cap: int | None = None) -> Verdict:
    """Decide schedulability by simulating the worst case over ``[0, S_n + P]``.

    The set is schedulable iff no deadline is missed in that window and the
    state at ``S_n`` equals the state at ``S_n + P``.
    """
    validate_task_set(ts)
    policy = get_policy(policy)
    forced = _check_exact_policy(ts, policy, force)
    cap = horizon_cap() if cap is None else cap
    S = tuple(stabilization_points(ts))
    P = hyperperiod(ts)
    end = S[-1] + P
    if end > cap:
        raise HorizonOverflow(end, cap)
    result = simulate(ts, policy, None, end, snapshots=(S[-1], end), stop_on_miss=True, cap=cap)
    window = (0, end)
    if result.misses:
        job, t = result.misses[0]
        return Verdict(False, DeadlineMissWitness(job.task_id, job.k, t), window, S, P, policy.name, forced)
    first = state_digest(result.snapshots[S[-1]])
    last = state_digest(result.snapshots[end])
    if first != last:
        return Verdict(False, StateMismatchWitness(first, last), window, S, P, policy.name, forced)
    return Verdict(True, None, window, S, P, policy.name, forced)


@dataclass(frozen=True)
class PeriodicityResult:
    periodic: bool
    start: int
    period: int
    first_divergence: int | None


def verify_schedule_periodicity(ts: TaskSet, policy: Policy | str, *,
                                cap: int | None = None) -> PeriodicityResult:
    """Check ``sigma(t) == sigma(t + P)`` for every ``t`` in ``[S_n, S_n + P)``."""
    validate_task_set(ts)
    start = stabilization_points(ts)[-1]
    P = hyperperiod(ts)
    result = simulate(ts, policy, None, start + 2 * P, cap=cap)
    slots = result.trace.slots
    for t in range(start, start + P):
        if slots[t] != slots[t + P]:
            return PeriodicityResult(False, start, P, t)
    return PeriodicityResult(True, start, P, None)


def detect_priority_inversion(trace: ScheduleTrace, jobs: Sequence[Job] | None = None):
    """Every ``(t, lower, higher)`` where ``lower`` runs at the outer level
    while the active, higher-priority ``higher`` does not.

    A job counts as active from its release until it (or whatever stands in
    for its unused budget) releases its processors for the last time.
    """
    jobs = list(trace.jobs if jobs is None else jobs)
    indices = sorted(trace.index_of(j) for j in jobs)
    out = []
    for t in range(trace.horizon):
        running = set(trace.holders[t])
        active = [i for i in indices
                  if trace.jobs[i].r <= t and (trace.ends[i] is None or t < trace.ends[i])]
        for hi in active:
            if hi in running:
                continue
            for lo in active:
                if lo > hi and lo in running:
                    out.append((t, trace.jobs[lo], trace.jobs[hi]))
    return out


@dataclass(frozen=True)
class Violation:
    profile: tuple[int, ...]
    index: int
    bound: str
    values: tuple[int | None, int | None, int | None]

    def __str__(self):
        lo, mid, hi = self.values
        return (f"profile={list(self.profile)} i={self.index} {self.bound}: "
                f"minus={lo} actual={mid} plus={hi}")


@dataclass
class PredictabilityReport:
    violations: list[Violation]
    profiles_tested: int
    strategy: str
    policy: str
    coverage: int
    seed: int | None = None
    applicable: bool = True
    skipped_prefixes: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _times(jobs: Sequence[Job], m: int, policy: Policy, executions: Sequence[int]):
    profile = ExecutionProfile({j.key: e for j, e in zip(jobs, executions)})
    horizon = max(max(j.r for j in jobs), max(j.d for j in jobs)) + sum(j.e_wc for j in jobs) + 1
    result = simulate_jobs(jobs, m, policy, profile, horizon, check_profile=False)
    sf = start_finish_times(result.trace, jobs[-1])
    start, finish = (None, None) if sf is None else sf
    return start, finish, bool(result.misses)


def predictability_probe(
    jobs: Sequence[Job],
    bounds: Mapping[tuple[str, int], tuple[int, int]] | Sequence[tuple[int, int]],
    policy: Policy | str,
    m: int,
    strategy: str = "exhaustive",
    *,
    seed: int = 0,
    count: int = 1000,
    cap: int = DEFAULT_PROFILE_CAP,
) -> PredictabilityReport:
    """Search execution profiles for start or finish times outside the extreme-profile bounds.

    ``bounds`` gives ``(e_min, e_max)`` per job, either aligned with the
    priority-sorted ``jobs`` or keyed by ``(task_id, k)``. For every profile
    and every priority prefix ``J(i)`` the start and finish of the prefix's
    lowest-priority job must lie between those obtained with all minima and
    all maxima. Prefixes that miss a deadline with all maxima are skipped.
    """
    policy = get_policy(policy)
    jobs = sorted(jobs)
    if isinstance(bounds, Mapping):
        ranges = [bounds.get(j.key, (j.e_wc, j.e_wc)) for j in jobs]
    else:
        ranges = list(bounds)
    jobs = [Job(j.task_id, j.task_index, j.k, j.r, j.v, hi, j.d) for j, (_, hi) in zip(jobs, ranges)]
    lows = tuple(lo for lo, _ in ranges)
    highs = tuple(hi for _, hi in ranges)
    n = len(jobs)

    cache: dict[tuple[int, ...], tuple] = {}

    def times(prefix_profile: tuple[int, ...]):
        value = cache.get(prefix_profile)
        if value is None:
            value = cache[prefix_profile] = _times(jobs[:len(prefix_profile)], m, policy, prefix_profile)
        return value

    skipped = [i for i in range(1, n + 1) if times(highs[:i])[2]]
    checked = [i for i in range(1, n + 1) if i not in skipped]

    space = 1
    for lo, hi in ranges:
        space *= hi - lo + 1
    if strategy == "exhaustive":
        if space > cap:
            raise ValueError(f"{space} profiles exceed the exhaustive cap {cap}; use random sampling")
        profiles = itertools.product(*(range(lo, hi + 1) for lo, hi in ranges))
        used_seed = None
    elif strategy == "random":
        rng = random.Random(seed)
        profiles = (tuple(rng.randint(lo, hi) for lo, hi in ranges) for _ in range(count))
        used_seed = seed
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    report = PredictabilityReport([], 0, strategy, policy.name, space, used_seed,
                                  applicable=bool(checked), skipped_prefixes=skipped)
    seen: set[tuple[int, ...]] = set()
    for profile in profiles:
        report.profiles_tested += 1
        for i in checked:
            s_lo, f_lo, _ = times(lows[:i])
            s_hi, f_hi, _ = times(highs[:i])
            key = (i,) + profile[:i]
            if key in seen:
                continue
            seen.add(key)
            s, f, _ = times(profile[:i])
            if not _between(s_lo, s, s_hi):
                report.violations.append(Violation(profile, i, "start", (s_lo, s, s_hi)))
            if not _between(f_lo, f, f_hi):
                late = f is None or f > jobs[i - 1].d
                bound = "finish (deadline miss)" if late else "finish"
                report.violations.append(Violation(profile, i, bound, (f_lo, f, f_hi)))
    report.violations.sort(key=lambda v: (v.profile, v.index, v.bound))
    return report


def _between(lo, x, hi) -> bool:
    if lo is None or x is None or hi is None:
        return lo == x == hi
    return lo <= x <= hi
