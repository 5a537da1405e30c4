"""Quantum-stepped simulation of gang-scheduled jobs.

Each quantum ``t`` is processed in a fixed order:

1. release jobs with ``r == t`` and record deadline misses (``d == t`` with
   work left);
2. run completion hooks for jobs whose actual execution is exhausted;
3. let the policy pick the outer assignment, then let running slack servers
   pick their inner assignment;
4. charge one quantum of service to everything that ran;
5. append ``sigma(t)``.

A job that finishes before its worst case under the idling or slack
reclaiming policies is not removed. Its remaining worst-case budget lives on
as a *lineage* that keeps the job's priority and width: an idle reservation
or a slack server. The outer scheduler cannot tell the difference, which is
what keeps those policies' outer schedules equal to the worst case.
"""

from __future__ import annotations

import bisect
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

from gangsched.errors import HorizonOverflow
from gangsched.model import IDLE_LABEL, ExecutionProfile, Job, TaskSet, generate_jobs
from gangsched.schedulers import (
    EARLY_IDLE,
    EARLY_SERVER,
    IdleReservation,
    Policy,
    SlackServer,
    get_policy,
    idling_on_early_completion,
    slack_server_dispatch,
    spawn_slack_server,
)

DEFAULT_HORIZON_CAP = 10_000_000
HORIZON_CAP_ENV = "GANGSCHED_HORIZON_CAP"

# Per-processor occupancy modes recorded alongside sigma(t).
MODE_IDLE = "."
MODE_RUN = "R"  # job runs at the outer level
MODE_SERVED = "S"  # job runs inside a slack server
MODE_SERVER = "s"  # slack server holds the processor but serves nothing
MODE_RESERVED = "v"  # idle reservation holds the processor

KIND_JOB = "job"
KIND_RESERVATION = "reservation"
KIND_SERVER = "server"


def horizon_cap() -> int:
    value = os.environ.get(HORIZON_CAP_ENV)
    return int(value) if value else DEFAULT_HORIZON_CAP


def _is_idle(entry) -> bool:
    return entry is None or entry == 0 or entry == IDLE_LABEL


def availability(slot: Sequence) -> set[int]:
    """1-based indices of the idle processors in ``slot``."""
    return {j for j, entry in enumerate(slot, start=1) if _is_idle(entry)}


def level_availability(slot: Sequence, width: int) -> int:
    free = len(availability(slot))
    return free if free >= width else 0


def limited_level_availability(slot: Sequence, widths: Sequence[int], i: int) -> int:
    """Availability seen by the ``i``-th job (1-based) when the scan stops at the first misfit.

    ``slot`` is the schedule produced by the higher-priority prefix and
    ``widths`` the widths in priority order. Level 0 is ``len(slot)``.
    """
    free = len(availability(slot))
    value = len(slot)
    for level in range(1, i + 1):
        if value == 0:
            return 0
        value = free if free >= widths[level - 1] else 0
    return value


@dataclass(frozen=True)
class ScheduleTrace:
    """sigma(t) for t in [0, horizon) plus what held each processor.

    ``slots[t][j]`` is the label of the job running on processor ``j + 1``
    (``None`` when idle). ``modes[t]`` has one character per processor, see
    the ``MODE_*`` constants. ``holders[t][j]`` is the index in ``jobs`` of
    the lineage holding the processor at the outer level, while
    ``occupants[t][j]`` is the index of the job actually executing there
    (which differs inside a slack server). ``ends[i]`` is
    when lineage ``i`` stopped being active, ``None`` if it is still active
    at the end of the trace.
    """

    m: int
    slots: tuple[tuple[str | None, ...], ...]
    modes: tuple[str, ...] | None = None
    holders: tuple[tuple[int | None, ...], ...] | None = None
    jobs: tuple[Job, ...] = ()
    ends: tuple[int | None, ...] = ()
    completions: tuple[int | None, ...] = ()
    occupants: tuple[tuple[int | None, ...], ...] | None = None

    @property
    def horizon(self) -> int:
        return len(self.slots)

    def index_of(self, job: Job) -> int:
        for i, j in enumerate(self.jobs):
            if j.priority_key == job.priority_key:
                return i
        raise KeyError(job.name)

    def job_positions(self, t: int, job: Job) -> tuple[int, ...]:
        """Processors (1-based) on which ``job`` executes at ``t``, outer or inside a server."""
        index = self.index_of(job)
        return tuple(j for j, occ in enumerate(self.occupants[t], start=1) if occ == index)

    def without_inner_service(self) -> "ScheduleTrace":
        """Copy with every cell served inside a slack server blanked out."""
        slots, modes, occupants = [], [], []
        for row, mode, occ in zip(self.slots, self.modes, self.occupants):
            slots.append(tuple(None if c == MODE_SERVED else e for e, c in zip(row, mode)))
            occupants.append(tuple(None if c == MODE_SERVED else o for o, c in zip(occ, mode)))
            modes.append(mode.replace(MODE_SERVED, MODE_SERVER))
        return replace(self, slots=tuple(slots), modes=tuple(modes), occupants=tuple(occupants))


class Event(NamedTuple):
    t: int
    kind: str
    job: str
    detail: str = ""


@dataclass(frozen=True)
class ActiveEntry:
    task_index: int
    k: int
    task_id: str
    age: int
    remaining: int
    budget: int
    kind: str
    width: int


@dataclass(frozen=True)
class SimState:
    """What the engine knows at ``t`` after releases and completion hooks."""

    t: int
    active: tuple[ActiveEntry, ...]
    phases: tuple[int | None, ...]


class Digest(NamedTuple):
    tasks: tuple[tuple[int, int | None], ...]
    jobs: tuple[tuple[int, int, int, int], ...]
    servers: tuple[tuple[int, int, int, int], ...]
    reservations: tuple[tuple[int, int, int, int], ...]


def state_digest(state: SimState) -> Digest:
    """Canonical, time-shift invariant summary of ``state``.

    Per task: total remaining execution and release phase. Then the exact
    multiset of active jobs, servers and reservations, each by task, age
    since release, remaining work and remaining budget (or width).
    """
    remaining = [0] * len(state.phases)
    jobs, servers, reservations = [], [], []
    for a in state.active:
        if a.kind == KIND_JOB:
            remaining[a.task_index] += a.remaining
            jobs.append((a.task_index, a.age, a.remaining, a.budget))
        elif a.kind == KIND_SERVER:
            servers.append((a.task_index, a.age, a.width, a.budget))
        else:
            reservations.append((a.task_index, a.age, a.width, a.budget))
    return Digest(
        tuple(zip(remaining, state.phases)),
        tuple(sorted(jobs)),
        tuple(sorted(servers)),
        tuple(sorted(reservations)),
    )


@dataclass
class SimResult:
    trace: ScheduleTrace
    state: SimState
    events: list[Event]
    misses: list[tuple[Job, int]]
    snapshots: dict[int, SimState] = field(default_factory=dict)
    servers: list[SlackServer] = field(default_factory=list)
    reservations: list[IdleReservation] = field(default_factory=list)
    stopped_at: int | None = None

    @property
    def jobs(self) -> tuple[Job, ...]:
        return self.trace.jobs

    def job(self, name: str) -> Job:
        for j in self.trace.jobs:
            if j.name == name:
                return j
        raise KeyError(name)

    def start_finish(self, job: Job | str):
        if isinstance(job, str):
            job = self.job(job)
        return start_finish_times(self.trace, job)

    def completion(self, job: Job | str) -> int | None:
        """When the job's actual work was done (before any reservation or server)."""
        if isinstance(job, str):
            job = self.job(job)
        return self.trace.completions[self.trace.index_of(job)]


class _Lineage:
    __slots__ = ("job", "index", "remaining", "budget", "kind", "outer_run",
                 "last_ran", "started", "missed", "server", "reservation")

    def __init__(self, job: Job, index: int, execution: int):
        self.job = job
        self.index = index
        self.remaining = execution
        self.budget = job.e_wc
        self.kind = KIND_JOB
        self.outer_run = 0
        self.last_ran = -2
        self.started = False
        self.missed = False
        self.server: SlackServer | None = None
        self.reservation: IdleReservation | None = None


def simulate_jobs(
    jobs: Sequence[Job],
    m: int,
    policy: Policy | str,
    profile: ExecutionProfile | None = None,
    horizon: int = 0,
    *,
    stop_on_miss: bool = False,
    snapshots: Iterable[int] = (),
    tasks: TaskSet | None = None,
    cap: int | None = None,
    check_profile: bool = True,
) -> SimResult:
    """Simulate a job set over ``[0, horizon)``.

    ``jobs`` need not be sorted; priority is their ``priority_key``. The
    returned state is taken at ``horizon`` after its releases and hooks.
    ``snapshots`` requests extra states at other instants.
    """
    policy = get_policy(policy)
    cap = horizon_cap() if cap is None else cap
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if horizon > cap:
        raise HorizonOverflow(horizon, cap)
    profile = profile or ExecutionProfile.worst_case()
    jobs = tuple(sorted(jobs))
    if check_profile:
        profile.check(jobs)
    select = policy.select
    early = policy.on_early_completion

    by_release: dict[int, list[int]] = {}
    for i, job in enumerate(jobs):
        if job.r <= horizon:
            by_release.setdefault(job.r, []).append(i)
    by_deadline: dict[int, list[int]] = {}
    for i, job in enumerate(jobs):
        by_deadline.setdefault(job.d, []).append(i)

    n_tasks = (len(tasks) if tasks is not None
               else (max(j.task_index for j in jobs) + 1 if jobs else 0))
    latest_release: dict[int, int] = {}
    wanted = set(snapshots)

    active: dict[int, _Lineage] = {}
    order: list[int] = []  # active indices, priority order
    slots: list[tuple] = []
    modes: list[str] = []
    holders: list[tuple] = []
    occupants: list[tuple] = []
    ends: list[int | None] = [None] * len(jobs)
    completions: list[int | None] = [None] * len(jobs)
    events: list[Event] = []
    misses: list[tuple[Job, int]] = []
    taken: dict[int, SimState] = {}
    servers: list[SlackServer] = []
    reservations: list[IdleReservation] = []
    last_outer: dict[int, tuple[int, ...]] = {}
    stopped_at = None

    def snapshot(t: int) -> SimState:
        entries = tuple(
            ActiveEntry(l.job.task_index, l.job.k, l.job.task_id, t - l.job.r,
                        l.remaining, l.budget, l.kind, l.job.v)
            for l in (active[i] for i in order)
        )
        if tasks is not None:
            phases = tuple((t - task.O) % task.T if t >= task.O else t - task.O for task in tasks)
        else:
            phases = tuple(t - latest_release[i] if i in latest_release else None
                           for i in range(n_tasks))
        return SimState(t, entries, phases)

    def retire(i: int, t: int) -> None:
        del active[i]
        order.remove(i)
        ends[i] = t

    t = 0
    while True:
        # 1. releases and deadline checks
        for i in by_release.get(t, ()):
            job = jobs[i]
            lin = _Lineage(job, i, profile.execution(job))
            active[i] = lin
            bisect.insort(order, i)
            latest_release[job.task_index] = t
            events.append(Event(t, "release", job.name))
        missed_now = False
        for i in by_deadline.get(t, ()):
            lin = active.get(i)
            if lin is not None and lin.kind == KIND_JOB and lin.remaining > 0:
                lin.missed = True
                misses.append((lin.job, t))
                events.append(Event(t, "deadline_miss", lin.job.name, f"remaining={lin.remaining}"))
                missed_now = True

        # 2. completion hooks
        for i in list(order):
            lin = active[i]
            if lin.kind == KIND_JOB and lin.remaining == 0:
                completions[i] = t
                events.append(Event(t, "complete", lin.job.name, f"outer={lin.outer_run}"))
                if lin.budget > 0 and early == EARLY_IDLE:
                    lin.reservation = idling_on_early_completion(
                        lin.job, lin.outer_run, t, last_outer.get(i, ()))
                    reservations.append(lin.reservation)
                    lin.kind = KIND_RESERVATION
                    events.append(Event(t, "reservation", lin.job.name, f"residual={lin.budget}"))
                elif lin.budget > 0 and early == EARLY_SERVER:
                    lin.server = spawn_slack_server(lin.job, lin.outer_run, t)
                    servers.append(lin.server)
                    lin.kind = KIND_SERVER
                    events.append(Event(t, "server_spawn", lin.job.name,
                                        f"width={lin.server.width} length={lin.server.length}"))
                else:
                    retire(i, t)
            elif lin.kind != KIND_JOB and lin.budget == 0:
                events.append(Event(t, f"{lin.kind}_end", lin.job.name))
                retire(i, t)

        if t in wanted:
            taken[t] = snapshot(t)
        if t >= horizon or (stop_on_miss and missed_now):
            if stop_on_miss and missed_now:
                stopped_at = t
            break

        # 3. outer selection, then inner service
        outer = select([(i, active[i].job.v) for i in order], m)
        row: list[str | None] = [None] * m
        mode = [MODE_IDLE] * m
        holder: list[int | None] = [None] * m
        occ: list[int | None] = [None] * m
        for i in order:
            procs = outer.get(i)
            lin = active[i]
            if procs is None:
                if lin.last_ran == t - 1:
                    events.append(Event(t, "preempt", lin.job.name))
                continue
            if not lin.started:
                lin.started = True
                events.append(Event(t, "start", lin.job.name))
            cell = MODE_RUN if lin.kind == KIND_JOB else (
                MODE_SERVER if lin.kind == KIND_SERVER else MODE_RESERVED)
            for p in procs:
                holder[p - 1] = i
                mode[p - 1] = cell
                if cell == MODE_RUN:
                    row[p - 1] = lin.job.task_id
                    occ[p - 1] = i
        if outer:
            lowest_running = max(outer)
            for i in order:
                if i >= lowest_running:
                    break
                if i not in outer:
                    for j in outer:
                        if j > i:
                            events.append(Event(t, "inversion", active[j].job.name,
                                                f"over={active[i].job.name}"))

        served: dict[int, tuple[int, ...]] = {}
        if early == EARLY_SERVER:
            ready = None
            for i in order:
                lin = active[i]
                if lin.kind != KIND_SERVER or i not in outer:
                    continue
                if ready is None:
                    ready = [(j, active[j].job.priority_key, active[j].job.v) for j in order
                             if j not in outer and active[j].kind == KIND_JOB and active[j].remaining > 0]
                inner = slack_server_dispatch(lin.server, outer[i],
                                              [c for c in ready if c[0] not in served])
                for j, procs in inner.items():
                    served[j] = procs
                    for p in procs:
                        row[p - 1] = active[j].job.task_id
                        occ[p - 1] = j
                        mode[p - 1] = MODE_SERVED

        # 4. charge service
        for i, procs in outer.items():
            lin = active[i]
            lin.budget -= 1
            lin.last_ran = t
            if lin.kind == KIND_JOB:
                lin.remaining -= 1
                lin.outer_run += 1
        for j in served:
            active[j].remaining -= 1
            events.append(Event(t, "served", active[j].job.name))
        last_outer = dict(outer)

        # 5. record sigma(t)
        slots.append(tuple(row))
        modes.append("".join(mode))
        holders.append(tuple(holder))
        occupants.append(tuple(occ))
        t += 1

    trace = ScheduleTrace(m, tuple(slots), tuple(modes), tuple(holders), jobs,
                          tuple(ends), tuple(completions), tuple(occupants))
    final = taken.get(t) or snapshot(t)
    return SimResult(trace, final, events, misses, taken, servers, reservations, stopped_at)


def simulate(
    ts: TaskSet,
    policy: Policy | str,
    profile: ExecutionProfile | None = None,
    horizon: int = 0,
    **kwargs,
) -> SimResult:
    """Simulate the periodic task set ``ts`` over ``[0, horizon)``."""
    cap = kwargs.get("cap")
    cap = horizon_cap() if cap is None else cap
    if horizon > cap:
        raise HorizonOverflow(horizon, cap)
    jobs = generate_jobs(ts, horizon + 1)
    return simulate_jobs(jobs, ts.m, policy, profile, horizon, tasks=ts, **kwargs)


def start_finish_times(trace: ScheduleTrace, job: Job) -> tuple[int, int | None] | None:
    """Start and finish of ``job`` at the outer level, or ``None`` if it never started.

    Start is the first quantum the job (or anything standing in for it) held
    processors at the outer level. Finish is when it released them for good;
    under idling and slack reclaiming that includes the reservation or server
    that replaced the job's unused worst-case budget. Finish is ``None`` when
    the job is still active at the end of the trace.
    """
    index = trace.index_of(job)
    for t in range(max(job.r, 0), trace.horizon):
        if index in trace.holders[t]:
            return (t, trace.ends[index])
    return None
