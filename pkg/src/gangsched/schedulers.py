"""Dispatch rules for gang scheduling and the two early-completion mechanisms.

Every selector is a pure function of the candidates it is handed. Candidates
are ``(key, width)`` pairs already sorted by decreasing priority; processors
are 1-based indices and a job always receives the lowest-indexed free ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

from gangsched.model import Job

Assignment = dict[Hashable, tuple[int, ...]]


def select_gang_fjp(candidates: Sequence[tuple[Hashable, int]], m: int | Sequence[int]) -> Assignment:
    """Greedy gang dispatch: place each job that still fits, skip the rest."""
    free = list(range(1, m + 1)) if isinstance(m, int) else list(m)
    out: Assignment = {}
    for key, width in candidates:
        if width <= len(free):
            out[key] = tuple(free[:width])
            del free[:width]
            if not free:
                break
    return out


def select_limited_gang(candidates: Sequence[tuple[Hashable, int]], m: int | Sequence[int]) -> Assignment:
    """Like :func:`select_gang_fjp` but the scan stops at the first job that does not fit."""
    free = list(range(1, m + 1)) if isinstance(m, int) else list(m)
    out: Assignment = {}
    for key, width in candidates:
        if width > len(free):
            break
        out[key] = tuple(free[:width])
        del free[:width]
    return out


@dataclass(frozen=True)
class IdleReservation:
    """Processors kept idle after ``job`` finished early.

    The reservation behaves as the rest of the job's worst-case run: it keeps
    the job's priority and width and lasts ``residual`` quanta of service, so
    its expiry is wherever the worst-case job would have completed.
    """

    job: Job
    processors: tuple[int, ...]
    residual: int
    spawned_at: int

    @property
    def width(self) -> int:
        return self.job.v


@dataclass(frozen=True)
class SlackServer:
    job: Job
    width: int
    length: int
    spawned_at: int

    @property
    def level(self) -> tuple[int, int]:
        return self.job.priority_key


def idling_on_early_completion(job: Job, executed: int, now: int,
                               processors: Iterable[int] = ()) -> IdleReservation | None:
    if executed >= job.e_wc:
        return None
    return IdleReservation(job, tuple(processors), job.e_wc - executed, now)


def spawn_slack_server(job: Job, executed: int, now: int) -> SlackServer | None:
    if executed >= job.e_wc:
        return None
    return SlackServer(job, job.v, job.e_wc - executed, now)


def slack_server_dispatch(server: SlackServer, processors: Sequence[int],
                          ready: Sequence[tuple[Hashable, tuple[int, int], int]]) -> Assignment:
    """Pack ready jobs into the processors a server holds this quantum.

    ``ready`` lists ``(key, priority_key, width)`` for active jobs the outer
    scheduler did not run, in priority order. Only jobs of lower priority than
    the server's level and no wider than the server are eligible; they are
    taken highest priority first while room remains.
    """
    free = list(processors)
    out: Assignment = {}
    for key, prio, width in ready:
        if not free:
            break
        if prio <= server.level or width > server.width or width > len(free):
            continue
        out[key] = tuple(free[:width])
        del free[:width]
    return out


EARLY_NONE = "none"
EARLY_IDLE = "idle"
EARLY_SERVER = "server"


@dataclass(frozen=True)
class Policy:
    name: str
    select: Callable[[Sequence[tuple[Hashable, int]], int], Assignment]
    on_early_completion: str = EARLY_NONE

    @property
    def limited(self) -> bool:
        return self.select is select_limited_gang


GANG_FJP = Policy("gang-fjp", select_gang_fjp)
LIMITED = Policy("limited", select_limited_gang)
IDLING = Policy("idling", select_gang_fjp, EARLY_IDLE)
SLACK_RECLAIMING = Policy("slack-reclaiming", select_gang_fjp, EARLY_SERVER)

POLICIES = {p.name: p for p in (GANG_FJP, LIMITED, IDLING, SLACK_RECLAIMING)}

# Compositions not covered by the predictability results; opt-in only.
EXPERIMENTAL_POLICIES = {
    "limited-idling": Policy("limited-idling", select_limited_gang, EARLY_IDLE),
    "limited-slack-reclaiming": Policy("limited-slack-reclaiming", select_limited_gang, EARLY_SERVER),
}


def get_policy(name: str | Policy, *, experimental: bool = False) -> Policy:
    if isinstance(name, Policy):
        return name
    if name in POLICIES:
        return POLICIES[name]
    if experimental and name in EXPERIMENTAL_POLICIES:
        return EXPERIMENTAL_POLICIES[name]
    known = ", ".join(POLICIES)
    raise ValueError(f"unknown policy {name!r} (expected one of: {known})")
