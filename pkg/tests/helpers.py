"""Instance generators and an independent reference simulator for the tests."""

from __future__ import annotations

import random

from gangsched.model import Job, Task, TaskSet, hyperperiod, job_set, stabilization_points

PERIODS = (2, 3, 4, 5, 6, 8, 10, 12)

INVERSION_SET = TaskSet([Task("T1", 0, 2, 2, 5, 5), Task("T2", 0, 2, 3, 5, 5), Task("T3", 0, 1, 4, 5, 5)], 3)
ANOMALY_JOBS = job_set([(0, 1, 3, 3), (0, 2, 1, 4), (0, 1, 2, 2)])
SLACK_WIDTHS = (2, 3, 1, 1, 2, 1)
SLACK_EXEC = (3, 1, 2, 2, 2, 1)
SLACK_JOBS = job_set([(0, v, e, 6) for v, e in zip(SLACK_WIDTHS, SLACK_EXEC)])


def random_task_set(rng: random.Random, *, n_max=4, m_max=4, offsets=True, window_max=None) -> TaskSet:
    while True:
        m = rng.randint(1, m_max)
        tasks = []
        for i in range(rng.randint(1, n_max)):
            T = rng.choice(PERIODS)
            D = rng.randint(1, T)
            C = rng.randint(1, D)
            O = rng.randint(0, 2 * T) if offsets else 0
            tasks.append(Task(f"T{i + 1}", O, rng.randint(1, m), C, D, T))
        ts = TaskSet(tasks, m)
        if window_max is None or stabilization_points(ts)[-1] + 3 * hyperperiod(ts) <= window_max:
            return ts


def random_job_instance(rng: random.Random, *, n_max=4, m_max=4, e_max=4):
    """Jobs by priority plus per-job ``(e_min, e_max)``; product of range sizes <= 256."""
    m = rng.randint(1, m_max)
    n = rng.randint(1, n_max)
    specs, ranges = [], []
    for _ in range(n):
        hi = rng.randint(1, e_max)
        lo = 1 if rng.random() < 0.7 else rng.randint(1, hi)
        r = rng.randint(0, 3)
        specs.append((r, rng.randint(1, m), hi, r + hi + rng.randint(0, 4)))
        ranges.append((lo, hi))
    return job_set(specs), ranges, m


def pm_order(jobs: list[Job], ranges):
    """Reorder by non-decreasing width (stable) and renumber priorities."""
    order = sorted(range(len(jobs)), key=lambda i: jobs[i].v)
    specs = [(jobs[i].r, jobs[i].v, jobs[i].e_wc, jobs[i].d) for i in order]
    return job_set(specs, [jobs[i].task_id for i in order]), [ranges[i] for i in order]


def reference_gang(jobs: list[Job], m: int, executions: dict, horizon: int, limited=False):
    """Plain re-implementation of greedy / limited gang dispatch without early-completion hooks.

    Returns the list of sigma rows and the completion time of every job.
    """
    jobs = sorted(jobs)
    left = {j.priority_key: executions.get(j.key, j.e_wc) for j in jobs}
    done = {}
    rows = []
    for t in range(horizon):
        free = list(range(m))
        row = [None] * m
        for j in jobs:
            if j.r > t or left[j.priority_key] == 0:
                continue
            if len(free) < j.v:
                if limited:
                    break
                continue
            for p in free[:j.v]:
                row[p] = j.task_id
            free = free[j.v:]
            left[j.priority_key] -= 1
            if left[j.priority_key] == 0:
                done[j.priority_key] = t + 1
        rows.append(tuple(row))
    return rows, done
