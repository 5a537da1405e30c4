import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gangsched.errors import ArithmeticOverflow, ValidationError, ViolationKind
from gangsched.model import (
    ExecutionProfile,
    Task,
    TaskSet,
    ceil_div,
    generate_jobs,
    hyperperiod,
    is_parallelism_monotonic,
    stabilization_points,
    validate_task_set,
)

from helpers import INVERSION_SET


def brute_lcm(values):
    x = max(values)
    while any(x % v for v in values):
        x += 1
    return x


def brute_stabilization(ts):
    out = []
    for t in ts:
        if not out:
            out.append(t.O)
            continue
        k = 0
        while t.O + k * t.T < out[-1]:
            k += 1
        out.append(t.O + k * t.T)
    return out


@st.composite
def task_sets(draw, max_tasks=5, max_period=12, max_offset=30):
    m = draw(st.integers(1, 4))
    n = draw(st.integers(1, max_tasks))
    tasks = []
    for i in range(n):
        T = draw(st.integers(1, max_period))
        D = draw(st.integers(1, T))
        C = draw(st.integers(1, D))
        tasks.append(Task(f"T{i}", draw(st.integers(0, max_offset)), draw(st.integers(1, m)), C, D, T))
    return TaskSet(tasks, m)


class TestValidate:
    def test_inversion_set_is_valid(self):
        assert validate_task_set(INVERSION_SET) is INVERSION_SET

    @pytest.mark.parametrize("task, m, kind", [
        (Task("a", 0, 1, 1, 6, 5), 2, ViolationKind.DEADLINE_EXCEEDS_PERIOD),
        (Task("a", 0, 4, 1, 5, 5), 2, ViolationKind.WIDTH_EXCEEDS_PLATFORM),
        (Task("a", 0, 1, 6, 5, 5), 2, ViolationKind.EXECUTION_EXCEEDS_DEADLINE),
        (Task("a", 0, 1, 0, 5, 5), 2, ViolationKind.NON_POSITIVE_FIELD),
        (Task("a", -1, 1, 1, 5, 5), 2, ViolationKind.NON_POSITIVE_FIELD),
    ])
    def test_single_violation(self, task, m, kind):
        with pytest.raises(ValidationError) as exc:
            validate_task_set(TaskSet([task], m))
        assert exc.value.kinds == {kind}
        assert exc.value.violations[0].task_id == "a"

    def test_reports_every_violation(self):
        ts = TaskSet([Task("a", 0, 3, 1, 6, 5), Task("a", 0, 1, 1, 5, 5)], 2)
        with pytest.raises(ValidationError) as exc:
            validate_task_set(ts)
        assert exc.value.kinds == {ViolationKind.DEADLINE_EXCEEDS_PERIOD,
                                   ViolationKind.WIDTH_EXCEEDS_PLATFORM,
                                   ViolationKind.DUPLICATE_ID}

    def test_empty_and_zero_platform(self):
        with pytest.raises(ValidationError) as exc:
            validate_task_set(TaskSet([], 0))
        assert ViolationKind.EMPTY_TASK_SET in exc.value.kinds
        assert ViolationKind.NON_POSITIVE_FIELD in exc.value.kinds


class TestGenerateJobs:
    def test_inversion_first_task(self):
        jobs = generate_jobs(TaskSet([INVERSION_SET[0]], 3), 10)
        assert [(j.r, j.v, j.e_wc, j.d) for j in jobs] == [(0, 2, 2, 5), (5, 2, 2, 10)]

    def test_zero_horizon(self):
        assert generate_jobs(INVERSION_SET, 0) == []

    def test_offset_task(self):
        jobs = generate_jobs(TaskSet([Task("x", 3, 1, 1, 2, 4)], 1), 12)
        assert [j.r for j in jobs] == [3, 7, 11]
        assert [j.d for j in jobs] == [5, 9, 13]

    @given(task_sets(), st.integers(0, 60))
    def test_closed_under_formula(self, ts, horizon):
        jobs = generate_jobs(ts, horizon)
        assert jobs == sorted(jobs)
        for job in jobs:
            task = ts[job.task_index]
            assert job.r == task.O + (job.k - 1) * task.T < horizon
            assert job.d == job.r + task.D
            assert (job.v, job.e_wc) == (task.v, task.C)
        # enumeration oracle: count of releases below the horizon
        for i, task in enumerate(ts):
            expected = sum(1 for k in range(0, horizon + 1) if task.O + k * task.T < horizon)
            assert sum(1 for j in jobs if j.task_index == i) == expected

    @given(task_sets())
    def test_jobs_of_a_task_never_overlap(self, ts):
        jobs = generate_jobs(ts, 50)
        for i in range(len(ts)):
            mine = [j for j in jobs if j.task_index == i]
            for a, b in zip(mine, mine[1:]):
                assert a.d <= b.r


class TestParallelismMonotonic:
    def test_inversion_widths(self):
        assert not is_parallelism_monotonic(INVERSION_SET)

    def test_sorted_widths(self):
        assert is_parallelism_monotonic(INVERSION_SET.reordered(["T3", "T1", "T2"]))

    def test_single_task(self):
        assert is_parallelism_monotonic(INVERSION_SET.prefix(1))


def _periods(*periods):
    return TaskSet([Task(f"t{i}", 0, 1, 1, T, T) for i, T in enumerate(periods)], 1)


class TestHyperperiod:
    @pytest.mark.parametrize("periods, expected", [((5, 5, 5), 5), ((2, 3), 6), ((4, 6, 10), 60)])
    def test_examples(self, periods, expected):
        assert hyperperiod(_periods(*periods)) == expected

    def test_example_against_brute_force(self):
        assert brute_lcm((4, 6, 10)) == 60

    def test_overflow_is_reported(self):
        with pytest.raises(ArithmeticOverflow):
            hyperperiod(_periods(7, 11, 13), limit=1000)
        big = _periods(2**40 - 87, 2**40 - 57)
        with pytest.raises(ArithmeticOverflow):
            hyperperiod(big)

    @given(st.lists(st.integers(1, 30), min_size=1, max_size=4))
    def test_brute_force(self, periods):
        if math.prod(periods) >= 10**4:
            return
        p = hyperperiod(_periods(*periods))
        assert all(p % T == 0 for T in periods)
        assert p == brute_lcm(periods)


class TestStabilizationPoints:
    def test_synchronous(self):
        assert stabilization_points(INVERSION_SET) == [0, 0, 0]

    def test_offset_examples(self):
        ts = TaskSet([Task("a", 1, 1, 1, 5, 5), Task("b", 0, 1, 1, 4, 4)], 1)
        assert stabilization_points(ts) == [1, 4]
        ts = TaskSet([Task("a", 0, 1, 1, 5, 5), Task("b", 7, 1, 1, 3, 3)], 1)
        assert stabilization_points(ts) == [0, 7]

    @pytest.mark.parametrize("a, b, expected", [(-7, 3, -2), (7, 3, 3), (6, 3, 2), (0, 4, 0), (-1, 4, 0)])
    def test_exact_ceiling(self, a, b, expected):
        assert ceil_div(a, b) == expected == math.ceil(a / b)

    @given(task_sets())
    def test_properties(self, ts):
        S = stabilization_points(ts)
        assert S == brute_stabilization(ts)
        for prev, cur, task in zip([S[0]] + S, S, ts):
            assert cur >= prev and cur >= task.O
            assert (cur - task.O) % task.T == 0

    def test_overflow(self):
        ts = TaskSet([Task("a", 2**62 + 1, 1, 1, 5, 5), Task("b", 0, 1, 1, 2**62, 2**62)], 1)
        with pytest.raises(ArithmeticOverflow):
            stabilization_points(ts)
        ts = TaskSet([Task("a", 11, 1, 1, 5, 5), Task("b", 0, 1, 1, 10, 10)], 1)
        with pytest.raises(ArithmeticOverflow):
            stabilization_points(ts, limit=15)


class TestExecutionProfile:
    def test_defaults_to_worst_case(self):
        job = generate_jobs(INVERSION_SET, 1)[0]
        assert ExecutionProfile().execution(job) == job.e_wc
        assert ExecutionProfile({("T1", 1): 1}).execution(job) == 1
        assert ExecutionProfile(per_task={"T1": 1}).execution(job) == 1

    def test_rejects_out_of_range(self):
        jobs = generate_jobs(INVERSION_SET, 1)
        with pytest.raises(ValueError):
            ExecutionProfile({("T1", 1): 0}).check(jobs)
        with pytest.raises(ValueError):
            ExecutionProfile({("T1", 1): 3}).check(jobs)
