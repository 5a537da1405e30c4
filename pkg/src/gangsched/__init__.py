"""Simulation and exact schedulability analysis of periodic rigid gang tasks."""

from gangsched.analysis import (
    PredictabilityReport,
    Verdict,
    detect_priority_inversion,
    exact_schedulability_test,
    predictability_probe,
    verify_schedule_periodicity,
)
from gangsched.engine import (
    ScheduleTrace,
    SimResult,
    SimState,
    availability,
    level_availability,
    limited_level_availability,
    simulate,
    simulate_jobs,
    start_finish_times,
    state_digest,
)
from gangsched.model import (
    ExecutionProfile,
    Job,
    Platform,
    Task,
    TaskSet,
    generate_jobs,
    hyperperiod,
    is_parallelism_monotonic,
    job_set,
    stabilization_points,
    validate_task_set,
)
from gangsched.schedulers import POLICIES, Policy, get_policy

__version__ = "0.1.0"
