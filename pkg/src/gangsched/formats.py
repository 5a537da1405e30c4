"""Task-set documents, execution profiles and trace files.

Task sets and traces are JSON with a ``version`` tag. A task-set document
looks like::

    {
      "version": 1,
      "platform": {"m": 3},
      "tasks": [
        {"id": "T1", "O": 0, "v": 2, "C": 2, "D": 5, "T": 5},
        ...
      ],
      "priority": "pm-sort",
      "exec_bounds": {"T1": 1}
    }

``priority`` is optional: a list of task ids (explicit order), or one of
``"rm"``, ``"dm"``, ``"pm-sort"``. Without it the declared order is the
priority order. ``exec_bounds`` maps task ids to the smallest execution time
the fuzzer may pick.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from gangsched.engine import ScheduleTrace, SimResult
from gangsched.errors import DocumentError, DocumentSyntaxError, UnknownFieldError
from gangsched.model import IDLE_LABEL, ExecutionProfile, Job, Platform, Task, TaskSet, validate_task_set

FORMAT_VERSION = 1
TASK_FIELDS = ("id", "O", "v", "C", "D", "T")
DOC_FIELDS = {"version", "platform", "tasks", "priority", "exec_bounds"}
PRIORITY_RULES = {
    "rm": lambda t: t.T,
    "dm": lambda t: t.D,
    "pm-sort": lambda t: t.v,
}


@dataclass(frozen=True)
class TaskSetDocument:
    m: int
    tasks: tuple[Task, ...]
    priority: str | tuple[str, ...] | None = None
    exec_bounds: dict[str, int] = field(default_factory=dict)
    version: int = FORMAT_VERSION

    def priority_order(self) -> list[str]:
        if self.priority is None:
            return [t.id for t in self.tasks]
        if isinstance(self.priority, tuple):
            return list(self.priority)
        # sorted() is stable, so ties keep the declared order
        return [t.id for t in sorted(self.tasks, key=PRIORITY_RULES[self.priority])]

    def task_set(self) -> TaskSet:
        by_id = {t.id: t for t in self.tasks}
        return TaskSet([by_id[i] for i in self.priority_order()], Platform(self.m))


def _line_of(text: str, needle: str) -> int | None:
    pos = text.find(needle)
    return None if pos < 0 else text.count("\n", 0, pos) + 1


def _int_field(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(f"expected an integer, got {value!r}", field=where)
    return value


def parse_task_set(text: str) -> TaskSetDocument:
    """Parse and validate a task-set document.

    Raises DocumentSyntaxError for malformed JSON, UnknownFieldError for
    unexpected keys, DocumentError for wrongly typed values and
    ValidationError when the resolved task set breaks a model constraint.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentSyntaxError(exc.msg, line=exc.lineno) from exc
    if not isinstance(raw, dict):
        raise DocumentSyntaxError("top level must be an object", line=1)
    for key in raw:
        if key not in DOC_FIELDS:
            raise UnknownFieldError(f"unknown field {key!r}", line=_line_of(text, f'"{key}"'), field=key)
    version = raw.get("version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise DocumentError(f"unsupported version {version!r}", field="version")
    platform = raw.get("platform")
    if not isinstance(platform, dict) or "m" not in platform:
        raise DocumentError("platform.m is required", field="platform.m")
    for key in platform:
        if key != "m":
            raise UnknownFieldError(f"unknown field {key!r}", line=_line_of(text, f'"{key}"'),
                                    field=f"platform.{key}")
    m = _int_field(platform["m"], "platform.m")

    raw_tasks = raw.get("tasks")
    if not isinstance(raw_tasks, list):
        raise DocumentError("tasks must be a list", field="tasks")
    tasks = []
    for n, entry in enumerate(raw_tasks):
        where = f"tasks[{n}]"
        if not isinstance(entry, dict):
            raise DocumentError("task must be an object", field=where)
        for key in entry:
            if key not in TASK_FIELDS:
                raise UnknownFieldError(f"unknown field {key!r}", line=_line_of(text, f'"{key}"'),
                                        field=f"{where}.{key}")
        missing = [k for k in TASK_FIELDS if k not in entry]
        if missing:
            raise DocumentError(f"missing {', '.join(missing)}", field=where)
        task_id = entry["id"]
        if not isinstance(task_id, str) or not task_id:
            raise DocumentError("id must be a non-empty string", field=f"{where}.id")
        values = {k: _int_field(entry[k], f"{where}.{k}") for k in TASK_FIELDS[1:]}
        tasks.append(Task(task_id, **values))

    ids = [t.id for t in tasks]
    priority = raw.get("priority")
    if isinstance(priority, list):
        if sorted(priority) != sorted(ids) or len(set(priority)) != len(priority):
            raise DocumentError("explicit priority must list every task id exactly once", field="priority")
        priority = tuple(priority)
    elif priority is not None and priority not in PRIORITY_RULES:
        raise DocumentError(f"unknown priority rule {priority!r}", field="priority")

    bounds = raw.get("exec_bounds", {})
    if not isinstance(bounds, dict):
        raise DocumentError("exec_bounds must be an object", field="exec_bounds")
    for key, value in bounds.items():
        if key not in ids:
            raise UnknownFieldError(f"exec_bounds names unknown task {key!r}", field=f"exec_bounds.{key}")
        _int_field(value, f"exec_bounds.{key}")

    doc = TaskSetDocument(m, tuple(tasks), priority, dict(bounds), version)
    ts = validate_task_set(doc.task_set())
    for t in ts:
        lo = bounds.get(t.id)
        if lo is not None and not 1 <= lo <= t.C:
            raise DocumentError(f"e_min={lo} outside [1, {t.C}]", field=f"exec_bounds.{t.id}")
    return doc


def serialize_task_set(doc: TaskSetDocument) -> str:
    out: dict = {
        "version": doc.version,
        "platform": {"m": doc.m},
        "tasks": [{k: getattr(t, k) for k in TASK_FIELDS} for t in doc.tasks],
    }
    if doc.priority is not None:
        out["priority"] = list(doc.priority) if isinstance(doc.priority, tuple) else doc.priority
    if doc.exec_bounds:
        out["exec_bounds"] = dict(doc.exec_bounds)
    return json.dumps(out, indent=2) + "\n"


def load_task_set(path: str | Path) -> TaskSetDocument:
    return parse_task_set(Path(path).read_text())


def parse_profile(text: str) -> ExecutionProfile:
    """Profile document: ``{"version": 1, "executions": [{"task", "k", "e"}], "per_task": {id: e}}``."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentSyntaxError(exc.msg, line=exc.lineno) from exc
    for key in raw:
        if key not in {"version", "executions", "per_task"}:
            raise UnknownFieldError(f"unknown field {key!r}", field=key)
    executions = {}
    for n, entry in enumerate(raw.get("executions", [])):
        try:
            executions[(entry["task"], int(entry["k"]))] = _int_field(entry["e"], f"executions[{n}].e")
        except KeyError as exc:
            raise DocumentError(f"missing {exc.args[0]}", field=f"executions[{n}]") from None
    per_task = {k: _int_field(v, f"per_task.{k}") for k, v in raw.get("per_task", {}).items()}
    return ExecutionProfile(executions, per_task)


def _label(entry) -> str:
    return IDLE_LABEL if entry is None else entry


def trace_to_csv(trace: ScheduleTrace) -> str:
    """``t,p1..pm`` header then one row per quantum; idle processors are ``0``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"p{j}" for j in range(1, trace.m + 1)])
    for t, row in enumerate(trace.slots):
        writer.writerow([t] + [_label(e) for e in row])
    return buf.getvalue()


def trace_from_csv(text: str) -> ScheduleTrace:
    """Rebuild sigma from CSV; annotations other than the slots are not recoverable."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:1] != ["t"]:
        raise DocumentSyntaxError("missing 't,p1..pm' header", line=1)
    m = len(rows[0]) - 1
    slots = []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != m + 1 or row[0] != str(n - 2):
            raise DocumentSyntaxError(f"malformed row {row!r}", line=n)
        slots.append(tuple(None if e == IDLE_LABEL else e for e in row[1:]))
    return ScheduleTrace(m, tuple(slots))


def _job_to_json(job: Job) -> dict:
    return {"task": job.task_id, "index": job.task_index, "k": job.k,
            "r": job.r, "v": job.v, "e_wc": job.e_wc, "d": job.d}


def result_to_json(result: SimResult, policy: str = "") -> str:
    trace = result.trace
    doc = {
        "version": FORMAT_VERSION,
        "policy": policy,
        "m": trace.m,
        "jobs": [_job_to_json(j) for j in trace.jobs],
        "slots": [[_label(e) for e in row] for row in trace.slots],
        "modes": list(trace.modes),
        "holders": [list(h) for h in trace.holders],
        "occupants": [list(o) for o in trace.occupants],
        "ends": list(trace.ends),
        "completions": list(trace.completions),
        "misses": [{"task": j.task_id, "k": j.k, "t": t} for j, t in result.misses],
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def trace_from_json(text: str) -> tuple[ScheduleTrace, list[tuple[str, int, int]], str]:
    """Return ``(trace, misses, policy)`` from a document written by :func:`result_to_json`."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentSyntaxError(exc.msg, line=exc.lineno) from exc
    try:
        jobs = tuple(Job(j["task"], j["index"], j["k"], j["r"], j["v"], j["e_wc"], j["d"]) for j in raw["jobs"])
        trace = ScheduleTrace(
            raw["m"],
            tuple(tuple(None if e == IDLE_LABEL else e for e in row) for row in raw["slots"]),
            tuple(raw["modes"]),
            tuple(tuple(h) for h in raw["holders"]),
            jobs,
            tuple(raw["ends"]),
            tuple(raw["completions"]),
            tuple(tuple(o) for o in raw["occupants"]),
        )
        misses = [(x["task"], x["k"], x["t"]) for x in raw.get("misses", [])]
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"malformed trace document: {exc}") from None
    return trace, misses, raw.get("policy", "")
