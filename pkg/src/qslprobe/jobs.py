"""User-visible job interface: circuits and shots in, counts and time out.

Nothing here refers to a device.  The estimator sees a backend only
through :class:`BackendInterface`, so simulated, replayed and (eventually)
real backends are interchangeable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol, Sequence, runtime_checkable

from .blackbox.circuit import Circuit, parse_circuit
from .errors import BackendError, EmptyJob, JobError

T_EXEC_DECIMALS = 3


@dataclass(frozen=True)
class Job:
    """A batch of circuits, each measured ``shots`` times."""

    circuits: tuple[Circuit, ...]
    shots: int
    seed: int | None = None

    def __post_init__(self):
        circuits = tuple(parse_circuit(c) if isinstance(c, str) else c
                         for c in self.circuits)
        object.__setattr__(self, "circuits", circuits)
        if not circuits:
            raise EmptyJob("a job needs at least one circuit")
        if int(self.shots) != self.shots or self.shots < 0:
            raise JobError(f"shots must be a nonnegative integer, got {self.shots!r}")
        if self.shots == 0:
            raise EmptyJob("shots = 0: nothing to execute")

    def key(self) -> str:
        """Canonical text identifying the job, used to match replays."""
        body = "\n---\n".join(c.to_text() for c in self.circuits)
        return f"shots {self.shots}\nseed {self.seed}\n{body}"


@dataclass(frozen=True)
class JobResult:
    """Per-circuit outcome counts and the coarse total execution time.

    Bitstrings list qubit 0 first.
    """

    counts: tuple[Mapping[str, int], ...]
    t_exec: float = field(metadata={"unit": "s"})

    def __post_init__(self):
        if not self.t_exec >= 0:
            raise JobError("t_exec must be nonnegative")

    def to_json(self) -> str:
        return json.dumps({
            "counts": [dict(sorted(c.items())) for c in self.counts],
            "t_exec": round(self.t_exec, T_EXEC_DECIMALS),
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "JobResult":
        try:
            data = json.loads(text)
            counts = tuple({str(k): int(v) for k, v in c.items()} for c in data["counts"])
            return cls(counts, float(data["t_exec"]))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise BackendError(f"malformed job result record: {exc}") from None


@runtime_checkable
class BackendInterface(Protocol):
    def submit(self, job: Job) -> JobResult: ...


class RecordingBackend:
    """Forward jobs to another backend and keep every (job, result) pair."""

    def __init__(self, backend: BackendInterface):
        self._backend = backend
        self.records: list[tuple[str, JobResult]] = []

    def submit(self, job: Job) -> JobResult:
        result = self._backend.submit(job)
        self.records.append((job.key(), result))
        return result

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for key, result in self.records:
                fh.write(json.dumps({"job": key, "result": json.loads(result.to_json())},
                                    sort_keys=True) + "\n")


class ReplayBackend:
    """Serve previously recorded results, matched on the job's canonical text."""

    def __init__(self, records: Sequence[tuple[str, JobResult]]):
        self._results = dict(records)

    @classmethod
    def load(cls, path) -> "ReplayBackend":
        records = []
        for line in Path(path).read_text().splitlines():
            if line.strip():
                entry = json.loads(line)
                records.append((entry["job"], JobResult.from_json(json.dumps(entry["result"]))))
        return cls(records)

    def submit(self, job: Job) -> JobResult:
        try:
            return self._results[job.key()]
        except KeyError:
            raise BackendError("no recorded result for this job") from None
