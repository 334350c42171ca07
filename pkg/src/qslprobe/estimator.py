"""Energy lower bounds from job execution times alone.

The pipeline only talks to a :class:`~qslprobe.jobs.BackendInterface`:

1. *Gate-time amplification.*  For each gate, submit one single-circuit
   job per gate count ``N`` repeating the gate ``N`` times from
   ``|0...0>``; job time grows by ``N_shots * t_gate`` per repetition.
2. *Regression.*  Ordinary least squares over the points at or above a
   threshold gives ``t_gate = slope / N_shots``.  Gates whose slope is not
   significantly positive are treated as virtual.
3. *Speed-limit inversion.*  The shortest physical ``n``-qubit gate that
   can map some state to an orthogonal one is an orthogonalization within
   ``tau_n``, so the driving energy and its spread are at least
   ``pi*hbar/(2*tau_n)``.
"""

from __future__ import annotations

import csv
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .blackbox.circuit import repeated_gate_circuit
from .blackbox.gates import can_orthogonalize, canonical_name, gate_arity, gate_unitary_library
from .constants import HBAR
from .errors import (
    BackendError,
    BadIndex,
    CircuitError,
    CircuitSyntaxError,
    EmptyJob,
    InsufficientData,
    InvalidDuration,
    NegativeSlope,
    NoPhysicalGate,
    QslProbeError,
)
from .jobs import BackendInterface, Job
from .qsl import invert_qsl

log = logging.getLogger(__name__)

MIN_FIT_POINTS = 3
MIN_PLAN_POINTS = 4
#: slope must exceed this many standard errors to count as a physical gate
VIRTUAL_SIGMAS = 2.0

STORE_COLUMNS = ("timestamp", "gate", "n_gate", "n_shots", "t_exec_seconds")


# -- gate targets -----------------------------------------------------------------

@dataclass(frozen=True)
class GateTarget:
    """A gate applied to specific qubits, written ``NAME`` or ``NAME@a:b:c``."""

    gate: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "gate", canonical_name(self.gate))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != gate_arity(self.gate):
            raise CircuitSyntaxError(
                f"{self.gate} takes {gate_arity(self.gate)} qubit(s), got {len(self.qubits)}")
        if len(set(self.qubits)) != len(self.qubits) or min(self.qubits) < 0:
            raise BadIndex(f"invalid qubits {self.qubits} for {self.gate}")

    @classmethod
    def parse(cls, text: str) -> "GateTarget":
        name, _, qubits = text.strip().partition("@")
        if qubits:
            try:
                indices = tuple(int(q) for q in qubits.split(":"))
            except ValueError:
                raise CircuitSyntaxError(f"bad qubit list in {text!r}") from None
        else:
            indices = tuple(range(gate_arity(name)))
        return cls(name, indices)

    @property
    def arity(self) -> int:
        return len(self.qubits)

    @property
    def label(self) -> str:
        if self.qubits == tuple(range(self.arity)):
            return self.gate
        return f"{self.gate}@{':'.join(map(str, self.qubits))}"


def parse_gate_set(text: str) -> list[GateTarget]:
    """Comma-separated targets, e.g. ``"X,CZ,Toffoli@0:1:2,Toffoli@1:2:3"``."""
    return [GateTarget.parse(item) for item in text.split(",") if item.strip()]


# -- amplification ---------------------------------------------------------------

@dataclass(frozen=True)
class AmplificationPlan:
    target: GateTarget
    n_gate_values: tuple[int, ...]
    n_shots: int = 1000
    seed: int = 0
    threshold: int | None = None

    def __post_init__(self):
        if isinstance(self.target, str):
            object.__setattr__(self, "target", GateTarget.parse(self.target))
        values = tuple(int(n) for n in self.n_gate_values)
        object.__setattr__(self, "n_gate_values", values)
        if any(n < 0 for n in values) or list(values) != sorted(set(values)):
            raise ValueError("n_gate values must be distinct, nonnegative and ascending")
        if self.n_shots == 0:
            raise EmptyJob("n_shots = 0: nothing to execute")
        if self.n_shots < 0:
            raise ValueError("n_shots must be positive")
        if sum(n >= self.regression_threshold for n in values) < MIN_PLAN_POINTS:
            raise InsufficientData(
                f"plan needs at least {MIN_PLAN_POINTS} gate counts at or above the "
                f"regression threshold {self.regression_threshold}")

    @property
    def regression_threshold(self) -> int:
        """Explicit threshold, else the smallest nonzero gate count.

        A zero-gate job only pins the intercept, so by default it stays out
        of the fit and every amplified point goes in.
        """
        if self.threshold is not None:
            return int(self.threshold)
        return min((n for n in self.n_gate_values if n > 0), default=0)

    def point_seed(self, index: int) -> int:
        return int(np.random.SeedSequence(self.seed, spawn_key=(index,)).generate_state(1)[0])

    def job(self, index: int) -> Job:
        n = self.n_gate_values[index]
        circuit = repeated_gate_circuit(self.target.gate, self.target.qubits, n)
        return Job((circuit,), self.n_shots, self.point_seed(index))


@dataclass(frozen=True)
class AmplificationRun:
    """Outcome of a plan: surviving ``(n_gate, t_exec)`` pairs and failures."""

    plan: AmplificationPlan
    data: tuple[tuple[int, float], ...]
    failures: tuple[tuple[int, str], ...] = ()

    def __iter__(self):
        return iter(self.data)

    def __len__(self):
        return len(self.data)


class ExperimentStore:
    """Append-only CSV log of raw amplification points.

    Appends are serialized by a lock so concurrent plans can share a store.
    """

    def __init__(self, path, clock: Callable[[], datetime] | None = None):
        self.path = Path(path)
        self._clock = clock or (lambda: datetime.now(timezone.utc))
        self._lock = threading.Lock()

    def append(self, gate: str, points: Iterable[tuple[int, float]], n_shots: int) -> None:
        with self._lock:
            new = not self.path.exists() or self.path.stat().st_size == 0
            with open(self.path, "a", newline="") as fh:
                writer = csv.writer(fh)
                if new:
                    writer.writerow(STORE_COLUMNS)
                stamp = self._clock().isoformat(timespec="seconds")
                for n_gate, t_exec in points:
                    writer.writerow([stamp, gate, n_gate, n_shots, repr(float(t_exec))])

    def read(self) -> list[dict]:
        if not self.path.exists():
            return []
        with open(self.path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        for row in rows:
            row["n_gate"] = int(row["n_gate"])
            row["n_shots"] = int(row["n_shots"])
            row["t_exec_seconds"] = float(row["t_exec_seconds"])
        return rows


def run_amplification(backend: BackendInterface, plan: AmplificationPlan, *,
                      store: ExperimentStore | None = None,
                      workers: int = 1) -> AmplificationRun:
    """Submit one job per gate count and collect the job times.

    A backend failure on one point is logged and recorded; the run goes
    on.  Fewer than three surviving points at or above the threshold raise
    :class:`InsufficientData` (after persisting whatever did survive).
    """
    def attempt(i):
        # Invalid circuits are the caller's error and propagate; anything
        # the backend itself reports is recorded against the point.
        try:
            return i, backend.submit(plan.job(i)).t_exec, None
        except (BackendError, OSError) as exc:
            return i, None, f"{type(exc).__name__}: {exc}"

    indices = range(len(plan.n_gate_values))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            outcomes = list(pool.map(attempt, indices))
    else:
        outcomes = [attempt(i) for i in indices]

    data, failures = [], []
    for i, t_exec, error in outcomes:
        n = plan.n_gate_values[i]
        if error is None:
            data.append((n, float(t_exec)))
        else:
            log.warning("%s, n_gate=%d: %s", plan.target.label, n, error)
            failures.append((n, error))
    if store is not None:
        store.append(plan.target.label, data, plan.n_shots)
    usable = sum(n >= plan.regression_threshold for n, _ in data)
    if usable < MIN_FIT_POINTS:
        raise InsufficientData(
            f"{plan.target.label}: only {usable} successful points at or above "
            f"n_gate = {plan.regression_threshold}")
    return AmplificationRun(plan, tuple(data), tuple(failures))


# -- regression ------------------------------------------------------------------

@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r_squared: float
    threshold_used: int
    points_used: int
    slope_stderr: float
    intercept_stderr: float


def ols(x: Sequence[float], y: Sequence[float], threshold: int = 0) -> RegressionFit:
    """Straight-line least squares with textbook standard errors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < MIN_FIT_POINTS:
        raise InsufficientData(f"need at least {MIN_FIT_POINTS} points, got {n}")
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    if sxx == 0:
        raise InsufficientData("all points share one gate count")
    slope = float(dx @ dy) / sxx
    intercept = ym - slope * xm
    resid = dy - slope * dx
    ssr = float(resid @ resid)
    sst = float(dy @ dy)
    s2 = ssr / (n - 2)
    return RegressionFit(
        slope=slope,
        intercept=float(intercept),
        r_squared=1.0 - ssr / sst if sst > 0 else 1.0,
        threshold_used=int(threshold),
        points_used=n,
        slope_stderr=math.sqrt(s2 / sxx),
        intercept_stderr=math.sqrt(s2 * (1.0 / n + xm * xm / sxx)),
    )


@dataclass(frozen=True)
class GateTimeEstimate:
    gate: str
    t_gate: float
    fit: RegressionFit
    is_virtual: bool
    arity: int = 1
    n_shots: int = 1

    @property
    def t_gate_stderr(self) -> float:
        return self.fit.slope_stderr / self.n_shots

    @property
    def base_gate(self) -> str:
        return self.gate.partition("@")[0]


def fit_gate_time(data: Iterable[tuple[int, float]], n_shots: int, threshold: int, *,
                  gate: str = "gate", arity: int | None = None) -> GateTimeEstimate:
    """Per-gate time from amplification data.

    Only points with ``n_gate >= threshold`` enter the fit.  A slope within
    two standard errors of zero marks the gate virtual; a significantly
    negative slope is inconsistent with the timing model and raises
    :class:`NegativeSlope`.
    """
    if n_shots <= 0:
        raise EmptyJob("n_shots must be positive")
    points = sorted((int(n), float(t)) for n, t in data if n >= threshold)
    if len(points) < MIN_FIT_POINTS:
        raise InsufficientData(
            f"{gate}: {len(points)} point(s) at or above n_gate = {threshold}, "
            f"need {MIN_FIT_POINTS}")
    x, y = zip(*points)
    fit = ols(x, y, threshold)
    significant = abs(fit.slope) > VIRTUAL_SIGMAS * fit.slope_stderr
    if fit.slope < 0 and significant:
        raise NegativeSlope(fit.slope, fit.slope_stderr)
    if arity is None:
        # unnamed data (the default label) is treated as a single-qubit gate
        arity = gate_arity(gate.partition("@")[0]) if gate != "gate" else 1
    return GateTimeEstimate(gate, fit.slope / n_shots, fit, not significant, arity, n_shots)


# -- speed-limit inversion -----------------------------------------------------------

def _orthogonalizing(estimate: GateTimeEstimate) -> bool:
    try:
        return can_orthogonalize(gate_unitary_library(estimate.base_gate))
    except QslProbeError:
        return True


def eligible(estimates: Iterable[GateTimeEstimate], n: int) -> list[GateTimeEstimate]:
    """Physical ``n``-qubit gates able to orthogonalize some input state."""
    return [e for e in estimates
            if e.arity == n and not e.is_virtual and e.t_gate > 0 and _orthogonalizing(e)]


def estimate_tau_n(estimates: Iterable[GateTimeEstimate], n: int) -> float:
    """Shortest time in which some ``n``-qubit gate reaches an orthogonal state.

    Virtual gates are skipped, as are gates whose unitary cannot map any
    state to an orthogonal one (a phase gate such as S never does).
    Connectivity variants of one gate are separate estimates, so the
    minimum also runs over qubit choices.
    """
    candidates = eligible(estimates, n)
    if not candidates:
        raise NoPhysicalGate(f"no physical {n}-qubit gate among the estimates")
    return min(e.t_gate for e in candidates)


@dataclass(frozen=True)
class EnergyEstimate:
    n: int
    tau_n: float
    e_lower: float
    delta_e_lower: float
    band: tuple[float, float] | None = field(default=None)


def estimate_energy(tau_n: float, n: int, tau_stderr: float | None = None, *,
                    hbar: float = HBAR) -> EnergyEstimate:
    """``E >= dE >= pi*hbar/(2*tau_n)`` with an optional one-sigma band."""
    if not tau_n > 0:
        raise InvalidDuration(f"tau_n must be positive, got {tau_n!r}")
    e, de = invert_qsl(tau_n, hbar=hbar)
    band = None
    if tau_stderr is not None:
        scale = math.pi * hbar / 2.0
        upper = scale / (tau_n - tau_stderr) if tau_stderr < tau_n else math.inf
        band = (scale / (tau_n + tau_stderr), upper)
    return EnergyEstimate(n, tau_n, e, de, band)


def energies_by_arity(estimates: Sequence[GateTimeEstimate]) -> dict[int, EnergyEstimate | None]:
    """Energy bounds for every arity present; ``None`` when none is physical."""
    out: dict[int, EnergyEstimate | None] = {}
    for n in sorted({e.arity for e in estimates}):
        try:
            tau = estimate_tau_n(estimates, n)
        except NoPhysicalGate:
            out[n] = None
            continue
        best = min(eligible(estimates, n), key=lambda e: e.t_gate)
        out[n] = estimate_energy(tau, n, best.t_gate_stderr)
    return out


# -- whole pipeline ---------------------------------------------------------------

@dataclass(frozen=True)
class PipelineResult:
    runs: tuple[AmplificationRun, ...]
    estimates: tuple[GateTimeEstimate, ...]
    energies: dict
    failures: tuple[tuple[str, str], ...] = ()


def estimate_gate_set(backend: BackendInterface, targets: Sequence[GateTarget],
                      n_gate_values: Sequence[int], n_shots: int = 1000, seed: int = 0,
                      threshold: int | None = None, *, store: ExperimentStore | None = None,
                      workers: int = 1) -> PipelineResult:
    """Amplify, fit and invert for every target.

    Targets whose run or fit fails are reported in ``failures`` and left out
    of the estimates.  Each target gets its own seed stream derived from
    ``seed`` and its position in the list.
    """
    runs, estimates, failures = [], [], []
    for k, target in enumerate(targets):
        sub_seed = int(np.random.SeedSequence(seed, spawn_key=(k,)).generate_state(1)[0])
        plan = AmplificationPlan(target, tuple(n_gate_values), n_shots, sub_seed, threshold)
        try:
            run = run_amplification(backend, plan, store=store, workers=workers)
            runs.append(run)
            estimates.append(fit_gate_time(run.data, n_shots, plan.regression_threshold,
                                           gate=target.label, arity=target.arity))
        except (InsufficientData, NegativeSlope, CircuitError) as exc:
            log.warning("%s: %s", target.label, exc)
            failures.append((target.label, str(exc)))
    return PipelineResult(tuple(runs), tuple(estimates), energies_by_arity(estimates),
                          tuple(failures))
