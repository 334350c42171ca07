"""Simulated cloud backend: exact outcome sampling and a synthetic job clock."""

from __future__ import annotations

import math
from functools import reduce

import numpy as np

from ..errors import BadIndex
from ..jobs import Job, JobResult
from .circuit import Circuit, Instruction, RepeatBlock
from .device import DeviceModel
from .gates import embed, gate_unitary_library


def _instruction_unitary(device: DeviceModel, ins: Instruction, n: int) -> np.ndarray:
    # Connectivity and gate-set checks happen here too, so invalid
    # circuits are rejected before any time is charged.
    spec = device.gate(ins.gate)
    device.variant(spec.name, ins.qubits)
    U = embed(gate_unitary_library(spec.name), ins.qubits, n)
    return U if ins.repeat == 1 else np.linalg.matrix_power(U, ins.repeat)


def circuit_unitary(device: DeviceModel, circuit: Circuit) -> np.ndarray:
    """Unitary of the whole circuit on its qubits (qubit 0 most significant).

    Repeated gates and repeat blocks are raised to their power by binary
    exponentiation, so ``10**7`` repetitions cost about 24 matrix products.
    """
    n = circuit.n_qubits
    if n > device.n_qubits:
        raise BadIndex(f"circuit uses {n} qubits, device {device.name!r} has {device.n_qubits}")
    U = np.eye(2 ** n, dtype=complex)
    for item in circuit.instructions:
        if isinstance(item, RepeatBlock):
            body = reduce(lambda acc, ins: _instruction_unitary(device, ins, n) @ acc,
                          item.body, np.eye(2 ** n, dtype=complex))
            block = np.linalg.matrix_power(body, item.repeat)
        else:
            block = _instruction_unitary(device, item, n)
        U = block @ U
    return U


def circuit_duration(device: DeviceModel, circuit: Circuit) -> float:
    """Summed gate durations of one shot (no initialization or readout)."""
    return math.fsum(count * device.gate_duration(gate, qubits)
                     for (gate, qubits), count in sorted(circuit.applications().items()))


def outcome_probabilities(device: DeviceModel, circuit: Circuit) -> np.ndarray:
    psi = circuit_unitary(device, circuit)[:, 0]
    p = np.abs(psi) ** 2
    return p / p.sum()


def job_time_noiseless(device: DeviceModel, job: Job) -> float:
    """Execution time before jitter and rounding."""
    oh = device.overheads
    per_shot = [oh.t_init + circuit_duration(device, c) + oh.t_meas for c in job.circuits]
    return oh.per_job + math.fsum(job.shots * t + oh.per_circuit for t in per_shot)


def submit_job(device: DeviceModel, job: Job) -> JobResult:
    """Execute a job on the hidden device model.

    The final state of each circuit is computed once and the shots are a
    single multinomial draw from its Born distribution.  The reported time
    is the affine job-time model plus one Gaussian jitter draw, rounded to
    the device's time resolution and clamped at zero.  With the same seed
    the result is identical.
    """
    rng = np.random.default_rng(job.seed)
    oh = device.overheads
    probs = [outcome_probabilities(device, c) for c in job.circuits]
    t = job_time_noiseless(device, job) + rng.normal(0.0, oh.jitter_stddev)
    if oh.time_resolution > 0:
        t = round(t / oh.time_resolution) * oh.time_resolution
    t = max(t, 0.0)

    counts = []
    for circuit, p in zip(job.circuits, probs):
        n = circuit.n_qubits
        draws = rng.multinomial(job.shots, p)
        counts.append({format(i, f"0{n}b"): int(k) for i, k in enumerate(draws) if k})
    return JobResult(tuple(counts), float(t))


class SimulatedBackend:
    """:class:`~qslprobe.jobs.BackendInterface` over a hidden device model."""

    def __init__(self, device: DeviceModel):
        self.__device = device

    def submit(self, job: Job) -> JobResult:
        return submit_job(self.__device, job)
