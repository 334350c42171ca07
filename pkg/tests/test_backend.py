import ast
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

import qslprobe
from qslprobe.blackbox.backend import (
    SimulatedBackend,
    circuit_duration,
    circuit_unitary,
    job_time_noiseless,
    submit_job,
)
from qslprobe.blackbox.circuit import parse_circuit, repeated_gate_circuit
from qslprobe.blackbox.device import load_device
from qslprobe.errors import BackendError, BadIndex, ConnectivityError, EmptyJob, UnknownGate
from qslprobe.jobs import BackendInterface, Job, JobResult, RecordingBackend, ReplayBackend

PACKAGE = Path(qslprobe.__file__).parent


def x_job(n, shots=1000, seed=0):
    return Job((repeated_gate_circuit("X", (0,), n),), shots, seed)


def test_single_x_flips_every_shot(quiet_device):
    result = submit_job(quiet_device, x_job(1))
    assert result.counts == ({"1": 1000},)
    assert result.t_exec == pytest.approx(5.0 + 1000 * (100e-6 + 32e-9 + 300e-6), rel=1e-12)


@pytest.mark.parametrize("k", [1, 7, 50000])
def test_even_x_powers_return_to_zero(device, k):
    assert submit_job(device, x_job(2 * k, shots=200)).counts == ({"0": 200},)


def test_worked_timing_example(quiet_device):
    # 5 s + 1000 * (100 us + 5e5 * 32 ns + 300 us)
    assert job_time_noiseless(quiet_device, x_job(500_000)) == pytest.approx(21.4, rel=1e-12)


def test_same_seed_same_result(device):
    job = Job(("qubits 2\nH q0\nCNOT q0 q1",), 500, seed=42)
    assert submit_job(device, job) == submit_job(device, job)
    other = submit_job(device, Job(job.circuits, 500, seed=43))
    assert other != submit_job(device, job)


@given(st.integers(0, 10**7), st.integers(0, 10**7), st.integers(1, 5000))
def test_time_is_affine_in_gate_count(quiet_device, n1, n2, shots):
    t = lambda n: job_time_noiseless(quiet_device, x_job(n, shots))
    slope = shots * 32e-9
    assert t(n2) - t(n1) == pytest.approx((n2 - n1) * slope, rel=1e-9, abs=1e-9)


def test_rounding_and_clamping(device):
    coarse = submit_job(device, x_job(10, seed=3)).t_exec
    assert coarse == round(coarse)
    free = device.with_overheads(per_job=0.0, t_init=0.0, t_meas=0.0, jitter_stddev=10.0,
                                 time_resolution=0.0)
    times = [submit_job(free, x_job(1, shots=1, seed=s)).t_exec for s in range(40)]
    assert min(times) == 0.0


def test_ghz_statistics(device):
    text = "qubits 3\nH q0\nCNOT q0 q1\nCNOT q1 q2\n"
    (counts,) = submit_job(device, Job((text,), 10_000, seed=5)).counts
    assert set(counts) == {"000", "111"}
    assert chisquare([counts["000"], counts["111"]]).pvalue > 1e-3


def test_bitstring_order_puts_qubit_zero_first(device):
    (counts,) = submit_job(device, Job(("qubits 3\nX q0",), 10, 0)).counts
    assert counts == {"100": 10}


def test_multi_circuit_job(quiet_device):
    job = Job(("qubits 1\nX q0", "qubits 1\nY q0\nY q0"), 10, 1)
    result = submit_job(quiet_device, job)
    assert result.counts == ({"1": 10}, {"0": 10})
    assert result.t_exec == pytest.approx(5.0 + 10 * (400e-6 + 32e-9) + 10 * (400e-6 + 64e-9))


def test_repeat_block_matches_unrolled(device):
    block = parse_circuit("qubits 2\nrepeat 3 { H q0; CNOT q0 q1 }")
    flat = parse_circuit("qubits 2\n" + "H q0\nCNOT q0 q1\n" * 3)
    assert np.allclose(circuit_unitary(device, block), circuit_unitary(device, flat))
    assert circuit_duration(device, block) == pytest.approx(circuit_duration(device, flat))


def test_rejected_jobs(device):
    with pytest.raises(EmptyJob):
        Job((), 10)
    with pytest.raises(EmptyJob):
        x_job(1, shots=0)
    with pytest.raises(ConnectivityError):
        submit_job(device, Job(("qubits 4\nCZ q0 q3",), 1))
    with pytest.raises(BadIndex):
        submit_job(device, Job(("qubits 5\nX q4",), 1))
    bare = load_device("[device]\nn_qubits = 1\n")
    with pytest.raises(UnknownGate):
        submit_job(bare, Job(("qubits 1\nX q0",), 1))


def test_large_repetition_is_fast(device):
    start = time.perf_counter()
    submit_job(device, Job((repeated_gate_circuit("Toffoli", (0, 1, 2), 10**7),), 1000, 0))
    assert time.perf_counter() - start < 1.0


def test_backend_hides_its_device(device):
    backend = SimulatedBackend(device)
    assert isinstance(backend, BackendInterface)
    public = [name for name in dir(backend) if not name.startswith("_")]
    assert public == ["submit"]


@pytest.mark.parametrize("module", ["estimator.py", "report.py", "plotting.py", "jobs.py"])
def test_estimation_code_never_imports_the_device(module):
    tree = ast.parse((PACKAGE / module).read_text())
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            imported.add(node.module or "")
            imported.update(f"{node.module}.{a.name}" for a in node.names)
        elif isinstance(node, ast.Import):
            imported.update(a.name for a in node.names)
    assert not any("device" in name or "backend" in name for name in imported)


def test_result_json_roundtrip(device):
    result = submit_job(device, Job(("qubits 2\nH q0\nH q1",), 100, 9))
    again = JobResult.from_json(result.to_json())
    assert again.counts == result.counts
    assert again.t_exec == round(result.t_exec, 3)
    with pytest.raises(BackendError):
        JobResult.from_json('{"counts": 3}')


def test_record_and_replay(device, tmp_path):
    recorder = RecordingBackend(SimulatedBackend(device))
    jobs = [x_job(n, seed=n) for n in (0, 10, 20)]
    results = [recorder.submit(j) for j in jobs]
    path = tmp_path / "jobs.jsonl"
    recorder.save(path)
    assert len(path.read_text().splitlines()) == 3
    replay = ReplayBackend.load(path)
    for job, result in zip(jobs, results):
        assert replay.submit(job).t_exec == pytest.approx(result.t_exec, abs=5e-4)
    with pytest.raises(BackendError):
        replay.submit(x_job(30))
    assert all(json.loads(line)["job"].startswith("shots") for line in path.read_text().splitlines())
