import math
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from qslprobe.blackbox.backend import SimulatedBackend
from qslprobe.constants import HBAR
from qslprobe.errors import (
    BackendError,
    CircuitSyntaxError,
    EmptyJob,
    InsufficientData,
    InvalidDuration,
    NegativeSlope,
    NoPhysicalGate,
    UnknownGate,
)
from qslprobe.estimator import (
    AmplificationPlan,
    ExperimentStore,
    GateTarget,
    GateTimeEstimate,
    energies_by_arity,
    estimate_energy,
    estimate_gate_set,
    estimate_tau_n,
    fit_gate_time,
    ols,
    parse_gate_set,
    run_amplification,
)
from qslprobe.jobs import RecordingBackend, ReplayBackend
from qslprobe.report import report

FIG2 = (0, 100_000, 200_000, 300_000, 400_000, 500_000)


def fake(gate, ns, arity=1, virtual=False):
    fit = ols([0, 1, 2], [0.0, 1.0, 2.0])
    return GateTimeEstimate(gate, ns * 1e-9, fit, virtual, arity)


def plan(gate="X", values=FIG2, **kw):
    return AmplificationPlan(GateTarget.parse(gate), values, **kw)


def test_noiseless_x_gives_exact_slope(quiet_device):
    p = plan(values=FIG2[1:])
    run = run_amplification(SimulatedBackend(quiet_device), p)
    est = fit_gate_time(run.data, 1000, p.regression_threshold)
    assert est.fit.slope == pytest.approx(3.2e-5, rel=1e-12)
    assert est.t_gate == pytest.approx(32e-9, rel=1e-12)
    assert est.fit.r_squared == pytest.approx(1.0)
    assert not est.is_virtual


def test_zero_gates_measure_the_intercept(quiet_device):
    run = run_amplification(SimulatedBackend(quiet_device), plan())
    n0, t0 = run.data[0]
    assert n0 == 0 and t0 == pytest.approx(5.0 + 1000 * 400e-6)


@pytest.mark.parametrize("name", ["X", "Y", "CZ", "CNOT", "iSWAP", "Toffoli", "iToffoli",
                                  "CCZ", "Toffoli@1:3:2", "CCZ@1:2:3"])
def test_consistency_without_noise(quiet_device, name):
    target = GateTarget.parse(name)
    p = AmplificationPlan(target, FIG2, seed=4)
    run = run_amplification(SimulatedBackend(quiet_device), p)
    est = fit_gate_time(run.data, p.n_shots, p.regression_threshold, gate=target.label)
    hidden = quiet_device.gate_duration(target.gate, target.qubits)
    assert est.t_gate == pytest.approx(hidden, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_virtual_z_under_jitter(device, seed):
    p = plan("Z", seed=seed)
    run = run_amplification(SimulatedBackend(device), p)
    assert fit_gate_time(run.data, 1000, p.regression_threshold, gate="Z").is_virtual


def test_virtual_z_without_jitter(quiet_device):
    p = plan("Z")
    run = run_amplification(SimulatedBackend(quiet_device), p)
    est = fit_gate_time(run.data, 1000, p.regression_threshold, gate="Z")
    assert est.is_virtual and est.t_gate == 0.0


def test_negative_slope_is_rejected():
    data = [(n, 100.0 - n * 1e-4) for n in FIG2]
    with pytest.raises(NegativeSlope) as info:
        fit_gate_time(data, 1000, 0)
    assert info.value.slope < 0


def test_threshold_filters_points():
    data = [(0, 999.0)] + [(n, 5.0 + n * 3.2e-5) for n in FIG2[1:]]
    est = fit_gate_time(data, 1000, 100_000, gate="X")
    assert est.fit.points_used == 5 and est.fit.threshold_used == 100_000
    assert est.t_gate == pytest.approx(32e-9)
    with pytest.raises(InsufficientData):
        fit_gate_time(data, 1000, 400_000, gate="X")


def test_plan_validation():
    assert plan().regression_threshold == 100_000
    assert plan(values=FIG2[1:]).regression_threshold == 100_000
    assert plan(threshold=200_000).regression_threshold == 200_000
    with pytest.raises(ValueError):
        plan(values=(5, 3, 4, 6, 7))
    with pytest.raises(ValueError):
        plan(values=(1, 1, 2, 3, 4))
    with pytest.raises(EmptyJob):
        plan(n_shots=0)
    with pytest.raises(InsufficientData):
        plan(values=(0, 1, 2, 3))
    with pytest.raises(InsufficientData):
        plan(threshold=400_000)


def test_plan_jobs_repeat_one_gate_from_ground():
    p = plan("CZ@1:2", values=(0, 10, 20, 30, 40), seed=7)
    job = p.job(2)
    assert job.shots == 1000 and len(job.circuits) == 1
    assert job.circuits[0].to_text().strip().endswith("repeat 20 { CZ q1 q2 }")
    assert p.job(2).seed == job.seed != p.job(1).seed
    assert not p.job(0).circuits[0].instructions


def test_targets():
    t = GateTarget.parse("Toffoli@1:3:2")
    assert t.qubits == (1, 3, 2) and t.arity == 3 and t.label == "Toffoli@1:3:2"
    assert GateTarget.parse("cx").label == "CNOT"
    assert [x.label for x in parse_gate_set("X, CZ,,iSWAP")] == ["X", "CZ", "iSWAP"]
    with pytest.raises(UnknownGate):
        GateTarget.parse("W")
    with pytest.raises(CircuitSyntaxError):
        GateTarget.parse("CZ@0")
    with pytest.raises(CircuitSyntaxError):
        GateTarget.parse("CZ@a:b")


@pytest.mark.parametrize("estimates, n, expected", [
    ([fake("X", 32), fake("Y", 32), fake("Z", 0, virtual=True)], 1, 32e-9),
    ([fake("CZ", 70, 2), fake("CNOT", 140, 2), fake("iSWAP", 220, 2)], 2, 70e-9),
    ([fake("Toffoli", 1500, 3), fake("iToffoli", 500, 3), fake("CCZ", 1600, 3)], 3, 500e-9),
    ([fake("Toffoli@1:3:2", 1900, 3), fake("Toffoli", 1500, 3)], 3, 1500e-9),
])
def test_tau_n_examples(estimates, n, expected):
    assert estimate_tau_n(estimates, n) == pytest.approx(expected)


def test_tau_n_skips_phase_gates_and_virtual_gates():
    # S never maps a state to an orthogonal one, however long it takes
    assert estimate_tau_n([fake("S", 10), fake("X", 32)], 1) == pytest.approx(32e-9)
    with pytest.raises(NoPhysicalGate):
        estimate_tau_n([fake("Z", 0, virtual=True)], 1)
    with pytest.raises(NoPhysicalGate):
        estimate_tau_n([], 2)


@pytest.mark.parametrize("tau, expected", [(32e-9, 5.2e-27), (70e-9, 2.4e-27), (500e-9, 3e-28)])
def test_energy_examples(tau, expected):
    e = estimate_energy(tau, 1)
    assert e.e_lower == e.delta_e_lower == math.pi * HBAR / (2 * tau)
    assert float(f"{e.e_lower:.{len(str(expected).split('e')[0].replace('.', ''))}g}") == expected


def test_energy_rejects_nonpositive_time():
    for tau in (0.0, -1e-9, float("nan")):
        with pytest.raises(InvalidDuration):
            estimate_energy(tau, 1)


def test_energy_band_brackets_the_estimate():
    e = estimate_energy(32e-9, 1, 2e-9)
    lo, hi = e.band
    assert lo < e.e_lower < hi
    assert estimate_energy(32e-9, 1, 40e-9).band[1] == math.inf


@given(st.lists(st.floats(1.0, 5000.0), min_size=1, max_size=6), st.floats(1.0, 5000.0))
def test_adding_a_gate_only_moves_tau_to_a_new_minimum(times, extra):
    base = [fake(f"X{i}", t) for i, t in enumerate(times)]
    before = estimate_tau_n(base, 1)
    after = estimate_tau_n(base + [fake("new", extra)], 1)
    assert after <= before
    if extra * 1e-9 >= before:
        assert after == before
    else:
        assert after == pytest.approx(extra * 1e-9)
    e_before = estimate_energy(before, 1).e_lower
    assert estimate_energy(after, 1).e_lower >= e_before


def test_estimates_depend_only_on_job_results(device, tmp_path):
    targets = parse_gate_set("X,Z,CZ")
    recorder = RecordingBackend(SimulatedBackend(device))
    live = estimate_gate_set(recorder, targets, FIG2, seed=11)
    path = tmp_path / "jobs.jsonl"
    recorder.save(path)
    replayed = estimate_gate_set(ReplayBackend.load(path), targets, FIG2, seed=11)
    assert replayed.estimates == live.estimates
    assert replayed.energies == live.energies


class Flaky:
    """Fails every third job."""

    def __init__(self, backend):
        self.backend, self.calls = backend, 0

    def submit(self, job):
        self.calls += 1
        if self.calls % 3 == 0:
            raise BackendError("queue timeout")
        return self.backend.submit(job)


def test_backend_failures_are_recorded(quiet_device, tmp_path):
    store = ExperimentStore(tmp_path / "log.csv")
    p = plan(values=(0, 1, 2, 3, 4, 5, 6, 7, 8, 9), threshold=0)
    run = run_amplification(Flaky(SimulatedBackend(quiet_device)), p, store=store)
    assert [n for n, _ in run.failures] == [2, 5, 8]
    assert len(run) == 7 and len(store.read()) == 7


def test_too_many_failures(quiet_device, tmp_path):
    class Down:
        def submit(self, job):
            raise BackendError("offline")

    store = ExperimentStore(tmp_path / "log.csv")
    with pytest.raises(InsufficientData):
        run_amplification(Down(), plan(), store=store)
    assert store.read() == []


def test_pipeline_records_target_failures(device):
    result = estimate_gate_set(SimulatedBackend(device), parse_gate_set("X,CZ@0:3"), FIG2)
    assert [e.gate for e in result.estimates] == ["X"]
    assert result.failures[0][0] == "CZ@0:3"


def test_store_roundtrip_and_concurrency(quiet_device, tmp_path):
    clock = lambda: datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)
    store = ExperimentStore(tmp_path / "log.csv", clock)
    p = plan()
    serial = run_amplification(SimulatedBackend(quiet_device), p, store=store)
    threaded = run_amplification(SimulatedBackend(quiet_device), p, store=store, workers=4)
    assert serial.data == threaded.data
    rows = store.read()
    assert len(rows) == 12
    assert rows[0]["timestamp"] == "2024-01-02T03:04:05+00:00"
    assert rows[1]["n_gate"] == 100_000 and rows[1]["n_shots"] == 1000
    assert (tmp_path / "log.csv").read_text().startswith(
        "timestamp,gate,n_gate,n_shots,t_exec_seconds")


def test_full_default_run_matches_the_table(quiet_device):
    targets = parse_gate_set("X,Y,Z,CZ,CNOT,iSWAP,Toffoli,iToffoli,CCZ")
    result = estimate_gate_set(SimulatedBackend(quiet_device), targets, FIG2)
    energies = {n: float(f"{e.e_lower:.2g}") for n, e in result.energies.items()}
    assert energies == {1: 5.2e-27, 2: 2.4e-27, 3: 3.3e-28}
    text = report(result.estimates, result.energies).to_text()
    assert "virtual" in text and "500.0" in text


def test_report_edge_cases():
    assert report([], {}).to_text() == "(no estimates)\n"
    rep = report([fake("Z", 0, virtual=True)], energies_by_arity([fake("Z", 0, virtual=True)]))
    assert "no physical gate" in rep.to_text()
    assert rep.energies_csv().splitlines()[1].endswith("no physical gate")
    variants = [fake("Toffoli", 1500, 3), fake("Toffoli@1:3:2", 1900, 3)]
    rep = report(variants, energies_by_arity(variants))
    assert len(rep.gates) == 1 and rep.gates[0].variants == ("Toffoli", "Toffoli@1:3:2")
    assert len(rep.gate_times_csv().splitlines()) == 3
