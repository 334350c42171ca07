"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import csv
import math
import re
import time

import numpy as np
import pytest

from qslprobe.blackbox.backend import SimulatedBackend
from qslprobe.blackbox.device import build_drive, load_device
from qslprobe.blackbox.gates import drive_generator, gate_unitary_library, orthogonalizing_state
from qslprobe.cli import main
from qslprobe.constants import HBAR
from qslprobe.dynamics import HamiltonianTrajectory
from qslprobe.estimator import GateTarget, eligible, estimate_gate_set, parse_gate_set
from qslprobe.qsl import (
    corrected_mt_bound,
    ml_bound,
    mt_bound,
    orthogonalization_time,
    time_averaged_stats,
)
from qslprobe.verify import verify_error_correction, verify_magnus, verify_qsl

pytestmark = pytest.mark.acceptance

TABLE_NS = {"X": 32, "Y": 32, "Z": 0, "CZ": 70, "CNOT": 140, "iSWAP": 220,
            "Toffoli": 1500, "iToffoli": 500, "CCZ": 1600}
TABLE_ENERGY = {1: "5.2e-27", 2: "2.4e-27", 3: "3e-28"}


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def at_precision(value: float, reference: str) -> bool:
    """``value`` rounds to ``reference`` at the precision the reference is written with."""
    digits = len(reference.split("e")[0].replace(".", ""))
    return float(f"{value:.{digits - 1}e}") == float(reference)


def test_table_reproduction(tmp_path, capsys, criterion):
    start = time.perf_counter()
    code = main(["estimate", "--jitter", "0", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - start
    capsys.readouterr()
    times = {row["gate"]: row for row in read_csv(tmp_path / "gate_times.csv")}
    energies = {int(row["arity"]): float(row["e_lower_J"])
                for row in read_csv(tmp_path / "energies.csv")}

    time_errors = []
    for gate, ns in TABLE_NS.items():
        row = times[gate]
        if ns == 0:
            ok = row["is_virtual"] == "1"
        else:
            ok = row["is_virtual"] == "0" and round(float(row["t_gate_s"]) * 1e9, 1) == ns
        if not ok:
            time_errors.append(f"{gate}={float(row['t_gate_s']) * 1e9:.3f}ns")
    # the reference values are pi*hbar/(2*tau_n): two figures, and the
    # three-qubit value is quoted to one figure, so it is compared at that
    energy_ok = all(at_precision(energies[n], ref) for n, ref in TABLE_ENERGY.items())
    two_figures = all(float(f"{energies[n]:.1e}") == float(f"{math.pi * HBAR / (2 * tau):.1e}")
                      for n, tau in ((1, 32e-9), (2, 70e-9), (3, 500e-9)))
    ok = code == 0 and not time_errors and energy_ok and two_figures and elapsed < 10
    shown = ", ".join(f"E{n}={energies[n]:.2e}" for n in sorted(energies))
    criterion(1, ok, f"gate times {'exact' if not time_errors else time_errors}; "
                     f"{shown} J; {elapsed:.1f} s")
    assert ok


def test_amplification_protocol(tmp_path, capsys, criterion):
    start = time.perf_counter()
    errors = []
    for seed in range(100):
        code = main(["amplify", "--gate", "X", "--ngate", "0,1e5,2e5,3e5,4e5,5e5",
                     "--shots", "1000", "--jitter", "0.5", "--resolution", "1",
                     "--seed", str(seed), "--no-plot", "--out", str(tmp_path / str(seed))])
        out = capsys.readouterr().out
        assert code == 0
        t_ns = float(re.search(r"t_gate = (-?[\d.]+) ns", out).group(1))
        errors.append(abs(t_ns / 32.0 - 1.0))
    elapsed = time.perf_counter() - start
    p95 = float(np.percentile(errors, 95))
    ok = p95 <= 0.05 and elapsed < 60
    criterion(2, ok, f"95th-percentile |error| {p95:.1%} over 100 seeds (limit 5%), "
                     f"median {np.median(errors):.1%}; {elapsed:.1f} s")
    assert ok


def test_speed_limit_soundness(criterion):
    rep = verify_qsl(trials=102, seed=2024)
    mt = [line for line in rep.lines if " MT " in f" {line[6:]}"]
    ok = rep.passed and len(mt) >= 100
    criterion(3, ok, f"{len(mt)} time-dependent and {rep.trials - len(mt)} constant "
                     f"trajectories, {rep.violations} violations, "
                     f"worst margin {rep.worst_margin:.2e}")
    assert ok, "\n".join(line for line in rep.lines if line.startswith("FAIL"))


def test_saturation_witness(criterion):
    E0 = 1.0e-27
    expected = math.pi * HBAR / (2 * E0)
    H = HamiltonianTrajectory.constant(np.diag([0.0, 2 * E0]), 1.5 * expected)
    psi0 = np.array([1.0, 1.0]) / math.sqrt(2)
    t_perp = orthogonalization_time(H, psi0, steps=1024)
    stats = time_averaged_stats(H.restricted(t_perp), psi0, 1024, effective=False)
    errors = [abs(t_perp / expected - 1.0),
              abs(mt_bound(stats.energy_stddev) / t_perp - 1.0),
              abs(ml_bound(stats.mean_energy) / t_perp - 1.0)]
    ok = max(errors) <= 1e-9
    criterion(4, ok, f"t_perp relative error {errors[0]:.1e}; MT and ML "
                     f"tightness {errors[1]:.1e}, {errors[2]:.1e}")
    assert ok


def test_second_order_agreement(criterion):
    rep = verify_magnus(trials=20, seed=2024)
    exps = [tuple(map(float, re.findall(r"exponent (\d\.\d+)", line))) for line in rep.lines
            if "noncommuting" in line]
    ok = rep.passed and len(exps) >= 20
    p = [e[0] for e in exps]
    q = [e[1] for e in exps]
    criterion(5, ok, f"{len(exps)} noncommuting: exponent {min(p):.3f}..{max(p):.3f}, "
                     f"residual {min(q):.3f}..{max(q):.3f}; commuting within 1e-12 ||H||; "
                     f"{rep.violations} violations")
    assert ok, "\n".join(line for line in rep.lines if line.startswith("FAIL"))


def test_infidelity_correction(criterion):
    rep = verify_error_correction(trials=200, seed=2024)
    eps = np.concatenate([np.logspace(-12, -3, 200), [1e-3]])
    worst = max(abs(corrected_mt_bound(1.0, e) / mt_bound(1.0) - (1 - 2 * math.sqrt(e) / math.pi)) / e
                for e in eps)
    ok = rep.passed and worst <= 1.0
    criterion(6, ok, f"worst deviation {worst:.2e} eps for eps <= 1e-3; "
                     f"monotone on 1000 points; {rep.violations} violations")
    assert ok


SHAPES = ("square", "gaussian", "two-segment")
FLEET_SIZE = 15
FLEET_GATES = ("X", "Y", "CZ", "CNOT", "iSWAP", "Toffoli", "iToffoli", "CCZ")


def fleet_config(rng) -> str:
    lines = ["[device]", "name = fleet", "n_qubits = 3", "coupling = 0-1, 1-2, 0-2",
             "", "[overheads]", "jitter_stddev = 0 s", "", "[gate Z]", "virtual = true"]
    for gate in FLEET_GATES:
        ns = float(np.exp(rng.uniform(math.log(20), math.log(2000))))
        lines += ["", f"[gate {gate}]", f"duration = {ns:.3f} ns",
                  f"shape = {rng.choice(SHAPES)}",
                  f"segment_ratio = {rng.uniform(0.1, 0.9):.3f}",
                  f"sigma_fraction = {rng.uniform(0.15, 0.3):.3f}"]
    return "\n".join(lines) + "\n"


def test_estimator_lower_bounds_are_sound(criterion):
    rng = np.random.default_rng(77)
    targets = parse_gate_set(",".join(("Z",) + FLEET_GATES))
    checks = 0
    worst_e = worst_de = -math.inf
    shapes_seen = set()
    for _ in range(FLEET_SIZE):
        device = load_device(fleet_config(rng))
        result = estimate_gate_set(SimulatedBackend(device), targets,
                                   (0, 2_000_000, 4_000_000, 6_000_000, 8_000_000, 10_000_000))
        for n, energy in result.energies.items():
            # the bound speaks about the gate that attains tau_n
            fastest = min(eligible(result.estimates, n), key=lambda e: e.t_gate)
            target = GateTarget.parse(fastest.gate)
            shapes_seen.add(device.gate(target.gate).shape)
            psi = orthogonalizing_state(gate_unitary_library(target.gate))
            stats = time_averaged_stats(device.variant(target.gate, target.qubits).drive,
                                        psi, 512)
            worst_e = max(worst_e, energy.e_lower / stats.effective_energy - 1.0)
            worst_de = max(worst_de, energy.delta_e_lower / stats.energy_stddev - 1.0)
            checks += 1
    ok = worst_e <= 0.01 and worst_de <= 0.01 and shapes_seen == set(SHAPES)
    criterion(7, ok, f"{FLEET_SIZE} devices, {checks} fastest-gate checks: largest e_lower/E_eff - 1 = "
                     f"{worst_e:+.2e}, delta_e_lower/dE - 1 = {worst_de:+.2e} (limit +1%)")
    assert ok


def test_drive_strength_reference_range(criterion):
    G = drive_generator("X")
    values = []
    for rabi in (10e6, 100e6):
        drive = build_drive(G, "square", 1e-6, 2 * math.pi * rabi)
        stats = time_averaged_stats(drive, np.array([1.0, 0.0]), 256, effective=False)
        values.append((stats.mean_energy, stats.energy_stddev))
    ok = all(f"{e:.1e}" == f"{de:.1e}" == ref
             for (e, de), ref in zip(values, ("3.3e-27", "3.3e-26")))
    criterion(8, ok, "E = dE = " + ", ".join(f"{e:.3e}" for e, _ in values) + " J")
    assert ok
