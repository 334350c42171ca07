"""Table-style reports: a human-readable table plus machine-readable CSV."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .estimator import AmplificationRun, EnergyEstimate, GateTimeEstimate

NO_PHYSICAL = "no physical gate"


def _num(x: float | None) -> str:
    """Full-precision, platform-stable CSV number."""
    if x is None:
        return ""
    return repr(float(x))


@dataclass(frozen=True)
class GateRow:
    gate: str
    arity: int
    t_gate: float
    t_gate_stderr: float
    is_virtual: bool
    variants: tuple[str, ...]


@dataclass(frozen=True)
class Report:
    gates: tuple[GateRow, ...]
    variants: tuple[GateTimeEstimate, ...]
    energies: Mapping[int, EnergyEstimate | None]
    runs: tuple[AmplificationRun, ...] = ()

    def to_text(self) -> str:
        if not self.gates and not self.energies:
            return "(no estimates)\n"
        header = f"{'n':>2}  {'gate':<10}{'t_gate [ns]':>14}{'+/- [ns]':>11}   " \
                 f"{'tau_n [ns]':>11}{'E, dE >= [J]':>14}   E band [J]"
        lines = [header, "-" * len(header)]
        for n in sorted({r.arity for r in self.gates} | set(self.energies)):
            rows = [r for r in self.gates if r.arity == n]
            energy = self.energies.get(n)
            for i, r in enumerate(rows):
                t = "virtual" if r.is_virtual else f"{r.t_gate * 1e9:.1f}"
                err = "" if r.is_virtual else f"{r.t_gate_stderr * 1e9:.2g}"
                tail = ""
                if i == 0:
                    if energy is None:
                        tail = f"{'':>11}{NO_PHYSICAL:>14}"
                    else:
                        tail = f"{energy.tau_n * 1e9:>11.1f}{energy.e_lower:>14.2e}"
                        if energy.band is not None:
                            lo, hi = energy.band
                            hi_text = "inf" if math.isinf(hi) else f"{hi:.2e}"
                            tail += f"   [{lo:.2e}, {hi_text}]"
                lines.append(f"{n:>2}  {r.gate:<10}{t:>14}{err:>11}   {tail}".rstrip())
        return "\n".join(lines) + "\n"

    def gate_times_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gate", "arity", "t_gate_s", "t_gate_stderr_s", "is_virtual",
                    "slope_s", "intercept_s", "r_squared", "threshold", "points_used"])
        for e in self.variants:
            f = e.fit
            w.writerow([e.gate, e.arity, _num(e.t_gate), _num(e.t_gate_stderr),
                        int(e.is_virtual), _num(f.slope), _num(f.intercept),
                        _num(f.r_squared), f.threshold_used, f.points_used])
        return buf.getvalue()

    def energies_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["arity", "tau_n_s", "e_lower_J", "delta_e_lower_J",
                    "e_band_low_J", "e_band_high_J", "note"])
        for n, e in sorted(self.energies.items()):
            if e is None:
                w.writerow([n, "", "", "", "", "", NO_PHYSICAL])
                continue
            lo, hi = e.band if e.band is not None else (None, None)
            w.writerow([n, _num(e.tau_n), _num(e.e_lower), _num(e.delta_e_lower),
                        _num(lo), _num(hi), ""])
        return buf.getvalue()

    def amplification_csv(self) -> str:
        """Raw regression data, one row per job (Fig.-2 axes)."""
        return amplification_csv(self.runs)


def amplification_csv(runs: Sequence[AmplificationRun]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gate", "n_gate", "n_shots", "t_exec_s"])
    for run in runs:
        for n, t in run.data:
            w.writerow([run.plan.target.label, n, run.plan.n_shots, _num(t)])
    return buf.getvalue()


def report(estimates: Sequence[GateTimeEstimate],
           energies: Mapping[int, EnergyEstimate | None],
           runs: Sequence[AmplificationRun] = ()) -> Report:
    """Collapse connectivity variants to one row per gate (their fastest).

    The per-variant estimates stay available in :meth:`Report.gate_times_csv`.
    """
    by_gate: dict[str, list[GateTimeEstimate]] = {}
    for e in estimates:
        by_gate.setdefault(e.base_gate, []).append(e)
    rows = []
    for gate, group in by_gate.items():
        physical = [e for e in group if not e.is_virtual]
        best = min(physical, key=lambda e: e.t_gate) if physical else group[0]
        rows.append(GateRow(gate, best.arity, best.t_gate, best.t_gate_stderr,
                            not physical, tuple(e.gate for e in group)))
    rows.sort(key=lambda r: r.arity)
    return Report(tuple(rows), tuple(estimates), dict(energies), tuple(runs))
