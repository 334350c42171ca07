"""Figures written next to the CSV outputs (non-interactive backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .estimator import AmplificationRun, GateTimeEstimate  # noqa: E402

# Pin metadata so repeated runs write identical files.
_PNG_METADATA = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
    return path


def plot_amplification(runs: Sequence[AmplificationRun], path,
                       estimates: Sequence[GateTimeEstimate] = ()) -> Path:
    """Job time against gate count, one panel per arity, with the fitted lines."""
    fits = {e.gate: e for e in estimates}
    arities = sorted({r.plan.target.arity for r in runs}) or [1]
    fig, axes = plt.subplots(1, len(arities), figsize=(4.2 * len(arities), 3.6), squeeze=False)
    for ax, n in zip(axes[0], arities):
        for run in (r for r in runs if r.plan.target.arity == n):
            label = run.plan.target.label
            x, y = (np.array(v, dtype=float) for v in zip(*run.data))
            (pts,) = ax.plot(x, y, "o", ms=4, label=label)
            est = fits.get(label)
            if est is not None:
                keep = x >= est.fit.threshold_used
                xs = np.array([x[keep].min(), x[keep].max()])
                ax.plot(xs, est.fit.intercept + est.fit.slope * xs, "-", lw=1,
                        color=pts.get_color())
        ax.set_xlabel(r"$N_{\rm gate}$")
        ax.set_ylabel(r"$T_{\rm exec}$ [s]")
        ax.set_title(f"{n}-qubit gates")
        ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_gate_times(estimates: Sequence[GateTimeEstimate], path) -> Path:
    """Estimated gate times with one-sigma error bars; virtual gates at zero."""
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(estimates) + 1.5), 3.6))
    labels = [e.gate for e in estimates]
    t = np.array([0.0 if e.is_virtual else e.t_gate * 1e9 for e in estimates])
    err = np.array([e.t_gate_stderr * 1e9 for e in estimates])
    colors = [f"C{e.arity - 1}" for e in estimates]
    ax.bar(range(len(t)), t, yerr=err, color=colors, capsize=3)
    ax.set_xticks(range(len(t)), labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("gate time [ns]")
    if len(t) and t.max() > 0:
        ax.set_yscale("symlog", linthresh=10)
        ax.set_ylim(bottom=0)
    fig.tight_layout()
    return _save(fig, path)
