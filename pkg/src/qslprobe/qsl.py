"""Quantum speed limits and their inversion into energy lower bounds.

The Mandelstam-Tamm (MT) time ``pi*hbar/(2*dE)`` holds for time-dependent
Hamiltonians when ``dE`` is the time-averaged energy standard deviation.
The Margolus-Levitin (ML) time ``pi*hbar/(2*E)`` needs a time-independent
Hamiltonian with ground energy zero.  Read backwards, an orthogonalization
observed within time ``T`` forces both ``E`` and ``dE`` above
``pi*hbar/(2*T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .constants import HBAR
from .dynamics import (
    HamiltonianTrajectory,
    Propagation,
    as_state,
    check_normalized,
    expectation,
    logm_principal_nonneg,
    propagate,
)
from .errors import InvalidDuration, InvalidEnergy, InvalidFidelity

#: Default bound on |<psi0|psi(t)>| that counts as orthogonal.
ORTHOGONALITY_TOL = 1e-6


@dataclass(frozen=True)
class EnergyStats:
    """Time-averaged energy statistics of one evolution.

    ``energy_stddev`` is the time average of the instantaneous standard
    deviation, not the standard deviation of the averaged Hamiltonian.
    ``effective_energy`` is ``<psi0|H_eff|psi0>`` for the nonnegative-branch
    effective Hamiltonian of ``U(T)``; ``None`` when not requested.
    """

    mean_energy: float
    energy_stddev: float
    effective_energy: float | None
    duration: float

    def __post_init__(self):
        if self.energy_stddev < 0:
            raise ValueError("energy standard deviation must be nonnegative")
        if self.duration <= 0:
            raise ValueError("duration must be positive")


@dataclass(frozen=True)
class QslBounds:
    t_mt: float
    t_ml: float | None
    t_effective: float


def instantaneous_stats(prop: Propagation) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell energy mean and standard deviation of a propagation.

    Inside cell ``k`` the propagator evolves under the constant sample
    ``H_k``, which conserves both moments, so the value at the cell's left
    node is exact for the whole cell.
    """
    psi = prop.states[:-1]
    Hpsi = np.einsum("kij,kj->ki", prop.hamiltonians, psi)
    mean = np.einsum("ki,ki->k", psi.conj(), Hpsi).real
    resid = Hpsi - mean[:, None] * psi
    var = np.einsum("ki,ki->k", resid.conj(), resid).real
    return mean, np.sqrt(np.maximum(var, 0.0))


def _trapezoid_stats(H: HamiltonianTrajectory, prop: Propagation):
    Hn = H.sample(prop.times)
    psi = prop.states
    Hpsi = np.einsum("kij,kj->ki", Hn, psi)
    mean = np.einsum("ki,ki->k", psi.conj(), Hpsi).real
    resid = Hpsi - mean[:, None] * psi
    sd = np.sqrt(np.maximum(np.einsum("ki,ki->k", resid.conj(), resid).real, 0.0))
    T = H.duration
    return (float(np.trapezoid(mean, prop.times) / T),
            float(np.trapezoid(sd, prop.times) / T))


def stats_from_propagation(prop: Propagation, psi0, *, effective: bool = True) -> EnergyStats:
    mean, sd = instantaneous_stats(prop)
    T = float(prop.times[-1])
    e_eff = None
    if effective:
        H_eff = logm_principal_nonneg(prop.final_unitary, T, hbar=prop.hbar)
        e_eff = expectation(psi0, H_eff)
    return EnergyStats(float(mean.mean()), float(sd.mean()), e_eff, T)


def time_averaged_stats(H: HamiltonianTrajectory, psi0, steps: int = 1024, *,
                        hbar: float = HBAR, rule: str = "midpoint",
                        shift_ground_to_zero: bool = False,
                        effective: bool = True) -> EnergyStats:
    """Time-averaged ``E`` and ``dE`` of ``psi0`` evolving under ``H``.

    ``rule="midpoint"`` integrates the piecewise-constant model the
    propagator solves exactly, which keeps ``E``, ``E_eff`` and the Magnus
    terms consistent to machine precision.  ``rule="trapezoid"`` samples
    ``H`` on the grid nodes instead.
    """
    if shift_ground_to_zero:
        H = H.ground_shifted()
    psi0 = check_normalized(as_state(psi0, H.dim))
    prop = propagate(H, psi0, steps, hbar=hbar)
    stats = stats_from_propagation(prop, psi0, effective=effective)
    if rule == "midpoint":
        return stats
    if rule == "trapezoid":
        e, de = _trapezoid_stats(H, prop)
        return EnergyStats(e, de, stats.effective_energy, H.duration)
    raise ValueError(f"unknown quadrature rule {rule!r}")


def mt_bound(delta_E: float, *, hbar: float = HBAR) -> float:
    """Mandelstam-Tamm orthogonalization time ``pi*hbar/(2*delta_E)``."""
    if not delta_E > 0:
        raise InvalidEnergy(f"energy spread must be positive, got {delta_E!r}")
    return math.pi * hbar / (2.0 * delta_E)


def ml_bound(E: float, *, hbar: float = HBAR) -> float:
    """Margolus-Levitin time ``pi*hbar/(2*E)``; E measured from the ground level."""
    if not E > 0:
        raise InvalidEnergy(f"mean energy must be positive, got {E!r}")
    return math.pi * hbar / (2.0 * E)


def invert_qsl(tau: float, *, hbar: float = HBAR) -> tuple[float, float]:
    """Lower bounds ``(E, dE)`` implied by orthogonalizing within ``tau``."""
    if not tau > 0:
        raise InvalidDuration(f"orthogonalization time must be positive, got {tau!r}")
    bound = math.pi * hbar / (2.0 * tau)
    return bound, bound


def qsl_bounds(stats: EnergyStats, *, time_independent: bool = False,
               hbar: float = HBAR) -> QslBounds:
    """Combine MT and ML times; the larger one is the effective limit.

    The ML time uses the mean energy only when the caller asserts a
    time-independent, ground-zero Hamiltonian.  Otherwise it is taken from
    the effective Hamiltonian, which is time-independent by construction.
    """
    t_mt = mt_bound(stats.energy_stddev, hbar=hbar)
    E = stats.mean_energy if time_independent else stats.effective_energy
    t_ml = ml_bound(E, hbar=hbar) if E is not None and E > 0 else None
    t_eff = max(t_mt, t_ml) if t_ml is not None else t_mt
    return QslBounds(t_mt, t_ml, t_eff)


def _cell_overlap(psi0, psi_k, H_k, hbar):
    w, v = np.linalg.eigh(H_k)
    c = (psi0.conj() @ v) * (v.conj().T @ psi_k)
    w = w - w.mean()  # a global phase leaves |overlap| unchanged

    def ov(d):
        return complex(np.dot(c, np.exp(-1j * d * w / hbar)))

    def dov(d):
        return complex(np.dot(c * (-1j * w / hbar), np.exp(-1j * d * w / hbar)))

    spread = (w[-1] - w[0]) / (2.0 * hbar)
    return ov, dov, spread


def _refine(ov, dov, dt, xtol):
    res = minimize_scalar(lambda d: abs(ov(d)), bounds=(0.0, dt),
                          method="bounded", options={"xatol": xtol})
    d0 = float(res.x)
    for edge in (0.0, dt):
        if abs(ov(edge)) < abs(ov(d0)):
            d0 = edge
    slope = dov(d0)
    if abs(slope) > 0:
        def g(d):
            return (slope.conjugate() * ov(d)).real

        h = min(dt, max(1e4 * xtol, 1e-6 * dt))
        lo, hi = max(0.0, d0 - h), min(dt, d0 + h)
        if g(lo) * g(hi) < 0:
            d1 = brentq(g, lo, hi, xtol=xtol * 1e-3)
            if abs(ov(d1)) <= abs(ov(d0)):
                d0 = d1
    return d0, abs(ov(d0))


def orthogonalization_time(H: HamiltonianTrajectory, psi0,
                           tol: float = ORTHOGONALITY_TOL, steps: int = 1024, *,
                           hbar: float = HBAR) -> float | None:
    """First time in ``(0, T]`` at which ``|<psi0|psi(t)>|`` reaches ``tol``.

    The propagation grid is scanned cell by cell.  Within a cell the
    propagator is ``exp(-1j*(t - t_k)*H_k/hbar)``, so ``|overlap|`` can drop
    by at most ``dt * spread(H_k)/(2*hbar)`` below the node values; cells
    whose bound reaches ``tol`` are searched for the minimum, which is then
    polished to ``1e-12 * T``.  Returns the time of the minimum, or ``None``
    when the state never gets within ``tol`` of orthogonality.
    """
    if not 0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")
    psi0 = check_normalized(as_state(psi0, H.dim))
    prop = propagate(H, psi0, steps, hbar=hbar)
    dt = prop.dt
    xtol = 1e-12 * H.duration
    a = np.abs(prop.states @ psi0.conj())
    for k in range(steps):
        ov, dov, spread = _cell_overlap(psi0, prop.states[k], prop.hamiltonians[k], hbar)
        if 0.5 * (a[k] + a[k + 1] - spread * dt) > tol:
            continue
        d, value = _refine(ov, dov, dt, xtol)
        if value <= tol and (k > 0 or d > 0):
            return float(prop.times[k] + d)
    return None


def bures_angle(psi, phi) -> float:
    a = as_state(psi)
    b = as_state(phi)
    return math.acos(min(1.0, abs(np.vdot(a, b))))


def corrected_mt_bound(delta_E: float, epsilon: float, *, hbar: float = HBAR) -> float:
    """MT time to reach a final state with infidelity ``epsilon``.

    With ``|<psi_perp|psi_err>|^2 = 1 - epsilon`` the Bures angle from the
    initial state is ``arccos(sqrt(epsilon))`` and the bound becomes
    ``hbar * arccos(sqrt(epsilon)) / delta_E`` (exact, not expanded).
    """
    if not delta_E > 0:
        raise InvalidEnergy(f"energy spread must be positive, got {delta_E!r}")
    if not 0.0 <= epsilon < 1.0:
        raise InvalidFidelity(f"epsilon must lie in [0, 1), got {epsilon!r}")
    return hbar * math.acos(math.sqrt(epsilon)) / delta_E
