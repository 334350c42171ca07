"""Second-order Magnus and Dyson expansions and the E_eff - E check.

All quadratures use the cell-centre samples the propagator steps with, so
for the piecewise-constant model the propagator solves, the double
integrals over the ordered triangle ``0 < t2 < t1 < tau`` are exact sums:
off-diagonal cells give ``H_k H_j dt^2`` and a diagonal cell gives
``H_k^2 dt^2 / 2`` (its commutator vanishes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import HBAR
from .dynamics import (
    HamiltonianTrajectory,
    as_state,
    check_normalized,
    propagate,
)
from .qsl import stats_from_propagation

#: Differences below this multiple of the energy scale are at float precision.
PRECISION_FLOOR = 1e-14


def _cells(H: HamiltonianTrajectory, steps: int):
    if steps < 32:
        raise ValueError("expansion quadrature needs at least 32 steps")
    dt = H.duration / steps
    mids = (np.arange(steps) + 0.5) * dt
    return H.sample(mids), dt


def _exclusive_cumsum(Hs):
    S = np.cumsum(Hs, axis=0)
    return np.concatenate([np.zeros_like(Hs[:1]), S[:-1]])


def commutator_double_integral(H: HamiltonianTrajectory, steps: int = 1024) -> np.ndarray:
    """Ordered double integral of ``[H(t1), H(t2)]`` over ``t2 < t1``."""
    Hs, dt = _cells(H, steps)
    S = _exclusive_cumsum(Hs)
    C = np.einsum("kij,kjl->il", Hs, S) - np.einsum("kij,kjl->il", S, Hs)
    return C * dt * dt


def magnus_h_eff_second_order(H: HamiltonianTrajectory, steps: int = 1024, *,
                              hbar: float = HBAR) -> np.ndarray:
    """Effective Hamiltonian truncated after the first commutator term:
    ``(1/tau) int H + (1/(2i hbar tau)) iint_{t2<t1} [H(t1), H(t2)]``."""
    Hs, dt = _cells(H, steps)
    tau = H.duration
    first = Hs.sum(axis=0) * dt / tau
    second = commutator_double_integral(H, steps) / (2j * hbar * tau)
    M = first + second
    return 0.5 * (M + M.conj().T)


def dyson_unitary_second_order(H: HamiltonianTrajectory, t: float, steps: int = 1024, *,
                               hbar: float = HBAR) -> np.ndarray:
    """Dyson series for ``U(t)`` truncated at second order.

    The result is not unitary; its defect ``||U^dag U - I||`` is third order
    in ``H`` and can be read off with :func:`qslprobe.dynamics.unitarity_defect`.
    """
    if not 0 < t <= H.duration * (1 + 1e-12):
        raise ValueError("t must lie in (0, T]")
    Hs, dt = _cells(H.restricted(t), steps)
    S = _exclusive_cumsum(Hs)
    first = Hs.sum(axis=0) * dt
    second = (np.einsum("kij,kjl->il", Hs, S)
              + 0.5 * np.einsum("kij,kjl->il", Hs, Hs)) * dt * dt
    eye = np.eye(H.dim, dtype=complex)
    return eye - (1j / hbar) * first + (-1j / hbar) ** 2 * second


def energy_difference_signed(H: HamiltonianTrajectory, psi0, steps: int = 1024, *,
                             hbar: float = HBAR) -> float:
    """Second-order prediction of ``E_eff - E`` (sign kept)."""
    psi0 = check_normalized(as_state(psi0, H.dim))
    C = commutator_double_integral(H, steps)
    c = np.vdot(psi0, C @ psi0)
    return float((-c / (2j * hbar * H.duration)).real)


def energy_difference_formula(H: HamiltonianTrajectory, psi0, steps: int = 1024, *,
                              hbar: float = HBAR) -> float:
    """``(1/(2 hbar tau)) |iint_{t2<t1} <psi0|[H(t1), H(t2)]|psi0>|``."""
    return abs(energy_difference_signed(H, psi0, steps, hbar=hbar))


@dataclass(frozen=True)
class ExpansionReport:
    """Per-coupling exact energies and the fitted scaling exponents.

    Arrays are indexed like ``lambdas``.  An exponent is ``None`` when fewer
    than three points rise above the float precision floor.
    """

    lambdas: np.ndarray
    e_eff_exact: np.ndarray
    e_avg_exact: np.ndarray
    first_order_term: np.ndarray
    second_order_term: np.ndarray
    magnus_energy: np.ndarray
    lambda_scaling_exponent: float | None
    residual_exponent: float | None
    coefficient_ratio: float | None

    @property
    def difference(self) -> np.ndarray:
        return self.e_eff_exact - self.e_avg_exact

    @property
    def residual(self) -> np.ndarray:
        return self.difference - self.second_order_term

    @property
    def saturated(self) -> bool:
        return self.lambda_scaling_exponent is None


def _fit_exponent(lambdas, values, scales):
    keep = np.abs(values) > PRECISION_FLOOR * scales
    if keep.sum() < 3:
        return None
    slope = np.polyfit(np.log(lambdas[keep]), np.log(np.abs(values[keep])), 1)[0]
    return float(slope)


def verify_second_order_scaling(H: HamiltonianTrajectory, psi0, lambdas, steps: int = 1024, *,
                                hbar: float = HBAR) -> ExpansionReport:
    """Scale ``H -> lam*H`` and measure how ``E_eff - E`` vanishes.

    ``E_eff`` comes from the propagated ``U(tau)`` through the nonnegative
    branch logarithm and ``E`` from the time average of the propagated
    state; neither uses the truncated series.  The exponent of
    ``|E_eff - E|`` should be 2 and, after subtracting the second-order
    commutator prediction, the remainder should scale with exponent 3.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size < 2:
        raise ValueError("need at least two coupling scales")
    if np.any(lambdas <= 0) or np.any(lambdas > 1) or np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambdas must be strictly decreasing values in (0, 1]")
    psi0 = check_normalized(as_state(psi0, H.dim))

    e_eff, e_avg, first, second, magnus, scales = ([] for _ in range(6))
    for lam in lambdas:
        Hl = H.scaled(lam)
        prop = propagate(Hl, psi0, steps, hbar=hbar)
        stats = stats_from_propagation(prop, psi0)
        e_eff.append(stats.effective_energy)
        e_avg.append(stats.mean_energy)
        first.append(float(np.einsum("i,kij,j->k", psi0.conj(), prop.hamiltonians,
                                     psi0).real.mean()))
        second.append(energy_difference_signed(Hl, psi0, steps, hbar=hbar))
        M = magnus_h_eff_second_order(Hl, steps, hbar=hbar)
        magnus.append(float(np.vdot(psi0, M @ psi0).real))
        # eigenphase roundoff alone gives an energy error of order hbar/tau
        norm = float(np.max(np.linalg.norm(prop.hamiltonians, ord=2, axis=(1, 2))))
        scales.append(max(norm, hbar / H.duration))

    e_eff, e_avg, first, second, magnus, scales = map(
        np.asarray, (e_eff, e_avg, first, second, magnus, scales))
    diff = e_eff - e_avg
    resid = diff - second
    p_diff = _fit_exponent(lambdas, diff, scales)
    p_resid = _fit_exponent(lambdas, resid, scales) if p_diff is not None else None
    ratio = None
    if p_diff is not None and second[-1] != 0:
        ratio = float(diff[-1] / second[-1])
    return ExpansionReport(lambdas, e_eff, e_avg, first, second, magnus,
                           p_diff, p_resid, ratio)
