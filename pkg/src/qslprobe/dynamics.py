"""Dense linear algebra and unitary propagation for small Hilbert spaces.

Hamiltonians carry energy units (J by default).  Every routine that turns an
energy into a phase takes an ``hbar`` keyword, so the same code runs in SI
(``hbar=HBAR``) or in natural units (``hbar=1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .constants import HBAR
from .errors import BranchAmbiguity, DimensionError, InvalidMatrix, InvalidState

TWO_PI = 2.0 * math.pi

#: Relative tolerance for the Hermiticity test, max|A - A^dag| <= rtol * max|A|.
HERMITIAN_RTOL = 1e-12
#: Frobenius tolerance on U^dag U - I for accepting a matrix as unitary.
UNITARY_ATOL = 1e-10
#: Eigenphases this close to the branch cut are treated as exact zeros.
PHASE_ROUNDOFF = 1e-12
#: Eigenphases closer than this (but not roundoff-close) to the cut from
#: below are ambiguous between a tiny negative and an almost-2pi energy.
BRANCH_CUT_TOL = 1e-9

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_matrix(A) -> np.ndarray:
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidMatrix("matrix has non-finite entries")
    return M


def as_state(psi, dim: int | None = None) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"state has dimension {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise InvalidState("state has non-finite amplitudes")
    return v


def is_hermitian(A, rtol: float = HERMITIAN_RTOL) -> bool:
    M = np.asarray(A)
    scale = np.max(np.abs(M)) if M.size else 0.0
    return bool(np.max(np.abs(M - M.conj().T), initial=0.0) <= rtol * scale)


def check_hermitian(A, what: str = "matrix") -> np.ndarray:
    M = as_matrix(A)
    if not is_hermitian(M):
        raise InvalidMatrix(f"{what} is not Hermitian")
    return 0.5 * (M + M.conj().T)


def unitarity_defect(U) -> float:
    """Frobenius norm of U^dag U - I."""
    M = np.asarray(U, dtype=complex)
    return float(np.linalg.norm(M.conj().T @ M - np.eye(M.shape[0])))


def check_normalized(psi, tol: float = 1e-10) -> np.ndarray:
    v = as_state(psi)
    if abs(np.vdot(v, v).real - 1.0) > tol:
        raise InvalidState(f"state is not normalized (norm^2 = {np.vdot(v, v).real!r})")
    return v


def basis_state(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def normalize(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    n = np.linalg.norm(v)
    if n == 0:
        raise InvalidState("cannot normalize the zero vector")
    return v / n


def expm_hermitian(H, scale: float) -> np.ndarray:
    """Return ``exp(1j * scale * H)`` for Hermitian ``H``.

    Computed from the eigendecomposition of ``H``, so the result is unitary
    to machine precision regardless of ``scale``.
    """
    Hs = check_hermitian(H)
    w, v = np.linalg.eigh(Hs)
    return (v * np.exp(1j * scale * w)) @ v.conj().T


def logm_principal_nonneg(U, tau: float, *, hbar: float = HBAR) -> np.ndarray:
    """Effective Hamiltonian of a unitary on the nonnegative branch.

    Finds Hermitian ``H_eff`` with ``U = exp(-1j * tau * H_eff / hbar)`` whose
    eigenvalues lie in ``[0, 2*pi*hbar/tau)``: an eigenvalue ``exp(1j*theta)``
    of ``U`` becomes the energy ``((-theta) mod 2pi) * hbar / tau``.

    Raises
    ------
    InvalidMatrix
        ``U`` is not unitary within ``UNITARY_ATOL``.
    BranchAmbiguity
        An eigenphase lies within ``BRANCH_CUT_TOL`` below the cut, where it
        could equally be read as a tiny negative energy.
    """
    M = as_matrix(U)
    if tau <= 0:
        raise ValueError("tau must be positive")
    defect = unitarity_defect(M)
    if defect > UNITARY_ATOL:
        raise InvalidMatrix(f"matrix is not unitary (defect {defect:.3e})")
    # complex Schur form of a normal matrix is diagonal; Z stays unitary even
    # for degenerate eigenvalues, unlike the output of a general eig.
    T, Z = scipy.linalg.schur(M, output="complex")
    phases = np.mod(-np.angle(np.diag(T)), TWO_PI)
    gap = TWO_PI - phases
    phases = np.where(gap <= PHASE_ROUNDOFF, 0.0, phases)
    phases = np.where(phases <= PHASE_ROUNDOFF, 0.0, phases)
    ambiguous = (gap > PHASE_ROUNDOFF) & (gap <= BRANCH_CUT_TOL)
    if np.any(ambiguous):
        raise BranchAmbiguity(
            "eigenphase within %.0e of the branch cut" % BRANCH_CUT_TOL,
            phases=phases,
        )
    energies = phases * hbar / tau
    H = (Z * energies) @ Z.conj().T
    return 0.5 * (H + H.conj().T)


def expectation(psi, A) -> float:
    """<psi|A|psi> for Hermitian A."""
    Ah = check_hermitian(A, "observable")
    v = as_state(psi, Ah.shape[0])
    return float(np.vdot(v, Ah @ v).real)


def variance(psi, A) -> float:
    """<A^2> - <A>^2, evaluated as ||(A - <A>) psi||^2 so it is never negative."""
    Ah = check_hermitian(A, "observable")
    v = as_state(psi, Ah.shape[0])
    mean = np.vdot(v, Ah @ v).real
    r = Ah @ v - mean * v
    return float(np.vdot(r, r).real)


def overlap(psi, phi) -> complex:
    """<psi|phi>."""
    a = as_state(psi)
    b = as_state(phi)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch {a.shape[0]} vs {b.shape[0]}")
    return complex(np.vdot(a, b))


@dataclass(frozen=True)
class HamiltonianTrajectory:
    """A Hermitian ``H(t)`` on ``[0, duration]``.

    ``smoothness`` is ``"smooth"`` or ``"piecewise-constant"``; for the latter
    the propagator is exact whenever the breakpoints sit on grid nodes.
    ``time_independent`` lets callers assert a constant Hamiltonian, which is
    what the Margolus-Levitin bound requires.
    """

    dim: int
    duration: float
    evaluator: Callable[[float], np.ndarray] = field(repr=False)
    smoothness: str = "smooth"
    time_independent: bool = False

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("trajectory duration must be positive")
        if self.dim < 1:
            raise DimensionError("dimension must be positive")
        if self.smoothness not in ("smooth", "piecewise-constant"):
            raise ValueError(f"unknown smoothness hint {self.smoothness!r}")

    def __call__(self, t: float) -> np.ndarray:
        H = as_matrix(self.evaluator(t))
        if H.shape != (self.dim, self.dim):
            raise DimensionError(
                f"evaluator returned shape {H.shape}, expected {(self.dim, self.dim)}")
        if not is_hermitian(H):
            raise InvalidMatrix(f"H({t!r}) is not Hermitian")
        return 0.5 * (H + H.conj().T)

    def sample(self, times: Sequence[float]) -> np.ndarray:
        return np.stack([self(t) for t in times]) if len(times) else np.zeros(
            (0, self.dim, self.dim), dtype=complex)

    @classmethod
    def constant(cls, H, duration: float) -> "HamiltonianTrajectory":
        Hc = check_hermitian(H)
        return cls(Hc.shape[0], duration, lambda t: Hc,
                   smoothness="piecewise-constant", time_independent=True)

    def scaled(self, factor: float) -> "HamiltonianTrajectory":
        ev = self.evaluator
        return HamiltonianTrajectory(self.dim, self.duration,
                                     lambda t: factor * ev(t),
                                     self.smoothness, self.time_independent)

    def shifted(self, offset: float) -> "HamiltonianTrajectory":
        ev = self.evaluator
        eye = np.eye(self.dim)
        return HamiltonianTrajectory(self.dim, self.duration,
                                     lambda t: ev(t) + offset * eye,
                                     self.smoothness, self.time_independent)

    def ground_shifted(self) -> "HamiltonianTrajectory":
        """Subtract the instantaneous minimum eigenvalue at every time."""
        ev = self.evaluator
        eye = np.eye(self.dim)

        def shifted(t):
            H = as_matrix(ev(t))
            return H - np.linalg.eigvalsh(0.5 * (H + H.conj().T))[0] * eye

        return HamiltonianTrajectory(self.dim, self.duration, shifted,
                                     self.smoothness, self.time_independent)

    def restricted(self, t_end: float) -> "HamiltonianTrajectory":
        if not 0 < t_end <= self.duration * (1 + 1e-12):
            raise ValueError("restriction end must lie in (0, duration]")
        return HamiltonianTrajectory(self.dim, min(t_end, self.duration),
                                     self.evaluator, self.smoothness,
                                     self.time_independent)


@dataclass(frozen=True)
class Propagation:
    """Result of :func:`propagate` on a uniform grid of ``steps`` cells.

    ``hamiltonians[k]`` is the cell-centre sample that generated the step
    from ``times[k]`` to ``times[k + 1]``.
    """

    times: np.ndarray
    states: np.ndarray
    unitaries: np.ndarray
    hamiltonians: np.ndarray
    hbar: float = HBAR

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_unitary(self) -> np.ndarray:
        return self.unitaries[-1]


def step_unitaries(Hs: np.ndarray, dt: float, hbar: float = HBAR) -> np.ndarray:
    """exp(-1j*dt*H_k/hbar) for a stack of Hermitian matrices."""
    w, v = np.linalg.eigh(Hs)
    phase = np.exp(-1j * dt * w / hbar)
    return np.einsum("kij,kj,klj->kil", v, phase, v.conj())


def propagate(H: HamiltonianTrajectory, psi0, steps: int, *,
              hbar: float = HBAR) -> Propagation:
    """Propagate ``psi0`` under ``H`` with the midpoint-exponential product.

    ``U(t + dt) = exp(-1j*dt*H(t + dt/2)/hbar) U(t)``; unitary by
    construction, second order for smooth ``H`` and exact for a
    piecewise-constant ``H`` whose breakpoints are grid nodes.
    """
    if steps < 16:
        raise ValueError("propagate needs at least 16 steps")
    psi = check_normalized(as_state(psi0, H.dim))
    T = H.duration
    dt = T / steps
    times = np.arange(steps + 1) * dt
    times[-1] = T
    mids = (np.arange(steps) + 0.5) * dt
    Hs = H.sample(mids)
    steps_u = step_unitaries(Hs, dt, hbar)

    U = np.empty((steps + 1, H.dim, H.dim), dtype=complex)
    U[0] = np.eye(H.dim)
    for k in range(steps):
        U[k + 1] = steps_u[k] @ U[k]
    states = U @ psi
    return Propagation(times, states, U, Hs, hbar)
