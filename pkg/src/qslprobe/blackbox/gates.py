"""Standard gate unitaries and the drive generators that realize them.

Each physical gate is driven as ``H(t) = hbar * Omega(t) * G`` with a
generator ``G`` whose spectrum starts at zero, so a pulse of area
``int Omega dt = pi`` gives ``exp(-1j*pi*G)``, equal to the gate up to a
global phase.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..errors import UnknownGate

_S2 = 1.0 / math.sqrt(2.0)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * _S2
S = np.diag([1, 1j]).astype(complex)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)
MINUS = np.array([[1, -1], [-1, 1]], dtype=complex) / 2  # |-><-|


def _controlled(U, n_controls):
    d = U.shape[0]
    full = np.eye(d * 2 ** n_controls, dtype=complex)
    full[-d:, -d:] = U
    return full


_SWAP_PLANE = np.zeros((4, 4), dtype=complex)
_SWAP_PLANE[1, 2] = _SWAP_PLANE[2, 1] = 1.0

ISWAP = np.array([[1, 0, 0, 0],
                  [0, 0, 1j, 0],
                  [0, 1j, 0, 0],
                  [0, 0, 0, 1]], dtype=complex)

UNITARIES = {
    "X": X,
    "Y": Y,
    "Z": Z,
    "H": H,
    "S": S,
    "CZ": _controlled(Z, 1),
    "CNOT": _controlled(X, 1),
    "iSWAP": ISWAP,
    "Toffoli": _controlled(X, 2),
    "iToffoli": _controlled(1j * X, 2),
    "CCZ": _controlled(Z, 2),
}

GENERATORS = {
    "X": (X + I2) / 2,
    "Y": (Y + I2) / 2,
    "Z": P1,
    "H": (H + I2) / 2,
    "S": P0 / 2,
    "CZ": np.kron(P1, P1),
    "CNOT": np.kron(P1, MINUS),
    # -(XX + YY)/4 has eigenvalues -1/2, 0, 0, 1/2; shifted up by 1/2
    "iSWAP": -0.5 * _SWAP_PLANE + 0.5 * np.eye(4),
    "Toffoli": np.kron(np.kron(P1, P1), MINUS),
    # iX has eigenvalues +i on |+>, -i on |->: phases 3pi/2 and pi/2
    "iToffoli": np.kron(np.kron(P1, P1), I2 + X / 2),
    "CCZ": np.kron(np.kron(P1, P1), P1),
}

ALIASES = {"CX": "CNOT", "CCX": "Toffoli", "TOFFOLI": "Toffoli",
           "ISWAP": "iSWAP", "ITOFFOLI": "iToffoli"}

#: Gates reported in the demonstration table, by arity.
TABLE_GATES = {1: ("X", "Y", "Z"), 2: ("CZ", "CNOT", "iSWAP"),
               3: ("Toffoli", "iToffoli", "CCZ")}


def canonical_name(name: str) -> str:
    if name in UNITARIES:
        return name
    key = name.upper()
    if key in ALIASES:
        return ALIASES[key]
    for known in UNITARIES:
        if known.upper() == key:
            return known
    raise UnknownGate(f"unknown gate {name!r}")


def gate_arity(name: str) -> int:
    return int(round(math.log2(UNITARIES[canonical_name(name)].shape[0])))


def gate_unitary_library(name: str, arity: int | None = None) -> np.ndarray:
    """Ideal unitary of a named gate, qubit 0 most significant."""
    U = UNITARIES[canonical_name(name)]
    if arity is not None and U.shape[0] != 2 ** arity:
        raise UnknownGate(f"gate {name!r} does not act on {arity} qubit(s)")
    return U.copy()


def drive_generator(name: str) -> np.ndarray:
    return GENERATORS[canonical_name(name)].copy()


def phase_fidelity(U, V) -> float:
    """|Tr(U^dag V)| / d: 1 when U and V agree up to a global phase."""
    d = U.shape[0]
    return float(abs(np.trace(U.conj().T @ V)) / d)


def can_orthogonalize(U, tol: float = 1e-9) -> bool:
    """Whether some state satisfies <psi|U|psi> = 0.

    The numerical range of a unitary is the convex hull of its eigenvalues,
    which contains 0 exactly when no gap between consecutive eigenphases
    exceeds pi.
    """
    phases = np.sort(np.mod(np.angle(np.linalg.eigvals(U)), 2 * math.pi))
    gaps = np.diff(np.concatenate([phases, phases[:1] + 2 * math.pi]))
    return bool(gaps.max() <= math.pi + tol)


def orthogonalizing_state(U, tol: float = 1e-9) -> np.ndarray | None:
    """A state mapped by ``U`` to an orthogonal one, or ``None``.

    Computational basis states are tried first, then equal superpositions
    of eigenvectors with opposite eigenvalues, then weighted triples.
    """
    U = np.asarray(U, dtype=complex)
    d = U.shape[0]
    diag = np.abs(np.diag(U))
    if diag.min() <= tol:
        psi = np.zeros(d, dtype=complex)
        psi[int(np.argmin(diag))] = 1.0
        return psi
    w, v = np.linalg.eig(U)
    v, _ = np.linalg.qr(v)  # unitary U is normal; re-orthonormalize clusters
    w = np.diag(v.conj().T @ U @ v)
    for a, b in itertools.combinations(range(d), 2):
        if abs(w[a] + w[b]) <= tol:
            return (v[:, a] + v[:, b]) * _S2
    for a, b, c in itertools.combinations(range(d), 3):
        M = np.array([[w[a].real, w[b].real, w[c].real],
                      [w[a].imag, w[b].imag, w[c].imag],
                      [1.0, 1.0, 1.0]])
        try:
            p = np.linalg.solve(M, [0.0, 0.0, 1.0])
        except np.linalg.LinAlgError:
            continue
        if np.all(p >= -tol):
            p = np.clip(p, 0.0, None)
            return np.sqrt(p[0]) * v[:, a] + np.sqrt(p[1]) * v[:, b] + np.sqrt(p[2]) * v[:, c]
    return None


def computational_indices(n_qubits: int, levels: int) -> list[int]:
    """Basis indices whose every qudit digit lies in ``{0, 1}``."""
    return [int("".join(map(str, bits)), levels)
            for bits in itertools.product((0, 1), repeat=n_qubits)]


def extend_levels(op: np.ndarray, n_qubits: int, levels: int) -> np.ndarray:
    """Lift an operator on ``n_qubits`` qubits to qudits with ``levels`` levels.

    The operator acts on the computational subspace and is zero on every
    basis state with some qudit outside ``{0, 1}``.  Use
    :func:`extend_unitary` for unitaries, which must act as the identity there.
    """
    if levels == 2:
        return op
    D = levels ** n_qubits
    idx = computational_indices(n_qubits, levels)
    out = np.zeros((D, D), dtype=complex)
    out[np.ix_(idx, idx)] = op
    return out


def extend_unitary(U: np.ndarray, n_qubits: int, levels: int) -> np.ndarray:
    if levels == 2:
        return U
    out = extend_levels(U, n_qubits, levels)
    D = levels ** n_qubits
    comp = np.zeros(D, dtype=bool)
    comp[computational_indices(n_qubits, levels)] = True
    out[~comp, ~comp] = 1.0
    return out


def embed(op: np.ndarray, qubits, n: int, levels: int = 2) -> np.ndarray:
    """Place a ``len(qubits)``-site operator on the given sites of ``n`` sites."""
    k = len(qubits)
    rest = [q for q in range(n) if q not in qubits]
    full = np.kron(op, np.eye(levels ** (n - k))).reshape([levels] * (2 * n))
    order = list(qubits) + rest
    perm = list(np.argsort(order))
    full = full.transpose(perm + [n + p for p in perm])
    return full.reshape(levels ** n, levels ** n)
