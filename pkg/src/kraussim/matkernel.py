"""Dense complex linear-algebra kernels and state utilities.

Everything here is a pure function of numpy arrays.  Density matrices and
pure states get thin validated containers; validation tolerances are module
constants so that tests can reference them by name.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10
STATE_NORM_TOL = 1e-12
MATEXP_NORM_LIMIT = 1e4
PSD_SQRT_TOL = 1e-9
PSD_REJECT_TOL = -1e-6
DEFAULT_RCOND = 1e-12

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string_matrix(label: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis; qubit 0 is the leftmost letter."""
    if not label or any(c not in PAULI for c in label):
        raise ValueError(f"invalid Pauli string label {label!r}")
    out = np.array([[1.0]], dtype=complex)
    for c in label:
        out = np.kron(out, PAULI[c])
    return out


def pauli_labels(num_qubits: int) -> list[str]:
    """All 4**n Pauli string labels in lexicographic I < X < Y < Z order."""
    return ["".join(p) for p in itertools.product("IXYZ", repeat=num_qubits)]


def _as_matrix(value) -> np.ndarray:
    """Accept a DensityMatrix, QuantumState (as projector) or a plain array."""
    if isinstance(value, DensityMatrix):
        return value.matrix
    if isinstance(value, QuantumState):
        return value.density().matrix
    return np.asarray(value, dtype=complex)


def _require_square(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError(f"{what} contains non-finite entries")
    return a


def hermiticity_defect(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.abs(a - a.conj().T).max()) if a.size else 0.0


@dataclass(frozen=True)
class QuantumState:
    """Normalized pure state over a dim-dimensional Hilbert space."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(amp.real)) or not np.all(np.isfinite(amp.imag)):
            raise ValueError("state amplitudes contain non-finite entries")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > STATE_NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond {STATE_NORM_TOL}")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian unit-trace PSD matrix.

    ``raw=True`` skips the physicality checks and marks unphysical
    intermediates (tomography output, channel-inverted estimates) that still
    need projection.
    """

    matrix: np.ndarray
    raw: bool = False

    def __post_init__(self):
        mat = _require_square(self.matrix, "density matrix")
        if not self.raw:
            defect = hermiticity_defect(mat)
            if defect > HERMITICITY_TOL:
                raise ValueError(f"hermiticity defect {defect} exceeds {HERMITICITY_TOL}")
            mat = (mat + mat.conj().T) / 2
            tr = complex(np.trace(mat))
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"trace {tr} deviates from 1 beyond {TRACE_TOL}")
            lo = float(np.linalg.eigvalsh(mat).min())
            if lo < EIGENVALUE_FLOOR:
                raise ValueError(f"eigenvalue {lo} below floor {EIGENVALUE_FLOOR}")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def classify_density(matrix: np.ndarray) -> DensityMatrix:
    """Wrap a matrix as a DensityMatrix, falling back to raw when unphysical."""
    try:
        return DensityMatrix(matrix)
    except ValueError:
        return DensityMatrix(matrix, raw=True)


def matexp(a: np.ndarray) -> np.ndarray:
    """Matrix exponential via scaling-and-squaring with Pade approximants."""
    a = _require_square(a)
    norm = np.linalg.norm(a, 2) if a.size else 0.0
    if norm > MATEXP_NORM_LIMIT:
        raise ValueError(f"matrix norm {norm} exceeds limit {MATEXP_NORM_LIMIT}")
    return scipy.linalg.expm(a)


def herm_eig(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and the unitary eigenvector matrix U
    with ``U diag(w) U^dag`` reconstructing the input.  The input is
    symmetrized when its hermiticity defect is within tolerance and rejected
    otherwise.
    """
    h = _require_square(h)
    defect = hermiticity_defect(h)
    if defect > HERMITICITY_TOL * max(1.0, float(np.abs(h).max())):
        raise ValueError(f"matrix is not Hermitian (defect {defect})")
    w, u = np.linalg.eigh((h + h.conj().T) / 2)
    return w, u


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Hermitian PSD square root; small negative eigenvalues are clipped."""
    w, u = herm_eig(a)
    if w.min() < PSD_REJECT_TOL:
        raise ValueError(f"matrix is not PSD (eigenvalue {w.min()})")
    w = np.clip(w, 0.0, None)
    return (u * np.sqrt(w)) @ u.conj().T


def pinv(a: np.ndarray, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD with a relative singular cutoff."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError("pinv expects a 2-d matrix")
    if not 0.0 < rcond < 1.0:
        raise ValueError("rcond must lie in (0, 1)")
    return np.linalg.pinv(a, rcond=rcond)


def project_to_physical(matrix: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues and renormalize to unit trace."""
    mat = _require_square(matrix)
    mat = (mat + mat.conj().T) / 2
    w, u = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0.0:
        raise ValueError("projection clipped every eigenvalue; degenerate input")
    return (u * (w / total)) @ u.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clamped to [0, 1].

    Raw inputs are projected to the physical cone first.
    """
    a = _as_matrix(rho)
    b = _as_matrix(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    if (isinstance(rho, DensityMatrix) and rho.raw) or hermiticity_defect(a) > HERMITICITY_TOL:
        a = project_to_physical(a)
    if (isinstance(sigma, DensityMatrix) and sigma.raw) or hermiticity_defect(b) > HERMITICITY_TOL:
        b = project_to_physical(b)
    sqrt_a = psd_sqrt(a)
    inner = sqrt_a @ b @ sqrt_a
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    # eigenvalues at solver-noise level would pollute the square root
    floor = max(float(w.max()), 0.0) * 1e-13
    val = float(np.sqrt(w[w > floor]).sum() ** 2)
    return min(max(val, 0.0), 1.0)


def von_neumann_entropy(rho) -> float:
    """Spectral entropy -sum(w ln w) in nats; zero eigenvalues contribute 0."""
    w = np.linalg.eigvalsh(_as_matrix(rho))
    w = np.clip(w, 0.0, None)
    nz = w[w > 0.0]
    return float(-(nz * np.log(nz)).sum())


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of the difference of two Hermitian matrices."""
    a = _as_matrix(rho)
    b = _as_matrix(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    diff = a - b
    w = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(0.5 * np.abs(w).sum())
