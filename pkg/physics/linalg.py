"""
Small-matrix complex linear algebra for the two-qubit dilation.

Conventions:
- ``Op2`` / ``Op4`` are complex128 numpy arrays of shape (2, 2) / (4, 4).
- ``Ket2`` / ``Ket4`` are complex128 vectors of length 2 / 4; they may be
  unnormalized (non-unitary evolution), each operation says whether it
  normalizes.
- Two-qubit basis order is |a w> = |00>, |01>, |10>, |11>: the ancilla is the
  left (most significant) factor.
"""

import cmath
import logging
import math
from typing import Tuple

import numpy as np
import numpy.typing as npt

from utils.errors import DegenerateInput, InvalidArgument, NonFiniteInput

logger = logging.getLogger(__name__)

Op2 = npt.NDArray[np.complex128]
Op4 = npt.NDArray[np.complex128]
Ket2 = npt.NDArray[np.complex128]
Ket4 = npt.NDArray[np.complex128]
Density2 = npt.NDArray[np.complex128]

DENSITY_TOL = 1e-12
# |sqrt(v)| below this switches cos/sinc to their power series
SERIES_CUTOFF = 1e-4

I2 = np.eye(2, dtype=np.complex128)
I4 = np.eye(4, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)

PAULI = {"I": I2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}

KET0 = np.array([1, 0], dtype=np.complex128)
KET1 = np.array([0, 1], dtype=np.complex128)


def as_array(value, shape: Tuple[int, ...], name: str = "value") -> np.ndarray:
    """Coerce to a complex128 array of the given shape, rejecting NaN/Inf."""
    arr = np.asarray(value, dtype=np.complex128)
    if arr.shape != shape:
        raise InvalidArgument(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains non-finite entries")
    return arr


def as_scalar(value, name: str = "scale") -> complex:
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise NonFiniteInput(f"{name} is not finite: {value!r}")
    return z


def cos_sinc(v: complex) -> Tuple[complex, complex]:
    """
    Return (cos(sqrt(v)), sin(sqrt(v))/sqrt(v)).

    Both are entire functions of v, so the result does not depend on which
    square-root branch is taken. Near v = 0 the power series is used.
    """
    w = cmath.sqrt(v)
    if abs(w) < SERIES_CUTOFF:
        v2 = v * v
        return (
            1.0 - v / 2.0 + v2 / 24.0 - v2 * v / 720.0,
            1.0 - v / 6.0 + v2 / 120.0 - v2 * v / 5040.0,
        )
    return cmath.cos(w), cmath.sin(w) / w


def expm2_closed(m, scale) -> Op2:
    """
    Closed-form e^{scale * M} for any finite 2x2 complex M.

    M is split as (tr M / 2) I + M' with M' traceless, so M'^2 = -det(M') I and
    e^{scale M'} = cos(x) I + scale * sinc(x) M' with x^2 = scale^2 det(M').

    Args:
        m: Any finite 2x2 complex matrix, diagonalizable or not
        scale: Complex factor, e.g. -i t / hbar

    Returns:
        e^{scale * M} as a complex128 2x2 array

    Raises:
        NonFiniteInput: an input is NaN/Inf or the result overflows
    """
    m = as_array(m, (2, 2), "M")
    scale = as_scalar(scale)

    half_trace = 0.5 * (m[0, 0] + m[1, 1])
    shifted = m - half_trace * I2
    det_shifted = shifted[0, 0] * shifted[1, 1] - shifted[0, 1] * shifted[1, 0]
    try:
        c, s = cos_sinc(scale * scale * det_shifted)
        result = cmath.exp(scale * half_trace) * (c * I2 + (scale * s) * shifted)
    except OverflowError as e:
        raise NonFiniteInput(f"e^(scale M) overflows for scale={scale}") from e
    if not np.all(np.isfinite(result)):
        raise NonFiniteInput(f"e^(scale M) overflows for scale={scale}")
    return result


def expm2_taylor(m, scale, tol: float = 1e-13) -> Op2:
    """
    Scaling-and-squaring Taylor evaluation of e^{scale * M}.

    Independent of ``expm2_closed``; used as an oracle. The series is summed
    on M / 2^j (norm <= 1/2) with a cutoff tightened by the amplification of
    the j squarings so the final truncation error stays below ``tol``.

    Args:
        m: Finite 2x2 complex matrix
        scale: Complex factor
        tol: Target truncation error, > 0

    Returns:
        e^{scale * M}
    """
    if not tol > 0:
        raise InvalidArgument(f"tol must be > 0, got {tol}")
    m = as_array(m, (2, 2), "M")
    a = as_scalar(scale) * m

    norm = frobenius(a)
    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    b = a / (2.0 ** squarings)
    cutoff = tol / (4.0 * (2.0 ** squarings) * math.exp(min(norm, 700.0)))

    result = I2.copy()
    term = I2.copy()
    for k in range(1, 200):
        term = term @ b / k
        result = result + term
        if frobenius(term) <= cutoff:
            break
    for _ in range(squarings):
        result = result @ result
    return result


def kron2(a, b) -> Op4:
    """
    Kronecker product with the ancilla as the left factor.

    Args:
        a: 2x2 ancilla operator
        b: 2x2 work operator

    Returns:
        4x4 operator with entry (2i+k, 2j+l) = A[i,j] B[k,l]
    """
    return np.kron(as_array(a, (2, 2), "A"), as_array(b, (2, 2), "B"))


def kron_ket(ancilla, work) -> Ket4:
    return np.kron(as_array(ancilla, (2,), "ancilla"), as_array(work, (2,), "work"))


def frobenius(a) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(a))


def is_unitary(u, tol: float = 1e-12) -> bool:
    u = np.asarray(u, dtype=np.complex128)
    eye = np.eye(u.shape[0], dtype=np.complex128)
    return bool(np.max(np.abs(u.conj().T @ u - eye)) <= tol)


def phase_distance(a, b) -> float:
    """Phase-invariant distance 1 - |Tr(A^dag B)| / d between unitaries of dimension d."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    overlap = abs(np.trace(a.conj().T @ b)) / a.shape[0]
    return max(0.0, 1.0 - float(overlap))


def projector(psi) -> Density2:
    """Normalized |psi><psi|."""
    psi = as_array(psi, (2,), "psi")
    norm_sq = float(np.vdot(psi, psi).real)
    if norm_sq == 0.0:
        raise DegenerateInput("cannot form the projector of a zero-norm ket")
    return np.outer(psi, psi.conj()) / norm_sq


def is_density(rho, tol: float = DENSITY_TOL) -> bool:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (2, 2) or not np.all(np.isfinite(rho)):
        return False
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        return False
    if abs(np.trace(rho) - 1.0) > tol:
        return False
    eigenvalues = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return bool(eigenvalues.min() >= -tol)


def require_density(rho, name: str = "rho") -> Density2:
    rho = as_array(rho, (2, 2), name)
    if not is_density(rho):
        raise InvalidArgument(f"{name} is not a valid density matrix")
    return rho


def partial_trace_ancilla(phi) -> Density2:
    """
    Trace out the ancilla of a two-qubit ket.

    Args:
        phi: Length-4 ket in |a w> order, need not be normalized

    Returns:
        Reduced work-qubit density matrix of phi / ||phi||

    Raises:
        DegenerateInput: phi is the zero vector
    """
    phi = as_array(phi, (4,), "phi")
    norm_sq = float(np.vdot(phi, phi).real)
    if norm_sq == 0.0:
        raise DegenerateInput("cannot trace out the ancilla of a zero-norm state")
    psi = phi.reshape(2, 2)
    rho = np.einsum("aw,av->wv", psi, psi.conj()) / norm_sq
    return 0.5 * (rho + rho.conj().T)


def purity(rho) -> float:
    """Tr(rho^2)."""
    rho = np.asarray(rho, dtype=np.complex128)
    return float(np.trace(rho @ rho).real)


def fidelity_paper(rho_a, rho_b) -> float:
    """
    Normalized trace overlap used to compare theory and tomography.

    Args:
        rho_a: 2x2 density matrix
        rho_b: 2x2 density matrix

    Returns:
        Tr(rho_a rho_b) / (sqrt(Tr rho_a^2) sqrt(Tr rho_b^2)), symmetric in its arguments

    Raises:
        DegenerateInput: either purity is zero
    """
    rho_a = as_array(rho_a, (2, 2), "rho_a")
    rho_b = as_array(rho_b, (2, 2), "rho_b")
    purity_a = purity(rho_a)
    purity_b = purity(rho_b)
    if purity_a <= 0.0 or purity_b <= 0.0:
        raise DegenerateInput("fidelity undefined for zero-purity input")
    overlap = float(np.trace(rho_a @ rho_b).real)
    return overlap / (math.sqrt(purity_a) * math.sqrt(purity_b))


def avg_abs_diff(rho_a, rho_b) -> float:
    """
    Average absolute entry difference between two density matrices.

    Returns:
        Mean over the four entries of |rho_a - rho_b|
    """
    rho_a = as_array(rho_a, (2, 2), "rho_a")
    rho_b = as_array(rho_b, (2, 2), "rho_b")
    return float(np.mean(np.abs(rho_a - rho_b)))
