"""
Dense operator algebra and superoperator construction.

Operators are square complex numpy arrays. Vectorization is row-major throughout:
vec(O) = (O[0,0], O[0,1], ..., O[N-1,N-1]), so that vec(A @ rho @ B) = kron(A, B.T) @ vec(rho).
"""

import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

HERMITIAN_ATOL = 1e-10


def as_operator(op) -> np.ndarray:
    """Return op as a square complex128 matrix."""
    mat = np.asarray(op, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
        raise ValueError(f"Operator must be a non-empty square matrix, got shape {mat.shape}")
    return mat


def dagger(op) -> np.ndarray:
    return as_operator(op).conj().T


def is_hermitian(op, atol: float = HERMITIAN_ATOL) -> bool:
    """max|M - M^dagger| <= atol."""
    mat = as_operator(op)
    return bool(np.max(np.abs(mat - mat.conj().T)) <= atol)


def vec(op) -> np.ndarray:
    """Row-major stacking of a matrix into a vector."""
    return as_operator(op).reshape(-1).copy()


def unvec(vector) -> np.ndarray:
    """Inverse of vec."""
    v = np.asarray(vector, dtype=complex).reshape(-1)
    dim = math.isqrt(v.size)
    if dim * dim != v.size:
        raise ValueError(f"Vector of length {v.size} is not the vectorization of a square matrix")
    return v.reshape(dim, dim).copy()


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def left_right_superop(a, b) -> np.ndarray:
    """Matrix S with S @ vec(rho) == vec(a @ rho @ b)."""
    a = as_operator(a)
    b = as_operator(b)
    if a.shape != b.shape:
        raise ValueError(f"Dimension mismatch: left operator {a.shape} vs right operator {b.shape}")
    return np.kron(a, b.T)


def left_superop(a) -> np.ndarray:
    """rho -> a @ rho"""
    a = as_operator(a)
    return left_right_superop(a, np.eye(a.shape[0]))


def right_superop(b) -> np.ndarray:
    """rho -> rho @ b"""
    b = as_operator(b)
    return left_right_superop(np.eye(b.shape[0]), b)


def dissipator(a, rate: float) -> np.ndarray:
    """
    Lindblad dissipator rate * (A rho A^dagger - 1/2 A^dagger A rho - 1/2 rho A^dagger A).

    Args:
        a: Jump operator
        rate: Non-negative rate in the model's energy unit

    Returns:
        Superoperator matrix of shape (N^2, N^2)
    """
    if rate < 0:
        raise ValueError(f"Dissipation rate must be non-negative, got {rate}")
    a = as_operator(a)
    identity = np.eye(a.shape[0])
    a_dag_a = a.conj().T @ a
    jump = np.kron(a, a.conj())
    anticommutator = np.kron(a_dag_a, identity) + np.kron(identity, a_dag_a.T)
    return rate * (jump - 0.5 * anticommutator)


def hamiltonian_superop(h, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Superoperator of rho -> i[rho, H]."""
    h = as_operator(h)
    if not is_hermitian(h, atol):
        deviation = float(np.max(np.abs(h - h.conj().T)))
        raise ValueError(f"Hamiltonian is not hermitian within atol={atol} (max deviation {deviation:.3e})")
    identity = np.eye(h.shape[0])
    return 1j * (np.kron(identity, h.T) - np.kron(h, identity))


def apply_superop(superop, op) -> np.ndarray:
    """unvec(S @ vec(op))"""
    return unvec(np.asarray(superop) @ vec(op))


def projector(dim: int, row: int, col: int) -> np.ndarray:
    """Matrix unit |row><col| in a dim-dimensional space."""
    out = np.zeros((dim, dim), dtype=complex)
    out[row, col] = 1.0
    return out
