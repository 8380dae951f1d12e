"""
Liouvillian assembly and spectral decomposition.

The master equation is d rho/dt = i[rho, H] + sum_eta rate_eta D[A_eta] rho. Its superoperator L is
diagonalized once per model; right eigenvectors are the columns of ``right_vectors`` and left
eigenvectors are the rows of ``left_vectors = inv(right_vectors)``, so that the pair is exactly
biorthogonal even inside degenerate eigenspaces.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg

from filterstat.errors import DegenerateSpectrum, NonPhysicalSteadyState
from filterstat.operators import HERMITIAN_ATOL, dissipator, hamiltonian_superop, unvec, vec

if TYPE_CHECKING:
    from filterstat.emitters import EmitterModel

logger = logging.getLogger(__name__)

DEFAULT_ZTOL = 1e-9
DEFAULT_COND_MAX = 1e10
NEGATIVITY_TOL = 1e-10


@dataclass(frozen=True)
class LiouvillianSpectrum:
    """Eigenvalues with paired right/left eigenvectors of one Liouvillian."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    norms: np.ndarray
    steady_index: int
    basis_condition: float

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def operator_dim(self) -> int:
        return int(round(np.sqrt(self.dim)))

    @property
    def scale(self) -> float:
        """Largest |Omega|, the natural rate scale of the spectrum."""
        return float(np.max(np.abs(self.eigenvalues))) or 1.0

    def coefficients(self, op) -> np.ndarray:
        """C(Omega_j) = u_j . vec(O) / (u_j . v_j) for every eigen-index."""
        return (self.left_vectors @ vec(op)) / self.norms

    def trace_weights(self, op) -> np.ndarray:
        """Tr(O unvec(v_j)) for every right eigenvector."""
        return vec(np.asarray(op).T) @ self.right_vectors


@dataclass(frozen=True)
class SpectralComponent:
    omega: complex
    component: np.ndarray


def assemble(model: "EmitterModel", atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """L = i[., H] + sum of the model's dissipators; atol is relative to model.rate_scale."""
    liouvillian = hamiltonian_superop(model.hamiltonian, atol * model.rate_scale)
    for channel in model.channels:
        liouvillian = liouvillian + dissipator(channel.operator, channel.rate)
    return liouvillian


def decompose(
    liouvillian,
    ztol: float = DEFAULT_ZTOL,
    cond_max: float = DEFAULT_COND_MAX,
) -> LiouvillianSpectrum:
    """
    Full eigendecomposition of a Liouvillian.

    Eigenvalues are sorted by real part (descending), then imaginary part (descending).

    Args:
        liouvillian: Superoperator matrix
        ztol: Relative tolerance (times max|Omega|) for recognizing the zero eigenvalue
        cond_max: Largest accepted condition number of the right eigenvector matrix

    Returns:
        LiouvillianSpectrum

    Raises:
        DegenerateSpectrum: If the eigenvector basis is (near) defective
        NonPhysicalSteadyState: If no eigenvalue is zero within tolerance
    """
    matrix = np.asarray(liouvillian, dtype=complex)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("Liouvillian contains non-finite entries")

    eigenvalues, right = scipy.linalg.eig(matrix)
    scale = float(np.max(np.abs(eigenvalues))) or 1.0

    order = np.lexsort((-eigenvalues.imag, -np.round(eigenvalues.real / scale, 10)))
    eigenvalues = eigenvalues[order]
    right = right[:, order]

    condition = float(np.linalg.cond(right))
    if not np.isfinite(condition) or condition > cond_max:
        raise DegenerateSpectrum(
            f"Liouvillian eigenbasis is defective (condition number {condition:.3e} > {cond_max:.1e}); "
            f"nudge a rate or detuning slightly to lift the exceptional point"
        )

    left = np.linalg.inv(right)
    norms = np.einsum("ij,ji->i", left, right)

    max_real = float(np.max(eigenvalues.real))
    if max_real > 1e-9 * scale:
        logger.warning(f"Liouvillian has a growing mode: max Re(Omega) = {max_real:.3e}")

    steady_index = _find_steady_index(eigenvalues, right, ztol * scale)
    logger.debug(
        f"Decomposed Liouvillian of dim {eigenvalues.size}: scale {scale:.4g}, "
        f"condition {condition:.3e}, steady index {steady_index}"
    )
    return LiouvillianSpectrum(
        matrix=matrix,
        eigenvalues=eigenvalues,
        right_vectors=right,
        left_vectors=left,
        norms=norms,
        steady_index=steady_index,
        basis_condition=condition,
    )


def _find_steady_index(eigenvalues: np.ndarray, right: np.ndarray, ztol: float) -> int:
    candidates = np.flatnonzero(np.abs(eigenvalues) <= ztol)
    if candidates.size == 0:
        smallest = float(np.min(np.abs(eigenvalues)))
        raise NonPhysicalSteadyState(f"No zero eigenvalue within {ztol:.3e} (smallest |Omega| = {smallest:.3e})")
    if candidates.size == 1:
        return int(candidates[0])

    dim = int(round(np.sqrt(eigenvalues.size)))
    traces = [abs(np.trace(right[:, j].reshape(dim, dim))) for j in candidates]
    chosen = int(candidates[int(np.argmax(traces))])
    logger.warning(f"{candidates.size} eigenvalues within ztol of zero; using index {chosen} as steady state")
    return chosen


def _normalize_density(rho: np.ndarray, negativity_tol: float) -> np.ndarray:
    trace = np.trace(rho)
    if abs(trace) <= 1e-12 * max(np.linalg.norm(rho), 1e-300):
        raise NonPhysicalSteadyState(f"Steady-state vector has vanishing trace ({abs(trace):.3e})")
    rho = rho / trace
    rho = 0.5 * (rho + rho.conj().T)
    min_population = float(np.min(np.linalg.eigvalsh(rho)))
    if min_population < -negativity_tol:
        raise NonPhysicalSteadyState(f"Steady state has a negative eigenvalue {min_population:.3e}")
    return rho


def steady_state(spectrum: LiouvillianSpectrum, negativity_tol: float = NEGATIVITY_TOL) -> np.ndarray:
    """Trace-normalized, hermitized density matrix of the zero mode."""
    rho = unvec(spectrum.right_vectors[:, spectrum.steady_index])
    return _normalize_density(rho, negativity_tol)


def null_vector(matrix) -> np.ndarray:
    """Right singular vector of the smallest singular value."""
    _, singular_values, vh = scipy.linalg.svd(np.asarray(matrix, dtype=complex))
    logger.debug(f"Null-space solve: smallest singular values {singular_values[-2:]}")
    return vh[-1].conj()


def steady_state_direct(liouvillian, negativity_tol: float = NEGATIVITY_TOL) -> np.ndarray:
    """Steady state from a direct null-space solve of L, independent of the eigendecomposition."""
    return _normalize_density(unvec(null_vector(liouvillian)), negativity_tol)


def project(spectrum: LiouvillianSpectrum, op, index: int) -> SpectralComponent:
    """[O](Omega_j) = v_j (u_j . vec(O)) / (u_j . v_j) as a matrix."""
    if not 0 <= index < spectrum.dim:
        raise IndexError(f"Eigen-index {index} out of range for spectrum of size {spectrum.dim}")
    coefficient = (spectrum.left_vectors[index] @ vec(op)) / spectrum.norms[index]
    component = unvec(spectrum.right_vectors[:, index] * coefficient)
    return SpectralComponent(omega=complex(spectrum.eigenvalues[index]), component=component)


def propagate(spectrum: LiouvillianSpectrum, op, t: float) -> np.ndarray:
    """e^{L t} O through the eigen-sum."""
    coefficients = spectrum.coefficients(op) * np.exp(spectrum.eigenvalues * t)
    return unvec(spectrum.right_vectors @ coefficients)
