"""
Sensor-method oracle for Lorentzian-filtered g2.

Two two-level sensors at frequency omega_F couple to the emitter field with strength epsilon and decay
at 2 lambda. For epsilon -> 0, <n1 n2> / (<n1> <n2>) of the sensors equals the g2 of the emission
seen through a Lorentzian filter of bandwidth lambda.
"""

import logging
import warnings
from typing import Optional

import numpy as np

from filterstat.emitters import EmitterModel
from filterstat.errors import ConvergenceWarning, ZeroIntensity
from filterstat.liouvillian import null_vector
from filterstat.operators import dagger, dissipator, hamiltonian_superop, kron

logger = logging.getLogger(__name__)

CONVERGENCE_TOL = 1e-3

_SENSOR_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|, index 1 excited


def _augmented_liouvillian(model: EmitterModel, omega_F: float, bandwidth: float, epsilon: float) -> np.ndarray:
    dim = model.dim
    identity_emitter = np.eye(dim)
    identity_sensor = np.eye(2)
    lowers = (
        kron(kron(identity_emitter, _SENSOR_LOWER), identity_sensor),
        kron(kron(identity_emitter, identity_sensor), _SENSOR_LOWER),
    )
    e_minus = kron(kron(model.emission_minus, identity_sensor), identity_sensor)
    e_plus = dagger(e_minus)

    hamiltonian = kron(kron(model.hamiltonian, identity_sensor), identity_sensor)
    for lower in lowers:
        raise_ = dagger(lower)
        hamiltonian = hamiltonian + omega_F * raise_ @ lower + epsilon * (raise_ @ e_minus + e_plus @ lower)

    liouvillian = hamiltonian_superop(hamiltonian)
    for channel in model.channels:
        operator = kron(kron(channel.operator, identity_sensor), identity_sensor)
        liouvillian = liouvillian + dissipator(operator, channel.rate)
    for lower in lowers:
        liouvillian = liouvillian + dissipator(lower, 2.0 * bandwidth)
    return liouvillian


def _excitation_orders(dim: int) -> np.ndarray:
    """Total sensor excitation of ket plus bra for every vectorized element."""
    per_state = np.tile(np.array([0, 1, 1, 2]), dim)
    return (per_state[:, None] + per_state[None, :]).reshape(-1)


def _sensor_g2(model: EmitterModel, omega_F: float, bandwidth: float, epsilon: float) -> float:
    liouvillian = _augmented_liouvillian(model, omega_F, bandwidth, epsilon)

    # rho = D y with D = diag(epsilon^K) keeps every component of y of order one
    orders = _excitation_orders(model.dim)
    scaled = liouvillian * epsilon ** (orders[None, :] - orders[:, None]).astype(float)
    y = null_vector(scaled).reshape(model.dim, 2, 2, model.dim, 2, 2)

    blocks = np.einsum("iabiab->ab", y)
    y00, y01, y10, y11 = blocks[0, 0], blocks[0, 1], blocks[1, 0], blocks[1, 1]
    eps2 = epsilon**2
    trace = y00 + eps2 * (y10 + y01) + eps2**2 * y11
    first = y10 + eps2 * y11
    second = y01 + eps2 * y11
    if abs(first) == 0 or abs(second) == 0:
        raise ZeroIntensity(f"Sensor populations vanish at omega_F={omega_F}, lambda={bandwidth}")
    return float(np.real(y11 * trace / (first * second)))


def default_epsilon(model: EmitterModel, bandwidth: float) -> float:
    """1e-3 times the smallest nonzero rate of the emitter and sensors."""
    return 1e-3 * min(model.nonzero_rates() + [2.0 * bandwidth])


def g2_sensor_oracle(
    model: EmitterModel,
    omega_F: float,
    bandwidth: float,
    epsilon: Optional[float] = None,
) -> float:
    """
    Lorentzian-filtered g2 from two weakly coupled sensors.

    Emits ConvergenceWarning when halving epsilon changes the result by more than 1e-3 relative.
    """
    if bandwidth <= 0:
        raise ValueError(f"Sensor bandwidth must be positive, got {bandwidth}")
    epsilon = epsilon or default_epsilon(model, bandwidth)

    value = _sensor_g2(model, omega_F, bandwidth, epsilon)
    check = _sensor_g2(model, omega_F, bandwidth, epsilon / 2.0)
    change = abs(check - value) / max(abs(check), 1e-300)
    if change > CONVERGENCE_TOL:
        message = (
            f"Sensor g2 not converged in epsilon: {value:.6g} at epsilon={epsilon:.3e} vs {check:.6g} "
            f"at epsilon/2 (relative change {change:.2e})"
        )
        logger.warning(message)
        warnings.warn(message, ConvergenceWarning)
    logger.debug(f"Sensor g2 at omega_F={omega_F}, lambda={bandwidth}: {check:.8g}")
    return check
