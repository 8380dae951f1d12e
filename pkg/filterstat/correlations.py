"""
Filtered intensity, emission spectrum and zero-delay g2 from the Liouvillian eigen-expansion.

The intensity is 2 Re sum_j s(Omega_j) q_j and the g2 numerator 2 Re sum_k sum_{j1 j2 j3} Z_k Theta_k,
where q and Theta_k are traces of the emission operators threaded through spectral projections.
CorrelationEngine computes q, Theta and the steady state once per emitter model and evaluates any
number of filters against them.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from filterstat.config import FilterKind, FilterSpec, QDParams, Tolerances
from filterstat.emitters import EmitterModel, neutral_qd
from filterstat.errors import NegativeIntensity, ZeroIntensity
from filterstat.kernels import REGIONS, KernelCache, s_kernel, z_kernel, z_lorentzian
from filterstat.liouvillian import LiouvillianSpectrum, assemble, decompose, steady_state, steady_state_direct
from filterstat.operators import dagger, left_superop, right_superop, vec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QCoefficients:
    """q_j = Tr(E+ [E- rho_ss](Omega_j)) for every eigen-index j."""

    values: np.ndarray

    @property
    def total(self) -> complex:
        return complex(np.sum(self.values))


@dataclass(frozen=True)
class ThetaTensor:
    """Region-k trace tensor Theta_k[j1, j2, j3]."""

    region: str
    values: np.ndarray

    @property
    def total(self) -> complex:
        return complex(np.sum(self.values))

    def pruned(self, threshold: float) -> Tuple[np.ndarray, np.ndarray]:
        """Index triples (n, 3) and entries with |Theta| above threshold * max|Theta|."""
        magnitude = np.abs(self.values)
        peak = float(magnitude.max()) if magnitude.size else 0.0
        if peak == 0.0:
            return np.zeros((0, 3), dtype=int), np.zeros(0, dtype=complex)
        indices = np.argwhere(magnitude > threshold * peak)
        return indices, self.values[tuple(indices.T)]


@dataclass(frozen=True)
class G2Result:
    intensity: float
    numerator: float
    g2: float
    imag_residual: float
    kernel_error: float


# ==============================================================================
# Spectral traces
# ==============================================================================


def kernel_omegas(spectrum: LiouvillianSpectrum) -> np.ndarray:
    """Eigenvalues as fed to the kernels: the steady mode exactly 0, real parts clipped to <= 0."""
    omegas = spectrum.eigenvalues.copy()
    omegas[spectrum.steady_index] = 0.0
    return np.minimum(omegas.real, 0.0) + 1j * omegas.imag


def _left_rows(spectrum: LiouvillianSpectrum) -> np.ndarray:
    return spectrum.left_vectors / spectrum.norms[:, None]


def q_coeffs(spectrum: LiouvillianSpectrum, e_minus, e_plus, rho_ss) -> QCoefficients:
    """q_j = Tr(E+ [E- rho_ss](Omega_j))."""
    projected = spectrum.coefficients(np.asarray(e_minus) @ np.asarray(rho_ss))
    return QCoefficients(values=projected * spectrum.trace_weights(e_plus))


def reverse_q_coeffs(spectrum: LiouvillianSpectrum, e_minus, e_plus, rho_ss) -> QCoefficients:
    """
    p_j = Tr(E- [rho_ss E+](Omega_j)), the coefficients of the conjugate ordering.

    Mode j of p pairs with the mode at conj(Omega_j) of q: p_j = conj(q_j') there.
    """
    projected = spectrum.coefficients(np.asarray(rho_ss) @ np.asarray(e_plus))
    return QCoefficients(values=projected * spectrum.trace_weights(e_minus))


def theta_tensor(spectrum: LiouvillianSpectrum, e_minus, e_plus, rho_ss, region: str) -> ThetaTensor:
    """
    Trace tensor of one time-ordering region.

    i:   Tr(E+ [E- [E- [rho E+](j1)](j2)](j3))
    ii:  Tr(E+ [E- [[E- rho](j1) E+](j2)](j3))
    iii: Tr(E+ [[E- [E- rho](j1)](j2) E+](j3))
    """
    if region not in REGIONS:
        raise ValueError(f"Unknown region '{region}'. Expected one of: {', '.join(REGIONS)}")
    e_minus = np.asarray(e_minus, dtype=complex)
    e_plus = np.asarray(e_plus, dtype=complex)
    rho_ss = np.asarray(rho_ss, dtype=complex)

    rows = _left_rows(spectrum)
    columns = spectrum.right_vectors
    emit = rows @ left_superop(e_minus) @ columns
    absorb = rows @ right_superop(e_plus) @ columns
    weights = spectrum.trace_weights(e_plus)

    if region == "i":
        first = rows @ vec(rho_ss @ e_plus)
        inner, outer = emit, emit
    elif region == "ii":
        first = rows @ vec(e_minus @ rho_ss)
        inner, outer = absorb, emit
    else:
        first = rows @ vec(e_minus @ rho_ss)
        inner, outer = emit, absorb

    values = np.einsum("c,cb,ba,a->abc", weights, outer, inner, first, optimize=True)
    return ThetaTensor(region=region, values=values)


def _second_moment(e_minus, rho_ss) -> complex:
    e_minus = np.asarray(e_minus)
    return complex(np.trace(dagger(e_minus) @ e_minus @ rho_ss))


def _fourth_moment(e_minus, rho_ss) -> complex:
    e_minus = np.asarray(e_minus)
    e_plus = dagger(e_minus)
    return complex(np.trace(e_plus @ e_plus @ e_minus @ e_minus @ rho_ss))


def _relative_imag(value: complex) -> float:
    return abs(value.imag) / abs(value) if abs(value) > 0 else 0.0


def sum_rule_residual(values: np.ndarray) -> float:
    """
    |Im sum| / sum|entries| of a trace array whose full sum is a real expectation value.

    Normalizing by the entry mass keeps the measure meaningful when the sum itself vanishes, as
    <E+ E+ E- E-> does for a two-level emitter.
    """
    values = np.asarray(values)
    mass = float(np.sum(np.abs(values)))
    return abs(complex(np.sum(values)).imag) / mass if mass > 0 else 0.0


# ==============================================================================
# Intensity
# ==============================================================================


def _intensity(
    omegas: np.ndarray,
    filter: FilterSpec,
    q: QCoefficients,
    eps_branch: float,
    reverse: Optional[QCoefficients] = None,
) -> Tuple[float, float]:
    """
    Filtered intensity and its relative imaginary residual.

    With reverse coefficients the conjugate term is summed independently over the conjugate modes, so
    the imaginary part of the total is what rounding left behind; without them it is 2 Re and exact.
    """
    kernels = np.array([s_kernel(filter, omega, eps_branch).value for omega in omegas])
    forward = complex(np.sum(kernels * q.values))
    if reverse is None:
        total = complex(2.0 * forward.real, 0.0)
    else:
        conjugate = np.array([s_kernel(filter, np.conj(omega), eps_branch).value for omega in omegas])
        total = forward + complex(np.sum(np.conj(conjugate) * reverse.values))

    value = total.real
    scale = float(np.sum(np.abs(q.values)))
    if value < -1e-10 * scale:
        raise NegativeIntensity(
            f"Filtered intensity {value:.3e} is negative beyond tolerance for {filter.kind.value} "
            f"filter (omega_F={filter.omega_F}, lambda={filter.bandwidth})"
        )
    return max(value, 0.0), _relative_imag(total)


def filtered_intensity(
    spectrum: LiouvillianSpectrum,
    filter: FilterSpec,
    q: QCoefficients,
    eps_branch: float = Tolerances().eps_branch,
) -> float:
    """
    Intensity of the filtered field, sum_j [s(Omega_j) q_j + c.c.].

    Raises:
        NegativeIntensity: If the result is negative beyond 1e-10 * sum|q_j|
    """
    return _intensity(kernel_omegas(spectrum), filter, q, eps_branch)[0]


def emission_spectrum(
    spectrum: LiouvillianSpectrum,
    q: QCoefficients,
    omega_grid: Sequence[float],
    probe_lambda: float,
    eps_branch: float = Tolerances().eps_branch,
) -> List[Tuple[float, float]]:
    """Filtered intensity of a Lorentzian probe of width probe_lambda centered at each grid frequency."""
    if probe_lambda <= 0:
        raise ValueError(f"probe_lambda must be positive, got {probe_lambda}")
    omegas = kernel_omegas(spectrum)
    rows = []
    for omega in omega_grid:
        probe = FilterSpec(kind=FilterKind.LORENTZIAN, omega_F=float(omega), bandwidth=probe_lambda)
        rows.append((float(omega), _intensity(omegas, probe, q, eps_branch)[0]))
    return rows


# ==============================================================================
# Engine
# ==============================================================================


class CorrelationEngine:
    """
    Per-model precomputation shared by every filter evaluated against one emitter.

    Everything is built in the constructor and read-only afterwards, so g2_zero may run concurrently
    for different filters; the kernel cache is lock-guarded.
    """

    def __init__(self, model: EmitterModel, tolerances: Optional[Tolerances] = None):
        self.model = model
        self.tolerances = tolerances or Tolerances()
        tol = self.tolerances

        self.spectrum = decompose(assemble(model, tol.atol_herm), ztol=tol.ztol, cond_max=tol.cond_max)
        self.rho_ss = steady_state(self.spectrum)
        self.omegas = kernel_omegas(self.spectrum)

        e_minus = model.emission_minus
        e_plus = model.emission_plus
        self.q = q_coeffs(self.spectrum, e_minus, e_plus, self.rho_ss)
        self.reverse_q = reverse_q_coeffs(self.spectrum, e_minus, e_plus, self.rho_ss)
        self.thetas: Dict[str, ThetaTensor] = {
            region: theta_tensor(self.spectrum, e_minus, e_plus, self.rho_ss, region) for region in REGIONS
        }
        self._pruned = {region: theta.pruned(tol.theta_prune) for region, theta in self.thetas.items()}
        self.cache = KernelCache()

        self.second_moment = _second_moment(e_minus, self.rho_ss)
        self.fourth_moment = _fourth_moment(e_minus, self.rho_ss)
        self.imag_residual = max(
            sum_rule_residual(self.q.values),
            max(sum_rule_residual(theta.values) for theta in self.thetas.values()),
        )
        kept = sum(indices.shape[0] for indices, _ in self._pruned.values())
        logger.info(
            f"Engine for {model.name}: {self.spectrum.dim} eigenvalues, <E+E-> = {self.second_moment.real:.6g}, "
            f"{kept} trace-tensor entries kept"
        )

    def pruned_entries(self, region: str) -> Tuple[np.ndarray, np.ndarray]:
        return self._pruned[region]

    def filtered_intensity(self, filter: FilterSpec) -> float:
        return self._intensity(filter)[0]

    def _intensity(self, filter: FilterSpec) -> Tuple[float, float]:
        return _intensity(self.omegas, filter, self.q, self.tolerances.eps_branch, self.reverse_q)

    def emission_spectrum(self, omega_grid: Sequence[float], probe_lambda: float) -> List[Tuple[float, float]]:
        return emission_spectrum(self.spectrum, self.q, omega_grid, probe_lambda, self.tolerances.eps_branch)

    def kernel(self, filter: FilterSpec, region: str, indices: Sequence[int]):
        """Memoized closed-form Z_k for one eigen-index triple."""
        j1, j2, j3 = (int(j) for j in indices)
        key = (filter.kind.value, filter.omega_F, filter.bandwidth, region, j1, j2, j3)
        triple = (self.omegas[j1], self.omegas[j2], self.omegas[j3])
        return self.cache.get_or_compute(
            key,
            lambda: z_kernel(filter, region, triple, self.tolerances.quadrature, self.tolerances.eps_branch),
        )

    def _region_sum(self, filter: FilterSpec, region: str) -> Tuple[complex, float]:
        indices, entries = self._pruned[region]
        if entries.size == 0:
            return 0j, 0.0
        if filter.kind == FilterKind.LORENTZIAN:
            triples = (self.omegas[indices[:, 0]], self.omegas[indices[:, 1]], self.omegas[indices[:, 2]])
            return complex(np.sum(z_lorentzian(filter, region, triples) * entries)), 0.0

        total = 0j
        error = 0.0
        # j3 outermost so consecutive lookups share the outer eigenvalue
        for position in np.lexsort((indices[:, 0], indices[:, 1], indices[:, 2])):
            kernel = self.kernel(filter, region, indices[position])
            total += kernel.value * entries[position]
            error += kernel.error_estimate * abs(entries[position])
        return total, error

    def g2_zero(self, filter: FilterSpec) -> G2Result:
        """
        Zero-delay g2 of the filtered field.

        Raises:
            ZeroIntensity: If the filtered intensity vanishes
            NegativeIntensity: If intensity or numerator are negative beyond numerical noise
        """
        intensity, intensity_residual = self._intensity(filter)
        if self.q.total == 0 or intensity <= 1e-14 * float(np.sum(np.abs(self.q.values))):
            raise ZeroIntensity(
                f"Filtered intensity vanishes for {filter.kind.value} filter "
                f"(omega_F={filter.omega_F}, lambda={filter.bandwidth})"
            )

        total = 0j
        error = 0.0
        theta_scale = 0.0
        for region in REGIONS:
            region_total, region_error = self._region_sum(filter, region)
            total += region_total
            error += region_error
            theta_scale += float(np.sum(np.abs(self.pruned_entries(region)[1])))

        numerator = 2.0 * total.real
        if numerator < -1e-9 * theta_scale:
            raise NegativeIntensity(f"g2 numerator {numerator:.3e} is negative beyond tolerance")
        numerator = max(numerator, 0.0)
        kernel_error = 2.0 * error / numerator if numerator > 0 else 0.0

        imag_residual = max(intensity_residual, self.imag_residual)
        if imag_residual > self.tolerances.imag_residual_max:
            logger.warning(
                f"Imaginary residual {imag_residual:.3e} exceeds {self.tolerances.imag_residual_max:.1e} for "
                f"{filter.kind.value} filter (omega_F={filter.omega_F}, lambda={filter.bandwidth})"
            )
        return G2Result(
            intensity=intensity,
            numerator=numerator,
            g2=numerator / intensity**2,
            imag_residual=imag_residual,
            kernel_error=kernel_error,
        )

    def g2_unfiltered(self) -> float:
        return _unfiltered_ratio(self.second_moment, self.fourth_moment)


def _unfiltered_ratio(second: complex, fourth: complex) -> float:
    if abs(second) <= 1e-14:
        raise ZeroIntensity(f"Unfiltered intensity vanishes (<E+E-> = {abs(second):.3e})")
    return max(fourth.real, 0.0) / second.real**2


def g2_zero(model: EmitterModel, filter: FilterSpec, tolerances: Optional[Tolerances] = None) -> G2Result:
    """Filtered zero-delay g2 of one model and one filter."""
    return CorrelationEngine(model, tolerances).g2_zero(filter)


def g2_unfiltered(model: EmitterModel, tolerances: Optional[Tolerances] = None) -> float:
    """<E+E+E-E-> / <E+E->^2 directly from the steady state."""
    tol = tolerances or Tolerances()
    rho_ss = steady_state_direct(assemble(model, tol.atol_herm))
    e_minus = model.emission_minus
    return _unfiltered_ratio(_second_moment(e_minus, rho_ss), _fourth_moment(e_minus, rho_ss))


def pump_engines(
    params: QDParams,
    pump_factors: Sequence[float],
    tolerances: Optional[Tolerances] = None,
) -> List[Tuple[float, CorrelationEngine]]:
    """One engine per pump P = factor * gamma_sp, sorted by P."""
    if len(pump_factors) < 2:
        raise ValueError(f"Pump extrapolation needs at least two factors, got {list(pump_factors)}")
    pumps = sorted(factor * params.gamma_sp for factor in pump_factors)
    return [
        (pump, CorrelationEngine(neutral_qd(params.model_copy(update={"pump_P": pump})), tolerances)) for pump in pumps
    ]


def extrapolate_to_zero_pump(pumps: Sequence[float], results: Sequence[G2Result]) -> G2Result:
    """Least-squares line of g2 against P, evaluated at P = 0; the intensity is the one at the smallest P."""
    _, intercept = np.polyfit(list(pumps), [r.g2 for r in results], 1)
    g2 = max(float(intercept), 0.0)
    weakest = results[int(np.argmin(pumps))]
    logger.debug(f"Pump extrapolation over P = {list(pumps)}: g2 -> {g2:.6g}")
    return G2Result(
        intensity=weakest.intensity,
        numerator=g2 * weakest.intensity**2,
        g2=g2,
        imag_residual=max(r.imag_residual for r in results),
        kernel_error=max(r.kernel_error for r in results),
    )


def g2_pump_extrapolated(
    params: QDParams,
    filter: FilterSpec,
    pump_factors: Sequence[float],
    tolerances: Optional[Tolerances] = None,
) -> G2Result:
    """QD g2 in the linear-pump limit, extrapolated to P -> 0 from P = factor * gamma_sp."""
    engines = pump_engines(params, pump_factors, tolerances)
    return extrapolate_to_zero_pump([pump for pump, _ in engines], [engine.g2_zero(filter) for _, engine in engines])
