"""
Filter response kernels.

s(Omega) enters the filtered intensity and Z_k(Omega1, Omega2, Omega3) the zero-delay second-order
correlation, one kernel per time-ordering region k in {"i", "ii", "iii"}. Closed forms exist for
Lorentzian, Gaussian and rectangular filters; z_kernel_numeric integrates the time-ordered filter
products directly and serves as the oracle for all of them.

Every kernel is dimensionless and depends on the eigenvalues only through the shifted triple
(Omega~1, Omega~2, Omega~3) of its region, scaled by the bandwidth lambda.
"""

import logging
import math
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from filterstat.config import FilterKind, FilterSpec, Quadrature
from filterstat.errors import QuadratureFailure
from filterstat.special_functions import PathPhi, capital_phi, complex_quad, erfcx_c, quad_semi_infinite

logger = logging.getLogger(__name__)

REGIONS = ("i", "ii", "iii")
DEFAULT_EPS_BRANCH = 1e-12

# |f| < 1e-10 max|f| cutoffs in units of 1/lambda
_LORENTZIAN_SPAN = math.log(1e10)
_GAUSSIAN_SPAN = math.sqrt(math.log(1e10))
# sinc truncation at a half-odd multiple of pi near 1e4, where cos(span) = 0
_RECTANGULAR_SPAN = math.pi * (math.floor(1e4 / math.pi) + 0.5)


@dataclass(frozen=True)
class KernelValue:
    """Kernel value with its absolute error estimate (0 for closed forms)."""

    value: complex
    error_estimate: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise QuadratureFailure(f"Kernel evaluation produced a non-finite value {self.value}")
        if self.error_estimate < 0:
            raise ValueError(f"error_estimate must be non-negative, got {self.error_estimate}")


@dataclass(frozen=True)
class KernelCoefficients:
    """
    Reduced coefficients of one region.

    Gaussian filters: (A, B, C). Rectangular filters: (alpha, beta, gamma) with the +i0 offsets applied.
    """

    kind: FilterKind
    region: str
    first: complex
    second: complex
    third: complex

    def as_dict(self) -> Dict[str, complex]:
        names = ("A", "B", "C") if self.kind == FilterKind.GAUSSIAN else ("alpha", "beta", "gamma")
        return dict(zip(names, (self.first, self.second, self.third)))


def _check_region(region: str) -> None:
    if region not in REGIONS:
        raise ValueError(f"Unknown region '{region}'. Expected one of: {', '.join(REGIONS)}")


def shifted_omegas(region: str, omegas: Sequence, omega_F: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenvalue triple of a region with the filter phases absorbed (scalars or arrays)."""
    _check_region(region)
    o1, o2, o3 = (np.asarray(o, dtype=complex) for o in omegas)
    shift = 1j * omega_F
    if region == "i":
        return o1 + shift, o2, o3 - shift
    if region == "ii":
        return o1 - shift, o2, o3 - shift
    return o1 - shift, o2 - 2.0 * shift, o3 - shift


# ==============================================================================
# Time and frequency responses
# ==============================================================================


def filter_time_response(filter: FilterSpec, tau):
    """
    Amplitude response f(tau) of a filter.

    Lorentzian: lambda theta(tau) exp((-lambda - i omega_F) tau), with f(0) = lambda.
    Gaussian: (lambda / sqrt(pi)) exp(-(lambda tau)^2 - i omega_F tau).
    Rectangular: exp(-i omega_F tau) sin(lambda tau) / (pi tau), with f(0) = lambda / pi.
    """
    t = np.asarray(tau, dtype=float)
    lam = filter.bandwidth
    phase = np.exp(-1j * filter.omega_F * t)
    if filter.kind == FilterKind.LORENTZIAN:
        response = np.where(t >= 0, lam * np.exp(-lam * np.clip(t, 0.0, None)), 0.0) * phase
    elif filter.kind == FilterKind.GAUSSIAN:
        response = lam / math.sqrt(math.pi) * np.exp(-((lam * t) ** 2)) * phase
    else:
        response = lam / math.pi * np.sinc(lam * t / math.pi) * phase
    response = np.asarray(response)
    return complex(response) if response.ndim == 0 else response


def filter_frequency_response(filter: FilterSpec, omega):
    """
    F(omega) = (2 pi)^-1 int f(tau) exp(i omega tau) dtau; |2 pi F|^2 is the power transmission.
    """
    w = np.asarray(omega, dtype=float)
    lam = filter.bandwidth
    detuning = w - filter.omega_F
    if filter.kind == FilterKind.LORENTZIAN:
        response = lam / (lam - 1j * detuning)
    elif filter.kind == FilterKind.GAUSSIAN:
        response = np.exp(-((detuning / (2.0 * lam)) ** 2)).astype(complex)
    else:
        response = np.heaviside(lam - np.abs(detuning), 0.5).astype(complex)
    # a scalar Lorentzian quotient degrades to a plain Python complex
    response = np.asarray(response / (2.0 * math.pi))
    return complex(response) if response.ndim == 0 else response


# ==============================================================================
# Intensity kernel s(Omega)
# ==============================================================================


def s_kernel(filter: FilterSpec, omega: complex, eps_branch: float = DEFAULT_EPS_BRANCH) -> KernelValue:
    """Closed-form intensity kernel s(Omega)."""
    lam = filter.bandwidth
    shifted = (complex(omega) - 1j * filter.omega_F) / lam

    if filter.kind == FilterKind.LORENTZIAN:
        value = 0.5 / (1.0 - shifted)
    elif filter.kind == FilterKind.GAUSSIAN:
        value = 0.5 * erfcx_c(-shifted / math.sqrt(2.0))
    else:
        edge = 1j * shifted - 1j * eps_branch
        value = (np.log(1.0 + edge) - np.log(-1.0 + edge)) / (2j * math.pi)
    return KernelValue(complex(value))


# ==============================================================================
# Second-order kernels Z_k
# ==============================================================================


def kernel_coefficients(
    filter: FilterSpec,
    region: str,
    omegas: Sequence[complex],
    eps_branch: float = DEFAULT_EPS_BRANCH,
) -> KernelCoefficients:
    """
    Region coefficients of the Gaussian or rectangular Z kernel.

    Raises:
        ValueError: For Lorentzian filters, whose kernel needs no reduction
    """
    lam = filter.bandwidth
    w1, w2, w3 = (complex(w) for w in shifted_omegas(region, omegas, filter.omega_F))

    if filter.kind == FilterKind.GAUSSIAN:
        return KernelCoefficients(
            kind=filter.kind,
            region=region,
            first=(w1 - w2 + w3) / (2.0 * lam),
            second=(w3 - w1) / (2.0 * lam),
            third=-w2 / (2.0 * lam),
        )
    if filter.kind == FilterKind.RECTANGULAR:
        a1, a2, a3 = (-1j * w / lam + 1j * eps_branch for w in (w1, w2, w3))
        return KernelCoefficients(kind=filter.kind, region=region, first=a3, second=a2, third=a1 + 1.0)
    raise ValueError("Lorentzian kernels have no reduced coefficients")


def z_lorentzian(filter: FilterSpec, region: str, omegas: Sequence) -> np.ndarray:
    """Lorentzian Z_k, vectorized over arrays of eigenvalue triples."""
    w1, w2, w3 = (o / filter.bandwidth for o in shifted_omegas(region, omegas, filter.omega_F))
    return 1.0 / ((1.0 - w1) * (2.0 - w2) * (3.0 - w3))


def _z_gaussian(coeffs: KernelCoefficients, q: Quadrature) -> Tuple[complex, float]:
    """
    Z = pi^-1/2 int_0^inf exp(-z^2 + 2Az) exp(B^2) [erf(z+B) - erf(B-z)] exp(C^2) erfc(z+C) dz.

    Every exponential is merged with its erfc into erfcx before exponentiation, so all exponents
    that are actually evaluated have non-positive real part.
    """
    a, b, c = coeffs.first, coeffs.second, coeffs.third
    if b.real < 0:
        # the bracket is even in B
        b = -b
    a_minus_c = a - c
    rising = 2.0 * (a_minus_c + b)
    falling = 2.0 * (a_minus_c - b)
    b_real = b.real

    def integrand(z: float) -> complex:
        tail = erfcx_c(z + c)
        lower = np.exp(-3.0 * z * z + falling * z) * erfcx_c(b + z)
        if z <= b_real:
            upper = np.exp(-3.0 * z * z + rising * z) * erfcx_c(b - z)
            bracket = upper - lower
        else:
            plateau = 2.0 * np.exp(-2.0 * z * z + 2.0 * a_minus_c * z + b * b)
            upper = np.exp(-3.0 * z * z + rising * z) * erfcx_c(z - b)
            bracket = plateau - upper - lower
        return bracket * tail / math.sqrt(math.pi)

    width = 1.5 / (math.sqrt(2.0) + abs(a_minus_c.real))
    return quad_semi_infinite(integrand, 0.0, width, q)


def _z_rectangular(coeffs: KernelCoefficients, q: Quadrature) -> Tuple[complex, float]:
    """
    Z = (i / 2 pi^3) J with
    J = Lambda [phi(alpha+, beta+; 2) + phi(alpha-, beta-; -2)] - Phi(alpha+, beta+, gamma; 2)
        + Phi(alpha-, beta-, gamma - 2; -2),
    alpha+- = alpha +- 1, beta+- = beta +- 2, Lambda = ln(2 - gamma) - ln(-gamma).
    phi is continued along each integration path so both phi and Phi use the same branch.
    """
    alpha, beta, gamma = coeffs.first, coeffs.second, coeffs.third
    alpha_plus, beta_plus = alpha + 1.0, beta + 2.0
    alpha_minus, beta_minus = alpha - 1.0, beta - 2.0
    log_gap = np.log(2.0 - gamma) - np.log(-gamma)

    phi_plus = PathPhi(alpha_plus, beta_plus, 2.0)(2.0)
    phi_minus = PathPhi(alpha_minus, beta_minus, -2.0)(-2.0)
    cap_plus, err_plus = capital_phi(alpha_plus, beta_plus, gamma, 2.0, q)
    cap_minus, err_minus = capital_phi(alpha_minus, beta_minus, gamma - 2.0, -2.0, q)

    total = log_gap * (phi_plus + phi_minus) - cap_plus + cap_minus
    scale = 1.0 / (2.0 * math.pi**3)
    return complex(1j * scale * total), scale * (err_plus + err_minus)


def z_kernel(
    filter: FilterSpec,
    region: str,
    omegas: Sequence[complex],
    q: Optional[Quadrature] = None,
    eps_branch: float = DEFAULT_EPS_BRANCH,
) -> KernelValue:
    """
    Closed-form Z_k for one eigenvalue triple.

    Raises:
        QuadratureFailure: If the Gaussian or rectangular quadrature does not converge
        ArgumentOnCut: If a rectangular branch argument lands on its cut
    """
    q = q or Quadrature()
    if filter.kind == FilterKind.LORENTZIAN:
        return KernelValue(complex(z_lorentzian(filter, region, omegas)))

    coeffs = kernel_coefficients(filter, region, omegas, eps_branch)
    if filter.kind == FilterKind.GAUSSIAN:
        value, error = _z_gaussian(coeffs, q)
    else:
        value, error = _z_rectangular(coeffs, q)
    return KernelValue(value, error)


def z_kernel_rect_line(
    filter: FilterSpec,
    region: str,
    omegas: Sequence[complex],
    q: Optional[Quadrature] = None,
    eps_branch: float = DEFAULT_EPS_BRANCH,
) -> KernelValue:
    """
    Rectangular Z_k as one real-line integral over the middle frequency variable.

    J = int_{-2}^{2} L(a1; p) L(a3; p) / (p - a2) dp, where L(a; p) is the log integral of 1/(p' - a)
    over the window [max(-1, p-1), min(1, p+1)].
    """
    if filter.kind != FilterKind.RECTANGULAR:
        raise ValueError(f"z_kernel_rect_line applies to rectangular filters, got {filter.kind.value}")
    q = q or Quadrature()
    lam = filter.bandwidth
    a1, a2, a3 = (complex(-1j * w / lam + 1j * eps_branch) for w in shifted_omegas(region, omegas, filter.omega_F))

    def window_log(a: complex, p: float) -> complex:
        lo = max(-1.0, p - 1.0)
        hi = min(1.0, p + 1.0)
        return np.log(hi - a) - np.log(lo - a)

    def outer(p: float) -> complex:
        return window_log(a1, p) * window_log(a3, p)

    anchor = min(max(a2.real, -2.0), 2.0)
    outer_anchor = outer(anchor)

    def integrand(p: float) -> complex:
        return (outer(p) - outer_anchor) / (p - a2)

    breakpoints = [0.0, anchor] + [a.real + shift for a in (a1, a3) for shift in (-1.0, 1.0)]
    value, error = complex_quad(integrand, -2.0, 2.0, q, points=breakpoints)
    value += outer_anchor * (np.log(2.0 - a2) - np.log(-2.0 - a2))

    scale = 1.0 / (2.0 * math.pi**3)
    return KernelValue(complex(1j * scale * value), scale * error)


# ==============================================================================
# Time-domain oracle
# ==============================================================================


def _envelope(kind: FilterKind, window: Optional[float]):
    """
    Scaled envelope h(x), x = lambda tau, its integration span, the tail masses outside the span and a
    bound on what truncating one envelope factor costs beyond its tail mass.
    """
    if kind == FilterKind.LORENTZIAN:
        span = window or _LORENTZIAN_SPAN
        return (lambda x: math.exp(-x)), (0.0, span), 0.0, math.exp(-span), 0.0
    if kind == FilterKind.GAUSSIAN:
        span = window or _GAUSSIAN_SPAN
        tail = 0.5 * math.erfc(span)
        return (lambda x: math.exp(-x * x) / math.sqrt(math.pi)), (-span, span), tail, tail, 0.0

    span = window or _RECTANGULAR_SPAN
    # signed: Si(span) oscillates about pi/2
    tail = (0.5 * math.pi - float(special.sici(span)[0])) / math.pi

    def sinc(x: float) -> float:
        return math.sin(x) / (math.pi * x) if x != 0.0 else 1.0 / math.pi

    # the sinc tail is only conditionally convergent; against a bounded factor it is O(1 / span)
    return sinc, (-span, span), tail, tail, 1.0 / (math.pi * span)


def _cascade(
    kind: FilterKind,
    exponents: Sequence[complex],
    prefactor: float,
    q: Quadrature,
    window: Optional[float],
) -> KernelValue:
    """
    prefactor * integral of h(x_0) ... h(x_n) exp(sum_m w_m (x_m - x_{m-1})) over x_0 < ... < x_n.

    Solved as the ODE cascade y_1' = w_1 y_1 + h, y_m' = w_m y_m + h y_{m-1}, y_out' = h y_n.
    """
    h, (lower, upper), left_tail, right_tail, truncation = _envelope(kind, window)
    rates = np.asarray(exponents, dtype=complex)
    count = rates.size

    def rhs(x: float, y: np.ndarray) -> np.ndarray:
        hx = h(x)
        dy = np.empty_like(y)
        dy[0] = rates[0] * y[0] + hx
        for m in range(1, count):
            dy[m] = rates[m] * y[m] + hx * y[m - 1]
        dy[count] = hx * y[count - 1]
        return dy

    y0 = np.zeros(count + 1, dtype=complex)
    y0[0] = left_tail
    rtol = max(q.rel_tol, 1e-12)
    solution = integrate.solve_ivp(rhs, (lower, upper), y0, method="DOP853", rtol=rtol, atol=q.abs_tol)
    if not solution.success:
        raise QuadratureFailure(f"Time-domain kernel integration failed: {solution.message}")

    end = solution.y[:, -1]
    tail_correction = end[count - 1] * right_tail
    value = prefactor * (end[count] + tail_correction)
    truncated = abs(tail_correction) + abs(left_tail) + (count + 1) * truncation
    error = prefactor * truncated + rtol * abs(value)
    logger.debug(f"Time-domain {kind.value} kernel: {solution.nfev} evaluations, value {value:.6g}")
    return KernelValue(complex(value), float(error))


def s_kernel_numeric(
    filter: FilterSpec,
    omega: complex,
    q: Optional[Quadrature] = None,
    window: Optional[float] = None,
) -> KernelValue:
    """s(Omega) from the time-ordered double integral of the filter responses."""
    shifted = (complex(omega) - 1j * filter.omega_F) / filter.bandwidth
    return _cascade(filter.kind, [shifted], 1.0, q or Quadrature(), window)


def z_kernel_numeric(
    filter: FilterSpec,
    region: str,
    omegas: Sequence[complex],
    q: Optional[Quadrature] = None,
    window: Optional[float] = None,
) -> KernelValue:
    """
    Z_k from the time-ordered fourfold integral of the filter responses, valid for any filter.

    Args:
        window: Truncation half-width in units of 1/lambda; defaults to the |f| < 1e-10 max|f| cutoff
            (Lorentzian, Gaussian) or 1e4 (rectangular, with a tail estimate)
    """
    w1, w2, w3 = (complex(o) / filter.bandwidth for o in shifted_omegas(region, omegas, filter.omega_F))
    return _cascade(filter.kind, [w3, w2, w1], 4.0, q or Quadrature(), window)


# ==============================================================================
# Memoization
# ==============================================================================


class KernelCache:
    """Lock-guarded memo of kernel values keyed by (kind, omega_F, lambda, region, j1, j2, j3)."""

    def __init__(self):
        self._values: Dict[Hashable, KernelValue] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._values)

    def get_or_compute(self, key: Hashable, compute: Callable[[], KernelValue]) -> KernelValue:
        with self._lock:
            cached = self._values.get(key)
            if cached is not None:
                self.hits += 1
                return cached
        value = compute()
        with self._lock:
            self.misses += 1
            return self._values.setdefault(key, value)

    def clear(self) -> None:
        with self._lock:
            self._values.clear()
            self.hits = 0
            self.misses = 0
