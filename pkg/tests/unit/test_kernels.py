"""
Unit tests for the filter kernels.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from filterstat.config import FilterKind, FilterSpec, QDParams, Quadrature
from filterstat.correlations import kernel_omegas
from filterstat.emitters import neutral_qd
from filterstat.errors import QuadratureFailure
from filterstat.kernels import (
    REGIONS,
    KernelCache,
    KernelValue,
    filter_frequency_response,
    filter_time_response,
    kernel_coefficients,
    s_kernel,
    s_kernel_numeric,
    shifted_omegas,
    z_kernel,
    z_kernel_numeric,
    z_kernel_rect_line,
    z_lorentzian,
)
from filterstat.liouvillian import assemble, decompose

KINDS = list(FilterKind)


def spec(kind: FilterKind, omega_F: float = 0.0, bandwidth: float = 1.0) -> FilterSpec:
    return FilterSpec(kind=kind, omega_F=omega_F, bandwidth=bandwidth)


def relative_error(value: complex, reference: complex) -> float:
    return abs(value - reference) / abs(reference)


def model_triples(model, count: int, rng):
    """Random eigenvalue triples drawn from a model's spectrum."""
    omegas = kernel_omegas(decompose(assemble(model)))
    return [tuple(omegas[rng.integers(0, omegas.size, size=3)]) for _ in range(count)]


@pytest.mark.unit
class TestResponses:
    """Tests for time and frequency responses."""

    def test_lorentzian_is_causal(self):
        """Test f_L vanishes for negative delays and equals lambda at zero."""
        f = spec(FilterKind.LORENTZIAN, bandwidth=0.7)
        assert filter_time_response(f, -0.5) == 0
        assert filter_time_response(f, 0.0) == pytest.approx(0.7)

    def test_rectangular_at_zero(self):
        """Test f_r(0) = lambda / pi."""
        assert filter_time_response(spec(FilterKind.RECTANGULAR, bandwidth=2.0), 0.0) == pytest.approx(2.0 / math.pi)

    def test_frequency_response_examples(self):
        """Test F_r(omega_F), F_G(omega_F + 2 lambda) and |2 pi F_L(omega_F + lambda)|^2."""
        lam, center = 0.4, 1.3
        assert filter_frequency_response(spec(FilterKind.RECTANGULAR, center, lam), center) == pytest.approx(
            1 / (2 * math.pi)
        )
        assert filter_frequency_response(spec(FilterKind.GAUSSIAN, center, lam), center + 2 * lam) == pytest.approx(
            math.exp(-1) / (2 * math.pi)
        )
        for sign in (-1, 1):
            response = filter_frequency_response(spec(FilterKind.LORENTZIAN, center, lam), center + sign * lam)
            assert abs(2 * math.pi * response) ** 2 == pytest.approx(0.5)

    @pytest.mark.parametrize("kind", [FilterKind.LORENTZIAN, FilterKind.GAUSSIAN])
    def test_time_normalization(self, kind):
        """Test the demodulated response integrates to one."""
        f = spec(kind, omega_F=3.0, bandwidth=0.8)
        lower = 0.0 if kind == FilterKind.LORENTZIAN else -40.0

        def integrand(tau):
            return (filter_time_response(f, tau) * np.exp(1j * f.omega_F * tau)).real

        value, _ = integrate.quad(integrand, lower, 40.0, limit=200)
        assert value == pytest.approx(1.0, abs=1e-8)

    def test_gaussian_fourier_transform(self):
        """Test the numerical Fourier transform of f_G reproduces F_G."""
        f = spec(FilterKind.GAUSSIAN, omega_F=1.0, bandwidth=0.5)
        for omega in (0.2, 1.0, 1.6):

            def part(tau, component):
                value = filter_time_response(f, tau) * np.exp(1j * omega * tau) / (2 * math.pi)
                return value.real if component == "re" else value.imag

            re, _ = integrate.quad(part, -30, 30, args=("re",), limit=400)
            im, _ = integrate.quad(part, -30, 30, args=("im",), limit=400)
            assert abs(complex(re, im) - filter_frequency_response(f, omega)) <= 1e-6

    def test_vectorized_responses(self):
        """Test array input returns arrays."""
        f = spec(FilterKind.GAUSSIAN)
        assert filter_time_response(f, np.linspace(-1, 1, 5)).shape == (5,)
        assert filter_frequency_response(f, np.linspace(-1, 1, 7)).shape == (7,)

    @pytest.mark.parametrize("kind", KINDS)
    def test_scalar_responses(self, kind):
        """Test scalar input returns a plain complex for every filter shape."""
        f = spec(kind, omega_F=0.5, bandwidth=0.3)
        response = filter_frequency_response(f, 0.5)
        assert isinstance(response, complex)
        assert response == pytest.approx(1 / (2 * math.pi))
        assert isinstance(filter_time_response(f, 0.0), complex)


@pytest.mark.unit
class TestIntensityKernel:
    """Tests for s(Omega)."""

    @pytest.mark.parametrize("kind", KINDS)
    def test_zero_frequency(self, kind):
        """Test s(0) = 1/2 for every filter."""
        assert s_kernel(spec(kind), 0.0).value == pytest.approx(0.5, abs=1e-10)

    def test_lorentzian_closed_form(self):
        """Test s_L = (1/2) lambda / (lambda - Omega + i omega_F)."""
        f = spec(FilterKind.LORENTZIAN, omega_F=0.3, bandwidth=0.5)
        omega = -0.2 + 0.7j
        assert s_kernel(f, omega).value == pytest.approx(0.5 * 0.5 / (0.5 - omega + 0.3j))

    @pytest.mark.parametrize("kind", KINDS)
    def test_against_time_domain(self, kind):
        """Test the closed form against the time-ordered integral."""
        f = spec(kind, omega_F=0.4, bandwidth=0.6)
        for omega in (-0.3 + 0.5j, -0.05 - 1.2j, -1.0 + 0.0j):
            closed = s_kernel(f, omega).value
            numeric = s_kernel_numeric(f, omega)
            tol = 1e-4 if kind == FilterKind.RECTANGULAR else 1e-8
            assert relative_error(closed, numeric.value) <= tol

    @pytest.mark.parametrize("kind", KINDS)
    def test_unfiltered_flattening(self, kind, rf_model):
        """Test s(Omega) tends to s(0) for lambda far above every rate."""
        omegas = kernel_omegas(decompose(assemble(rf_model)))
        f = spec(kind, bandwidth=1e4 * float(np.max(np.abs(omegas))))
        for omega in omegas:
            assert abs(s_kernel(f, omega).value - 0.5) <= 1e-3 * 0.5


@pytest.mark.unit
class TestSecondOrderKernels:
    """Tests for Z_k."""

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("region", REGIONS)
    def test_zero_frequencies(self, kind, region):
        """Test Z_k(0, 0, 0) = 1/6 for every filter and region."""
        value = z_kernel(spec(kind), region, (0j, 0j, 0j)).value
        assert value == pytest.approx(1 / 6, abs=1e-8)

    def test_lorentzian_product(self):
        """Test the Lorentzian kernel is the product of simple fractions."""
        f = spec(FilterKind.LORENTZIAN, omega_F=0.5, bandwidth=2.0)
        omegas = (-0.1 + 0.4j, -0.3 - 0.2j, -0.2 + 1.0j)
        w1, w2, w3 = (np.complex128(w) / 2.0 for w in shifted_omegas("iii", omegas, 0.5))
        expected = 1 / ((1 - w1) * (2 - w2) * (3 - w3))
        assert z_kernel(f, "iii", omegas).value == pytest.approx(complex(expected))

    def test_lorentzian_vectorized(self, rng):
        """Test the array form of z_lorentzian matches scalar evaluation."""
        f = spec(FilterKind.LORENTZIAN, omega_F=1.0, bandwidth=0.3)
        triples = -rng.uniform(0, 1, size=(6, 3)) + 1j * rng.normal(size=(6, 3))
        values = z_lorentzian(f, "ii", (triples[:, 0], triples[:, 1], triples[:, 2]))
        for k, triple in enumerate(triples):
            assert values[k] == pytest.approx(z_kernel(f, "ii", tuple(triple)).value)

    @pytest.mark.parametrize("region", REGIONS)
    def test_lorentzian_against_time_domain(self, region, rf_model, rng):
        """Test the Lorentzian closed form against the time-ordered integral."""
        f = spec(FilterKind.LORENTZIAN, omega_F=2.0, bandwidth=0.5)
        for omegas in model_triples(rf_model, 4, rng):
            closed = z_kernel(f, region, omegas).value
            numeric = z_kernel_numeric(f, region, omegas).value
            assert relative_error(closed, numeric) <= 1e-6

    @pytest.mark.parametrize("region", REGIONS)
    def test_gaussian_against_time_domain(self, region, rf_model, rng):
        """Test the Gaussian closed form against the time-ordered integral."""
        f = spec(FilterKind.GAUSSIAN, omega_F=2.0, bandwidth=0.5)
        for omegas in model_triples(rf_model, 3, rng):
            closed = z_kernel(f, region, omegas).value
            numeric = z_kernel_numeric(f, region, omegas).value
            assert relative_error(closed, numeric) <= 1e-6

    def test_gaussian_narrow_filter_is_finite(self, qd_model):
        """Test a Gaussian kernel with |Omega|/lambda ~ 1e3 stays finite."""
        f = spec(FilterKind.GAUSSIAN, omega_F=0.0, bandwidth=0.2)
        omegas = kernel_omegas(decompose(assemble(qd_model)))
        far = omegas[np.argmax(np.abs(omegas.imag))]
        value = z_kernel(f, "i", (far, omegas[1], far)).value
        assert np.isfinite(value)

    @pytest.mark.parametrize("region", REGIONS)
    def test_rectangular_against_line_integral(self, region, rf_model, rng):
        """Test the phi/Phi closed form against the single line integral."""
        f = spec(FilterKind.RECTANGULAR, omega_F=2.0, bandwidth=0.5)
        for omegas in model_triples(rf_model, 4, rng):
            closed = z_kernel(f, region, omegas).value
            line = z_kernel_rect_line(f, region, omegas).value
            assert relative_error(closed, line) <= 1e-6

    def test_rectangular_line_at_zero(self):
        """Test the line-integral form gives 1/6 at zero frequencies."""
        value = z_kernel_rect_line(spec(FilterKind.RECTANGULAR), "i", (0j, 0j, 0j)).value
        assert value == pytest.approx(1 / 6, abs=1e-8)

    def test_rectangular_against_time_domain(self, rf_model):
        """Test one rectangular kernel against the time-ordered integral."""
        f = spec(FilterKind.RECTANGULAR, omega_F=2.0, bandwidth=0.5)
        omegas = kernel_omegas(decompose(assemble(rf_model)))
        triple = (omegas[1], omegas[2], omegas[3])
        closed = z_kernel(f, "i", triple).value
        numeric = z_kernel_numeric(f, "i", triple)
        assert numeric.error_estimate >= 0.0
        assert abs(closed - numeric.value) <= 1e-4 * abs(numeric.value) + numeric.error_estimate

    def test_rectangular_time_domain_at_zero(self):
        """Test the truncated sinc cascade gives 1/6 at zero frequencies with a non-negative error."""
        numeric = z_kernel_numeric(spec(FilterKind.RECTANGULAR), "i", (0j, 0j, 0j))
        assert numeric.error_estimate >= 0.0
        assert abs(numeric.value - 1 / 6) <= 1e-3 + numeric.error_estimate

    def test_rectangular_intensity_time_domain(self):
        """Test the rectangular s(Omega) time-domain integral carries a non-negative error."""
        numeric = s_kernel_numeric(spec(FilterKind.RECTANGULAR, omega_F=0.4, bandwidth=0.6), -0.3 + 0.5j)
        assert numeric.error_estimate >= 0.0
        assert np.isfinite(numeric.value)

    @pytest.mark.parametrize("region", REGIONS)
    def test_rectangular_edge_on_laser_line(self, region, rf_model):
        """Test omega_F = lambda, where a window edge sits on the zero mode, against the line integral."""
        f = spec(FilterKind.RECTANGULAR, omega_F=2.0, bandwidth=2.0)
        omegas = kernel_omegas(decompose(assemble(rf_model)))
        steady = omegas[np.argmin(np.abs(omegas))]
        for triple in ((steady, steady, steady), (omegas[1], steady, omegas[2]), (steady, omegas[3], steady)):
            closed = z_kernel(f, region, triple).value
            line = z_kernel_rect_line(f, region, triple)
            assert np.isfinite(closed)
            assert abs(closed - line.value) <= 1e-5 * abs(line.value) + line.error_estimate

    @pytest.mark.parametrize("kind", KINDS)
    def test_unfiltered_flattening(self, kind, rf_model, rng):
        """Test Z_k tends to 1/6 for lambda far above every rate."""
        omegas = kernel_omegas(decompose(assemble(rf_model)))
        f = spec(kind, bandwidth=1e4 * float(np.max(np.abs(omegas))))
        for region in REGIONS:
            for triple in model_triples(rf_model, 2, rng):
                assert abs(z_kernel(f, region, triple).value - 1 / 6) <= 1e-3 / 6

    def test_qd_triples_gaussian(self, rng):
        """Test Gaussian kernels on quantum-dot eigenvalues against the time-ordered integral."""
        model = neutral_qd(QDParams(chi=50.0, gamma_ph=2.0, pump_P=0.3))
        f = spec(FilterKind.GAUSSIAN, omega_F=0.0, bandwidth=5.0)
        for omegas in model_triples(model, 3, rng):
            closed = z_kernel(f, "ii", omegas).value
            numeric = z_kernel_numeric(f, "ii", omegas).value
            assert relative_error(closed, numeric) <= 1e-6


@pytest.mark.unit
class TestKernelHelpers:
    """Tests for coefficients, values and the cache."""

    def test_unknown_region(self):
        """Test an invalid region is rejected."""
        with pytest.raises(ValueError, match="Unknown region"):
            shifted_omegas("iv", (0, 0, 0), 0.0)

    def test_lorentzian_has_no_coefficients(self):
        """Test Lorentzian kernels are not reduced."""
        with pytest.raises(ValueError, match="no reduced coefficients"):
            kernel_coefficients(spec(FilterKind.LORENTZIAN), "i", (0, 0, 0))

    def test_gaussian_coefficients(self):
        """Test A, B, C for region i."""
        f = spec(FilterKind.GAUSSIAN, omega_F=0.0, bandwidth=0.5)
        coeffs = kernel_coefficients(f, "i", (-0.2 + 1j, -0.4, -0.6 - 1j)).as_dict()
        assert coeffs["A"] == pytest.approx((-0.2 + 1j + 0.4 - 0.6 - 1j) / 1.0)
        assert coeffs["B"] == pytest.approx((-0.6 - 1j + 0.2 - 1j) / 1.0)
        assert coeffs["C"] == pytest.approx(0.4)

    def test_rectangular_coefficients_carry_offset(self):
        """Test alpha, beta, gamma include the +i eps offsets."""
        coeffs = kernel_coefficients(spec(FilterKind.RECTANGULAR), "i", (0, 0, 0), eps_branch=1e-6).as_dict()
        assert coeffs["alpha"] == pytest.approx(1e-6j)
        assert coeffs["beta"] == pytest.approx(1e-6j)
        assert coeffs["gamma"] == pytest.approx(1 + 1e-6j)

    def test_kernel_value_rejects_non_finite(self):
        """Test a NaN kernel raises QuadratureFailure."""
        with pytest.raises(QuadratureFailure, match="non-finite"):
            KernelValue(complex(float("nan"), 0.0))

    def test_kernel_value_rejects_negative_error(self):
        """Test a negative error estimate is rejected."""
        with pytest.raises(ValueError, match="non-negative"):
            KernelValue(1.0, -1.0)

    def test_cache_hits_and_misses(self):
        """Test values are computed once per key."""
        cache = KernelCache()
        calls = []

        def compute():
            calls.append(1)
            return KernelValue(0.25)

        assert cache.get_or_compute("k", compute).value == 0.25
        assert cache.get_or_compute("k", compute).value == 0.25
        assert len(calls) == 1
        assert (cache.hits, cache.misses, len(cache)) == (1, 1, 1)

        cache.clear()
        assert (cache.hits, cache.misses, len(cache)) == (0, 0, 0)

    def test_time_domain_window_convergence(self):
        """Test doubling the Lorentzian truncation window stays within the reported error."""
        f = spec(FilterKind.LORENTZIAN, omega_F=0.2, bandwidth=1.0)
        omegas = (-0.3 + 0.5j, -0.1, -0.4 - 0.5j)
        short = z_kernel_numeric(f, "i", omegas, Quadrature(), window=15.0)
        long = z_kernel_numeric(f, "i", omegas, Quadrature(), window=30.0)
        assert abs(short.value - long.value) <= short.error_estimate + long.error_estimate
