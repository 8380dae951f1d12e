"""
Complex special functions and adaptive quadrature for the filter kernels.

The error-function family comes from scipy.special (Faddeeva-based for complex arguments). The
dilogarithm is Li2(z) = spence(1 - z) on the principal branch with its cut along [1, inf).
"""

import logging
import math
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
from scipy import integrate, special

from filterstat.config import Quadrature
from filterstat.errors import ArgumentOnCut, QuadratureFailure

logger = logging.getLogger(__name__)

CUT_TOL = 1e-14
DEGENERATE_TOL = 1e-12
EDGE_TOL = 1e-12


def erf_c(z: complex) -> complex:
    """Complex error function."""
    return complex(special.erf(complex(z)))


def erfcx_c(z: complex) -> complex:
    """Scaled complementary error function exp(z^2) erfc(z)."""
    return complex(special.erfcx(complex(z)))


def dilog(z: complex, below_cut: bool = False) -> complex:
    """
    Principal-branch dilogarithm Li2(z).

    On the cut (real z > 1) the value is taken from above unless below_cut is set; off the cut the flag
    has no effect.
    """
    z = complex(z)
    if z.imag == 0.0 and z.real > 1.0:
        x = z.real
        real_part = math.pi**2 / 3.0 - 0.5 * math.log(x) ** 2 - special.spence(1.0 - 1.0 / x)
        sign = -1.0 if below_cut else 1.0
        return complex(real_part, sign * math.pi * math.log(x))
    return complex(special.spence(1.0 - z))


def _check_log_argument(w: complex, what: str, tol: float = CUT_TOL) -> None:
    if w.real < 0 and abs(w.imag) <= tol:
        raise ArgumentOnCut(f"log argument {what} = {w} lies on the negative real axis")


def phi(a: complex, b: complex, z: complex, cut_side: float = 0.0) -> complex:
    """
    phi(a, b; z) = -ln(z-b) ln(-a) + ln(z-a) ln((z-b)/(a-b)) + Li2((z-a)/(b-a)), principal branches.

    Its z-derivative is (ln(z-a) - ln(-a)) / (z-b). For a == b, where the closed form degenerates, the
    antiderivative ln(z-a)^2/2 - ln(-a) ln(z-a) with the same derivative is returned.

    Args:
        cut_side: When (z-b)/(a-b) lies on the negative real axis, the sign of the imaginary part to
            take the limit from. Zero keeps the strict behaviour and raises.

    Raises:
        ArgumentOnCut: If a logarithm or dilogarithm argument sits on its cut
    """
    a, b, z = complex(a), complex(b), complex(z)
    _check_log_argument(z - a, "z-a")
    _check_log_argument(-a, "-a")
    if abs(a - b) <= DEGENERATE_TOL * (1.0 + abs(a)):
        log_za = np.log(z - a)
        return complex(0.5 * log_za**2 - np.log(-a) * log_za)

    ratio = (z - b) / (a - b)
    _check_log_argument(z - b, "z-b")
    if cut_side and ratio.real < 0.0 and abs(ratio.imag) <= CUT_TOL * abs(ratio):
        # ln(ratio) and Li2(1 - ratio) jump together; both take the limit from the same side
        log_ratio = complex(math.log(-ratio.real), math.copysign(math.pi, cut_side))
        li2 = dilog(complex(1.0 - ratio.real, 0.0), below_cut=cut_side > 0)
    else:
        u = (z - a) / (b - a)
        _check_log_argument(ratio, "(z-b)/(a-b)", tol=0.0)
        if u.real > 1.0 and u.imag == 0.0:
            raise ArgumentOnCut(f"dilog argument (z-a)/(b-a) = {u} lies on the cut [1, inf)")
        log_ratio = complex(np.log(ratio))
        li2 = dilog(u)
    return complex(-np.log(z - b) * np.log(-a) + np.log(z - a) * log_ratio + li2)


class PathPhi:
    """
    phi(a, b; z) continued analytically along the real segment from 0 to z_end.

    (z-b)/(a-b) moves on a straight line as z runs along the segment, so it crosses the negative real
    axis at most once. Past that point the principal closed form jumps by a constant; the constant is
    added back so the result stays an antiderivative of (ln(z-a) - ln(-a)) / (z-b) along the path.
    A crossing that falls on an end of the segment adds no jump; the end value there is the limit
    taken from inside the segment.
    """

    def __init__(self, a: complex, b: complex, z_end: float):
        self.a = complex(a)
        self.b = complex(b)
        self.z_end = float(z_end)
        self.crossing: Optional[float] = None
        self.jump = 0j
        self._touch: Optional[float] = None
        self._direction = 0.0

        if abs(self.a - self.b) <= DEGENERATE_TOL * (1.0 + abs(self.a)):
            return
        slope = 1.0 / (self.a - self.b)
        start = -self.b * slope
        if slope.imag == 0.0:
            return
        z_cross = -start.imag / slope.imag
        fraction = z_cross / self.z_end
        if not -EDGE_TOL <= fraction <= 1.0 + EDGE_TOL:
            return
        r_cross = (start + z_cross * slope).real
        if r_cross >= 0.0:
            return

        # sign of d Im[(z-b)/(a-b)] as z advances along the path
        self._direction = math.copysign(1.0, slope.imag * self.z_end)
        self._touch = z_cross
        if fraction <= EDGE_TOL or fraction >= 1.0 - EDGE_TOL:
            logger.debug(f"phi path 0 -> {z_end}: branch point touched at the end z = {z_cross:.6g}")
            return

        # downward crossing of the negative axis adds 2 pi i [ln(z-a) - ln(1-r)], upward subtracts it
        step = 2j * math.pi * (np.log(z_cross - self.a) - math.log(1.0 - r_cross))
        self.crossing = z_cross
        self.jump = complex(step if self._direction < 0.0 else -step)
        logger.debug(f"phi path 0 -> {z_end}: branch crossing at z = {z_cross:.6g}, jump {self.jump:.6g}")

    def cut_side(self, z: float) -> float:
        """Side of the negative real axis that (z-b)/(a-b) sits on near path point z; 0 if it never gets there."""
        if self._touch is None:
            return 0.0
        fraction = self._touch / self.z_end
        if fraction <= EDGE_TOL:
            return self._direction
        if fraction >= 1.0 - EDGE_TOL:
            return -self._direction
        return self._direction if (z - self._touch) * self.z_end > 0.0 else -self._direction

    def __call__(self, z: float) -> complex:
        value = phi(self.a, self.b, z, cut_side=self.cut_side(z))
        if self.crossing is not None and (z - self.crossing) * self.z_end > 0.0:
            value += self.jump
        return value


def _run_quad(func: Callable[[float], float], lower: float, upper: float, q: Quadrature, points) -> Tuple[float, float]:
    kwargs = dict(epsabs=q.abs_tol, epsrel=q.rel_tol, limit=q.max_subdivisions, full_output=1)
    if points:
        kwargs["points"] = points
    result = integrate.quad(func, lower, upper, **kwargs)
    if len(result) > 3:
        message = str(result[3])
        if "maximum number of subdivisions" in message.lower():
            raise QuadratureFailure(f"Quadrature on [{lower:.6g}, {upper:.6g}] did not converge: {message.strip()}")
        logger.debug(f"Quadrature on [{lower:.6g}, {upper:.6g}] reported: {message.strip()}")
    return result[0], result[1]


def complex_quad(
    func: Callable[[float], complex],
    lower: float,
    upper: float,
    q: Quadrature,
    points: Optional[Iterable[float]] = None,
) -> Tuple[complex, float]:
    """
    Integrate a complex function of a real variable; real and imaginary parts share evaluations.

    Returns:
        (value, error estimate)
    """
    if lower == upper:
        return 0j, 0.0
    sign = 1.0
    if lower > upper:
        lower, upper, sign = upper, lower, -1.0

    inner = sorted({float(p) for p in (points or []) if lower < p < upper})
    cache = {}

    def evaluate(x: float) -> complex:
        if x not in cache:
            cache[x] = complex(func(x))
        return cache[x]

    re_value, re_error = _run_quad(lambda x: evaluate(x).real, lower, upper, q, inner)
    im_value, im_error = _run_quad(lambda x: evaluate(x).imag, lower, upper, q, inner)
    return sign * complex(re_value, im_value), float(math.hypot(re_error, im_error))


def quad_semi_infinite(
    integrand: Callable[[float], complex],
    center: float,
    width: float,
    q: Quadrature,
) -> Tuple[complex, float]:
    """Integral over [0, inf) of an integrand under a Gaussian-like envelope, truncated at center + 12 width."""
    if width <= 0:
        raise ValueError(f"Envelope width must be positive, got {width}")
    upper = max(center, 0.0) + 12.0 * width
    return complex_quad(integrand, 0.0, upper, q, points=[center])


def capital_phi(a: complex, b: complex, c: complex, z_end: float, q: Quadrature) -> Tuple[complex, float]:
    """
    Phi(a, b, c; z_end) = integral from 0 to z_end of phi(a, b; z) / (z - c) dz along the real segment.

    The near-pole at Re(c) is removed by subtracting phi at the closest path point and adding that
    value times the logarithmic primitive of 1/(z - c).

    Returns:
        (value, error estimate)
    """
    c = complex(c)
    lower, upper = sorted((0.0, float(z_end)))
    if c.imag == 0.0 and lower <= c.real <= upper:
        raise ArgumentOnCut(f"pole c = {c} lies on the integration path without an imaginary offset")

    path_phi = PathPhi(a, b, z_end)
    anchor = min(max(c.real, lower), upper)
    phi_anchor = path_phi(anchor)

    def integrand(z: float) -> complex:
        return (path_phi(z) - phi_anchor) / (z - c)

    breakpoints = [anchor, complex(a).real, complex(b).real]
    if path_phi.crossing is not None:
        breakpoints.append(path_phi.crossing)
    value, error = complex_quad(integrand, 0.0, z_end, q, points=breakpoints)
    value += phi_anchor * (np.log(z_end - c) - np.log(-c))
    return complex(value), error
