"""Kernel weight functions and their analytic properties.

Five symmetric second-order kernels are supported (uniform, Gaussian,
Epanechnikov, biweight, triweight), together with two parametric families
used by specific procedures: the signed two-Gaussian kernel of indirect
cross-validation and the asymmetric gamma kernel for data on [0, inf).

All functions accept scalars or arrays and broadcast like numpy ufuncs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtr

from .errors import InvalidArgument, InvalidIcvParams, NumericOverflow, UnsupportedOperation

__all__ = [
    "Kernel",
    "KernelMoments",
    "IcvKernelParams",
    "parse_kernel",
    "evaluate",
    "moments",
    "derivative",
    "gaussian_derivative",
    "derivative_roughness",
    "antiderivative",
    "self_convolution",
    "icv_kernel",
    "icv_moments",
    "icv_constant",
    "gamma_kernel",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_PI = math.sqrt(math.pi)


class Kernel(str, enum.Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"
    BIWEIGHT = "biweight"
    TRIWEIGHT = "triweight"

    @property
    def compact(self) -> bool:
        return self is not Kernel.GAUSSIAN

    def __str__(self) -> str:
        return self.value


def parse_kernel(kernel) -> Kernel:
    """Accept a :class:`Kernel` or its lowercase name."""
    if isinstance(kernel, Kernel):
        return kernel
    try:
        return Kernel(str(kernel).lower())
    except ValueError:
        names = ", ".join(k.value for k in Kernel)
        raise InvalidArgument(f"unknown kernel {kernel!r}; expected one of {names}") from None


@dataclass(frozen=True)
class KernelMoments:
    mu2: float
    mu4: float
    roughness: float
    # None where K'' is not square integrable in the usual sense (uniform)
    _d2_roughness: float | None = None
    kernel: Kernel | None = None

    @property
    def d2_roughness(self) -> float:
        """R(K'') = integral of the squared second derivative."""
        if self._d2_roughness is None:
            raise UnsupportedOperation(f"R(K'') is undefined for the {self.kernel} kernel")
        return self._d2_roughness


# (normalising constant c, exponent p) for c * (1 - u^2)^p on |u| <= 1
_POLY = {
    Kernel.UNIFORM: (0.5, 0),
    Kernel.EPANECHNIKOV: (0.75, 1),
    Kernel.BIWEIGHT: (15.0 / 16.0, 2),
    Kernel.TRIWEIGHT: (35.0 / 32.0, 3),
}

# exact values from piecewise polynomial integration
_MOMENTS = {
    Kernel.UNIFORM: KernelMoments(1 / 3, 1 / 5, 1 / 2, None, Kernel.UNIFORM),
    Kernel.GAUSSIAN: KernelMoments(1.0, 3.0, 1 / (2 * SQRT_PI), 3 / (8 * SQRT_PI), Kernel.GAUSSIAN),
    Kernel.EPANECHNIKOV: KernelMoments(1 / 5, 3 / 35, 3 / 5, 9 / 2, Kernel.EPANECHNIKOV),
    Kernel.BIWEIGHT: KernelMoments(1 / 7, 1 / 21, 5 / 7, 45 / 2, Kernel.BIWEIGHT),
    Kernel.TRIWEIGHT: KernelMoments(1 / 9, 1 / 33, 350 / 429, 35.0, Kernel.TRIWEIGHT),
}


def evaluate(kernel, u):
    """Kernel weight K(u)."""
    kernel = parse_kernel(kernel)
    u = np.asarray(u, dtype=float)
    if kernel is Kernel.GAUSSIAN:
        return np.exp(-0.5 * u * u) / SQRT_2PI
    if kernel is Kernel.UNIFORM:
        return np.where(np.abs(u) < 1.0, 0.5, 0.0)
    c, p = _POLY[kernel]
    return c * np.maximum(1.0 - u * u, 0.0) ** p


def moments(kernel) -> KernelMoments:
    return _MOMENTS[parse_kernel(kernel)]


def _hermite_he(u, m: int):
    # probabilists' Hermite polynomial He_m(u) by three-term recursion
    prev = np.ones_like(u)
    if m == 0:
        return prev
    cur = u.copy()
    for k in range(1, m):
        prev, cur = cur, u * cur - k * prev
    return cur


def gaussian_derivative(u, order: int):
    """m-th derivative of the standard normal density, (-1)^m He_m(u) phi(u)."""
    if order < 0:
        raise InvalidArgument("derivative order must be non-negative")
    u = np.asarray(u, dtype=float)
    sign = -1.0 if order % 2 else 1.0
    return sign * _hermite_he(u, order) * np.exp(-0.5 * u * u) / SQRT_2PI


def derivative(kernel, u, order: int = 1):
    """Analytic derivative of K of the given order.

    Any order is available for the Gaussian kernel. Compact kernels only
    support ``order=1`` (their higher derivatives are not smooth at the
    support edges).
    """
    kernel = parse_kernel(kernel)
    if order == 0:
        return evaluate(kernel, u)
    if order < 0:
        raise InvalidArgument("derivative order must be non-negative")
    if kernel is Kernel.GAUSSIAN:
        return gaussian_derivative(u, order)
    if order >= 2:
        raise UnsupportedOperation(f"derivative of order {order} is only available for the Gaussian kernel")
    u = np.asarray(u, dtype=float)
    c, p = _POLY[kernel]
    if p == 0:
        return np.zeros_like(u)
    inside = np.abs(u) <= 1.0
    return np.where(inside, -2.0 * p * c * u * np.maximum(1.0 - u * u, 0.0) ** (p - 1), 0.0)


def derivative_roughness(kernel, p: int) -> float:
    """R(K^(p)), the integral of the squared p-th derivative."""
    kernel = parse_kernel(kernel)
    if p == 0:
        return moments(kernel).roughness
    if kernel is Kernel.GAUSSIAN:
        # (2p-1)!! / (2^(p+1) sqrt(pi))
        double_fact = math.prod(range(2 * p - 1, 0, -2))
        return double_fact / (2 ** (p + 1) * SQRT_PI)
    if p == 2:
        return moments(kernel).d2_roughness
    raise UnsupportedOperation(f"R(K^({p})) is only available for the Gaussian kernel")


def antiderivative(kernel, u):
    """Integrated kernel, the distribution function int_{-inf}^u K(t) dt."""
    kernel = parse_kernel(kernel)
    u = np.asarray(u, dtype=float)
    if kernel is Kernel.GAUSSIAN:
        return ndtr(u)
    t = np.clip(u, -1.0, 1.0)
    t2 = t * t
    if kernel is Kernel.UNIFORM:
        poly = t / 2
    elif kernel is Kernel.EPANECHNIKOV:
        poly = 0.75 * t - 0.25 * t * t2
    elif kernel is Kernel.BIWEIGHT:
        poly = t * (15 / 16 - t2 * (5 / 8 - t2 * 3 / 16))
    else:
        poly = t * (35 / 32 - t2 * (35 / 32 - t2 * (21 / 32 - t2 * 5 / 32)))
    return 0.5 + poly


# 8-point Gauss-Legendre integrates the degree <= 12 products below exactly
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def self_convolution(kernel, t):
    """(K * K)(t) = integral of K(u) K(t - u) du.

    Closed form for the Gaussian (a normal density with variance 2). For
    compact kernels the overlap [|t| - 1, 1] is integrated by a Gauss-Legendre
    rule that is exact for the polynomial integrand.
    """
    kernel = parse_kernel(kernel)
    t = np.abs(np.asarray(t, dtype=float))
    if kernel is Kernel.GAUSSIAN:
        return np.exp(-0.25 * t * t) / (2.0 * SQRT_PI)
    inside = t < 2.0
    tc = np.where(inside, t, 0.0)
    lo = tc - 1.0
    half = (1.0 - lo) / 2.0
    mid = (1.0 + lo) / 2.0
    nodes = mid[..., None] + half[..., None] * _GL_NODES
    c, p = _POLY[kernel]
    f = c * c * ((1.0 - nodes**2) * (1.0 - (tc[..., None] - nodes) ** 2)) ** p
    val = half * np.sum(f * _GL_WEIGHTS, axis=-1)
    return np.where(inside, val, 0.0)


@dataclass(frozen=True)
class IcvKernelParams:
    """Parameters of L(u) = (1 + alpha) phi(u) - (alpha / sigma) phi(u / sigma)."""

    alpha: float
    sigma: float

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise InvalidIcvParams(f"alpha must be finite and >= 0, got {self.alpha}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InvalidIcvParams(f"sigma must be finite and > 0, got {self.sigma}")

    @property
    def components(self) -> tuple[tuple[float, float], ...]:
        """(weight, scale) pairs of the two normal densities making up L."""
        return ((1.0 + self.alpha, 1.0), (-self.alpha, self.sigma))


def icv_kernel(params: IcvKernelParams, u):
    """Signed ICV kernel value; negative in the tails when alpha > 0."""
    u = np.asarray(u, dtype=float)
    a, s = params.alpha, params.sigma
    return ((1 + a) * np.exp(-0.5 * u * u) - (a / s) * np.exp(-0.5 * (u / s) ** 2)) / SQRT_2PI


def icv_moments(params: IcvKernelParams) -> tuple[float, float]:
    """Return (mu2(L), R(L)) in closed form."""
    a, s = params.alpha, params.sigma
    mu2 = (1 + a) - a * s * s
    roughness = (
        (1 + a) ** 2 / (2 * SQRT_PI)
        - 2 * a * (1 + a) / math.sqrt(2 * math.pi * (1 + s * s))
        + a * a / (2 * s * SQRT_PI)
    )
    return mu2, roughness


def icv_constant(params: IcvKernelParams) -> float:
    """Rescaling constant C = (R(phi) mu2(L)^2 / (R(L) mu2(phi)^2))^(1/5)."""
    mu2, rl = icv_moments(params)
    if abs(mu2) <= 1e-12 * (1 + params.alpha * (1 + params.sigma**2)):
        raise InvalidIcvParams(f"mu2(L) vanishes for alpha={params.alpha}, sigma={params.sigma}")
    return (mu2 * mu2 / (2 * SQRT_PI * rl)) ** 0.2


def gamma_kernel(x, b, t):
    """Density of Gamma(shape=x/b + 1, scale=b) at t, evaluated in log space."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    b = float(b)
    if b <= 0 or not math.isfinite(b):
        raise InvalidArgument(f"gamma kernel smoothing parameter must be > 0, got {b}")
    if np.any(x < 0):
        raise InvalidArgument("gamma kernel location x must be >= 0")
    if np.any(t <= 0):
        raise InvalidArgument("gamma kernel argument t must be > 0")
    shape = x / b + 1.0
    logf = (shape - 1.0) * np.log(t) - t / b - shape * math.log(b) - gammaln(shape)
    out = np.exp(logf)
    if not np.all(np.isfinite(out)):
        raise NumericOverflow("gamma kernel evaluation overflowed")
    return out
