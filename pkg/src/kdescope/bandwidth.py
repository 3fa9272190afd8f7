"""Bandwidth selectors.

Reference rules, plug-in estimators of the roughness R(f''), cross-validation
criteria (least squares, biased, likelihood, indirect), a local threshold
rule, a smoothed-bootstrap MSE selector and cross-validation for the kernel
distribution function estimator.

Selectors return a :class:`~kdescope.optimize.SelectorReport`; the ``*_score``
functions return the raw criterion so they can be checked independently.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from . import kernels as K
from .errors import (
    DegenerateSample,
    InvalidArgument,
    PluginFailure,
    UnsupportedOperation,
)
from .estimators import check_bandwidth, kde_at
from .kernels import IcvKernelParams, Kernel, parse_kernel
from .optimize import SearchInterval, SelectorReport, minimize_scalar
from .sample import Sample, as_sample

__all__ = [
    "amise",
    "h_mise_oracle",
    "h_amse",
    "rule_of_thumb",
    "robust_rule",
    "default_interval",
    "roughness_hall_marron",
    "plugin_iterative",
    "reference_pilot",
    "hsjm",
    "lscv_score",
    "select_lscv",
    "bcv_score",
    "select_bcv",
    "likelihood_cv_score",
    "select_lcv",
    "select_icv",
    "chan_delta",
    "chan_local",
    "bootstrap_mse",
    "bootstrap_ziegler",
    "sarda_cv_kdfe",
    "select_sarda",
    "select",
]

REFERENCE_FACTOR = 1.06
_PAIR_CHUNK = 2_000_000


# -- closed forms -------------------------------------------------------------------------


def amise(kernel, h: float, n: int, r_fpp: float) -> float:
    """Asymptotic MISE R(K)/(n h) + h^4 mu2^2 R(f'') / 4."""
    m = K.moments(kernel)
    return m.roughness / (n * h) + h**4 * m.mu2**2 * r_fpp / 4.0


def h_mise_oracle(kernel, r_fpp: float, n: int) -> float:
    """AMISE-optimal bandwidth (R(K) / (mu2^2 R(f'')))^(1/5) n^(-1/5)."""
    if not r_fpp > 0:
        raise InvalidArgument(f"R(f'') must be positive, got {r_fpp}")
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    m = K.moments(kernel)
    return (m.roughness / (m.mu2**2 * r_fpp)) ** 0.2 * n**-0.2


def h_amse(kernel, f_x: float, fpp_x: float, n: int) -> float:
    """Pointwise AMSE-optimal bandwidth (R(K) f(x) / (mu2^2 f''(x)^2))^(1/5) n^(-1/5)."""
    if fpp_x == 0:
        raise InvalidArgument("f''(x) = 0: the pointwise optimum is unbounded")
    m = K.moments(kernel)
    return (m.roughness * f_x / (m.mu2**2 * fpp_x**2)) ** 0.2 * n**-0.2


# -- reference rules ----------------------------------------------------------------------


def rule_of_thumb(data) -> SelectorReport:
    """Normal-reference bandwidth 1.06 sigma n^(-1/5)."""
    sample = as_sample(data)
    if sample.n < 2:
        raise DegenerateSample("rule of thumb needs at least two observations")
    sigma = sample.std()
    if sigma == 0:
        raise DegenerateSample("sample has zero variance")
    return SelectorReport(REFERENCE_FACTOR * sigma * sample.n**-0.2, method="rot", details={"sigma": sigma})


def robust_rule(data) -> SelectorReport:
    """1.06 min(sigma, IQR / 1.34) n^(-1/5)."""
    sample = as_sample(data)
    if sample.n < 4:
        raise DegenerateSample("robust rule needs at least four observations")
    sigma, iqr = sample.std(), sample.iqr()
    spread = min(sigma, iqr / 1.34)
    if spread <= 0:
        # a zero IQR with positive sigma still collapses the min()
        raise DegenerateSample(f"zero spread (sigma={sigma}, IQR={iqr})")
    return SelectorReport(
        REFERENCE_FACTOR * spread * sample.n**-0.2, method="robust", details={"sigma": sigma, "iqr": iqr}
    )


def default_interval(data, grid_size: int = 64) -> SearchInterval:
    h0 = rule_of_thumb(data).h
    return SearchInterval(0.05 * h0, 3.0 * h0, grid_size)


# -- pairwise sums ------------------------------------------------------------------------


def _pair_sum(values: np.ndarray, fn, include_diagonal: bool = True) -> float:
    """sum over ordered pairs (i, j) of fn(X_i - X_j)."""
    n = values.size
    step = max(1, _PAIR_CHUNK // n)
    total = 0.0
    for start in range(0, n, step):
        d = values[start : start + step, None] - values[None, :]
        total += float(fn(d).sum())
    if not include_diagonal:
        total -= n * float(fn(np.zeros(1))[0])
    return total


def _gauss_scaled(d, s, order=0):
    """order-th derivative of the N(0, s^2) density at d."""
    return K.gaussian_derivative(d / s, order) / s ** (order + 1)


def _require_gaussian(kernel, what: str) -> Kernel:
    kernel = parse_kernel(kernel)
    if kernel is not Kernel.GAUSSIAN:
        raise UnsupportedOperation(f"{what} is implemented for the Gaussian kernel only, got {kernel}")
    return kernel


# -- plug-in ------------------------------------------------------------------------------


def roughness_hall_marron(data, kernel, g: float, p: int) -> float:
    """Estimate R(f^(p)) by R(f_g^(p)) - R(K^(p)) / (n g^(2p+1)).

    With g equal to the working bandwidth this is the Hall-Marron estimator;
    a separate pilot g gives the Park-Marron variant. R(f_g^(p)) is computed
    exactly from pairwise differences, since for Gaussian kernels the
    integral of a product of derivatives is a derivative of a normal density
    with scale g sqrt(2). The result can be negative for very small g.
    """
    sample = as_sample(data)
    _require_gaussian(kernel, "roughness estimation")
    g = check_bandwidth(g)
    if p < 0:
        raise InvalidArgument("p must be >= 0")
    n = sample.n
    s = g * math.sqrt(2.0)
    sign = -1.0 if p % 2 else 1.0
    r_fhat = sign * _pair_sum(sample.values, lambda d: _gauss_scaled(d, s, 2 * p)) / n**2
    return r_fhat - K.derivative_roughness(Kernel.GAUSSIAN, p) / (n * g ** (2 * p + 1))


def plugin_iterative(data, kernel=Kernel.GAUSSIAN, tol: float = 1e-6, max_iter: int = 50) -> SelectorReport:
    """Iterate h <- h_MISE(R_hat(f''; g=h)) from the rule of thumb."""
    sample = as_sample(data)
    kernel = _require_gaussian(kernel, "the iterative plug-in selector")
    h = rule_of_thumb(sample).h
    trace = []
    flags = []
    converged = False
    iterations = 0
    nonpositive = 0
    for iterations in range(1, max_iter + 1):
        r = roughness_hall_marron(sample, kernel, h, 2)
        trace.append((h, r))
        if r <= 0:
            # widen the pilot until the roughness estimate turns positive
            nonpositive += 1
            if nonpositive > 10:
                raise PluginFailure("roughness estimate stayed non-positive")
            flags.append("nonpositive_roughness")
            h *= 1.5
            continue
        h_new = h_mise_oracle(kernel, r, sample.n)
        if abs(h_new - h) <= tol * h:
            h = h_new
            converged = True
            break
        h = h_new
    if not converged:
        flags.append("max_iter")
    return SelectorReport(
        h=h,
        method="plugin",
        trace=tuple(trace),
        iterations=iterations,
        converged=converged,
        flags=tuple(dict.fromkeys(flags)),
    )


def reference_pilot(data, p: int) -> float:
    """Normal-reference pilot bandwidth for estimating R(f^(p)).

    g = (2 |K^(2p)(0)| / (mu2 |psi_{2p+2}| n))^(1/(2p+3)) with Gaussian K and
    psi_r, the r-th density functional, evaluated for a normal with the
    sample standard deviation.
    """
    sample = as_sample(data)
    sigma = sample.std()
    if sigma == 0:
        raise DegenerateSample("sample has zero variance")
    r = 2 * p + 2
    psi = math.factorial(r) / ((2 * sigma) ** (r + 1) * math.factorial(r // 2) * K.SQRT_PI)
    k0 = abs(float(K.gaussian_derivative(0.0, 2 * p)))
    return (2.0 * k0 / (psi * sample.n)) ** (1.0 / (2 * p + 3))


def hsjm(data, kernel=Kernel.GAUSSIAN, pilot: float | None = None) -> SelectorReport:
    """Two-term plug-in (J1/n)^(1/5) + J2 (J1/n)^(3/5) with higher-order bias correction.

    Both roughness terms come from :func:`roughness_hall_marron` with
    normal-reference pilots, one per derivative order, unless ``pilot``
    fixes a common value.
    """
    sample = as_sample(data)
    kernel = _require_gaussian(kernel, "the HSJM selector")
    g2 = reference_pilot(sample, 2) if pilot is None else check_bandwidth(pilot)
    g3 = reference_pilot(sample, 3) if pilot is None else g2
    r2 = roughness_hall_marron(sample, kernel, g2, 2)
    r3 = roughness_hall_marron(sample, kernel, g3, 3)
    if r2 <= 0 or r3 <= 0:
        raise PluginFailure(f"non-positive roughness estimates R(f'')={r2:.4g}, R(f''')={r3:.4g}")
    m = K.moments(kernel)
    j1 = m.roughness / (m.mu2**2 * r2)
    j2 = m.mu4 * r3 / (20.0 * m.mu2 * r2)
    base = (j1 / sample.n) ** 0.2
    h = base + j2 * base**3
    return SelectorReport(h=h, method="hsjm", details={"J1": j1, "J2": j2, "pilot2": g2, "pilot3": g3, "R2": r2, "R3": r3})


# -- least squares cross-validation -------------------------------------------------------


def _components(kernel):
    if isinstance(kernel, IcvKernelParams):
        return kernel.components
    if parse_kernel(kernel) is Kernel.GAUSSIAN:
        return ((1.0, 1.0),)
    return None


def lscv_score(data, kernel, h: float) -> float:
    """CV_LS(h) = int f_h^2 - (2/n) sum_i f_{h,-i}(X_i).

    ``kernel`` may be one of the standard kernels or :class:`IcvKernelParams`
    for the signed ICV kernel. The integral term is exact: Gaussian mixtures
    convolve in closed form and compact kernels use the exact polynomial
    self-convolution.
    """
    sample = as_sample(data)
    h = check_bandwidth(h)
    n = sample.n
    if n < 2:
        raise InvalidArgument("cross-validation needs at least two observations")
    x = sample.values
    comps = _components(kernel)
    if comps is not None:

        def conv(d):
            return sum(
                wa * wb * _gauss_scaled(d, h * math.hypot(sa, sb)) for wa, sa in comps for wb, sb in comps
            )

        def kh(d):
            return sum(w * _gauss_scaled(d, h * s) for w, s in comps)

    else:
        kernel = parse_kernel(kernel)

        def conv(d):
            return K.self_convolution(kernel, d / h) / h

        def kh(d):
            return K.evaluate(kernel, d / h) / h

    int_f2 = _pair_sum(x, conv) / n**2
    loo = _pair_sum(x, kh, include_diagonal=False) / (n * (n - 1))
    return int_f2 - 2.0 * loo


def select_lscv(data, kernel=Kernel.GAUSSIAN, interval: SearchInterval | None = None) -> SelectorReport:
    sample = as_sample(data)
    interval = interval or default_interval(sample)
    return minimize_scalar(lambda h: lscv_score(sample, kernel, h), interval, method="lscv")


# -- biased cross-validation --------------------------------------------------------------


def bcv_score(data, h: float) -> float:
    """BCV(h) = R(K)/(n h) + h^4 mu2^2 R~(f'') / 4 for the Gaussian kernel.

    R~(f'') = n^-2 sum_{i != j} (K_h'' * K_h'')(X_i - X_j), and the
    convolution of two Gaussian second derivatives is the fourth derivative
    of a normal density with scale h sqrt(2).
    """
    sample = as_sample(data)
    h = check_bandwidth(h)
    n = sample.n
    if n < 2:
        raise InvalidArgument("BCV needs at least two observations")
    s = h * math.sqrt(2.0)
    r_tilde = _pair_sum(sample.values, lambda d: _gauss_scaled(d, s, 4), include_diagonal=False) / n**2
    m = K.moments(Kernel.GAUSSIAN)
    return m.roughness / (n * h) + h**4 / 4.0 * m.mu2**2 * r_tilde


def select_bcv(data, interval: SearchInterval | None = None) -> SelectorReport:
    """Minimise BCV over the interval.

    BCV decays to 0 as h grows without bound, so a minimum on the upper end
    of the search interval is reported with the ``boundary`` flag rather than
    trusted.
    """
    sample = as_sample(data)
    interval = interval or default_interval(sample)
    return minimize_scalar(lambda h: bcv_score(sample, h), interval, method="bcv")


# -- likelihood cross-validation ----------------------------------------------------------


def likelihood_cv_score(data, kernel, h: float) -> float:
    """Average leave-one-out log density n^-1 sum log f_{h,-i}(X_i).

    Returns -inf when some leave-one-out density is zero (compact kernel and
    an isolated observation).
    """
    sample = as_sample(data)
    kernel = parse_kernel(kernel)
    h = check_bandwidth(h)
    n = sample.n
    if n < 2:
        raise InvalidArgument("likelihood cross-validation needs at least two observations")
    x = sample.values
    loo = np.empty(n)
    step = max(1, _PAIR_CHUNK // n)
    k0 = float(K.evaluate(kernel, 0.0))
    for start in range(0, n, step):
        d = (x[start : start + step, None] - x[None, :]) / h
        loo[start : start + step] = K.evaluate(kernel, d).sum(axis=1) - k0
    loo /= (n - 1) * h
    if np.any(loo <= 0):
        return -math.inf
    return float(np.mean(np.log(loo)))


def select_lcv(data, kernel=Kernel.GAUSSIAN, interval: SearchInterval | None = None) -> SelectorReport:
    """Maximise the leave-one-out log likelihood (minimises Kullback-Leibler loss)."""
    sample = as_sample(data)
    interval = interval or default_interval(sample)
    return minimize_scalar(
        lambda h: likelihood_cv_score(sample, kernel, h), interval, maximize=True, method="lcv"
    )


# -- indirect cross-validation ------------------------------------------------------------


def select_icv(data, params: IcvKernelParams, interval: SearchInterval | None = None) -> SelectorReport:
    """Indirect cross-validation: LSCV with the signed L kernel, rescaled by C.

    ``interval`` bounds the final Gaussian-kernel bandwidth h = C b; the L-kernel
    search therefore runs over interval / C. The trace is expressed in h.
    """
    sample = as_sample(data)
    if sample.n < 2:
        raise InvalidArgument("ICV needs at least two observations")
    c = K.icv_constant(params)
    interval = interval or default_interval(sample)
    rep = minimize_scalar(lambda b: lscv_score(sample, params, b), interval.scaled(1.0 / c), method="icv")
    b_ucv = rep.h
    return SelectorReport(
        h=c * b_ucv,
        method="icv",
        trace=tuple((c * b, s) for b, s in rep.trace),
        iterations=rep.iterations,
        converged=rep.converged,
        flags=rep.flags,
        details={"C": c, "b_ucv": b_ucv, "alpha": params.alpha, "sigma": params.sigma},
    )


# -- local threshold rule -----------------------------------------------------------------

# integral of (phi(s) - Epanechnikov(s))^2 ds
_CHAN_DIFF_L2 = 1.0 / (2.0 * K.SQRT_PI) - 3.0 * math.exp(-0.5) / K.SQRT_2PI + 0.6


def chan_delta(data, x: float, h: float) -> float:
    """Standardised difference between Gaussian and Epanechnikov estimates at x."""
    sample = as_sample(data)
    h = check_bandwidth(h)
    f = kde_at(sample, Kernel.GAUSSIAN, h, x)
    fbar = kde_at(sample, Kernel.EPANECHNIKOV, h, x)
    if f <= 0:
        return math.nan
    return math.sqrt(sample.n * h) * (f - fbar) / (math.sqrt(f) * math.sqrt(_CHAN_DIFF_L2))


def _threshold_pick(grid: np.ndarray, delta: np.ndarray, z: float) -> tuple[float, tuple]:
    """Smallest candidate h with |delta(r)| > z for every larger candidate r."""
    significant = np.abs(delta) > z  # nan compares False
    k = grid.size
    while k > 0 and significant[k - 1]:
        k -= 1
    if k == grid.size:
        return float(grid[-1]), ("boundary", "empty_admissible_set")
    if k == 0:
        return float(grid[0]), ("boundary",)
    return float(grid[k - 1]), ()


def chan_local(
    data, x: float, c: float = 0.5, eps: float = 0.1, alpha: float = 0.05, grid_size: int = 64
) -> SelectorReport:
    """Local bandwidth at x from a threshold test on r in [c n^(-1/5), n^(-eps)]."""
    sample = as_sample(data)
    if not c > 0:
        raise InvalidArgument("c must be positive")
    if not 0 < eps < 0.2:
        raise InvalidArgument("eps must lie in (0, 1/5)")
    if not 0 < alpha < 1:
        raise InvalidArgument("alpha must lie in (0, 1)")
    n = sample.n
    lo, hi = c * n**-0.2, n**-eps
    if not lo < hi:
        raise InvalidArgument(f"empty scan interval [{lo}, {hi}] for n={n}")
    grid = np.geomspace(lo, hi, grid_size)
    delta = np.array([chan_delta(sample, x, r) for r in grid])
    z = float(ndtri(1.0 - alpha / 2.0))
    h, flags = _threshold_pick(grid, delta, z)
    return SelectorReport(
        h=h,
        method="chan",
        trace=tuple(zip(grid.tolist(), delta.tolist())),
        converged=not flags,
        flags=flags,
        details={"z": z, "x": x},
    )


# -- smoothed bootstrap -------------------------------------------------------------------


def bootstrap_mse(data, x: float, pilot_b: float, s: float, B: int, seed: int, s_index: int = 0) -> float:
    """Bootstrap MSE of the estimate at x with h = n^(-1/5) s.

    Resamples are drawn from the Gaussian pilot estimate (pick a datum, add
    N(0, pilot_b^2) noise). Replicate r uses its own stream seeded by
    (seed, s_index, r).
    """
    sample = as_sample(data)
    n = sample.n
    h = n**-0.2 * s
    target = kde_at(sample, Kernel.GAUSSIAN, pilot_b, x)
    sq = np.empty(B)
    for r in range(B):
        rng = np.random.default_rng([seed, s_index, r])
        xs = sample.values[rng.integers(0, n, size=n)] + pilot_b * rng.standard_normal(n)
        fstar = K.evaluate(Kernel.GAUSSIAN, (x - xs) / h).sum() / (n * h)
        sq[r] = (fstar - target) ** 2
    return float(sq.mean())


def bootstrap_ziegler(data, x: float, pilot_b: float, s_grid, B: int = 200, seed: int = 0) -> SelectorReport:
    """h = n^(-1/5) argmin_s MSE*(s) over the supplied grid of s values."""
    sample = as_sample(data)
    pilot_b = check_bandwidth(pilot_b)
    s_grid = np.asarray(s_grid, dtype=float).ravel()
    if B < 1:
        raise InvalidArgument(f"B must be >= 1, got {B}")
    if s_grid.size == 0:
        raise InvalidArgument("s_grid is empty")
    if np.any(~(s_grid > 0)):
        raise InvalidArgument("s_grid values must be positive")
    mse = np.array([bootstrap_mse(sample, x, pilot_b, s, B, seed, i) for i, s in enumerate(s_grid)])
    i = int(np.argmin(mse))
    scale = sample.n**-0.2
    flags = ("boundary",) if s_grid.size > 1 and i in (0, s_grid.size - 1) else ()
    return SelectorReport(
        h=scale * float(s_grid[i]),
        method="bootstrap",
        trace=tuple(zip((scale * s_grid).tolist(), mse.tolist())),
        converged=not flags,
        flags=flags,
        details={"s": float(s_grid[i]), "B": B, "seed": seed, "pilot_b": pilot_b},
    )


# -- distribution function cross-validation -----------------------------------------------


def sarda_cv_kdfe(data, kernel, h: float) -> float:
    """(1/n) sum [F_{h,-i}(X_i) - F_n(X_i)]^2 with unit weight.

    F_n(X_i) is the average rank of X_i divided by n.
    """
    sample = as_sample(data)
    kernel = parse_kernel(kernel)
    h = check_bandwidth(h)
    n = sample.n
    if n < 2:
        raise InvalidArgument("cross-validation needs at least two observations")
    x = sample.values
    loo = np.empty(n)
    step = max(1, _PAIR_CHUNK // n)
    for start in range(0, n, step):
        d = (x[start : start + step, None] - x[None, :]) / h
        loo[start : start + step] = K.antiderivative(kernel, d).sum(axis=1) - 0.5
    loo /= n - 1
    fn = rankdata(x, method="average") / n
    return float(np.mean((loo - fn) ** 2))


def select_sarda(data, kernel=Kernel.GAUSSIAN, interval: SearchInterval | None = None) -> SelectorReport:
    sample = as_sample(data)
    interval = interval or default_interval(sample)
    return minimize_scalar(lambda h: sarda_cv_kdfe(sample, kernel, h), interval, method="sarda")


def select(data, method: str, **kw) -> SelectorReport:
    """Dispatch by method name (the names accepted by the CLI)."""
    sample: Sample = as_sample(data)
    kernel = kw.get("kernel", Kernel.GAUSSIAN)
    interval = kw.get("interval")
    if method == "rot":
        return rule_of_thumb(sample)
    if method == "robust":
        return robust_rule(sample)
    if method == "plugin":
        return plugin_iterative(sample, kernel)
    if method == "hsjm":
        return hsjm(sample, kernel)
    if method == "lscv":
        return select_lscv(sample, kernel, interval)
    if method == "bcv":
        return select_bcv(sample, interval)
    if method == "lcv":
        return select_lcv(sample, kernel, interval)
    if method == "icv":
        return select_icv(sample, IcvKernelParams(kw["alpha"], kw["sigma"]), interval)
    if method == "chan":
        return chan_local(sample, kw["x"], kw.get("c", 0.5), kw.get("eps", 0.1), kw.get("alpha", 0.05))
    if method == "bootstrap":
        pilot_b = kw.get("pilot_b") or rule_of_thumb(sample).h
        s_grid = kw.get("s_grid")
        if s_grid is None:
            s_grid = np.geomspace(0.2, 3.0, 29) * sample.std()
        return bootstrap_ziegler(sample, kw["x"], pilot_b, s_grid, kw.get("B", 200), kw.get("seed", 0))
    if method == "sarda":
        return select_sarda(sample, kernel, interval)
    raise InvalidArgument(f"unknown bandwidth method {method!r}")
