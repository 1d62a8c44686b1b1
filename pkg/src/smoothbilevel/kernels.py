"""Density kernels and the smooth absolute-value approximations they induce.

A kernel here is a symmetric probability density rho with finite first
absolute moment kappa = int |x| rho(x) dx.  Convolving the plus function
with the scaled density rho(x/mu)/mu (and symmetrizing) yields a twice
differentiable approximation phi(mu, .) of |.| satisfying

    0 <= phi(mu, x) - |x| <= kappa * mu,      -1 <= phi'(mu, x) <= 1,
    phi''(mu, x) = (2 / mu) * rho(x / mu).

Six built-in kernels are provided, identified by the string ids
"rho1" .. "rho6"; each has a closed-form phi implemented directly.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import integrate
from scipy.special import erf as _scipy_erf

__all__ = [
    "KERNEL_IDS",
    "DensityKernel",
    "SmoothAbs",
    "AssumptionCReport",
    "make_kernel",
    "make_smooth_abs",
    "erf_approx",
    "check_assumption_C",
]

KERNEL_IDS = ("rho1", "rho2", "rho3", "rho4", "rho5", "rho6")

ArrayLike = Union[float, np.ndarray]

# Quadrature tolerance used when computing kappa at kernel construction.
_QUAD_TOL = 1e-12


def _as_float_array(x: ArrayLike) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _maybe_scalar(out: np.ndarray, scalar: bool) -> ArrayLike:
    return float(out) if scalar else out


def erf_approx(x: ArrayLike) -> ArrayLike:
    """Gauss error function with exact odd symmetry.

    Evaluates on |x| and restores the sign, so erf_approx(-x) is the exact
    float negation of erf_approx(x).
    """
    arr, scalar = _as_float_array(x)
    out = np.copysign(_scipy_erf(np.abs(arr)), arr)
    return _maybe_scalar(out, scalar)


# --- densities ---------------------------------------------------------

def _compact_poly(x: np.ndarray, scale: float, power: int) -> np.ndarray:
    inside = np.abs(x) <= 1.0
    t = np.where(inside, x, 0.0)
    return np.where(inside, scale * (1.0 - t * t) ** power, 0.0)


def _rho1(x: ArrayLike) -> ArrayLike:
    arr, scalar = _as_float_array(x)
    return _maybe_scalar(_compact_poly(arr, 35.0 / 32.0, 3), scalar)


def _rho2(x: ArrayLike) -> ArrayLike:
    arr, scalar = _as_float_array(x)
    return _maybe_scalar(_compact_poly(arr, 15.0 / 16.0, 2), scalar)


def _rho3(x: ArrayLike) -> ArrayLike:
    arr, scalar = _as_float_array(x)
    return _maybe_scalar(_compact_poly(arr, 0.75, 1), scalar)


def _rho4(x: ArrayLike) -> ArrayLike:
    arr, scalar = _as_float_array(x)
    out = math.sqrt(1.0 / (2.0 * math.pi)) * np.exp(-0.5 * arr * arr)
    return _maybe_scalar(out, scalar)


def _rho5(x: ArrayLike) -> ArrayLike:
    # logistic density; evaluated through |x| so exp never overflows
    arr, scalar = _as_float_array(x)
    e = np.exp(-np.abs(arr))
    out = e / (1.0 + e) ** 2
    return _maybe_scalar(out, scalar)


def _rho6(x: ArrayLike) -> ArrayLike:
    # normalized so that the integral over the line is one, which also makes
    # phi'' = (2/mu) rho(x/mu) consistent with phi(mu, x) = sqrt(4 mu^2 + x^2)
    arr, scalar = _as_float_array(x)
    out = 2.0 / (arr * arr + 4.0) ** 1.5
    return _maybe_scalar(out, scalar)


_DENSITIES: dict[str, tuple[Callable[[ArrayLike], ArrayLike], float]] = {
    "rho1": (_rho1, 1.0),
    "rho2": (_rho2, 1.0),
    "rho3": (_rho3, 1.0),
    "rho4": (_rho4, math.inf),
    "rho5": (_rho5, math.inf),
    "rho6": (_rho6, math.inf),
}


@dataclass(frozen=True)
class DensityKernel:
    """A symmetric density with its first absolute moment and support radius."""

    id: str
    eval: Callable[[ArrayLike], ArrayLike]
    kappa: float
    support: float


@functools.lru_cache(maxsize=None)
def _build_kernel(kernel_id: str) -> DensityKernel:
    density, support = _DENSITIES[kernel_id]
    upper = support if math.isfinite(support) else np.inf
    moment, _ = integrate.quad(
        lambda t: t * density(t), 0.0, upper, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL
    )
    return DensityKernel(id=kernel_id, eval=density, kappa=2.0 * moment, support=support)


def make_kernel(kernel_id: str) -> DensityKernel:
    """Return the built-in kernel with the given id ("rho1" .. "rho6").

    kappa is computed by adaptive quadrature of |x| rho(x) at first
    construction and cached; instances are immutable and shared.
    """
    if kernel_id not in _DENSITIES:
        raise ValueError(
            f"unknown kernel id {kernel_id!r}; expected one of {KERNEL_IDS}"
        )
    return _build_kernel(kernel_id)


# --- smooth |.| approximations -----------------------------------------

def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not mu > 0.0:
        raise ValueError(f"smoothing parameter mu must be positive, got {mu}")
    return mu


def _compact_branches(mu, x, inside_val, outside_val):
    inside = np.abs(x) <= mu
    return np.where(inside, inside_val, outside_val)


def _phi_compact(mu: float, x: np.ndarray, numer: Callable[[np.ndarray], np.ndarray]):
    # numer maps u = x/mu (clipped to the inside branch) to phi/mu
    inside = np.abs(x) <= mu
    u = np.where(inside, x / mu, 0.0)
    return np.where(inside, mu * numer(u), np.abs(x))


def _dphi_compact(mu: float, x: np.ndarray, numer: Callable[[np.ndarray], np.ndarray]):
    inside = np.abs(x) <= mu
    u = np.where(inside, x / mu, 0.0)
    return np.where(inside, numer(u), np.sign(x))


def _d2phi_compact(mu: float, x: np.ndarray, numer: Callable[[np.ndarray], np.ndarray]):
    inside = np.abs(x) <= mu
    u = np.where(inside, x / mu, 0.0)
    return np.where(inside, numer(u) / mu, 0.0)


# Inside-branch polynomials in u = x/mu for the three compact kernels.
def _p1_val(u):
    u2 = u * u
    return (((-5.0 * u2 + 28.0) * u2 - 70.0) * u2 + 140.0) * u2 / 128.0 + 35.0 / 128.0


def _p1_der(u):
    u2 = u * u
    return (((-5.0 * u2 + 21.0) * u2 - 35.0) * u2 + 35.0) * u / 16.0


def _p1_sec(u):
    return 35.0 / 16.0 * (1.0 - u * u) ** 3


def _p2_val(u):
    u2 = u * u
    return ((u2 - 5.0) * u2 + 15.0) * u2 / 16.0 + 5.0 / 16.0


def _p2_der(u):
    u2 = u * u
    return ((3.0 * u2 - 10.0) * u2 + 15.0) * u / 8.0


def _p2_sec(u):
    return 15.0 / 8.0 * (1.0 - u * u) ** 2


def _p3_val(u):
    u2 = u * u
    return (-u2 + 6.0) * u2 / 8.0 + 3.0 / 8.0


def _p3_der(u):
    u2 = u * u
    return (3.0 - u2) * u / 2.0


def _p3_sec(u):
    return 1.5 * (1.0 - u * u)


_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def _phi4_val(mu, x):
    return x * erf_approx(x / (math.sqrt(2.0) * mu)) + _SQRT_2_OVER_PI * mu * np.exp(
        -(x * x) / (2.0 * mu * mu)
    )


def _phi4_der(mu, x):
    return erf_approx(x / (math.sqrt(2.0) * mu))


def _phi4_sec(mu, x):
    return (2.0 / mu) * _rho4(x / mu)


def _phi5_val(mu, x):
    # mu * (softplus(x/mu) + softplus(-x/mu)) = |x| + 2 mu log1p(exp(-|x|/mu))
    z = np.abs(x) / mu
    return np.abs(x) + 2.0 * mu * np.log1p(np.exp(-z))


def _phi5_der(mu, x):
    return np.tanh(x / (2.0 * mu))


def _phi5_sec(mu, x):
    return (2.0 / mu) * _rho5(x / mu)


def _phi6_val(mu, x):
    return np.sqrt(4.0 * mu * mu + x * x)


def _phi6_der(mu, x):
    return x / np.sqrt(4.0 * mu * mu + x * x)


def _phi6_sec(mu, x):
    return 4.0 * mu * mu / (4.0 * mu * mu + x * x) ** 1.5


@dataclass(frozen=True)
class SmoothAbs:
    """Closed-form smooth approximation of |x| induced by a kernel.

    phi, phi_prime and phi_second accept a positive scalar mu and a scalar
    or array x, vectorized over x.  phi_prime(mu, 0) is exactly 0 and the
    compact kernels use the polynomial branch on the closed set |x| <= mu.
    """

    kernel: DensityKernel
    phi: Callable[[float, ArrayLike], ArrayLike]
    phi_prime: Callable[[float, ArrayLike], ArrayLike]
    phi_second: Callable[[float, ArrayLike], ArrayLike]


def _wrap(fn):
    def wrapped(mu: float, x: ArrayLike) -> ArrayLike:
        mu = _check_mu(mu)
        arr, scalar = _as_float_array(x)
        return _maybe_scalar(fn(mu, arr), scalar)

    return wrapped


def make_smooth_abs(kernel: DensityKernel) -> SmoothAbs:
    """Build the SmoothAbs triple (phi, phi', phi'') for a built-in kernel."""
    kid = kernel.id
    if kid == "rho1":
        val = lambda mu, x: _phi_compact(mu, x, _p1_val)
        der = lambda mu, x: _dphi_compact(mu, x, _p1_der)
        sec = lambda mu, x: _d2phi_compact(mu, x, _p1_sec)
    elif kid == "rho2":
        val = lambda mu, x: _phi_compact(mu, x, _p2_val)
        der = lambda mu, x: _dphi_compact(mu, x, _p2_der)
        sec = lambda mu, x: _d2phi_compact(mu, x, _p2_sec)
    elif kid == "rho3":
        val = lambda mu, x: _phi_compact(mu, x, _p3_val)
        der = lambda mu, x: _dphi_compact(mu, x, _p3_der)
        sec = lambda mu, x: _d2phi_compact(mu, x, _p3_sec)
    elif kid == "rho4":
        val, der, sec = _phi4_val, _phi4_der, _phi4_sec
    elif kid == "rho5":
        val, der, sec = _phi5_val, _phi5_der, _phi5_sec
    elif kid == "rho6":
        val, der, sec = _phi6_val, _phi6_der, _phi6_sec
    else:
        raise ValueError(f"no closed-form smoothing for kernel id {kid!r}")
    return SmoothAbs(kernel=kernel, phi=_wrap(val), phi_prime=_wrap(der), phi_second=_wrap(sec))


# --- structural assumption checks --------------------------------------

@dataclass(frozen=True)
class AssumptionCReport:
    """Grid-based check of the structural conditions a kernel must satisfy.

    c1: symmetry rho(x) = rho(-x)
    c2: nonincreasing on [0, infinity)
    c3: 2 int_0^S rho >= 1 - c / (S^r + c) with (c, r) = (4, 2)
    c4: strict positivity everywhere (required only when p = 1)

    Failures are reported as data, never raised.
    """

    kernel_id: str
    c1: bool
    c2: bool
    c3: bool
    c4: bool
    details: dict


def check_assumption_C(kernel: DensityKernel, grid: np.ndarray) -> AssumptionCReport:
    grid = np.asarray(grid, dtype=float)
    vals = np.asarray(kernel.eval(grid), dtype=float)

    sym_gap = np.max(np.abs(vals - np.asarray(kernel.eval(-grid), dtype=float)))
    c1 = bool(sym_gap <= 1e-13 * (1.0 + np.max(np.abs(vals))))

    pos_axis = np.sort(grid[grid >= 0.0])
    pos_vals = np.asarray(kernel.eval(pos_axis), dtype=float)
    mono_gap = float(np.max(np.diff(pos_vals), initial=-np.inf))
    c2 = bool(mono_gap <= 1e-12)

    # tail-mass lower bound, cdf by quadrature of the density itself
    c3_margin = np.inf
    for s in pos_axis:
        if s == 0.0:
            lhs = 0.0
        else:
            upper = min(s, kernel.support)
            lhs, _ = integrate.quad(kernel.eval, 0.0, upper, epsabs=1e-12, epsrel=1e-12)
            lhs *= 2.0
        bound = 1.0 - 4.0 / (s * s + 4.0)
        c3_margin = min(c3_margin, lhs - bound)
    c3 = bool(c3_margin >= -1e-9)

    min_val = float(np.min(vals))
    c4 = bool(min_val > 0.0)

    return AssumptionCReport(
        kernel_id=kernel.id,
        c1=c1,
        c2=c2,
        c3=c3,
        c4=c4,
        details={
            "symmetry_gap": float(sym_gap),
            "max_increase": mono_gap,
            "tail_bound_margin": float(c3_margin),
            "min_density": min_val,
        },
    )
