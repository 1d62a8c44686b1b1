"""Exact and smoothed sparse regularizers.

The exact regularizer is sum_j psi(|w_j|^p) with 0 < p <= 1.  Its smoothed
version replaces |w_j| by phi(mu, w_j), giving a twice differentiable
function with diagonal Hessian:

    value     = sum_j psi(phi_j^p)
    grad_j    = p psi'(phi_j^p) phi_j' phi_j^(p-1)
    hess_jj   = p^2 psi''(phi_j^p) (phi_j' phi_j^(p-1))^2
                + p (p-1) psi'(phi_j^p) (phi_j')^2 phi_j^(p-2)
                + p psi'(phi_j^p) phi_j^(p-1) phi_j''

where phi_j = phi(mu, w_j).  For p < 1 the diagonal entries blow up as
mu -> 0 at coordinates where w_j -> 0 faster than mu; this is expected and
is exercised by the tests, not guarded against.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .kernels import SmoothAbs
from .penalties import Penalty, psi_derivs, psi_eval

__all__ = [
    "RegSpec",
    "RegEval",
    "RegularizerWarning",
    "exact_reg",
    "smoothed_reg",
    "smoothed_reg_gap",
]

# below this, powers are taken in log space to avoid intermediate overflow
_TINY_BASE = 1e-150


class RegularizerWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RegSpec:
    """Regularizer specification: exponent p, penalty psi and smoothing phi."""

    p: float
    penalty: Penalty
    smooth: SmoothAbs

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"exponent p must lie in (0, 1], got {self.p}")
        if self.p == 1.0 and np.isfinite(self.smooth.kernel.support):
            warnings.warn(
                f"kernel {self.smooth.kernel.id!r} has compact support, so its "
                "density is not strictly positive; the p = 1 convergence theory "
                "does not cover it",
                RegularizerWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class RegEval:
    value: float
    grad: np.ndarray
    hess_diag: np.ndarray


def _stable_pow(base: np.ndarray, exponent: float) -> np.ndarray:
    if exponent == 0.0:
        return np.ones_like(base)
    if exponent == 1.0:
        return base
    tiny = base < _TINY_BASE
    if not np.any(tiny):
        return base ** exponent
    safe = np.where(tiny, 1.0, base)
    out = safe ** exponent
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(tiny, np.exp(exponent * np.log(base)), out)
    return out


def exact_reg(spec: RegSpec, w: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    return float(np.sum(psi_eval(spec.penalty, np.abs(w) ** spec.p)))


def smoothed_reg(spec: RegSpec, mu: float, w: np.ndarray) -> RegEval:
    """Evaluate the smoothed regularizer with gradient and Hessian diagonal."""
    w = np.asarray(w, dtype=float)
    p = spec.p
    phi = np.asarray(spec.smooth.phi(mu, w), dtype=float)
    dphi = np.asarray(spec.smooth.phi_prime(mu, w), dtype=float)
    d2phi = np.asarray(spec.smooth.phi_second(mu, w), dtype=float)

    phi_p = _stable_pow(phi, p)
    phi_pm1 = _stable_pow(phi, p - 1.0)
    phi_pm2 = _stable_pow(phi, p - 2.0)
    d1, d2 = psi_derivs(spec.penalty, phi_p)

    value = float(np.sum(psi_eval(spec.penalty, phi_p)))
    inner = dphi * phi_pm1
    grad = p * d1 * inner
    hess = (
        p * p * d2 * inner * inner
        + p * (p - 1.0) * d1 * dphi * dphi * phi_pm2
        + p * d1 * phi_pm1 * d2phi
    )
    return RegEval(value=value, grad=grad, hess_diag=hess)


def smoothed_reg_gap(spec: RegSpec, mu: float, w: np.ndarray) -> float:
    """Smoothed minus exact regularizer value.

    Nonnegative for every spec: psi is increasing and phi(mu, x) >= |x|.
    """
    return smoothed_reg(spec, mu, w).value - exact_reg(spec, w)
