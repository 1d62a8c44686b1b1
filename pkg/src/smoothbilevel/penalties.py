"""Concave penalty functions applied to |w_i|^p inside the sparse regularizer.

Each penalty psi is twice continuously differentiable on [0, infinity) with
0 < psi'(t) <= alpha and -beta <= psi''(t) <= 0; the bound constants are
stored on the Penalty instance.  Ids: "psi1" (identity), "psi2" (log),
"psi3" (rational), "psi4" (shifted reciprocal), all with shape parameter a.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "PENALTY_IDS",
    "Penalty",
    "make_penalty",
    "psi_eval",
    "psi_derivs",
    "assumption_A_constants",
]

PENALTY_IDS = ("psi1", "psi2", "psi3", "psi4")

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class Penalty:
    id: str
    a: float
    alpha: float
    beta: float


def make_penalty(penalty_id: str, a: float = 1.0) -> Penalty:
    """Build a penalty by id; a is the shape parameter (unused for psi1)."""
    a = float(a)
    if penalty_id not in PENALTY_IDS:
        raise ValueError(
            f"unknown penalty id {penalty_id!r}; expected one of {PENALTY_IDS}"
        )
    if not a > 0.0:
        raise ValueError(f"shape parameter a must be positive, got {a}")
    if penalty_id == "psi1":
        alpha, beta = 1.0, 0.0
    elif penalty_id == "psi2":
        alpha, beta = a, a * a
    else:  # psi3 and psi4 share derivative bounds
        alpha, beta = a, 2.0 * a * a
    return Penalty(id=penalty_id, a=a, alpha=alpha, beta=beta)


def _check_domain(t: ArrayLike) -> tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("penalty argument t must be nonnegative")
    return arr, arr.ndim == 0


def _maybe_scalar(out: np.ndarray, scalar: bool) -> ArrayLike:
    return float(out) if scalar else out


def psi_eval(penalty: Penalty, t: ArrayLike) -> ArrayLike:
    arr, scalar = _check_domain(t)
    a = penalty.a
    if penalty.id == "psi1":
        out = arr.copy() if not scalar else arr
    elif penalty.id == "psi2":
        out = np.log1p(a * arr)
    elif penalty.id == "psi3":
        out = a * arr / (1.0 + a * arr)
    else:
        out = -1.0 / (1.0 + a * arr)
    return _maybe_scalar(out, scalar)


def psi_derivs(penalty: Penalty, t: ArrayLike) -> tuple[ArrayLike, ArrayLike]:
    """First and second derivative of psi at t (elementwise)."""
    arr, scalar = _check_domain(t)
    a = penalty.a
    if penalty.id == "psi1":
        d1 = np.ones_like(arr)
        d2 = np.zeros_like(arr)
    elif penalty.id == "psi2":
        q = 1.0 + a * arr
        d1 = a / q
        d2 = -(a * a) / (q * q)
    else:  # psi3 and psi4 have identical derivatives
        q = 1.0 + a * arr
        d1 = a / (q * q)
        d2 = -2.0 * a * a / (q * q * q)
    return _maybe_scalar(d1, scalar), _maybe_scalar(d2, scalar)


def assumption_A_constants(penalty: Penalty) -> tuple[float, float]:
    """Return (alpha, beta) with psi' in (0, alpha] and psi'' in [-beta, 0]."""
    return penalty.alpha, penalty.beta
