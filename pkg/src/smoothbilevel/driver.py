"""Outer smoothing loop and the scaled stationarity certificate.

The driver repeatedly calls the inner solver while shrinking the smoothing
parameter mu and the inner tolerance eps_hat geometrically, and stops as
soon as the scaled bilevel KKT (SB-KKT) residual of the returned iterate
falls below a tolerance, or mu hits its floor.  The SB-KKT system is the
limiting stationarity condition of the nonsmooth program; its residuals
are evaluated directly on the nonsmooth data (no smoothing), with an
active set I = { j : |w_j| <= zero_tol }.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .inner_solver import (
    InnerSolveFailure,
    Iterate,
    solve_approx_kkt,
)
from .penalties import psi_derivs
from .problem import BilevelProblem
from .regularizer import RegSpec

__all__ = [
    "OuterConfig",
    "SBKKTResiduals",
    "OuterRecord",
    "RunResult",
    "sb_kkt_residuals",
    "run_algorithm1",
]


@dataclass(frozen=True)
class OuterConfig:
    """Parameters of the outer smoothing loop.

    mu and eps_hat shrink by beta1 and beta2 per iteration.  The run stops
    with success when the SB-KKT residual norm drops below sbkkt_tol, and
    with failure when the next mu would be at or below mu_floor (or the
    outer budget is exhausted).
    """

    mu0: float = 1.0
    beta1: float = 0.8
    eps_hat0: float = 0.1
    beta2: float = 0.8
    sbkkt_tol: float = 1e-2
    mu_floor: float = 1e-8
    zero_tol: float = 1e-5
    max_outer: int = 200
    inner_max_iters: int = 3000

    def __post_init__(self):
        if not self.mu0 > 0.0:
            raise ValueError("mu0 must be positive")
        if not 0.0 < self.beta1 < 1.0:
            raise ValueError("beta1 must lie in (0, 1)")
        if not 0.0 < self.beta2 < 1.0:
            raise ValueError("beta2 must lie in (0, 1)")
        if self.eps_hat0 < 0.0:
            raise ValueError("eps_hat0 must be nonnegative")


@dataclass(frozen=True)
class SBKKTResiduals:
    """Residual blocks of the scaled bilevel KKT system.

    r1: scaled upper stationarity (n,)
    r2: scaled lower stationarity (n,)
    r3: free-coordinate multiplier identity (scalar)
    r4: zeta on the active set (len(active_set),)
    r5: multiplier identities of the smooth regularizers (r-1,)
    r6: complementarity lam . eta (scalar)
    """

    r1: np.ndarray
    r2: np.ndarray
    r3: float
    r4: np.ndarray
    r5: np.ndarray
    r6: float
    active_set: np.ndarray
    norm: float

    def block_norms(self) -> dict:
        return {
            "r1": float(np.linalg.norm(self.r1)),
            "r2": float(np.linalg.norm(self.r2)),
            "r3": abs(self.r3),
            "r4": float(np.linalg.norm(self.r4)),
            "r5": float(np.linalg.norm(self.r5)),
            "r6": abs(self.r6),
        }


def sb_kkt_residuals(
    problem: BilevelProblem, spec: RegSpec, iterate: Iterate, zero_tol: float = 1e-5
) -> SBKKTResiduals:
    """Evaluate the SB-KKT residuals at an iterate against the nonsmooth data."""
    w = np.asarray(iterate.omega, dtype=float)
    lam = np.asarray(iterate.lam, dtype=float)
    zeta = np.asarray(iterate.zeta, dtype=float)
    eta = np.asarray(iterate.eta, dtype=float)
    p = spec.p
    lam_bar = lam[1:]

    absw = np.abs(w)
    active = absw <= zero_tol
    free = ~active
    t = absw ** p
    d1, d2 = psi_derivs(spec.penalty, t)

    G_hess = problem.G_hess(w, lam_bar)
    H = (
        (w * w)[:, None] * G_hess
        + lam[0] * p * (p - 1.0) * np.diag(t * d1)
        + lam[0] * p * p * np.diag(absw ** (2.0 * p) * d2)
    )
    r1 = w * w * problem.f.grad(w) + H @ zeta
    r2 = w * problem.G_grad(w, lam_bar) + p * lam[0] * t * d1

    if np.any(free):
        r3 = float(
            p
            * np.sum(
                np.sign(w[free]) * absw[free] ** (p - 1.0) * d1[free] * zeta[free]
            )
            - eta[0]
        )
    else:
        r3 = float(-eta[0])
    r4 = zeta[active]
    r5 = np.array([rj.grad(w) @ zeta for rj in problem.regs]) - eta[1:]
    r6 = float(lam @ eta)

    norm = float(
        np.sqrt(r1 @ r1 + r2 @ r2 + r3 * r3 + r4 @ r4 + r5 @ r5 + r6 * r6)
    )
    return SBKKTResiduals(
        r1=r1,
        r2=r2,
        r3=r3,
        r4=r4,
        r5=r5,
        r6=r6,
        active_set=np.flatnonzero(active),
        norm=norm,
    )


@dataclass(frozen=True)
class OuterRecord:
    k: int
    mu: float
    eps_hat: float
    inner_iters: int
    inner_status: str
    sbkkt_norm: float
    sparsity_pct: float
    obj: float


@dataclass
class RunResult:
    """Outcome of one smoothing run; iterate is the best-certificate point."""

    iterate: Iterate
    sbkkt: SBKKTResiduals
    history: list[OuterRecord]
    success: bool
    termination: str  # "sbkkt" | "mu_floor" | "max_outer"
    outer_iters: int
    mu_end: float
    obj: float
    sparsity_pct: float


def run_algorithm1(
    problem: BilevelProblem,
    spec: RegSpec,
    config: OuterConfig = OuterConfig(),
    initial_omega: Optional[np.ndarray] = None,
) -> RunResult:
    """Run the smoothing loop: solve, certify, shrink mu, warm-start, repeat.

    Each outer step k solves the smoothed problem at (mu_k, eps_hat_k) from
    the previous iterate, then evaluates the SB-KKT residual of the result.
    Inner max-iteration and linear-solve failures are recorded in the
    history and the loop continues from the failure's best iterate;
    non-finite errors propagate.  The reported iterate is the one with the
    smallest SB-KKT norm seen.
    """
    n, r = problem.n, problem.r
    if initial_omega is None:
        w0 = 100.0 * np.ones(n)
    else:
        w0 = np.asarray(initial_omega, dtype=float).copy()
    current = Iterate(omega=w0, lam=np.ones(r), zeta=np.zeros(n), eta=np.ones(r))

    mu = config.mu0
    eps_hat = config.eps_hat0
    history: list[OuterRecord] = []
    best: Optional[tuple[float, Iterate, SBKKTResiduals]] = None
    termination = "max_outer"
    mu_next = config.beta1 * mu

    for k in range(config.max_outer):
        # warm start is the primal pair (omega, lam) only; the multipliers
        # restart fresh so every solve runs its barrier phase from the
        # interior (zeta = 0 triggers the least-squares estimate)
        warm = Iterate(
            omega=current.omega,
            lam=current.lam,
            zeta=np.zeros(n),
            eta=np.ones(r),
        )
        try:
            current, _, stats = solve_approx_kkt(
                problem, spec, mu, eps_hat, warm, max_iters=config.inner_max_iters
            )
            inner_status = stats.status
            inner_iters = stats.newton_iters
        except InnerSolveFailure as failure:
            current = failure.iterate
            inner_status = failure.stats.status
            inner_iters = failure.stats.newton_iters

        sb = sb_kkt_residuals(problem, spec, current, config.zero_tol)
        sparsity = 100.0 * float(np.mean(np.abs(current.omega) <= config.zero_tol))
        history.append(
            OuterRecord(
                k=k,
                mu=mu,
                eps_hat=eps_hat,
                inner_iters=inner_iters,
                inner_status=inner_status,
                sbkkt_norm=sb.norm,
                sparsity_pct=sparsity,
                obj=problem.f.value(current.omega),
            )
        )
        if best is None or sb.norm < best[0]:
            best = (sb.norm, current.copy(), sb)

        mu_next = config.beta1 * mu
        if sb.norm < config.sbkkt_tol:
            termination = "sbkkt"
            break
        if mu_next <= config.mu_floor:
            termination = "mu_floor"
            break
        mu = mu_next
        eps_hat = config.beta2 * eps_hat

    assert best is not None
    success = termination == "sbkkt"
    reported = best[1]
    return RunResult(
        iterate=reported,
        sbkkt=best[2],
        history=history,
        success=success,
        termination=termination,
        outer_iters=len(history),
        mu_end=mu_next,
        obj=problem.f.value(reported.omega),
        sparsity_pct=100.0 * float(np.mean(np.abs(reported.omega) <= config.zero_tol)),
    )
