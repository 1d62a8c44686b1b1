"""Interior-point solver for approximate KKT points of the smoothed one-level
program

    min_w f(w)   s.t.   c(w, lam) = 0,   lam >= 0,

where c(w, lam) = grad_w G(w, lam_bar) + lam_1 grad(varphi_mu)(w) is the
stationarity of the smoothed lower level.  Primal variables are (w, lam);
zeta are multipliers of the n equalities, eta the multipliers of lam >= 0.
The KKT residuals (eps1 .. eps5) of this program are the quantities the
outer smoothing loop drives to zero.

Method: log-barrier on lam with primal-dual Newton steps, an inertia
correcting diagonal regularization on the symmetric indefinite system, a
fraction-to-boundary rule, and a backtracking line search on an l1 merit
function.  Constraint curvature uses a Gauss-Newton approximation: the
third derivatives of varphi_mu (and of G in w) are dropped, while the
analytic cross blocks dc/dlam and dc/dw are kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg as sla

from .problem import BilevelProblem
from .regularizer import RegSpec, smoothed_reg

__all__ = [
    "Iterate",
    "KKTResiduals",
    "InnerStats",
    "InnerSolveFailure",
    "MaxIterationsError",
    "LinearSolveError",
    "NonFiniteError",
    "kkt_residuals",
    "solve_approx_kkt",
]

_MU_FLOOR = 1e-300
_DELTA0 = 1e-8
_DELTA_MAX = 1e12
_TAU0 = 0.1
_TAU_SHRINK = 0.2
_FRACTION_TO_BOUNDARY = 0.995
_ARMIJO = 1e-4
_MAX_BACKTRACKS = 40


class NonFiniteError(RuntimeError):
    """NaN or Inf encountered; `component` names the offending quantity."""

    def __init__(self, component: str):
        super().__init__(f"non-finite value encountered in {component}")
        self.component = component


class InnerSolveFailure(RuntimeError):
    """Solve failed; carries the best iterate found and its residuals."""

    def __init__(self, message: str, iterate, residuals, stats):
        super().__init__(message)
        self.iterate = iterate
        self.residuals = residuals
        self.stats = stats


class MaxIterationsError(InnerSolveFailure):
    pass


class LinearSolveError(InnerSolveFailure):
    pass


@dataclass
class Iterate:
    """Primal-dual point: omega (n), lam (r), zeta (n), eta (r)."""

    omega: np.ndarray
    lam: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray

    def copy(self) -> "Iterate":
        return Iterate(
            self.omega.copy(), self.lam.copy(), self.zeta.copy(), self.eta.copy()
        )


@dataclass(frozen=True)
class KKTResiduals:
    """Residuals of the smoothed one-level KKT system and their joint norm."""

    eps1: np.ndarray
    eps2: float
    eps3: np.ndarray
    eps4: np.ndarray
    eps5: float
    norm: float


@dataclass
class InnerStats:
    newton_iters: int = 0
    status: str = "converged"
    final_tau: float = _TAU0
    # per-iteration records (iteration, residual norm, tau, step length)
    trace: list = field(default_factory=list)


class _Blocks:
    """Derivative blocks shared by the residual and the Newton system."""

    __slots__ = ("reg", "f_grad", "G_grad", "G_hess", "A", "B", "c", "reg_grads")

    def __init__(self, problem: BilevelProblem, spec: RegSpec, mu: float, w, lam):
        lam_bar = lam[1:]
        self.reg = smoothed_reg(spec, mu, w)
        self.f_grad = problem.f.grad(w)
        self.G_grad = problem.G_grad(w, lam_bar)
        self.G_hess = problem.G_hess(w, lam_bar)
        self.A = self.G_hess + lam[0] * np.diag(self.reg.hess_diag)
        self.reg_grads = [rj.grad(w) for rj in problem.regs]
        self.B = np.column_stack([self.reg.grad] + self.reg_grads)
        self.c = self.G_grad + lam[0] * self.reg.grad


def _residuals_from(blocks: _Blocks, lam, zeta, eta) -> KKTResiduals:
    eps1 = blocks.f_grad + blocks.A @ zeta
    eps2 = float(blocks.reg.grad @ zeta - eta[0])
    eps3 = np.array([g @ zeta for g in blocks.reg_grads]) - eta[1:]
    eps4 = blocks.c
    eps5 = float(lam @ eta)
    norm = float(
        np.sqrt(
            eps1 @ eps1 + eps2 * eps2 + eps3 @ eps3 + eps4 @ eps4 + eps5 * eps5
        )
    )
    return KKTResiduals(eps1=eps1, eps2=eps2, eps3=eps3, eps4=eps4, eps5=eps5, norm=norm)


def kkt_residuals(
    problem: BilevelProblem, spec: RegSpec, mu: float, iterate: Iterate
) -> KKTResiduals:
    """Evaluate the five KKT residual blocks at an iterate (pure function)."""
    w = np.asarray(iterate.omega, dtype=float)
    lam = np.asarray(iterate.lam, dtype=float)
    blocks = _Blocks(problem, spec, mu, w, lam)
    return _residuals_from(
        blocks, lam, np.asarray(iterate.zeta, dtype=float), np.asarray(iterate.eta, dtype=float)
    )


# --- symmetric indefinite solve with inertia correction -----------------

def _inertia(d: np.ndarray) -> tuple[int, int, int]:
    n = d.shape[0]
    pos = neg = zero = 0
    i = 0
    while i < n:
        if i + 1 < n and d[i, i + 1] != 0.0:
            a, b, c = d[i, i], d[i, i + 1], d[i + 1, i + 1]
            det = a * c - b * b
            tr = a + c
            if det < 0.0:
                pos += 1
                neg += 1
            elif det > 0.0:
                if tr > 0.0:
                    pos += 2
                else:
                    neg += 2
            else:
                zero += 1
                if tr > 0.0:
                    pos += 1
                elif tr < 0.0:
                    neg += 1
                else:
                    zero += 1
            i += 2
        else:
            v = d[i, i]
            if v > 0.0:
                pos += 1
            elif v < 0.0:
                neg += 1
            else:
                zero += 1
            i += 1
    return pos, neg, zero


def _ldl_solve(lu, d, perm, b):
    L = lu[perm]
    y = sla.solve_triangular(L, b[perm], lower=True, unit_diagonal=True)
    ab = np.zeros((3, d.shape[0]))
    ab[0, 1:] = np.diagonal(d, 1)
    ab[1, :] = np.diagonal(d)
    ab[2, :-1] = np.diagonal(d, -1)
    z = sla.solve_banded((1, 1), ab, y)
    v = sla.solve_triangular(L.T, z, lower=False, unit_diagonal=True)
    x = np.empty_like(v)
    x[perm] = v
    return x


def _solve_kkt_system(K: np.ndarray, rhs: np.ndarray, n_primal: int, n_eq: int):
    """Solve the symmetric indefinite system, regularizing until the inertia
    is (n_primal, n_eq, 0).  Returns (solution, delta_used)."""
    if not np.all(np.isfinite(K)):
        raise NonFiniteError("kkt_matrix")
    idx_p = np.arange(n_primal)
    idx_c = np.arange(n_primal, n_primal + n_eq)
    delta = 0.0
    delta_c = 0.0
    while True:
        Kt = K
        if delta > 0.0 or delta_c > 0.0:
            Kt = K.copy()
            Kt[idx_p, idx_p] += delta
            Kt[idx_c, idx_c] -= delta_c
        try:
            lu, d, perm = sla.ldl(Kt, lower=True, check_finite=False)
            pos, neg, zero = _inertia(d)
            if (pos, neg, zero) == (n_primal, n_eq, 0):
                return _ldl_solve(lu, d, perm, rhs), delta
        except np.linalg.LinAlgError:
            zero = 1
        if zero > 0 and delta_c == 0.0:
            delta_c = 1e-10
        delta = _DELTA0 if delta == 0.0 else 10.0 * delta
        if delta > _DELTA_MAX:
            raise _RegularizationExhausted()


class _RegularizationExhausted(Exception):
    pass


def _fraction_to_boundary(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0.0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-_FRACTION_TO_BOUNDARY * v[neg] / dv[neg])))


def _check_finite(name: str, value) -> None:
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(name)


def _lsq_zeta(blocks) -> np.ndarray:
    """Least-squares estimate of the equality multipliers, norm-capped so a
    far-field iterate cannot blow up the merit penalty."""
    zeta = np.linalg.lstsq(blocks.A, -blocks.f_grad, rcond=None)[0]
    scale = float(np.max(np.abs(zeta), initial=0.0))
    if scale > 1e4:
        zeta *= 1e4 / scale
    return zeta


# --- main solver ---------------------------------------------------------

def solve_approx_kkt(
    problem: BilevelProblem,
    spec: RegSpec,
    mu: float,
    eps_hat: float,
    warm_start: Iterate,
    *,
    max_iters: int = 3000,
    fix_lambda: Optional[np.ndarray] = None,
) -> tuple[Iterate, KKTResiduals, InnerStats]:
    """Find an iterate whose KKT residual norm is at most eps_hat.

    The warm start is projected so lam and eta are strictly positive.  On
    budget exhaustion MaxIterationsError is raised carrying the best iterate
    seen; LinearSolveError reports an incurably singular Newton system; NaN
    or Inf anywhere raises NonFiniteError.

    fix_lambda is a testing hook: with lam pinned to the given vector only
    (w, zeta) are solved for, driving the stationarity and feasibility
    blocks (eps1, eps4); the bound multipliers are left untouched.
    """
    mu = float(mu)
    if mu < _MU_FLOOR:
        raise ValueError(f"mu={mu} below the degenerate-smoothing floor {_MU_FLOOR}")
    if eps_hat < 0.0:
        raise ValueError("eps_hat must be nonnegative")
    n, r = problem.n, problem.r

    if fix_lambda is not None:
        return _solve_fixed_lambda(
            problem, spec, mu, eps_hat, warm_start, np.asarray(fix_lambda, float), max_iters
        )

    w = np.array(warm_start.omega, dtype=float)
    lam = np.maximum(np.asarray(warm_start.lam, dtype=float), 1e-8)
    zeta = np.array(warm_start.zeta, dtype=float)
    eta = np.maximum(np.asarray(warm_start.eta, dtype=float), 1e-8)
    if w.shape != (n,) or lam.shape != (r,) or zeta.shape != (n,) or eta.shape != (r,):
        raise ValueError("warm start dimensions do not match the problem")
    _check_finite("warm_start", np.concatenate([w, lam, zeta, eta]))

    stats = InnerStats()
    tau = _TAU0
    nu = 1.0
    alpha = 0.0

    blocks = _Blocks(problem, spec, mu, w, lam)
    res = _residuals_from(blocks, lam, zeta, eta)
    if not np.isfinite(res.norm):
        raise NonFiniteError("kkt_residuals")

    # least-squares multiplier estimate for cold starts
    if res.norm > eps_hat and not zeta.any():
        zeta = _lsq_zeta(blocks)
        res = _residuals_from(blocks, lam, zeta, eta)

    best = (res.norm, Iterate(w, lam, zeta, eta).copy(), res)
    stall = 0

    for it in range(max_iters + 1):
        stats.newton_iters = it
        stats.final_tau = tau
        stats.trace.append((it, res.norm, tau, alpha))
        if res.norm <= eps_hat:
            stats.status = "converged"
            return Iterate(w, lam, zeta, eta), res, stats
        if it == max_iters:
            stats.status = "max_iterations"
            raise MaxIterationsError(
                f"no eps_hat={eps_hat:g} point within {max_iters} Newton steps "
                f"(best residual {best[0]:g})",
                best[1],
                best[2],
                stats,
            )

        # barrier update on the perturbed residual
        r2c = blocks.B.T @ zeta - eta
        comp = lam * eta - tau
        pert = np.sqrt(
            res.eps1 @ res.eps1 + r2c @ r2c + blocks.c @ blocks.c + comp @ comp
        )
        while pert <= 10.0 * tau and tau > 1e-18:
            tau = max(tau * _TAU_SHRINK, 1e-18)
            comp = lam * eta - tau
            pert = np.sqrt(
                res.eps1 @ res.eps1 + r2c @ r2c + blocks.c @ blocks.c + comp @ comp
            )

        # assemble the condensed symmetric system in (dw, dlam, dzeta)
        f_hess = problem.f.hess(w) if problem.f.hess is not None else np.zeros((n, n))
        M = np.empty((n, r))
        M[:, 0] = blocks.reg.hess_diag * zeta
        for j, rj in enumerate(problem.regs):
            M[:, j + 1] = rj.hess(w) @ zeta if rj.hess is not None else 0.0
        sigma = np.clip(eta / lam, 1e-12, 1e16)

        N = n + r + n
        K = np.zeros((N, N))
        K[:n, :n] = f_hess
        K[:n, n : n + r] = M
        K[n : n + r, :n] = M.T
        K[n : n + r, n : n + r] = np.diag(sigma)
        K[:n, n + r :] = blocks.A
        K[n + r :, :n] = blocks.A
        K[n : n + r, n + r :] = blocks.B.T
        K[n + r :, n : n + r] = blocks.B
        rhs = np.concatenate([-res.eps1, -(blocks.B.T @ zeta - tau / lam), -blocks.c])

        try:
            sol, _ = _solve_kkt_system(K, rhs, n + r, n)
        except _RegularizationExhausted:
            stats.status = "linear_solve_failure"
            raise LinearSolveError(
                "KKT system remained singular or indefinite after regularization",
                best[1],
                best[2],
                stats,
            ) from None
        dw = sol[:n]
        dlam = sol[n : n + r]
        dzeta = sol[n + r :]
        deta = tau / lam - eta - (eta / lam) * dlam
        _check_finite("newton_step", sol)

        # l1 merit line search within the fraction-to-boundary box
        alpha_max = _fraction_to_boundary(lam, dlam)
        alpha_eta = _fraction_to_boundary(eta, deta)
        nu_need = 1.2 * float(np.max(np.abs(zeta + dzeta), initial=0.0)) + 0.1
        if nu > 10.0 * nu_need:
            # the multiplier scale shrank; relax the penalty so the merit
            # function stops vetoing Newton steps
            nu = max(nu_need, 0.1 * nu)
        nu = max(nu, nu_need)
        c_l1 = float(np.sum(np.abs(blocks.c)))
        f0 = problem.f.value(w)
        slope_smooth = float(blocks.f_grad @ dw - tau * np.sum(dlam / lam))
        if c_l1 > 1e-12 and slope_smooth - nu * c_l1 > -1e-12:
            nu = max(nu, (slope_smooth + 1e-8) / (0.5 * c_l1))
        merit0 = f0 + nu * c_l1 - tau * float(np.sum(np.log(lam)))
        slope = slope_smooth - nu * c_l1

        alpha = alpha_max
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            w_t = w + alpha * dw
            lam_t = lam + alpha * dlam
            blocks_t = _Blocks(problem, spec, mu, w_t, lam_t)
            merit_t = (
                problem.f.value(w_t)
                + nu * float(np.sum(np.abs(blocks_t.c)))
                - tau * float(np.sum(np.log(lam_t)))
            )
            if np.isfinite(merit_t) and merit_t <= merit0 + _ARMIJO * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            # keep moving with the floor step; the budget bounds the damage
            w_t = w + alpha * dw
            lam_t = lam + alpha * dlam
            blocks_t = _Blocks(problem, spec, mu, w_t, lam_t)

        w, lam, blocks = w_t, lam_t, blocks_t
        zeta = zeta + alpha * dzeta
        eta = eta + alpha_eta * deta
        # a run of floor-length steps means the multiplier estimate no longer
        # matches the local geometry; refresh it from least squares
        stall = stall + 1 if alpha < 1e-6 else 0
        if stall >= 3:
            zeta = _lsq_zeta(blocks)
            stall = 0
        # keep eta compatible with the barrier (bounded dual safeguard)
        eta = np.clip(eta, tau / (1e10 * lam), 1e10 * tau / lam + 1e-12)
        _check_finite("iterate", np.concatenate([w, lam, zeta, eta]))

        res = _residuals_from(blocks, lam, zeta, eta)
        if not np.isfinite(res.norm):
            raise NonFiniteError("kkt_residuals")
        if res.norm < best[0]:
            best = (res.norm, Iterate(w, lam, zeta, eta).copy(), res)

    raise AssertionError("unreachable")


def _solve_fixed_lambda(problem, spec, mu, eps_hat, warm_start, lam, max_iters):
    """Newton on (w, zeta) with lam pinned; drives eps1 and eps4 only."""
    n = problem.n
    w = np.array(warm_start.omega, dtype=float)
    zeta = np.array(warm_start.zeta, dtype=float)
    eta = np.array(warm_start.eta, dtype=float)
    stats = InnerStats(final_tau=0.0)
    nu = 1.0
    alpha = 0.0

    def pinned_norm(blocks, zeta):
        e1 = blocks.f_grad + blocks.A @ zeta
        return float(np.sqrt(e1 @ e1 + blocks.c @ blocks.c)), e1

    blocks = _Blocks(problem, spec, mu, w, lam)
    norm0, e1 = pinned_norm(blocks, zeta)
    if norm0 > eps_hat and not zeta.any():
        zeta = np.linalg.lstsq(blocks.A, -blocks.f_grad, rcond=None)[0]
        norm0, e1 = pinned_norm(blocks, zeta)
    best = (norm0, Iterate(w.copy(), lam.copy(), zeta.copy(), eta.copy()))

    for it in range(max_iters + 1):
        stats.newton_iters = it
        stats.trace.append((it, norm0, 0.0, alpha))
        if norm0 <= eps_hat:
            stats.status = "converged"
            final = Iterate(w, lam.copy(), zeta, eta)
            return final, kkt_residuals(problem, spec, mu, final), stats
        if it == max_iters:
            stats.status = "max_iterations"
            raise MaxIterationsError(
                f"pinned solve did not reach eps_hat={eps_hat:g} "
                f"(best residual {best[0]:g})",
                best[1],
                kkt_residuals(problem, spec, mu, best[1]),
                stats,
            )

        f_hess = problem.f.hess(w) if problem.f.hess is not None else np.zeros((n, n))
        K = np.zeros((2 * n, 2 * n))
        K[:n, :n] = f_hess
        K[:n, n:] = blocks.A
        K[n:, :n] = blocks.A
        rhs = np.concatenate([-e1, -blocks.c])
        try:
            sol, _ = _solve_kkt_system(K, rhs, n, n)
        except _RegularizationExhausted:
            stats.status = "linear_solve_failure"
            raise LinearSolveError(
                "pinned KKT system remained singular after regularization",
                best[1],
                kkt_residuals(problem, spec, mu, best[1]),
                stats,
            ) from None
        dw, dzeta = sol[:n], sol[n:]
        _check_finite("newton_step", sol)

        c_l1 = float(np.sum(np.abs(blocks.c)))
        nu = max(nu, 1.2 * float(np.max(np.abs(zeta + dzeta), initial=0.0)) + 0.1)
        slope_smooth = float(blocks.f_grad @ dw)
        if c_l1 > 1e-12 and slope_smooth - nu * c_l1 > -1e-12:
            nu = max(nu, (slope_smooth + 1e-8) / (0.5 * c_l1))
        merit0 = problem.f.value(w) + nu * c_l1
        slope = slope_smooth - nu * c_l1

        alpha = 1.0
        for _ in range(_MAX_BACKTRACKS):
            w_t = w + alpha * dw
            blocks_t = _Blocks(problem, spec, mu, w_t, lam)
            merit_t = problem.f.value(w_t) + nu * float(np.sum(np.abs(blocks_t.c)))
            if np.isfinite(merit_t) and merit_t <= merit0 + _ARMIJO * alpha * slope:
                break
            alpha *= 0.5

        w, blocks = w_t, blocks_t
        zeta = zeta + alpha * dzeta
        _check_finite("iterate", np.concatenate([w, zeta]))
        norm0, e1 = pinned_norm(blocks, zeta)
        if not np.isfinite(norm0):
            raise NonFiniteError("kkt_residuals")
        if norm0 < best[0]:
            best = (norm0, Iterate(w.copy(), lam.copy(), zeta.copy(), eta.copy()))

    raise AssertionError("unreachable")
