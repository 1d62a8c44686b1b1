"""Shared test helpers: instances with a known exact stationary point.

The construction plants a strictly complementary KKT point of the smoothed
one-level program with p = 1 and the identity penalty: pick a positive
coefficient vector theta0 and positive multipliers zeta0, make the lower
level stationary at theta0 with lam = 0 (b2 = A2 theta0), then choose b1 so
upper stationarity holds with exactly those multipliers, and read off the
bound multipliers eta > 0 from the remaining two equations.  Every residual
block is then zero at (theta0, 0, zeta0, eta) up to the two linear solves
used in the construction.
"""

from pathlib import Path

import numpy as np
import pytest

from smoothbilevel import (
    Iterate,
    RegSpec,
    make_elastic_net,
    make_kernel,
    make_penalty,
    make_smooth_abs,
)


def one_dim_problem():
    """f = (w-1)^2/2, g = (w-2)^2/2, R2 = w^2: the planted certificate point
    is w=1 with lam=(2, 0), zeta=0, eta=(0, 0)."""
    return make_elastic_net(
        A1=np.array([[1.0]]), b1=np.array([1.0]),
        A2=np.array([[1.0]]), b2=np.array([2.0]),
        p=0.5, penalty=make_penalty("psi1"),
    )


def half_power_spec():
    return RegSpec(
        p=0.5, penalty=make_penalty("psi1"), smooth=make_smooth_abs(make_kernel("rho6"))
    )


def grid_search_oracle(step=1e-3, top=5.0):
    """Brute-force reference for the 1-D instance: for each lam1 on the grid,
    enumerate the local minimizers of (w-2)^2/2 + lam1 sqrt(|w|) (the origin
    and the outer root of the cubic 2 s^3 - 4 s + lam1 in s = sqrt(w)), then
    return the (lam1, w, obj) triple minimizing the upper objective."""
    best = (np.inf, None, None)
    for lam1 in np.arange(0.0, top + step / 2, step):
        candidates = [0.0]
        roots = np.roots([2.0, 0.0, -4.0, lam1])
        for s in roots:
            if abs(s.imag) < 1e-12 and s.real > 0.0:
                w = float(s.real ** 2)
                # local minimum of the lower level needs positive curvature
                if lam1 == 0.0 or 1.0 - lam1 / (4.0 * w ** 1.5) > 0.0:
                    candidates.append(w)
        for w in candidates:
            obj = 0.5 * (w - 1.0) ** 2
            if obj < best[0]:
                best = (obj, float(lam1), w)
    return {"obj": best[0], "lam1": best[1], "omega": best[2]}


def build_stationary_case(seed: int, n: int = 10, m: int = 20, mu: float = 0.3):
    """Return (problem, spec, mu, exact Iterate) with a planted KKT point."""
    rng = np.random.Generator(np.random.Philox(seed))
    A1 = rng.random((m, n))
    A2 = rng.random((m, n))
    theta0 = rng.uniform(0.5, 2.0, n)
    zeta0 = rng.uniform(0.5, 1.5, n)

    b2 = A2 @ theta0
    v = -(A2.T @ A2) @ zeta0
    b1 = A1 @ (theta0 - np.linalg.solve(A1.T @ A1, v))

    penalty = make_penalty("psi1")
    smooth = make_smooth_abs(make_kernel("rho6"))
    spec = RegSpec(p=1.0, penalty=penalty, smooth=smooth)
    problem = make_elastic_net(A1, b1, A2, b2, p=1.0, penalty=penalty)

    dphi = np.asarray(smooth.phi_prime(mu, theta0))
    eta = np.array([float(dphi @ zeta0), float(2.0 * theta0 @ zeta0)])
    exact = Iterate(
        omega=theta0, lam=np.zeros(2), zeta=zeta0, eta=eta
    )
    return problem, spec, mu, exact


@pytest.fixture
def stationary_case_factory():
    return build_stationary_case


@pytest.fixture
def repo_root():
    return Path(__file__).resolve().parents[1]
