"""Exact and smoothed regularizer values, derivatives, and the gap bounds."""

import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smoothbilevel import (
    KERNEL_IDS,
    RegSpec,
    RegularizerWarning,
    exact_reg,
    make_kernel,
    make_penalty,
    make_smooth_abs,
    smoothed_reg,
    smoothed_reg_gap,
)


def spec_for(kid="rho6", pid="psi1", p=0.5, a=1.0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegularizerWarning)
        return RegSpec(
            p=p, penalty=make_penalty(pid, a), smooth=make_smooth_abs(make_kernel(kid))
        )


# --- exact values ---------------------------------------------------------

def test_exact_reg_simple_values():
    assert exact_reg(spec_for(pid="psi1", p=0.5), np.array([4.0, 0.0])) == 2.0
    assert exact_reg(spec_for(pid="psi2", p=1.0), np.zeros(7)) == 0.0
    assert exact_reg(spec_for(pid="psi3", p=0.5), np.array([1.0, -1.0])) == pytest.approx(1.0)


def test_spec_validates_exponent():
    for bad in (0.0, -0.3, 1.2):
        with pytest.raises(ValueError, match="exponent"):
            spec_for(p=bad)


def test_compact_kernel_with_p1_warns():
    with pytest.warns(RegularizerWarning, match="compact support"):
        RegSpec(p=1.0, penalty=make_penalty("psi1"), smooth=make_smooth_abs(make_kernel("rho1")))


@pytest.mark.parametrize("kid,p", [("rho6", 1.0), ("rho4", 1.0), ("rho1", 0.5)])
def test_no_warning_for_covered_cases(kid, p):
    with warnings.catch_warnings():
        warnings.simplefilter("error", RegularizerWarning)
        RegSpec(p=p, penalty=make_penalty("psi1"), smooth=make_smooth_abs(make_kernel(kid)))


# --- smoothed evaluation ---------------------------------------------------

def test_gradient_vanishes_at_origin():
    for kid in KERNEL_IDS:
        for p in (0.5, 1.0):
            out = smoothed_reg(spec_for(kid=kid, p=p), 0.7, np.zeros(4))
            assert np.all(out.grad == 0.0)


def test_rejects_nonpositive_mu():
    with pytest.raises(ValueError, match="positive"):
        smoothed_reg(spec_for(), 0.0, np.ones(3))


def _fd_sample(rng, n, mu):
    # entries bounded away from 0 and from the compact-branch knots |x| = mu
    w = rng.uniform(0.1, 2.0, n) * rng.choice([-1.0, 1.0], n)
    w[np.abs(np.abs(w) - mu) < 1e-3] += 0.01
    return w


@pytest.mark.parametrize("kid", KERNEL_IDS)
@pytest.mark.parametrize("pid", ["psi1", "psi2", "psi3", "psi4"])
@pytest.mark.parametrize("p", [0.5, 1.0])
def test_derivatives_match_finite_differences(kid, pid, p):
    spec = spec_for(kid=kid, pid=pid, p=p)
    mu = 0.05
    rng = np.random.Generator(np.random.Philox(3))
    for _ in range(25):
        w = _fd_sample(rng, 4, mu)
        out = smoothed_reg(spec, mu, w)
        for j in range(w.size):
            h = 1e-6 * max(1.0, abs(w[j]))
            wp, wm = w.copy(), w.copy()
            wp[j] += h
            wm[j] -= h
            fd_g = (smoothed_reg(spec, mu, wp).value - smoothed_reg(spec, mu, wm).value) / (2 * h)
            assert fd_g == pytest.approx(out.grad[j], rel=1e-6, abs=1e-9)
            fd_h = (smoothed_reg(spec, mu, wp).grad[j] - smoothed_reg(spec, mu, wm).grad[j]) / (2 * h)
            assert fd_h == pytest.approx(out.hess_diag[j], rel=1e-5, abs=1e-8)


def test_extreme_smoothing_scale_stays_finite():
    # rho1 at mu = 1e-160 drives phi below the log-space power threshold
    for kid, mu in (("rho6", 1e-100), ("rho1", 1e-160)):
        out = smoothed_reg(spec_for(kid=kid, p=0.5), mu, np.zeros(2))
        assert np.all(np.isfinite(out.grad))
        assert np.all(np.isfinite(out.hess_diag))
        assert out.hess_diag[0] > 0.0


# --- gap between smoothed and exact ----------------------------------------

def test_gap_examples():
    # vanishing smoothing leaves essentially no gap
    assert smoothed_reg_gap(spec_for(kid="rho6", pid="psi1", p=1.0), 1e-9, np.array([1.0, 2.0, 3.0])) < 1e-7
    # compact support: identical to |x| once every entry clears mu
    for kid in ("rho1", "rho2", "rho3"):
        assert smoothed_reg_gap(spec_for(kid=kid, pid="psi1", p=1.0), 0.5, np.array([0.6, -1.0, 2.0])) == 0.0
    # at the origin the rho6 smoother sits exactly 2 mu above |x| per entry
    n = 5
    assert smoothed_reg_gap(spec_for(kid="rho6", pid="psi1", p=1.0), 1.0, np.zeros(n)) == 2.0 * n


def test_gap_decays_monotonically_as_mu_shrinks():
    spec = spec_for(kid="rho4", pid="psi2", p=0.5)
    w = np.array([0.0, 0.3, -1.2, 4.0])
    gaps = [smoothed_reg_gap(spec, 0.8 ** k, w) for k in range(60)]
    assert all(g2 <= g1 + 1e-15 for g1, g2 in zip(gaps[:-1], gaps[1:]))
    # the entry at 0 dominates the limit: its gap scales like sqrt(kappa mu)
    assert gaps[-1] < 5e-3
    assert gaps[-1] < 5e-3 * gaps[0]


@settings(derandomize=True, deadline=None, max_examples=150)
@given(
    kid=st.sampled_from(KERNEL_IDS),
    pid=st.sampled_from(["psi1", "psi2", "psi3", "psi4"]),
    p=st.sampled_from([0.5, 1.0]),
    mu=st.floats(1e-6, 10.0),
    w=st.lists(st.floats(-100.0, 100.0), min_size=1, max_size=6),
)
def test_property_gap_nonnegative(kid, pid, p, mu, w):
    gap = smoothed_reg_gap(spec_for(kid=kid, pid=pid, p=p), mu, np.array(w))
    assert gap >= -1e-12


def test_hessian_diverges_along_vanishing_coordinate():
    # p < 1: the curvature at a coordinate shrinking like mu^2 blows up
    spec = spec_for(kid="rho6", pid="psi1", p=0.5)
    mu, seen = 1.0, 0.0
    while mu >= 1e-8:
        h = smoothed_reg(spec, mu, np.array([mu * mu, 1.0])).hess_diag[0]
        seen = max(seen, abs(h))
        if seen > 1e6:
            break
        mu *= 0.8
    assert seen > 1e6
    assert mu >= 1e-8
