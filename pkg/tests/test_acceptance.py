"""End-to-end acceptance suite.

Ten independent checks, one per release gate: exact property suites for the
smoothing layer (01-05, 09), solver correctness against planted stationary
points and a brute-force oracle (06, 07), a scaled-down reproduction of the
benchmark table trends (08), and byte-level determinism of the reporting
pipeline (10).  Each test prints one `acceptance NN <label>: PASS` line when
it succeeds; timed checks assert their wall-clock budget.
"""

import time

import numpy as np
import pytest
from conftest import build_stationary_case, grid_search_oracle, one_dim_problem
from scipy.integrate import quad

from smoothbilevel import (
    KERNEL_IDS,
    PENALTY_IDS,
    ExperimentConfig,
    OuterConfig,
    RegSpec,
    assumption_A_constants,
    kkt_residuals,
    make_kernel,
    make_penalty,
    make_smooth_abs,
    psi_derivs,
    psi_eval,
    run_algorithm1,
    run_experiment,
    smoothed_reg,
    solve_approx_kkt,
)

GRID = np.linspace(-3.0, 3.0, 1001)


def quadrature_kappa(kernel):
    """kappa = integral of |s| rho(s) ds, computed independently."""
    upper = kernel.support if np.isfinite(kernel.support) else np.inf
    value, err = quad(lambda s: s * kernel.eval(s), 0.0, upper)
    return 2.0 * value, 2.0 * err


def zero_timer():
    return 0.0


def test_01_sandwich_bounds_with_quadrature_constants():
    started = time.perf_counter()
    for kid in KERNEL_IDS:
        kernel = make_kernel(kid)
        smooth = make_smooth_abs(kernel)
        kappa, quad_err = quadrature_kappa(kernel)
        assert quad_err < 1e-7
        for mu in (1.0, 0.1, 0.01):
            gap = smooth.phi(mu, GRID) - np.abs(GRID)
            assert np.all(gap >= -1e-12)
            assert np.all(gap <= (kappa + quad_err) * mu + 1e-12)
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    print("acceptance 01 sandwich bounds: PASS (%.2f s)" % elapsed)


def test_02_pointwise_ordering_of_the_six_smoothers():
    mu = 0.25
    lower = np.abs(GRID)
    for kid in ("rho1", "rho2", "rho3", "rho4", "rho5", "rho6"):
        curve = make_smooth_abs(make_kernel(kid)).phi(mu, GRID)
        assert np.all(curve >= lower - 1e-12), kid
        lower = curve
    print("acceptance 02 smoother ordering: PASS")


def test_03_tail_mass_lower_bound():
    grid = np.logspace(-3.0, 3.0, 200)
    for kid in KERNEL_IDS:
        kernel = make_kernel(kid)
        for S in grid:
            upper = min(S, kernel.support)
            mass, _ = quad(lambda s: kernel.eval(s), 0.0, upper)
            assert 2.0 * mass >= 1.0 - 4.0 / (S * S + 4.0) - 1e-9, (kid, S)
    print("acceptance 03 tail mass bound: PASS")


@pytest.mark.filterwarnings("ignore::smoothbilevel.RegularizerWarning")
def test_04_regularizer_derivative_oracles():
    started = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(42))
    mu = 0.37
    num_points, dim = 100, 5
    for kid in KERNEL_IDS:
        smooth = make_smooth_abs(make_kernel(kid))
        for pid in PENALTY_IDS:
            penalty = make_penalty(pid)
            for p in (0.5, 1.0):
                spec = RegSpec(p=p, penalty=penalty, smooth=smooth)
                pts = rng.uniform(0.1, 2.0, size=(num_points, dim))
                pts *= rng.choice([-1.0, 1.0], size=pts.shape)
                # keep clear of the kink of the compactly supported kernels
                near = np.abs(np.abs(pts) - mu) < 1e-2
                pts[near] += np.sign(pts[near]) * 2e-2
                flat = pts.ravel()

                ev = smoothed_reg(spec, mu, flat)
                h = 1e-6 * np.maximum(1.0, np.abs(flat))
                up = psi_eval(penalty, smooth.phi(mu, flat + h) ** p)
                dn = psi_eval(penalty, smooth.phi(mu, flat - h) ** p)
                fd_grad = (up - dn) / (2.0 * h)
                denom = np.maximum(np.abs(fd_grad), 1e-10)
                assert np.max(np.abs(ev.grad - fd_grad) / denom) <= 1e-6, (kid, pid, p)

                hh = 1e-5 * np.maximum(1.0, np.abs(flat))
                gup = smoothed_reg(spec, mu, flat + hh).grad
                gdn = smoothed_reg(spec, mu, flat - hh).grad
                fd_hess = (gup - gdn) / (2.0 * hh)
                denom = np.maximum(np.abs(fd_hess), 1e-8)
                assert np.max(np.abs(ev.hess_diag - fd_hess) / denom) <= 1e-5, (
                    kid, pid, p,
                )
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0
    print("acceptance 04 derivative oracles: PASS (%.2f s)" % elapsed)


def test_05_penalty_derivative_ranges():
    rng = np.random.Generator(np.random.Philox(17))
    for pid in PENALTY_IDS:
        penalty = make_penalty(pid)
        alpha, beta = assumption_A_constants(penalty)
        t = rng.uniform(0.0, 100.0, 1000)
        d1, d2 = psi_derivs(penalty, t)
        assert np.all(d1 > 0.0), pid
        assert np.all(d1 <= alpha), pid
        assert np.all(d2 <= 0.0), pid
        assert np.all(d2 >= -beta), pid
    print("acceptance 05 penalty derivative ranges: PASS")


def test_06_inner_solver_against_planted_stationary_points():
    eps_hat = 1e-6
    wins = 0
    for seed in range(20):
        problem, spec, mu, exact = build_stationary_case(seed)
        rng = np.random.Generator(np.random.Philox(1000 + seed))
        start = exact.copy()
        start.omega = exact.omega + rng.uniform(-0.05, 0.05, problem.n)
        start.lam = np.full(problem.r, 1e-4)
        start.zeta = np.zeros(problem.n)
        start.eta = np.ones(problem.r)
        try:
            iterate, res, _ = solve_approx_kkt(problem, spec, mu, eps_hat, start)
        except Exception:
            continue
        assert res.norm <= eps_hat
        recomputed = kkt_residuals(problem, spec, mu, iterate)
        assert abs(recomputed.norm - res.norm) <= 1e-12
        wins += 1
    assert wins >= 18
    print("acceptance 06 planted stationary points: PASS (%d/20)" % wins)


def test_07_one_dimensional_oracle_equivalence():
    started = time.perf_counter()
    oracle = grid_search_oracle()
    result = run_algorithm1(one_dim_problem(), RegSpec(
        p=0.5, penalty=make_penalty("psi1"),
        smooth=make_smooth_abs(make_kernel("rho6")),
    ))
    elapsed = time.perf_counter() - started
    assert result.success
    assert abs(result.obj - oracle["obj"]) <= 1e-2
    assert elapsed < 10.0
    print("acceptance 07 one-dimensional oracle: PASS (obj %.2e vs %.2e, %.2f s)"
          % (result.obj, oracle["obj"], elapsed))


@pytest.mark.filterwarnings("ignore::smoothbilevel.RegularizerWarning")
def test_08_desk_scale_table_trends():
    started = time.perf_counter()
    reports = {}
    for p in (0.5, 1.0):
        config = ExperimentConfig(
            n=50, m1=100, m2=100, num_instances=5, p=p, penalty="psi1",
            kernels=("rho1", "rho2", "rho3", "rho4", "rho6"), seed=0,
            noise=0.01, jobs=1, outer=OuterConfig(),
        )
        reports[p] = run_experiment(config)
    elapsed = time.perf_counter() - started

    stats = {}
    for p, report in reports.items():
        rows = report.rows
        winners = [row for row in rows if row.success]
        stats[p] = {
            "success_pct": 100.0 * len(winners) / len(rows),
            "sparsity": float(np.mean([row.sparsity_pct for row in winners])),
            "obj": float(np.mean([row.obj for row in winners])),
        }
        assert stats[p]["success_pct"] >= 80.0

    assert stats[0.5]["sparsity"] > stats[1.0]["sparsity"]
    assert stats[0.5]["obj"] <= stats[1.0]["obj"]

    def mean_mu_end(kernel_id):
        values = [
            row.mu_end
            for report in reports.values()
            for row in report.rows
            if row.kernel == kernel_id and row.success
        ]
        return float(np.mean(values))

    assert mean_mu_end("rho6") <= mean_mu_end("rho1")
    assert elapsed < 900.0
    print(
        "acceptance 08 desk-scale trends: PASS "
        "(success %.0f%%/%.0f%%, sparsity %.1f%% vs %.1f%%, "
        "obj %.2e vs %.2e, %.0f s)"
        % (
            stats[0.5]["success_pct"], stats[1.0]["success_pct"],
            stats[0.5]["sparsity"], stats[1.0]["sparsity"],
            stats[0.5]["obj"], stats[1.0]["obj"], elapsed,
        )
    )


def test_09_hessian_diagonal_diverges_along_the_square_path():
    spec = RegSpec(
        p=0.5, penalty=make_penalty("psi1"), smooth=make_smooth_abs(make_kernel("rho6"))
    )
    mu = 1.0
    crossed = False
    while mu >= 1e-8:
        point = np.array([mu * mu, 1.0])
        ev = smoothed_reg(spec, mu, point)
        if abs(ev.hess_diag[0]) > 1e6:
            crossed = True
            break
        mu *= 0.8
    assert crossed
    print("acceptance 09 hessian divergence: PASS (mu %.3e)" % mu)


def test_10_byte_identical_reports(tmp_path):
    config = ExperimentConfig(
        n=4, m1=6, m2=6, num_instances=2, p=0.5, kernels=("rho1", "rho6"),
        seed=3, outer=OuterConfig(max_outer=40),
    )
    first = run_experiment(config, out_dir=tmp_path / "a", timer=zero_timer)
    second = run_experiment(config, out_dir=tmp_path / "b", timer=zero_timer)
    assert first.results_csv.read_bytes() == second.results_csv.read_bytes()
    print("acceptance 10 determinism: PASS")
