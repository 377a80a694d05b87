"""Acceptance suite: ten end-to-end properties of the solver.

Each test prints one PASS line with its measured evidence; the suite is
the contract the package ships against.  Budgeted benchmark runs use a
total inner-step budget of 300, mirroring the documented experiment scale.
"""

import csv
import time
from dataclasses import replace

import numpy as np
import pytest

from ncsdp.benchmarks import (
    analytic_scalar_problem,
    psf_box_lipschitz,
    psf_initial_point,
    scalar_merit_minimum,
)
from ncsdp.certificates import grad_lagrangian, hess_lagrangian
from ncsdp.cli import main
from ncsdp.inner import (
    FixedLipschitz,
    IpmParams,
    check_eps_sosp,
    run_inner,
    sigma_guarantees,
)
from ncsdp.linalg import SymMat
from ncsdp.merit import (
    MeritParams,
    lambda_surrogate,
    merit_grad_Z,
    merit_grad_x,
    merit_hess_xx,
    merit_value,
)
from ncsdp.outer import run_outer
from ncsdp.primal import primal_params, primal_start, run_outer_primal
from ncsdp.problem import Iterate
from ncsdp.runner import (
    ProblemChoice,
    ScheduleChoice,
    SolverChoice,
    build_ipm,
    build_problem,
    build_schedule,
    build_start,
)
from ncsdp.verify import (
    barrier_curvature_matrix,
    fd_gradient,
    fd_hessian,
    lipschitz_violations,
    random_spd,
    rel_err,
    sample_iterate,
    step_invariant_violations,
)

BUDGET = 300
SEEDS = (1, 2, 3, 4, 5, 6)
PROC_NUM = {"dual_grad": 1, "primal_grad": 2, "neg_curvature": 3}


# --- shared fixtures --------------------------------------------------------

@pytest.fixture(scope="session")
def psf_runs():
    """Budgeted benchmark runs: 6 seeds x {with, without} curvature steps."""
    runs = {}
    for seed in SEEDS:
        for method in ("pdipm", "pdipm-no-nc"):
            choice = ProblemChoice()
            prob, _ = build_problem(choice, seed)
            sched = build_schedule(ScheduleChoice())
            start = build_start(prob, choice, seed, sched.mu_init)
            ipm = build_ipm(SolverChoice(method=method), sched)
            res = run_outer(prob, start, sched, ipm, total_step_budget=BUDGET)
            runs[seed, method] = (prob, start, res, ipm)
    return runs


@pytest.fixture(scope="session")
def scalar_run():
    """Full-depth run on the one-dimensional analytic model."""
    choice = ProblemChoice(kind="scalar", c=1.0)
    prob, _ = build_problem(choice, seed=1)
    sched = build_schedule(ScheduleChoice())
    start = build_start(prob, choice, 1, sched.mu_init)
    ipm = build_ipm(SolverChoice(), sched)
    res = run_outer(prob, start, sched, ipm)
    return prob, res, ipm


@pytest.fixture(scope="session")
def oracle_points(psf_default):
    """Random interior iterates with random merit parameters, shared by the
    derivative and identity criteria so both see the same samples."""
    out = {}
    for name, prob, seed in (
        ("psf", psf_default, 101),
        ("scalar", analytic_scalar_problem(1.0), 202),
    ):
        rng = np.random.default_rng(seed)
        pts = []
        for _ in range(50):
            it = sample_iterate(prob, rng)
            p = MeritParams(mu=float(rng.uniform(0.1, 1.0)),
                            nu=float(rng.uniform(0.0, 1.0)))
            pts.append((it, p))
        out[name] = (prob, pts)
    return out


def fd_grad_Z(prob, it, p, h=1e-5):
    """Central differences of the merit in every symmetric Z-coordinate."""
    m = prob.m
    z = it.Z.mat
    out = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            b = np.zeros((m, m))
            b[i, j] += 1.0
            b[j, i] += 1.0
            up = merit_value(prob, Iterate(x=it.x, X=it.X, Z=SymMat(z + h * b)), p)
            dn = merit_value(prob, Iterate(x=it.x, X=it.X, Z=SymMat(z - h * b)), p)
            out[i, j] = out[j, i] = (up - dn) / (4.0 * h)
    return out


# --- criteria ---------------------------------------------------------------

def test_criterion_01_derivative_oracles(oracle_points):
    # merit gradient (x and Z) and merit Hessian match central finite
    # differences at >=50 random strictly interior points per quantity
    t0 = time.perf_counter()
    worst = {"gx": 0.0, "gZ": 0.0, "H": 0.0}
    counts = {"gx": 0, "gZ": 0, "H": 0}
    for name, (prob, pts) in oracle_points.items():
        for idx, (it, p) in enumerate(pts):
            def fun(xv):
                return merit_value(prob, Iterate(x=xv, X=prob.eval_X(xv), Z=it.Z), p)

            def gradfun(xv):
                return merit_grad_x(prob, Iterate(x=xv, X=prob.eval_X(xv), Z=it.Z), p)

            worst["gx"] = max(worst["gx"], rel_err(
                fd_gradient(fun, it.x), merit_grad_x(prob, it, p)))
            counts["gx"] += 1
            worst["H"] = max(worst["H"], rel_err(
                fd_hessian(gradfun, it.x), merit_hess_xx(prob, it, p).mat))
            counts["H"] += 1
            # the full symmetric-basis sweep on the order-40 instance is the
            # expensive oracle; 25 points there plus all 50 scalar points
            # keeps every quantity above 50 samples inside the time bound
            if name == "scalar" or idx < 25:
                worst["gZ"] = max(worst["gZ"], rel_err(
                    fd_grad_Z(prob, it, p), merit_grad_Z(prob, it, p).mat))
                counts["gZ"] += 1
    wall = time.perf_counter() - t0
    assert counts["gx"] >= 50 and counts["gZ"] >= 50 and counts["H"] >= 50
    assert worst["gx"] <= 1e-5
    assert worst["gZ"] <= 1e-5
    assert worst["H"] <= 1e-4
    assert wall < 30.0
    print(f"criterion 1: PASS  grad_x {worst['gx']:.2e} ({counts['gx']} pts), "
          f"grad_Z {worst['gZ']:.2e} ({counts['gZ']} pts), "
          f"hess {worst['H']:.2e} ({counts['H']} pts), {wall:.1f}s")


def test_criterion_02_multiplier_surrogate_identities(oracle_points):
    # the merit gradient equals the Lagrangian gradient at the surrogate
    # multiplier, and the merit Hessian splits into Lagrangian Hessian plus
    # the scaled barrier-curvature matrix, at the same sample points
    t0 = time.perf_counter()
    worst_g = worst_h = 0.0
    for prob, pts in oracle_points.values():
        for it, p in pts:
            lam = lambda_surrogate(it, p)
            worst_g = max(worst_g, rel_err(
                merit_grad_x(prob, it, p), grad_lagrangian(prob, it.x, lam)))
            xinv = it.X.inv()
            expected = (hess_lagrangian(prob, it.x, lam).mat
                        + (1.0 + p.nu) * p.mu
                        * barrier_curvature_matrix(prob, it.x, xinv))
            worst_h = max(worst_h, rel_err(
                merit_hess_xx(prob, it, p).mat, expected))
    wall = time.perf_counter() - t0
    assert worst_g <= 1e-10
    assert worst_h <= 1e-10
    assert wall < 10.0
    print(f"criterion 2: PASS  gradient identity {worst_g:.2e}, "
          f"hessian identity {worst_h:.2e}, {wall:.1f}s")


def test_criterion_03_feasibility_preservation(psf_runs):
    # over all budgeted benchmark runs, both methods, 6 seeds: strict cone
    # interiority at every iterate, step caps respected, and the eigenvalue
    # sandwich after every x-move; zero violations
    total_steps = 0
    for (seed, method), (prob, start, res, _) in psf_runs.items():
        assert start.X.lambda_min > 0.0 and start.Z.lambda_min > 0.0
        records = [ts.record for ts in res.steps]
        assert records, f"run {seed}/{method} produced no steps"
        violations = step_invariant_violations(records)
        assert violations == [], f"run {seed}/{method}: {violations[:3]}"
        total_steps += sum(1 for r in records if r.procedure != "terminated")
    print(f"criterion 3: PASS  {len(psf_runs)} runs, {total_steps} steps, "
          f"zero violations")


def test_criterion_04_fixed_mode_guaranteed_decrease(psf_small):
    # in fixed step-size mode with constants computed on a bounding box,
    # every recorded step decreases the merit by at least its closed-form
    # guarantee; the three update procedures are all exercised
    radius = 3.0
    lip = psf_box_lipschitz(psf_small, radius)
    rng = np.random.Generator(np.random.Philox(key=11))
    sync_start = psf_initial_point(psf_small, seed=2, mu1=0.3)
    saddle_x = np.zeros(psf_small.n)
    saddle = Iterate.create(
        psf_small, saddle_x, SymMat(0.01 * psf_small.eval_X(saddle_x).inv().mat))
    runs = [
        # near-origin synced start: primal steps
        (sync_start, dict(mu=0.3, nu=0.5, eps_g=0.1, eps_mu=0.05, eps_H=0.1)),
        # off the central path: the dual trigger fires
        (Iterate.create(psf_small, sync_start.x,
                        random_spd(rng, psf_small.m, 0.5, 1.5)),
         dict(mu=0.05, nu=0.5, eps_g=0.05, eps_mu=0.02, eps_H=0.05)),
        # exact saddle with loose first-order tolerances: curvature steps
        (saddle, dict(mu=0.01, nu=0.5, eps_g=10.0, eps_mu=10.0, eps_H=1e-4)),
    ]
    counts = {"dual_grad": 0, "primal_grad": 0, "neg_curvature": 0}
    checked = 0
    for start, kw in runs:
        params = IpmParams(max_inner_iters=200, step_mode=FixedLipschitz(), **kw)
        res = run_inner(psf_small, start, params, lipschitz=lip)
        sig = sigma_guarantees(params, lip)
        travel = float(np.linalg.norm(start.x))
        for rec in res.trace:
            if rec.procedure == "terminated":
                continue
            decrease = rec.merit_before - rec.merit_after
            floor = sig.for_procedure(PROC_NUM[rec.procedure])
            slack = 1e-12 * (1.0 + abs(rec.merit_before))
            assert decrease >= floor - slack, (
                f"{rec.procedure} step decreased {decrease:.3e} < {floor:.3e}")
            counts[rec.procedure] += 1
            checked += 1
            if rec.procedure != "dual_grad":
                travel += rec.step_norm
        # the constants are only valid while the iterates stay in the box
        assert travel <= radius
        assert step_invariant_violations(res.trace) == []
    assert all(c >= 1 for c in counts.values()), counts
    print(f"criterion 4: PASS  {checked} fixed steps >= their guarantee "
          f"(counts {counts})")


def test_criterion_05_iteration_complexity_bound():
    # fixed-mode inner iterations never exceed the merit-gap-over-floor
    # bound, and tightening the tolerances never lowers the count
    t0 = time.perf_counter()
    prob = analytic_scalar_problem(1.0)
    lip = prob.lipschitz
    details = []
    for seed in range(1, 6):
        rng = np.random.Generator(np.random.Philox(key=seed))
        start = sample_iterate(prob, rng)
        chain = []
        for div in (1, 2, 4):
            params = IpmParams(
                mu=0.3, nu=0.5, eps_g=0.1 / div, eps_mu=0.05 / div,
                eps_H=0.1 / div, max_inner_iters=10000,
                step_mode=FixedLipschitz(),
            )
            res = run_inner(prob, start, params, lipschitz=lip)
            assert res.status == "converged"
            sig = sigma_guarantees(params, lip)
            floor = sig.floor_for(params.procedures)
            gap = (merit_value(prob, start, params.merit)
                   - scalar_merit_minimum(1.0, params.mu, params.nu))
            assert res.steps <= gap / floor
            chain.append(res.steps)
        assert chain[0] <= chain[1] <= chain[2], chain
        details.append(chain)
    wall = time.perf_counter() - t0
    assert wall < 60.0
    print(f"criterion 5: PASS  5 seeds within bound, halving chains "
          f"{details}, {wall:.1f}s")


def test_criterion_06_stationarity_at_termination(psf_runs, scalar_run):
    # every converged inner solve meets its three scaled residual bounds,
    # round by round along the outer trace
    converged_rounds = 0
    runs = list(psf_runs.values()) + [
        (scalar_run[0], None, scalar_run[1], scalar_run[2])]
    for prob, _, res, ipm in runs:
        # a method without the curvature procedure certifies first-order
        # conditions only, so its rounds may leave the Hessian residual unset
        second_order = 3 in ipm.procedures
        for rec in res.outer:
            if rec.inner_status != "converged":
                continue
            converged_rounds += 1
            assert rec.r_g <= rec.eps_g + 1e-12
            if rec.r_mu is not None:
                assert rec.r_mu <= rec.eps_mu + 1e-12
            if second_order:
                assert rec.r_H is not None
            if rec.r_H is not None:
                assert rec.r_H >= -(rec.eps_H + 1e-12)
        last = res.outer[-1]
        if last.inner_status == "converged":
            params = replace(ipm, mu=last.mu, nu=last.nu, eps_g=last.eps_g,
                             eps_mu=last.eps_mu, eps_H=last.eps_H)
            sosp = check_eps_sosp(prob, res.iterate, params)
            assert sosp.satisfied
    assert converged_rounds >= 50
    print(f"criterion 6: PASS  {converged_rounds} converged rounds all "
          f"within tolerance")


def test_criterion_07_curvature_step_comparison(tmp_path):
    # the comparison command shows the curvature-enabled method reaching a
    # strictly lower objective and actually using curvature steps on a
    # majority of seeds
    csv_path = tmp_path / "compare.csv"
    t0 = time.perf_counter()
    code = main([
        "compare", "--csv", str(csv_path), "--plot-dir", str(tmp_path),
        "--max-outer-iterations-as-total", str(BUDGET),
    ])
    wall = time.perf_counter() - t0
    assert code == 0
    with open(csv_path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 12
    by_seed = {}
    for row in rows:
        by_seed.setdefault(int(row["seed"]), {})[row["method"]] = row
    lower = sum(
        float(by_seed[s]["pdipm"]["final_f"])
        < float(by_seed[s]["pdipm-no-nc"]["final_f"])
        for s in by_seed)
    used_nc = sum(int(by_seed[s]["pdipm"]["nc_count"]) >= 1 for s in by_seed)
    assert lower >= 4, f"lower objective on only {lower}/6 seeds"
    assert used_nc >= 4, f"curvature steps on only {used_nc}/6 seeds"
    assert wall < 300.0
    print(f"criterion 7: PASS  lower objective {lower}/6, curvature steps "
          f"used {used_nc}/6, {wall:.1f}s")


def test_criterion_08_primal_variant(psf_default):
    # the dual-free variant keeps its residual ratios at or below one on
    # every completed round and holds the dual block exactly in sync with
    # the barrier inverse at every accepted move
    x0 = psf_initial_point(psf_default, seed=1, mu1=0.3).x
    sched = build_schedule(ScheduleChoice())
    ipm = build_ipm(SolverChoice(method="primal"), sched)
    res = run_outer_primal(psf_default, x0, sched, ipm, total_step_budget=BUDGET)

    assert len(res.outer) >= 5
    converged = [rec for rec in res.outer if rec.inner_status == "converged"]
    assert converged
    for rec in converged:
        assert rec.r_g <= rec.eps_g * (1.0 + 1e-12)
        assert rec.r_H is not None
        assert rec.r_H >= -rec.eps_H * (1.0 + 1e-12)
        assert rec.counts.get("dual_grad", 0) == 0

    # re-walk the identical trajectory one accepted move at a time so the
    # sync invariant is observable between moves
    base = primal_params(ipm)
    cur = primal_start(psf_default, x0, sched.mu_init)
    moves = 0
    for rec in res.outer:
        params = replace(base, mu=rec.mu, nu=0.0, eps_g=rec.eps_g,
                         eps_mu=rec.eps_mu, eps_H=rec.eps_H, max_inner_iters=1)
        walked = 0
        while True:
            one = run_inner(psf_default, cur, params)
            cur = one.iterate
            if one.steps == 0:
                break
            walked += 1
            xinv = cur.X.inv()
            err = float(np.linalg.norm(cur.Z.mat - rec.mu * xinv.mat))
            assert err <= 1e-12 * (1.0 + rec.mu * xinv.frobenius_norm())
            if walked >= rec.inner_iters:
                break
        assert walked == rec.inner_iters
        moves += walked
    assert np.array_equal(cur.x, res.iterate.x)
    print(f"criterion 8: PASS  {len(converged)} converged rounds with ratios "
          f"<= 1, sync held at all {moves} moves")


def test_criterion_09_local_smoothness_sampling(psf_default):
    # the four local difference-quotient bounds hold on 100 random
    # anchor/probe pairs drawn inside the step-capped neighborhoods
    rng = np.random.Generator(np.random.Philox(key=7))
    violations = lipschitz_violations(
        psf_default, MeritParams(mu=0.4, nu=0.6), rng, pairs=100)
    assert violations == []
    print("criterion 9: PASS  100 anchor/probe pairs, zero bound violations")


def test_criterion_10_monotone_coupling_decay(psf_runs, scalar_run):
    # along every trace of five or more rounds, the coupling parameter and
    # the tolerance-to-coupling ratio both decrease strictly
    checked = 0
    traces = [res.outer for (_, _, res, _) in psf_runs.values()]
    traces.append(scalar_run[1].outer)
    for outer in traces:
        assert len(outer) >= 5
        nus = [rec.nu for rec in outer]
        ratios = [rec.nu_ratio for rec in outer]
        assert all(a > b for a, b in zip(nus, nus[1:])), nus[:6]
        assert all(r is not None for r in ratios)
        assert all(a > b for a, b in zip(ratios, ratios[1:])), ratios[:6]
        checked += 1
    print(f"criterion 10: PASS  {checked} traces with strictly decreasing "
          f"coupling sequences")
