"""Acceptance suite: one pass/fail line per criterion.

Run with pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, benchmark_reference, benchmark_study  # noqa: E402
from elliptic_cases import CASES  # noqa: E402
from stability import bdf2_reference, reference_R, scalar_run  # noqa: E402
from weight_oracle import weight_oracle_errors  # noqa: E402

from parabolic_apost.elliptic import estimate_elliptic, solve_elliptic  # noqa: E402
from parabolic_apost.fem1d import SpatialMesh, supnorm_sampled  # noqa: E402
from parabolic_apost.integrators import Discretisation, SchemeId, integrate  # noqa: E402
from parabolic_apost.metrics import DESK_M_LIST, observed_order  # noqa: E402
from parabolic_apost.problem import TimeMesh, builtin_test_problem  # noqa: E402
from parabolic_apost.reconstruction import compute_psi  # noqa: E402

SCHEMES = [s.value for s in SchemeId]
ORDERS = {s: SchemeId.parse(s).order for s in SCHEMES}

# published benchmark errors e_M at M = 64, 256, 1024
BENCHMARK_ERRORS = {
    "euler": (5.977e-4, 1.137e-4, 2.619e-5),
    "cn": (2.006e-4, 1.269e-5, 7.935e-7),
    "exeuler": (1.986e-4, 1.259e-5, 7.871e-7),
    "bdf2": (2.092e-4, 1.314e-5, 8.209e-7),
    "lobatto3c": (2.426e-4, 1.649e-5, 1.061e-6),
    "sdirk2": (2.112e-4, 1.344e-5, 8.412e-7),
}


def record(n: int, ok: bool, detail: str):
    ACCEPTANCE_LINES[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[n])
    assert ok, detail


def studies():
    return {s: benchmark_study(s) for s in SCHEMES}


def test_criterion_01_guaranteed_bound():
    benchmark_reference.cache_clear()
    benchmark_study.cache_clear()
    t0 = time.perf_counter()
    rows = studies()
    elapsed = time.perf_counter() - t0
    violations = [(s, r.M) for s, rs in rows.items() for r in rs if not r.e_M <= r.eta]
    n = sum(len(rs) for rs in rows.values())
    ok = not violations and elapsed < 120.0
    record(1, ok, f"e_M <= eta in {n - len(violations)}/{n} runs, {elapsed:.1f} s"
           + (f", violations {violations}" if violations else ""))


def test_criterion_02_orders():
    bad, got = [], []
    for s, rs in studies().items():
        p = rs[-1].p_M
        got.append(f"{s}={p:.2f}")
        if abs(p - ORDERS[s]) > 0.10:
            bad.append(s)
    record(2, not bad, "p_M at M=1024: " + ", ".join(got))


def test_criterion_03_error_magnitudes():
    worst = 1.0
    bad = []
    for s, rs in studies().items():
        by_M = {r.M: r.e_M for r in rs}
        for M, target in zip((64, 256, 1024), BENCHMARK_ERRORS[s]):
            ratio = max(by_M[M] / target, target / by_M[M])
            worst = max(worst, ratio)
            if ratio > 2.0:
                bad.append((s, M, round(ratio, 2)))
    record(3, not bad, f"worst ratio to benchmark errors {worst:.2f} (limit 2)"
           + (f", outside {bad}" if bad else ""))


def test_criterion_04_efficiency():
    lo, hi, jump = math.inf, 0.0, 1.0
    for rs in studies().values():
        chi = [r.chi_M for r in rs]
        lo, hi = min(lo, *chi), max(hi, *chi)
        jump = max(jump, *(max(a, b) / min(a, b) for a, b in zip(chi, chi[1:])))
    ok = 1 / 500 <= lo and hi <= 1 / 10 and jump < 2.0
    record(4, ok, f"chi_M in [1/{1 / lo:.0f}, 1/{1 / hi:.0f}], max neighbour ratio {jump:.2f}")


def test_criterion_05_cn_big_psi_zero():
    vals = [r.components["eta_Psi"] for r in benchmark_study("cn")]
    record(5, all(v == 0.0 for v in vals), f"eta_Psi for CN at M={list(DESK_M_LIST)}: {vals}")


def test_criterion_06_psi_dual_formula():
    p, _ = builtin_test_problem()
    M = 32
    worst = 0.0
    for s in SCHEMES:
        disc = Discretisation(p, SpatialMesh.uniform(-1, 1, M))
        traj = integrate(s, disc, TimeMesh.uniform(1.0, M), sdirk_fhat=True)
        gap = np.max(np.abs(compute_psi(disc, traj, True) - compute_psi(disc, traj, False)))
        worst = max(worst, float(gap))
    record(6, worst <= 1e-9, f"max |psi closed - psi mass-solve| = {worst:.2e} (limit 1e-9)")


def test_criterion_07_weight_oracle():
    worst = max(weight_oracle_errors(seed) for seed in range(20))
    record(7, worst <= 1e-10, f"20 random meshes, max relative gap {worst:.2e} (limit 1e-10)")


def test_criterion_08_elliptic_estimator():
    levels = (8, 16, 32, 64)
    violations, orders = 0, []
    for p, g, y in CASES.values():
        etas = []
        for N in levels:
            mesh = SpatialMesh.uniform(p.domain_left, p.domain_right, N)
            yh = solve_elliptic(p, mesh, g)
            eta = estimate_elliptic(p, mesh, yh, g).eta
            err = supnorm_sampled(lambda x: y(x) - mesh.evaluate(yh, x), mesh, 50)
            violations += err > eta
            etas.append(eta)
        orders.append(math.log2(etas[0] / etas[-1]) / (len(levels) - 1))
    ok = violations == 0 and all(1.8 <= o <= 2.2 for o in orders)
    record(8, ok, f"{len(CASES)} problems x {len(levels)} meshes, {violations} violations, "
           f"orders {min(orders):.2f}..{max(orders):.2f}")


def test_criterion_09_bdf2_component_orders():
    rs = benchmark_study("bdf2")
    first, last = rs[0], rs[-1]
    ratio = last.M / first.M
    orders = {k: observed_order(first.components[k], last.components[k], ratio)
              for k in first.components}
    ok = all(abs(orders[k] - 2.0) <= 0.15 for k in ("eta_init", "eta_f", "eta_ell_MK"))
    ok &= all(1.6 <= orders[k] <= 2.1 for k in ("eta_Psi", "eta_dpsi"))
    record(9, ok, "orders 64->1024: " + ", ".join(f"{k}={v:.2f}" for k, v in orders.items()))


def test_criterion_10_stability_functions():
    worst = 0.0
    for z in (0.1, 1.0, 10.0):
        for s in SCHEMES:
            if s == "bdf2":
                nodes = np.linspace(0.0, 4.0, 5)
                gap = np.max(np.abs(scalar_run(s, z, nodes) - bdf2_reference(z, nodes)))
            else:
                gap = abs(scalar_run(s, z, [0.0, 1.0])[1] - reference_R(s, z))
            worst = max(worst, float(gap))
    record(10, worst <= 1e-12, f"max |R_computed - R_reference| = {worst:.2e} (limit 1e-12)")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
