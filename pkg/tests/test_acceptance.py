"""Acceptance checks, one test per criterion.

Each test records a one-line verdict in ``RESULTS``; ``conftest.py`` prints
them at the end of the session.  Running this file directly prints the same
lines without pytest.
"""
import math
import time

import numpy as np
import pytest

from picard_sdc.analysis import (coefficient_order, convergence_study, correction_coefficients,
                                 table1_report)
from picard_sdc.problems import linear_problem, pendulum_problem, reference_solution, vdp_problem
from picard_sdc.quadrature import NAMED_FAMILIES, make_rule, rule_from_nodes
from picard_sdc.stability import abs_amplification, scan_region
from picard_sdc.sweeper import (SolveOptions, SweepKind, SweepScheme, collocation_march,
                                collocation_solve, iterate, preset)

RESULTS: dict = {}


def record(number, ok, detail, elapsed, limit):
    within = elapsed < limit
    verdict = "PASS" if ok and within else "FAIL"
    budget = f" / {limit}s" if math.isfinite(limit) else ""
    RESULTS[number] = f"criterion {number}: {verdict} ({elapsed:.1f}s{budget}) {detail}"
    assert ok, detail
    assert within, f"runtime {elapsed:.1f}s exceeds {limit}s"


# ---------------------------------------------------------------------------
# 1. Lagrange-basis maxima table

TABLE1 = {
    2: (1.000, 1.207, 1.366, 1.500, 1.000), 3: (1.000, 1.244, 1.479, 1.558, 1.000),
    4: (1.056, 1.257, 1.527, 1.578, 1.000), 5: (1.152, 1.263, 1.551, 1.586, 1.000),
    6: (1.257, 1.266, 1.566, 1.591, 1.000), 7: (1.362, 1.268, 1.575, 1.594, 1.000),
    8: (1.663, 1.269, 1.581, 1.596, 1.000), 9: (2.550, 1.270, 1.585, 1.597, 1.000),
    10: (4.028, 1.271, 1.588, 1.598, 1.000), 11: (6.506, 1.271, 1.590, 1.599, 1.000),
    12: (10.963, 1.271, 1.592, 1.599, 1.000), 13: (18.340, 1.272, 1.594, 1.600, 1.000),
    14: (32.060, 1.272, 1.595, 1.600, 1.000), 15: (54.998, 1.272, 1.596, 1.600, 1.000),
    16: (98.531, 1.272, 1.596, 1.600, 1.000), 17: (172.176, 1.272, 1.597, 1.601, 1.000),
    18: (313.675, 1.272, 1.597, 1.601, 1.000), 19: (556.491, 1.273, 1.598, 1.601, 1.000),
    20: (1026.313, 1.273, 1.598, 1.601, 1.000),
}


def test_criterion_1_table1():
    t0 = time.perf_counter()
    rows = table1_report(range(2, 21))
    names = [f.value for f in NAMED_FAMILIES]
    misses = [(M, n, round(vals[n], 3), TABLE1[M][i])
              for M, vals in rows for i, n in enumerate(names)
              if round(vals[n], 3) != TABLE1[M][i]]
    record(1, not misses, f"{19 * 5 - len(misses)}/95 cells match; misses={misses[:5]}",
           time.perf_counter() - t0, 10)


# ---------------------------------------------------------------------------
# 2. Correction-coefficient tables

CUSTOM = [0, 1 / 3, 1 / 2, 1]
TABLE2 = [
    # (rule, base, rows as (numerators, denominator), h-power per row)
    (("uniform", 3), "trapezoid", [((1, -2, 1), 24), ((1, -2, 1), 24)], 4),
    (("uniform", 3), "forward-euler", [((7, -8, 1), 24), ((1, 4, -5), 24)], 3),
    (("uniform", 4), "trapezoid",
     [((3, -7, 5, -1), 72), ((1, -1, -1, 1), 72), ((1, -5, 7, -3), 72)], 4),
    (("uniform", 4), "forward-euler",
     [((15, -19, 5, -1), 72), ((1, 11, -13, 1), 72), ((1, -5, -5, 9), 72)], 3),
    (CUSTOM, "trapezoid",
     [((8, -27, 20, -1), 162), ((14, -27, 8, 5), 5184), ((10, -81, 88, -17), 192)], 3),
    (CUSTOM, "forward-euler",
     [((35, -54, 20, -1), 162), ((14, 405, -424, 5), 5184), ((10, -81, 40, 31), 192)], 3),
]


def _table2_rule(spec):
    return make_rule(*spec) if isinstance(spec[0], str) else rule_from_nodes(spec)


def test_criterion_2_coefficient_tables():
    t0 = time.perf_counter()
    problems = []
    flipped = 0
    for spec, base, rows, power in TABLE2:
        rule = _table2_rule(spec)
        cc = correction_coefficients(rule, base)
        printed = np.array([np.array(num) / den for num, den in rows])
        # Printed rows carry a positive leading coefficient; the raw
        # orientation (base rule minus exact integral) differs by a row sign.
        if np.max(np.abs(cc.sign_normalized() - printed)) > 1e-12:
            problems.append((spec, base, "values"))
        flipped += int(sum(np.max(np.abs(r - p)) > 1e-12 for r, p in zip(cc.coeffs, printed)))
        if coefficient_order(cc, rule) != [power] * rule.N:
            problems.append((spec, base, "order", coefficient_order(cc, rule)))
    record(2, not problems,
           f"6 tables, 17 rows; {flipped} rows printed with opposite overall sign; "
           f"problems={problems}", time.perf_counter() - t0, 1)


# ---------------------------------------------------------------------------
# 3. Van der Pol convergence

VDP_MESHES = [4, 8, 16, 32, 64, 128, 256, 512]
VDP_TABLE = {
    "sisdc": ([2.24e-2, 6.06e-4, 4.11e-5, 3.44e-6, 2.56e-7, 1.78e-8, 1.17e-9, 7.26e-11],
              (3.85, 3.93, 4.01)),
    "modified-sisdc": ([6.45e-2, 2.84e-3, 1.91e-4, 1.46e-5, 1.01e-6, 6.68e-8, 4.29e-9, 2.69e-10],
                       (3.92, 3.96, 3.99)),
}


def test_criterion_3_van_der_pol():
    t0 = time.perf_counter()
    rule = make_rule("uniform", 4)
    system = vdp_problem(eps=1.0)
    ok, parts = True, []
    for kind, (errors, orders) in VDP_TABLE.items():
        rep = convergence_study(system, SweepScheme(kind, 3), rule, 4.0, VDP_MESHES)
        got = rep.orders[-3:]
        order_ok = all(g is not None and abs(g - o) <= 0.15 for g, o in zip(got, orders))
        ratios = [e / p for e, p in zip(rep.errors, errors)]
        error_ok = all(1 / 3 <= r <= 3 for r in ratios)
        ok &= order_ok and error_ok
        parts.append(f"{kind}: orders {[round(g, 2) for g in got]} vs {list(orders)}, "
                     f"error ratios {min(ratios):.2f}..{max(ratios):.2f}")
    record(3, ok, "; ".join(parts), time.perf_counter() - t0, 60)


# ---------------------------------------------------------------------------
# 4. Linear convergence, Picard vs explicit SDC

LINEAR_MESHES = [10, 20, 40, 80, 160, 320, 640]
# Relative final-time errors below this are dominated by accumulated rounding
# (each mesh row takes hundreds of steps); such rows are left out of the fit.
ROUNDOFF_FLOOR = 1e-12


def _fitted_order(rep):
    pairs = [(a, b) for a, b in zip(rep.errors[:-1], rep.errors[1:])
             if a is not None and b is not None and b >= ROUNDOFF_FLOOR]
    return math.log2(pairs[-1][0] / pairs[-1][1]) if pairs else None


def test_criterion_4_linear_orders():
    t0 = time.perf_counter()
    bad_orders, worse_picard, compared = [], [], 0
    for lam in (-2.0, -5.0):
        system = linear_problem(lam, T=10.0)
        for q in range(3, 7):
            reps = {}
            for kind in ("picard", "explicit-sdc"):
                M, scheme = preset(kind, q)
                reps[kind] = convergence_study(system, scheme, make_rule("uniform", M), 10.0,
                                               LINEAR_MESHES, norm="relative")
                order = _fitted_order(reps[kind])
                if order is None or abs(order - q) > 0.25:
                    bad_orders.append((lam, q, kind, order))
            for m, ep, ee in zip(LINEAR_MESHES, reps["picard"].errors,
                                 reps["explicit-sdc"].errors):
                # converged: both errors below 1 (a bounded, resolved run)
                if ep is not None and ee is not None and max(ep, ee) < 1.0:
                    compared += 1
                    if ep > ee:
                        worse_picard.append((lam, q, m, f"{ep / ee:.1f}x"))
    detail = (f"orders off: {bad_orders}; Picard error larger on {len(worse_picard)}/{compared} "
              f"converged meshes, e.g. {worse_picard[:4]}")
    record(4, not bad_orders and not worse_picard, detail, time.perf_counter() - t0, 30)


# ---------------------------------------------------------------------------
# 5. Stability


def test_criterion_5_stability():
    t0 = time.perf_counter()
    rule2 = make_rule("uniform", 2)
    a = scan_region(SweepScheme("picard", 1), rule2)
    b = scan_region(SweepScheme("explicit-sdc", 1), rule2)
    diff = float(np.max(np.abs(a.values - b.values)))
    M, _ = preset("implicit-sdc", 3)
    rule3 = make_rule("uniform", M)
    rho = {th: abs_amplification(SweepScheme("implicit-sdc", 2, th, "backward-euler"), rule3, -1e4)
           for th in (0.0, 1.0)}
    ok = diff <= 1e-12 and rho[0.0] > 1.0 and rho[1.0] < 1.0
    detail = (f"M=2 grid max diff {diff:.1e}; |rho(-1e4)| theta=0: {rho[0.0]:.3g}, "
              f"theta=1: {rho[1.0]:.3g}")
    record(5, ok, detail, time.perf_counter() - t0, 30)


# ---------------------------------------------------------------------------
# 6. Fixed point and superconvergence


def test_criterion_6_fixed_point_and_superconvergence():
    t0 = time.perf_counter()
    system = linear_problem(-1.0)
    opts = SolveOptions(fixed_point_tol=1e-13)
    worst, cases = 0.0, 0
    for family in NAMED_FAMILIES:
        for M in range(2, 6):
            rule = make_rule(family, M)
            col = collocation_solve(rule, system, system.y0, 0.1)
            for kind in SweepKind:
                thetas = (-0.1, 0.5, 1.0, 3.0, 5.0) if kind is SweepKind.IMPLICIT_SDC else (1.0,)
                for th in thetas:
                    sol, _ = iterate(rule, system, SweepScheme(kind, 0, th), system.y0, 0.1, opts)
                    worst = max(worst, float(np.max(np.abs(sol.values - col.values))))
                    cases += 1
    super_bad = []
    exact = math.exp(-1.0)
    for family, drop in (("legendre", 0), ("radau", 1), ("lobatto", 2)):
        for M in (2, 3):
            rule = make_rule(family, M)
            errs = [abs(collocation_march(rule, linear_problem(-1.0), 1.0, n)[0] - exact)
                    for n in (2, 4, 8)]
            order = math.log2(errs[-2] / errs[-1])
            if abs(order - (2 * M - drop)) > 0.3:
                super_bad.append((family, M, round(order, 2)))
    ok = worst <= 1e-11 and not super_bad
    record(6, ok, f"{cases} sweep limits, max gap {worst:.1e}; superconvergence misses {super_bad}",
           time.perf_counter() - t0, 30)


# ---------------------------------------------------------------------------
# 7. theta-robust accuracy on the pendulum

PENDULUM_MESHES = [20, 40, 80, 160, 320]
THETAS = (-0.1, 0.5, 1.0, 3.0, 5.0)
# The monotonicity check skips the coarsest mesh (h = 0.5), which sits
# outside the asymptotic range for theta = 5.
MONOTONE_MESHES = (40, 80, 160)


def test_criterion_7_theta_robust():
    t0 = time.perf_counter()
    rule = make_rule("uniform", 4)
    system = pendulum_problem()
    reference = reference_solution(system, 10.0)
    low, theta5 = [], {}
    for th in THETAS:
        for P in range(3, 9):
            rep = convergence_study(system, SweepScheme("implicit-sdc", P, th), rule, 10.0,
                                    PENDULUM_MESHES, reference=reference)
            if rep.final_order is None or rep.final_order < 3.7:
                low.append((th, P, rep.final_order))
            if th == 5.0:
                theta5[P] = dict(zip(rep.steps, rep.errors))
    not_monotone = [(m, P) for m in MONOTONE_MESHES for P in range(3, 8)
                    if theta5[P + 1][m] > 1.1 * theta5[P][m]]
    ok = not low and not not_monotone
    record(7, ok, f"orders below 3.7: {low}; theta=5 increases: {not_monotone}",
           time.perf_counter() - t0, 60)


# ---------------------------------------------------------------------------
# 8. Property suites


def test_criterion_8_property_suites():
    from tests import test_properties as props

    t0 = time.perf_counter()
    suites = [props.test_weight_exactness, props.test_weight_exactness_custom,
              props.test_partition_of_unity, props.test_coefficients_match_brute_force,
              props.test_conjugate_symmetry, props.test_vdp_split_and_jacobians,
              props.test_linear_split_and_jacobian]
    failed = []
    for suite in suites:
        try:
            suite()
        except Exception as exc:  # noqa: BLE001 - report every failing suite
            failed.append(f"{suite.__name__}: {type(exc).__name__}")
    record(8, not failed, f"{len(suites) - len(failed)}/{len(suites)} suites pass {failed}",
           time.perf_counter() - t0, math.inf)


if __name__ == "__main__":
    import pathlib
    import sys

    sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1]))

    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_criterion")):
        try:
            fn()
        except AssertionError:
            pass
    for n in sorted(RESULTS):
        print(RESULTS[n])
    sys.exit(0 if all("PASS" in line for line in RESULTS.values()) else 1)
