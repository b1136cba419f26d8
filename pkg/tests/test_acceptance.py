"""Acceptance criteria at full size.

Each test prints one ``CRITERION k PASS|FAIL`` line.  The table runs go
through the CLI presets and share module-scoped results, so the whole file
takes roughly 15 minutes on one core.
"""
import csv
import io
import math
import time

import numpy as np
import pytest
from scipy import integrate, stats

from sinrmc import analytic as A
from sinrmc import estimate as E
from sinrmc import harness as H
from sinrmc import oracle as O
from sinrmc import sinr as S
from sinrmc import tilt as T

pytestmark = pytest.mark.acceptance

N_TABLE1 = 200_000
N_TABLE2 = 20_000
SEEDS = {"table1-basic": 1001, "table1-ce": 1003, "table1-ldp": 1004, "table2-basic": 2001, "table2-is": 2002}


def report(capsys, k, ok, text):
    with capsys.disabled():
        print(f"\nCRITERION {k} {'PASS' if ok else 'FAIL'}: {text}")


def preset_rows(name, runs):
    cfg = H.parse_config([name, "--runs", str(runs), "--seed", str(SEEDS[name])], env={})
    buf = io.StringIO()
    assert H.run(cfg, buf) == 0
    return [dict(zip(H.CSV_HEADER, r)) for r in list(csv.reader(io.StringIO(buf.getvalue())))[1:]]


@pytest.fixture(scope="module")
def table1():
    return {name: preset_rows(name, N_TABLE1) for name in ("table1-basic", "table1-ce", "table1-ldp")}


@pytest.fixture(scope="module")
def table2():
    return {name: preset_rows(name, N_TABLE2)[0] for name in ("table2-basic", "table2-is")}


def _f(row, key):
    return float(row[key])


def test_criterion_1_table1_basic(table1, capsys):
    row = table1["table1-basic"][0]
    p, se = _f(row, "estimate"), _f(row, "std_error")
    ok = 2.3e-4 <= p <= 4.3e-4
    report(capsys, 1, ok, f"basic p={p:.4g} se={se:.3g} v={_f(row, 'variance'):.4g} "
           f"in [2.3e-4, 4.3e-4]; wall {_f(row, 'wall_s'):.0f}s")
    assert ok


def test_criterion_2_cross_entropy(table1, capsys):
    basic = table1["table1-basic"][0]
    pilot, ce = table1["table1-ce"]
    ratio = _f(basic, "variance") / _f(ce, "variance")
    gap = abs(_f(basic, "estimate") - _f(ce, "estimate"))
    comb = math.hypot(_f(basic, "std_error"), _f(ce, "std_error"))
    ok = ratio >= 4 and gap <= 4 * comb
    report(capsys, 2, ok, f"pilot (mu_R, mu_T)=({_f(pilot, 'mu_r'):.4f}, {_f(pilot, 'mu_t'):.4f}) "
           f"hits={pilot['hits']}; tilted p={_f(ce, 'estimate'):.4g} v={_f(ce, 'variance'):.4g}; "
           f"ratio {ratio:.2f} >= 4; |gap|/SE {gap / comb:.2f} <= 4")
    assert ok


def test_criterion_3_entropy_optimal_pair(table1, capsys):
    basic = table1["table1-basic"][0]
    ldp = table1["table1-ldp"][0]
    ratio = _f(basic, "variance") / _f(ldp, "variance")
    ok = ratio <= 1.5
    report(capsys, 3, ok, f"pair ({_f(ldp, 'mu_r'):.4f}, {_f(ldp, 'mu_t'):.4f}) p={_f(ldp, 'estimate'):.4g} "
           f"v={_f(ldp, 'variance'):.4g}; ratio basic/tilted {ratio:.3f} <= 1.5")
    assert ok


def test_criterion_4_table2(table2, capsys):
    basic, tilted = table2["table2-basic"], table2["table2-is"]
    ratio = _f(basic, "variance") / _f(tilted, "variance")
    pb, pt = _f(basic, "estimate"), _f(tilted, "estimate")
    comb = math.hypot(_f(basic, "std_error"), _f(tilted, "std_error"))
    in_range = all(7.7e-6 / 3 <= p <= 3 * 7.7e-6 for p in (pb, pt))
    ok = ratio >= 3 and in_range and abs(pb - pt) <= 4 * comb
    report(capsys, 4, ok, f"basic p={pb:.4g} v={_f(basic, 'variance'):.4g}; radial p={pt:.4g} "
           f"v={_f(tilted, 'variance'):.4g}; ratio {ratio:.2f} >= 3; factor-3 range {in_range}; "
           f"|gap|/SE {abs(pb - pt) / comb:.2f}; wall {_f(basic, 'wall_s') + _f(tilted, 'wall_s'):.0f}s")
    assert ok


def test_criterion_5_connect_count(capsys):
    closed = A.expected_connect_count(1, 1)
    # independent quadrature over the radius, not the erfcx route
    quad, _ = integrate.quad(lambda r: 2 * math.pi * r * math.erfc(math.pi ** 1.5 * r * r / (2 * math.sqrt(1 - r ** 4))),
                             0, 1, epsabs=1e-13, epsrel=1e-13, limit=200)
    mc, se = O.mc_expected_connect_count(1.0, 1.0, 100_000, 5)
    ok = abs(closed - 0.601692) <= 1e-4 and abs(closed - quad) <= 1e-4 and abs(mc - closed) <= 3 * se
    report(capsys, 5, ok, f"closed {closed:.10f}, quadrature {quad:.10f}, MC {mc:.5f} +- {se:.5f} "
           f"(z={(mc - closed) / se:.2f})")
    assert ok


def test_criterion_6_inverse_gamma(capsys):
    s = O.mc_interference_samples(1.0, 50.0, 100_000, 6)
    ks = stats.kstest(s, lambda x: A.interference_cdf(x, 1.0)).statistic
    ok = ks < 0.01
    report(capsys, 6, ok, f"KS distance {ks:.5f} < 0.01 (N=1e5, R=50)")
    assert ok


def test_criterion_7_optimal_pair(capsys):
    mu_R, mu_T = T.optimal_pair(0.5)
    resid = abs(A.connections_per_area(mu_R, mu_T) - 0.5)
    h = 1e-6
    g = A.connections_per_area
    dg_R = (g(mu_R + h, mu_T) - g(mu_R - h, mu_T)) / (2 * h)
    dg_T = (g(mu_R, mu_T + h) - g(mu_R, mu_T - h)) / (2 * h)
    nu = -math.log(mu_R) / dg_R
    foc = abs(math.log(mu_T) + nu * dg_T)
    near = abs(mu_R - 0.832) <= 0.05 and abs(mu_T - 0.984) <= 0.05
    ok = near and resid < 1e-8 and foc < 1e-5
    report(capsys, 7, ok, f"optimal pair ({mu_R:.5f}, {mu_T:.5f}) vs (0.832, 0.984) +-0.05; "
           f"constraint residual {resid:.2e}; first-order residual {foc:.2e}")
    assert ok


def test_criterion_8_lambda_solver(capsys):
    radii = np.linspace(0.01, 0.99, 50)
    worst_res = worst_gap = 0.0
    for r in radii:
        lam = T.solve_lambda_opt(r)
        worst_res = max(worst_res, abs(float(A.stationarity_residual(r, lam))))
        worst_gap = max(worst_gap, abs(lam - O.brute_objective_min(r)))
    ends = max(abs(T.solve_lambda_opt(1e-4) - 1), abs(T.solve_lambda_opt(0.9999) - 1))
    prof = T.tabulate_lambda_profile(201)
    ends = max(ends, abs(prof.values[0] - 1), abs(prof.values[-1] - 1))
    ok = worst_res < 1e-10 and worst_gap < 1e-3 and ends < 1e-3
    report(capsys, 8, ok, f"50 radii: max |residual| {worst_res:.2e}, max |lam - brute| {worst_gap:.2e}, "
           f"endpoint deviation {ends:.2e}")
    assert ok


def _pairwise_connectable(i, tx, rx, p):
    d = np.hypot(tx[:, None, 0] - rx[None, :, 0], tx[:, None, 1] - rx[None, :, 1])
    with np.errstate(divide="ignore"):
        loss = np.where(d < p.trunc_b, d ** -p.alpha, 0.0)
    field = p.w + p.tail_mean() + loss.sum(axis=0)
    return np.flatnonzero(loss[i] >= p.t * (field - loss[i])).tolist()


def _csv_without_wall(argv):
    cfg = H.parse_config(argv, env={})
    buf = io.StringIO()
    H.run(cfg, buf)
    return "\n".join(line.rsplit(",", 1)[0] for line in buf.getvalue().splitlines())


def test_criterion_9_property_suites(capsys):
    t0 = time.perf_counter()
    checks = {}
    bare = S.ModelParams(trunc_b=math.inf, tail_compensation=False)

    sim = E.simulate_event(S.EventSpec(threshold=math.inf), bare, 5, T.TiltSpec.pair(0.8, 1.2), 100_000, 91, margin=1.0)
    w = sim.weights
    checks["pair normalization"] = abs(w.mean() - 1) < 4 * w.std(ddof=1) / math.sqrt(w.size)

    iso = S.ModelParams(t=0.002, trunc_b=math.inf, tail_compensation=False)
    prof = T.tabulate_lambda_profile(201)
    scale = iso.connection_radius()
    setup = E._IsolationSetup(iso, prof, scale, 0.05, False)
    wr = np.array([math.exp(E.radial_log_weight(E._isolation_transmitters(setup, 92, i)[0], prof, scale))
                   for i in range(100_000)])
    checks["radial normalization"] = abs(wr.mean() - 1) < 4 * wr.std(ddof=1) / math.sqrt(wr.size)

    ev = ["avg-count", "--n", "8", "--a", "0.6", "--tilt", "pair", "--mu-r", "0.95", "--mu-t", "1.02",
          "--runs", "2000", "--seed", "93", "--margin", "1", "--trunc-b", "inf", "--tail", "false"]
    same_event = _csv_without_wall(ev) == _csv_without_wall(ev + ["--workers", "3"])
    is_ = ["isolation", "--t", "0.01", "--tilt", "radial", "--runs", "1500", "--grid-h", "0.1", "--r-out", "12",
           "--trunc-b", "inf", "--tail", "false", "--seed", "94"]
    checks["worker determinism"] = same_event and _csv_without_wall(is_) == _csv_without_wall(is_ + ["--workers", "2"])

    rng = np.random.default_rng(95)
    equal = True
    for k in range(200):
        total = int(rng.integers(2, 101))
        n_tx = int(rng.integers(1, total))
        side = float(rng.uniform(2, 8))
        p = S.ModelParams(t=float(rng.choice([0.5, 1.0, 2.0])), trunc_b=[math.inf, 2.5, 20.0][k % 3],
                          tail_compensation=bool(k % 2))
        tx = rng.uniform(-side / 2, side / 2, (n_tx, 2))
        rx = rng.uniform(-side / 2, side / 2, (total - n_tx, 2))
        for i in range(n_tx):
            equal &= S.connectable_receivers(i, tx, rx, p) == _pairwise_connectable(i, tx, rx, p)
    checks["brute-force equivalence"] = equal

    checks["quadrature identity"] = max(O.quad_identity_check(c) for c in (0.1, 0.5, 1.0, 2.784, 5.0)) < 1e-8

    worst = 0.0
    for r in np.linspace(0.05, 0.95, 10):
        for lam in np.linspace(1.0, 4.0, 10):
            h = 1e-5
            fd = (A.isolation_objective(r, lam + h) - A.isolation_objective(r, lam - h)) / (2 * h)
            worst = max(worst, abs(float(A.stationarity_residual(r, lam)) - float(fd)))
    checks["finite differences"] = worst < 1e-6

    wall = time.perf_counter() - t0
    ok = all(checks.values()) and wall < 300
    report(capsys, 9, ok, ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items())
           + f"; max FD gap {worst:.1e}; {wall:.0f}s < 300s")
    assert ok
