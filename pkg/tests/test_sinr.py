import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sinrmc import sinr as S
from sinrmc.ppp import ParameterError, Window, poisson_points, replicate_rng


def naive_field(y, tx, p):
    total = p.w + p.tail_mean()
    for x in tx:
        d = math.hypot(x[0] - y[0], x[1] - y[1])
        if d == 0:
            return math.inf
        if d < p.trunc_b:
            total += d ** -p.alpha
    return total


def naive_connectable(i, tx, rx, p):
    out = []
    for j, y in enumerate(rx):
        d = math.hypot(tx[i][0] - y[0], tx[i][1] - y[1])
        if d == 0:
            out.append(j)
            continue
        s = d ** -p.alpha if d < p.trunc_b else 0.0
        interf = p.w + p.tail_mean()
        blocked = False
        for k, x in enumerate(tx):
            if k == i:
                continue
            e = math.hypot(x[0] - y[0], x[1] - y[1])
            if e == 0:
                blocked = True
                break
            if e < p.trunc_b:
                interf += e ** -p.alpha
        if not blocked and s >= p.t * interf:
            out.append(j)
    return out


def pairwise_counts(tx, rx, p):
    # exhaustive all-pairs version of the connection rule, vectorized
    d = np.hypot(tx[:, None, 0] - rx[None, :, 0], tx[:, None, 1] - rx[None, :, 1])
    with np.errstate(divide="ignore"):
        loss = np.where(d < p.trunc_b, d ** -p.alpha, 0.0)
    field = p.w + p.tail_mean() + loss.sum(axis=0)
    ok = loss >= p.t * (field[None, :] - loss)
    return ok.sum(axis=1)


def random_config(seed, n_tx, n_rx, side):
    rng = np.random.default_rng(seed)
    return rng.uniform(-side / 2, side / 2, (n_tx, 2)), rng.uniform(-side / 2, side / 2, (n_rx, 2))


def test_params_validation_and_radius():
    with pytest.raises(ParameterError):
        S.ModelParams(alpha=2.0)
    with pytest.raises(ParameterError):
        S.ModelParams(t=0.0)
    assert S.ModelParams(t=0.002).connection_radius() == pytest.approx(0.002 ** -0.25)
    assert S.ModelParams(trunc_b=20).tail_mean() == pytest.approx(math.pi / 400)
    assert S.ModelParams(trunc_b=math.inf).tail_mean() == 0.0


def test_path_loss_values():
    assert S.path_loss(1.0) == 1.0
    assert S.path_loss(2.0) == 0.0625
    assert S.path_loss(20.0, 4, 20.0) == 0.0
    assert S.path_loss(0.0) == math.inf


def test_total_field_small_cases():
    p = S.ModelParams(trunc_b=math.inf)
    assert S.total_field((0, 0), np.empty((0, 2)), p) == 1.0
    assert S.total_field((0, 0), np.array([[1.0, 0.0]]), p) == 2.0


@pytest.mark.parametrize("b", [math.inf, 3.0])
def test_total_field_matches_naive(b):
    p = S.ModelParams(trunc_b=b, tail_compensation=True)
    tx, ys = random_config(1, 20, 10, 8)
    for y in ys:
        assert S.total_field(y, tx, p) == pytest.approx(naive_field(y, tx, p), rel=1e-12)


def test_sinr_small_cases():
    p = S.ModelParams(trunc_b=math.inf)
    assert S.sinr((0, 0), (2 ** 0.25, 0), np.array([[0.0, 0.0]]), p) == pytest.approx(0.5)
    tx = np.array([[0.0, 0.0], [2.0, 0.0]])
    assert S.sinr(tx[0], (1.0, 0.0), tx, p) == pytest.approx(0.5)


def test_sinr_matches_direct_sum():
    p = S.ModelParams(trunc_b=math.inf)
    tx, ys = random_config(2, 15, 5, 5)
    for y in ys:
        s = math.hypot(*(tx[3] - y)) ** -4
        interf = 1.0 + sum(math.hypot(*(tx[k] - y)) ** -4 for k in range(15) if k != 3)
        assert S.sinr(tx[3], y, tx, p) == pytest.approx(s / interf, rel=1e-12)


def test_coincident_points():
    p = S.ModelParams(trunc_b=math.inf)
    tx = np.array([[0.0, 0.0], [0.5, 0.0]])
    rx = np.array([[0.0, 0.0], [0.5, 0.0]])
    # on the server: connectable; on an interferer: never
    assert S.connectable_receivers(0, tx, rx, p) == [0]


def test_connectable_empty_and_far():
    p = S.ModelParams(trunc_b=math.inf)
    tx = np.array([[0.0, 0.0]])
    assert S.connectable_receivers(0, tx, np.empty((0, 2)), p) == []
    assert S.connectable_receivers(0, tx, np.array([[1.01, 0.0]]), p) == []
    assert S.connectable_receivers(0, tx, np.array([[0.99, 0.0]]), p) == [0]


def test_connectable_matches_brute_force_200_instances():
    rng = np.random.default_rng(123)
    for k in range(200):
        n_tx = int(rng.integers(1, 51))
        n_rx = int(rng.integers(0, 51))
        side = float(rng.uniform(2, 8))
        b = [math.inf, 2.5, 20.0][k % 3]
        p = S.ModelParams(t=float(rng.choice([0.5, 1.0, 2.0])), trunc_b=b, tail_compensation=bool(k % 2))
        tx, rx = random_config(1000 + k, n_tx, n_rx, side)
        for i in range(n_tx):
            assert S.connectable_receivers(i, tx, rx, p) == naive_connectable(i, tx, rx, p)
        counts = S.connect_counts(tx, rx, p)
        assert counts.tolist() == [len(naive_connectable(i, tx, rx, p)) for i in range(n_tx)]


def test_connection_grid_matches_brute_force():
    # the bounded far-field path against the exhaustive oracle on window-sized instances
    p = S.ModelParams(trunc_b=math.inf, tail_compensation=False)
    grid = S.ConnectionGrid(p, Window.square(12.0), near_reach=2)
    for k in range(50):
        rng = replicate_rng(77, 1, k)
        tx = poisson_points(rng, Window.square(12.0), 1.0)
        rx = poisson_points(rng, Window.square(12.0), 1.0)
        inner = Window.square(10.0).contains(tx)
        got = grid.counts(np.ascontiguousarray(tx), inner, np.ascontiguousarray(rx), 1.0)
        assert got[inner].tolist() == pairwise_counts(tx, rx, p)[inner].tolist()


def test_functional_small_cases():
    p = S.ModelParams(trunc_b=math.inf)
    w = Window.square(25)
    assert S.evaluate_functional(np.array([[30.0, 0.0]]), np.array([[30.5, 0.0]]), w, p) == 0.0
    assert S.evaluate_functional(np.empty((0, 2)), np.empty((0, 2)), w, p,
                                 S.NetworkFunctional(S.ISOLATED_DENSITY)) == 0.0
    one = S.evaluate_functional(np.array([[0.0, 0.0]]), np.array([[0.5, 0.0]]), w, p)
    assert one == pytest.approx(1 / 625)
    iso = S.evaluate_functional(np.array([[0.0, 0.0], [5.0, 5.0]]), np.array([[0.5, 0.0]]), w, p,
                                S.NetworkFunctional(S.ISOLATED_DENSITY))
    assert iso == pytest.approx(1 / 625)


def test_event_spec():
    e = S.EventSpec(threshold=0.5)
    assert e.occurs(0.4) and not e.occurs(0.5)
    assert S.EventSpec(comparison=">", threshold=0.5).occurs(0.6)
    assert S.EventSpec(threshold=math.inf).occurs(1e9)
    with pytest.raises(ParameterError):
        S.EventSpec(comparison="<=")


def test_mean_connection_count_on_window():
    from sinrmc.analytic import expected_connect_count
    from sinrmc.estimate import simulate_event
    from sinrmc.tilt import TiltSpec

    p = S.ModelParams()  # b = 20 with tail compensation, margin = 21
    sim = simulate_event(S.EventSpec(threshold=math.inf), p, 25, TiltSpec(), 10_000, 5)
    v = sim.functional
    se = v.std(ddof=1) / math.sqrt(v.size)
    assert abs(v.mean() - expected_connect_count(1, 1)) < 3 * se


def test_good_region_no_interferers():
    p = S.ModelParams(t=0.002, trunc_b=math.inf)
    exact = math.pi / math.sqrt(0.002)
    a = S.good_region_area(np.empty((0, 2)), p, 0.05)
    assert a == pytest.approx(exact, rel=0.01)
    assert S.good_region_area(np.empty((0, 2)), p, 0.025) == pytest.approx(exact, rel=0.01)
    with pytest.raises(ParameterError):
        S.good_region_area(np.empty((0, 2)), p, 0.0)


def test_good_region_degenerate_single_cell():
    p = S.ModelParams(t=1e4, trunc_b=math.inf)  # radius 0.1
    h = 0.3
    assert S.good_region_area(np.empty((0, 2)), p, h) in (0.0, h * h)


def test_good_region_truncated_far_interferer():
    p = S.ModelParams(t=0.002, trunc_b=10.0, tail_compensation=False)
    far = np.array([[40.0, 0.0]])
    assert S.good_region_area(far, p, 0.1) == S.good_region_area(np.empty((0, 2)), p, 0.1)


def test_good_region_transmitter_on_cell_center():
    p = S.ModelParams(t=0.002, trunc_b=math.inf)
    on = np.array([[0.5, 0.5]])  # a lattice point for h = 0.05
    a = S.good_region_area(on, p, 0.05, method="brute")
    assert a == S.good_region_area(on, p, 0.05)


@pytest.mark.parametrize("seed", range(3))
def test_good_region_tiled_equals_brute(seed):
    p = S.ModelParams(t=0.002, trunc_b=math.inf)
    rng = replicate_rng(seed, 1, 0)
    tx = poisson_points(rng, Window.disk(35.0), 1.0)
    assert S.good_region_area(tx, p, 0.05, tile=24, near=3.0) == S.good_region_area(tx, p, 0.05, method="brute")


def test_good_region_grid_convergence_logged():
    p = S.ModelParams(t=0.002, trunc_b=math.inf)
    rng = np.random.default_rng(4)
    for _ in range(3):
        tx = rng.uniform(-8, 8, (10, 2))
        a1 = S.good_region_area(tx, p, 0.1)
        a2 = S.good_region_area(tx, p, 0.05)
        print(f"grid convergence: h=0.1 {a1:.4f}, h=0.05 {a2:.4f}, rel {abs(a1 - a2) / a2:.4f}")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_adding_interferer_is_monotone(seed):
    p = S.ModelParams(t=0.5, trunc_b=math.inf)
    rng = np.random.default_rng(seed)
    tx = rng.uniform(-3, 3, (8, 2))
    rx = rng.uniform(-3, 3, (12, 2))
    extra = np.vstack((tx, rng.uniform(-3, 3, (1, 2))))
    for i in range(8):
        before = set(S.connectable_receivers(i, tx, rx, p))
        after = set(S.connectable_receivers(i, extra, rx, p))
        assert after <= before
        for y in rx[:3]:
            assert S.sinr(extra[i], y, extra, p) <= S.sinr(tx[i], y, tx, p)
    q = S.ModelParams(t=0.05, trunc_b=math.inf)
    assert S.good_region_area(extra, q, 0.1) <= S.good_region_area(tx, q, 0.1)


@settings(max_examples=20, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.integers(0, 1000))
def test_translation_invariance(dx, dy, seed):
    p = S.ModelParams(trunc_b=math.inf)
    tx, rx = random_config(seed, 30, 30, 6)
    w = Window.square(4)
    v = np.array([dx, dy])
    base = S.evaluate_functional(tx, rx, w, p)
    moved = S.evaluate_functional(tx + v, rx + v, w.translated(v), p)
    assert moved == pytest.approx(base, abs=1e-12)
