"""Monte Carlo estimators with likelihood-ratio weights.

Replicate ``i`` of a run with master seed ``s`` draws transmitters from the
stream ``(s, TAG_TRANSMITTER, i)`` and receivers from ``(s, TAG_RECEIVER, i)``.
Work is cut into fixed-size chunks, so the per-replicate values, and hence
every reported statistic, do not depend on the number of workers.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache, partial

import numpy as np

from . import sinr as S
from .ppp import (
    TAG_RECEIVER, TAG_TRANSMITTER, ParameterError, RadialIntensity, Window,
    poisson_points, radial_points, replicate_rng,
)
from .tilt import TiltSpec

CHUNK = 500
MAX_LOG_WEIGHT = 700.0


class TiltTooAggressive(ParameterError):
    """A likelihood ratio would overflow a double."""


@dataclass
class EstimatorReport:
    n_runs: int
    estimate: float
    single_run_variance: float
    std_error: float
    hits: int
    master_seed: int
    wall_seconds: float = 0.0
    label: str = ""
    values: np.ndarray | None = field(default=None, repr=False)


def summarize(values) -> tuple[float, float, float]:
    """Mean, unbiased variance and standard error, summed exactly in index order."""
    v = np.asarray(values, dtype=float)
    n = v.size
    if n < 2:
        raise ParameterError("need at least two values")
    mean = math.fsum(v) / n
    var = math.fsum((v - mean) ** 2) / (n - 1)
    return mean, var, math.sqrt(var / n)


def pair_log_weight(x_count_in: int, y_count_in: int, area: float, mu_R: float, mu_T: float,
                    lambda_R: float = 1.0, lambda_T: float = 1.0) -> float:
    """``log dP/dQ`` for PPP(lambda) vs PPP(mu) on a window, transmitters and receivers.

    Each intensity ratio is raised to the count of its own process.
    """
    out = area * (mu_R - lambda_R) + area * (mu_T - lambda_T)
    for count, mu, lam in ((x_count_in, mu_T, lambda_T), (y_count_in, mu_R, lambda_R)):
        if count == 0:
            continue
        if not mu > 0:
            raise ParameterError("likelihood ratio undefined: zero tilted intensity at an occupied window")
        out -= count * math.log(mu / lam)
    return out


def radial_log_weight(points, profile: RadialIntensity, scale: float, base: float = 1.0) -> float:
    """``log dP/dQ`` for PPP(base) vs PPP(base * profile(|x|/scale)) on the disk of radius ``scale``.

    ``points`` are the tilted-process points inside that disk.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    out = base * 2 * math.pi * scale * scale * profile.excess_integral()
    if pts.shape[0]:
        lam = profile(np.hypot(pts[:, 0], pts[:, 1]) / scale)
        if np.any(lam <= 0):
            raise ParameterError("likelihood ratio undefined: zero profile at an occupied radius")
        out -= math.fsum(np.log(lam))
    return out


def _checked_exp(log_w: float) -> float:
    if log_w > MAX_LOG_WEIGHT:
        raise TiltTooAggressive(f"log likelihood ratio {log_w:.1f} overflows; reduce the tilt")
    return math.exp(log_w)


def _run_chunks(worker, n: int, workers: int) -> list:
    chunks = [(lo, min(lo + CHUNK, n)) for lo in range(0, n, CHUNK)]
    if workers <= 1 or len(chunks) == 1:
        return [worker(lo, hi) for lo, hi in chunks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(worker, *zip(*chunks)))


# ---------------------------------------------------------------- event (window functional)


@dataclass(frozen=True)
class _EventSetup:
    params: S.ModelParams
    n: float
    margin: float
    mu_R: float
    mu_T: float


@lru_cache(maxsize=8)
def _event_grid(setup: _EventSetup) -> S.ConnectionGrid:
    return S.ConnectionGrid(setup.params, Window.square(setup.n + 2 * setup.margin))


def default_margin(params: S.ModelParams) -> float:
    """Width of the untilted frame around the window: connection radius plus truncation."""
    if not math.isfinite(params.trunc_b):
        raise ParameterError("an explicit margin is required without path-loss truncation")
    return params.connection_radius() + params.trunc_b


def _event_replicate(setup: _EventSetup, seed: int, i: int):
    p = setup.params
    inner = Window.square(setup.n)
    outer = Window.square(setup.n + 2 * setup.margin)
    # receivers farther than the connection radius from the window never count
    rx_outer = Window.square(setup.n + 2 * min(setup.margin, p.connection_radius()))
    rt = replicate_rng(seed, TAG_TRANSMITTER, i)
    rr = replicate_rng(seed, TAG_RECEIVER, i)
    tx_in = poisson_points(rt, inner, setup.mu_T)
    tx_out = poisson_points(rt, outer, p.lambda_T)
    tx_out = tx_out[~inner.contains(tx_out)]
    rx_in = poisson_points(rr, inner, setup.mu_R)
    rx_out = poisson_points(rr, rx_outer, p.lambda_R)
    rx_out = rx_out[~inner.contains(rx_out)]
    tx = np.ascontiguousarray(np.vstack((tx_in, tx_out)))
    rx = np.ascontiguousarray(np.vstack((rx_in, rx_out)))
    servers = np.zeros(tx.shape[0], dtype=np.bool_)
    servers[: tx_in.shape[0]] = True
    counts = _event_grid(setup).counts(tx, servers, rx, p.w + p.tail_mean())
    return counts[: tx_in.shape[0]], tx_in.shape[0], rx_in.shape[0]


def _event_chunk(setup: _EventSetup, functional: S.NetworkFunctional, seed: int, lo: int, hi: int):
    area = setup.n * setup.n
    out = np.empty((hi - lo, 3))
    for k, i in enumerate(range(lo, hi)):
        counts, nx, ny = _event_replicate(setup, seed, i)
        out[k] = functional.from_counts(counts, area), nx, ny
    return out


@dataclass
class EventSample:
    functional: np.ndarray
    x_count: np.ndarray
    y_count: np.ndarray
    occurred: np.ndarray
    log_w: np.ndarray
    wall_seconds: float

    @property
    def values(self) -> np.ndarray:
        w = np.array([_checked_exp(lw) if hit else 0.0 for lw, hit in zip(self.log_w, self.occurred)])
        return w

    @property
    def weights(self) -> np.ndarray:
        return np.array([_checked_exp(lw) for lw in self.log_w])


def simulate_event(event: S.EventSpec, params: S.ModelParams, n: float, tilt: TiltSpec, N: int,
                   seed: int, margin: float | None = None, workers: int = 1) -> EventSample:
    """Raw per-replicate output of the window experiment (functional, counts, weights)."""
    if tilt.kind == "radial":
        raise ParameterError("radial tilt does not apply to the window functional")
    if not n > 0:
        raise ParameterError("window side n must be positive")
    mu_R, mu_T = (tilt.mu_R, tilt.mu_T) if tilt.kind == "pair" else (params.lambda_R, params.lambda_T)
    m = default_margin(params) if margin is None else float(margin)
    if m < 0:
        raise ParameterError("margin must be nonnegative")
    setup = _EventSetup(params, float(n), m, float(mu_R), float(mu_T))
    t0 = time.perf_counter()
    parts = _run_chunks(partial(_event_chunk, setup, event.functional, int(seed)), N, workers)
    raw = np.vstack(parts) if parts else np.empty((0, 3))
    area = float(n) * float(n)
    fun = raw[:, 0]
    xc = raw[:, 1].astype(np.int64)
    yc = raw[:, 2].astype(np.int64)
    occurred = np.array([event.occurs(v) for v in fun], dtype=bool)
    if tilt.kind == "pair" and not tilt.is_identity:
        log_w = np.array([pair_log_weight(int(a), int(b), area, mu_R, mu_T, params.lambda_R, params.lambda_T)
                          for a, b in zip(xc, yc)])
    else:
        log_w = np.zeros(len(fun))
    return EventSample(fun, xc, yc, occurred, log_w, time.perf_counter() - t0)


def estimate_event(event: S.EventSpec, params: S.ModelParams, n: float, tilt: TiltSpec, N: int,
                   seed: int, margin: float | None = None, workers: int = 1,
                   label: str = "") -> EstimatorReport:
    """Importance-sampling estimate of ``P(event)`` for the window functional."""
    if N < 2:
        raise ParameterError("N must be at least 2")
    sample = simulate_event(event, params, n, tilt, N, seed, margin, workers)
    values = sample.values
    mean, var, se = summarize(values)
    return EstimatorReport(N, mean, var, se, int(sample.occurred.sum()), int(seed),
                           sample.wall_seconds, label or ("basic" if tilt.is_identity else "tilted"), values)


# ---------------------------------------------------------------- isolation (conditional MC)

DEFAULT_R_OUT = 35.0


@dataclass(frozen=True)
class _IsolationSetup:
    params: S.ModelParams
    profile: RadialIntensity | None
    r_out: float
    grid_h: float
    far_field: bool


def _isolation_params(setup: _IsolationSetup) -> S.ModelParams:
    p = setup.params
    if setup.far_field:
        a = p.alpha
        tail = 2 * math.pi * p.lambda_T / ((a - 2) * setup.r_out ** (a - 2))
        return p.with_(w=p.w + tail)
    return p


def _isolation_transmitters(setup: _IsolationSetup, seed: int, i: int):
    p = setup.params
    scale = p.connection_radius()
    rt = replicate_rng(seed, TAG_TRANSMITTER, i)
    disk = Window.disk(scale)
    if setup.profile is None:
        inner = poisson_points(rt, disk, p.lambda_T)
    else:
        prof = setup.profile
        if p.lambda_T != 1.0:
            prof = RadialIntensity(prof.grid, prof.values * p.lambda_T)
        inner = radial_points(rt, disk, prof, scale)
    outer = poisson_points(rt, Window.disk(setup.r_out), p.lambda_T)
    outer = outer[np.hypot(outer[:, 0], outer[:, 1]) > scale]
    return inner, outer


def _isolation_chunk(setup: _IsolationSetup, seed: int, lo: int, hi: int):
    p = setup.params
    q = _isolation_params(setup)
    scale = p.connection_radius()
    tile = max(1, int(round(1.2 / setup.grid_h)))
    out = np.empty((hi - lo, 3))
    for k, i in enumerate(range(lo, hi)):
        inner, outer = _isolation_transmitters(setup, seed, i)
        tx = np.ascontiguousarray(np.vstack((inner, outer)))
        area = S.good_region_area(tx, q, setup.grid_h, tile=tile, near=3.0)
        if setup.profile is None:
            log_w = 0.0
        else:
            log_w = radial_log_weight(inner, setup.profile, scale, p.lambda_T)
        out[k] = log_w, area, inner.shape[0]
    return out


def estimate_isolation(params: S.ModelParams, tilt: TiltSpec, N: int, grid_h: float, seed: int,
                       r_out: float = DEFAULT_R_OUT, far_field: bool = False, workers: int = 1,
                       label: str = "") -> EstimatorReport:
    """Conditional Monte Carlo estimate of the probability that the origin is isolated.

    Given the transmitters, the receivers hearing the origin form a Poisson
    process on the good region, so ``exp(-lambda_R * area)`` replaces the
    isolation indicator.  Transmitters inside the connection disk may follow a
    radial tilt; those out to ``r_out`` are drawn at the base intensity.
    """
    if N < 2:
        raise ParameterError("N must be at least 2")
    if not grid_h > 0:
        raise ParameterError("grid_h must be positive")
    if tilt.kind == "pair":
        raise ParameterError("pair tilt does not apply to the isolation estimator")
    scale = params.connection_radius()
    if not r_out >= scale:
        raise ParameterError("r_out must be at least the connection radius")
    profile = tilt.profile if tilt.kind == "radial" else None
    setup = _IsolationSetup(params, profile, float(r_out), float(grid_h), bool(far_field))
    t0 = time.perf_counter()
    parts = _run_chunks(partial(_isolation_chunk, setup, int(seed)), N, workers)
    raw = np.vstack(parts)
    values = np.array([_checked_exp(lw - params.lambda_R * a) for lw, a in raw[:, :2]])
    mean, var, se = summarize(values)
    hits = int(np.count_nonzero(values > 0))
    return EstimatorReport(N, mean, var, se, hits, int(seed), time.perf_counter() - t0,
                           label or ("basic" if profile is None else "radial"), values)


def estimate_isolation_naive(params: S.ModelParams, N: int, seed: int,
                             r_out: float = DEFAULT_R_OUT) -> EstimatorReport:
    """Indicator estimator of isolation with sampled receivers (no conditioning).

    Shares the transmitter streams of ``estimate_isolation`` for the same seed.
    """
    if N < 2:
        raise ParameterError("N must be at least 2")
    setup = _IsolationSetup(params, None, float(r_out), 1.0, False)
    scale = params.connection_radius()
    t0 = time.perf_counter()
    values = np.empty(N)
    for i in range(N):
        inner, outer = _isolation_transmitters(setup, int(seed), i)
        tx = np.vstack((inner, outer))
        rx = poisson_points(replicate_rng(seed, TAG_RECEIVER, i), Window.disk(scale), params.lambda_R)
        isolated = True
        if rx.shape[0]:
            field_ = S.total_field_many(rx, tx, params)
            sig = S.path_loss(np.hypot(rx[:, 0], rx[:, 1]), params.alpha, params.trunc_b)
            isolated = not np.any(np.isfinite(field_) & (np.atleast_1d(sig) >= params.t * field_))
        values[i] = 1.0 if isolated else 0.0
    mean, var, se = summarize(values)
    return EstimatorReport(N, mean, var, se, int(values.sum()), int(seed), time.perf_counter() - t0,
                           "naive", values)
