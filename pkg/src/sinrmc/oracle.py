"""Brute-force and quadrature cross-checks for the closed forms and solvers.

None of the simulations here go through ``sinr`` or the closed forms in
``analytic``; they draw their own points and loop naively.  ``validate``
runs every check and reports one line per check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import mpmath
import numba as nb
import numpy as np
from scipy import special, stats

from .ppp import TAG_ORACLE, ParameterError, replicate_rng

CHUNK = 1000
DEFAULT_R = 50.0

# stream sub-tags so the oracles never share draws
_SUB_INTERFERENCE = 1
_SUB_CONNECT = 2


def _chunks(n: int):
    return [(lo, min(lo + CHUNK, n)) for lo in range(0, n, CHUNK)]


def _map(fn, n: int, workers: int) -> list:
    chunks = _chunks(n)
    if workers <= 1 or len(chunks) == 1:
        return [fn(lo, hi) for lo, hi in chunks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*chunks)))


def _chunk_rng(seed: int, sub: int, lo: int) -> np.random.Generator:
    return replicate_rng(int(seed), TAG_ORACLE * 16 + sub, lo // CHUNK)


def _interference_chunk(mu_T: float, R: float, seed: int, lo: int, hi: int) -> np.ndarray:
    rng = _chunk_rng(seed, _SUB_INTERFERENCE, lo)
    counts = rng.poisson(mu_T * math.pi * R * R, size=hi - lo)
    total = int(counts.sum())
    # |X|**2 is uniform on [0, R**2] for a uniform point in the disk
    d2 = R * R * rng.random(total)
    terms = 1.0 / (d2 * d2)
    out = np.zeros(hi - lo)
    nz = counts > 0
    if total:
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        out[nz] = np.add.reduceat(terms, starts[nz])
    return out


def mc_interference_samples(mu_T: float, R: float = DEFAULT_R, N: int = 100_000, seed: int = 0,
                            workers: int = 1) -> np.ndarray:
    """``N`` draws of ``sum_j |X_j|**-4`` for PPP(mu_T) on the disk of radius ``R``.

    Dropping the field beyond ``R`` biases the sum low by ``pi * mu_T / R**2`` in mean.
    """
    if R < 10:
        raise ParameterError("R must be at least 10")
    if mu_T < 0:
        raise ParameterError("mu_T must be nonnegative")
    if mu_T == 0:
        return np.zeros(N)
    parts = _map(partial(_interference_chunk, float(mu_T), float(R), int(seed)), N, workers)
    return np.concatenate(parts) if parts else np.zeros(0)


@nb.njit(cache=True, error_model="numpy")
def _connect_loop(ix, iy, rx, ry, n_int, n_rx):
    out = np.zeros(n_int.size)
    a = 0
    b = 0
    for k in range(n_int.size):
        for j in range(b, b + n_rx[k]):
            d2 = rx[j] * rx[j] + ry[j] * ry[j]
            signal = 1.0 / (d2 * d2)
            interference = 0.0
            for m in range(a, a + n_int[k]):
                dx = ix[m] - rx[j]
                dy = iy[m] - ry[j]
                e2 = dx * dx + dy * dy
                interference += 1.0 / (e2 * e2)
            if signal >= 1.0 + interference:
                out[k] += 1.0
        a += n_int[k]
        b += n_rx[k]
    return out


def _disk_points(rng: np.random.Generator, count: int, radius: float):
    r = radius * np.sqrt(rng.random(count))
    phi = 2 * math.pi * rng.random(count)
    return r * np.cos(phi), r * np.sin(phi)


def _connect_chunk(mu_R: float, mu_T: float, R: float, seed: int, lo: int, hi: int) -> np.ndarray:
    rng = _chunk_rng(seed, _SUB_CONNECT, lo)
    n_int = rng.poisson(mu_T * math.pi * R * R, size=hi - lo)
    n_rx = rng.poisson(mu_R * math.pi, size=hi - lo)
    ix, iy = _disk_points(rng, int(n_int.sum()), R)
    rx, ry = _disk_points(rng, int(n_rx.sum()), 1.0)
    return _connect_loop(ix, iy, rx, ry, n_int, n_rx)


def mc_expected_connect_count(mu_R: float, mu_T: float, N: int = 100_000, seed: int = 0,
                              R: float = DEFAULT_R, workers: int = 1) -> tuple[float, float]:
    """Mean and standard error of the number of receivers that hear a transmitter at the origin.

    Interferers are PPP(mu_T) on the disk of radius ``R``; receivers are
    PPP(mu_R) on the unit disk (nobody farther can reach SINR 1 with unit noise).
    """
    if N < 2:
        raise ParameterError("N must be at least 2")
    if mu_R < 0 or mu_T < 0:
        raise ParameterError("intensities must be nonnegative")
    if mu_R == 0:
        return 0.0, 0.0
    v = np.concatenate(_map(partial(_connect_chunk, float(mu_R), float(mu_T), float(R), int(seed)), N, workers))
    mean = math.fsum(v) / N
    var = math.fsum((v - mean) ** 2) / (N - 1)
    return mean, math.sqrt(var / N)


def _objective(r: float, lam: np.ndarray) -> np.ndarray:
    s = r ** -4 - 1.0
    return lam * np.log(lam) - lam + 1.0 + special.erfc(lam * math.pi ** 1.5 / (2.0 * math.sqrt(s)))


def brute_objective_min(r: float, lam_grid: np.ndarray | None = None) -> float:
    """Grid minimiser over ``lam`` of the entropy-plus-connection cost at radius ``r``."""
    if not 0 < r < 1:
        raise ParameterError("r must lie in (0, 1)")
    grid = np.arange(1000, 10001) * 1e-3 if lam_grid is None else np.asarray(lam_grid, dtype=float)
    return float(grid[int(np.argmin(_objective(r, grid)))])


def quad_identity_check(c: float) -> float:
    """``|int_0^1 erfc(c u / sqrt(1 - u**2)) du - exp(c**2) erfc(c)|``.

    The left side is a 30-digit tanh-sinh quadrature, the right side the
    double-precision ``erfcx``.
    """
    if c < 0:
        raise ParameterError("c must be nonnegative")
    with mpmath.workdps(30):
        c_ = mpmath.mpf(c)
        lhs = mpmath.quad(lambda u: mpmath.erfc(c_ * u / mpmath.sqrt(1 - u * u)), [0, 1])
        return abs(float(lhs) - float(special.erfcx(c)))


@dataclass(frozen=True)
class CheckResult:
    name: str
    statistic: float
    bound: float
    passed: bool

    def line(self) -> str:
        return f"{self.name} {self.statistic:.6g} {self.bound:.6g} {'PASS' if self.passed else 'FAIL'}"


def _check(name: str, statistic: float, bound: float) -> CheckResult:
    return CheckResult(name, float(statistic), float(bound), bool(statistic < bound))


def validate(N: int = 100_000, R: float = DEFAULT_R, seed: int = 0, workers: int = 1) -> list[CheckResult]:
    """Every oracle cross-check; statistics are compared against strict upper bounds."""
    from . import analytic, tilt

    out = []
    samples = mc_interference_samples(1.0, R, N, seed, workers)
    ks = stats.kstest(samples, lambda x: analytic.interference_cdf(x, 1.0)).statistic
    out.append(_check("interference_ks", ks, 0.01))
    # fraction of samples below the closed-form median; its SE is 0.5/sqrt(N)
    med = analytic.interference_quantile(0.5, 1.0)
    out.append(_check("interference_median_z", abs(np.mean(samples <= med) - 0.5) * 2 * math.sqrt(N), 4.0))

    closed = analytic.expected_connect_count(1.0, 1.0)
    out.append(_check("connect_count_quadrature", abs(closed - analytic.expected_connect_count_quad(1.0, 1.0)), 1e-10))
    out.append(_check("connect_count_value", abs(closed - 0.601692), 1e-4))
    mean, se = mc_expected_connect_count(1.0, 1.0, N, seed, R, workers)
    out.append(_check("connect_count_mc_z", abs(mean - closed) / se, 3.0))

    for c in (0.0, 0.1, 0.5, 1.0, analytic.PI32 / 2, 5.0):
        out.append(_check(f"erfc_identity_c={c:.6g}", quad_identity_check(c), 1e-8))

    for r in (0.3, 0.5816, 0.8, 0.999):
        out.append(_check(f"lambda_opt_r={r:g}", abs(brute_objective_min(r) - tilt.solve_lambda_opt(r)), 1e-3))
    return out
