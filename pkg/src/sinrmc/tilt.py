"""Changes of measure for the importance-sampling estimators.

Two families are supported: a global pair of receiver/transmitter intensities
for the low-connectivity event, and a radial transmitter profile for the
isolation probability.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import analytic
from .ppp import ParameterError, RadialIntensity

INV_PHI = (math.sqrt(5) - 1) / 2


class SolverError(RuntimeError):
    """A root or minimum could not be bracketed."""


class NoHitsError(RuntimeError):
    """The pilot run never observed the event."""


@dataclass(frozen=True)
class TiltSpec:
    """``kind`` is ``"none"``, ``"pair"`` (uses ``mu_R``, ``mu_T``) or ``"radial"``."""

    kind: str = "none"
    mu_R: float = 1.0
    mu_T: float = 1.0
    profile: RadialIntensity | None = None

    def __post_init__(self):
        if self.kind not in ("none", "pair", "radial"):
            raise ParameterError(f"unknown tilt kind {self.kind!r}")
        if self.kind == "radial" and self.profile is None:
            raise ParameterError("radial tilt needs a profile")
        if self.kind == "pair" and not (self.mu_R > 0 and self.mu_T > 0):
            raise ParameterError("pair tilt intensities must be positive")

    @classmethod
    def pair(cls, mu_R: float, mu_T: float) -> "TiltSpec":
        return cls("pair", float(mu_R), float(mu_T))

    @classmethod
    def radial(cls, profile: RadialIntensity) -> "TiltSpec":
        return cls("radial", profile=profile)

    @property
    def is_identity(self) -> bool:
        if self.kind == "pair":
            return self.mu_R == 1.0 and self.mu_T == 1.0
        if self.kind == "radial":
            return bool(np.all(self.profile.values == 1.0))
        return True


def golden_section(f, a: float, b: float, tol: float = 1e-8) -> float:
    """Minimiser of a unimodal ``f`` on ``[a, b]`` to bracket width ``tol``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _count_per_receiver_intensity(mu_T: float) -> float:
    return analytic.connections_per_area(1.0, mu_T)


def optimal_pair(a: float, lo: float = 1e-3, hi: float = 10.0, tol: float = 1e-10) -> tuple[float, float]:
    """Entropy-minimal ``(mu_R, mu_T)`` whose mean connections per area is at most ``a``.

    When the untilted pair already satisfies the constraint it is returned.
    Otherwise the constraint is active, ``mu_R = a / g(mu_T)`` with
    ``g(mu_T) = connections_per_area(1, mu_T)``, and the remaining 1-D problem
    is solved by golden-section search over ``mu_T``.
    """
    if not a > 0:
        raise ParameterError("a must be positive")
    if analytic.connections_per_area(1.0, 1.0) <= a:
        return 1.0, 1.0

    def cost(mu_T):
        mu_R = a / _count_per_receiver_intensity(mu_T)
        return float(analytic.poisson_entropy(mu_R) + analytic.poisson_entropy(mu_T))

    mu_T = golden_section(cost, lo, hi, tol)
    return a / _count_per_receiver_intensity(mu_T), mu_T


def solve_lambda_opt(r: float, tol: float = 1e-12) -> float:
    """Root in ``lam >= 1`` of ``stationarity_residual(r, lam)``.

    The residual is strictly increasing in ``lam`` and non-positive at 1, so
    the root is unique and is the minimiser of ``isolation_objective``.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    if r <= 0.0 or r >= 1.0:
        return 1.0

    def g(lam):
        return float(analytic.stationarity_residual(r, lam))

    lo = 1.0
    g_lo = g(lo)
    if g_lo >= 0.0 or abs(g_lo) < tol:
        return lo
    hi = 2.0
    while g(hi) <= 0.0:
        hi *= 2.0
        if hi > 2.0 ** 10:
            raise SolverError(f"no sign change of the stationarity residual for r={r}")
    while True:
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if abs(g_mid) < tol or mid in (lo, hi):
            return mid
        if g_mid < 0.0:
            lo = mid
        else:
            hi = mid


def tabulate_lambda_profile(m: int = 201, tol: float = 1e-12) -> RadialIntensity:
    """``lambda_opt`` on ``m`` equispaced radii of ``[0, 1]``; both endpoints are 1."""
    if m < 2:
        raise ParameterError("need at least two grid points")
    grid = np.linspace(0.0, 1.0, m)
    values = np.ones(m)
    for k in range(1, m - 1):
        values[k] = solve_lambda_opt(float(grid[k]), tol)
    return RadialIntensity(grid, values)


def write_profile_csv(profile: RadialIntensity, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["r", "lambda"])
        for r, lam in zip(profile.grid, profile.values):
            wr.writerow([f"{r:.17g}", f"{lam:.17g}"])


def read_profile_csv(path) -> RadialIntensity:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return RadialIntensity(np.array([float(r["r"]) for r in rows]),
                           np.array([float(r["lambda"]) for r in rows]))


class PilotResult(NamedTuple):
    mu_R: float
    mu_T: float
    hits: int
    runs: int


def pilot_from_sample(sample, n: float) -> PilotResult:
    """Cross-entropy tilt from an untilted ``estimate.EventSample``."""
    hit = sample.occurred
    if not hit.any():
        raise NoHitsError(f"event never occurred in {hit.size} pilot runs; raise pilot_N")
    area = float(n) ** 2
    k = int(hit.sum())
    return PilotResult(
        mu_R=math.fsum(sample.y_count[hit]) / (area * k),
        mu_T=math.fsum(sample.x_count[hit]) / (area * k),
        hits=k,
        runs=int(hit.size),
    )


def cross_entropy_pilot(event, params, n: float, pilot_N: int, seed: int,
                        margin: float | None = None, workers: int = 1) -> PilotResult:
    """Mean empirical intensities inside the window, conditional on the event.

    Runs ``pilot_N`` untilted replicates and averages ``#Y/|window|`` and
    ``#X/|window|`` over those where ``event`` occurs.
    """
    from .estimate import simulate_event

    if pilot_N < 1:
        raise ParameterError("pilot_N must be at least 1")
    sim = simulate_event(event, params, n, TiltSpec(), pilot_N, seed, margin=margin, workers=workers)
    return pilot_from_sample(sim, n)
