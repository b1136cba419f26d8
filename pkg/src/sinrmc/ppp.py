"""Poisson point process sampling with per-replicate reproducible streams.

Every replicate draws from its own ``numpy.random.Philox`` generator whose key
is ``derive_replicate_seed(master, tag, index)``.  Philox is counter based, so a
replicate's output depends only on that key and never on how replicates are
distributed over workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_TAG_MUL = 0xD1B54A32D192ED03
_IDX_MUL = 0xAEF17502108EF2D9

# stream tags
TAG_TRANSMITTER = 1
TAG_RECEIVER = 2
TAG_ORACLE = 3


class ParameterError(ValueError):
    """Invalid model or sampling parameter."""


class Point2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Window:
    """Square (``side`` = n) or disk (``side`` = radius) sampling window."""

    kind: str
    side: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("square", "disk"):
            raise ParameterError(f"unknown window kind {self.kind!r}")
        if not (self.side > 0 and math.isfinite(self.side)):
            raise ParameterError("window size must be positive and finite")

    @classmethod
    def square(cls, n: float, center=(0.0, 0.0)) -> "Window":
        return cls("square", float(n), tuple(map(float, center)))

    @classmethod
    def disk(cls, radius: float, center=(0.0, 0.0)) -> "Window":
        return cls("disk", float(radius), tuple(map(float, center)))

    def area(self) -> float:
        if self.kind == "square":
            return self.side * self.side
        return math.pi * self.side * self.side

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        dx = pts[:, 0] - self.center[0]
        dy = pts[:, 1] - self.center[1]
        if self.kind == "square":
            h = 0.5 * self.side
            return (np.abs(dx) <= h) & (np.abs(dy) <= h)
        return dx * dx + dy * dy <= self.side * self.side

    def translated(self, v) -> "Window":
        return Window(self.kind, self.side, (self.center[0] + v[0], self.center[1] + v[1]))


@dataclass
class PointPattern:
    points: np.ndarray
    window: Window
    label: str = "transmitter"

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(self.points)):
            raise ParameterError("point coordinates must be finite")

    def __len__(self) -> int:
        return self.points.shape[0]

    def __iter__(self):
        return (Point2(float(x), float(y)) for x, y in self.points)


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_tag: int = 0

    def replicate(self, index: int) -> int:
        return derive_replicate_seed(self, index)


def _mix64(z: int) -> int:
    # splitmix64 finalizer
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_replicate_seed(spec: SeedSpec, replicate_index: int) -> int:
    """64-bit key for one replicate stream.

    ``mix(mix(mix(master + G) ^ tag*C1) ^ (index + 1)*C2)`` where ``mix`` is the
    splitmix64 finalizer and ``G, C1, C2`` are fixed odd constants.
    """
    z = _mix64(spec.master_seed + _GOLDEN)
    z = _mix64(z ^ ((spec.stream_tag * _TAG_MUL) & MASK64))
    z = _mix64(z ^ (((replicate_index + 1) * _IDX_MUL) & MASK64))
    return z


def replicate_rng(master_seed: int, stream_tag: int, index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(key=derive_replicate_seed(SeedSpec(master_seed, stream_tag), index))
    )


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


def uniform_in_window(rng: np.random.Generator, window: Window, count: int) -> np.ndarray:
    cx, cy = window.center
    if window.kind == "square":
        u = rng.random((count, 2))
        u -= 0.5
        u *= window.side
        u[:, 0] += cx
        u[:, 1] += cy
        return u
    # area-uniform radius via sqrt of a uniform
    rho = window.side * np.sqrt(rng.random(count))
    phi = 2.0 * np.pi * rng.random(count)
    return np.column_stack((cx + rho * np.cos(phi), cy + rho * np.sin(phi)))


def poisson_points(rng: np.random.Generator, window: Window, intensity: float) -> np.ndarray:
    if intensity < 0 or not math.isfinite(intensity):
        raise ParameterError(f"intensity must be finite and >= 0, got {intensity}")
    if intensity == 0:
        return np.empty((0, 2))
    # numpy's Poisson sampler: inversion for small means, PTRS otherwise
    count = int(rng.poisson(intensity * window.area()))
    return uniform_in_window(rng, window, count)


def sample_homogeneous(window: Window, intensity: float, seed, label: str = "transmitter") -> PointPattern:
    """Homogeneous PPP of the given intensity on ``window``."""
    rng = as_rng(seed)
    return PointPattern(poisson_points(rng, window, intensity), window, label)


@dataclass
class RadialIntensity:
    """Piecewise-linear radial profile on ``[0, 1]``, held constant beyond 1."""

    grid: np.ndarray
    values: np.ndarray
    _integral_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape or self.grid.size < 2:
            raise ParameterError("grid and values must be 1-D of equal length >= 2")
        if self.grid[0] != 0.0 or self.grid[-1] != 1.0 or np.any(np.diff(self.grid) <= 0):
            raise ParameterError("grid must increase strictly from 0 to 1")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ParameterError("profile values must be finite and nonnegative")

    @classmethod
    def constant(cls, value: float) -> "RadialIntensity":
        return cls(np.array([0.0, 1.0]), np.array([value, value], dtype=float))

    @property
    def sup_value(self) -> float:
        return float(self.values.max())

    def __call__(self, r):
        return np.interp(r, self.grid, self.values)

    def excess_integral(self) -> float:
        """``int_0^1 r (lambda(r) - 1) dr``, exact for the piecewise-linear profile."""
        if "excess" not in self._integral_cache:
            r0, r1 = self.grid[:-1], self.grid[1:]
            f0, f1 = self.values[:-1] - 1.0, self.values[1:] - 1.0
            # exact integral of r*(linear) over each segment
            h = r1 - r0
            val = h * (f0 * (2 * r0 + r1) + f1 * (r0 + 2 * r1)) / 6.0
            self._integral_cache["excess"] = float(val.sum())
        return self._integral_cache["excess"]

    def mass_integral(self) -> float:
        """``int_0^1 r lambda(r) dr``."""
        return self.excess_integral() + 0.5


def radial_points(
    rng: np.random.Generator,
    disk: Window,
    profile: RadialIntensity,
    scale: float,
) -> np.ndarray:
    lam_max = profile.sup_value
    if lam_max == 0:
        return np.empty((0, 2))
    cand = poisson_points(rng, disk, lam_max)
    if cand.shape[0] == 0:
        return cand
    r = np.hypot(cand[:, 0] - disk.center[0], cand[:, 1] - disk.center[1]) / scale
    keep = rng.random(cand.shape[0]) * lam_max < profile(r)
    return cand[keep]


def sample_radial(
    disk: Window,
    profile: RadialIntensity,
    base_radius_scale: float,
    seed,
    label: str = "transmitter",
) -> PointPattern:
    """Inhomogeneous PPP with intensity ``profile(|p - c| / scale)`` by thinning."""
    if disk.kind != "disk":
        raise ParameterError("sample_radial needs a disk window")
    if not base_radius_scale > 0:
        raise ParameterError("base_radius_scale must be positive")
    rng = as_rng(seed)
    return PointPattern(radial_points(rng, disk, profile, base_radius_scale), disk, label)


def expected_radial_count(disk: Window, profile: RadialIntensity, scale: float) -> float:
    """Mean point count of ``sample_radial`` (disk assumed centered on the profile)."""
    R = disk.side
    if R <= scale:
        from scipy.integrate import quad

        val, _ = quad(lambda u: u * profile(u), 0.0, R / scale, points=profile.grid[1:-1], limit=500)
        return 2 * math.pi * scale * scale * val
    inner = 2 * math.pi * scale * scale * profile.mass_integral()
    return inner + float(profile.values[-1]) * math.pi * (R * R - scale * scale)


def map_replicates(fn: Callable[[int], object], n: int, workers: int = 1) -> list:
    """Evaluate ``fn(i)`` for ``i < n`` in index order, optionally in processes."""
    if workers <= 1:
        return [fn(i) for i in range(n)]
    from concurrent.futures import ProcessPoolExecutor

    chunk = max(1, n // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(n), chunksize=chunk))
