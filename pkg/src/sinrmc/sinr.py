"""Interference, SINR and connectivity functionals for the power-law model.

Fading and transmit powers are fixed to one.  The path loss is
``l(r) = r**-alpha`` cut to zero at ``trunc_b``; the total field at ``y`` is
``w + sum_j l(|X_j - y|)`` and the interference seen from transmitter ``X_i``
is obtained by subtracting its own term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .ppp import ParameterError, PointPattern, Window

AVG_CONNECT_COUNT = "avg_connect_count"
ISOLATED_DENSITY = "isolated_density"


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 4.0
    w: float = 1.0
    t: float = 1.0
    lambda_R: float = 1.0
    lambda_T: float = 1.0
    trunc_b: float = 20.0
    tail_compensation: bool = True

    def __post_init__(self):
        if not self.alpha > 2:
            raise ParameterError("alpha must exceed 2")
        if not self.w > 0:
            raise ParameterError("noise w must be positive")
        if not self.t > 0:
            raise ParameterError("threshold t must be positive")
        if self.lambda_R < 0 or self.lambda_T < 0:
            raise ParameterError("intensities must be nonnegative")
        if not self.trunc_b > 0:
            raise ParameterError("trunc_b must be positive (math.inf for no truncation)")

    def connection_radius(self) -> float:
        return (self.w * self.t) ** (-1.0 / self.alpha)

    def tail_mean(self, intensity: float | None = None) -> float:
        """Mean interference from beyond ``trunc_b`` at intensity ``intensity``."""
        if not self.tail_compensation or math.isinf(self.trunc_b):
            return 0.0
        lam = self.lambda_T if intensity is None else intensity
        return 2 * math.pi * lam / ((self.alpha - 2) * self.trunc_b ** (self.alpha - 2))

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class NetworkFunctional:
    kind: str = AVG_CONNECT_COUNT

    def __post_init__(self):
        if self.kind not in (AVG_CONNECT_COUNT, ISOLATED_DENSITY):
            raise ParameterError(f"unknown functional {self.kind!r}")

    def from_counts(self, counts: np.ndarray, area: float) -> float:
        if self.kind == AVG_CONNECT_COUNT:
            return float(counts.sum()) / area
        return float(np.count_nonzero(counts == 0)) / area


@dataclass(frozen=True)
class EventSpec:
    functional: NetworkFunctional = NetworkFunctional()
    comparison: str = "<"
    threshold: float = 0.5

    def __post_init__(self):
        if self.comparison not in ("<", ">"):
            raise ParameterError("comparison must be '<' or '>'")
        if self.threshold < 0:
            raise ParameterError("event threshold must be nonnegative")

    def occurs(self, value: float) -> bool:
        return value < self.threshold if self.comparison == "<" else value > self.threshold


def path_loss(r, alpha: float = 4.0, trunc_b: float = math.inf):
    """``r**-alpha`` for ``0 < r < trunc_b``, 0 beyond, ``inf`` at ``r == 0``."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(r < trunc_b, np.power(r, -alpha), 0.0)
    return out[()] if out.ndim == 0 else out


def _as_points(p) -> np.ndarray:
    if isinstance(p, PointPattern):
        return p.points
    return np.ascontiguousarray(np.asarray(p, dtype=float).reshape(-1, 2))


def _tail(params: ModelParams, tx_intensity: float | None) -> float:
    return params.tail_mean(tx_intensity)


def total_field(y, transmitters, params: ModelParams, tx_intensity: float | None = None) -> float:
    """``w + sum_j l_b(|X_j - y|)`` plus the mean truncated tail when enabled."""
    tx = _as_points(transmitters)
    y = np.asarray(y, dtype=float).reshape(1, 2)
    return float(total_field_many(y, tx, params, tx_intensity)[0])


def total_field_many(ys, transmitters, params: ModelParams, tx_intensity: float | None = None) -> np.ndarray:
    tx = _as_points(transmitters)
    ys = np.ascontiguousarray(np.asarray(ys, dtype=float).reshape(-1, 2))
    base = params.w + _tail(params, tx_intensity)
    if tx.shape[0] == 0:
        return np.full(ys.shape[0], base)
    cs = max(params.connection_radius(), 1e-9)
    if math.isfinite(params.trunc_b):
        cs = max(cs, params.trunc_b / 16)
    x0, y0, nx, ny = K.grid_geometry(tx, cs)
    start, order = K.build_grid(tx, x0, y0, cs, nx, ny)
    xs = np.ascontiguousarray(tx[order, 0])
    yy = np.ascontiguousarray(tx[order, 1])
    reach = K.reach_cells(params.trunc_b, cs, nx, ny)
    b2 = params.trunc_b ** 2
    return base + K.field_at_points(ys, xs, yy, start, x0, y0, cs, nx, ny, reach, float(params.alpha), b2)


def sinr(xi, y, transmitters, params: ModelParams, tx_intensity: float | None = None) -> float:
    """SINR from transmitter ``xi`` (a member of ``transmitters``) at ``y``."""
    xi = np.asarray(xi, dtype=float)
    y = np.asarray(y, dtype=float)
    s = float(path_loss(float(np.hypot(*(xi - y))), params.alpha, params.trunc_b))
    if math.isinf(s):
        return math.inf
    total = total_field(y, transmitters, params, tx_intensity)
    if math.isinf(total):
        return 0.0
    return s / (total - s)


class _FarBounds:
    """Per-cell bounds on the far field via FFT convolution of cell counts.

    For a receiver in cell ``c`` the far field is the contribution of every
    transmitter in a cell at Chebyshev offset larger than ``near_reach``.  A
    transmitter in cell ``c'`` lies between the nearest and farthest points of
    the two cells, so ``count(c') * l_b(dmax)`` and ``count(c') * l_b(dmin)``
    bound its contribution.
    """

    def __init__(self, nx: int, ny: int, cs: float, params: ModelParams, near_reach: int):
        from scipy import fft

        self.nx, self.ny = nx, ny
        L = int(math.ceil(params.trunc_b / cs)) + 1 if math.isfinite(params.trunc_b) else max(nx, ny)
        L = min(L, max(nx, ny))
        self.L = L
        i = np.abs(np.arange(-L, L + 1))
        I, J = np.meshgrid(i, i, indexing="ij")
        dmin = cs * np.hypot(np.maximum(I - 1, 0), np.maximum(J - 1, 0))
        dmax = cs * np.hypot(I + 1, J + 1)
        far = np.maximum(I, J) > near_reach
        khi = np.where(far, path_loss(np.where(far, dmin, 1.0), params.alpha, params.trunc_b), 0.0)
        klo = np.where(far, path_loss(dmax, params.alpha, params.trunc_b), 0.0)
        self.shape = (fft.next_fast_len(nx + 2 * L, True), fft.next_fast_len(ny + 2 * L, True))
        self._fft = fft
        self._khi = fft.rfft2(khi, self.shape)
        self._klo = fft.rfft2(klo, self.shape)

    def __call__(self, cell_counts: np.ndarray):
        f = self._fft.rfft2(cell_counts, self.shape)
        L = self.L
        lo = self._fft.irfft2(f * self._klo, self.shape)[L:L + self.nx, L:L + self.ny]
        hi = self._fft.irfft2(f * self._khi, self.shape)[L:L + self.nx, L:L + self.ny]
        return np.ascontiguousarray(lo.ravel()), np.ascontiguousarray(hi.ravel())


class _Index:
    """Cell grid over a transmitter set, sized for connection and field queries.

    ``domain`` fixes the grid as ``(x0, y0, nx, ny)`` (reusable far-field
    transforms across replicates); otherwise the transmitters' bounding box is
    used.
    """

    def __init__(self, tx: np.ndarray, params: ModelParams, domain=None, far: _FarBounds | None = None,
                 near_reach: int = 0):
        self.tx = tx
        self.params = params
        self.cs = params.connection_radius()
        if domain is None:
            self.x0, self.y0, self.nx, self.ny = K.grid_geometry(tx, self.cs)
        else:
            self.x0, self.y0, self.nx, self.ny = domain
        self.start, self.order = K.build_grid(tx, self.x0, self.y0, self.cs, self.nx, self.ny)
        self.xs = np.ascontiguousarray(tx[self.order, 0])
        self.ys = np.ascontiguousarray(tx[self.order, 1])
        self.reach = K.reach_cells(params.trunc_b, self.cs, self.nx, self.ny)
        self.far = far
        self.near_reach = near_reach

    def counts(self, tx_in: np.ndarray, rx: np.ndarray, base: float) -> np.ndarray:
        """Connectable-receiver counts in the caller's transmitter order."""
        p = self.params
        args = (self.xs, self.ys, tx_in[self.order], rx, self.start, self.x0, self.y0, self.cs,
                self.nx, self.ny, self.reach, float(p.alpha), p.trunc_b ** 2, base,
                float(p.t), self.cs)
        if self.far is None:
            sorted_counts = K.connect_counts(*args)
        else:
            per_cell = np.diff(self.start).reshape(self.nx, self.ny).astype(float)
            lo, hi = self.far(per_cell)
            sorted_counts = K.connect_counts_bounded(*args, self.near_reach, lo, hi)
        out = np.empty_like(sorted_counts)
        out[self.order] = sorted_counts
        return out


class ConnectionGrid:
    """Reusable cell geometry for many replicates on the same square domain."""

    def __init__(self, params: ModelParams, domain: Window, near_reach: int = 5):
        cs = params.connection_radius()
        h = 0.5 * domain.side
        self.params = params
        self.domain = (domain.center[0] - h, domain.center[1] - h,
                       int(math.ceil(domain.side / cs)), int(math.ceil(domain.side / cs)))
        self.near_reach = near_reach
        self.far = _FarBounds(self.domain[2], self.domain[3], cs, params, near_reach)

    def counts(self, tx: np.ndarray, tx_in: np.ndarray, rx: np.ndarray, base: float) -> np.ndarray:
        if tx.shape[0] == 0 or rx.shape[0] == 0:
            return np.zeros(tx.shape[0], dtype=np.int64)
        idx = _Index(tx, self.params, self.domain, self.far, self.near_reach)
        return idx.counts(tx_in, rx, base)


def connect_counts(transmitters, receivers, params: ModelParams, server_mask=None,
                   tx_intensity: float | None = None) -> np.ndarray:
    """Number of connectable receivers for every transmitter (0 where masked out)."""
    tx = np.ascontiguousarray(_as_points(transmitters))
    rx = np.ascontiguousarray(_as_points(receivers))
    if server_mask is None:
        server_mask = np.ones(tx.shape[0], dtype=np.bool_)
    if tx.shape[0] == 0 or rx.shape[0] == 0:
        return np.zeros(tx.shape[0], dtype=np.int64)
    base = params.w + _tail(params, tx_intensity)
    return _Index(tx, params).counts(np.asarray(server_mask, dtype=np.bool_), rx, base)


def connectable_receivers(xi_index: int, transmitters, receivers, params: ModelParams,
                          tx_intensity: float | None = None) -> list[int]:
    """Indices of receivers with ``SINR(X_i, Y_j) >= t``."""
    tx = _as_points(transmitters)
    rx = _as_points(receivers)
    if rx.shape[0] == 0:
        return []
    xi = tx[xi_index]
    d = np.hypot(rx[:, 0] - xi[0], rx[:, 1] - xi[1])
    near = np.flatnonzero(d <= params.connection_radius())
    if near.size == 0:
        return []
    totals = total_field_many(rx[near], tx, params, tx_intensity)
    s = path_loss(d[near], params.alpha, params.trunc_b)
    out = []
    for j, sj, tot in zip(near, np.atleast_1d(s), totals):
        if math.isinf(sj):
            out.append(int(j))
        elif math.isfinite(tot) and sj >= params.t * (tot - sj):
            out.append(int(j))
    return out


def evaluate_functional(transmitters, receivers, window: Window, params: ModelParams,
                        functional: NetworkFunctional = NetworkFunctional(),
                        tx_intensity: float | None = None) -> float:
    """Per-area functional over the transmitters inside ``window``."""
    tx = _as_points(transmitters)
    inside = window.contains(tx)
    if not inside.any():
        return 0.0
    counts = connect_counts(tx, receivers, params, inside, tx_intensity)
    return functional.from_counts(counts[inside], window.area())


def _cell_lattice(params: ModelParams, grid_h: float) -> int:
    if not grid_h > 0:
        raise ParameterError("grid_h must be positive")
    # cell centers k*h, |k| <= K, cover the square of half-side connection_radius
    return max(int(math.ceil(params.connection_radius() / grid_h - 0.5)), 0)


def good_region_area(transmitters, params: ModelParams, grid_h: float, method: str = "tiled",
                     tile: int = 12, near: float = 1.0) -> float:
    """Midpoint-rule area of ``{y : |y|**-alpha >= t * I(y)}`` for a server at the origin.

    ``transmitters`` are interferers only; the serving transmitter at the origin
    is implicit.  Cell centers sit on the lattice ``grid_h * Z**2``.
    """
    Kc = _cell_lattice(params, grid_h)
    tx = np.ascontiguousarray(_as_points(transmitters))
    base = params.w + _tail(params, None)
    args = (tx, float(params.alpha), params.trunc_b ** 2, base, float(params.t),
            params.connection_radius(), float(grid_h), Kc)
    if method == "brute":
        n = K.good_cells_brute(*args)
    else:
        n = K.good_cells_tiled(*args, int(tile), float(near))
    return n * grid_h * grid_h
