"""Uniform periodic grids, quadrature L^p norms and the semiclassical Fourier transform.

Conventions
-----------
A grid of half width ``L`` with ``N`` points per axis samples ``x_j = -L + j*dx``
(``j = 0..N-1``, ``dx = 2L/N``), so ``x = 0`` is always a grid point.  The
dual (frequency) grid has the same index layout with spacing
``dxi = pi*h/L`` and samples ``xi_k = (k - N/2)*dxi``.

The semiclassical Fourier transform is

    F_h f(xi) = (2 pi h)^(-n/2) * sum_x f(x) exp(-i <x, xi>/h) dx^n,

which is exactly unitary between the two Riemann-sum L^2 structures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

Space = Literal["x", "xi"]


def _is_pow2(N: int) -> bool:
    return N >= 1 and (N & (N - 1)) == 0


@dataclass(frozen=True)
class Grid:
    n: int
    L: float
    N: int
    h: float

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dxi(self) -> float:
        return math.pi * self.h / self.L

    @property
    def xi_max(self) -> float:
        """Largest resolved frequency (the Nyquist frequency)."""
        return math.pi * self.h * self.N / (2.0 * self.L)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def axis(self) -> np.ndarray:
        return (np.arange(self.N) - self.N // 2) * self.dx

    @property
    def dual_axis(self) -> np.ndarray:
        return (np.arange(self.N) - self.N // 2) * self.dxi

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis (sparse meshgrid)."""
        return np.meshgrid(*([self.axis] * self.n), indexing="ij", sparse=True)

    def dual_coords(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.dual_axis] * self.n), indexing="ij", sparse=True)

    def cell(self, space: Space = "x") -> float:
        """Volume element of the Riemann sum in the given space."""
        return (self.dx if space == "x" else self.dxi) ** self.n

    def with_h(self, h: float) -> "Grid":
        return make_grid(self.n, self.L, self.N, h)


def make_grid(n: int, L: float, N: int, h: float) -> Grid:
    if n not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {n}")
    if not _is_pow2(int(N)) or N < 8:
        raise ValueError(f"N must be a power of two >= 8, got {N}")
    if not L > 0:
        raise ValueError(f"half width L must be positive, got {L}")
    if not 0 < h <= 1:
        raise ValueError(f"h must lie in (0, 1], got {h}")
    return Grid(int(n), float(L), int(N), float(h))


def min_points(L: float, Xi: float, h: float) -> int:
    """Smallest power of two N with at least 8 points per semiclassical wavelength.

    ``Xi`` bounds the frequency support of the workload; the rule is
    ``N >= 8 L Xi / (pi h)``.
    """
    need = max(8.0, 8.0 * L * Xi / (math.pi * h))
    return 1 << max(3, math.ceil(math.log2(need)))


def is_resolved(grid: Grid, Xi: float) -> bool:
    return grid.N >= min_points(grid.L, Xi, grid.h)


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray
    space: Space = "x"

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function has NaN/Inf entries")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _same(self, other)
        return GridFunction(self.grid, self.values + other.values, self.space)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _same(self, other)
        return GridFunction(self.grid, self.values - other.values, self.space)

    def __mul__(self, c) -> "GridFunction":
        return GridFunction(self.grid, self.values * c, self.space)

    __rmul__ = __mul__

    def inner(self, other: "GridFunction") -> complex:
        """<self, other> with the convention linear in the first slot."""
        _same(self, other)
        return complex(np.vdot(other.values, self.values) * self.grid.cell(self.space))

    def normalized(self) -> "GridFunction":
        return self * (1.0 / lp_norm(self, 2))


def _same(a: GridFunction, b: GridFunction) -> None:
    if a.grid != b.grid or a.space != b.space:
        raise ValueError("grid functions live on different grids")


def sample(grid: Grid, fn) -> GridFunction:
    """Evaluate ``fn(*coords)`` on the grid."""
    vals = np.broadcast_to(np.asarray(fn(*grid.coords()), dtype=complex), grid.shape)
    return GridFunction(grid, np.array(vals))


def _parse_p(p) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity", "∞"):
            return math.inf
        p = float(p)
    p = float(p)
    if math.isnan(p) or p < 1:
        raise ValueError(f"L^p exponent must be >= 1, got {p}")
    return p


def lp_norm_values(values: np.ndarray, p, cell: float) -> float:
    p = _parse_p(p)
    a = np.abs(values)
    m = float(a.max()) if a.size else 0.0
    if p == math.inf or m == 0.0:
        return m
    if p == 2.0:
        return math.sqrt(float(np.sum(a * a)) * cell)
    # scale by the max to keep |f|^p finite for large p
    return m * (float(np.sum((a / m) ** p)) * cell) ** (1.0 / p)


def lp_norm(f: GridFunction, p) -> float:
    """Riemann-sum L^p norm; ``p = inf`` is the grid maximum of |f|."""
    return lp_norm_values(f.values, p, f.grid.cell(f.space))


def _unitary_scale(grid: Grid) -> float:
    return (2.0 * math.pi * grid.h) ** (-grid.n / 2.0) * grid.dx**grid.n


def semiclassical_fourier(f: GridFunction, direction: str = "forward") -> GridFunction:
    """Discrete F_h (``forward``, x -> xi) or its inverse (``inverse``, xi -> x)."""
    g = f.grid
    axes = tuple(range(g.n))
    if direction == "forward":
        if f.space != "x":
            raise ValueError("forward transform expects an x-space function")
        v = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(f.values, axes), axes=axes), axes)
        return GridFunction(g, v * _unitary_scale(g), "xi")
    if direction == "inverse":
        if f.space != "xi":
            raise ValueError("inverse transform expects a xi-space function")
        v = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(f.values, axes), axes=axes), axes)
        return GridFunction(g, v / _unitary_scale(g), "x")
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def fourier_multiplier(f: GridFunction, symbol_values: np.ndarray) -> GridFunction:
    """Apply ``m(hD)`` where ``symbol_values`` samples m on the (shifted) dual grid."""
    F = semiclassical_fourier(f, "forward")
    return semiclassical_fourier(GridFunction(f.grid, F.values * symbol_values, "xi"), "inverse")


def sobolev_h_norm(f: GridFunction, s: float) -> float:
    """Semiclassical H^s norm (sum (1+|xi|^2)^s |F_h f|^2 dxi^n)^(1/2)."""
    if s < 0:
        raise ValueError(f"Sobolev order must be nonnegative, got {s}")
    F = semiclassical_fourier(f, "forward") if f.space == "x" else f
    xi2 = sum(c**2 for c in f.grid.dual_coords())
    w = (1.0 + xi2) ** s
    return math.sqrt(float(np.sum(w * np.abs(F.values) ** 2)) * f.grid.cell("xi"))
