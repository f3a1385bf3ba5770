"""Left and Weyl quantization of symbols on periodic grids.

Left:  a(x,hD) f(x) = (2 pi h)^(-n/2) sum_xi a(x,xi) e^{i x xi/h} F_h f(xi) dxi^n
Weyl:  a^w f(x) = (2 pi h)^(-n) sum_{y,xi} e^{i (x-y) xi/h} a((x+y)/2, xi) f(y) dy^n dxi^n

Symbols with a separable form sum_t f_t(x) g_t(xi) are left-quantized exactly as
sum_t f_t(x) g_t(hD); split symbols K(xi) + V(x) have identical left and Weyl
quantizations.  The generic Weyl path tabulates the kernel on midpoints, which
costs O(N^(2n)) and is limited to n <= 2.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .cutoffs import radial_cutoff
from .grid import (Grid, GridFunction, fourier_multiplier, lp_norm, sample, semiclassical_fourier,
                   sobolev_h_norm)
from .symbols import Symbol

WEYL_MAX_N = {1: 4096, 2: 128}
_LEFT_CHUNK = 1 << 20


class Kind(enum.Enum):
    LEFT = "left"
    WEYL = "weyl"


@dataclass(frozen=True, eq=False)
class QuantizedOp:
    symbol: Symbol
    grid: Grid
    kind: Kind = Kind.WEYL

    def __post_init__(self):
        if self.symbol.n != self.grid.n:
            raise ValueError(f"symbol dimension {self.symbol.n} != grid dimension {self.grid.n}")

    def __call__(self, f: GridFunction) -> GridFunction:
        return apply(self, f)


def spectral_edge_fraction(f: GridFunction, band: float = 0.125) -> float:
    """Fraction of L^2 mass of F_h f in the outer ``band`` of the frequency box."""
    F = semiclassical_fourier(f, "forward").values
    edge = np.zeros(f.grid.shape, dtype=bool)
    lim = (1.0 - band) * f.grid.xi_max
    for c in f.grid.dual_coords():
        edge = edge | (np.abs(c) > lim)
    tot = float(np.sum(np.abs(F) ** 2))
    return float(np.sum(np.abs(F[edge]) ** 2)) / tot if tot > 0 else 0.0


def apply(op: QuantizedOp, f: GridFunction, strict: bool = False) -> GridFunction:
    """Apply the quantized operator.

    With ``strict`` the input must be frequency-resolved: less than 1e-12 of its
    mass may sit in the outer eighth of the frequency box.
    """
    if f.grid != op.grid:
        raise ValueError("operator and function live on different grids")
    if f.space != "x":
        raise ValueError("apply expects an x-space grid function")
    if strict and spectral_edge_fraction(f) > 1e-12:
        raise ValueError("input has frequency content at the edge of the grid; refine N")
    sym = op.symbol
    if sym.is_split or (op.kind is Kind.LEFT and sym.terms is not None):
        return _apply_separable_left(sym, f)
    if op.kind is Kind.LEFT:
        return _apply_left_dense(sym, f)
    return _apply_weyl(sym, f)


def _apply_separable_left(sym: Symbol, f: GridFunction) -> GridFunction:
    g = f.grid
    x = g.coords()
    xi = g.dual_coords()
    out = np.zeros(g.shape, dtype=complex)
    F = None
    for t in sym.terms:
        if t.fxi is None:
            v = f.values
        else:
            if F is None:
                F = semiclassical_fourier(f, "forward")
            m = np.broadcast_to(t.fxi(*xi), g.shape)
            v = semiclassical_fourier(GridFunction(g, F.values * m, "xi"), "inverse").values
        if t.fx is not None:
            v = v * np.broadcast_to(t.fx(*x), g.shape)
        out += v
    return GridFunction(g, out)


def _flat_points(axis: np.ndarray, n: int) -> np.ndarray:
    return np.stack([c.ravel() for c in np.meshgrid(*([axis] * n), indexing="ij")], axis=1)


def _apply_left_dense(sym: Symbol, f: GridFunction) -> GridFunction:
    g = f.grid
    F = semiclassical_fourier(f, "forward").values.ravel()
    X = _flat_points(g.axis, g.n)
    XI = _flat_points(g.dual_axis, g.n)
    scale = (2 * math.pi * g.h) ** (-g.n / 2) * g.cell("xi")
    out = np.empty(len(X), dtype=complex)
    rows = max(1, _LEFT_CHUNK // len(XI))
    for a in range(0, len(X), rows):
        xs = X[a:a + rows]
        av = sym([xs[:, None, d] for d in range(g.n)], [XI[None, :, d] for d in range(g.n)])
        phase = np.exp(1j * (xs @ XI.T) / g.h)
        out[a:a + rows] = (np.broadcast_to(av, phase.shape) * phase) @ F
    return GridFunction(g, out.reshape(g.shape) * scale)


def _weyl_table(sym: Symbol, g: Grid, mids: list, xi: list) -> np.ndarray:
    """(-1)^d * ifft over xi of a(mid, xi): the Weyl kernel indexed by (midpoint, d mod N)."""
    n = g.n
    av = np.broadcast_to(sym(mids, xi), tuple(np.broadcast_shapes(*[np.shape(m) for m in mids + xi])))
    axes = tuple(range(av.ndim - n, av.ndim))
    B = np.fft.ifftn(av, axes=axes)
    sign = (-1.0) ** np.arange(g.N)
    for ax in axes:
        shape = [1] * av.ndim
        shape[ax] = g.N
        B = B * sign.reshape(shape)
    return B


def _apply_weyl(sym: Symbol, f: GridFunction) -> GridFunction:
    g = f.grid
    n, N = g.n, g.N
    if n > 2 or N > WEYL_MAX_N[n]:
        raise ValueError(f"direct Weyl quantization limited to n <= 2 and N <= {WEYL_MAX_N.get(n, 0)}; "
                         "use a split symbol for the fast path")
    # midpoints (x_i + x_j)/2 for i + j = s, s = 0..2N-2
    mid = (np.arange(2 * N - 1) / 2.0 - N // 2) * g.dx
    xi = g.dual_axis
    i = np.arange(N)
    S = i[:, None] + i[None, :]
    D = (i[:, None] - i[None, :]) % N
    if n == 1:
        B = _weyl_table(sym, g, [mid[:, None]], [xi[None, :]])
        return GridFunction(g, B[S, D] @ f.values)
    out = np.zeros((N, N), dtype=complex)
    for s1 in range(2 * N - 1):
        B = _weyl_table(sym, g, [np.full((1, 1, 1), mid[s1]), mid[:, None, None]],
                        [xi[None, :, None], xi[None, None, :]])
        i1 = np.arange(max(0, s1 - N + 1), min(s1, N - 1) + 1)
        j1 = s1 - i1
        d1 = (i1 - j1) % N
        M = B[S[None], d1[:, None, None], D[None]]
        out[i1] += np.einsum("pij,pj->pi", M, f.values[j1])
    return GridFunction(g, out)


def apply_adjoint(op: QuantizedOp, f: GridFunction) -> GridFunction:
    """Adjoint of a separable left quantization, or of a real-symbol Weyl operator."""
    sym = op.symbol
    if op.kind is Kind.WEYL:
        return apply(op, f)
    if sym.terms is None:
        raise ValueError("adjoint available only for separable or Weyl operators")
    g = f.grid
    x = g.coords()
    xi = g.dual_coords()
    out = np.zeros(g.shape, dtype=complex)
    for t in sym.terms:
        v = f.values if t.fx is None else f.values * np.conj(np.broadcast_to(t.fx(*x), g.shape))
        if t.fxi is not None:
            v = fourier_multiplier(GridFunction(g, v), np.conj(np.broadcast_to(t.fxi(*xi), g.shape))).values
        out += v
    return GridFunction(g, out)


# ---------------------------------------------------------------------------
# diagnostics

def residual(sym: Symbol, u: GridFunction, h: float, kind: Kind = Kind.WEYL) -> float:
    """||a(x,hD) u||_2 / ||u||_2."""
    if not math.isclose(u.grid.h, h, rel_tol=1e-12):
        raise ValueError(f"grid carries h={u.grid.h}, residual requested at h={h}")
    nu = lp_norm(u, 2)
    if nu == 0:
        raise ValueError("residual of the zero function is undefined")
    return lp_norm(apply(QuantizedOp(sym, u.grid, kind), u), 2) / nu


def frequency_localization_defect(u: GridFunction, cutoff_radius: float, k: float) -> float:
    """||(1 - chi)(hD) u||_{H^k_h} with chi = 1 on |xi| <= R/2, supported in |xi| < R."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    g = u.grid
    if cutoff_radius < 4 * g.dxi:
        raise ValueError(f"cutoff radius {cutoff_radius} below grid frequency resolution {g.dxi}")
    r = np.sqrt(sum(c**2 for c in g.dual_coords()))
    F = semiclassical_fourier(u, "forward")
    tail = GridFunction(g, F.values * (1.0 - radial_cutoff(r, cutoff_radius)), "xi")
    return sobolev_h_norm(tail, k)


def probe_packets(grid: Grid) -> list[GridFunction]:
    """Fixed set of normalized Gaussian packets used to test operator identities."""
    h, n = grid.h, grid.n
    centres = [(0.0, 0.0), (0.5, 0.5), (-0.5, 1.0), (0.25, -0.75)]
    out = []
    for x0, xi0 in centres:
        def fn(*x, x0=x0, xi0=xi0):
            r2 = sum((c - x0) ** 2 for c in x)
            return np.exp(-r2 / (2 * h) + 1j * xi0 * sum(x) / h)

        out.append(sample(grid, fn).normalized())
    return out


def composition_defect(a: Symbol, b: Symbol, grid: Grid, h: float, probes=None) -> float:
    """sup over probes of ||[a(x,hD) b(x,hD) - (ab)(x,hD)] f|| / ||f|| (left quantization)."""
    if a.n != grid.n or b.n != grid.n:
        raise ValueError("symbol and grid dimensions differ")
    if not math.isclose(grid.h, h, rel_tol=1e-12):
        raise ValueError(f"grid carries h={grid.h}, defect requested at h={h}")
    A = QuantizedOp(a, grid, Kind.LEFT)
    B = QuantizedOp(b, grid, Kind.LEFT)
    AB = QuantizedOp(a * b, grid, Kind.LEFT)
    worst = 0.0
    for f in probes if probes is not None else probe_packets(grid):
        d = apply(A, apply(B, f)) - apply(AB, f)
        worst = max(worst, lp_norm(d, 2) / lp_norm(f, 2))
    return worst


def left_norm_2_to_inf(op: QuantizedOp) -> float:
    """Exact L^2 -> L^inf norm of a separable left quantization on the grid.

    Row x of the kernel is sum_t f_t(x) k_t(x - .), and translation invariance of
    the multipliers gives ||row||^2 = v(x)^* G v(x) with G the Gram matrix of the
    g_t in L^2(dxi) / (2 pi h)^n.
    """
    sym, g = op.symbol, op.grid
    if op.kind is not Kind.LEFT or sym.terms is None:
        raise ValueError("exact 2->inf norm needs a separable left quantization")
    x, xi = g.coords(), g.dual_coords()
    gx = [np.broadcast_to(1.0 if t.fx is None else t.fx(*x), g.shape).ravel() for t in sym.terms]
    gxi = [np.broadcast_to(1.0 if t.fxi is None else t.fxi(*xi), g.shape).ravel() for t in sym.terms]
    Gxi = np.array([[np.vdot(q, p) for q in gxi] for p in gxi]) * g.cell("xi") / (2 * math.pi * g.h) ** g.n
    V = np.stack(gx, axis=1)
    rows = np.einsum("it,ts,is->i", V, Gxi, np.conj(V)).real
    return math.sqrt(max(float(rows.max()), 0.0))


def operator_norm_2_to_p(op: QuantizedOp, p, iters: int = 60, starts: int = 4, seed: int = 0,
                         rtol: float = 1e-10) -> float:
    """Estimate ||A||_{L^2 -> L^p} by nonlinear power iteration f <- A^*(|Af|^{p-2} Af).

    Each iterate is a unit vector so the returned value is a lower bound; p = inf
    uses the exact formula for separable left quantizations.
    """
    p = math.inf if str(p).lower() == "inf" else float(p)
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if p == math.inf:
        return left_norm_2_to_inf(op)
    g = op.grid
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(starts):
        f = GridFunction(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)).normalized()
        val = lp_norm(apply(op, f), p)
        for _ in range(iters):
            Af = apply(op, f).values
            w = np.abs(Af)
            m = w.max()
            if m == 0:
                break
            f = apply_adjoint(op, GridFunction(g, (w / m) ** (p - 2) * Af)).normalized()
            new = lp_norm(apply(op, f), p)
            done = new - val <= rtol * new
            val = max(val, new)
            if done:
                break
        best = max(best, val)
    return best
