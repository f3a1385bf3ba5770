"""Hermite functions, harmonic-oscillator spectral clusters and eigenvalue counting.

The normalized Hermite functions w_k solve (D^2 + x^2) w_k = (2k+1) w_k.  They
are generated by the normalized three-term recurrence

    w_{k+1} = x sqrt(2/(k+1)) w_k - sqrt(k/(k+1)) w_{k-1},
    w_0 = pi^(-1/4) exp(-x^2/2),

carried out on values rescaled by a per-point running exponent so that neither
the Gaussian factor nor the growth in the allowed region leaves double range.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, GridFunction, lp_norm_values

_BIG = 1e150
_LOG_BIG = math.log(_BIG)


def _recurrence(kmax: int, x: np.ndarray, keep=None):
    """Yield (k, w_k(x)) for k = 0..kmax; ``keep(k)`` filters what is materialized."""
    x = np.asarray(x, dtype=float)
    logscale = -0.5 * x * x
    prev = np.zeros_like(x)
    cur = np.full_like(x, math.pi**-0.25)
    for k in range(kmax + 1):
        if keep is None or keep(k):
            with np.errstate(under="ignore"):
                yield k, cur * np.exp(logscale)
        if k == kmax:
            break
        nxt = x * math.sqrt(2.0 / (k + 1)) * cur - math.sqrt(k / (k + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _BIG
        if big.any():
            cur[big] /= _BIG
            prev[big] /= _BIG
            logscale[big] += _LOG_BIG


def hermite_function(k: int, x):
    """w_k(x), vectorized over x."""
    if k < 0:
        raise ValueError(f"Hermite index must be nonnegative, got {k}")
    scalar = np.ndim(x) == 0
    out = None
    for _, w in _recurrence(k, np.atleast_1d(np.asarray(x, dtype=float)), keep=lambda j: j == k):
        out = w
    return float(out[0]) if scalar else out


def hermite_table(indices, x) -> np.ndarray:
    """Rows w_k(x) for each k in ``indices`` (any order, duplicates allowed)."""
    indices = [int(k) for k in indices]
    if not indices:
        return np.zeros((0, np.size(x)))
    if min(indices) < 0:
        raise ValueError("Hermite indices must be nonnegative")
    wanted = set(indices)
    rows = {k: w for k, w in _recurrence(max(indices), np.asarray(x, dtype=float).ravel(), keep=wanted.__contains__)}
    return np.stack([rows[k] for k in indices])


def w_even_at_zero_closed_form(j: int) -> float:
    """|w_{2j}(0)| = sqrt((2j)!) / (2^j j! pi^(1/4)), evaluated through log-gamma."""
    lg = 0.5 * math.lgamma(2 * j + 1) - j * math.log(2.0) - math.lgamma(j + 1)
    return math.exp(lg) * math.pi**-0.25


# ---------------------------------------------------------------------------
# spectral clusters of -Delta + |x|^2

@dataclass(frozen=True, eq=False)
class EigenCluster:
    """Eigenfunctions of -Delta + |x|^2 with eigenvalue lambda_j^2 in [lam^2, (lam+w)^2)."""

    n: int
    lam: float
    width: float
    indices: tuple[tuple[int, ...], ...]
    grid: Grid
    # tables[d][k] = w_k on axis d (shared across axes since the grid is isotropic)
    table: np.ndarray = field(repr=False)
    table_index: dict = field(repr=False)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([sum(2 * k + 1 for k in kk) for kk in self.indices], dtype=float)

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def cell(self) -> float:
        return self.grid.dx**self.n

    def _rows(self, d: int) -> np.ndarray:
        return self.table[[self.table_index[kk[d]] for kk in self.indices]]

    def eigenfunction(self, j: int) -> GridFunction:
        kk = self.indices[j]
        v = np.ones(())
        for d in range(self.n):
            row = self.table[self.table_index[kk[d]]]
            v = np.multiply.outer(v, row)
        return GridFunction(self.grid, v.astype(complex))

    def mask(self) -> np.ndarray:
        """Boolean coefficient mask over the index box, True on the cluster."""
        m = np.zeros((len(self.table_index),) * self.n, dtype=bool)
        for kk in self.indices:
            m[tuple(self.table_index[k] for k in kk)] = True
        return m

    def coefficients(self, values: np.ndarray) -> np.ndarray:
        """Inner products <f, w_k1 x ... x w_kn> over the full index box."""
        c = values
        for d in range(self.n):
            c = np.tensordot(self.table, c, axes=([1], [d]))
            c = np.moveaxis(c, 0, d)
        return c * self.cell

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        v = coeffs
        for d in range(self.n):
            v = np.tensordot(self.table.T, v, axes=([1], [d]))
            v = np.moveaxis(v, 0, d)
        return v

    def project(self, values: np.ndarray) -> np.ndarray:
        """Apply the cluster projector to grid values."""
        return self.synthesize(self.coefficients(values) * self.mask())

    def gram(self) -> np.ndarray:
        """Gram matrix of the cached eigenfunctions (quadrature inner products)."""
        per_axis = self.table @ self.table.T * self.grid.dx
        idx = [[self.table_index[k] for k in kk] for kk in self.indices]
        G = np.ones((len(idx), len(idx)))
        for d in range(self.n):
            col = np.array([i[d] for i in idx])
            G = G * per_axis[np.ix_(col, col)]
        return G

    def density(self) -> np.ndarray:
        """sum_j |phi_j(x)|^2 on the grid (the diagonal of the projector kernel)."""
        sq = self.table**2
        return self.synthesize_sq(sq)

    def synthesize_sq(self, sq: np.ndarray) -> np.ndarray:
        v = self.mask().astype(float)
        for d in range(self.n):
            v = np.tensordot(sq.T, v, axes=([1], [d]))
            v = np.moveaxis(v, 0, d)
        return v


_INDEX_BUDGET = 2000


def cluster_indices(n: int, lam: float, w: float = 1.0) -> list[tuple[int, ...]]:
    """All multi-indices k with sum(2k_i + 1) in [lam^2, (lam+w)^2)."""
    lo, hi = lam * lam, (lam + w) ** 2
    # eigenvalues are integers; absorb rounding in lam**2 at the closed end
    lo -= 1e-9 * max(1.0, lo)
    hi -= 1e-9 * max(1.0, hi)
    kmax = int(math.floor((hi - n) / 2.0))
    if kmax > _INDEX_BUDGET:
        raise ValueError(f"cluster needs Hermite degree {kmax} > budget {_INDEX_BUDGET}")
    out = []
    for kk in itertools.product(range(max(kmax, -1) + 1), repeat=n):
        e = sum(2 * k + 1 for k in kk)
        if lo <= e < hi:
            out.append(kk)
    return out


def level_width(lam: float) -> float:
    """Width w for which [lam^2, (lam+w)^2) holds one oscillator level when lam^2 is one."""
    return math.sqrt(lam * lam + 1.0) - lam


def cluster_eigenpairs(n: int, lam: float, w: float, grid: Grid) -> EigenCluster:
    """Cluster of -Delta + |x|^2 eigenfunctions sampled on ``grid`` (h is ignored)."""
    if grid.n != n:
        raise ValueError("grid dimension does not match cluster dimension")
    indices = cluster_indices(n, lam, w)
    used = sorted({k for kk in indices for k in kk})
    table = hermite_table(used, grid.axis) if used else np.zeros((0, grid.N))
    return EigenCluster(n, float(lam), float(w), tuple(indices), grid, table, {k: i for i, k in enumerate(used)})


def cluster_norm_2_to_inf(cluster: EigenCluster) -> float:
    """sup_x sqrt(sum_j |phi_j(x)|^2), the exact L^2 -> L^inf norm on the grid."""
    if cluster.size == 0:
        return 0.0
    return math.sqrt(float(cluster.density().max()))


@dataclass
class PowerIterationResult:
    value: float
    trace: list[float]
    best_seed: int
    maximizer: np.ndarray


def _normalize(v: np.ndarray, cell: float) -> np.ndarray:
    return v / math.sqrt(float(np.sum(np.abs(v) ** 2)) * cell)


def cluster_norm_2_to_p(cluster: EigenCluster, p, iters: int = 60, seed: int = 0, starts: int = 8,
                        rtol: float = 1e-10) -> PowerIterationResult:
    """Lower bound for ||Pi||_{2->p} by multi-start nonlinear power iteration.

    f <- Pi(|f|^{p-2} f) / ||.||_2 on the cluster span.  Each iterate is a unit
    vector in the span, so every recorded ||f||_p is a certified lower bound;
    the objective is non-decreasing along each run.
    """
    p = float("inf") if str(p).lower() == "inf" else float(p)
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if cluster.size == 0:
        return PowerIterationResult(0.0, [0.0], seed, np.zeros(cluster.grid.shape))
    cell = cluster.cell
    if p == math.inf:
        dens = cluster.density()
        i = np.unravel_index(np.argmax(dens), dens.shape)
        # extremizer: the normalized projector kernel centred at the peak
        delta = np.zeros(cluster.grid.shape)
        delta[i] = 1.0 / cell
        f = _normalize(cluster.project(delta), cell)
        val = lp_norm_values(f, math.inf, cell)
        return PowerIterationResult(val, [val], seed, f)
    rng = np.random.default_rng(seed)
    mask = cluster.mask()
    best = PowerIterationResult(-1.0, [], seed, None)
    for s in range(starts):
        c = rng.standard_normal(mask.shape) * mask
        f = _normalize(cluster.synthesize(c), cell)
        trace = [lp_norm_values(f, p, cell)]
        for _ in range(iters):
            g = cluster.project(np.abs(f) ** (p - 2) * f)
            f = _normalize(g, cell)
            trace.append(lp_norm_values(f, p, cell))
            if trace[-1] - trace[-2] <= rtol * trace[-1]:
                break
        if trace[-1] > best.value:
            best = PowerIterationResult(trace[-1], trace, seed + s, f)
    return best


# ---------------------------------------------------------------------------
# eigenvalue counting for discretized split operators

def discretize_split(grid: Grid, kinetic, potential) -> np.ndarray:
    """Dense matrix of K(hD) + V(x) on the grid (Fourier multiplier plus multiplication)."""
    n, N = grid.n, grid.N
    if N**n > 4096:
        raise ValueError(f"dense discretization capped at dimension 4096, got {N**n}")
    # 1-D unitary DFT matrix in the centred layout
    j = np.arange(N) - N // 2
    F1 = np.exp(-2j * np.pi * np.outer(j, j) / N) / math.sqrt(N)
    F = F1
    for _ in range(n - 1):
        F = np.kron(F, F1)
    xi = [c for c in grid.dual_coords()]
    K = np.broadcast_to(np.asarray(kinetic(*xi), dtype=float), grid.shape).ravel()
    x = grid.coords()
    V = np.broadcast_to(np.asarray(potential(*x), dtype=float), grid.shape).ravel()
    H = (F.conj().T * K) @ F + np.diag(V)
    return H


def count_cluster(P: np.ndarray, E: float, h: float, atol: float = 1e-9) -> int:
    """Number of eigenvalues of the self-adjoint matrix P in [E - h, E + h].

    The closed window is widened by ``atol`` so that eigenvalues sitting exactly on
    an endpoint (which happens for the oscillator spectrum) are not lost to rounding.
    """
    P = np.asarray(P)
    asym = np.abs(P - P.conj().T).max()
    if asym > 1e-8 * max(1.0, np.abs(P).max()):
        raise ValueError(f"matrix is not numerically self-adjoint (asymmetry {asym:.3g})")
    ev = np.linalg.eigvalsh(0.5 * (P + P.conj().T))
    return int(np.count_nonzero((ev >= E - h - atol) & (ev <= E + h + atol)))
