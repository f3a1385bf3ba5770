"""Explicit quasimode families and their predicted L^p growth.

Every family is a builder h -> u(h) on a grid chosen from h (overridable through
``L`` and ``N``), the symbol it quasi-solves, its own exponent curve p -> mu(p)
and the expected order of ||P u(h)||_2 / ||u(h)||_2 in h.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .airy import airy_ai
from .cutoffs import bump, plateau
from .grid import Grid, GridFunction, _parse_p, fourier_multiplier, lp_norm, lp_norm_values, make_grid
from .hermite import hermite_table, w_even_at_zero_closed_form
from .quantize import Kind, QuantizedOp, apply
from .scaling import ExponentPrediction, predicted_exponent
from .symbols import CaseTag, Symbol, builtin_symbol, classify_point


def _pow2_at_least(x: float, lo: int = 8) -> int:
    return 1 << max(int(math.log2(lo)), math.ceil(math.log2(max(x, 1.0))))


def _normalized(grid: Grid, values: np.ndarray) -> GridFunction:
    u = GridFunction(grid, values.astype(complex))
    return u.normalized()


def _grid(n, L, N, h, default_L, default_N) -> Grid:
    L = default_L if L is None else L
    N = default_N(L) if N is None else N
    return make_grid(n, L, N, h)


def _require_n(name: str, n: int, lo: int, hi: int = 3):
    if not lo <= n <= hi:
        raise ValueError(f"{name} is defined for {lo} <= n <= {hi}, got n={n}")


def _resolved(name: str, grid: Grid, scale: float, points: float):
    """Refuse grids with fewer than ``points`` samples across the length ``scale``."""
    if scale / grid.dx < points:
        raise ValueError(f"{name}: h={grid.h} is not resolved by the grid (dx={grid.dx:.3g}, "
                         f"feature size {scale:.3g}); increase N")


# ---------------------------------------------------------------------------
# builders

def build_plane_sheet(h: float, n: int = 2, L: Optional[float] = None, N: Optional[int] = None) -> GridFunction:
    """h^{-(n-1)/2} chi_1(x_1) chi(x'/h), a wall of height h^{-(n-1)/2} along x' = 0."""
    _require_n("plane_sheet", n, 2)
    g = _grid(n, L, N, h, 1.125, lambda L: _pow2_at_least(12 * L / h))
    _resolved("plane_sheet", g, 2 * h, 8)
    x = g.coords()
    r = np.sqrt(sum(c**2 for c in x[1:]))
    v = h ** (-(n - 1) / 2) * bump(x[0]) * bump(r / h)
    return _normalized(g, v)


def build_thin_slab(h: float, n: int = 2, L: Optional[float] = None, N: Optional[int] = None) -> GridFunction:
    """h^{-n/2} chi_1(x_1/h) chi(x'/h), concentrated in a ball of radius h."""
    _require_n("thin_slab", n, 1)
    g = _grid(n, L, N, h, 0.5, lambda L: _pow2_at_least(12 * L / h))
    _resolved("thin_slab", g, 2 * h, 8)
    x = g.coords()
    v = h ** (-n / 2) * bump(x[0] / h)
    if n > 1:
        v = v * bump(np.sqrt(sum(c**2 for c in x[1:])) / h)
    return _normalized(g, v)


def _beam_L(h):
    return max(1.0, 7.5 * math.sqrt(h))


def build_gaussian_beam(h: float, n: int = 2, L: Optional[float] = None, N: Optional[int] = None) -> GridFunction:
    """h^{-(n-1)/4} chi_0(x_1) exp(-|x'|^2 / 2h)."""
    _require_n("gaussian_beam", n, 2)
    g = _grid(n, L, N, h, _beam_L(h), lambda L: _pow2_at_least(4 * L / math.sqrt(h)))
    _resolved("gaussian_beam", g, math.sqrt(h), 1.5)
    x = g.coords()
    v = h ** (-(n - 1) / 4) * bump(x[0]) * np.exp(-sum(c**2 for c in x[1:]) / (2 * h))
    return _normalized(g, v)


def build_ground_state(h: float, L: Optional[float] = None, N: Optional[int] = None) -> GridFunction:
    """(pi h)^{-1/4} exp(-x^2/2h): ((hD)^2 + x^2) u = h u."""
    g = _grid(1, L, N, h, 10 * math.sqrt(h), lambda L: 256)
    _resolved("ground_state", g, math.sqrt(h), 4)
    x = g.coords()[0]
    return _normalized(g, np.exp(-x * x / (2 * h)))


AIRY_SUPPORT = (-0.5, 1.0)
AIRY_RAMP = 0.1


def airy_cutoff(x1):
    """Equal to 1 on [-0.4, 0.9], supported in (-1/2, 1)."""
    return plateau(x1, AIRY_SUPPORT[0], AIRY_SUPPORT[1], AIRY_RAMP)


def _airy_L(h, n):
    return 1.25 if n == 1 else max(1.25, 7.5 * math.sqrt(h))


def build_airy_turning(h: float, n: int = 1, L: Optional[float] = None, N: Optional[int] = None) -> GridFunction:
    """c(h) Ai(-x_1/h^{2/3}) chi(x_1) (pi h)^{-(n-1)/4} exp(-|x'|^2/2h), normalized."""
    _require_n("airy_turning", n, 1)
    # local frequency sqrt(x_1) <= 1 on the support, plus the cutoff ramp
    g = _grid(n, L, N, h, _airy_L(h, n), lambda L: _pow2_at_least(8 * L * 1.1 / (math.pi * h)))
    _resolved("airy_turning", g, h ** (2 / 3), 4)
    x = g.coords()
    v = airy_ai(-x[0] / h ** (2 / 3)) * airy_cutoff(x[0])
    if n > 1:
        v = v * (math.pi * h) ** (-(n - 1) / 4) * np.exp(-sum(c**2 for c in x[1:]) / (2 * h))
    return _normalized(g, v)


LOG_MAX_K = 9


def log_k(h: float) -> int:
    """k with 2^-k <= h < 2^-k+1 (h = 2^-k gives exactly k)."""
    k = math.ceil(math.log2(1.0 / h) - 1e-9)
    return max(k, 1)


def _log_coefficients(k: int) -> tuple[list[int], np.ndarray]:
    """Degrees 2j and weights 2^{-l/2}/sqrt(k) of the terms w_2j(y1) w_2j(y2) in v_k."""
    degrees, weights = [], []
    for l in range(1, k + 1):
        for j in range(2**l, 2 ** (l + 1)):
            degrees.append(2 * j)
            weights.append(2.0 ** (-l / 2) / math.sqrt(k))
    return degrees, np.array(weights)


def log_grid(h: float, k: Optional[int] = None) -> tuple[float, int]:
    """(L, N) resolving every Hermite product in u(h)."""
    k = log_k(h) if k is None else k
    dmax = 2 * (2 ** (k + 1) - 1)
    Ly = math.sqrt(2 * dmax + 1) + 6.0
    return Ly * math.sqrt(h), _pow2_at_least(2 * Ly * Ly / math.pi, 64)


def build_log_counterexample(h: float, L: Optional[float] = None, N: Optional[int] = None) -> GridFunction:
    """h^{-1/2} v_k(x/h^{1/2}), v_k = k^{-1/2} sum_l 2^{-l/2} sum_{2^l <= j < 2^{l+1}} w_2j(x1) w_2j(x2).

    Not renormalized: its quadrature L^2 norm certifies the orthonormality of the terms.
    """
    k = log_k(h)
    if k > LOG_MAX_K:
        raise ValueError(f"log counterexample needs k = {k} <= {LOG_MAX_K} (Hermite degree budget)")
    dL, dN = log_grid(h, k)
    g = make_grid(2, dL if L is None else L, dN if N is None else N, h)
    degrees, weights = _log_coefficients(k)
    y = g.axis / math.sqrt(h)
    if not (math.sqrt(2 * max(degrees) + 1) < g.L / math.sqrt(h) and math.sqrt(2 * max(degrees) + 1) < g.xi_max / math.sqrt(h)):
        raise ValueError(f"grid (L={g.L}, N={g.N}) does not resolve Hermite degree {max(degrees)} at h={h}")
    W = hermite_table(degrees, y) * h ** -0.25
    v = (W.T * weights) @ W
    return GridFunction(g, v.astype(complex))


def log_center_value(k: int) -> float:
    """v_k(0,0) from the closed form of |w_2j(0)|."""
    degrees, weights = _log_coefficients(k)
    return float(sum(wt * w_even_at_zero_closed_form(d // 2) ** 2 for d, wt in zip(degrees, weights)))


# ---------------------------------------------------------------------------
# turning-point diagnostics

def _restrict_x1(u: GridFunction, eps: float) -> np.ndarray:
    x1 = u.grid.coords()[0]
    return np.broadcast_to(x1 < eps, u.grid.shape)


def hD1(u: GridFunction) -> GridFunction:
    xi1 = u.grid.dual_coords()[0]
    return fourier_multiplier(u, np.broadcast_to(xi1, u.grid.shape))


def airy_mass(u: GridFunction, eps: float) -> float:
    """||u||_{L^2(x_1 < eps)}."""
    return lp_norm_values(np.where(_restrict_x1(u, eps), u.values, 0), 2, u.grid.cell())


def airy_dmass(u: GridFunction, eps: float) -> float:
    """||hD_1 u||_{L^2(x_1 < eps)}."""
    d = hD1(u)
    return lp_norm_values(np.where(_restrict_x1(u, eps), d.values, 0), 2, u.grid.cell())


def airy_weighted_constant(u: GridFunction, eps: float, sym: Optional[Symbol] = None) -> float:
    """||(x_1^2+eps^2)^{-1/4} hD_1 u|| / (||u|| + ||Pu||/eps)."""
    sym = builtin_symbol("model_turning", u.grid.n) if sym is None else sym
    x1 = u.grid.coords()[0]
    w = (x1 * x1 + eps * eps) ** -0.25
    lhs = lp_norm_values(w * hD1(u).values, 2, u.grid.cell())
    Pu = apply(QuantizedOp(sym, u.grid, Kind.WEYL), u)
    return lhs / (lp_norm(u, 2) + lp_norm(Pu, 2) / eps)


# ---------------------------------------------------------------------------
# families

@dataclass(frozen=True, eq=False)
class QuasimodeFamily:
    name: str
    n: int
    case: CaseTag
    builder: Callable[..., GridFunction]
    symbol_fn: Callable[[float], Symbol]
    mu_fn: Callable[[float], ExponentPrediction]
    residual_order: float
    base_point: tuple
    default_h: tuple[int, int]
    description: str = ""

    def build(self, h: float, L: Optional[float] = None, N: Optional[int] = None) -> GridFunction:
        return self.builder(h, L=L, N=N)

    def symbol_at(self, h: float) -> Symbol:
        return self.symbol_fn(h)

    @property
    def symbol(self) -> Symbol:
        return self.symbol_fn(0.0)

    def prediction(self, p) -> ExponentPrediction:
        return self.mu_fn(_parse_p(p))

    def predicted_mu(self, p) -> float:
        return self.prediction(p).mu

    def log_correction(self, p) -> str:
        pr = self.prediction(p)
        return f"power_log({pr.alpha:.17g})" if pr.correction == "power_log" else pr.correction

    def classify(self, tol: float = 1e-8):
        x0, xi0 = self.base_point
        return classify_point(self.symbol, x0, xi0, tol)


def _profile(f, label):
    return lambda p: ExponentPrediction(f(0.0 if p == math.inf else 1.0 / p), source=label)


FAMILY_NAMES = ("plane_sheet", "thin_slab", "gaussian_beam", "ground_state", "airy_turning", "log_counterexample")


def get_family(name: str, n: Optional[int] = None) -> QuasimodeFamily:
    zero = lambda k: (np.zeros(k), np.zeros(k))
    if name == "plane_sheet":
        n = 2 if n is None else n
        _require_n(name, n, 2)
        sym = builtin_symbol("xi1", n)
        return QuasimodeFamily(name, n, CaseTag.UNCLASSIFIED,
                               lambda h, L=None, N=None: build_plane_sheet(h, n, L, N), lambda h: sym,
                               _profile(lambda ip: (n - 1) * (0.5 - ip), "flat sheet profile"), 1.0, zero(n), (3, 7),
                               "flat characteristic set; saturates the principal-type L^inf bound")
    if name == "thin_slab":
        n = 2 if n is None else n
        _require_n(name, n, 1)
        sym = builtin_symbol("x1", n)
        return QuasimodeFamily(name, n, CaseTag.UNCLASSIFIED,
                               lambda h, L=None, N=None: build_thin_slab(h, n, L, N), lambda h: sym,
                               _profile(lambda ip: n * (0.5 - ip), "semiclassical Sobolev rate"), 1.0, zero(n), (3, 7),
                               "symbol independent of xi; attains the general Sobolev rate")
    if name == "gaussian_beam":
        n = 2 if n is None else n
        _require_n(name, n, 2)
        sym = builtin_symbol("beam", n)
        return QuasimodeFamily(name, n, CaseTag.PRINCIPAL_NONDEG,
                               lambda h, L=None, N=None: build_gaussian_beam(h, n, L, N), lambda h: sym,
                               _profile(lambda ip: (n - 1) * (0.5 - ip) / 2, "Gaussian beam profile"), 1.0, zero(n),
                               (4, 8) if n == 3 else (4, 10), "curved characteristic set; sharp at the Sogge exponent")
    if name == "ground_state":
        if n not in (None, 1):
            raise ValueError("ground_state is defined for n = 1 only")
        return QuasimodeFamily(name, 1, CaseTag.NONPRINCIPAL_NONDEG,
                               lambda h, L=None, N=None: build_ground_state(h, L, N),
                               lambda h: builtin_symbol("harmonic", 1, {"E": h}),
                               _profile(lambda ip: (0.5 - ip) / 2, "harmonic ground state"), 1.0, zero(1), (6, 16),
                               "exact eigenfunction; no non-principal bound holds in one dimension")
    if name == "airy_turning":
        n = 1 if n is None else n
        _require_n(name, n, 1)
        sym = builtin_symbol("model_turning", n)
        return QuasimodeFamily(name, n, CaseTag.TURNING_POINT,
                               lambda h, L=None, N=None: build_airy_turning(h, n, L, N), lambda h: sym,
                               lambda p: predicted_exponent(CaseTag.TURNING_POINT, n, p), 1.0, zero(n),
                               (6, 14) if n == 1 else (5, 9), "Airy profile across a turning point, Gaussian transversally")
    if name == "log_counterexample":
        if n not in (None, 2):
            raise ValueError("log_counterexample is defined for n = 2 only")
        sym = builtin_symbol("hyperbolic", 2)
        return QuasimodeFamily(name, 2, CaseTag.NONPRINCIPAL_NONDEG,
                               lambda h, L=None, N=None: build_log_counterexample(h, L, N), lambda h: sym,
                               lambda p: predicted_exponent(CaseTag.NONPRINCIPAL_NONDEG, 2, p), 1.0, zero(2), (3, 8),
                               "exact kernel element with sqrt(log(1/h)/h) growth")
    raise ValueError(f"unknown family {name!r}; expected one of {', '.join(FAMILY_NAMES)}")
