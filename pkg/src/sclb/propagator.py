"""Split-step evolution of (hD_t + P) u = 0 for split symbols P = K(hD) + V(x).

Strang splitting e^{-i dt V/2h} e^{-i dt K(hD)/h} e^{-i dt V/2h} is exactly
unitary on the grid.  When V vanishes the kinetic factor is the exact
propagator, so free evolution is evaluated directly at any requested time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .cutoffs import radial_cutoff
from .grid import Grid, GridFunction, _parse_p, lp_norm, lp_norm_values, make_grid, semiclassical_fourier
from .symbols import Symbol

DT_RULE = 0.25  # dt <= h/4
DEFAULT_DT = 0.125  # dt = h/8
DEFAULT_T0 = 0.5
ADMISSIBLE_TOL = 1e-12


def _kinetic_values(sym: Symbol, grid: Grid) -> np.ndarray:
    return np.broadcast_to(np.asarray(sym.kinetic(*grid.dual_coords()), dtype=float), grid.shape)


def _potential_values(sym: Symbol, grid: Grid) -> np.ndarray:
    return np.broadcast_to(np.asarray(sym.potential(*grid.coords()), dtype=float), grid.shape)


def is_free(sym: Symbol, grid: Grid) -> bool:
    """True when V vanishes identically on the grid."""
    return not np.any(_potential_values(sym, grid))


def _check(sym: Symbol, u0: GridFunction, h: float):
    if not sym.is_split:
        raise ValueError(f"symbol {sym.name!r} is not of split form K(xi) + V(x)")
    if sym.n != u0.grid.n:
        raise ValueError("symbol and data dimensions differ")
    if not math.isclose(u0.grid.h, h, rel_tol=1e-12):
        raise ValueError(f"data carries h={u0.grid.h}, evolution requested at h={h}")


class _Stepper:
    """Precomputed phase factors for a fixed (symbol, grid, dt)."""

    def __init__(self, sym: Symbol, grid: Grid, dt: float):
        h = grid.h
        self.grid = grid
        self.axes = tuple(range(grid.n))
        self.kin = np.fft.ifftshift(np.exp(-1j * dt * _kinetic_values(sym, grid) / h))
        V = _potential_values(sym, grid)
        self.half = np.exp(-0.5j * dt * V / h)
        self.full = self.half * self.half

    def kinetic(self, v: np.ndarray) -> np.ndarray:
        # centred multiplier applied in the natural FFT layout; shifts cancel
        a = self.axes
        return np.fft.fftshift(np.fft.ifftn(self.kin * np.fft.fftn(np.fft.ifftshift(v, a), axes=a), axes=a), a)


@dataclass
class EvolutionRun:
    symbol: Symbol
    h: float
    dt: float
    times: np.ndarray
    norms: dict = field(default_factory=dict)
    l2: np.ndarray = None
    final: Optional[GridFunction] = None

    @property
    def unitarity_defect(self) -> float:
        """Largest per-step relative change of ||u||_2."""
        r = self.l2 / self.l2[0]
        return float(np.max(np.abs(np.diff(r)))) if len(r) > 1 else 0.0


def evolve(sym: Symbol, u0: GridFunction, h: float, T: float, dt: Optional[float] = None,
           norms: Sequence = (), exact_free: bool = True) -> EvolutionRun:
    """Strang split-step evolution up to time T (negative T runs backwards).

    The time step must satisfy |dt| <= h/4 unless V vanishes, in which case the
    scheme is exact for any step.  ``norms`` lists the L^q norms recorded after
    every step.
    """
    _check(sym, u0, h)
    g = u0.grid
    qs = [_parse_p(q) for q in norms]
    free = is_free(sym, g)
    dt = DEFAULT_DT * h if dt is None else abs(float(dt))
    if dt <= 0:
        raise ValueError("time step must be positive")
    if dt > DT_RULE * h * (1 + 1e-12) and not (free and exact_free):
        raise ValueError(f"time step {dt} exceeds h/4 = {DT_RULE * h}")
    steps = max(1, math.ceil(abs(T) / dt - 1e-9)) if T != 0 else 0
    step = (T / steps) if steps else 0.0
    st = _Stepper(sym, g, step)
    v = u0.values.astype(complex)
    cell = g.cell()
    times = [0.0]
    rec = {q: [lp_norm_values(v, q, cell)] for q in qs}
    l2 = [lp_norm_values(v, 2, cell)]
    if steps:
        v = v * st.half
    for s in range(steps):
        v = st.kinetic(v)
        # |u| is unchanged by the trailing potential phase, so norms are taken here
        for q in qs:
            rec[q].append(lp_norm_values(v, q, cell))
        l2.append(lp_norm_values(v, 2, cell))
        times.append((s + 1) * step)
        v = v * (st.half if s == steps - 1 else st.full)
    return EvolutionRun(sym, h, step, np.array(times), {q: np.array(r) for q, r in rec.items()}, np.array(l2),
                        GridFunction(g, v))


def free_evolution(sym: Symbol, u0: GridFunction, t: float) -> GridFunction:
    """exp(-i t K(hD)/h) u0, exact for V = 0."""
    if is_free(sym, u0.grid) is False:
        raise ValueError("exact evolution only available when V vanishes")
    g = u0.grid
    F = semiclassical_fourier(u0, "forward")
    ph = np.exp(-1j * t * _kinetic_values(sym, g) / g.h)
    return semiclassical_fourier(GridFunction(g, F.values * ph, "xi"), "inverse")


def _state_at(sym: Symbol, u0: GridFunction, times: np.ndarray, dt: Optional[float]) -> list[GridFunction]:
    """Solution at each requested time (sorted), exact when free, split-step otherwise."""
    if is_free(sym, u0.grid):
        return [free_evolution(sym, u0, t) for t in times]
    out, cur, t_cur = [], u0, 0.0
    for t in times:
        if t > t_cur:
            cur = evolve(sym, cur, u0.grid.h, t - t_cur, dt).final
            t_cur = t
        out.append(cur)
    return out


# ---------------------------------------------------------------------------
# dispersive and Strichartz checks

FREQ_CUTOFF = 1.0  # chi = 1 on |xi| <= 1/2, supported in |xi| < 1


def propagation_grid(k: int, h: float, t_max: float, L: Optional[float] = None, N: Optional[int] = None) -> Grid:
    """Box containing the free flow of frequencies |xi| < 1 up to t_max, resolving them."""
    L = (2.0 * FREQ_CUTOFF * t_max + 1.0) if L is None else L
    if N is None:
        N = 1 << max(3, math.ceil(math.log2(3.0 * L * FREQ_CUTOFF / (math.pi * h))))
    return make_grid(k, L, N, h)


def localized_delta(grid: Grid, radius: float = FREQ_CUTOFF) -> GridFunction:
    """chi(hD) delta_0 with delta_0 the one-cell unit-mass spike at the origin."""
    d = np.zeros(grid.shape, dtype=complex)
    d[(grid.N // 2,) * grid.n] = 1.0 / grid.cell()
    F = semiclassical_fourier(GridFunction(grid, d), "forward")
    r = np.sqrt(sum(c**2 for c in grid.dual_coords()))
    return semiclassical_fourier(GridFunction(grid, F.values * radial_cutoff(r, radius), "xi"), "inverse")


def dispersive_ratio(sym: Symbol, h: float, t_list, t0: float = DEFAULT_T0, grid: Optional[Grid] = None,
                     dt: Optional[float] = None) -> list[tuple[float, float]]:
    """[(t, ||u(t)||_inf h^{k/2} (h+|t|)^{k/2})] for the frequency-localized delta."""
    t_list = [float(t) for t in t_list]
    if any(abs(t) > t0 * (1 + 1e-12) for t in t_list):
        raise ValueError(f"times must satisfy |t| <= t0 = {t0}")
    k = sym.n
    g = propagation_grid(k, h, max([abs(t) for t in t_list] + [0.0])) if grid is None else grid
    u0 = localized_delta(g)
    if not sym.is_split:
        raise ValueError(f"symbol {sym.name!r} is not of split form K(xi) + V(x)")
    order = np.argsort(np.abs(t_list))
    states = _state_at(sym, u0, np.abs(np.array(t_list))[order], dt)
    out = [None] * len(t_list)
    for i, s in zip(order, states):
        t = t_list[i]
        out[i] = (t, lp_norm(s, math.inf) * h ** (k / 2) * (h + abs(t)) ** (k / 2))
    return out


def admissible(p, q, k: int) -> bool:
    p, q = _parse_p(p), _parse_p(q)
    ip = 0.0 if p == math.inf else 1 / p
    iq = 0.0 if q == math.inf else 1 / q
    return abs(2 * ip + k * iq - k / 2) <= ADMISSIBLE_TOL


def strichartz_times(h: float, T: float, m: int = 64) -> np.ndarray:
    """Uniform on [0, h], geometric on [h, T]: the solution changes on scale h first."""
    return np.unique(np.concatenate([np.linspace(0.0, min(h, T), 9), np.geomspace(min(h, T), T, m)]))


def strichartz_quotient(sym: Symbol, u0: Optional[GridFunction], h: float, p, q, T: float = DEFAULT_T0,
                        log_mode: bool = False, dt: Optional[float] = None, m: int = 64) -> float:
    """(int_0^T ||u(t)||_q^p dt)^{1/p} h^{1/p} / ||u0||_2.

    In log mode (the pair (2, inf) for k = 2) the factor h^{1/p} is replaced by
    division by (log(1/h)/h)^{1/2}.  ``u0 = None`` uses the localized delta.
    """
    k = sym.n
    p, q = _parse_p(p), _parse_p(q)
    if not admissible(p, q, k):
        raise ValueError(f"pair (p, q) = ({p}, {q}) is not admissible for k = {k}: need 2/p + k/q = k/2")
    endpoint = p == 2 and q == math.inf
    if endpoint and not log_mode:
        raise ValueError("the pair (2, inf) needs log mode")
    if log_mode and not endpoint:
        raise ValueError("log mode applies to the pair (2, inf) only")
    if p == math.inf:
        raise ValueError("p = inf is the energy estimate; use evolve for unitarity")
    if u0 is None:
        u0 = localized_delta(propagation_grid(k, h, T))
    _check(sym, u0, h)
    times = strichartz_times(h, T, m)
    vals = np.array([lp_norm(s, q) ** p for s in _state_at(sym, u0, times, dt)])
    integral = float(np.trapezoid(vals, times)) ** (1.0 / p)
    scale = (math.log(1.0 / h) / h) ** -0.5 if log_mode else h ** (1.0 / p)
    return integral * scale / lp_norm(u0, 2)


def duhamel_energy_check(sym: Symbol, u0: GridFunction, forcing: Union[None, GridFunction, Callable], h: float,
                         t: float, dt: Optional[float] = None) -> tuple[float, float]:
    """(||u(t)||_2, sqrt(t)/h ||f||_{L^2([0,t] x R^n)} + ||u0||_2) for (hD_t + P)u = f.

    Steps u <- S(dt) u + (i/h) dt S(dt/2) f(t + dt/2) with S the split-step
    propagator; the forcing norm uses the same midpoint rule, so the
    inequality holds exactly for the discrete scheme.
    """
    _check(sym, u0, h)
    g = u0.grid
    free = is_free(sym, g)
    dt = DEFAULT_DT * h if dt is None else float(dt)
    if dt > DT_RULE * h * (1 + 1e-12) and not free:
        raise ValueError(f"time step {dt} exceeds h/4 = {DT_RULE * h}")
    if t < 0:
        raise ValueError("Duhamel check runs forward in time")
    steps = max(1, math.ceil(t / dt - 1e-9))
    step = t / steps
    full = _Stepper(sym, g, step)
    half = _Stepper(sym, g, step / 2)
    cell = g.cell()

    def f_at(s):
        if forcing is None:
            return np.zeros(g.shape, dtype=complex)
        if isinstance(forcing, GridFunction):
            return forcing.values
        r = forcing(s)
        return np.asarray(r.values if isinstance(r, GridFunction) else r, dtype=complex)

    v = u0.values.astype(complex)
    f_sq = 0.0
    for s in range(steps):
        fm = f_at((s + 0.5) * step)
        f_sq += step * float(np.sum(np.abs(fm) ** 2)) * cell
        v = full.half * full.kinetic(full.half * v)
        if np.any(fm):
            w = half.half * half.kinetic(half.half * fm)
            v = v + (1j / h) * step * w
    lhs = lp_norm_values(v, 2, cell)
    rhs = math.sqrt(t) / h * math.sqrt(f_sq) + lp_norm(u0, 2)
    return lhs, rhs
