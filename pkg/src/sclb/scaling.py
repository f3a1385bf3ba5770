"""Predicted L^p growth exponents, dyadic h sweeps, log-log fits and verdicts.

Norms are modelled as ||u(h)||_p ~ h^(-mu(p)), possibly times a power of
log(1/h).  Fits regress log2 ||u|| on log2(1/h) (and optionally on
log2 log2(1/h)).
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .grid import _parse_p
from .symbols import CaseTag

ENDPOINT_TOL = 1e-12


@dataclass(frozen=True)
class ExponentPrediction:
    mu: float
    correction: str = "none"  # none | sqrt_log | power_log
    alpha: Optional[float] = None  # exponent of log(1/h) for power_log
    source: str = ""
    literal_mu: Optional[float] = None  # exponent as printed, where that differs

    def as_dict(self) -> dict:
        return {"mu": self.mu, "correction": self.correction, "alpha": self.alpha,
                "source": self.source, "literal_mu": self.literal_mu}


def _inv(p: float) -> float:
    return 0.0 if p == math.inf else 1.0 / p


def _same_p(p: float, q: float) -> bool:
    if math.isinf(p) or math.isinf(q):
        return p == q
    return abs(p - q) <= ENDPOINT_TOL * max(1.0, abs(q))


def sogge_exponent(n: int) -> float:
    """2(n+1)/(n-1); infinite for n = 1."""
    return math.inf if n == 1 else 2.0 * (n + 1) / (n - 1)


def sobolev_exponent(n: int) -> float:
    """2n/(n-2); infinite for n <= 2."""
    return math.inf if n <= 2 else 2.0 * n / (n - 2)


def turning_exponent(n: int) -> float:
    """2(n+3)/(n+1), where the turning-point curve changes regime."""
    return 2.0 * (n + 3) / (n + 1)


def predicted_exponent(case: CaseTag, n: int, p) -> ExponentPrediction:
    p = _parse_p(p)
    if p < 2:
        raise ValueError(f"exponent tables need p >= 2, got {p}")
    if n not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {n}")
    s = 0.5 - _inv(p)
    if case is CaseTag.ELLIPTIC:
        return ExponentPrediction(n * s - 1.0, source="elliptic estimate")
    if case is CaseTag.PRINCIPAL_NONDEG:
        ps = sogge_exponent(n)
        if p <= ps:
            return ExponentPrediction((n - 1) * s / 2.0, source="curved characteristic set, below the Sogge exponent")
        return ExponentPrediction(n * s - 0.5, source="curved characteristic set, above the Sogge exponent")
    if case is CaseTag.NONPRINCIPAL_NONDEG:
        if n == 1:
            raise ValueError("no non-principal bound in dimension one (the harmonic ground state is a counterexample)")
        pb = sobolev_exponent(n)
        if p <= pb:
            corr = "sqrt_log" if (n == 2 and p == math.inf) else "none"
            return ExponentPrediction(n * s / 2.0, correction=corr, source="non-principal nondegenerate, low range")
        return ExponentPrediction((n - 1) / 2.0 - n * _inv(p), source="non-principal nondegenerate, high range")
    if case is CaseTag.TURNING_POINT:
        pa, pb = turning_exponent(n), sobolev_exponent(n)
        lit_low = (n - 1) / 2.0 * (_inv(p) - 0.5)
        lit_high = (2.0 / 3.0) * n * _inv(p) + (2 * n - 1) / 6.0
        if _same_p(p, pa):
            return ExponentPrediction((n - 1) / (2.0 * (n + 3)), correction="power_log",
                                      alpha=(n + 1) / (2.0 * (n + 3)),
                                      source="turning point, regime endpoint")
        if p < pa:
            return ExponentPrediction((n - 1) * s / 2.0, source="turning point, strip estimate range",
                                      literal_mu=lit_low)
        if p <= pb:
            return ExponentPrediction((2 * n - 1) / 6.0 - 2.0 * n * _inv(p) / 3.0,
                                      source="turning point, dyadic sum range", literal_mu=lit_high)
        return ExponentPrediction((n - 1) / 2.0 - n * _inv(p), source="turning point, beyond the Sobolev exponent")
    raise ValueError(f"no exponent table for case {case}")


def strip_exponents(p, n: int) -> tuple[float, float]:
    """(sigma(p), mu(p)) of the rescaled strip estimates near a turning point."""
    p = _parse_p(p)
    if p < 2 or p > sobolev_exponent(n) * (1 + ENDPOINT_TOL):
        raise ValueError(f"strip exponents need 2 <= p <= {sobolev_exponent(n)}, got {p}")
    ip = _inv(p)
    if p >= sogge_exponent(n):
        sigma = (n - 1) / 2.0 - n * ip
    else:
        sigma = (n - 1) / 2.0 * (0.5 - ip)
    return sigma, n * (0.5 - ip) - 1.5 * sigma


# ---------------------------------------------------------------------------
# fitting

@dataclass(frozen=True)
class Fit:
    slope: float
    stderr: float
    intercept: float
    log_coef: Optional[float] = None
    log_coef_stderr: Optional[float] = None


def fit_power(h_list: Sequence[float], values: Sequence[float], model: str = "power") -> Fit:
    """Least squares for log2 v = a + mu log2(1/h) [+ beta log2 log2(1/h)]."""
    h = np.asarray(h_list, dtype=float)
    v = np.asarray(values, dtype=float)
    if h.shape != v.shape or h.size < 3:
        raise ValueError("need at least 3 (h, value) points of matching length")
    if np.any(h <= 0) or np.any(v <= 0):
        raise ValueError("h and fitted values must be positive")
    t = np.log2(1.0 / h)
    cols = [np.ones_like(t), t]
    if model == "power_log":
        if np.any(t <= 1):
            raise ValueError("power_log model needs h < 1/2 so that log2 log2(1/h) is defined")
        cols.append(np.log2(t))
    elif model != "power":
        raise ValueError(f"unknown model {model!r}; expected power or power_log")
    X = np.stack(cols, axis=1)
    y = np.log2(v)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    dof = len(y) - X.shape[1]
    resid = y - X @ coef
    if dof > 0:
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.pinv(X.T @ X)
        err = np.sqrt(np.maximum(np.diag(cov), 0.0))
    else:
        err = np.full(X.shape[1], math.inf)
    if model == "power_log":
        return Fit(float(coef[1]), float(err[1]), float(coef[0]), float(coef[2]), float(err[2]))
    return Fit(float(coef[1]), float(err[1]), float(coef[0]))


class Verdict(enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


EXACT_RESIDUAL = 1e-8


@dataclass
class ScalingReport:
    family: str
    case: str
    n: int
    p: float
    h: list
    norms: list
    slope: float
    stderr: float
    predicted: ExponentPrediction
    model: str = "power"
    tol: float = 0.05
    log_coef: Optional[float] = None
    log_coef_stderr: Optional[float] = None
    residuals: list = field(default_factory=list)
    residual_order: Optional[float] = None
    required_order: Optional[float] = None
    verdict: Optional[Verdict] = None

    def as_dict(self) -> dict:
        return {
            "family": self.family, "case": self.case, "n": self.n, "p": self.p,
            "points": [{"h": a, "norm": b} for a, b in zip(self.h, self.norms)],
            "residuals": list(self.residuals),
            "slope": self.slope, "stderr": self.stderr,
            "log_coef": self.log_coef, "log_coef_stderr": self.log_coef_stderr,
            "predicted": self.predicted.mu, "literal_predicted": self.predicted.literal_mu,
            "correction": self.predicted.correction, "alpha": self.predicted.alpha,
            "source": self.predicted.source, "model": self.model, "tol": self.tol,
            "residual_order": self.residual_order, "required_order": self.required_order,
            "verdict": None if self.verdict is None else self.verdict.value,
        }


def residual_order(h_list, residuals) -> float:
    """Fitted order r in ||Pu|| ~ h^r; infinite when every residual is at round-off level."""
    r = np.asarray(residuals, dtype=float)
    if np.all(r <= EXACT_RESIDUAL):
        return math.inf
    return -fit_power(h_list, r).slope


def verdict(report: ScalingReport, slope_tol: Optional[float] = None) -> Verdict:
    tol = report.tol if slope_tol is None else slope_tol
    if report.stderr > tol / 2:
        return Verdict.INCONCLUSIVE
    if abs(report.slope - report.predicted.mu) > tol:
        return Verdict.FAIL
    if report.required_order is not None and report.residual_order is not None:
        if report.residual_order < report.required_order:
            return Verdict.FAIL
    return Verdict.PASS


def thread_count() -> int:
    env = os.environ.get("SCLB_THREADS")
    if env:
        try:
            k = int(env)
        except ValueError:
            raise ValueError(f"SCLB_THREADS must be a positive integer, got {env!r}")
        if k < 1:
            raise ValueError(f"SCLB_THREADS must be a positive integer, got {env!r}")
        return k
    return os.cpu_count() or 1


def parallel_map(fn, items, threads: Optional[int] = None) -> list:
    """Ordered map over a thread pool capped by SCLB_THREADS."""
    items = list(items)
    k = min(thread_count() if threads is None else threads, max(1, len(items)))
    if k == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


def dyadic(a: int, b: int) -> list[float]:
    """[2^-a, ..., 2^-b] for a <= b."""
    if a > b:
        a, b = b, a
    return [2.0 ** -k for k in range(a, b + 1)]


def sweep(family, p_list, h_list, model: str = "power", tol: float = 0.05,
          with_residual: bool = True, threads: Optional[int] = None, **grid_params) -> list[ScalingReport]:
    """Build the family on each h, measure ||u(h)||_p and fit the exponent for every p."""
    from .grid import lp_norm
    from .quantize import residual

    h_list = sorted((float(h) for h in h_list), reverse=True)
    if len(h_list) < 3:
        raise ValueError("a sweep needs at least 3 values of h")
    ps = [_parse_p(p) for p in p_list]

    def one(h):
        u = family.build(h, **grid_params)
        norms = [lp_norm(u, p) for p in ps]
        res = residual(family.symbol_at(h), u, h) if with_residual else None
        return norms, res

    rows = parallel_map(one, h_list, threads)
    residuals = [r for _, r in rows] if with_residual else []
    order = residual_order(h_list, residuals) if with_residual else None
    reports = []
    for i, p in enumerate(ps):
        norms = [row[0][i] for row in rows]
        f = fit_power(h_list, norms, model)
        rep = ScalingReport(family.name, family.case.value, family.n, p, list(h_list), norms,
                            f.slope, f.stderr, family.prediction(p), model, tol, f.log_coef, f.log_coef_stderr,
                            residuals, order, family.residual_order - 0.2 if with_residual else None)
        rep.verdict = verdict(rep)
        reports.append(rep)
    return sorted(reports, key=lambda r: r.p)
