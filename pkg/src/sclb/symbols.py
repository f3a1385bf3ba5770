"""Phase-space symbols a(x, xi) and classification of characteristic points.

A symbol is evaluated as ``sym(x, xi)`` where ``x`` and ``xi`` are sequences of
``n`` mutually broadcastable arrays (the layout produced by ``Grid.coords``).
Symbols that are finite sums of products ``f(x) g(xi)`` carry that structure in
``terms``; the split ones (each term depends on x only or xi only) admit the fast
quantization path and the split-step propagator.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

FD_STEP = 1e-5

Fn = Callable[..., np.ndarray]


def _one(*args):
    return 1.0


@dataclass(frozen=True)
class Term:
    """f(x) * g(xi); ``None`` stands for the constant 1."""

    fx: Optional[Fn] = None
    fxi: Optional[Fn] = None

    def __call__(self, x, xi):
        a = 1.0 if self.fx is None else self.fx(*x)
        b = 1.0 if self.fxi is None else self.fxi(*xi)
        return np.multiply(a, b)


@dataclass(frozen=True, eq=False)
class Symbol:
    name: str
    n: int
    evaluate: Fn
    terms: Optional[tuple[Term, ...]] = None
    grad_xi: Optional[Fn] = None
    hess_xi: Optional[Fn] = None
    grad_x: Optional[Fn] = None
    params: dict = field(default_factory=dict)

    def __call__(self, x: Sequence, xi: Sequence):
        return self.evaluate(x, xi)

    @property
    def is_split(self) -> bool:
        return self.terms is not None and all(t.fx is None or t.fxi is None for t in self.terms)

    def kinetic(self, *xi):
        """Sum of the pure-frequency terms, K(xi)."""
        self._require_split()
        return sum((t.fxi(*xi) if t.fxi is not None else 0.0) for t in self.terms if t.fx is None)

    def potential(self, *x):
        """Sum of the pure-position terms, V(x) (constants included here)."""
        self._require_split()
        total = 0.0
        for t in self.terms:
            if t.fxi is None:
                total = total + (1.0 if t.fx is None else t.fx(*x))
        return total

    @property
    def has_potential(self) -> bool:
        return self.is_split and any(t.fxi is None for t in self.terms)

    def _require_split(self):
        if not self.is_split:
            raise ValueError(f"symbol {self.name!r} is not of split form K(xi) + V(x)")

    # derivative helpers at a single point -------------------------------------------------
    def dxi(self, x0, xi0) -> np.ndarray:
        x0, xi0 = _pt(x0, self.n), _pt(xi0, self.n)
        if self.grad_xi is not None:
            return np.asarray(self.grad_xi(x0, xi0), dtype=float)
        return _fd_grad(lambda v: self.evaluate(list(x0), list(v)), xi0)

    def dxi2(self, x0, xi0) -> np.ndarray:
        x0, xi0 = _pt(x0, self.n), _pt(xi0, self.n)
        if self.hess_xi is not None:
            return np.asarray(self.hess_xi(x0, xi0), dtype=float)
        return _fd_hess(lambda v: self.evaluate(list(x0), list(v)), xi0)

    def dx(self, x0, xi0) -> np.ndarray:
        x0, xi0 = _pt(x0, self.n), _pt(xi0, self.n)
        if self.grad_x is not None:
            return np.asarray(self.grad_x(x0, xi0), dtype=float)
        return _fd_grad(lambda v: self.evaluate(list(v), list(xi0)), x0)

    def value(self, x0, xi0) -> float:
        return float(np.real(self.evaluate(list(_pt(x0, self.n)), list(_pt(xi0, self.n)))))

    # algebra -----------------------------------------------------------------------------
    def scaled(self, c: float) -> "Symbol":
        ev = self.evaluate
        terms = None if self.terms is None else tuple(_scale_term(t, c) for t in self.terms)
        return Symbol(f"{c}*{self.name}", self.n, lambda x, xi: c * ev(x, xi), terms,
                      None if self.grad_xi is None else (lambda a, b, g=self.grad_xi: c * np.asarray(g(a, b))),
                      None if self.hess_xi is None else (lambda a, b, g=self.hess_xi: c * np.asarray(g(a, b))),
                      None if self.grad_x is None else (lambda a, b, g=self.grad_x: c * np.asarray(g(a, b))))

    def shifted(self, E: float) -> "Symbol":
        """The symbol a - E."""
        ev = self.evaluate
        terms = None if self.terms is None else self.terms + (Term(fx=lambda *x: -E * np.ones(()), fxi=None),)
        return Symbol(f"{self.name}-{E}", self.n, lambda x, xi: ev(x, xi) - E, terms,
                      self.grad_xi, self.hess_xi, self.grad_x, dict(self.params, shift=E))

    def __mul__(self, other: "Symbol") -> "Symbol":
        if self.n != other.n:
            raise ValueError("dimension mismatch in symbol product")
        a, b = self.evaluate, other.evaluate
        terms = None
        if self.terms is not None and other.terms is not None:
            terms = tuple(_mul_terms(s, t) for s in self.terms for t in other.terms)
        return Symbol(f"({self.name})*({other.name})", self.n, lambda x, xi: a(x, xi) * b(x, xi), terms)

    def transformed(self, A: np.ndarray) -> "Symbol":
        """xi -> A xi; used to test invariance of the classification."""
        A = np.asarray(A, dtype=float)
        ev = self.evaluate

        def f(x, xi):
            return ev(x, [sum(A[i, j] * xi[j] for j in range(self.n)) for i in range(self.n)])

        return Symbol(f"{self.name}∘A", self.n, f)


def _scale_term(t: Term, c: float) -> Term:
    fx = t.fx
    return Term(fx=(lambda *x: c * (1.0 if fx is None else fx(*x))), fxi=t.fxi)


def _mul_terms(s: Term, t: Term) -> Term:
    def prod(f, g):
        if f is None:
            return g
        if g is None:
            return f
        return lambda *v: np.multiply(f(*v), g(*v))

    return Term(prod(s.fx, t.fx), prod(s.fxi, t.fxi))


def _pt(v, n) -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (n,):
        raise ValueError(f"expected a point in R^{n}, got shape {v.shape}")
    return v


def _fd_grad(f, v0: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    g = np.empty(len(v0))
    for i in range(len(v0)):
        e = np.zeros(len(v0))
        e[i] = step
        g[i] = (np.real(f(v0 + e)) - np.real(f(v0 - e))) / (2 * step)
    return g


def _fd_hess(f, v0: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    n = len(v0)
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = step
            ej[j] = step
            H[i, j] = np.real(f(v0 + ei + ej) - f(v0 + ei - ej) - f(v0 - ei + ej) + f(v0 - ei - ej)) / (4 * step * step)
    return 0.5 * (H + H.T)


# ---------------------------------------------------------------------------
# built-in symbols

def _sq(*v):
    return sum(np.square(c) for c in v)


def _zeros(n):
    return lambda a, b: np.zeros(n)


def _constant_quadratic(G: np.ndarray):
    G = np.asarray(G, dtype=float)
    n = G.shape[0]

    def K(*xi):
        return sum(G[i, j] * xi[i] * xi[j] for i in range(n) for j in range(n))

    return K


def _compile_expr(expr: str, n: int) -> Fn:
    """Turn an expression in x1..xn (numpy functions allowed) into a callable."""
    code = compile(expr, "<potential>", "eval")
    env = {k: getattr(np, k) for k in ("sin", "cos", "exp", "log", "sqrt", "tanh", "cosh", "sinh", "pi", "abs")}

    def V(*x):
        local = {f"x{i + 1}": x[i] for i in range(n)}
        return np.asarray(eval(code, {"__builtins__": {}, **env}, local), dtype=float) + 0 * sum(x)

    return V


BUILTIN_NAMES = ("xi1", "x1", "harmonic", "hyperbolic", "beam", "model_turning", "schrodinger")


def builtin_symbol(name: str, n: int, params: Optional[dict] = None) -> Symbol:
    """Symbols of the model operators.

    xi1            xi_1
    x1             x_1
    harmonic       |xi|^2 + |x|^2 - E          (params: E, default 1)
    hyperbolic     xi_1^2 - xi_2^2 + x_1^2 - x_2^2   (n = 2)
    beam           xi_1 - |xi'|^2
    model_turning  xi_1^2 + |xi'|^2 - x_1
    schrodinger    sum g^{ij} xi_i xi_j + V(x) (params: g matrix, V callable or expression)
    """
    params = dict(params or {})
    if n not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {n}")
    eye = np.eye(n)
    e1 = eye[0]
    if name == "xi1":
        return Symbol(name, n, lambda x, xi: xi[0] + 0 * x[0], (Term(None, lambda *xi: xi[0]),),
                      grad_xi=lambda a, b: e1.copy(), hess_xi=lambda a, b: np.zeros((n, n)),
                      grad_x=_zeros(n), params=params)
    if name == "x1":
        return Symbol(name, n, lambda x, xi: x[0] + 0 * xi[0], (Term(lambda *x: x[0], None),),
                      grad_xi=_zeros(n), hess_xi=lambda a, b: np.zeros((n, n)),
                      grad_x=lambda a, b: e1.copy(), params=params)
    if name == "harmonic":
        E = float(params.get("E", 1.0))
        return Symbol(name, n, lambda x, xi: _sq(*xi) + _sq(*x) - E,
                      (Term(None, _sq), Term(lambda *x: _sq(*x) - E, None)),
                      grad_xi=lambda a, b: 2 * b, hess_xi=lambda a, b: 2 * eye,
                      grad_x=lambda a, b: 2 * a, params=dict(params, E=E))
    if name == "hyperbolic":
        if n != 2:
            raise ValueError("hyperbolic symbol requires n = 2")
        D = np.diag([2.0, -2.0])
        return Symbol(name, n, lambda x, xi: xi[0] ** 2 - xi[1] ** 2 + x[0] ** 2 - x[1] ** 2,
                      (Term(None, lambda a, b: a * a - b * b), Term(lambda a, b: a * a - b * b, None)),
                      grad_xi=lambda a, b: D @ b, hess_xi=lambda a, b: D.copy(),
                      grad_x=lambda a, b: D @ a, params=params)
    if name == "beam":
        D = -2 * eye
        D[0, 0] = 0.0

        def K(*xi):
            return xi[0] - _sq(*xi[1:]) if n > 1 else xi[0]

        return Symbol(name, n, lambda x, xi: K(*xi) + 0 * x[0], (Term(None, K),),
                      grad_xi=lambda a, b: np.concatenate([[1.0], -2 * b[1:]]), hess_xi=lambda a, b: D.copy(),
                      grad_x=_zeros(n), params=params)
    if name == "model_turning":
        return Symbol(name, n, lambda x, xi: _sq(*xi) - x[0],
                      (Term(None, _sq), Term(lambda *x: -x[0], None)),
                      grad_xi=lambda a, b: 2 * b, hess_xi=lambda a, b: 2 * eye,
                      grad_x=lambda a, b: -e1.copy(), params=params)
    if name == "schrodinger":
        G = np.asarray(params.get("g", eye), dtype=float)
        if G.shape != (n, n):
            raise ValueError(f"metric must be {n}x{n}")
        if np.abs(np.linalg.det(G)) < 1e-12:
            raise ValueError("metric must be nondegenerate")
        G = 0.5 * (G + G.T)
        V = params.get("V", lambda *x: 0.0 * x[0])
        if isinstance(V, str):
            V = _compile_expr(V, n)
        K = _constant_quadratic(G)
        return Symbol(name, n, lambda x, xi: K(*xi) + V(*x), (Term(None, K), Term(V, None)),
                      grad_xi=lambda a, b: 2 * G @ b, hess_xi=lambda a, b: 2 * G.copy(),
                      params={"g": G.tolist(), "V": params.get("V") if isinstance(params.get("V"), str) else "custom"})
    raise ValueError(f"unknown symbol {name!r}; expected one of {', '.join(BUILTIN_NAMES)}")


# ---------------------------------------------------------------------------
# classification

class CaseTag(enum.Enum):
    ELLIPTIC = "elliptic"
    PRINCIPAL_NONDEG = "principal_nondeg"
    NONPRINCIPAL_NONDEG = "nonprincipal_nondeg"
    TURNING_POINT = "turning_point"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class Classification:
    tag: CaseTag
    n: int
    tol: float
    value: float
    grad_xi_norm: float
    curvature: Optional[float]
    hess_det: float
    hess_min_eig: float
    grad_x_norm: float

    def as_dict(self) -> dict:
        return {"tag": self.tag.value, "n": self.n, "tol": self.tol, "value": self.value,
                "grad_xi_norm": self.grad_xi_norm, "curvature": self.curvature,
                "hess_det": self.hess_det, "hess_min_eig": self.hess_min_eig,
                "grad_x_norm": self.grad_x_norm}


def fiber_curvature(grad: np.ndarray, hess: np.ndarray) -> float:
    """Gauss-curvature-like invariant of {xi : p(x0, xi) = 0} at a regular point.

    Uses the bordered Hessian, -det [[H, g], [g^T, 0]] / |g|^(n+1); it vanishes
    exactly when the second fundamental form is degenerate and is unchanged
    when p is multiplied by a constant.
    """
    n = len(grad)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = hess
    M[:n, n] = grad
    M[n, :n] = grad
    return float(-np.linalg.det(M) / np.linalg.norm(grad) ** (n + 1))


def classify_point(sym: Symbol, x0, xi0, tol: float = 1e-8) -> Classification:
    if tol <= 0:
        raise ValueError("tol must be positive")
    val = sym.value(x0, xi0)
    g = sym.dxi(x0, xi0)
    H = sym.dxi2(x0, xi0)
    gx = sym.dx(x0, xi0)
    gn = float(np.linalg.norm(g))
    det = float(np.linalg.det(H))
    mineig = float(np.linalg.eigvalsh(H).min())
    gxn = float(np.linalg.norm(gx))
    curv = fiber_curvature(g, H) if gn > tol else None

    if abs(val) > tol:
        tag = CaseTag.ELLIPTIC
    elif gn > tol:
        tag = CaseTag.PRINCIPAL_NONDEG if abs(curv) > tol else CaseTag.UNCLASSIFIED
    elif mineig > tol and gxn > tol:
        tag = CaseTag.TURNING_POINT
    elif abs(det) > tol:
        tag = CaseTag.NONPRINCIPAL_NONDEG
    else:
        tag = CaseTag.UNCLASSIFIED
    return Classification(tag, sym.n, tol, val, gn, curv, det, mineig, gxn)
