"""Airy function Ai on the real line.

Maclaurin series (evaluated in extended precision to tame the cancellation of
its alternating terms) for |t| <= 8, and the standard asymptotic expansions
beyond.  Absolute accuracy is about 1e-12 on [-30, 5].
"""
import numpy as np

_SERIES_CUT = 8.0
_AI0 = np.longdouble("0.355028053887817239260063186004")
_DAI0 = np.longdouble("0.258819403792806798405183560189")  # -Ai'(0)
_MAX_ASYMPTOTIC_TERMS = 40


def _series(t: np.ndarray) -> np.ndarray:
    t = t.astype(np.longdouble)
    t3 = t**3
    a = np.ones_like(t)
    b = t.copy()
    f = a.copy()
    g = b.copy()
    k = 0
    while True:
        a = a * t3 / ((3 * k + 2) * (3 * k + 3))
        b = b * t3 / ((3 * k + 3) * (3 * k + 4))
        f += a
        g += b
        k += 1
        if k > 8 and np.all(np.abs(a) + np.abs(b) < 1e-22 * (np.abs(f) + np.abs(g) + 1)):
            break
    return (_AI0 * f - _DAI0 * g).astype(float)


def _u_coeffs(m: int) -> np.ndarray:
    u = np.empty(m)
    u[0] = 1.0
    for k in range(1, m):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
    return u


_U = _u_coeffs(_MAX_ASYMPTOTIC_TERMS)


def _truncated(coeffs: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """Sum an asymptotic series coeffs[k]/zeta^k up to its smallest term."""
    total = np.zeros_like(zeta)
    term_prev = np.full_like(zeta, np.inf)
    active = np.ones(zeta.shape, dtype=bool)
    zk = np.ones_like(zeta)
    for c in coeffs:
        term = c / zk
        grow = np.abs(term) > np.abs(term_prev)
        active &= ~grow
        total = np.where(active, total + term, total)
        term_prev = term
        zk = zk * zeta
    return total


def _ai_positive_large(t: np.ndarray) -> np.ndarray:
    zeta = (2.0 / 3.0) * t**1.5
    signs = (-1.0) ** np.arange(_MAX_ASYMPTOTIC_TERMS)
    s = _truncated(signs * _U, zeta)
    with np.errstate(under="ignore"):
        return np.exp(-zeta) / (2.0 * np.sqrt(np.pi) * t**0.25) * s


def _ai_negative_large(z: np.ndarray) -> np.ndarray:
    zeta = (2.0 / 3.0) * z**1.5
    even = _U[0::2] * (-1.0) ** np.arange(len(_U[0::2]))
    odd = _U[1::2] * (-1.0) ** np.arange(len(_U[1::2]))
    # series in 1/zeta^2, odd part carries one extra 1/zeta
    z2 = zeta * zeta
    p = _truncated(even, z2)
    q = _truncated(odd, z2) / zeta
    phase = zeta - np.pi / 4
    return (np.cos(phase) * p + np.sin(phase) * q) / (np.sqrt(np.pi) * z**0.25)


def airy_ai(t):
    """Ai(t) for real t (scalar or array)."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.empty_like(t)
    mid = np.abs(t) <= _SERIES_CUT
    if mid.any():
        out[mid] = _series(t[mid])
    pos = t > _SERIES_CUT
    if pos.any():
        out[pos] = _ai_positive_large(t[pos])
    neg = t < -_SERIES_CUT
    if neg.any():
        out[neg] = _ai_negative_large(-t[neg])
    return out[0] if scalar else out
