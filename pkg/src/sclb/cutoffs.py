"""Fixed smooth cutoff prescriptions shared by the quasimode builders.

All bumps are built from exp(-1/(1 - t^2)) so runs are reproducible.
"""
import numpy as np


def bump(t):
    """exp(1 - 1/(1-t^2)) on (-1, 1), zero outside; peak value 1 at t = 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    s = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s * s))
    return out


def _psi(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def smooth_step(s):
    """C^infinity step: 0 for s <= 0, 1 for s >= 1."""
    a = _psi(s)
    b = _psi(1.0 - np.asarray(s, dtype=float))
    return a / (a + b)


def plateau(t, a, b, width):
    """Smooth cutoff supported in (a, b), equal to 1 on [a + width, b - width]."""
    t = np.asarray(t, dtype=float)
    return smooth_step((t - a) / width) * smooth_step((b - t) / width)


def radial_cutoff(r, radius):
    """Equal to 1 for r <= radius/2, supported in r < radius."""
    return smooth_step((radius - np.asarray(r, dtype=float)) / (0.5 * radius))
