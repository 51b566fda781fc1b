"""Closed-form Green's functions of second order model problems on [0, 1].

These are independent of the numerical assembly and serve as ground truth.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SMALL_M = 1e-6


def _mixed_k1_g(M, t, s):
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    right = s <= t
    if abs(M) < SMALL_M:
        # series of (1 - e^{M s})/M and e^{M s}(e^{-M t} - 1)/M
        r = -(s + M * s**2 / 2 + M**2 * s**3 / 6)
        e = -(t + M * (2 * s * t - t**2) / 2 + M**2 * (3 * s**2 * t - 3 * s * t**2 + t**3) / 6)
        return np.where(right, r, e)
    r = -np.expm1(M * s) / M
    e = np.exp(M * s) * np.expm1(-M * t) / M
    return np.where(right, r, e)


def mixed_k1_kernel(M: float, t, s, l: int = 0):
    """Kernel of ``u'' + M u' = sigma``, ``u(0) = u'(1) = 0`` (or its t-derivative)."""
    if l == 0:
        out = _mixed_k1_g(M, t, s)
    elif l == 1:
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        out = np.where(s <= t, 0.0, -np.exp(M * (s - t)))
    elif l == 2:
        # u'' = -M u' off the diagonal
        return -M * mixed_k1_kernel(M, t, s, 1)
    else:
        raise ValueError("l must be 0, 1 or 2")
    return float(out) if np.ndim(out) == 0 else out


def _check_mixed_k0(M):
    if M > 0:
        w = np.sqrt(M)
        q = (w - np.pi / 2) / np.pi
        if abs(q - round(q)) < 1e-12:
            raise ValueError(f"M={M} is an eigenvalue of the mixed problem")


def mixed_k0_kernel(M: float, t, s, l: int = 0):
    """Kernel of ``u'' + M u = sigma``, ``u(0) = u'(1) = 0``.

    Built from the pair ``u1(0) = 0``, ``u2'(1) = 0`` with unit jump in the
    first derivative.
    """
    _check_mixed_k0(M)
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    lo, hi = np.minimum(t, s), np.maximum(t, s)
    left = t <= s  # t is the smaller argument
    if l == 2:
        return -M * mixed_k0_kernel(M, t, s, 0)
    if M > 0:
        w = np.sqrt(M)
        den = np.cos(w)
        if l == 0:
            out = -np.sin(w * lo) * np.cos(w * (1 - hi)) / (w * den)
        elif l == 1:
            out = np.where(left,
                           -np.cos(w * t) * np.cos(w * (1 - s)) / den,
                           -np.sin(w * s) * np.sin(w * (1 - t)) / den)
        else:
            raise ValueError("l must be 0, 1 or 2")
    elif M < 0:
        w = np.sqrt(-M)
        # sinh(w lo) cosh(w (1-hi)) / cosh(w) rewritten with nonpositive exponents
        tail = 2.0 * (1.0 + np.exp(-2 * w))
        if l == 0:
            num = (np.exp(w * (lo - hi)) + np.exp(w * (lo + hi - 2))
                   - np.exp(-w * (lo + hi)) - np.exp(w * (hi - lo - 2)))
            out = -num / (w * tail)
        elif l == 1:
            # left: cosh(w t) cosh(w(1-s)); right: -sinh(w s) sinh(w(1-t)), over cosh w
            cc = (np.exp(w * (t - s)) + np.exp(w * (t + s - 2))
                  + np.exp(-w * (t + s)) + np.exp(w * (s - t - 2))) / tail
            ss = (np.exp(w * (s - t)) - np.exp(w * (s + t - 2))
                  - np.exp(-w * (s + t)) + np.exp(w * (t - s - 2))) / tail
            out = np.where(left, -cc, ss)
        else:
            raise ValueError("l must be 0, 1 or 2")
    else:
        if l == 0:
            out = -lo
        elif l == 1:
            out = np.where(left, -1.0, 0.0)
        else:
            raise ValueError("l must be 0, 1 or 2")
    return float(out) if np.ndim(out) == 0 else out


def dirichlet_k0_kernel(M: float, t, s, l: int = 0):
    """Kernel of ``u'' + M u = sigma``, ``u(0) = u(1) = 0``."""
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    lo, hi = np.minimum(t, s), np.maximum(t, s)
    left = t <= s
    if l == 2:
        return -M * dirichlet_k0_kernel(M, t, s, 0)
    if M > 0:
        w = np.sqrt(M)
        q = w / np.pi
        if abs(q - round(q)) < 1e-12:
            raise ValueError(f"M={M} is a Dirichlet eigenvalue")
        den = w * np.sin(w)
        if l == 0:
            out = -np.sin(w * lo) * np.sin(w * (1 - hi)) / den
        else:
            out = np.where(left, -w * np.cos(w * t) * np.sin(w * (1 - s)),
                           w * np.sin(w * s) * np.cos(w * (1 - t))) / den
    elif M < 0:
        w = np.sqrt(-M)
        den = w * np.sinh(w)
        if l == 0:
            out = -np.sinh(w * lo) * np.sinh(w * (1 - hi)) / den
        else:
            out = np.where(left, -w * np.cosh(w * t) * np.sinh(w * (1 - s)),
                           w * np.sinh(w * s) * np.cosh(w * (1 - t))) / den
    else:
        if l == 0:
            out = -lo * (1 - hi)
        else:
            out = np.where(left, -(1 - s), s)
    if l not in (0, 1):
        raise ValueError("l must be 0, 1 or 2")
    return float(out) if np.ndim(out) == 0 else out


_KERNELS = {
    "mixed-k0": mixed_k0_kernel,
    "mixed-k1": mixed_k1_kernel,
    "dirichlet-k0": dirichlet_k0_kernel,
}


@dataclass(frozen=True)
class ClosedFormKernel:
    tag: str
    M: float

    def __post_init__(self):
        if self.tag not in _KERNELS:
            raise ValueError(f"unknown oracle {self.tag!r}")

    def __call__(self, t, s, l: int = 0):
        return _KERNELS[self.tag](self.M, t, s, l)

    @property
    def notes(self) -> str:
        return {
            "mixed-k0": "undefined for M = (pi/2 + j pi)^2, j = 0, 1, ...",
            "mixed-k1": "defined for every real M",
            "dirichlet-k0": "undefined for M = (j pi)^2, j = 1, 2, ...",
        }[self.tag]
