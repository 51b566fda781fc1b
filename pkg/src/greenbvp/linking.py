"""Identities linking Green's functions of two parameter values.

For kernels ``g0 = g[M0]`` and ``g1 = g[M1]`` of the same problem family

    d^l g1(t,s) = d^l g0(t,s) + (M0 - M1) int_a^b d^l gA(t,r) d^k gB(r,s) dr

with ``(A, B) = (0, 1)`` ("first") or ``(1, 0)`` ("second"), and an extra
``(M0 - M1) d^k gB(t,s)`` on the right when ``l = n``.  All residual
functions here return LHS - RHS, which vanishes in exact arithmetic.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .green import VANISH_TOL, GreenFunction
from .quadrature import QuadratureRule

IDENTITIES = ("link-0", "link-1", "dlink-1", "dlink-2", "dlink-n-1", "dlink-n-2", "cross", "cross-n")


class LinkingError(ValueError):
    pass


def _check_pair(g0: GreenFunction, g1: GreenFunction):
    if not g0.spec.same_family(g1.spec):
        raise LinkingError("kernels must share n, coefficients, k, interval and boundary conditions")


def _pairs(t, s):
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    return t.shape, t.ravel(), s.ravel()


def _dl(g: GreenFunction, l: int, t, s):
    """Pointwise ``d^l/dt^l g``; callers guarantee ``t != s`` where the order needs it."""
    return g.derivatives(t, s, l, side="left")[..., l]


def kernel_product_integral(gA: GreenFunction, l: int, gB: GreenFunction, t, s,
                            quad: QuadratureRule) -> np.ndarray:
    """``int_a^b d^l gA(t, r) d^k gB(r, s) dr`` for each pair ``(t, s)``.

    The rule is split at ``r = t`` and ``r = s`` where the factors have kinks
    or jumps, so no node ever hits a diagonal.
    """
    a, b = gA.spec.interval
    k = gB.k
    shape, tf, sf = _pairs(t, s)
    nodes, weights, owner = [], [], []
    for i, (ti, si) in enumerate(zip(tf, sf)):
        x, w = quad.rule(a, b, (ti, si))
        nodes.append(x)
        weights.append(w)
        owner.append(np.full(len(x), i))
    r = np.concatenate(nodes)
    w = np.concatenate(weights)
    idx = np.concatenate(owner)
    left = gA.derivatives(tf[idx], r, l)[..., l]
    right = gB.derivatives(r, sf[idx], k)[..., k]
    out = np.bincount(idx, weights=w * left * right, minlength=len(tf))
    return out.reshape(shape)


def _guard(n: int, l: int, t, s, allow_n: bool = False):
    top = n if allow_n else n - 1
    if not 0 <= l <= top:
        raise ValueError(f"derivative order l={l} outside 0..{top}")
    if l >= n - 1 and np.any(np.asarray(t) == np.asarray(s)):
        raise ValueError(f"order l={l} requires t != s")


def _variant(g0, g1, variant):
    if variant == "first":
        return g0, g1
    if variant == "second":
        return g1, g0
    raise ValueError(f"variant must be 'first' or 'second', got {variant!r}")


def linking_residual(g0: GreenFunction, g1: GreenFunction, l: int, variant: str, t, s,
                     quad: QuadratureRule | None = None):
    _check_pair(g0, g1)
    _guard(g0.n, l, t, s)
    quad = quad or QuadratureRule()
    gA, gB = _variant(g0, g1, variant)
    dM = g0.M - g1.M
    diff = _dl(g1, l, t, s) - _dl(g0, l, t, s)
    if dM == 0.0:
        out = diff
    else:
        out = diff - dM * kernel_product_integral(gA, l, gB, t, s, quad)
    return float(out) if np.ndim(out) == 0 else out


def linking_residual_order_n(g0: GreenFunction, g1: GreenFunction, variant: str, t, s,
                             quad: QuadratureRule | None = None):
    _check_pair(g0, g1)
    n = g0.n
    _guard(n, n, t, s, allow_n=True)
    quad = quad or QuadratureRule()
    gA, gB = _variant(g0, g1, variant)
    dM = g0.M - g1.M
    diff = _dl(g1, n, t, s) - _dl(g0, n, t, s)
    if dM == 0.0:
        out = diff
    else:
        integral = kernel_product_integral(gA, n, gB, t, s, quad)
        out = diff - dM * integral - dM * _dl(gB, gB.k, t, s)
    return float(out) if np.ndim(out) == 0 else out


def cross_identity_residual(g0: GreenFunction, g1: GreenFunction, l: int, t, s,
                            quad: QuadratureRule | None = None):
    """Swap symmetry of the kernel-product integrals (order ``l <= n``)."""
    _check_pair(g0, g1)
    n = g0.n
    _guard(n, l, t, s, allow_n=True)
    quad = quad or QuadratureRule()
    out = (kernel_product_integral(g0, l, g1, t, s, quad)
           - kernel_product_integral(g1, l, g0, t, s, quad))
    if l == n:
        out = out + _dl(g1, g1.k, t, s) - _dl(g0, g0.k, t, s)
    return float(out) if np.ndim(out) == 0 else out


def identity_residual(identity: str, g0, g1, t, s, quad=None, l: int | None = None):
    """Residual of one identity by tag; ``l`` is used by ``dlink-1``, ``dlink-2`` and ``cross``."""
    n = g0.n
    if identity == "link-0":
        return linking_residual(g0, g1, 0, "first", t, s, quad)
    if identity == "link-1":
        return linking_residual(g0, g1, 0, "second", t, s, quad)
    if identity == "dlink-1":
        return linking_residual(g0, g1, l, "first", t, s, quad)
    if identity == "dlink-2":
        return linking_residual(g0, g1, l, "second", t, s, quad)
    if identity == "dlink-n-1":
        return linking_residual_order_n(g0, g1, "first", t, s, quad)
    if identity == "dlink-n-2":
        return linking_residual_order_n(g0, g1, "second", t, s, quad)
    if identity == "cross":
        return cross_identity_residual(g0, g1, l, t, s, quad)
    if identity == "cross-n":
        return cross_identity_residual(g0, g1, n, t, s, quad)
    raise ValueError(f"unknown identity {identity!r}")


@dataclass
class ResidualReport:
    identity: str
    grid: dict
    max_abs: float
    mean_abs: float
    argmax: tuple[float, float]
    t: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)

    def passed(self, bound: float) -> bool:
        return self.max_abs <= bound

    def to_json(self) -> dict:
        return {
            "identity": self.identity,
            "grid": self.grid,
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "argmax": list(self.argmax),
        }

    def csv_rows(self):
        for ti, si, ri in zip(self.t, self.s, self.residuals):
            yield (self.identity, repr(float(ti)), repr(float(si)), repr(float(ri)))


def off_diagonal_grid(a: float, b: float, count: int):
    """Pairs from a ``count x count`` grid whose t and s nodes are staggered by a quarter cell."""
    h = (b - a) / count
    ts = a + h * (np.arange(count) + 0.5)
    ss = a + h * (np.arange(count) + 0.25)
    T, S = np.meshgrid(ts, ss, indexing="ij")
    return T.ravel(), S.ravel()


def residual_report(identity: str, g0, g1, t, s, quad=None, l: int | None = None,
                    grid: dict | None = None) -> ResidualReport:
    t = np.asarray(t, dtype=float).ravel()
    s = np.asarray(s, dtype=float).ravel()
    res = np.asarray(identity_residual(identity, g0, g1, t, s, quad, l), dtype=float).ravel()
    absr = np.abs(res)
    i = int(np.argmax(absr))
    tag = identity if l is None or identity not in ("dlink-1", "dlink-2", "cross") else f"{identity}:l={l}"
    return ResidualReport(tag, grid or {"points": int(len(t))}, float(absr[i]), float(absr.mean()),
                          (float(t[i]), float(s[i])), t, s, res)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("identity", "t", "s", "residual"))
    for rep in reports:
        w.writerows(rep.csv_rows())
    return buf.getvalue()


def reports_to_json(reports) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2, sort_keys=True)


# Comparison / trichotomy ----------------------------------------------------

CASE_LEFT_ZERO = "case-1"
CASE_RIGHT_ZERO = "case-2"
CASE_STRICT = "case-3"
INDETERMINATE = "indeterminate"
VIOLATION = "violation"
HYPOTHESIS_VIOLATION = "hypothesis-violation"
BOUNDARY = "boundary"


def _sign_class(values: np.ndarray, tol: float) -> str | None:
    if np.all(values >= -tol):
        return "nonneg"
    if np.all(values <= tol):
        return "nonpos"
    return None


def _both_sides(g: GreenFunction, l: int, T, S):
    if l < g.n - 1:
        v = _dl(g, l, T, S)
        return v, v
    return (g.derivatives(T, S, l, side="left")[..., l],
            g.derivatives(T, S, l, side="right")[..., l])


@dataclass
class Comparison:
    """Verdict per grid point for ``d^l g1`` against ``d^l g0`` (``M0 < M1``)."""

    ts: np.ndarray
    ss: np.ndarray
    verdicts: np.ndarray
    gap: np.ndarray
    direction: str | None
    hypotheses: dict

    def counts(self) -> dict:
        vals, cnt = np.unique(self.verdicts, return_counts=True)
        return {str(v): int(c) for v, c in zip(vals, cnt)}


def compare_kernels(g0: GreenFunction, g1: GreenFunction, l: int, ts, ss,
                    margin: float = 1e-8, sign_tol: float = 1e-9) -> Comparison:
    """Classify each interior grid point into the three-way alternative.

    ``direction`` is ``"decrease"`` when ``d^l g[M0]`` and ``d^k g[M1]`` (or
    ``d^l g[M1]`` and ``d^k g[M0]``) share a sign on the grid, ``"increase"``
    when they have opposite signs, and ``None`` (every verdict
    ``hypothesis-violation``) otherwise.  Boundary rows and columns and, for
    ``l >= n-1``, the diagonal are evaluated for the sign hypotheses but get
    the verdict ``boundary``.
    """
    _check_pair(g0, g1)
    if not g0.M < g1.M:
        raise ValueError("compare_kernels expects M0 < M1")
    n, k = g0.n, g0.k
    ts = np.asarray(ts, dtype=float)
    ss = np.asarray(ss, dtype=float)
    T, S = np.meshgrid(ts, ss, indexing="ij")
    A0 = _both_sides(g0, l, T, S)
    A1 = _both_sides(g1, l, T, S)
    K0 = _both_sides(g0, k, T, S)
    K1 = _both_sides(g1, k, T, S)

    def cls(pair):
        vals = np.concatenate([pair[0].ravel(), pair[1].ravel()])
        scale = max(1.0, float(np.max(np.abs(vals))))
        return _sign_class(vals, sign_tol * scale)

    hyp = {"i": (cls(A0), cls(K1)), "ii": (cls(A1), cls(K0))}
    direction = None
    for sa, sb in hyp.values():
        if sa is not None and sb is not None:
            direction = "decrease" if sa == sb else "increase"
            break
    a, b = g0.spec.interval
    interior = (T > a) & (T < b) & (S > a) & (S < b)
    if l >= n - 1:
        interior &= T != S
    v0, v1 = A0[0], A1[0]
    gap = v1 - v0
    scale = max(1.0, float(np.max(np.abs(v0))), float(np.max(np.abs(v1))))
    verdicts = np.full(T.shape, BOUNDARY, dtype=object)
    if direction is None:
        verdicts[interior] = HYPOTHESIS_VIOLATION
    else:
        zero = (np.abs(v0) < VANISH_TOL * scale) & (np.abs(v1) < VANISH_TOL * scale)
        strict = gap < -margin if direction == "decrease" else gap > margin
        wrong = gap > margin if direction == "decrease" else gap < -margin
        verdicts[interior] = INDETERMINATE
        verdicts[interior & wrong] = VIOLATION
        verdicts[interior & strict] = CASE_STRICT
        verdicts[interior & zero & (T < S)] = CASE_LEFT_ZERO
        verdicts[interior & zero & (T > S)] = CASE_RIGHT_ZERO
    return Comparison(ts, ss, verdicts, gap, direction,
                      {key: list(val) for key, val in hyp.items()})


def parameter_order_check(g0: GreenFunction, g1: GreenFunction, ts, ss, sign_tol: float = 1e-9):
    """If ``d^k g0 >= 0 >= d^k g1`` with strict values somewhere, the parameters must satisfy ``M1 < M0``.

    Returns ``None`` when the sign pattern does not hold, else whether the
    parameters are ordered as required.
    """
    _check_pair(g0, g1)
    k = g0.k
    T, S = np.meshgrid(np.asarray(ts, float), np.asarray(ss, float), indexing="ij")
    K0 = np.concatenate([x.ravel() for x in _both_sides(g0, k, T, S)])
    K1 = np.concatenate([x.ravel() for x in _both_sides(g1, k, T, S)])
    scale = max(1.0, float(np.max(np.abs(K0))), float(np.max(np.abs(K1))))
    tol = sign_tol * scale
    if np.all(K0 >= -tol) and np.all(K1 <= tol) and (np.any(K0 > tol) or np.any(K1 < -tol)):
        return bool(g1.M < g0.M)
    return None
