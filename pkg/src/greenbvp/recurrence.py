"""Operators annihilating t-derivatives of the Green's function.

Differentiating ``T g(., s) = 0`` once and eliminating the undifferentiated
term gives an n-th order equation for ``d/dt g``; repeating this ``l`` times
yields ``H_l`` with ``H_l(d^l/dt^l g(., s)) = 0`` off the diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import ONE, CoefficientFn, Const, add, div, mul, sample_sign
from .green import GreenFunction
from .problem import BvpSpec


class RecurrenceHypothesisError(ValueError):
    def __init__(self, level: int, reason: str):
        super().__init__(f"recurrence hypothesis violated at level r={level}: {reason}")
        self.level = level


@dataclass(frozen=True)
class HOperator:
    """``u^(n) + b_1 u^(n-1) + ... + b_n u`` at recurrence level ``l``.

    ``coefficients[j]`` is ``b_{j,l}`` for ``j = 0..n`` (``b_0 = 1``).
    ``branches[r-1]`` records which update produced level ``r``:
    ``"zero"`` when ``b_{n,r-1}`` vanished identically, ``"nonzero"`` otherwise.
    """

    n: int
    l: int
    coefficients: tuple[CoefficientFn, ...]
    branches: tuple[str, ...] = field(default=())
    interval: tuple[float, float] = (0.0, 1.0)

    def b(self, j: int) -> CoefficientFn:
        return self.coefficients[j]

    def evaluate(self, t) -> np.ndarray:
        """Coefficient values, shape ``(N, n+1)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([np.broadcast_to(c(t), t.shape) for c in self.coefficients], axis=-1)

    def apply(self, derivs: np.ndarray, t) -> np.ndarray:
        """Apply to derivative values ``derivs[..., m] = u^(m)``, ``m = 0..n``."""
        return apply_coefficients(self.coefficients, derivs, t)

    def __str__(self):
        terms = [f"u^({self.n})"]
        for j, c in enumerate(self.coefficients[1:], start=1):
            if c.is_zero():
                continue
            order = self.n - j
            u = "u" if order == 0 else f"u^({order})"
            terms.append(f"[{c}]*{u}")
        return f"H_{self.l} u = " + " + ".join(terms)


def apply_coefficients(coefficients, derivs, t) -> np.ndarray:
    """``sum_j b_j(t) u^(n-j)`` with ``b_0`` the leading coefficient."""
    derivs = np.asarray(derivs, dtype=float)
    n = len(coefficients) - 1
    t = np.asarray(t, dtype=float)
    out = np.asarray(coefficients[0](t)) * derivs[..., n]
    for j in range(1, n + 1):
        c = coefficients[j]
        if c.is_zero():
            continue
        out = out + np.asarray(c(t)) * derivs[..., n - j]
    return out


def initial_coefficients(spec: BvpSpec, m_position: str = "operator") -> list[CoefficientFn]:
    """``b_{j,0}``, ``j = 0..n``.

    ``m_position="operator"`` adds ``M`` to the coefficient of ``u^(k)``
    (slot ``n-k``); ``"literal"`` adds it to slot ``k`` instead.
    """
    if m_position == "operator":
        return [ONE] + spec.effective_coefficients()
    if m_position == "literal":
        if spec.k == 0:
            raise ValueError("literal placement with k=0 would change the leading coefficient")
        out = [ONE] + list(spec.coefficients)
        out[spec.k] = add(out[spec.k], Const(spec.M))
        return out
    raise ValueError(f"unknown m_position {m_position!r}")


def build_H(spec: BvpSpec, l: int, m_position: str = "operator",
            sample_points: int = 1024) -> HOperator:
    n = spec.n
    if not 0 <= l <= n - 1:
        raise ValueError(f"level l must lie in 0..{n - 1}, got {l}")
    a, b = spec.interval
    coeffs = initial_coefficients(spec, m_position)
    branches = []
    for r in range(1, l + 1):
        bn = coeffs[n]
        kind = sample_sign(bn, a, b, sample_points)
        if kind == "zero":
            new = [ONE] + [add(coeffs[j], coeffs[j - 1].derivative()) for j in range(1, n + 1)]
            branches.append("zero")
        elif kind == "nonzero":
            ratio_slope = div(coeffs[n - 1], bn).derivative()
            if sample_sign(add(ratio_slope, ONE), a, b, sample_points) == "mixed":
                raise RecurrenceHypothesisError(
                    r, f"(b_{n - 1}/b_{n})' equals -1 on part of [{a}, {b}] only")
            new = [ONE] + [add(coeffs[j], mul(bn, div(coeffs[j - 1], bn).derivative()))
                           for j in range(1, n + 1)]
            branches.append("nonzero")
        else:
            raise RecurrenceHypothesisError(r, f"b_{n},{r - 1} vanishes somewhere on [{a}, {b}] but not identically")
        coeffs = new
    return HOperator(n, l, tuple(coeffs), tuple(branches), spec.interval)


def H_residual(H: HOperator, g: GreenFunction, l: int, t, s) -> np.ndarray | float:
    """``H_l(d^l/dt^l g(., s))(t)``; zero off the diagonal."""
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    if np.any(t == s):
        raise ValueError("H residual is only defined off the diagonal (t != s)")
    n = g.n
    D = g.derivatives(t, s, n + l)
    res = apply_coefficients(H.coefficients, D[..., l:], t)
    return float(res) if res.ndim == 0 else res


def t_residual(g: GreenFunction, l: int, t, s):
    """``T_{n,k}[M]`` applied to ``d^l/dt^l g(., s)``, via the same code path as ``H_residual``."""
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    D = g.derivatives(t, s, g.n + l)
    res = apply_coefficients([ONE] + g.fs.coeffs, D[..., l:], t)
    return float(res) if res.ndim == 0 else res
