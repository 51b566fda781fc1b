"""Fundamental systems of the homogeneous equation with dense output."""
from __future__ import annotations

from math import comb

import numpy as np
from scipy.integrate import solve_ivp

from .problem import BvpSpec

DEFAULT_TOL = 1e-11
# atol relative to tol; decaying basis components are otherwise lost below atol
ATOL_FACTOR = 1e-8


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (at t={t!r})")
        self.t = t


def extend_derivatives(coeffs, t, base: np.ndarray, max_order: int) -> np.ndarray:
    """Append derivatives of order ``n..max_order`` to a derivative stack.

    ``base`` has shape ``(N, n, m)``: ``m`` solutions of
    ``u^(n) = -sum_j c_j(t) u^(n-j)``, orders ``0..n-1``, at the ``N`` points
    ``t``.  Orders above ``n-1`` follow by differentiating the equation with
    the Leibniz rule, using exact derivatives of the coefficients.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = len(coeffs)
    N, n_base, m = base.shape
    if n_base != n:
        raise ValueError("stack height must equal the order")
    if max_order < n:
        return base[:, : max_order + 1, :]
    out = np.empty((N, max_order + 1, m))
    out[:, :n, :] = base
    extra = max_order - n
    # cd[j][i] = i-th derivative of c_{j+1} at t
    cd = [[np.asarray(c.deriv(t, i), dtype=float) for i in range(extra + 1)] for c in coeffs]
    for p in range(extra + 1):
        acc = np.zeros((N, m))
        for j in range(1, n + 1):
            for i in range(p + 1):
                w = cd[j - 1][i]
                if not np.any(w):
                    continue
                acc += comb(p, i) * w[:, None] * out[:, n - j + p - i, :]
        out[:, n + p, :] = -acc
    return out


class FundamentalSystem:
    """Solutions ``y_1..y_n`` with ``y_i^(j)(a) = delta_ij``.

    Read-only after construction, so evaluation is safe from several threads.
    """

    def __init__(self, spec: BvpSpec, solution, tol: float, nfev: int):
        self.spec = spec
        self.n = spec.n
        self.tol = tol
        self.nfev = nfev
        self.coeffs = spec.effective_coefficients()
        self._sol = solution

    @property
    def checkpoints(self) -> np.ndarray:
        return np.asarray(self._sol.ts)

    def _check_range(self, t):
        a, b = self.spec.interval
        span = b - a
        if np.any(t < a - 1e-12 * span) or np.any(t > b + 1e-12 * span):
            raise ValueError(f"evaluation point outside [{a}, {b}]")

    def stack(self, t) -> np.ndarray:
        """Derivative stack, shape ``(N, n, n)``: ``[point, order, solution]``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        self._check_range(t)
        a, b = self.spec.interval
        tc = np.clip(t, a, b)
        flat = self._sol(tc)  # (n*n, N)
        flat = np.asarray(flat).reshape(self.n * self.n, -1)
        return flat.T.reshape(-1, self.n, self.n)

    def derivatives(self, t, max_order: int) -> np.ndarray:
        """Derivatives of orders ``0..max_order`` of all solutions, ``(N, max_order+1, n)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        base = self.stack(t)
        return extend_derivatives(self.coeffs, t, base, max_order)

    def wronskian(self, t) -> np.ndarray:
        return np.linalg.det(self.stack(t))

    def residual(self, t, h: float = 1e-3) -> np.ndarray:
        """``|T y_i(t)|`` with ``y^(n)`` from a central difference of the dense output.

        This checks the interpolated stack against the equation instead of
        reusing the equation itself; points must lie at least ``2h`` inside
        the interval.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n = self.n
        top = [self.stack(t + d * h)[:, n - 1, :] for d in (-2, -1, 1, 2)]
        dn = (top[0] - 8 * top[1] + 8 * top[2] - top[3]) / (12 * h)
        st = self.stack(t)
        res = dn.copy()
        for j, c in enumerate(self.coeffs, start=1):
            res += np.asarray(c(t))[:, None] * st[:, n - j, :]
        return np.abs(res)


def _rhs_factory(spec: BvpSpec, coeffs):
    n = spec.n
    if all(c.is_constant() for c in coeffs):
        A = np.zeros((n, n))
        A[:-1, 1:] = np.eye(n - 1)
        for j, c in enumerate(coeffs, start=1):
            A[n - 1, n - j] = -float(c(spec.a))

        def rhs(t, y):
            return (A @ y.reshape(n, n)).ravel()

        return rhs

    def rhs(t, y):
        Y = y.reshape(n, n)
        dY = np.empty_like(Y)
        dY[:-1] = Y[1:]
        last = np.zeros(n)
        for j, c in enumerate(coeffs, start=1):
            last -= float(c(t)) * Y[n - j]
        dY[-1] = last
        return dY.ravel()

    return rhs


def fundamental_system(spec: BvpSpec, tol: float = DEFAULT_TOL) -> FundamentalSystem:
    """Integrate the companion system from ``a`` to ``b`` with identity data at ``a``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    coeffs = spec.effective_coefficients()
    rhs = _rhs_factory(spec, coeffs)
    y0 = np.eye(spec.n).ravel()
    with np.errstate(over="ignore", invalid="ignore"):
        sol = solve_ivp(rhs, spec.interval, y0, method="DOP853", rtol=tol, atol=tol * ATOL_FACTOR,
                        dense_output=True)
    if sol.status != 0:
        t_fail = float(sol.t[-1]) if len(sol.t) else spec.a
        raise IntegrationError(f"integrator failed: {sol.message}", t_fail)
    return FundamentalSystem(spec, sol.sol, tol, sol.nfev)
