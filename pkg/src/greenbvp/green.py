"""Green's function assembly and evaluation.

For fixed ``s`` the kernel is ``sum_j c_j(s) y_j(t)`` to the left of the
diagonal and ``sum_j d_j(s) y_j(t)`` to the right.  The ``2n`` unknowns solve
``n`` matching conditions at ``t = s`` (continuity up to order ``n-2`` and a
unit jump at order ``n-1``) together with the ``n`` boundary conditions.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .ode import DEFAULT_TOL, FundamentalSystem, fundamental_system
from .problem import BvpSpec
from .quadrature import QuadratureRule

SINGULAR_RTOL = 1e-10
VANISH_TOL = 1e-10


class SingularProblemError(ValueError):
    """The homogeneous problem has nontrivial solutions (``M`` is an eigenvalue)."""

    def __init__(self, certificate: "SolvabilityCertificate"):
        super().__init__(
            f"problem is not uniquely solvable (eigenvalue): |det| = {abs(certificate.determinant):.3e} "
            f"<= threshold {certificate.threshold:.3e}"
        )
        self.certificate = certificate


@dataclass(frozen=True)
class SolvabilityCertificate:
    determinant: float
    threshold: float
    unique_solvable: bool
    condition: float
    matrix: np.ndarray


def characteristic_matrix(spec: BvpSpec, fs: FundamentalSystem) -> np.ndarray:
    """``[B_i(y_j)]`` for the normalized fundamental system."""
    ends = fs.stack(np.array([spec.a, spec.b]))
    return spec.alpha @ ends[0] + spec.beta @ ends[1]


def check_solvability(spec: BvpSpec, fs: FundamentalSystem | None = None,
                      tol: float = DEFAULT_TOL) -> SolvabilityCertificate:
    """Decide unique solvability from ``det [B_i(y_j)]``.

    Near-singular cases are flagged in the certificate, never raised.
    """
    fs = fs or fundamental_system(spec, tol)
    U = characteristic_matrix(spec, fs)
    det = float(np.linalg.det(U))
    # Normalize each basis solution by its endpoint derivative data, then compare
    # with the Hadamard row bound of the normalized matrix.  Expressed in units
    # of det U, independent of how the basis solutions are scaled.
    ends = fs.stack(np.array([spec.a, spec.b]))
    cols = np.linalg.norm(np.vstack([ends[0], ends[1]]), axis=0)
    V = U / cols
    scale = float(np.prod(np.linalg.norm(V, axis=1)) * np.prod(cols))
    threshold = SINGULAR_RTOL * scale
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(U))
    return SolvabilityCertificate(det, threshold, abs(det) > threshold, cond, U)


class GreenFunction:
    """Evaluable kernel ``g_{n,k}[M](t, s)`` and its t-derivatives.

    Coefficients solved for a given ``s`` are cached; the cache is guarded by
    a lock so a shared instance can be evaluated from several threads.
    """

    def __init__(self, spec: BvpSpec, fs: FundamentalSystem | None = None, tol: float = DEFAULT_TOL):
        self.spec = spec
        self.n = spec.n
        self.fs = fs or fundamental_system(spec, tol)
        self.certificate = check_solvability(spec, self.fs)
        if not self.certificate.unique_solvable:
            raise SingularProblemError(self.certificate)
        ends = self.fs.stack(np.array([spec.a, spec.b]))
        self._Ua = spec.alpha @ ends[0]
        self._Ub = spec.beta @ ends[1]
        self._cache: dict[float, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def M(self) -> float:
        return self.spec.M

    @property
    def k(self) -> int:
        return self.spec.k

    def _solve(self, s: np.ndarray) -> np.ndarray:
        n = self.n
        Ys = self.fs.stack(s)  # (N, n, n)
        N = len(s)
        A = np.zeros((N, 2 * n, 2 * n))
        A[:, :n, :n] = -Ys
        A[:, :n, n:] = Ys
        A[:, n:, :n] = self._Ua
        A[:, n:, n:] = self._Ub
        rhs = np.zeros((N, 2 * n, 1))
        rhs[:, n - 1, 0] = 1.0
        try:
            x = np.linalg.solve(A, rhs)[..., 0]
        except np.linalg.LinAlgError as exc:
            raise SingularProblemError(self.certificate) from exc
        return x

    def coefficients(self, s) -> tuple[np.ndarray, np.ndarray]:
        """``c(s)`` and ``d(s)``, each shape ``(N, n)``."""
        s = np.atleast_1d(np.asarray(s, dtype=float)).ravel()
        uniq, inverse = np.unique(s, return_inverse=True)
        with self._lock:
            missing = [x for x in uniq.tolist() if x not in self._cache]
        if missing:
            sol = self._solve(np.array(missing))
            with self._lock:
                for x, row in zip(missing, sol):
                    self._cache[x] = row
        with self._lock:
            table = np.array([self._cache[x] for x in uniq.tolist()])
        full = table[inverse]
        return full[:, : self.n], full[:, self.n:]

    def cache_size(self) -> int:
        return len(self._cache)

    def derivatives(self, t, s, max_order: int, side: str | None = None) -> np.ndarray:
        """All t-derivatives of orders ``0..max_order`` at ``(t, s)``; shape ``(N, max_order+1)``.

        ``side`` picks the branch on the diagonal (``"left"`` for ``t -> s-``,
        ``"right"`` for ``t -> s+``); off the diagonal it is ignored.
        """
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        shape = t.shape
        t = t.ravel()
        s = s.ravel()
        c, d = self.coefficients(s)
        Y = self.fs.derivatives(t, max_order)  # (N, L, n)
        on_diag = t == s
        use_right = t > s
        if np.any(on_diag):
            if side is None:
                if max_order >= self.n - 1:
                    raise ValueError(
                        f"derivative order {max_order} at t = s needs an explicit side ('left' or 'right')")
            elif side == "right":
                use_right = use_right | on_diag
            elif side != "left":
                raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        coef = np.where(use_right[:, None], d, c)
        out = np.einsum("nlj,nj->nl", Y, coef)
        return out.reshape(shape + (max_order + 1,))

    def __call__(self, t, s, l: int = 0, side: str | None = None):
        return eval_green(self, t, s, l, side)


def build_green(spec: BvpSpec, fs: FundamentalSystem, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient pair ``(c(s), d(s))`` of the kernel section at ``s``."""
    a, b = spec.interval
    if not a < s < b:
        raise ValueError(f"s={s} must lie in the open interval ({a}, {b})")
    g = GreenFunction(spec, fs)
    c, d = g.coefficients(s)
    return c[0], d[0]


def eval_green(g: GreenFunction, t, s, l: int = 0, side: str | None = None):
    """``d^l/dt^l g(t, s)`` for ``0 <= l <= n``; scalars in, scalar out."""
    if not 0 <= l <= g.n:
        raise ValueError(f"unsupported derivative order l={l}; allowed 0..{g.n}")
    a, b = g.spec.interval
    ta, sa = np.asarray(t, dtype=float), np.asarray(s, dtype=float)
    if np.any((ta < a) | (ta > b) | (sa < a) | (sa > b)):
        raise ValueError("(t, s) outside the square of definition")
    if l < g.n - 1:
        vals = g.derivatives(ta, sa, l, side="left")[..., l]
    else:
        if side is None and np.any(ta == sa):
            raise ValueError(f"order l={l} at t = s needs an explicit side ('left' or 'right')")
        vals = g.derivatives(ta, sa, l, side=side)[..., l]
    return float(vals) if np.ndim(vals) == 0 else vals


def build_kernel(spec: BvpSpec, tol: float = DEFAULT_TOL) -> GreenFunction:
    return GreenFunction(spec, fundamental_system(spec, tol))


def solve_bvp(g: GreenFunction, sigma, quad: QuadratureRule | None = None, t=None):
    """``u(t) = int_a^b g(t, s) sigma(s) ds`` with the rule split at ``s = t``."""
    quad = quad or QuadratureRule()
    a, b = g.spec.interval
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(ts.shape)
    for i, ti in enumerate(ts):
        x, w = quad.rule(a, b, [ti])
        out[i] = np.dot(w, g.derivatives(ti, x, 0)[:, 0] * np.asarray(sigma(x), dtype=float))
    return float(out[0]) if scalar else out


# Definitional checks -------------------------------------------------------

def boundary_residuals(g: GreenFunction, s) -> np.ndarray:
    """``B_i(g(., s))`` for each ``s``; shape ``(N, n)``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    spec = g.spec
    c, d = g.coefficients(s)
    ends = g.fs.stack(np.array([spec.a, spec.b]))
    left = np.einsum("mj,nj->nm", ends[0], c)
    right = np.einsum("mj,nj->nm", ends[1], d)
    return left @ spec.alpha.T + right @ spec.beta.T


def jump(g: GreenFunction, s, order: int | None = None, eps: float = 1e-4) -> np.ndarray:
    """Richardson-extrapolated jump of ``d^order/dt^order g`` across ``t = s``."""
    order = g.n - 1 if order is None else order
    s = np.atleast_1d(np.asarray(s, dtype=float))

    def raw(e):
        hi = g.derivatives(s + e, s, order)[..., order]
        lo = g.derivatives(s - e, s, order)[..., order]
        return hi - lo

    return 2.0 * raw(eps / 2) - raw(eps)


def ode_residual(g: GreenFunction, t, s, h: float = 1e-3) -> np.ndarray:
    """``T g(., s)(t)`` with the top derivative taken by differencing order ``n-1``.

    Points must be at least ``2h`` away from the diagonal and the endpoints.
    """
    n = g.n
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    vals = [g.derivatives(t + d * h, s, n - 1)[..., n - 1] for d in (-2, -1, 1, 2)]
    top = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
    low = g.derivatives(t, s, n - 1)
    res = top.copy()
    for j, c in enumerate(g.fs.coeffs, start=1):
        res = res + np.asarray(c(t)) * low[..., n - j]
    return res


def vanishes(values, scale: float = 1.0) -> bool:
    return bool(np.max(np.abs(values)) < VANISH_TOL * max(scale, 1.0))
