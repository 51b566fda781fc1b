"""Behaviour of the kernel along the parameter line.

Singular parameter values come from sign changes of the characteristic
determinant.  For ``k = 0`` these are exactly the shifted eigenvalues: the
problem ``T[M] u = lambda u`` has a nontrivial solution iff ``M - lambda``
is singular.  Sign classes ``P_l`` / ``N_l`` are decided on a sampled grid of
the square.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .green import VANISH_TOL, GreenFunction, characteristic_matrix, check_solvability
from .ode import DEFAULT_TOL, IntegrationError, fundamental_system
from .problem import BvpSpec

log = logging.getLogger(__name__)

SIGN_TOL = 1e-9
SCAN_TOL = 1e-9
IDENTICALLY_ZERO = -1

POSITIVE = "P"
NEGATIVE = "N"
SIGN_CHANGING = "sign-changing"
SINGULAR = "not-uniquely-solvable"
INDETERMINATE = "indeterminate"


def characteristic_determinant(spec: BvpSpec, M: float | None = None, tol: float = DEFAULT_TOL) -> float:
    if M is not None:
        spec = spec.with_M(M)
    return float(np.linalg.det(characteristic_matrix(spec, fundamental_system(spec, tol))))


@dataclass
class EigenvalueScan:
    values: list[float]
    brackets: list[tuple[float, float]]
    truncated: bool = False

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def find_eigenvalues(spec: BvpSpec, bracket, max_count: int = 50, scan_points: int = 300,
                     xtol: float = 1e-12, tol: float = DEFAULT_TOL) -> EigenvalueScan:
    """Parameter values ``M`` in ``bracket`` where the problem is singular.

    The determinant is scanned at ``scan_points`` equispaced values; every
    sign change is refined with Brent's bracketing method.  Roots of even
    multiplicity do not change sign and are not reported.
    """
    lo, hi = map(float, bracket)
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError(f"bracket must be finite with lo < hi, got {bracket}")
    if spec.k != 0:
        log.info("k=%d: reporting singular parameter values, not eigenvalues of the shifted problem", spec.k)
    grid = np.linspace(lo, hi, scan_points)
    D = np.array([characteristic_determinant(spec, m, SCAN_TOL) for m in grid])

    def f(m):
        return characteristic_determinant(spec, m, tol)

    values, brackets = [], []
    truncated = False
    for i in range(len(grid) - 1):
        if len(values) >= max_count:
            truncated = True
            break
        m0, m1 = grid[i], grid[i + 1]
        if D[i] == 0.0:
            root = m0
        elif np.sign(D[i]) != np.sign(D[i + 1]) and D[i + 1] != 0.0:
            f0, f1 = f(m0), f(m1)
            if np.sign(f0) == np.sign(f1):
                # the coarse scan misjudged a sign very close to a grid point
                continue
            root = brentq(f, m0, m1, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
        else:
            continue
        values.append(float(root))
        brackets.append((float(m0), float(m1)))
    if D[-1] == 0.0 and len(values) < max_count:
        values.append(float(grid[-1]))
        brackets.append((float(grid[-2]), float(grid[-1])))
    return EigenvalueScan(values, brackets, truncated)


def shifted_eigenvalues(spec: BvpSpec, bracket, **kw) -> list[float]:
    """Eigenvalues ``lambda`` of ``T[M] u = lambda u`` (``k = 0``) inside ``bracket``."""
    if spec.k != 0:
        raise ValueError("the parameter-shift equivalence needs k = 0")
    lo, hi = bracket
    scan = find_eigenvalues(spec, (spec.M - hi, spec.M - lo), **kw)
    return sorted(spec.M - m for m in scan.values)


# Sign classification -------------------------------------------------------

def sign_grid(a: float, b: float, count: int = 61) -> np.ndarray:
    """Chebyshev-Lobatto points; clustered at the ends where sign changes hide."""
    j = np.arange(count)
    x = a + (b - a) * (1 - np.cos(np.pi * j / (count - 1))) / 2
    x[0], x[-1] = a, b
    return x


def kernel_samples(g: GreenFunction, l: int, ts, ss=None) -> np.ndarray:
    """``d^l g`` on the grid; diagonal entries of jumping orders contribute both one-sided values.

    Returns a 1-D array of samples.
    """
    ts = np.asarray(ts, dtype=float)
    ss = ts if ss is None else np.asarray(ss, dtype=float)
    T, S = np.meshgrid(ts, ss, indexing="ij")
    if l < g.n - 1:
        return g.derivatives(T, S, l, side="left")[..., l].ravel()
    left = g.derivatives(T, S, l, side="left")[..., l]
    right = g.derivatives(T, S, l, side="right")[..., l]
    diag = T == S
    return np.concatenate([left.ravel(), right[diag]])


def classify_samples(values: np.ndarray, tol: float = SIGN_TOL) -> str:
    scale = max(1.0, float(np.max(np.abs(values))))
    lo, hi = float(np.min(values)), float(np.max(values))
    thr = tol * scale
    nonneg = lo >= -thr
    nonpos = hi <= thr
    if nonneg and nonpos:
        return INDETERMINATE
    if nonneg:
        return POSITIVE
    if nonpos:
        return NEGATIVE
    return SIGN_CHANGING


def classify(spec: BvpSpec, l: int, ts, tol: float = DEFAULT_TOL, sign_tol: float = SIGN_TOL):
    """Class of ``d^l g[spec.M]`` on the grid plus (min, max); singular specs are labelled as such."""
    try:
        fs = fundamental_system(spec, tol)
    except IntegrationError:
        return SINGULAR, (np.nan, np.nan)
    cert = check_solvability(spec, fs)
    if not cert.unique_solvable:
        return SINGULAR, (np.nan, np.nan)
    g = GreenFunction(spec, fs)
    v = kernel_samples(g, l, ts)
    return classify_samples(v, sign_tol), (float(v.min()), float(v.max()))


# Strong sign witnesses -----------------------------------------------------

@dataclass
class StrongSignWitness:
    sign: str  # "positive" for (P_g), "negative" for (N_g)
    ts: np.ndarray
    ss: np.ndarray
    phi: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    margin: float

    def check(self, g: GreenFunction, slack: float = 1e-12) -> bool:
        T, S = np.meshgrid(self.ts, self.ss, indexing="ij")
        G = g.derivatives(T, S, 0, side="left")[..., 0]
        lo = self.phi[:, None] * self.k1[None, :]
        hi = self.phi[:, None] * self.k2[None, :]
        scale = max(1.0, float(np.max(np.abs(G))))
        env_ok = bool(np.all(lo <= G + slack * scale) and np.all(G <= hi + slack * scale))
        if self.sign == "positive":
            order_ok = bool(np.all(0 < self.k1) and np.all(self.k1 < self.k2))
        else:
            order_ok = bool(np.all(self.k1 < self.k2) and np.all(self.k2 < 0))
        return env_ok and order_ok and bool(np.all(self.phi > 0))


def strong_sign_witness(g: GreenFunction, grid=None, widen: float = 1e-3) -> StrongSignWitness | None:
    """Try ``phi(t) = |g(t, s_mid)|`` with envelopes ``min/max_t g(t, s)/phi(t)``.

    Only interior grid points are used.  ``None`` means the construction
    failed, which does not disprove the property.
    """
    a, b = g.spec.interval
    grid = sign_grid(a, b) if grid is None else np.asarray(grid, dtype=float)
    inner = grid[(grid > a) & (grid < b)]
    s_mid = 0.5 * (a + b)
    phi = np.abs(g.derivatives(inner, s_mid, 0, side="left")[..., 0])
    scale = max(1.0, float(np.max(phi))) if len(phi) else 1.0
    if len(inner) == 0 or np.any(phi <= VANISH_TOL * scale):
        return None
    T, S = np.meshgrid(inner, inner, indexing="ij")
    G = g.derivatives(T, S, 0, side="left")[..., 0]
    R = G / phi[:, None]
    k1 = R.min(axis=0)
    k2 = R.max(axis=0)
    if np.all(k1 > 0):
        w = StrongSignWitness("positive", inner, inner, phi, k1 * (1 - widen), k2 * (1 + widen),
                              float(k1.min()))
    elif np.all(k2 < 0):
        w = StrongSignWitness("negative", inner, inner, phi, k1 * (1 + widen), k2 * (1 - widen),
                              float(-k2.max()))
    else:
        return None
    return w


# Zero counting --------------------------------------------------------------

def _sign_changes(v: np.ndarray, thr: float) -> list[int]:
    """Indices ``i`` such that a sign change happens between nonzero samples around ``i``."""
    nz = np.flatnonzero(np.abs(v) > thr)
    sg = np.sign(v[nz])
    return [int(nz[i]) for i in np.flatnonzero(sg[1:] != sg[:-1])]


def zero_count(g: GreenFunction, l: int, s: float, half: str, density: int = 2000) -> int:
    """Sign changes of ``d^l g(., s)`` on ``[a, s)`` (``half="left"``) or ``(s, b]``.

    Returns :data:`IDENTICALLY_ZERO` when the section vanishes on that half.
    """
    if not 0 <= l <= g.n - 1:
        raise ValueError(f"l must lie in 0..{g.n - 1}")
    a, b = g.spec.interval
    # the one-sided limit at t = s closes the half so no crossing hides in the last cell
    if half == "left":
        t = np.linspace(a, s, density + 1)
    elif half == "right":
        t = np.linspace(s, b, density + 1)
    else:
        raise ValueError("half must be 'left' or 'right'")
    v = g.derivatives(t, s, l, side=half)[..., l]
    full = np.concatenate([v, g.derivatives(np.linspace(a, b, 64)[1:-1], s, l, side="left")[..., l]])
    scale = max(1.0, float(np.max(np.abs(full))))
    if np.max(np.abs(v)) < VANISH_TOL * scale:
        return IDENTICALLY_ZERO
    thr = 1e-13 * scale
    changes = _sign_changes(v, thr)
    count = 0
    # one refinement pass: resample each cell that shows a change
    for i in changes:
        j = max(i - 1, 0)
        while j > 0 and abs(v[j]) <= thr:
            j -= 1
        fine = np.linspace(t[j], t[min(i + 1, len(t) - 1)], 17)
        fv = g.derivatives(fine, s, l, side=half)[..., l]
        count += max(1, len(_sign_changes(fv, thr)))
    return count


# Parameter sweep ------------------------------------------------------------

@dataclass
class Interval:
    lower: float
    upper: float
    lower_kind: str  # "eigenvalue" (open), "touch" (closed) or "bracket" (not resolved)
    upper_kind: str

    def to_json(self):
        return {"lower": self.lower, "upper": self.upper,
                "lower_kind": self.lower_kind, "upper_kind": self.upper_kind}


@dataclass
class SweepReport:
    M: np.ndarray
    l_list: list[int]
    classes: dict[int, list[str]]
    extrema: dict[int, list[tuple[float, float]]]
    eigenvalues: list[float]
    intervals: dict[int, dict[str, list[Interval]]]
    endpoint_gap: float | None
    monotonicity: dict[int, dict]
    max_abs_kernel: list[float]
    k: int = 0
    notes: list[str] = field(default_factory=list)

    def interval_bounds(self, l: int, cls: str):
        runs = self.intervals[l][cls]
        if not runs:
            return None
        return runs[0].lower, runs[-1].upper

    def monotone(self, l: int) -> bool:
        return not self.monotonicity[l]["violations"]

    def to_json(self) -> dict:
        return {
            "M": [float(m) for m in self.M],
            "k": self.k,
            "l": self.l_list,
            "classes": {str(l): v for l, v in self.classes.items()},
            "extrema": {str(l): [[_num(a), _num(b)] for a, b in v] for l, v in self.extrema.items()},
            "eigenvalues": self.eigenvalues,
            "intervals": {str(l): {c: [iv.to_json() for iv in runs] for c, runs in d.items()}
                          for l, d in self.intervals.items()},
            "endpoint_gap": self.endpoint_gap,
            "monotonicity": {str(l): v for l, v in self.monotonicity.items()},
            "max_abs_kernel": [_num(x) for x in self.max_abs_kernel],
            "notes": self.notes,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("M", "l", "classification", "min_g", "max_g"))
        for l in self.l_list:
            for m, c, (lo, hi) in zip(self.M, self.classes[l], self.extrema[l]):
                w.writerow((repr(float(m)), l, c, _fmt(lo), _fmt(hi)))
        return buf.getvalue()

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _num(x):
    x = float(x)
    return None if not np.isfinite(x) else x


def _fmt(x):
    x = float(x)
    return "nan" if not np.isfinite(x) else repr(x)


def _evaluate_point(spec: BvpSpec, M: float, l_list, ts, tol: float, sign_tol: float):
    sp = spec.with_M(M)
    try:
        fs = fundamental_system(sp, tol)
    except IntegrationError:
        return None
    if not check_solvability(sp, fs).unique_solvable:
        return None
    g = GreenFunction(sp, fs)
    T, S = np.meshgrid(ts, ts, indexing="ij")
    out = {}
    for l in l_list:
        v = kernel_samples(g, l, ts)
        grid_vals = g.derivatives(T, S, l, side="left")[..., l]
        out[l] = (classify_samples(v, sign_tol), float(v.min()), float(v.max()), grid_vals)
    out["maxabs"] = float(np.max(np.abs(g.derivatives(T, S, 0, side="left")[..., 0])))
    return out


def _refine(label, cls: str, inside: float, outside: float, tol: float, eigenvalues) -> tuple[float, str]:
    """Bisect between a parameter labelled ``cls`` and one that is not.

    When bisection runs into the singular zone around an eigenvalue lying
    between the two, the endpoint is that eigenvalue: the determinant guard
    cannot resolve the kernel closer than that, and the set is open there.
    """
    hi_side = outside
    last_out = None
    while abs(inside - outside) > tol:
        mid = 0.5 * (inside + outside)
        lab = label(mid)
        if lab == cls:
            inside = mid
        else:
            outside, last_out = mid, lab
    lo_, hi_ = sorted((inside, hi_side))
    between = [e for e in eigenvalues if lo_ <= e <= hi_]
    if last_out == SINGULAR and between:
        return float(min(between, key=lambda e: abs(e - inside))), "eigenvalue"
    x = float(0.5 * (inside + outside))
    if any(abs(x - e) <= 10 * tol for e in eigenvalues):
        return x, "eigenvalue"
    return x, "touch"


def sweep(spec: BvpSpec, M_grid, l_list=(0,), ts=None, tol: float = DEFAULT_TOL,
          refine_tol: float = 1e-6, sign_tol: float = SIGN_TOL, mono_tol: float = 1e-8,
          threads: int = 1, eig_scan_points: int = 300) -> SweepReport:
    """Classify ``d^l g[M]`` for every ``M`` in the grid and estimate the constant-sign sets.

    Interval endpoints are refined by bisection on the classification
    predicate.  Endpoints at a singular value are reported as
    ``"eigenvalue"`` (open), the others as ``"touch"`` (closed, the kernel
    reaches zero somewhere).  Monotone dependence is checked
    between consecutive grid values where both ``g`` and ``d^l g`` keep a
    fixed sign: nonincreasing when the two signs agree, nondecreasing
    otherwise.
    """
    M_grid = np.asarray(sorted(float(m) for m in M_grid))
    if len(M_grid) == 0:
        raise ValueError("empty M grid")
    l_list = sorted(set(int(l) for l in l_list))
    if any(not 0 <= l <= spec.n - 1 for l in l_list):
        raise ValueError(f"l values must lie in 0..{spec.n - 1}")
    a, b = spec.interval
    ts = sign_grid(a, b) if ts is None else np.asarray(ts, dtype=float)
    notes = []
    if spec.k != 0:
        notes.append("k != 0: interval theorems are not asserted")
    if len(M_grid) > 1:
        eig = find_eigenvalues(spec, (M_grid[0], M_grid[-1]), scan_points=eig_scan_points, tol=tol).values
    else:
        eig = []

    def work(M):
        return _evaluate_point(spec, M, l_list, ts, tol, sign_tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, M_grid))
    else:
        results = [work(M) for M in M_grid]

    classes = {l: [] for l in l_list}
    extrema = {l: [] for l in l_list}
    maxabs = []
    for res in results:
        maxabs.append(np.nan if res is None else res["maxabs"])
        for l in l_list:
            if res is None:
                classes[l].append(SINGULAR)
                extrema[l].append((np.nan, np.nan))
            else:
                c, lo, hi, _ = res[l]
                classes[l].append(c)
                extrema[l].append((lo, hi))

    intervals = {}
    for l in l_list:
        intervals[l] = {}
        for cls in (POSITIVE, NEGATIVE):
            def label(M, l=l):
                return classify(spec.with_M(M), l, ts, tol, sign_tol)[0]

            runs = []
            labels = classes[l]
            i = 0
            while i < len(labels):
                if labels[i] != cls:
                    i += 1
                    continue
                j = i
                while j + 1 < len(labels) and labels[j + 1] == cls:
                    j += 1
                if i == 0:
                    lower, lk = float(M_grid[0]), "bracket"
                else:
                    lower, lk = _refine(label, cls, M_grid[i], M_grid[i - 1], refine_tol, eig)
                if j == len(labels) - 1:
                    upper, uk = float(M_grid[-1]), "bracket"
                else:
                    upper, uk = _refine(label, cls, M_grid[j], M_grid[j + 1], refine_tol, eig)
                runs.append(Interval(lower, upper, lk, uk))
                i = j + 1
            intervals[l][cls] = runs

    gap = None
    if 0 in intervals:
        N0, P0 = intervals[0][NEGATIVE], intervals[0][POSITIVE]
        if N0 and P0:
            gaps = [abs(n.upper - p.lower) for n in N0 for p in P0 if n.upper_kind != "bracket"
                    and p.lower_kind != "bracket"]
            gaps += [abs(p.upper - n.lower) for n in N0 for p in P0 if p.upper_kind != "bracket"
                     and n.lower_kind != "bracket"]
            gap = min(gaps) if gaps else None

    monotonicity = {}
    base = classes[l_list[0]] if l_list[0] == 0 else None
    if base is None:
        base_res = [None if r is None else
                    classify_samples(kernel_samples(GreenFunction(spec.with_M(M)), 0, ts), sign_tol)
                    for M, r in zip(M_grid, results)]
    else:
        base_res = base
    for l in l_list:
        checked, violations = 0, []
        for i in range(len(M_grid) - 1):
            c0, c1 = classes[l][i], classes[l][i + 1]
            b0, b1 = base_res[i], base_res[i + 1]
            if c0 != c1 or c0 not in (POSITIVE, NEGATIVE) or b0 != b1 or b0 not in (POSITIVE, NEGATIVE):
                continue
            direction = "nonincreasing" if c0 == b0 else "nondecreasing"
            v0 = results[i][l][3]
            v1 = results[i + 1][l][3]
            scale = max(1.0, float(np.max(np.abs(v0))), float(np.max(np.abs(v1))))
            diff = v1 - v0 if direction == "nonincreasing" else v0 - v1
            worst = float(np.max(diff))
            checked += 1
            if worst > mono_tol * scale:
                idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
                violations.append({"M": [float(M_grid[i]), float(M_grid[i + 1])],
                                   "direction": direction, "excess": worst,
                                   "t": float(ts[idx[0]]), "s": float(ts[idx[1]])})
        monotonicity[l] = {"checked_pairs": checked, "violations": violations}

    return SweepReport(M_grid, l_list, classes, extrema, [float(e) for e in eig], intervals, gap,
                       monotonicity, maxabs, spec.k, notes)
