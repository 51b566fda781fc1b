"""Static SVG plots with reproducible bytes."""
from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .analysis import NEGATIVE, POSITIVE, SIGN_CHANGING, SINGULAR, characteristic_determinant  # noqa: E402

_CODES = {NEGATIVE: -1, SIGN_CHANGING: 0, POSITIVE: 1, SINGULAR: np.nan}


def _svg(fig) -> str:
    buf = io.StringIO()
    with plt.rc_context({"svg.hashsalt": "greenbvp", "svg.fonttype": "none"}):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def sweep_svg(report) -> str:
    """Sign classes per derivative order (heatmap) above ``max |g|`` against ``M``."""
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    M = np.asarray(report.M, dtype=float)
    codes = np.array([[_CODES.get(c, np.nan) for c in report.classes[l]] for l in report.l_list])
    edges = np.concatenate([[M[0]], 0.5 * (M[1:] + M[:-1]), [M[-1]]]) if len(M) > 1 else np.array([M[0] - .5, M[0] + .5])
    ax0.pcolormesh(edges, np.arange(len(report.l_list) + 1), codes, cmap="coolwarm", vmin=-1, vmax=1)
    ax0.set_yticks(np.arange(len(report.l_list)) + 0.5, [f"l={l}" for l in report.l_list])
    ax0.set_title("sign class (blue N, red P, white changing)")
    for e in report.eigenvalues:
        ax0.axvline(e, color="k", lw=0.8, ls="--")
        ax1.axvline(e, color="k", lw=0.8, ls="--")
    ax1.semilogy(M, np.asarray(report.max_abs_kernel, dtype=float), "-", lw=1)
    ax1.set_xlabel("M")
    ax1.set_ylabel("max |g|")
    fig.tight_layout()
    return _svg(fig)


def determinant_svg(spec, bracket, eigenvalues, tol: float, points: int = 400) -> str:
    lo, hi = bracket
    M = np.linspace(lo, hi, points)
    D = np.array([characteristic_determinant(spec, m, tol) for m in M])
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(M, D, lw=1)
    ax.axhline(0, color="k", lw=0.5)
    for e in eigenvalues:
        ax.axvline(e, color="r", lw=0.8, ls="--")
    ax.set_xlabel("M")
    ax.set_ylabel("D(M)")
    fig.tight_layout()
    return _svg(fig)


def kernel_svg(g, points: int = 81) -> str:
    """Heatmap of ``g(t, s)`` over the square."""
    a, b = g.spec.interval
    x = np.linspace(a, b, points)
    T, S = np.meshgrid(x, x, indexing="ij")
    G = g.derivatives(T, S, 0, side="left")[..., 0]
    fig, ax = plt.subplots(figsize=(4.5, 4))
    lim = float(np.max(np.abs(G))) or 1.0
    mesh = ax.pcolormesh(x, x, G.T, cmap="coolwarm", vmin=-lim, vmax=lim, shading="nearest")
    fig.colorbar(mesh, ax=ax)
    ax.set_xlabel("t")
    ax.set_ylabel("s")
    ax.set_title(f"g(t, s), M = {g.M!r}")
    fig.tight_layout()
    return _svg(fig)
