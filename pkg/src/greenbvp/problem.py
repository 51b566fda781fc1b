"""Problem description for n-th order two-point boundary value problems."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .coefficients import CoefficientFn, Const, add, coefficient_list


class SpecError(ValueError):
    """Invalid problem description."""


@dataclass(frozen=True, eq=False)
class BvpSpec:
    """``u^(n) + a_1 u^(n-1) + ... + a_n u + M u^(k) = sigma`` with ``B_i(u) = 0``.

    ``alpha[i][j]`` and ``beta[i][j]`` weight ``u^(j)(a)`` and ``u^(j)(b)``
    in the i-th boundary functional.
    """

    n: int
    interval: tuple[float, float]
    coefficients: tuple[CoefficientFn, ...]
    k: int
    M: float
    alpha: np.ndarray
    beta: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        coeffs = tuple(coefficient_list(self.coefficients))
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "interval", (float(self.interval[0]), float(self.interval[1])))
        object.__setattr__(self, "M", float(self.M))
        alpha = np.array(self.alpha, dtype=float)
        beta = np.array(self.beta, dtype=float)
        alpha.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        self.validate()

    def validate(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise SpecError(f"order n must be an integer >= 1, got {n!r}")
        a, b = self.interval
        if not a < b:
            raise SpecError(f"interval must satisfy a < b, got [{a}, {b}]")
        if not 0 <= self.k <= n - 1:
            raise SpecError(f"shift order k must lie in 0..{n - 1}, got {self.k}")
        if len(self.coefficients) != n:
            raise SpecError(f"expected {n} coefficients a_1..a_n, got {len(self.coefficients)}")
        if self.alpha.shape != (n, n) or self.beta.shape != (n, n):
            raise SpecError(f"boundary matrices must be {n}x{n}")
        if not np.all(np.isfinite(self.alpha)) or not np.all(np.isfinite(self.beta)):
            raise SpecError("boundary matrices must be finite")
        stacked = np.hstack([self.alpha, self.beta])
        if np.any(np.all(stacked == 0.0, axis=1)):
            raise SpecError("boundary matrix [alpha | beta] has an all-zero row")

    @property
    def a(self) -> float:
        return self.interval[0]

    @property
    def b(self) -> float:
        return self.interval[1]

    def with_M(self, M: float) -> "BvpSpec":
        return replace(self, M=float(M))

    def effective_coefficients(self) -> list[CoefficientFn]:
        """Coefficients ``a_1..a_n`` with ``M`` folded into the slot of ``u^(k)``."""
        out = list(self.coefficients)
        j = self.n - self.k
        out[j - 1] = add(out[j - 1], Const(self.M))
        return out

    def same_family(self, other: "BvpSpec") -> bool:
        """True when the two specs differ at most in ``M``."""
        return (
            self.n == other.n
            and self.k == other.k
            and self.interval == other.interval
            and np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.beta, other.beta)
            and all(f is g or f.to_json() == g.to_json()
                    for f, g in zip(self.coefficients, other.coefficients))
        )

    def boundary_values(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        """Apply ``B_i`` given derivative stacks at ``a`` and ``b``.

        ``left``/``right`` have shape ``(n, ...)`` (derivative order first).
        """
        return np.tensordot(self.alpha, left, axes=(1, 0)) + np.tensordot(self.beta, right, axes=(1, 0))

    def to_json(self) -> dict:
        return {
            "n": int(self.n),
            "interval": list(self.interval),
            "coefficients": [f.to_json() for f in self.coefficients],
            "k": int(self.k),
            "M": self.M,
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "BvpSpec":
        return cls(
            n=int(doc["n"]),
            interval=tuple(doc["interval"]),
            coefficients=tuple(doc["coefficients"]),
            k=int(doc["k"]),
            M=float(doc["M"]),
            alpha=np.array(doc["alpha"], dtype=float),
            beta=np.array(doc["beta"], dtype=float),
        )


def apply_operator(spec: BvpSpec, derivs, t: float) -> float:
    """Evaluate ``T_{n,k}[M]u(t)`` from the derivative values ``u^(0..n)(t)``."""
    a, b = spec.interval
    if not a <= t <= b:
        raise ValueError(f"t={t} outside [{a}, {b}]")
    derivs = np.asarray(derivs, dtype=float)
    n = spec.n
    if derivs.shape != (n + 1,):
        raise ValueError(f"expected {n + 1} derivative values, got shape {derivs.shape}")
    total = derivs[n]
    for j, coef in enumerate(spec.coefficients, start=1):
        total += float(coef(t)) * derivs[n - j]
    return float(total + spec.M * derivs[spec.k])


# Frequently used model problems on [0, 1].

def mixed_problem(M: float, k: int = 0, coefficients=None) -> BvpSpec:
    """``u'' + a_1 u' + a_2 u + M u^(k)`` with ``u(0) = u'(1) = 0``."""
    return BvpSpec(
        n=2, interval=(0.0, 1.0),
        coefficients=coefficients or (Const(0.0), Const(0.0)),
        k=k, M=M,
        alpha=[[1.0, 0.0], [0.0, 0.0]],
        beta=[[0.0, 0.0], [0.0, 1.0]],
        name=f"mixed-k{k}",
    )


def dirichlet_problem(M: float, k: int = 0, coefficients=None) -> BvpSpec:
    """``u'' + ... + M u^(k)`` with ``u(0) = u(1) = 0``."""
    return BvpSpec(
        n=2, interval=(0.0, 1.0),
        coefficients=coefficients or (Const(0.0), Const(0.0)),
        k=k, M=M,
        alpha=[[1.0, 0.0], [0.0, 0.0]],
        beta=[[0.0, 0.0], [1.0, 0.0]],
        name=f"dirichlet-k{k}",
    )
