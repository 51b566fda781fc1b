"""Closed-form coefficient functions with exact derivatives.

Coefficients of the differential operator are small expression trees built
from constants, polynomials and scaled exponentials, combined by sums,
products and quotients.  Every node knows its own derivative as another
expression, so derivatives of any order are exact rather than finite
differenced.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np


class CoefficientFn:
    """Base class for closed-form coefficient expressions."""

    def __call__(self, t):
        raise NotImplementedError

    def derivative(self) -> "CoefficientFn":
        raise NotImplementedError

    def is_zero(self) -> bool:
        """Structural zero test; ``False`` means "not provably zero"."""
        return False

    def is_constant(self) -> bool:
        return False

    def to_json(self) -> dict:
        raise NotImplementedError

    def deriv(self, t, order: int = 0):
        """Evaluate the ``order``-th derivative at ``t``."""
        f = self
        for _ in range(order):
            f = f.derivative()
            if f.is_zero():
                return np.zeros_like(np.asarray(t, dtype=float))
        return f(t)

    def __add__(self, other):
        return add(self, as_coefficient(other))

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, as_coefficient(other))

    __rmul__ = __mul__

    def __neg__(self):
        return mul(Const(-1.0), self)

    def __sub__(self, other):
        return add(self, -as_coefficient(other))

    def __truediv__(self, other):
        return div(self, as_coefficient(other))


@dataclass(frozen=True, eq=False)
class Const(CoefficientFn):
    value: float

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)

    def derivative(self):
        return ZERO

    def is_zero(self):
        return self.value == 0.0

    def is_constant(self):
        return True

    def to_json(self):
        return {"type": "const", "value": self.value}

    def __str__(self):
        return _fmt(self.value)


@dataclass(frozen=True, eq=False)
class Poly(CoefficientFn):
    """Polynomial in t with ascending coefficients ``c0 + c1 t + ...``."""

    coeffs: tuple

    def __post_init__(self):
        c = [float(x) for x in self.coeffs]
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c) if c else (0.0,))

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), self.coeffs)

    def derivative(self):
        if len(self.coeffs) == 1:
            return ZERO
        return Poly(tuple(i * c for i, c in enumerate(self.coeffs) if i > 0))

    def deriv(self, t, order=0):
        if order >= len(self.coeffs):
            return np.zeros_like(np.asarray(t, dtype=float))
        c = np.polynomial.polynomial.polyder(self.coeffs, order) if order else self.coeffs
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), c)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return all(c == 0.0 for c in self.coeffs)

    def is_constant(self):
        return len(self.coeffs) == 1

    def to_json(self):
        return {"type": "poly", "coeffs": list(self.coeffs)}

    def __str__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0.0:
                continue
            if i == 0:
                terms.append(_fmt(c))
            else:
                mono = "t" if i == 1 else f"t^{i}"
                terms.append(mono if c == 1.0 else f"{_fmt(c)}*{mono}")
        return "(" + " + ".join(terms) + ")" if len(terms) > 1 else (terms[0] if terms else "0")


@dataclass(frozen=True, eq=False)
class Exp(CoefficientFn):
    """``scale * exp(rate * t)``."""

    scale: float
    rate: float

    def __call__(self, t):
        return self.scale * np.exp(self.rate * np.asarray(t, dtype=float))

    def derivative(self):
        if self.scale == 0.0 or self.rate == 0.0:
            return ZERO
        return Exp(self.scale * self.rate, self.rate)

    def deriv(self, t, order=0):
        return self.scale * self.rate**order * np.exp(self.rate * np.asarray(t, dtype=float))

    def is_zero(self):
        return self.scale == 0.0

    def is_constant(self):
        return self.rate == 0.0

    def to_json(self):
        return {"type": "exp", "scale": self.scale, "rate": self.rate}

    def __str__(self):
        return f"{_fmt(self.scale)}*exp({_fmt(self.rate)}*t)"


@dataclass(frozen=True, eq=False)
class Sum(CoefficientFn):
    terms: tuple

    def __call__(self, t):
        out = self.terms[0](t)
        for f in self.terms[1:]:
            out = out + f(t)
        return out

    @cached_property
    def _derivative(self):
        return add(*(f.derivative() for f in self.terms))

    def derivative(self):
        return self._derivative

    def is_zero(self):
        return all(f.is_zero() for f in self.terms)

    def is_constant(self):
        return all(f.is_constant() for f in self.terms)

    def to_json(self):
        return {"type": "sum", "terms": [f.to_json() for f in self.terms]}

    def __str__(self):
        return "(" + " + ".join(str(f) for f in self.terms) + ")"


@dataclass(frozen=True, eq=False)
class Prod(CoefficientFn):
    factors: tuple

    def __call__(self, t):
        out = self.factors[0](t)
        for f in self.factors[1:]:
            out = out * f(t)
        return out

    @cached_property
    def _derivative(self):
        parts = []
        for i, f in enumerate(self.factors):
            df = f.derivative()
            if df.is_zero():
                continue
            parts.append(mul(*self.factors[:i], df, *self.factors[i + 1:]))
        return add(*parts) if parts else ZERO

    def derivative(self):
        return self._derivative

    def is_zero(self):
        return any(f.is_zero() for f in self.factors)

    def is_constant(self):
        return all(f.is_constant() for f in self.factors)

    def to_json(self):
        return {"type": "prod", "factors": [f.to_json() for f in self.factors]}

    def __str__(self):
        return "*".join(str(f) for f in self.factors)


@dataclass(frozen=True, eq=False)
class Quotient(CoefficientFn):
    """``num / den``; only produced internally by the H-operator recurrence."""

    num: CoefficientFn
    den: CoefficientFn

    def __call__(self, t):
        return self.num(t) / self.den(t)

    @cached_property
    def _derivative(self):
        top = add(mul(self.num.derivative(), self.den), -mul(self.num, self.den.derivative()))
        return div(top, mul(self.den, self.den))

    def derivative(self):
        return self._derivative

    def is_zero(self):
        return self.num.is_zero()

    def is_constant(self):
        return self.num.is_constant() and self.den.is_constant()

    def to_json(self):
        raise ValueError("quotients are internal and have no JSON form")

    def __str__(self):
        return f"({self.num})/({self.den})"


ZERO = Const(0.0)
ONE = Const(1.0)


def _fmt(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


def as_coefficient(x) -> CoefficientFn:
    if isinstance(x, CoefficientFn):
        return x
    return Const(float(x))


def _const_value(f: CoefficientFn):
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Poly) and f.is_constant():
        return f.coeffs[0]
    return None


def add(*terms: CoefficientFn) -> CoefficientFn:
    flat = []
    const = 0.0
    for f in terms:
        if f.is_zero():
            continue
        if isinstance(f, Sum):
            flat.extend(f.terms)
            continue
        v = _const_value(f)
        if v is not None:
            const += v
        else:
            flat.append(f)
    if const != 0.0:
        flat.append(Const(const))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def mul(*factors: CoefficientFn) -> CoefficientFn:
    flat = []
    const = 1.0
    for f in factors:
        if f.is_zero():
            return ZERO
        if isinstance(f, Prod):
            flat.extend(f.factors)
            continue
        v = _const_value(f)
        if v is not None:
            const *= v
        else:
            flat.append(f)
    if not flat:
        return Const(const)
    if const != 1.0:
        flat.insert(0, Const(const))
    if len(flat) == 1:
        return flat[0]
    return Prod(tuple(flat))


def div(num: CoefficientFn, den: CoefficientFn) -> CoefficientFn:
    if den.is_zero():
        raise ZeroDivisionError("division by a structurally zero coefficient")
    if num.is_zero():
        return ZERO
    vn, vd = _const_value(num), _const_value(den)
    if vd is not None:
        if vn is not None:
            return Const(vn / vd)
        return mul(Const(1.0 / vd), num)
    return Quotient(num, den)


def from_json(doc) -> CoefficientFn:
    """Parse the JSON form used in problem files.

    A bare number is accepted as shorthand for ``{"type": "const"}``.
    """
    if isinstance(doc, (int, float)):
        return Const(float(doc))
    kind = doc.get("type")
    if kind == "const":
        return Const(float(doc["value"]))
    if kind == "poly":
        return Poly(tuple(float(c) for c in doc["coeffs"]))
    if kind == "exp":
        return Exp(float(doc["scale"]), float(doc["rate"]))
    if kind == "sum":
        return Sum(tuple(from_json(d) for d in doc["terms"]))
    if kind == "prod":
        return Prod(tuple(from_json(d) for d in doc["factors"]))
    raise ValueError(f"unknown coefficient type {kind!r}")


def sample_sign(f: CoefficientFn, a: float, b: float, points: int = 1024, zero_tol: float = 1e-12) -> str:
    """Classify ``f`` on ``[a, b]`` as ``"zero"``, ``"nonzero"`` or ``"mixed"``.

    The structural test runs first; dense sampling decides the rest.
    """
    if f.is_zero():
        return "zero"
    v = np.asarray(f(np.linspace(a, b, points)), dtype=float)
    small = np.abs(v) < zero_tol
    if small.all():
        return "zero"
    if small.any():
        return "mixed"
    if (v > 0).all() or (v < 0).all():
        return "nonzero"
    return "mixed"


def coefficient_list(items: Sequence) -> list[CoefficientFn]:
    return [from_json(d) if not isinstance(d, CoefficientFn) else d for d in items]


__all__ = [
    "CoefficientFn", "Const", "Poly", "Exp", "Sum", "Prod", "Quotient",
    "ZERO", "ONE", "add", "mul", "div", "from_json", "sample_sign",
    "coefficient_list", "as_coefficient",
]
