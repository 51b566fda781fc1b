import numpy as np
import pytest

from greenbvp.coefficients import ZERO, Const, Exp, Poly, sample_sign, add, div, ONE
from greenbvp.green import build_kernel, ode_residual
from greenbvp.problem import BvpSpec, mixed_problem
from greenbvp.recurrence import (H_residual, RecurrenceHypothesisError, build_H,
                                 initial_coefficients, t_residual)

from conftest import third_order, variable_mixed

ts = np.linspace(0, 1, 100)


def off_diag(count=20):
    t = (np.arange(count) + 0.5) / count
    s = (np.arange(count) + 0.25) / count
    T, S = np.meshgrid(t, s, indexing="ij")
    return T.ravel(), S.ravel()


def test_hand_derived_level_one():
    H = build_H(variable_mixed(0.0), 1)
    np.testing.assert_allclose(H.b(1)(ts), -1 / (1 + ts), atol=1e-12)
    np.testing.assert_allclose(H.b(2)(ts), 1 + ts, atol=1e-12)
    assert H.branches == ("nonzero",)
    assert "H_1 u = u^(2)" in str(H)


def test_level_zero_is_the_operator():
    spec = third_order(2.0)
    H = build_H(spec, 0)
    for c, ref in zip(H.coefficients[1:], spec.effective_coefficients()):
        np.testing.assert_array_equal(c(ts), ref(ts))


@pytest.mark.parametrize("l", [0, 1])
def test_constant_coefficients_collapse(l):
    spec = mixed_problem(3.0, coefficients=(Const(0.5), Const(-1.0)))
    H = build_H(spec, l)
    for c, ref in zip(H.coefficients[1:], spec.effective_coefficients()):
        np.testing.assert_array_equal(c(ts), ref(ts))
    g = build_kernel(spec)
    t, s = off_diag()
    np.testing.assert_array_equal(H_residual(H, g, l, t, s), t_residual(g, l, t, s))


def test_zero_branch():
    # b_{2,0} = 0: u'' + (1+t) u'
    spec = mixed_problem(0.0, coefficients=(Poly((1.0, 1.0)), ZERO))
    H = build_H(spec, 1)
    assert H.branches == ("zero",)
    np.testing.assert_allclose(H.b(2)(ts), 1.0)


@pytest.mark.parametrize("spec,l", [
    (variable_mixed(0.0), 1),
    (variable_mixed(2.0), 1),
    (mixed_problem(1.0), 1),
    (third_order(1.0), 1),
    (third_order(1.0), 2),
    (mixed_problem(0.0, coefficients=(Exp(1.0, 1.0), Poly((2.0, 0.0, 1.0)))), 1),
])
def test_annihilates_derivative(spec, l):
    H = build_H(spec, l)
    g = build_kernel(spec)
    t, s = off_diag()
    scale = max(1.0, np.max(np.abs(g.derivatives(t, s, spec.n + l))))
    assert np.max(np.abs(H_residual(H, g, l, t, s))) <= 1e-6 * scale


def test_level_zero_matches_ode_residual():
    spec = variable_mixed(1.0)
    H = build_H(spec, 0)
    g = build_kernel(spec)
    t, s = off_diag(10)
    mask = np.abs(t - s) > 0.01
    exact = H_residual(H, g, 0, t[mask], s[mask])
    assert np.max(np.abs(exact)) < 1e-9
    assert np.max(np.abs(ode_residual(g, t[mask], s[mask], h=1e-3))) < 1e-7


def test_diagonal_rejected():
    g = build_kernel(mixed_problem(1.0))
    with pytest.raises(ValueError):
        H_residual(build_H(g.spec, 1), g, 1, 0.5, 0.5)


def test_sign_changing_coefficient_rejected():
    spec = mixed_problem(0.0, coefficients=(ZERO, Poly((-0.5, 1.0))))
    with pytest.raises(RecurrenceHypothesisError) as exc:
        build_H(spec, 1)
    assert exc.value.level == 1


def test_level_bounds():
    with pytest.raises(ValueError):
        build_H(mixed_problem(0.0), 2)
    spec = BvpSpec(1, (0.0, 1.0), (ZERO,), 0, 1.0, [[1.0]], [[0.0]])
    with pytest.raises(ValueError):
        build_H(spec, 1)


def test_literal_placement():
    spec = mixed_problem(2.0, k=1)
    op = initial_coefficients(spec, "operator")
    lit = initial_coefficients(spec, "literal")
    assert float(op[1](0.0)) == 2.0 and float(op[2](0.0)) == 0.0
    assert float(lit[1](0.0)) == 2.0
    with pytest.raises(ValueError):
        initial_coefficients(mixed_problem(2.0), "literal")


@pytest.mark.parametrize("a2", [Poly((1.0, 1.0)), Exp(2.0, -1.0), Poly((3.0, 0.0, 1.0))])
def test_branch_consistency(a2):
    spec = mixed_problem(0.0, coefficients=(ZERO, a2))
    H0 = build_H(spec, 0)
    H1 = build_H(spec, 1)
    ratio = add(div(H0.b(1), H0.b(2)).derivative(), ONE)
    kind = sample_sign(ratio, 0, 1)
    expect = "zero" if kind == "zero" else "nonzero"
    assert sample_sign(H1.b(2), 0, 1) == expect
