import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greenbvp.analysis import IDENTICALLY_ZERO, zero_count
from greenbvp.coefficients import Const, Poly
from greenbvp.green import (GreenFunction, SingularProblemError, boundary_residuals, build_green,
                            build_kernel, check_solvability, eval_green, jump, ode_residual,
                            solve_bvp, vanishes)
from greenbvp.ode import fundamental_system
from greenbvp.oracles import dirichlet_k0_kernel, mixed_k0_kernel, mixed_k1_kernel
from greenbvp.problem import dirichlet_problem, mixed_problem
from greenbvp.quadrature import QuadratureRule

from conftest import FAMILIES


def test_solvability_examples():
    assert not check_solvability(mixed_problem(np.pi**2 / 4)).unique_solvable
    cert = check_solvability(mixed_problem(0.0))
    assert cert.unique_solvable and np.isclose(cert.determinant, 1.0)
    assert check_solvability(mixed_problem(5.0, k=1)).unique_solvable


def test_singular_kernel_raises():
    with pytest.raises(SingularProblemError, match="eigenvalue"):
        build_kernel(mixed_problem(np.pi**2 / 4))


def test_large_drift_not_flagged_singular():
    assert check_solvability(mixed_problem(-50.0, k=1)).unique_solvable


def test_build_green_u_plus_one():
    spec = mixed_problem(1.0)
    fs = fundamental_system(spec)
    c, d = build_green(spec, fs, 0.5)
    t = np.linspace(0, 0.5, 6)
    vals = fs.stack(t)[:, 0, :] @ c
    np.testing.assert_allclose(vals, -np.sin(t) * np.cos(0.5) / np.cos(1.0), atol=1e-10)
    with pytest.raises(ValueError):
        build_green(spec, fs, 1.0)


def test_zero_parameter_kernel_is_minus_min():
    g = build_kernel(mixed_problem(0.0))
    T, S = np.meshgrid(np.linspace(0, 1, 11), np.linspace(0.03, 0.97, 11))
    np.testing.assert_allclose(g(T, S), -np.minimum(T, S), atol=1e-10)


def test_derivative_examples():
    g = build_kernel(mixed_problem(0.0, k=1))
    assert np.isclose(eval_green(g, 0.2, 0.6, 1), -1.0, atol=1e-10)
    assert abs(eval_green(g, 0.8, 0.6, 1)) < 1e-10
    g = build_kernel(mixed_problem(1.0))
    s = np.linspace(0.05, 0.95, 7)
    assert np.max(np.abs(eval_green(g, np.ones_like(s), s, 1))) < 1e-10


def test_side_required_on_diagonal():
    g = build_kernel(mixed_problem(1.0))
    with pytest.raises(ValueError, match="side"):
        eval_green(g, 0.5, 0.5, 1)
    left = eval_green(g, 0.5, 0.5, 1, side="left")
    right = eval_green(g, 0.5, 0.5, 1, side="right")
    assert np.isclose(right - left, 1.0, atol=1e-9)
    assert eval_green(g, 0.5, 0.5, 0) == eval_green(g, 0.5, 0.5, 0, side="right")


def test_order_limits():
    g = build_kernel(mixed_problem(1.0))
    with pytest.raises(ValueError):
        eval_green(g, 0.2, 0.5, 3)
    with pytest.raises(ValueError):
        eval_green(g, 1.2, 0.5, 0)
    # l = n from the equation
    assert np.isclose(eval_green(g, 0.2, 0.5, 2), -1.0 * eval_green(g, 0.2, 0.5, 0))


@pytest.mark.parametrize("M", [-50.0, -1.0, 0.0, 1e-8, 1.0, 2.0, 5.0, 30.0])
def test_matches_mixed_k1_oracle(M):
    g = build_kernel(mixed_problem(M, k=1))
    T, S = np.meshgrid(np.linspace(0, 1, 21), np.linspace(0.01, 0.99, 21))
    ref = mixed_k1_kernel(M, T, S)
    assert np.max(np.abs(g(T, S) - ref)) <= 1e-7 * max(1.0, np.max(np.abs(ref)))


@pytest.mark.parametrize("M", [-50.0, -1.0, 0.0, 1.0, 2.0, 15.0])
def test_matches_mixed_k0_oracle(M):
    g = build_kernel(mixed_problem(M))
    T, S = np.meshgrid(np.linspace(0, 1, 21), np.linspace(0.013, 0.987, 20))
    for l in (0, 1):
        assert np.max(np.abs(g(T, S, l) - mixed_k0_kernel(M, T, S, l))) < 1e-8


@pytest.mark.parametrize("M", [-3.0, 0.0, 5.0, 20.0])
def test_matches_dirichlet_oracle(M):
    g = build_kernel(dirichlet_problem(M))
    T, S = np.meshgrid(np.linspace(0, 1, 21), np.linspace(0.01, 0.99, 21))
    assert np.max(np.abs(g(T, S) - dirichlet_k0_kernel(M, T, S))) < 1e-8


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_definitional_invariants(family, rng):
    g = build_kernel(FAMILIES[family](1.5))
    s = rng.uniform(0.05, 0.95, 50)
    assert np.max(np.abs(boundary_residuals(g, s))) <= 1e-8
    np.testing.assert_allclose(jump(g, s), 1.0, atol=1e-6)
    for m in range(g.n - 1):
        assert np.max(np.abs(jump(g, s, order=m))) < 1e-6
    t = np.where(np.abs(rng.uniform(0.01, 0.99, 50) - s) < 0.01, 0.5, rng.uniform(0.01, 0.99, 50))
    off = np.abs(t - s) > 0.005
    assert np.max(np.abs(ode_residual(g, t[off], s[off], h=1e-3))) <= 1e-7


def test_solve_bvp_examples():
    quad = QuadratureRule()
    g = build_kernel(mixed_problem(0.0))
    t = np.linspace(0, 1, 7)
    np.testing.assert_allclose(solve_bvp(g, lambda x: np.ones_like(x), quad, t), t**2 / 2 - t, atol=1e-10)
    np.testing.assert_allclose(solve_bvp(g, lambda x: np.zeros_like(x), quad, t), 0.0)
    g = build_kernel(mixed_problem(1.0))
    ref = 1 - np.cos(t) - np.tan(1.0) * np.sin(t)
    np.testing.assert_allclose(solve_bvp(g, lambda x: np.ones_like(x), quad, t), ref, atol=1e-10)
    assert np.isclose(solve_bvp(g, lambda x: np.ones_like(x), quad, 0.5),
                      1 - np.cos(0.5) - np.tan(1.0) * np.sin(0.5))


def test_solve_bvp_variable_coefficient_residual():
    spec = mixed_problem(0.0, coefficients=(Const(0.0), Poly((1.0, 1.0))))
    g = build_kernel(spec)
    sigma = lambda x: np.cos(3 * x)  # noqa: E731
    h = 1e-3
    t = np.linspace(0.1, 0.9, 5)
    u = lambda x: solve_bvp(g, sigma, None, x)  # noqa: E731
    upp = (-u(t + 2 * h) + 16 * u(t + h) - 30 * u(t) + 16 * u(t - h) - u(t - 2 * h)) / (12 * h * h)
    assert np.max(np.abs(upp + (1 + t) * u(t) - sigma(t))) < 1e-6


def test_cache_is_shared_between_threads():
    from concurrent.futures import ThreadPoolExecutor
    g = build_kernel(mixed_problem(1.0))
    s = np.linspace(0.1, 0.9, 40)
    with ThreadPoolExecutor(4) as pool:
        vals = list(pool.map(lambda x: g(0.3, x), s))
    np.testing.assert_allclose(vals, mixed_k0_kernel(1.0, 0.3, s), atol=1e-10)
    assert g.cache_size() == 40


@pytest.mark.parametrize("family,M", [("mixed-k0", 1.0), ("mixed-k1", 2.0), ("third", 3.0), ("navier4", 20.0)])
def test_sections_never_vanish_on_both_halves(family, M):
    g = build_kernel(FAMILIES[family](M))
    for s in (0.2, 0.5, 0.8):
        for l in range(g.n):
            left = g(np.linspace(0, s, 200, endpoint=False), s, l)
            right = g(np.linspace(s, 1, 201)[1:], s, l)
            assert not (vanishes(left) and vanishes(right))


def test_zero_count_examples():
    g = build_kernel(mixed_problem(0.0, k=1))
    assert zero_count(g, 1, 0.4, "right") == IDENTICALLY_ZERO
    assert zero_count(g, 1, 0.4, "left") == 0
    g = build_kernel(mixed_problem(1.0))
    assert zero_count(g, 0, 0.5, "left") == 0
    assert zero_count(g, 0, 0.5, "right") == 0
    g = build_kernel(mixed_problem(15.0))
    counts = [zero_count(g, 0, s, h) for s in (0.2, 0.5, 0.8) for h in ("left", "right")]
    assert max(counts) >= 1


@pytest.mark.parametrize("family,M", [("mixed-k0", 15.0), ("third", 200.0), ("navier4", 3000.0)])
def test_zero_count_stable_under_refinement(family, M):
    g = build_kernel(FAMILIES[family](M))
    for s in (0.3, 0.7):
        for l in range(g.n):
            for half in ("left", "right"):
                a = zero_count(g, l, s, half, 2000)
                b = zero_count(g, l, s, half, 4000)
                assert a == b and (a >= 0 or a == IDENTICALLY_ZERO)


@settings(max_examples=15, deadline=None)
@given(st.floats(-20, 9), st.floats(0.02, 0.98), st.floats(0.0, 1.0))
def test_kernel_matches_oracle_property(M, s, t):
    g = build_kernel(mixed_problem(M, k=1))
    assert abs(g(t, s) - mixed_k1_kernel(M, t, s)) < 1e-8 * max(1.0, abs(mixed_k1_kernel(M, t, s)))
