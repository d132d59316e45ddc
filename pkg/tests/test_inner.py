import math

import numpy as np
import pytest

from accreg.errors import ContractViolation, InnerSolveError
from accreg.inner import InnerConfig, coupled_tol, solve_regularized, solve_shifted_linear
from accreg.operators import (
    AffineResidual,
    BoxProjection,
    DiagonalMonotone,
    LinearMap,
    PsdLinear,
    ResidualOfNonexpansive,
    ScalarMonotone,
)
from accreg.problems import operator_catalog
from accreg.space import SpaceSpec

CFG = InnerConfig(tol=1e-10, max_iter=2000)


def test_solve_examples():
    ident = ResidualOfNonexpansive(LinearMap(np.zeros((2, 2))))
    x, r, _ = solve_regularized(ident, 1.0, [4, 2], CFG)
    np.testing.assert_allclose(x, [2, 1], atol=1e-10)
    x, r, _ = solve_regularized(PsdLinear([[2.0]]), 1.0, [3.0], CFG)
    np.testing.assert_allclose(x, [1.0], atol=1e-12)
    half = ResidualOfNonexpansive(LinearMap([[0.5]]))
    res = solve_regularized(half, 0.5, [1.0], InnerConfig(1e-10, 2000, "contraction"))
    assert res.method == "contraction"
    assert res.x[0] == pytest.approx(1.0, abs=1e-10) and res.residual <= CFG.tol


def test_method_selection():
    assert solve_regularized(PsdLinear(np.eye(2)), 1.0, [1, 1]).method == "direct"
    box = ResidualOfNonexpansive(BoxProjection([-1, -1], [1, 1]))
    assert solve_regularized(box, 1.0, [3, 0]).method == "contraction"
    assert solve_regularized(box, 1e-6, [3, 0]).method == "damped_newton"
    cubic = DiagonalMonotone(ScalarMonotone("cubic"), 2)
    assert solve_regularized(cubic, 0.1, [1, 2]).method == "damped_newton"


def test_contract_violations():
    with pytest.raises(ContractViolation):
        solve_regularized(PsdLinear(np.eye(1)), 0.0, [1.0])
    with pytest.raises(ContractViolation):
        InnerConfig(tol=0.0)
    with pytest.raises(ContractViolation):
        InnerConfig(max_iter=0)
    with pytest.raises(ContractViolation):
        solve_shifted_linear(np.eye(1), -1.0, [1.0])


def test_non_convergence_reports_residual():
    rot = ResidualOfNonexpansive(LinearMap([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(InnerSolveError) as info:
        solve_regularized(rot, 1e-3, [5.0, 1.0], InnerConfig(tol=1e-14, max_iter=3, method="contraction"))
    assert info.value.residual > 0 and info.value.iters == 3


@pytest.mark.parametrize("name", sorted(operator_catalog(6, seed=0)))
def test_residual_postcondition_and_stability(name):
    op = operator_catalog(6, seed=0)[name]
    rng = np.random.default_rng(2)
    for c in (1e-3, 1e-1, 1.0):
        for _ in range(20):
            b = rng.standard_normal(6) * 2
            res = solve_regularized(op, c, b, CFG)
            assert np.linalg.norm(op.apply(res.x) + c * res.x - b) <= CFG.tol * (1 + 1e-9)
            w = 1e-3 * rng.standard_normal(6)
            res2 = solve_regularized(op, c, b + w, CFG)
            assert np.linalg.norm(res.x - res2.x) <= np.linalg.norm(w) / c + 4 * CFG.tol / c


def test_two_solves_agree_within_stability_bound():
    op = DiagonalMonotone(ScalarMonotone("cubic", 1.0, 0.2), 4)
    b = np.array([1.0, -2.0, 0.5, 3.0])
    c = 0.01
    x1 = solve_regularized(op, c, b, CFG).x
    x2 = solve_regularized(op, c, b, CFG, x0=np.full(4, 5.0)).x
    assert np.linalg.norm(x1 - x2) <= 2 * CFG.tol / c


@pytest.mark.parametrize("c", [0.05, 0.5, 2.0])
def test_contraction_iteration_count_bound(c):
    rng = np.random.default_rng(0)
    Q = np.linalg.qr(rng.standard_normal((5, 5)))[0]
    op = ResidualOfNonexpansive(LinearMap(Q))
    b = rng.standard_normal(5)
    tol = 1e-9
    x_star = np.linalg.solve((1 + c) * np.eye(5) - Q, b)
    x0 = b / (1 + c)
    res = solve_regularized(op, c, b, InnerConfig(tol, 5000, "contraction"))
    # the residual is (1+c) times the fixed-point error
    bound = math.ceil(math.log(tol / ((1 + c) * np.linalg.norm(x0 - x_star))) / math.log(1 / (1 + c))) + 1
    assert res.iters <= bound


def test_shifted_linear_examples():
    np.testing.assert_allclose(solve_shifted_linear(np.zeros((2, 2)), 2.0, [4, 6], CFG), [2, 3])
    np.testing.assert_allclose(solve_shifted_linear(np.eye(1), 1.0, [4], CFG), [2])
    s = solve_shifted_linear(np.diag([0.0, 10.0]), 0.1, [1, 1], CFG)
    np.testing.assert_allclose(s, [10, 1 / 10.1], rtol=1e-12)
    assert np.linalg.norm(s) <= np.linalg.norm([1, 1]) / 0.1


def test_shifted_linear_accepts_callable():
    M = np.array([[1.0, 2.0], [-2.0, 1.0]])
    s = solve_shifted_linear(lambda v: M @ v, 0.5, [1.0, 1.0], CFG)
    np.testing.assert_allclose((M + 0.5 * np.eye(2)) @ s, [1.0, 1.0], atol=1e-12)


def test_shifted_linear_resolvent_bound_on_accretive_instances():
    rng = np.random.default_rng(4)
    for _ in range(30):
        G = rng.standard_normal((6, 6))
        Q = np.linalg.qr(rng.standard_normal((6, 6)))[0]
        for L in (G @ G.T, np.eye(6) - Q):
            alpha = 10 ** rng.uniform(-4, 0)
            r = rng.standard_normal(6)
            s = solve_shifted_linear(L, alpha, r, CFG)
            assert np.linalg.norm(s) <= np.linalg.norm(r) / alpha + CFG.tol / alpha


def test_shifted_linear_detects_non_accretive():
    with pytest.raises(InnerSolveError):
        solve_shifted_linear(-0.9 * np.eye(2), 1.0, [1.0, 0.0], CFG)


def test_coupled_tol():
    assert coupled_tol(1.0) == 1e-10
    assert coupled_tol(1e-4) == pytest.approx(1e-11)
    assert coupled_tol(1e-9, 1.0) == 1e-14


def test_residual_measured_in_space_norm():
    sp = SpaceSpec.lp(3.0, 4)
    op = AffineResidual(ResidualOfNonexpansive(BoxProjection(-np.ones(4), np.ones(4)), sp), np.ones(4))
    res = solve_regularized(op, 0.3, np.arange(4.0), CFG, space=sp)
    assert sp.norm(op.apply(res.x) + 0.3 * res.x - np.arange(4.0)) <= CFG.tol
