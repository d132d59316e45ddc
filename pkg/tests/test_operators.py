import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accreg.errors import CapabilityError, ContractViolation
from accreg.operators import (
    AffineResidual,
    BallProjection,
    BoxProjection,
    DiagonalMonotone,
    LinearMap,
    NoiseSpec,
    PsdLinear,
    ResidualOfNonexpansive,
    ScalarMonotone,
    check_accretive,
    check_inverse_uniform_accretive,
    operator_from_dict,
    perturb,
)
from accreg.problems import operator_catalog
from accreg.space import SpaceSpec

H2 = SpaceSpec.hilbert(2)


def test_apply_examples():
    np.testing.assert_array_equal(PsdLinear(np.diag([1.0, 0.0])).apply([2, 3]), [2, 0])
    np.testing.assert_array_equal(ResidualOfNonexpansive(LinearMap(np.zeros((2, 2)))).apply([5, -1]), [5, -1])
    ident = ResidualOfNonexpansive(LinearMap(np.zeros((2, 2))))
    np.testing.assert_array_equal(AffineResidual(ident, [1, 1]).apply([1, 1]), [0, 0])


def test_derivative_examples():
    M = np.array([[2.0, 1.0], [1.0, 3.0]])
    v = np.array([0.3, -1.0])
    np.testing.assert_allclose(PsdLinear(M).derivative_apply([9, 9], v), M @ v)
    cubic = DiagonalMonotone(ScalarMonotone("cubic"), 2)
    np.testing.assert_allclose(cubic.derivative_apply([1, 1], [1, 0]), [3, 0])
    T = 0.5 * np.array([[0.0, 1.0], [-1.0, 0.0]])
    A = ResidualOfNonexpansive(LinearMap(T))
    np.testing.assert_allclose(A.derivative_apply([1, 2], v), v - T @ v)


def test_derivative_unsupported_at_kink():
    A = ResidualOfNonexpansive(BoxProjection([-1, -1], [1, 1]))
    with pytest.raises(CapabilityError):
        A.derivative_apply([1.0, 0.0], [1.0, 0.0])
    B = ResidualOfNonexpansive(BallProjection([0, 0], 1.0))
    with pytest.raises(CapabilityError):
        B.derivative_apply([1.0, 0.0], [1.0, 0.0])


def test_lipschitz_derivative_constants():
    assert PsdLinear(np.eye(2)).lipschitz_derivative_constant() == 0.0
    assert ResidualOfNonexpansive(LinearMap(0.5 * np.eye(2))).lipschitz_derivative_constant() == 0.0
    cubic = DiagonalMonotone(ScalarMonotone("cubic"), 3)
    assert cubic.lipschitz_derivative_constant(box_radius=2.0) >= 12.0
    with pytest.raises(CapabilityError):
        ResidualOfNonexpansive(BoxProjection([0], [1])).lipschitz_derivative_constant()


def test_psd_construction_checks():
    with pytest.raises(ContractViolation):
        PsdLinear(-np.eye(2))
    with pytest.raises(ContractViolation):
        PsdLinear([[1.0, 2.0], [0.0, 1.0]])


def test_non_nonexpansive_map_rejected():
    with pytest.raises(ContractViolation):
        ResidualOfNonexpansive(LinearMap(2.0 * np.eye(2)), check=True)


def test_ball_projection_not_certified_in_lp():
    # radial retraction is not the l^p metric projection; sampling decides
    sp = SpaceSpec.lp(1.5, 2)
    assert not BallProjection([0, 0], 1.0).norm_certificate(sp)


def test_forced_negative_definite_fails_accretiveness():
    op = PsdLinear(-np.eye(3), check=False)
    rep = check_accretive(op, SpaceSpec.hilbert(3), 100, seed=0)
    assert not rep.passed and rep.min_value < 0


def _catalog_cases():
    cases = []
    for sp in (SpaceSpec.hilbert(6), SpaceSpec.lp(1.5, 6), SpaceSpec.lp(3.0, 6)):
        for name, op in operator_catalog(6, seed=1, space=sp).items():
            cases.append(pytest.param(sp, op, id=f"{sp.kind}{sp.p:g}-{name}"))
    return cases


@pytest.mark.parametrize("sp,op", _catalog_cases())
def test_catalog_accretive(sp, op):
    for seed in range(3):
        rep = check_accretive(op, sp, 1000, seed)
        assert rep.passed, (rep.min_value, rep.scale)


@pytest.mark.parametrize("R", [1.0, 5.0, 10.0])
def test_residual_of_nonexpansive_inverse_uniform(R):
    sp = SpaceSpec.hilbert(6)
    for name, op in operator_catalog(6, seed=2, space=sp).items():
        base = op.base if isinstance(op, AffineResidual) else op
        if isinstance(base, ResidualOfNonexpansive):
            rep = check_inverse_uniform_accretive(op, sp, R, 500, seed=3)
            assert rep.passed, (name, rep.min_slack)


def test_inverse_uniform_examples():
    sp = SpaceSpec.hilbert(2)
    zero = ResidualOfNonexpansive(LinearMap(np.eye(2)))
    rep = check_inverse_uniform_accretive(zero, sp, 1.0, 200)
    assert rep.passed and rep.min_slack == pytest.approx(0.0, abs=1e-15)
    ident = ResidualOfNonexpansive(LinearMap(np.zeros((2, 2))))
    assert check_inverse_uniform_accretive(ident, sp, 1.0, 200).min_slack > 0
    rot = ResidualOfNonexpansive(LinearMap([[0.0, -1.0], [1.0, 0.0]]))
    assert check_inverse_uniform_accretive(rot, sp, 1.0, 500).passed
    with pytest.raises(CapabilityError):
        check_inverse_uniform_accretive(PsdLinear(np.eye(2)), sp, 1.0, 10)


@pytest.mark.parametrize("sp", [SpaceSpec.lp(1.5, 6), SpaceSpec.lp(3.0, 6)])
def test_box_residual_inverse_uniform_in_lp(sp):
    op = ResidualOfNonexpansive(BoxProjection(-np.ones(6), np.ones(6)), sp)
    for R in (1.0, 5.0, 10.0):
        assert check_inverse_uniform_accretive(op, sp, R, 500, seed=4).passed


# noise ---------------------------------------------------------------------------


def _affine_psd(dim=2):
    return AffineResidual(PsdLinear(np.diag(np.arange(1.0, dim + 1))), np.ones(dim))


def test_perturb_zero_noise_is_identity():
    op = _affine_psd(4)
    out = perturb(op, NoiseSpec(0.0, 0.0, seed=3))
    assert out is op
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.standard_normal(4)
        assert np.array_equal(out.apply(x), op.apply(x))


def test_perturb_data_noise_norm():
    op = AffineResidual(PsdLinear(np.eye(2)), [1.0, 0.0])
    out = perturb(op, NoiseSpec(0.0, 0.1, seed=5))
    assert np.linalg.norm(out.data - op.data) == pytest.approx(0.1, rel=1e-14)
    # only the data moves when h = 0
    assert out.base is op.base


def test_perturb_data_noise_unit_in_lp_norm():
    sp = SpaceSpec.lp(3.0, 5)
    op = AffineResidual(PsdLinear(np.eye(5)), np.zeros(5))
    out = perturb(op, NoiseSpec(0.0, 0.2, seed=1), space=sp)
    assert sp.norm(out.data - op.data) == pytest.approx(0.2, rel=1e-14)


@pytest.mark.parametrize("h", [0.05, 0.5])
def test_perturb_operator_noise_bound(h):
    noise = NoiseSpec(h, 0.0, seed=7)
    op = _affine_psd(5)
    out = perturb(op, noise)
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        x = rng.standard_normal(5) * rng.choice([0.1, 1.0, 10.0])
        worst = max(worst, np.linalg.norm(out.apply(x) - op.apply(x)) / noise.g(np.linalg.norm(x)))
    assert worst <= h


def test_perturbed_operator_stays_accretive():
    sp = SpaceSpec.hilbert(5)
    out = perturb(_affine_psd(5), NoiseSpec(0.5, 0.1, seed=2))
    assert check_accretive(out, sp, 1000, 0).passed


def test_perturb_requires_affine_residual():
    with pytest.raises(ContractViolation):
        perturb(PsdLinear(np.eye(2)), NoiseSpec(0.1, 0.1))


def test_noise_spec_validation():
    with pytest.raises(ContractViolation):
        NoiseSpec(-1.0, 0.0)
    with pytest.raises(ContractViolation):
        NoiseSpec(0.0, float("inf"))


# derivatives vs finite differences --------------------------------------------------


def _smooth_ops():
    rng = np.random.default_rng(3)
    G = rng.standard_normal((5, 5))
    return [
        PsdLinear(G @ G.T),
        DiagonalMonotone(ScalarMonotone("cubic", 1.0, 0.5), 5),
        DiagonalMonotone([ScalarMonotone(k) for k in ("tanh", "arctan", "linear", "cubic", "tanh")]),
        ResidualOfNonexpansive(LinearMap(0.9 * np.linalg.qr(G)[0])),
        perturb(AffineResidual(PsdLinear(np.eye(5)), np.ones(5)), NoiseSpec(0.3, 0.0, seed=1)),
    ]


@pytest.mark.parametrize("op", _smooth_ops(), ids=lambda o: type(o).__name__)
def test_derivative_matches_central_differences(op):
    rng = np.random.default_rng(11)
    eps = 1e-5
    for _ in range(50):
        x = rng.standard_normal(op.dim)
        v = rng.standard_normal(op.dim)
        fd = (op.apply(x + eps * v) - op.apply(x - eps * v)) / (2 * eps)
        an = op.derivative_apply(x, v)
        assert np.linalg.norm(fd - an) <= 1e-6 * max(1.0, np.linalg.norm(an))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_box_residual_accretive_pairs(x, y):
    op = ResidualOfNonexpansive(BoxProjection([-1, 0, 2], [1, 0.5, 3]))
    x, y = np.array(x), np.array(y)
    for p in (1.5, 2.0, 4.0):
        sp = SpaceSpec.lp(p, 3)
        d = op.apply(x) - op.apply(y)
        assert sp.dual_pair(d, sp.duality_map(x - y)) >= -1e-12 * max(1.0, sp.norm(d) * sp.norm(x - y))


def test_operator_from_dict():
    op = operator_from_dict({"type": "psd_linear", "matrix": [[1, 0], [0, 0]], "data": [1, 0]})
    assert isinstance(op, AffineResidual)
    np.testing.assert_array_equal(op.apply([1, 5]), [0, 0])
    op = operator_from_dict({"type": "residual_nonexpansive",
                             "map": {"form": "compose", "maps": [{"form": "box", "lower": [0, 0], "upper": [1, 1]},
                                                                  {"form": "ball", "center": [0, 0], "radius": 1}]}})
    assert op.apply([0.5, 0.5]).tolist() == [0.0, 0.0]
    with pytest.raises(ContractViolation):
        operator_from_dict({"type": "nope"})
