import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accreg.errors import ContractViolation, DimensionMismatch
from accreg.space import FIGIEL_L, SpaceSpec, dual_pair

P_VALUES = [1.5, 2.0, 3.0, 4.0]


def lp(p, d=2):
    return SpaceSpec.lp(p, d)


# point values -------------------------------------------------------------------


def test_norm_examples():
    assert SpaceSpec.hilbert(2).norm([3, 4]) == 5.0
    assert lp(3).norm([1, 1]) == pytest.approx(2 ** (1 / 3), rel=1e-15)
    for sp in (SpaceSpec.hilbert(3), lp(1.5, 3), lp(4, 3)):
        assert sp.norm(np.zeros(3)) == 0.0


def test_norm_rejects_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        SpaceSpec.hilbert(3).norm([1.0, 2.0])


def test_non_finite_vector_rejected():
    with pytest.raises(ContractViolation):
        SpaceSpec.hilbert(2).norm([1.0, np.nan])


@pytest.mark.parametrize("p", [1.0, math.inf, 0.5])
def test_lp_rejects_non_smooth_exponents(p):
    with pytest.raises(ContractViolation):
        SpaceSpec.lp(p, 3)


def test_dual_pair_examples():
    assert dual_pair([1, 2], [3, 4]) == 11.0
    assert dual_pair([0, 0], [5, -7]) == 0.0
    assert dual_pair([1, 0], [0, 1]) == 0.0
    with pytest.raises(DimensionMismatch):
        dual_pair([1, 2], [1, 2, 3])


def test_duality_map_examples():
    np.testing.assert_array_equal(SpaceSpec.hilbert(2).duality_map([3, 4]), [3, 4])
    np.testing.assert_allclose(lp(4).duality_map([2, 0]), [2, 0], rtol=1e-15)
    sp = lp(3)
    J = sp.duality_map([1, 1])
    np.testing.assert_allclose(J, [2 ** (-1 / 3)] * 2, rtol=1e-14)
    assert sp.dual_pair([1, 1], J) == pytest.approx(2 ** (2 / 3), rel=1e-14)


@pytest.mark.parametrize("p", P_VALUES)
def test_duality_map_of_zero_is_zero(p):
    out = lp(p, 4).duality_map(np.zeros(4))
    assert np.all(out == 0) and np.all(np.isfinite(out))


def test_smoothness_bound_examples():
    assert SpaceSpec.hilbert(1).modulus_smoothness_bound(0.0) == 0.0
    assert lp(3).modulus_smoothness_bound(0.1) == pytest.approx(0.02, rel=1e-12)
    assert lp(1.5).modulus_smoothness_bound(0.01) == pytest.approx(0.001 / 1.5, rel=1e-12)
    with pytest.raises(ContractViolation):
        lp(3).modulus_smoothness_bound(-0.1)


def test_convexity_bound_examples():
    for sp in (SpaceSpec.hilbert(1), lp(3), lp(1.5)):
        assert sp.modulus_convexity_bound(0.0) == 0.0
    assert lp(3).modulus_convexity_bound(1.0) == pytest.approx(1 / 24, rel=1e-12)
    assert lp(1.5).modulus_convexity_bound(0.4) == pytest.approx(0.005, rel=1e-12)
    with pytest.raises(ContractViolation):
        lp(3).modulus_convexity_bound(2.5)


def test_phi_examples():
    assert SpaceSpec.hilbert(1).phi_inverse_uniform(1.0, 0.0) == 0.0
    assert lp(2.0).phi_inverse_uniform(1.0, 1.0) == pytest.approx(1 / (2 * FIGIEL_L * 64), rel=1e-12)
    assert lp(1.5).phi_inverse_uniform(5.0, 2.0) == pytest.approx(0.5 / (256 * FIGIEL_L) * 4, rel=1e-12)
    assert lp(2.0).phi_inverse_uniform(1.0, 1.0) == pytest.approx(0.0045956, abs=1e-7)
    with pytest.raises(ContractViolation):
        lp(3).phi_inverse_uniform(0.0, 1.0)


def test_phi_inverse_examples():
    sp = lp(2.0)
    assert sp.phi_inverse_function(1.0, 0.0) == 0.0
    u = sp.phi_inverse_uniform(1.0, 1.0)
    assert sp.phi_inverse_function(1.0, u) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ContractViolation):
        sp.phi_inverse_function(-1.0, 1.0)


def test_hilbert_phi_uses_p2_branch():
    h = SpaceSpec.hilbert(3)
    assert h.phi_inverse_uniform(2.0, 0.7) == lp(2.0, 3).phi_inverse_uniform(2.0, 0.7)


# properties ---------------------------------------------------------------------


@pytest.mark.parametrize("p", P_VALUES)
def test_duality_identities_seeded(p):
    sp = SpaceSpec.lp(p, 20)
    rng = np.random.default_rng(int(p * 10))
    for _ in range(1000):
        x = rng.standard_normal(20) * 10.0 ** rng.uniform(-3, 3)
        J = sp.duality_map(x)
        n = sp.norm(x)
        assert abs(sp.dual_pair(x, J) - n * n) <= 1e-10 * max(1.0, n * n)
        assert abs(sp.dual_norm(J) - n) <= 1e-10 * max(1.0, n)


vectors = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=12)


@settings(max_examples=200, deadline=None)
@given(vectors, st.sampled_from(P_VALUES), st.floats(1e-3, 1e3))
def test_duality_map_positively_homogeneous(x, p, lam):
    sp = SpaceSpec.lp(p, len(x))
    x = np.array(x)
    lhs = sp.duality_map(lam * x)
    rhs = lam * sp.duality_map(x)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1e-300, np.linalg.norm(rhs)) + 1e-300


@settings(max_examples=200, deadline=None)
@given(vectors, vectors)
def test_hilbert_matches_l2(x, f):
    d = min(len(x), len(f))
    x, f = np.array(x[:d]), np.array(f[:d])
    h, l2 = SpaceSpec.hilbert(d), SpaceSpec.lp(2.0, d)
    assert abs(h.norm(x) - l2.norm(x)) <= 1e-14 * max(1.0, h.norm(x))
    np.testing.assert_allclose(h.duality_map(x), l2.duality_map(x), rtol=0, atol=1e-14 * max(1.0, h.norm(x)))
    assert h.dual_pair(x, f) == l2.dual_pair(x, f)


@settings(max_examples=200, deadline=None)
@given(vectors, st.sampled_from(P_VALUES), st.floats(-100, 100))
def test_norm_absolutely_homogeneous(x, p, lam):
    sp = SpaceSpec.lp(p, len(x))
    x = np.array(x)
    assert sp.norm(lam * x) == pytest.approx(abs(lam) * sp.norm(x), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("sp", [SpaceSpec.hilbert(1), lp(1.5), lp(2.0), lp(3.0), lp(4.0)])
def test_moduli_monotone_on_grid(sp):
    tau = np.linspace(0, 5, 100)
    eps = np.linspace(0, 2, 100)
    assert np.all(np.diff(sp.modulus_smoothness_bound(tau)) >= 0)
    assert np.all(np.diff(sp.modulus_convexity_bound(eps)) >= 0)
    t = np.linspace(0, 10, 100)
    assert np.all(np.diff(sp.phi_inverse_uniform(2.0, t)) > 0)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([1.2, 1.5, 2.0, 3.0, 4.0]), st.floats(1e-3, 1e3), st.floats(1e-6, 1e3))
def test_phi_round_trip(p, s, t):
    sp = SpaceSpec.lp(p, 2)
    u = sp.phi_inverse_uniform(s, t)
    assert sp.phi_inverse_function(s, u) == pytest.approx(t, rel=1e-12)


def test_phi_round_trip_p3_s2():
    sp = lp(3.0)
    for t in np.geomspace(1e-4, 1e4, 50):
        assert sp.phi_inverse_function(2.0, sp.phi_inverse_uniform(2.0, t)) == pytest.approx(t, rel=1e-12)


def test_smoothness_ratio_zero_at_zero():
    for sp in (SpaceSpec.hilbert(1), lp(1.5), lp(3)):
        assert sp.smoothness_ratio_bound(0.0) == 0.0
        assert sp.smoothness_ratio_bound(0.2) == pytest.approx(sp.modulus_smoothness_bound(0.2) / 0.2)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_row_helpers_match_vector_versions(p):
    from accreg.space import row_duality, row_norms

    for sp in ([SpaceSpec.hilbert(5)] if p == 2.0 else []) + [SpaceSpec.lp(p, 5)]:
        X = np.random.default_rng(1).standard_normal((50, 5)) * 10.0 ** np.arange(-3, 2)
        X[0] = 0.0
        np.testing.assert_allclose(row_norms(sp, X), [sp.norm(x) for x in X], rtol=1e-14)
        np.testing.assert_allclose(row_norms(sp, X, dual=True), [sp.dual_norm(x) for x in X], rtol=1e-14)
        np.testing.assert_allclose(row_duality(sp, X), [sp.duality_map(x) for x in X], rtol=1e-14, atol=0)
