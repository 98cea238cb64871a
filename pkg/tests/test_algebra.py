import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlslab.algebra import (ConeClass, CoefficientVector, EmptyBasis, SingularTransform, SystemRep,
                            coefficients_to_system, cone_classify, dmatrix, dmatrix_inverse, observables,
                            quadratic_form, subspace_meets_cone, system_to_coefficients, transform_field,
                            transform_system, GL2Transform)
from nlslab.families import nls_a, nls_a_coefficients, nls_b
from nlslab.ode import nonlinearity, nonlinearity_from_system

reals = st.floats(-10, 10, allow_nan=False)


def test_zero_coefficients_give_zero_system():
    s = coefficients_to_system(np.zeros(12))
    assert not s.A.any() and not s.V.any()
    assert not system_to_coefficients(SystemRep(np.zeros((3, 3)), np.zeros(3))).as_array().any()


def test_nls_a_zeta_two_recovers_its_coefficients():
    assert np.array_equal(system_to_coefficients(nls_a(2.0)).as_array(), nls_a_coefficients(2.0))


def test_coefficient_vector_rejects_bad_input():
    with pytest.raises(ValueError):
        CoefficientVector.of([1.0] * 11)
    with pytest.raises(ValueError):
        CoefficientVector.of([np.nan] + [0.0] * 11)


@settings(max_examples=200, deadline=None)
@given(st.lists(reals, min_size=12, max_size=12))
def test_round_trip_coefficients(c):
    back = system_to_coefficients(coefficients_to_system(c)).as_array()
    assert np.allclose(back, c, atol=1e-12, rtol=0)


@settings(max_examples=100, deadline=None)
@given(st.lists(reals, min_size=12, max_size=12),
       st.tuples(reals, reals, reals, reals))
def test_matrix_form_of_nonlinearity_agrees_with_monomials(c, z):
    u1, u2 = complex(z[0], z[1]), complex(z[2], z[3])
    F = nonlinearity(c, u1, u2)
    G = nonlinearity_from_system(coefficients_to_system(c), u1, u2)
    scale = 1 + max(abs(x) for x in c) * (abs(u1) + abs(u2)) ** 3
    assert abs(F[0] - G[0]) <= 1e-12 * scale and abs(F[1] - G[1]) <= 1e-12 * scale


@pytest.mark.parametrize("p,a,expected", [
    ((1, 0), (1, 0, 1), 1.0),
    ((1, 1), (2, 1, 2), 6.0),
    ((1, 1j), (0, 1, 0), 0.0),
])
def test_quadratic_form_examples(p, a, expected):
    assert quadratic_form(p, a) == pytest.approx(expected)


def test_observables_satisfy_the_cone_identity():
    rng = np.random.default_rng(0)
    p = rng.normal(size=2) + 1j * rng.normal(size=2)
    o = observables(p)
    assert 4 * o.rho1 * o.rho2 == pytest.approx(o.R ** 2 + o.I ** 2)


@pytest.mark.parametrize("a,cls", [((1, 0, 1), ConeClass.PLUS), ((1, 1, 1), ConeClass.ZERO),
                                   ((2, 1, 1), ConeClass.PLUS), ((1, 2, 1), ConeClass.MINUS),
                                   ((-1, 0, -1), ConeClass.PLUS)])
def test_cone_classify(a, cls):
    assert cone_classify(a).cone_class is cls


def test_cone_classify_band_scales_with_norm():
    assert cone_classify((1e6, 1e6 * (1 - 1e-12), 1e6)).cone_class is ConeClass.ZERO
    with pytest.raises(ValueError):
        cone_classify((1, 0, 1), tol=-1)


def test_subspace_meets_cone_examples():
    assert subspace_meets_cone([[1, 0, 0], [0, 0, 1]], "Plus")
    assert not subspace_meets_cone([[1, 0, 0]], "Plus")
    assert subspace_meets_cone([[1, 0, 0]], "Zero")
    with pytest.raises(EmptyBasis):
        subspace_meets_cone(np.zeros((0, 3)))


@settings(max_examples=60, deadline=None)
@given(st.lists(reals, min_size=6, max_size=6))
def test_subspace_meets_cone_matches_dense_sampling(v):
    B = np.reshape(v, (2, 3))
    if np.linalg.matrix_rank(B, tol=1e-6) < 2:
        return
    th = np.linspace(0, np.pi, 10_000)
    vecs = np.cos(th)[:, None] * B[0] + np.sin(th)[:, None] * B[1]
    vecs /= np.linalg.norm(vecs, axis=1)[:, None]
    dets = vecs[:, 0] * vecs[:, 2] - vecs[:, 1] ** 2
    if abs(dets.max()) < 1e-4:
        return  # too close to the boundary for sampling to decide
    assert subspace_meets_cone(B, "Plus") == (dets.max() > 0)


def test_dmatrix_examples():
    assert np.allclose(dmatrix(np.eye(2)), np.eye(3))
    assert np.allclose(dmatrix([[0, 1], [-1, 0]]), [[0, 0, 1], [0, -1, 0], [1, 0, 0]])


def test_singular_transform_rejected():
    with pytest.raises(SingularTransform):
        GL2Transform(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_identity_transform_leaves_system_unchanged():
    s = nls_b()
    assert np.allclose(transform_system(s, np.eye(2)).A, s.A)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_dmatrix_inverse_and_composition(m):
    M = np.reshape(m, (2, 2))
    if abs(np.linalg.det(M)) < 0.1:
        return
    assert np.allclose(dmatrix_inverse(M) @ dmatrix(M), np.eye(3), atol=1e-9)
    N = np.array([[1.0, 0.5], [-0.3, 2.0]])
    assert np.allclose(dmatrix(N @ M), dmatrix(N) @ dmatrix(M), atol=1e-9)


def test_transform_system_is_a_change_of_unknowns():
    """The transformed nonlinearity is M applied to the original at the transformed point."""
    rng = np.random.default_rng(2)
    s = SystemRep(rng.normal(size=(3, 3)), rng.normal(size=3))
    M = np.array([[1.2, -0.4], [0.7, 0.9]])
    t = transform_system(s, M)
    u = rng.normal(size=2) + 1j * rng.normal(size=2)
    v = transform_field(M, u)
    F = nonlinearity_from_system(s, *u)
    G = nonlinearity_from_system(t, *v)
    assert np.allclose(G, M @ np.array(F), atol=1e-12)
