import numpy as np
import pytest

from nlslab.algebra import SystemRep
from nlslab.classify import (NoRealEigenpair, Undefined, bound_constant, classify, conserved_quantities,
                             evaluate_conserved, make_spec, sphere_extrema)
from nlslab.eigen import eigen_decompose, rank_of
from nlslab.families import nls_a, nls_b
from nlslab.templates import a13, a22

ZERO = SystemRep.from_matrix(np.zeros((3, 3)))


def _parallel(u, v, tol=1e-10):
    u, v = np.asarray(u, float), np.asarray(v, float)
    return np.linalg.norm(np.cross(u, v)) <= tol * np.linalg.norm(u) * np.linalg.norm(v)


def _in_span(v, basis, tol=1e-10):
    B = np.asarray(basis, float)
    r = v - B.T @ np.linalg.lstsq(B.T, v, rcond=None)[0]
    return np.linalg.norm(r) <= tol * np.linalg.norm(v)


# eigen structure

def test_nls_a_half_eigenspaces():
    es = eigen_decompose(nls_a(0.5))
    assert sorted(es.real_values()) == pytest.approx([0.5, 1.0])
    one = next(l for l in es.real_values() if abs(l - 1) < 1e-12)
    half = next(l for l in es.real_values() if abs(l - 0.5) < 1e-12)
    assert len(es.eigenspaces[one]) == 2 and es.multiplicity(one) == 2
    for v in ((2, 0, 1), (0, 1, 0)):
        assert _in_span(np.array(v, float), es.eigenspaces[one])
    assert _parallel(es.eigenspaces[half][0], (1, 0, 1))


def test_zero_matrix_structure():
    es = eigen_decompose(ZERO)
    assert es.rank == 0 and es.multiplicity(0.0) == 3


@pytest.mark.parametrize("s,rank", [(nls_b(), 3), (ZERO, 0),
                                    (SystemRep.from_matrix(a13(0.5, 1.0, 0.0, 0.0)), 2)])
def test_rank(s, rank):
    assert rank_of(s) == rank
    assert eigen_decompose(s).rank == rank


def test_complex_pair_reported():
    A = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]])
    es = eigen_decompose(SystemRep.from_matrix(A))
    assert es.complex_pair and es.real_values() == [2.0]


def test_jordan_block_has_one_dimensional_eigenspace():
    A = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 3.0]])
    es = eigen_decompose(SystemRep.from_matrix(A))
    assert es.multiplicity(1.0) == 2
    assert len(es.eigenspaces[1.0]) == 1 and len(es.generalized_eigenspaces[1.0]) == 2


def test_cluster_tol_must_be_positive():
    with pytest.raises(ValueError):
        eigen_decompose(nls_b(), cluster_tol=0)


# classification

def test_nls_a_zeta_two_satisfies_assumption1():
    cl = classify(nls_a(2.0))
    assert cl.assumption1 and cl.case_label == "Rank3"
    assert sorted(cl.a1_eigenvalues) == pytest.approx([-1.0, 1.0])
    assert _parallel(cl.witnesses["p2"], (1, 0, 1))
    # inside the two-dimensional W(1) any positive-cone vector is a valid witness
    assert _in_span(cl.witnesses["p1"], [(2, 0, 1), (0, 1, 0)])


def test_nls_b_satisfies_assumption2():
    cl = classify(nls_b())
    assert cl.assumption2 and not cl.assumption1
    assert cl.a2_eigenvalues == pytest.approx((2.0, 1.0, -1.0))


def test_zero_system_is_case1():
    cl = classify(ZERO)
    assert cl.case_label == "Case1" and cl.wngc


def test_template_a22_satisfies_assumption2():
    assert classify(SystemRep.from_matrix(a22(1, 0, 1, 2, 1))).assumption2


def test_near_boundary_flagged_borderline():
    # eigenvalue gap of 5e-8 on a norm-3 matrix sits inside 10x the cluster band
    s = SystemRep.from_matrix(np.diag([1.0, 1.0 + 5e-8, 3.0]))
    assert classify(s).borderline
    assert not classify(SystemRep.from_matrix(np.diag([1.0, 1.5, 3.0]))).borderline


# conserved quantities

def test_nls_a_conserved_quantity_matches_closed_form():
    z = 0.5
    rng = np.random.default_rng(0)
    spec = next(q for q in conserved_quantities(nls_a(z)) if q.coercive)
    p = rng.normal(size=2) + 1j * rng.normal(size=2)
    r1, r2 = abs(p[0]) ** 2, abs(p[1]) ** 2
    ref = (2 * r1 + r2) ** (z - 1) * (r1 + r2)
    # each quantity is defined up to positive scaling of a1, a2; compare ratios at two points
    q = rng.normal(size=2) + 1j * rng.normal(size=2)
    s1, s2 = abs(q[0]) ** 2, abs(q[1]) ** 2
    ref_q = (2 * s1 + s2) ** (z - 1) * (s1 + s2)
    assert evaluate_conserved(spec, p) / evaluate_conserved(spec, q) == pytest.approx(ref / ref_q, rel=1e-12)


def test_nls_b_h_quantities():
    base = np.array([2.0, 1.0, 2.0])
    h1 = make_spec(np.array([1.0, 0, 0]), base, 2.0, -1.0)
    h2 = make_spec(np.array([0, 0, 1.0]), base, 1.0, -1.0)
    assert evaluate_conserved(h1, (1, 0)) == pytest.approx(4.0)
    assert evaluate_conserved(h2, (1, 0)) == 0.0
    assert evaluate_conserved(h1, (0, 0)) == 0.0
    assert h1.exponent_pair == (1.0, 2.0)


def test_repeated_eigenvalue_gives_ratio_spec():
    specs = conserved_quantities(SystemRep.from_matrix(np.eye(3)))
    assert len(specs) == 1 and specs[0].exponent_pair == (1.0, -1.0)


def test_no_real_pair_raises():
    s = SystemRep.from_matrix([[0.0, -2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    with pytest.raises(NoRealEigenpair):
        conserved_quantities(s)


def test_negative_exponent_on_vanishing_base_is_undefined():
    spec = make_spec(np.array([1.0, 0, 0]), np.array([0, 0, 1.0]), 1.0, 2.0)
    with pytest.raises(Undefined):
        evaluate_conserved(spec, (1, 0))


def test_sphere_extrema_of_norm():
    lo, hi = sphere_extrema(lambda r1, r2, R: r1 + r2)
    assert lo == pytest.approx(1.0) and hi == pytest.approx(1.0)
    lo, hi = sphere_extrema(lambda r1, r2, R: R)
    assert lo == pytest.approx(-1.0) and hi == pytest.approx(1.0)


def test_bound_constant_for_nls_a():
    z = 0.5
    bc = bound_constant(nls_a(z))
    assert bc.kind == "coercive" and np.isfinite(bc.C) and bc.C >= 1
    # (2 rho1 + rho2)^(z-1) (rho1 + rho2) lies between 2^(z-1) |phi|^(2z) and |phi|^(2z)
    assert bc.C <= (2 ** (1 - z)) ** (1 / z) * (1 + 1e-9)


def test_bound_constant_for_nls_b_uses_pair():
    bc = bound_constant(nls_b())
    assert bc.kind == "pair" and 1 <= bc.C < np.inf
