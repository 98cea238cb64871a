import numpy as np
import pytest

from helpers import random_params
from nlslab.algebra import SystemRep
from nlslab.classify import classify
from nlslab.templates import FORM_PARAMS, SECOND_ROW, constraint_violations, template


@pytest.mark.parametrize("tag", list(FORM_PARAMS))
def test_templates_have_their_second_row(tag):
    rng = np.random.default_rng(0)
    A = template(tag, random_params(tag, rng))
    assert tuple(A[1]) == SECOND_ROW[tag]


@pytest.mark.parametrize("tag", list(FORM_PARAMS))
def test_random_params_satisfy_constraints(tag):
    rng = np.random.default_rng(1)
    for _ in range(50):
        assert constraint_violations(tag, random_params(tag, rng)) == []


@pytest.mark.parametrize("tag", ["A11", "A12", "A13"])
def test_first_family_satisfies_assumption1(tag):
    rng = np.random.default_rng(2)
    for _ in range(20):
        assert classify(SystemRep.from_matrix(template(tag, random_params(tag, rng)))).assumption1


@pytest.mark.parametrize("tag", ["A21", "A22"])
def test_second_family_satisfies_assumption2(tag):
    rng = np.random.default_rng(3)
    for _ in range(20):
        cl = classify(SystemRep.from_matrix(template(tag, random_params(tag, rng))))
        assert cl.assumption2 and cl.a2_eigenvalues[2] == pytest.approx(-1.0)


def test_a11_eigenvalues():
    p = {"lambda1": 2.0, "lambda2": -0.5, "eta1": 1.0, "eta2": 0.3, "eta3": -0.2}
    assert sorted(np.linalg.eigvals(template("A11", p)).real) == pytest.approx([-0.5, 1.0, 2.0])


@pytest.mark.parametrize("tag,bad,msg", [
    ("A11", {"lambda1": 0.5, "lambda2": 1.0, "eta1": 1.0, "eta2": 0, "eta3": 0}, "lambda1 > lambda2"),
    ("A21", {"lambda1": 1.0, "lambda2": 0.0, "eta": 0.5}, "|eta| > 1"),
    ("A22", {"lambda1": 1.0, "lambda2": 0.0, "eta1": 1.0, "eta2": 1.0, "eta3": 0.5}, "eta2 * eta3 > 1"),
    ("A13", {"lambda1": 0.0, "eta1": 1.0, "eta2": 0, "eta3": 0}, "lambda1 in (-1, 1] minus {0}"),
])
def test_constraint_violations_named(tag, bad, msg):
    assert msg in constraint_violations(tag, bad)


def test_unknown_tag():
    with pytest.raises(KeyError):
        constraint_violations("A99", {})
