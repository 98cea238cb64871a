"""Reduction of a system to one of the standard forms by a GL2 change of unknowns."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra
from .algebra import (ConeClass, GL2Transform, NlslabError, SystemRep, cone_classify, dmatrix,
                      transform_system)
from .classify import Classification, classify
from .eigen import orient
from .templates import FORM_PARAMS, constraint_violations, template

FLIP = np.array([[1.0, 0.0], [0.0, -1.0]])
SWAP = np.array([[0.0, 1.0], [-1.0, 0.0]])


class AssumptionNotSatisfied(NlslabError):
    pass


class DegenerateWitness(NlslabError):
    pass


class NumericallyDegenerate(NlslabError):
    pass


@dataclass(frozen=True)
class NormalizationResult:
    M_total: GL2Transform
    steps: tuple  # ((name, GL2Transform), ...) in application order
    form_tag: str
    params: dict
    A_standard: SystemRep
    residual: float
    violations: tuple = ()

    def as_dict(self) -> dict:
        return {
            "form": self.form_tag,
            "params": {k: float(self.params[k]) for k in FORM_PARAMS[self.form_tag]},
            "M_total": self.M_total.M.tolist(),
            "steps": [{"name": n, "M": t.M.tolist()} for n, t in self.steps],
            "A_standard": self.A_standard.A.tolist(),
            "V_standard": self.A_standard.V.tolist(),
            "residual": self.residual,
        }


class _Pipeline:
    """Composes transforms and transports eigenvectors and eigenvalues along."""

    def __init__(self):
        self.total = np.eye(2)
        self.steps: list = []

    def apply(self, name: str, m) -> GL2Transform:
        t = GL2Transform(np.asarray(m, dtype=float))
        self.steps.append((name, t))
        self.total = t.M @ self.total
        return t

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.total))

    def vec(self, a) -> np.ndarray:
        return dmatrix(self.total) @ np.asarray(a, dtype=float)

    def val(self, lam: float) -> float:
        return lam / self.det


def _row_from_zero(v, tol):
    """Row (a, b) of M1 with D(M1) v proportional to a coordinate vector, for v in the zero cone.

    Returns None when the leading entry vanishes (the angle 3 pi / 2 branch).
    """
    v = np.asarray(v, dtype=float)
    if v[0] + v[2] < 0:
        v = -v
    v = 2 * v / (v[0] + v[2])
    if v[0] < tol:
        return None
    r = np.sqrt(v[0])
    return np.array([r, v[1] / r])


def _finish(s: SystemRep, pipe: _Pipeline, tag: str, params: dict) -> NormalizationResult:
    A_std = transform_system(s, pipe.total)
    T = template(tag, params)
    residual = float(np.max(np.abs(A_std.A - T)) / max(1.0, float(np.max(np.abs(T)))))
    bad = tuple(constraint_violations(tag, params))
    return NormalizationResult(GL2Transform(pipe.total), tuple(pipe.steps), tag, params, A_std, residual, bad)


def _rotate_and_order(pipe: _Pipeline, q0) -> float:
    """Rotate so D q is diagonal, then swap if needed so q ~ (1, 0, k) with 0 < k < 1. Returns k."""
    q = pipe.vec(q0)
    theta = 0.0 if q[1] == 0.0 else 0.5 * np.arctan2(-2 * q[1], q[0] - q[2])
    c, sn = np.cos(theta), np.sin(theta)
    pipe.apply("rotate", [[c, -sn], [sn, c]])
    q = pipe.vec(q0)
    if abs(q[0]) < abs(q[2]):
        pipe.apply("swap", SWAP)
        q = pipe.vec(q0)
    return float(q[2] / q[0])


def normalize_assumption1(s: SystemRep, tol: float | None = None,
                          cl: Classification | None = None) -> NormalizationResult:
    """Reduce a system satisfying the first eigen assumption to A11, A12 or A13."""
    tol = algebra._tol(tol)
    cl = classify(s, tol) if cl is None else cl
    if not cl.assumption1:
        raise AssumptionNotSatisfied("no two distinct nonzero eigenvalues with eigenspaces meeting the positive cone")
    es = cl.eigen
    vals = es.real_values()
    l1, l2 = cl.a1_eigenvalues
    others = [v for v in vals if v not in (l1, l2)]
    pipe = _Pipeline()

    if len(vals) == 2:
        # a repeated eigenvalue: it plays the role of 1, the other the role of lambda
        rep = l1 if es.multiplicity(l1) == 2 else l2
        other = l2 if rep == l1 else l1
        if es.multiplicity(rep) != 2:
            raise AssumptionNotSatisfied("repeated eigenvalue expected")
        tag, first, second, scale_by = "A12", rep, other, rep
    elif len(vals) == 3 and others[0] != 0.0:
        tag, first, second, scale_by = "A11", l1, l2, others[0]
    elif len(vals) == 3:
        # zero third eigenvalue: the pair member of largest modulus becomes -1
        a, b = sorted((l1, l2), key=lambda v: (-abs(v), v))
        if abs(abs(l1) - abs(l2)) <= es.cluster_tol * es.norm:
            a, b = (l2, l1) if l2 < 0 else (l1, l2)
        tag, first, second, scale_by = "A13", b, a, a
    else:
        raise AssumptionNotSatisfied("real eigenvalues are not distinct enough to normalize")

    witness = {l1: cl.witnesses["p1"], l2: cl.witnesses["p2"]}
    p0, q0 = witness[first], witness[second]

    # sign: positive third eigenvalue (A11, A12) or negative lambda2 (A13)
    if (tag != "A13" and scale_by < 0) or (tag == "A13" and scale_by > 0):
        pipe.apply("flip", FLIP)
    if tag == "A11":
        # after a flip the larger transported eigenvalue must belong to (1, 0, 1)
        if pipe.val(first) < pipe.val(second):
            first, second = second, first
            p0, q0 = q0, p0

    p = orient(pipe.vec(p0))
    if p[0] <= 0 or p[0] * p[2] - p[1] ** 2 <= 0:
        raise DegenerateWitness("positive-cone witness lost under transport")
    pipe.apply("M1", [[np.sqrt(p[0]), p[1] / np.sqrt(p[0])],
                      [0.0, np.sqrt((p[0] * p[2] - p[1] ** 2) / p[0])]])
    pipe.apply("scale", np.sqrt(abs(pipe.val(scale_by))) * np.eye(2))
    k = _rotate_and_order(pipe, q0)
    if not 0 < k < 1:
        raise NumericallyDegenerate(f"ratio {k!r} outside (0, 1)")
    eta1 = k / (1 - k)

    A = transform_system(s, pipe.total).A
    a12, a32 = A[0, 1], A[2, 1]
    if tag == "A11":
        la, lb = pipe.val(first), pipe.val(second)
        d = la - lb
        # a12 = e2 (1 - la) + (1 + eta1)(e2 - e3) d ; a32 = e3 (1 - la) + eta1 (e2 - e3) d
        L = np.array([[(1 - la) + (1 + eta1) * d, -(1 + eta1) * d],
                      [eta1 * d, (1 - la) - eta1 * d]])
        e2, e3 = np.linalg.solve(L, [a12, a32])
        params = {"lambda1": la, "lambda2": lb, "eta1": eta1, "eta2": float(e2), "eta3": float(e3)}
    elif tag == "A13":
        la = pipe.val(first)
        d = la + 1
        L = np.array([[-la + (1 + eta1) * d, -(1 + eta1) * d],
                      [eta1 * d, -la - eta1 * d]])
        e2, e3 = np.linalg.solve(L, [a12, a32])
        params = {"lambda1": la, "eta1": eta1, "eta2": float(e2), "eta3": float(e3)}
    else:
        lam = pipe.val(second)
        # only eta2 - eta3 and eta4 are determined; report eta3 = 0
        dd = (a12 - a32) / (1 - lam)
        eta4 = a32 - eta1 * dd * (1 - lam)
        params = {"lambda": lam, "eta1": eta1, "eta2": float(dd), "eta3": 0.0, "eta4": float(eta4)}
    return _finish(s, pipe, tag, params)


def _a22_params(A, l1, l2, eta1):
    d = l1 - l2
    # a12 = (1 + eta1)(e2 + e3) d - (l1 + 1) e2 ; a32 = -eta1 (e2 + e3) d - (l1 + 1) e3
    L = np.array([[(1 + eta1) * d - (l1 + 1), (1 + eta1) * d],
                  [-eta1 * d, -eta1 * d - (l1 + 1)]])
    e2, e3 = np.linalg.solve(L, [A[0, 1], A[2, 1]])
    return {"lambda1": l1, "lambda2": l2, "eta1": float(eta1), "eta2": float(e2), "eta3": float(e3)}


def normalize_assumption2(s: SystemRep, tol: float | None = None,
                          cl: Classification | None = None) -> NormalizationResult:
    """Reduce a system satisfying the second eigen assumption to A21 or A22."""
    tol = algebra._tol(tol)
    cl = classify(s, tol) if cl is None else cl
    if not cl.assumption2:
        raise AssumptionNotSatisfied("second eigen assumption does not hold")
    es = cl.eigen
    l1, l2, l3 = cl.a2_eigenvalues
    e1, e2, e3 = (es.eigenspaces[v][0] for v in (l1, l2, l3))
    pipe = _Pipeline()
    if l3 > 0:
        pipe.apply("flip", FLIP)
    # after the flip keep lambda1 > lambda2
    if pipe.val(l1) < pipe.val(l2):
        l1, l2, e1, e2 = l2, l1, e2, e1
    v1, v2 = pipe.vec(e1), pipe.vec(e2)
    c1 = cone_classify(v1 / np.linalg.norm(v1), tol).cone_class
    c2 = cone_classify(v2 / np.linalg.norm(v2), tol).cone_class
    if ConeClass.PLUS in (c1, c2):
        raise NumericallyDegenerate("eigenvector of the pair lies in the positive cone")

    if c1 == ConeClass.ZERO and c2 == ConeClass.ZERO:
        r1, r2 = _row_from_zero(v1, tol), _row_from_zero(v2, tol)
        if r1 is None and r2 is None:
            raise DegenerateWitness("both zero-cone eigenvectors at the same angle")
        if r1 is None:
            M1 = np.array([[0.0, -np.sqrt(2.0)], r2])
        elif r2 is None:
            M1 = np.array([r1, [0.0, np.sqrt(2.0)]])
        else:
            M1 = np.array([r1, r2])
            if np.linalg.det(M1) < 0:
                M1[0] = -M1[0]
        pipe.apply("M1", M1)
        w = pipe.vec(e3)
        w = w / w[1]
        if w[0] * w[2] <= 0:
            raise NumericallyDegenerate("third eigenvector does not have eta2 * eta3 > 0")
        r = (w[0] / w[2]) ** 0.25
        pipe.apply("M2", np.sqrt(abs(pipe.val(l3))) * np.diag([r, 1 / r]))
        A = transform_system(s, pipe.total).A
        la, lb = pipe.val(l1), pipe.val(l2)
        g = np.array([-(la + 1), -(lb + 1)])
        eta = float(g @ np.array([A[0, 1], A[2, 1]]) / (g @ g))
        return _finish(s, pipe, "A21", {"lambda1": la, "lambda2": lb, "eta": eta})

    if ConeClass.ZERO in (c1, c2):
        # the zero-cone eigenvalue takes the lambda2 slot and goes to (1, 0, 0)
        if c1 == ConeClass.ZERO:
            l1, l2, e1, e2 = l2, l1, e2, e1
        row = _row_from_zero(pipe.vec(e2), tol)
        if row is None:
            M1 = np.array([[0.0, np.sqrt(2.0)], [-1 / np.sqrt(2.0), 0.0]])
        else:
            M1 = np.array([row, [0.0, 1 / row[0]]])
        pipe.apply("M1", M1)
        w = pipe.vec(e1)
        if abs(w[2]) <= tol * np.linalg.norm(w):
            raise DegenerateWitness("negative-cone eigenvector has vanishing third component")
        a, b = w[0] / w[2], w[1] / w[2]
        r = np.sqrt(b * b - a)
        kappa = np.sqrt(abs(pipe.val(l3)) / r)
        pipe.apply("M2", kappa * np.array([[r, 0.0], [b, 1.0]]))
        A = transform_system(s, pipe.total).A
        return _finish(s, pipe, "A22", _a22_params(A, pipe.val(l1), pipe.val(l2), 0.0))

    # both eigenvectors in the negative cone
    p = pipe.vec(e1)
    if abs(p[0]) > tol * np.linalg.norm(p):
        M1 = np.array([[p[0], p[1]], [0.0, np.sqrt(p[1] ** 2 - p[0] * p[2])]])
    elif abs(p[2]) > tol * np.linalg.norm(p):
        M1 = np.array([[p[1], 0.0], [p[1], p[2]]])
    else:
        M1 = np.array([[1.0, 1.0], [-1.0, 1.0]])
    if np.linalg.det(M1) < 0:
        M1[0] = -M1[0]
    pipe.apply("M1", M1)
    q = pipe.vec(e2)
    if abs(q[0] + q[2]) - 2 * abs(q[1]) < tol * np.linalg.norm(q):
        raise NumericallyDegenerate("hyperbolic rotation angle is unbounded")
    tau = 0.5 * np.arctanh(2 * q[1] / (q[0] + q[2]))
    pipe.apply("M2", [[np.cosh(tau), np.sinh(tau)], [np.sinh(tau), np.cosh(tau)]])
    q = pipe.vec(e2)
    k = -q[2] / q[0]
    if k > 1:
        pipe.apply("swap", SWAP)
        q = pipe.vec(e2)
        k = -q[2] / q[0]
    if not 0 < k < 1:
        raise NumericallyDegenerate(f"ratio {k!r} outside (0, 1)")
    pipe.apply("scale", np.sqrt(abs(pipe.val(l3))) * np.eye(2))
    A = transform_system(s, pipe.total).A
    return _finish(s, pipe, "A22", _a22_params(A, pipe.val(l1), pipe.val(l2), k / (1 - k)))


def normalize(s: SystemRep, tol: float | None = None) -> NormalizationResult:
    """Normalize under whichever eigen assumption holds (the first takes precedence)."""
    cl = classify(s, tol)
    if cl.assumption1:
        return normalize_assumption1(s, tol, cl)
    if cl.assumption2:
        return normalize_assumption2(s, tol, cl)
    raise AssumptionNotSatisfied("neither eigen assumption holds")
