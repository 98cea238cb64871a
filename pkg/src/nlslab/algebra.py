"""Coefficient/matrix correspondence, quadratic forms, cones and the GL2 calculus.

A cubic two-component system is identified by twelve real coefficients c1..c12
or, equivalently, by a pair (A, V) with A a real 3x3 matrix and V a real
3-vector.  Quadratic observables of a field pair (phi1, phi2) are

    rho1 = |phi1|^2, rho2 = |phi2|^2, R = 2 Re(conj(phi1) phi2), I = 2 Im(conj(phi1) phi2)

and the quadratic form Q(a) = a1 rho1 + a2 R + a3 rho2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

DEFAULT_TOL = 1e-9


def set_default_tol(tol: float) -> None:
    """Change the relative tolerance used by every sign decision."""
    global DEFAULT_TOL
    if not tol >= 0:
        raise ValueError("tolerance must be nonnegative")
    DEFAULT_TOL = float(tol)


def _tol(tol: float | None) -> float:
    return DEFAULT_TOL if tol is None else float(tol)


class NlslabError(Exception):
    """Base class for library errors."""


class SingularTransform(NlslabError):
    pass


class EmptyBasis(NlslabError):
    pass


class CoefficientVector(NamedTuple):
    c: tuple

    @classmethod
    def of(cls, values: Sequence[float]) -> "CoefficientVector":
        vals = tuple(float(v) for v in values)
        if len(vals) != 12:
            raise ValueError("expected 12 coefficients")
        if not all(np.isfinite(vals)):
            raise ValueError("coefficients must be finite")
        return cls(vals)

    def as_array(self) -> np.ndarray:
        return np.array(self.c, dtype=float)


@dataclass(frozen=True)
class SystemRep:
    A: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float).reshape(3, 3)
        V = np.array(self.V, dtype=float).reshape(3)
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(V))):
            raise ValueError("system entries must be finite")
        A.setflags(write=False)
        V.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "V", V)

    @classmethod
    def from_matrix(cls, A, V=None) -> "SystemRep":
        return cls(np.asarray(A, dtype=float), np.zeros(3) if V is None else np.asarray(V, dtype=float))

    def __eq__(self, other):
        if not isinstance(other, SystemRep):
            return NotImplemented
        return bool(np.array_equal(self.A, other.A) and np.array_equal(self.V, other.V))

    def __hash__(self):
        return hash((self.A.tobytes(), self.V.tobytes()))


class ConeClass(str, Enum):
    PLUS = "Plus"
    ZERO = "Zero"
    MINUS = "Minus"


@dataclass(frozen=True)
class ConeVector:
    a: tuple
    cone_class: ConeClass
    tol: float


class FieldPair(NamedTuple):
    phi1: complex
    phi2: complex


class QuadraticObservables(NamedTuple):
    rho1: float
    rho2: float
    R: float
    I: float


@dataclass(frozen=True)
class GL2Transform:
    M: np.ndarray
    detM: float = field(init=False)

    def __post_init__(self):
        M = np.array(self.M, dtype=float).reshape(2, 2)
        if not np.all(np.isfinite(M)):
            raise SingularTransform("transform entries must be finite")
        det = float(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])
        scale = float(np.max(np.abs(M))) ** 2
        if det == 0.0 or abs(det) <= 1e-14 * scale:
            raise SingularTransform(f"det M = {det!r}")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "detM", det)

    def __matmul__(self, other: "GL2Transform") -> "GL2Transform":
        return GL2Transform(self.M @ other.M)

    @classmethod
    def identity(cls) -> "GL2Transform":
        return cls(np.eye(2))


def as_transform(m) -> GL2Transform:
    return m if isinstance(m, GL2Transform) else GL2Transform(np.asarray(m, dtype=float))


# coefficient <-> (A, V)

def coefficients_to_system(c) -> SystemRep:
    c = np.asarray(c.c if isinstance(c, CoefficientVector) else c, dtype=float)
    c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12 = c
    A = np.array([
        [c2 - c3, -c1 + c8 - c9, -c7],
        [c5, -c3 + c11, -c9],
        [c6, -c4 + c5 + c12, -c10 + c11],
    ])
    V = np.array([c8 - 2 * c9, 0.5 * (-c2 + 2 * c3 - c10 + 2 * c11), c4 - 2 * c5])
    return SystemRep(A, V)


def system_to_coefficients(s: SystemRep) -> CoefficientVector:
    # Expansion of Re(conj(u1) u2) u1 = (|u1|^2 u2 + u1^2 conj(u2)) / 2 and
    # Re(conj(u1) u2) u2 = (u1 |u2|^2 + conj(u1) u2^2) / 2 into the monomial basis.
    a = s.A
    q1, q2, q3 = s.V
    h = 0.5 * np.trace(a)
    c = [
        -(a[0, 1] + a[1, 2]) + q1,
        2 * a[0, 0] - h + q2,
        a[0, 0] - h + q2,
        2 * a[1, 0] + q3,
        a[1, 0],
        a[2, 0],
        -a[0, 2],
        -2 * a[1, 2] + q1,
        -a[1, 2],
        -2 * a[2, 2] + h + q2,
        -a[2, 2] + h + q2,
        a[1, 0] + a[2, 1] + q3,
    ]
    return CoefficientVector.of(c)


# quadratic observables

def observables(p) -> QuadraticObservables:
    """rho1, rho2, R, I of a field pair; works elementwise on arrays."""
    phi1, phi2 = p
    z = np.conj(phi1) * phi2
    return QuadraticObservables(np.abs(phi1) ** 2, np.abs(phi2) ** 2, 2 * np.real(z), 2 * np.imag(z))


def quadratic_form(p, a) -> float:
    o = observables(p)
    return a[0] * o.rho1 + a[1] * o.R + a[2] * o.rho2


def smatrix(a) -> np.ndarray:
    return np.array([[a[0], a[1]], [a[1], a[2]]], dtype=float)


def form_bounds(a) -> tuple[float, float]:
    """(kappa_minus, kappa_plus): kappa_minus*|phi|^2 <= Q(a) <= kappa_plus*|phi|^2."""
    k = np.linalg.eigvalsh(smatrix(a))
    return float(k[0]), float(k[1])


def cone_det(a) -> float:
    return float(a[0] * a[2] - a[1] ** 2)


def cone_classify(a, tol: float | None = None) -> ConeVector:
    tol = _tol(tol)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    a = tuple(float(x) for x in a)
    d = cone_det(a)
    band = tol * float(np.dot(a, a))
    if abs(d) <= band:
        cls = ConeClass.ZERO
    elif d > 0:
        cls = ConeClass.PLUS
    else:
        cls = ConeClass.MINUS
    return ConeVector(a, cls, tol)


def _orthonormal(basis) -> np.ndarray:
    B = np.atleast_2d(np.asarray(basis, dtype=float))
    if B.size == 0:
        raise EmptyBasis("basis is empty")
    q, r = np.linalg.qr(B.T)
    if np.min(np.abs(np.diag(r))) <= 1e-12 * np.max(np.abs(np.diag(r))):
        raise ValueError("basis vectors are linearly dependent")
    return q.T


def _binary_form(p: np.ndarray, q: np.ndarray) -> tuple[float, float, float]:
    """Coefficients of g(s,t) = det S(s p + t q) = A s^2 + B s t + C t^2."""
    A = p[0] * p[2] - p[1] ** 2
    B = p[0] * q[2] + q[0] * p[2] - 2 * p[1] * q[1]
    C = q[0] * q[2] - q[1] ** 2
    return float(A), float(B), float(C)


@dataclass(frozen=True)
class ConeSearch:
    """Extremes of det S over unit vectors of a subspace, with witnesses."""
    max_value: float
    min_value: float
    argmax: np.ndarray
    root: np.ndarray | None


def cone_search(basis) -> ConeSearch:
    Q = _orthonormal(basis)
    if len(Q) == 1:
        v = Q[0]
        d = cone_det(v)
        return ConeSearch(d, d, v, v if d == 0 else None)
    if len(Q) == 3:
        # S(v) ranges over every symmetric matrix: max det on the unit sphere is 1/2 at (1,0,1)/sqrt2
        w = np.array([1.0, 0.0, 1.0]) / np.sqrt(2)
        return ConeSearch(0.5, -0.5, w, np.array([1.0, 0.0, 0.0]))
    p, q = Q
    A, B, C = _binary_form(p, q)
    # eigen-decomposition of [[A, B/2], [B/2, C]] in closed form
    m = 0.5 * (A + C)
    r = np.hypot(0.5 * (A - C), 0.5 * B)
    gmax, gmin = m + r, m - r
    if r == 0.0:
        s, t = 1.0, 0.0
    else:
        # eigenvector for gmax
        if A - C >= 0:
            s, t = A - C + 2 * r, B
        else:
            s, t = B, C - A + 2 * r
        n = np.hypot(s, t)
        s, t = s / n, t / n
    argmax = s * p + t * q
    root = None
    if gmax >= 0 >= gmin:
        # unit direction where g vanishes: mix the two principal directions
        if r == 0.0:
            root = p.copy()
        else:
            wmax = np.array([s, t])
            wmin = np.array([-t, s])
            ang = np.arctan2(np.sqrt(max(gmax, 0.0)), np.sqrt(max(-gmin, 0.0)))
            w = np.cos(ang) * wmax + np.sin(ang) * wmin
            root = w[0] * p + w[1] * q
    return ConeSearch(float(gmax), float(gmin), argmax, root)


def subspace_meets_cone(basis, which: str = "Plus", tol: float | None = None) -> bool:
    """Whether span(basis) meets the open cone (``"Plus"``) or the surface (``"Zero"``) nontrivially.

    Decisions are made on an orthonormal basis, so the band is ``tol`` in units of
    the squared norm, matching :func:`cone_classify`.
    """
    tol = _tol(tol)
    B = np.atleast_2d(np.asarray(basis, dtype=float))
    if B.size == 0:
        raise EmptyBasis("basis is empty")
    if len(B) >= 3:
        return True
    cs = cone_search(B)
    key = which.value if isinstance(which, ConeClass) else str(which)
    if key in ("Plus", "plus"):
        return cs.max_value > tol
    if key in ("Zero", "zero", "Zero-nontrivially"):
        return cs.max_value >= -tol and cs.min_value <= tol
    if key in ("Minus", "minus"):
        return cs.min_value < -tol
    raise ValueError(f"unknown cone {which!r}")


# GL2 calculus

def dmatrix(m) -> np.ndarray:
    t = as_transform(m)
    (a, b), (c, d) = t.M
    return np.array([
        [d * d, -2 * c * d, c * c],
        [-b * d, a * d + b * c, -a * c],
        [b * b, -2 * a * b, a * a],
    ]) / t.detM


def dmatrix_inverse(m) -> np.ndarray:
    t = as_transform(m)
    (a, b), (c, d) = t.M
    return np.array([
        [a * a, 2 * a * c, c * c],
        [a * b, a * d + b * c, c * d],
        [b * b, 2 * b * d, d * d],
    ]) / t.detM


def transform_system(s: SystemRep, m) -> SystemRep:
    """System satisfied by (v1, v2) = M (u1, u2)."""
    t = as_transform(m)
    D = dmatrix(t)
    return SystemRep(D @ s.A @ dmatrix_inverse(t) / t.detM, D @ s.V / t.detM)


def transform_field(m, p):
    M = as_transform(m).M
    phi1, phi2 = p
    return FieldPair(M[0, 0] * phi1 + M[0, 1] * phi2, M[1, 0] * phi1 + M[1, 1] * phi2)
