"""Classification by rank and cone conditions, the two eigen assumptions, and conserved quantities."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import minimize

from . import algebra
from .algebra import NlslabError, SystemRep, cone_search, form_bounds, quadratic_form, subspace_meets_cone
from .eigen import EigenStructure, eigen_decompose, orient


class NoRealEigenpair(NlslabError):
    pass


class Undefined(NlslabError):
    pass


@dataclass(frozen=True)
class Classification:
    rank: int
    case_label: str
    wngc: bool
    assumption1: bool
    assumption2: bool
    witnesses: dict
    borderline: bool
    eigen: EigenStructure
    # (lambda1, lambda2) for assumption 1; (lambda1, lambda2, lambda3) for assumption 2
    a1_eigenvalues: tuple | None = None
    a2_eigenvalues: tuple | None = None
    notes: tuple = ()


@dataclass(frozen=True)
class ConservedQuantitySpec:
    a1: np.ndarray
    a2: np.ndarray
    lambda1: float
    lambda2: float
    exponent_pair: tuple
    coercive: bool = False

    @property
    def degree(self) -> float:
        """Homogeneity degree in |phi1|^2 + |phi2|^2."""
        return float(self.exponent_pair[0] + self.exponent_pair[1])


def plus_witness(basis) -> np.ndarray:
    """Vector of span(basis) maximizing det S on the unit sphere, first entry positive."""
    return orient(cone_search(basis).argmax)


def _meets(basis, which, tol) -> bool:
    return subspace_meets_cone(basis, which, tol)


def _near_band(basis, tol) -> bool:
    """Cone decision for span(basis) lies within 10x of the tolerance band."""
    if len(np.atleast_2d(basis)) >= 3:
        return False
    cs = cone_search(basis)
    return any(tol < abs(v) <= 10 * tol for v in (cs.max_value, cs.min_value))


def classify(s: SystemRep, tol: float | None = None, cluster_tol: float | None = None) -> Classification:
    tol = algebra._tol(tol)
    es = eigen_decompose(s) if cluster_tol is None else eigen_decompose(s, cluster_tol)
    borderline = es.borderline
    notes = []
    witnesses: dict = {}
    rank = es.rank
    ker = es.eigenspaces.get(0.0)

    wngc = False
    if ker is not None and rank < 3:
        wngc = _meets(ker, "Plus", tol)
        if wngc:
            witnesses["kernel"] = plus_witness(ker)
        if len(ker) < 3 and _near_band(ker, tol):
            borderline = True
            notes.append("kernel cone decision within 10x tolerance band")

    if rank == 0:
        label = "Case1"
    elif rank == 1:
        if wngc:
            label = "Case2"
        elif _meets(ker, "Zero", tol):
            label = "Case3"
        else:
            label = "Case4"
    elif rank == 2:
        if wngc:
            label = "Case5"
        elif _meets(ker, "Zero", tol):
            label = "Case6"
        else:
            label = "Case7"
    else:
        label = "Rank3"

    # Assumption 1: two distinct nonzero real eigenvalues whose eigenspaces meet the positive cone
    plus_vals = [lam for lam in es.real_values() if lam != 0.0 and _meets(es.eigenspaces[lam], "Plus", tol)]
    for lam in es.real_values():
        if _near_band(es.eigenspaces[lam], tol):
            borderline = True
            notes.append(f"cone decision for eigenvalue {lam:.6g} within 10x tolerance band")
    assumption1 = len(plus_vals) >= 2
    a1_vals = None
    if assumption1:
        # with three candidates, keep the widest-separated pair
        l1, l2 = max(combinations(sorted(plus_vals, reverse=True), 2), key=lambda p: p[0] - p[1])
        a1_vals = (l1, l2)
        witnesses["p1"] = plus_witness(es.eigenspaces[l1])
        witnesses["p2"] = plus_witness(es.eigenspaces[l2])

    assumption2 = False
    a2_vals = None
    simple_real = [e for e in es.eigenvalues if e.is_real and e.multiplicity == 1]
    if len(simple_real) == 3:
        vals = [e.value for e in simple_real]
        meets = [_meets(es.eigenspaces[v], "Plus", tol) for v in vals]
        if sum(meets) == 1:
            l3 = vals[meets.index(True)]
            l1, l2 = sorted((v for v in vals if v != l3), reverse=True)
            if l3 != 0.0 and l1 / l3 < 1 and l2 / l3 < 1:
                if max(l1 / l3, l2 / l3) > 1 - 10 * tol:
                    borderline = True
                    notes.append("eigenvalue ratio within tolerance of 1")
                p1 = es.eigenspaces[l1][0]
                p2 = es.eigenspaces[l2][0]
                if _meets(np.array([p1, p2]), "Plus", tol):
                    assumption2 = True
                    a2_vals = (l1, l2, l3)
                    v = cone_search(np.array([p1, p2])).argmax
                    coef = np.linalg.lstsq(np.array([p1, p2]).T, v, rcond=None)[0]
                    if coef[0] + coef[1] < 0 or (v[0] < 0):
                        coef = -coef
                    witnesses["p1bar"] = coef[0] * p1
                    witnesses["p2bar"] = coef[1] * p2
                    witnesses["p3"] = plus_witness(es.eigenspaces[l3])

    return Classification(rank, label, wngc, assumption1, assumption2, witnesses, borderline, es,
                          a1_vals, a2_vals, tuple(notes))


# conserved quantities

def _representative(es: EigenStructure, lam: float, tol: float) -> np.ndarray:
    W = es.eigenspaces[lam]
    if _meets(W, "Plus", tol):
        return plus_witness(W)
    return orient(W[0])


def make_spec(a1, a2, lambda1: float, lambda2: float) -> ConservedQuantitySpec:
    """Spec |Q(a1)|^lambda2 |Q(a2)|^-lambda1, exponents flipped so their sum is nonnegative."""
    e1, e2 = float(lambda2), float(-lambda1)
    if e1 + e2 < 0:
        e1, e2 = -e1, -e2
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    coercive = (lambda1 != lambda2 and algebra.cone_classify(a1).cone_class == algebra.ConeClass.PLUS
                and algebra.cone_classify(a2).cone_class == algebra.ConeClass.PLUS)
    if coercive:
        a1, a2 = orient(a1), orient(a2)
    return ConservedQuantitySpec(a1, a2, float(lambda1), float(lambda2), (e1 + 0.0, e2 + 0.0), coercive)


def conserved_quantities(s: SystemRep, tol: float | None = None) -> list[ConservedQuantitySpec]:
    tol = algebra._tol(tol)
    es = eigen_decompose(s)
    real = es.real_values()
    specs = []
    for l1, l2 in combinations(sorted(real, reverse=True), 2):
        specs.append(make_spec(_representative(es, l1, tol), _representative(es, l2, tol), l1, l2))
    for lam in sorted(real, reverse=True):
        W = es.eigenspaces[lam]
        if len(W) >= 2:
            a1 = _representative(es, lam, tol)
            # second vector: orthogonal complement of a1 inside W
            rest = W - np.outer(W @ a1, a1)
            k = int(np.argmax(np.linalg.norm(rest, axis=1)))
            a2 = orient(rest[k] / np.linalg.norm(rest[k]))
            spec = ConservedQuantitySpec(a1, a2, lam, lam, (1.0, -1.0), False)
            specs.append(spec)
    if not specs:
        raise NoRealEigenpair("fewer than two real eigenvalues and no repeated eigenspace")
    return specs


def evaluate_conserved(spec: ConservedQuantitySpec, p):
    q1 = np.abs(quadratic_form(p, spec.a1))
    q2 = np.abs(quadratic_form(p, spec.a2))
    e1, e2 = spec.exponent_pair
    if (e1 < 0 and np.any(q1 == 0)) or (e2 < 0 and np.any(q2 == 0)):
        raise Undefined("zero base with negative exponent")
    with np.errstate(divide="ignore"):
        return np.power(q1, e1) * np.power(q2, e2)


def format_spec(spec: ConservedQuantitySpec, digits: int = 6) -> str:
    """Readable formula, e.g. |2.0 rho1 + 1.0 rho2|^(1) * |rho1 + rho2|^(1)."""
    def form(a):
        terms = []
        for coef, name in zip(a, ("rho1", "R", "rho2")):
            if abs(coef) > 1e-14:
                terms.append(f"{coef:.{digits}g}*{name}")
        return " + ".join(terms) if terms else "0"
    e1, e2 = spec.exponent_pair
    return f"|{form(spec.a1)}|^({e1:.{digits}g}) * |{form(spec.a2)}|^({e2:.{digits}g})"


# global bound constants

@dataclass(frozen=True)
class BoundConstant:
    """sup |phi|^2 / inf |phi|^2 <= C along any trajectory."""
    C: float
    kind: str
    specs: tuple = field(default_factory=tuple)
    lo: float = float("nan")
    hi: float = float("nan")


def coercive_constant(spec: ConservedQuantitySpec) -> BoundConstant:
    if not spec.coercive:
        raise ValueError("spec is not coercive")
    lo, hi = 1.0, 1.0
    for a, e in zip((spec.a1, spec.a2), spec.exponent_pair):
        km, kp = form_bounds(a)
        if e >= 0:
            lo *= km ** e
            hi *= kp ** e
        else:
            lo *= kp ** e
            hi *= km ** e
    E = spec.degree
    return BoundConstant((hi / lo) ** (1.0 / E), "coercive", (spec,), lo, hi)


def sphere_extrema(fn, n_grid: int = 801) -> tuple[float, float]:
    """Min and max of fn(rho1, rho2, R) over |phi1|^2 + |phi2|^2 = 1.

    The unit sphere projects onto x = rho1 in [0, 1], R = 2 sqrt(x(1-x)) cos(b).
    """
    def point(z):
        x = np.clip(z[0], 0.0, 1.0)
        return x, 1.0 - x, 2.0 * np.sqrt(x * (1.0 - x)) * np.cos(z[1])

    xs = np.linspace(0.0, 1.0, n_grid)
    bs = np.linspace(0.0, np.pi, n_grid)
    X, B = np.meshgrid(xs, bs, indexing="ij")
    vals = fn(*point((X, B)))
    lo, hi = float(vals.min()), float(vals.max())
    for sign in (1.0, -1.0):
        for k in np.argsort(sign * vals, axis=None)[:5]:
            i, j = np.unravel_index(k, vals.shape)
            res = minimize(lambda z: sign * fn(*point(z)), np.array([X[i, j], B[i, j]]), method="L-BFGS-B",
                           bounds=[(0.0, 1.0), (0.0, np.pi)], options={"ftol": 1e-15, "gtol": 1e-12})
            v = float(fn(*point(res.x)))
            lo, hi = min(lo, v), max(hi, v)
    return lo, hi


def pair_functional(cl: Classification):
    """G = H1 + H2 with H_j = |Q(p_j)|^theta_j Q(p3)^(1-theta_j), homogeneous of degree one."""
    l1, l2, l3 = cl.a2_eigenvalues
    p1, p2, p3 = cl.witnesses["p1bar"], cl.witnesses["p2bar"], cl.witnesses["p3"]
    th = (l3 / (l3 - l1), l3 / (l3 - l2))

    def G_obs(rho1, rho2, R):
        def Q(a):
            return a[0] * rho1 + a[1] * R + a[2] * rho2
        q3 = Q(p3)
        return sum(np.abs(Q(p)) ** t * q3 ** (1 - t) for p, t in zip((p1, p2), th))

    return G_obs, th


def bound_constant(s: SystemRep, cl: Classification | None = None) -> BoundConstant:
    """Constant C with sup/inf of |phi1|^2+|phi2|^2 <= C, from the conserved quantities."""
    cl = classify(s) if cl is None else cl
    if cl.wngc:
        a = cl.witnesses["kernel"]
        km, kp = form_bounds(a)
        return BoundConstant(kp / km, "kernel", (), km, kp)
    if cl.assumption1:
        l1, l2 = cl.a1_eigenvalues
        spec = make_spec(cl.witnesses["p1"], cl.witnesses["p2"], l1, l2)
        return coercive_constant(spec)
    if cl.assumption2:
        G, th = pair_functional(cl)
        lo, hi = sphere_extrema(G)
        l1, l2, l3 = cl.a2_eigenvalues
        specs = (make_spec(cl.witnesses["p1bar"], cl.witnesses["p3"], l1, l3),
                 make_spec(cl.witnesses["p2bar"], cl.witnesses["p3"], l2, l3))
        return BoundConstant(hi / lo, "pair", specs, lo, hi)
    raise NlslabError("no coercive conserved structure")
