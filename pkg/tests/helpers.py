"""Random standard-form parameters and GL2 disguises shared by the tests."""
from __future__ import annotations

import numpy as np

from nlslab.algebra import SystemRep, transform_system
from nlslab.templates import template


def _pair(rng, lo, hi, gap=0.1):
    while True:
        a, b = sorted(rng.uniform(lo, hi, 2), reverse=True)
        if a - b >= gap:
            return float(a), float(b)


def random_params(tag: str, rng: np.random.Generator, eta1_zero: bool | None = None) -> dict:
    u = rng.uniform
    if tag == "A11":
        while True:
            l1, l2 = _pair(rng, -3, 3)
            if min(abs(l1), abs(l2), abs(l1 - 1), abs(l2 - 1)) >= 0.1:
                break
        e2 = u(-2, 2)
        e3 = u(-2, 2)
        if e2 * e3 > 0.9:  # keep W(1) out of the positive cone so the pair is unambiguous
            e3 = 0.5 / e2
        return {"lambda1": l1, "lambda2": l2, "eta1": u(0.1, 3), "eta2": e2, "eta3": e3}
    if tag == "A12":
        while True:
            lam = u(-3, 3)
            if min(abs(lam), abs(lam - 1)) >= 0.1:
                break
        return {"lambda": lam, "eta1": u(0.1, 3), "eta2": u(-2, 2), "eta3": 0.0,
                "eta4": u(0.2, 2) * rng.choice([-1, 1])}
    if tag == "A13":
        while True:
            lam = u(-0.9, 1.0)
            if abs(lam) >= 0.1:
                break
        return {"lambda1": lam, "eta1": u(0.1, 3), "eta2": u(-2, 2), "eta3": u(-2, 2)}
    if tag == "A21":
        l1, l2 = _pair(rng, -0.9, 3)
        return {"lambda1": l1, "lambda2": l2, "eta": u(1.1, 3) * rng.choice([-1, 1])}
    if tag == "A22":
        l1, l2 = _pair(rng, -0.9, 3)
        e2 = u(0.5, 3) * rng.choice([-1, 1])
        e3 = u(1.1, 3) / e2
        zero = rng.random() < 0.3 if eta1_zero is None else eta1_zero
        e1 = 0.0 if zero else u(0.1, 3)
        if zero and rng.random() < 0.5:
            l1, l2 = l2, l1
        return {"lambda1": l1, "lambda2": l2, "eta1": e1, "eta2": e2, "eta3": e3}
    raise KeyError(tag)


def random_gl2(rng: np.random.Generator, lo: float = 0.2, hi: float = 5.0) -> np.ndarray:
    while True:
        M = rng.normal(size=(2, 2))
        if lo <= abs(np.linalg.det(M)) <= hi:
            return M


def disguised(tag: str, rng: np.random.Generator, **kw):
    """(source params, disguised system, disguise matrix)."""
    p = random_params(tag, rng, **kw)
    M = random_gl2(rng)
    return p, transform_system(SystemRep.from_matrix(template(tag, p)), M), M


def unit_pair(rng: np.random.Generator):
    z = rng.normal(size=4)
    z /= np.linalg.norm(z)
    return complex(z[0], z[1]), complex(z[2], z[3])
