"""Two named one-parameter example systems used throughout the tests and reference configs."""
from __future__ import annotations

import numpy as np

from .algebra import SystemRep, coefficients_to_system


def nls_a_coefficients(zeta: float) -> np.ndarray:
    """c2 = zeta + 1, c6 = zeta, c7 = c10 = 2 zeta, c11 = 1, others zero."""
    c = np.zeros(12)
    c[1], c[5], c[6], c[9], c[10] = zeta + 1, zeta, 2 * zeta, 2 * zeta, 1.0
    return c


def nls_b_coefficients() -> np.ndarray:
    """c1 = 6, c2 = 3, c3 = 1, c10 = -1, c12 = -4, others zero."""
    c = np.zeros(12)
    c[[0, 1, 2, 9, 11]] = [6.0, 3.0, 1.0, -1.0, -4.0]
    return c


def nls_a(zeta: float) -> SystemRep:
    return coefficients_to_system(nls_a_coefficients(zeta))


def nls_b() -> SystemRep:
    return coefficients_to_system(nls_b_coefficients())


FAMILIES = {"nls_a": nls_a, "nls_b": nls_b}
