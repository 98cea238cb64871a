"""The five standard forms A11, A12, A13, A21, A22 and their parameter constraints."""
from __future__ import annotations

import numpy as np

FORM_PARAMS = {
    "A11": ("lambda1", "lambda2", "eta1", "eta2", "eta3"),
    "A12": ("lambda", "eta1", "eta2", "eta3", "eta4"),
    "A13": ("lambda1", "eta1", "eta2", "eta3"),
    "A21": ("lambda1", "lambda2", "eta"),
    "A22": ("lambda1", "lambda2", "eta1", "eta2", "eta3"),
}

# second row of each template
SECOND_ROW = {"A11": (0, 1, 0), "A12": (0, 1, 0), "A13": (0, 0, 0), "A21": (0, -1, 0), "A22": (0, -1, 0)}


def a11(lambda1, lambda2, eta1, eta2, eta3) -> np.ndarray:
    d = lambda1 - lambda2
    return np.array([
        [lambda1 - (1 + eta1) * d, eta2 * (1 - lambda1) + (1 + eta1) * (eta2 - eta3) * d, (1 + eta1) * d],
        [0.0, 1.0, 0.0],
        [-eta1 * d, eta3 * (1 - lambda1) + eta1 * (eta2 - eta3) * d, lambda1 + eta1 * d],
    ])


def a12(lam, eta1, eta2, eta3, eta4) -> np.ndarray:
    d = 1 - lam
    return np.array([
        [1 - (1 + eta1) * d, (1 + eta1) * (eta2 - eta3) * d + eta4, (1 + eta1) * d],
        [0.0, 1.0, 0.0],
        [-eta1 * d, eta1 * (eta2 - eta3) * d + eta4, 1 + eta1 * d],
    ])


def a13(lambda1, eta1, eta2, eta3) -> np.ndarray:
    d = lambda1 + 1
    return np.array([
        [lambda1 - (1 + eta1) * d, -eta2 * lambda1 + (1 + eta1) * (eta2 - eta3) * d, (1 + eta1) * d],
        [0.0, 0.0, 0.0],
        [-eta1 * d, -eta3 * lambda1 + eta1 * (eta2 - eta3) * d, lambda1 + eta1 * d],
    ])


def a21(lambda1, lambda2, eta) -> np.ndarray:
    return np.array([
        [lambda1, -eta * (lambda1 + 1), 0.0],
        [0.0, -1.0, 0.0],
        [0.0, -eta * (lambda2 + 1), lambda2],
    ])


def a22(lambda1, lambda2, eta1, eta2, eta3) -> np.ndarray:
    d = lambda1 - lambda2
    return np.array([
        [lambda1 - (1 + eta1) * d, (1 + eta1) * (eta2 + eta3) * d - (lambda1 + 1) * eta2, -(1 + eta1) * d],
        [0.0, -1.0, 0.0],
        [eta1 * d, -eta1 * (eta2 + eta3) * d - (lambda1 + 1) * eta3, eta1 * d + lambda1],
    ])


BUILDERS = {"A11": a11, "A12": a12, "A13": a13, "A21": a21, "A22": a22}


def template(tag: str, params: dict) -> np.ndarray:
    return BUILDERS[tag](*(params[k] for k in FORM_PARAMS[tag]))


def constraint_violations(tag: str, p: dict, tol: float = 1e-9) -> list[str]:
    """Human-readable list of violated template constraints (empty when all hold)."""
    bad = []

    def need(cond, msg):
        if not cond:
            bad.append(msg)

    if tag == "A11":
        need(p["lambda1"] > p["lambda2"], "lambda1 > lambda2")
        for k in ("lambda1", "lambda2"):
            need(abs(p[k]) > tol and abs(p[k] - 1) > tol, f"{k} not in {{0, 1}}")
        need(p["eta1"] > 0, "eta1 > 0")
    elif tag == "A12":
        need(abs(p["lambda"]) > tol and abs(p["lambda"] - 1) > tol, "lambda not in {0, 1}")
        need(p["eta1"] > 0, "eta1 > 0")
    elif tag == "A13":
        need(-1 < p["lambda1"] <= 1 + tol and abs(p["lambda1"]) > tol, "lambda1 in (-1, 1] minus {0}")
        need(p["eta1"] > 0, "eta1 > 0")
    elif tag == "A21":
        need(p["lambda1"] > p["lambda2"] > -1, "lambda1 > lambda2 > -1")
        need(abs(p["eta"]) > 1, "|eta| > 1")
    elif tag == "A22":
        need(p["lambda1"] > -1 and p["lambda2"] > -1, "lambda1, lambda2 > -1")
        need(abs(p["lambda1"] - p["lambda2"]) > tol, "lambda1 != lambda2")
        need(p["eta1"] >= 0, "eta1 >= 0")
        need(p["eta2"] * p["eta3"] > 1, "eta2 * eta3 > 1")
        if p["eta1"] > 0:
            need(p["lambda1"] > p["lambda2"], "lambda1 > lambda2 when eta1 > 0")
    else:
        raise KeyError(tag)
    return bad
