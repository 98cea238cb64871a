"""Eigen-analysis of the 3x3 matrix of a system."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import SystemRep

DEFAULT_CLUSTER_TOL = 1e-8
# eigenvalues of a defective block split like eps**(1/k); pairs this close with
# parallel eigenvectors are merged even if outside the cluster band
DEFECT_TOL = 1e-5
NULL_TOL = 1e-7


@dataclass(frozen=True)
class Eigenvalue:
    value: complex
    multiplicity: int

    @property
    def is_real(self) -> bool:
        return isinstance(self.value, float)


@dataclass(frozen=True)
class EigenStructure:
    eigenvalues: tuple
    eigenspaces: dict
    generalized_eigenspaces: dict
    rank: int
    cluster_tol: float
    norm: float
    complex_pair: bool
    borderline: bool
    min_gap: float

    def real_values(self) -> list[float]:
        return [e.value for e in self.eigenvalues if e.is_real]

    def multiplicity(self, lam: float) -> int:
        for e in self.eigenvalues:
            if e.is_real and e.value == lam:
                return e.multiplicity
        raise KeyError(lam)


def orient(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip sign so the first component of significant size is positive."""
    v = np.asarray(v, dtype=float)
    scale = np.max(np.abs(v))
    for x in v:
        if abs(x) > tol * scale:
            return v if x > 0 else -v
    return v


def _canonical_basis(vecs: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(rows), depending only on the subspace."""
    k = len(vecs)
    if k == 3:
        return np.eye(3)
    Q, _ = np.linalg.qr(vecs.T)
    P = Q @ Q.T
    out = []
    for _ in range(k):
        R = P - sum(np.outer(q, q) for q in out) if out else P
        j = int(np.argmax(np.diag(R)))
        w = R[:, j]
        out.append(orient(w / np.linalg.norm(w)))
    return np.array(out)


def _cluster(vals: np.ndarray, vecs: np.ndarray, band: float, defect: float) -> list[list[int]]:
    parent = list(range(len(vals)))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            gap = abs(vals[i] - vals[j])
            merge = gap <= band
            if not merge and gap <= defect:
                cos = abs(np.vdot(vecs[:, i], vecs[:, j]))
                merge = cos >= 1 - 1e-6
            if merge:
                parent[find(j)] = find(i)
    groups: dict[int, list[int]] = {}
    for i in range(len(vals)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def rank_of(s: SystemRep, tol: float = 1e-9) -> int:
    sv = np.linalg.svd(s.A, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def eigen_decompose(s: SystemRep, cluster_tol: float = DEFAULT_CLUSTER_TOL) -> EigenStructure:
    if not cluster_tol > 0:
        raise ValueError("cluster_tol must be positive")
    A = s.A
    nrm = float(np.linalg.norm(A, 2))
    if nrm == 0.0:
        E = np.eye(3)
        return EigenStructure((Eigenvalue(0.0, 3),), {0.0: E}, {0.0: E}, 0, cluster_tol, 0.0, False, False, np.inf)
    vals, vecs = np.linalg.eig(A)
    band = cluster_tol * nrm
    groups = _cluster(vals, vecs, band, DEFECT_TOL * nrm)
    merged = []
    for g in groups:
        v = complex(np.mean(vals[g]))
        merged.append((v, len(g)))
    borderline = False
    gaps = []
    for i in range(len(merged)):
        for j in range(i + 1, len(merged)):
            gap = abs(merged[i][0] - merged[j][0])
            if abs(merged[i][0] - np.conj(merged[j][0])) <= band and abs(merged[i][0].imag) > band:
                continue  # a conjugate pair is two eigenvalues by construction
            gaps.append(gap)
            if gap <= 10 * band:
                borderline = True
    eigvals = []
    complex_pair = False
    for v, mult in merged:
        if abs(v.imag) <= band:
            x = 0.0 if abs(v.real) <= band else float(v.real)
            eigvals.append(Eigenvalue(x, mult))
        elif v.imag > 0:
            complex_pair = True
            eigvals.append(Eigenvalue(complex(v), mult))
            eigvals.append(Eigenvalue(complex(v.conjugate()), mult))
    # a near-real pair flagged as complex sits on the boundary of the real case
    for e in eigvals:
        if not e.is_real and abs(e.value.imag) <= 10 * band:
            borderline = True
    eigvals.sort(key=lambda e: (not e.is_real, -np.real(e.value), -np.imag(e.value)))

    spaces: dict = {}
    gspaces: dict = {}
    E = np.eye(3)
    for e in eigvals:
        if not e.is_real:
            continue
        lam, mult = e.value, e.multiplicity
        B = A - lam * E
        sv = np.linalg.svd(B, compute_uv=False)
        dim = int(np.sum(sv <= NULL_TOL * nrm))
        dim = min(max(dim, 1), mult)
        _, _, vt = np.linalg.svd(B)
        spaces[lam] = _canonical_basis(vt[3 - dim:])
        if mult == dim:
            gspaces[lam] = spaces[lam]
        else:
            _, _, vt = np.linalg.svd(np.linalg.matrix_power(B, mult))
            gspaces[lam] = _canonical_basis(vt[3 - mult:])
    zero = next((e for e in eigvals if e.is_real and e.value == 0.0), None)
    rank = 3 if zero is None else 3 - len(spaces[0.0])
    return EigenStructure(tuple(eigvals), spaces, gspaces, rank, cluster_tol, nrm, complex_pair, borderline,
                          min(gaps) if gaps else np.inf)
