"""The reduced ODE i phi' = F(phi): right-hand side, integration, and diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import FieldPair, NlslabError, SystemRep, observables, quadratic_form, system_to_coefficients
from .classify import ConservedQuantitySpec, Undefined, conserved_quantities, evaluate_conserved, format_spec
from .integrator import solve_batch, single_step


class StepSizeUnderflow(NlslabError):
    def __init__(self, t_fail: float, trajectory: "OdeTrajectory | None" = None):
        super().__init__(f"step size underflow at t = {t_fail:.6g}")
        self.t_fail = t_fail
        self.trajectory = trajectory


class ZeroTrajectory(NlslabError):
    pass


def monomials(u1, u2):
    """The six cubic monomials |u1|^2u1, |u1|^2u2, u1^2 conj(u2), u1|u2|^2, conj(u1)u2^2, |u2|^2u2."""
    r1 = u1.real ** 2 + u1.imag ** 2
    r2 = u2.real ** 2 + u2.imag ** 2
    return (r1 * u1, r1 * u2, u1 * u1 * np.conj(u2), u1 * r2, np.conj(u1) * u2 * u2, r2 * u2)


def nonlinearity(c, u1, u2):
    """(F1, F2) from the twelve coefficients in the monomial basis."""
    c = np.asarray(c, dtype=float)
    m = monomials(u1, u2)
    F1 = sum(c[..., k] * m[k] for k in range(6))
    F2 = sum(c[..., 6 + k] * m[k] for k in range(6))
    return F1, F2


def nonlinearity_from_system(s: SystemRep, u1, u2):
    """(F1, F2) assembled directly from the matrix and the potential."""
    a = s.A
    q1, q2, q3 = s.V
    tr = np.trace(a)
    r1 = np.abs(u1) ** 2
    r2 = np.abs(u2) ** 2
    re = np.real(np.conj(u1) * u2)
    pot = q1 * r1 + 2 * q2 * re + q3 * r2
    mix1 = 2 * r1 * u2 + u1 * u1 * np.conj(u2)
    mix2 = 2 * u1 * r2 + np.conj(u1) * u2 * u2
    F1 = (-(a[0, 1] + a[1, 2]) * r1 * u1 + a[0, 0] * mix1 + a[1, 0] * mix2 + a[2, 0] * r2 * u2
          - tr * re * u1 + pot * u1)
    F2 = (-a[0, 2] * r1 * u1 - a[1, 2] * mix1 - a[2, 2] * mix2 + (a[1, 0] + a[2, 1]) * r2 * u2
          + tr * re * u2 + pot * u2)
    return F1, F2


def ode_rhs(s: SystemRep, p) -> FieldPair:
    c = system_to_coefficients(s).as_array()
    F1, F2 = nonlinearity(c, np.asarray(p[0], dtype=complex), np.asarray(p[1], dtype=complex))
    return FieldPair(-1j * F1, -1j * F2)


def batch_rhs(coeffs: np.ndarray, scale=None):
    """Vectorized right-hand side for rows (phi1, phi2) with per-row coefficients.

    coeffs has shape (12,) or (batch, 12); scale optionally multiplies F by a function of t.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    shared = coeffs.ndim == 1
    # -i F = monomials @ W with W[k, j] = -i c[6 j + k]
    W = -1j * coeffs.reshape(coeffs.shape[:-1] + (2, 6)).swapaxes(-1, -2)

    def f(t, y, idx):
        m = np.stack(monomials(y[:, 0], y[:, 1]), axis=1)
        out = m @ W if shared else np.einsum("bk,bkj->bj", m, W[idx])
        if scale is not None:
            out *= np.asarray(scale(t))[..., None]
        return out

    return f


@dataclass
class OdeTrajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), 2) complex
    diagnostics: dict = field(default_factory=dict)
    integrator_stats: dict = field(default_factory=dict)
    specs: list = field(default_factory=list)
    labels: dict = field(default_factory=dict)

    @property
    def phi1(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def phi2(self) -> np.ndarray:
        return self.states[:, 1]

    def field_pairs(self) -> list[FieldPair]:
        return [FieldPair(complex(a), complex(b)) for a, b in self.states]


def safe_conserved(spec: ConservedQuantitySpec, p) -> np.ndarray:
    """evaluate_conserved with NaN where a base vanishes under a negative exponent."""
    q1 = np.abs(quadratic_form(p, spec.a1))
    q2 = np.abs(quadratic_form(p, spec.a2))
    e1, e2 = spec.exponent_pair
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.power(q1, e1) * np.power(q2, e2)
    bad = ((e1 < 0) & (q1 == 0)) | ((e2 < 0) & (q2 == 0))
    return np.where(bad, np.nan, v)


def diagnostics_for(states: np.ndarray, specs) -> tuple[dict, dict]:
    p = (states[:, 0], states[:, 1])
    o = observables(p)
    diag = {"norm2": o.rho1 + o.rho2}
    labels = {"norm2": "|phi1|^2 + |phi2|^2"}
    for k, spec in enumerate(specs):
        diag[f"cq{k}"] = safe_conserved(spec, p)
        labels[f"cq{k}"] = format_spec(spec)
    return diag, labels


def _default_specs(s: SystemRep) -> list:
    try:
        return conserved_quantities(s)
    except NlslabError:
        return []


def integrate_many(systems, p0s, t_span, tol: float = 1e-10, n_samples: int = 1024,
                   specs=None, raise_on_failure: bool = False) -> list:
    """Integrate several systems in one vectorized batch.

    Returns a list whose entries are OdeTrajectory or StepSizeUnderflow (carrying the partial trajectory).
    """
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    if not tol > 0:
        raise ValueError("tol must be positive")
    coeffs = np.array([system_to_coefficients(s).as_array() for s in systems])
    y0 = np.array([[complex(p[0]), complex(p[1])] for p in p0s])
    t_out = np.linspace(t0, t1, n_samples)
    res = solve_batch(batch_rhs(coeffs), y0, t_out, rtol=tol, atol=tol)
    out = []
    for b, s in enumerate(systems):
        sp = _default_specs(s) if specs is None else specs[b]
        n = int(res.n_out[b])
        states = res.y[b, :n]
        diag, labels = diagnostics_for(states, sp)
        stats = {"steps": int(res.steps[b]), "rejected_steps": int(res.rejected[b]), "tolerance": tol}
        traj = OdeTrajectory(t_out[:n].copy(), states, diag, stats, list(sp), labels)
        if res.failed[b]:
            err = StepSizeUnderflow(float(res.t_fail[b]), traj)
            if raise_on_failure:
                raise err
            out.append(err)
        else:
            out.append(traj)
    return out


def integrate(s: SystemRep, p0, t_span, tol: float = 1e-10, n_samples: int = 1024, specs=None) -> OdeTrajectory:
    return integrate_many([s], [p0], t_span, tol, n_samples, None if specs is None else [specs],
                          raise_on_failure=True)[0]


def flow(s: SystemRep, p, h: float) -> FieldPair:
    """Phi(h) from p by one high-order step."""
    c = system_to_coefficients(s).as_array()
    y = single_step(batch_rhs(c), 0.0, np.array([[complex(p[0]), complex(p[1])]]), h)[0]
    return FieldPair(y[0], y[1])


def check_derivative_identity(s: SystemRep, p, a, h: float = 1e-5, factor: float = 2.0) -> tuple[float, float]:
    """(lhs, rhs) with lhs = dQ(a)/dt by central differences and rhs = factor * I * Q(A a).

    The default factor 2 is the conventional statement of the identity; the flow itself
    satisfies it with factor 1 (see the README).
    """
    a = np.asarray(a, dtype=float)
    fwd = quadratic_form(flow(s, p, h), a)
    bwd = quadratic_form(flow(s, p, -h), a)
    lhs = float((fwd - bwd) / (2 * h))
    I = observables(p).I
    rhs = float(factor * I * quadratic_form(p, s.A @ a))
    return lhs, rhs


def global_bound_ratio(traj: OdeTrajectory) -> float:
    n = np.abs(traj.states[:, 0]) ** 2 + np.abs(traj.states[:, 1]) ** 2
    if n.size == 0:
        raise ZeroTrajectory("empty trajectory")
    lo = float(np.min(n))
    if lo == 0.0:
        raise ZeroTrajectory("trajectory passes through zero")
    return float(np.max(n)) / lo


def relative_drift(values: np.ndarray) -> float:
    """max |v(t) - v(0)| / |v(0)|, ignoring undefined samples."""
    v = np.asarray(values, dtype=float)
    if not np.isfinite(v[0]):
        return float("nan")
    v0 = v[0]
    d = np.abs(v[np.isfinite(v)] - v0)
    return float(np.max(d) / abs(v0)) if v0 != 0 else float(np.max(d))
