"""Split-step Fourier solver for the full system and the modified-scattering profile comparison.

Two frames are available for the long-time comparison:

* ``lens``: the pseudo-conformal variables
  u(t, x) = (it)^(-1/2) exp(i x^2 / 2t) g(-1/t, x/t),
  in which g solves i g_tau + g_yy / 2 = |tau|^(-1) F(g) on tau in [-1, 0).
  The solution stays localized in y, so a fixed periodic box reaches t = 1e3.
* ``physical``: direct evolution of u; t_end is capped so the dispersive cone
  stays inside the box.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .algebra import NlslabError, SystemRep, system_to_coefficients
from .classify import classify, conserved_quantities
from .integrator import single_step, solve_batch
from .ode import batch_rhs, safe_conserved


class ZeroTime(NlslabError):
    pass


class GridUnderresolved(NlslabError):
    pass


class WindowTooShort(NlslabError):
    pass


TAIL_TOL = 1e-10
BAND = 0.9  # fraction of the resolved band used for comparisons


@dataclass(frozen=True)
class Grid:
    N: int
    L: float

    def __post_init__(self):
        if self.N < 256 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two, at least 256")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def dx(self) -> float:
        return 2 * self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @property
    def xi(self) -> np.ndarray:
        """Wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.N, self.dx)

    @property
    def xi_max(self) -> float:
        return np.pi / self.dx


@dataclass
class PdeState:
    grid: Grid
    t: float
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        self.u1 = np.asarray(self.u1, dtype=complex)
        self.u2 = np.asarray(self.u2, dtype=complex)
        if self.u1.shape != (self.grid.N,) or self.u2.shape != (self.grid.N,):
            raise ValueError("field arrays must match the grid")
        if not (np.all(np.isfinite(self.u1)) and np.all(np.isfinite(self.u2))):
            raise ValueError("fields must be finite")


@dataclass
class ProfileComparison:
    times: list
    error_L2: list
    error_Linf: list
    fitted_slope_Linf: float
    fitted_slope_L2: float
    residual_Linf: float
    residual_L2: float
    epsilon: float
    fit_window: tuple
    frame: str
    t_end: float
    t_end_requested: float
    w_snapshots: list | None = None
    series: dict = field(default_factory=dict)


# linear and nonlinear sub-flows

def _free(u: np.ndarray, xi: np.ndarray, dt: float) -> np.ndarray:
    """exp(i dt d_x^2 / 2) applied spectrally."""
    return np.fft.ifft(np.exp(-0.5j * dt * xi ** 2) * np.fft.fft(u))


def _nonlinear(coeffs: np.ndarray, u1, u2, h: float):
    y = single_step(batch_rhs(coeffs), 0.0, np.stack([u1, u2], axis=1), h)
    return y[:, 0], y[:, 1]


def _strang(coeffs, u1, u2, xi, dt_lin: float, h_nl: float, dispersion: bool):
    if dispersion:
        u1, u2 = _free(u1, xi, dt_lin / 2), _free(u2, xi, dt_lin / 2)
    u1, u2 = _nonlinear(coeffs, u1, u2, h_nl)
    if dispersion:
        u1, u2 = _free(u1, xi, dt_lin / 2), _free(u2, xi, dt_lin / 2)
    return u1, u2


def step(s: SystemRep, st: PdeState, dt: float, dispersion: bool = True) -> PdeState:
    """One Strang step: free half step, pointwise ODE step, free half step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    c = system_to_coefficients(s).as_array()
    u1, u2 = _strang(c, st.u1, st.u2, st.grid.xi, dt, dt, dispersion)
    return PdeState(st.grid, st.t + dt, u1, u2)


def evolve(s: SystemRep, st: PdeState, dt: float, n_steps: int, dispersion: bool = True) -> PdeState:
    c = system_to_coefficients(s).as_array()
    u1, u2, xi = st.u1, st.u2, st.grid.xi
    for _ in range(n_steps):
        u1, u2 = _strang(c, u1, u2, xi, dt, dt, dispersion)
    return PdeState(st.grid, st.t + n_steps * dt, u1, u2)


# profiles

def spectrum(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Continuous Fourier transform (2 pi)^(-1/2) int exp(-i x xi) u dx at the grid wavenumbers."""
    return grid.dx / np.sqrt(2 * np.pi) * np.exp(1j * grid.L * grid.xi) * np.fft.fft(u)


def extract_w(st: PdeState) -> tuple[np.ndarray, np.ndarray]:
    """w_j(t, xi) = exp(i t xi^2 / 2) hat u_j(t, xi), in FFT order."""
    if st.t == 0:
        raise ZeroTime("w is defined for t != 0 only")
    ph = np.exp(0.5j * st.t * st.grid.xi ** 2)
    return ph * spectrum(st.grid, st.u1), ph * spectrum(st.grid, st.u2)


def l2_norm(grid: Grid, u: np.ndarray) -> float:
    return float(np.sqrt(grid.dx * np.sum(np.abs(u) ** 2)))


def spectral_l2_norm(grid: Grid, w: np.ndarray) -> float:
    return float(np.sqrt(2 * np.pi / (grid.N * grid.dx) * np.sum(np.abs(w) ** 2)))


def free_gaussian(t: float, x: np.ndarray) -> np.ndarray:
    """Exact free evolution of exp(-x^2)."""
    z = 1 + 2j * t
    return z ** -0.5 * np.exp(-x ** 2 / z)


@dataclass(frozen=True)
class GaussianProfile:
    amplitude: complex = 1.0
    center: float = 0.0
    width: float = 1.0
    wavenumber: float = 0.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.amplitude * np.exp(-((x - self.center) / self.width) ** 2 + 1j * self.wavenumber * x)


DEFAULT_PROFILES = (GaussianProfile(1.0, 0.0, 1.0), GaussianProfile(0.8, 0.5, 1.2))


def check_resolved(grid: Grid, u: np.ndarray, what: str = "solution") -> None:
    sp = np.abs(spectrum(grid, u))
    peak = float(np.max(sp))
    if peak == 0:
        return
    tail = float(np.max(sp[np.abs(grid.xi) > BAND * grid.xi_max]))
    if tail > TAIL_TOL * peak:
        raise GridUnderresolved(f"{what}: spectral tail {tail / peak:.3g} of peak exceeds {TAIL_TOL:g}")


def _sorted_spline(grid: Grid, w: np.ndarray) -> CubicSpline:
    order = np.argsort(grid.xi)
    return CubicSpline(grid.xi[order], w[order])


def _fit(times, errs, window) -> tuple[float, float]:
    t = np.asarray(times, dtype=float)
    e = np.asarray(errs, dtype=float)
    m = (t >= window[0] * (1 - 1e-12)) & (t <= window[1] * (1 + 1e-12)) & (e > 0)
    if m.sum() < 2:
        return float("nan"), float("nan")
    X, Y = np.log(t[m]), np.log(e[m])
    slope, icpt = np.polyfit(X, Y, 1)
    res = float(np.sqrt(np.mean((Y - (slope * X + icpt)) ** 2)))
    return float(slope), res


def _diag_indices(n_steps: int, n_diag: int, to_time) -> np.ndarray:
    """Step indices whose times are close to geometrically spaced samples."""
    t_end = to_time(n_steps)
    targets = np.geomspace(1.0, t_end, n_diag)
    times = np.array([to_time(k) for k in range(n_steps + 1)])
    idx = np.unique(np.searchsorted(times, targets).clip(0, n_steps))
    return idx


def _profile_ode(coeffs, psi1, psi2, sigmas, sigma0: float = 0.0, tol: float = 1e-11):
    """A_j(sigma, .) with A_j(sigma0, .) = psi_j, node by node; shape (len(sigmas), 2, n).

    sigmas must be increasing; values below sigma0 are reached by integrating -F forward in -sigma.
    """
    y0 = np.stack([psi1, psi2], axis=1)
    sigmas = np.asarray(sigmas, dtype=float)
    atol = tol * max(1e-300, float(np.max(np.abs(y0))))
    out = np.empty((len(sigmas), 2, len(psi1)), dtype=complex)
    out[sigmas == sigma0] = y0.T
    for sign in (1, -1):
        sel = np.nonzero(sign * (sigmas - sigma0) > 0)[0][::sign]
        if sel.size:
            t_out = np.concatenate([[sign * sigma0], sign * sigmas[sel]])
            res = solve_batch(batch_rhs(sign * coeffs), y0, t_out, rtol=tol, atol=atol)
            out[sel] = np.transpose(res.y[:, 1:], (1, 2, 0))
    return out


def run_asymptotics(s: SystemRep, eps: float, grid: Grid | None = None, t_end: float = 1e3,
                    dt0: float = 0.01, fit_window: tuple | None = None, frame: str = "lens",
                    profiles=DEFAULT_PROFILES, n_diag: int = 41, keep_w: bool = False,
                    require_assumption: bool = True, t_match: float = 1.0) -> ProfileComparison:
    """Evolve from t = 1 and compare with (it)^(-1/2) exp(ix^2/2t) A(log t, x/t).

    A solves the reduced ODE in log t with A(log t_match) = w(t_match); the default
    t_match = 1 matches at the initial time.  In the lens frame dt0 is the step in
    log t; in the physical frame it is the step in t.
    """
    grid = Grid(4096, 40 * np.pi) if grid is None else grid
    fit_window = (10.0, t_end) if fit_window is None else tuple(fit_window)
    if fit_window[1] / fit_window[0] < 10 * (1 - 1e-12):
        raise WindowTooShort("fit window must span at least one decade")
    if not 0 <= eps <= 0.3:
        raise ValueError("eps must lie in [0, 0.3]")
    if require_assumption:
        cl = classify(s)
        if not (cl.assumption1 or cl.assumption2 or not np.any(s.A)):
            from .normalize import AssumptionNotSatisfied
            raise AssumptionNotSatisfied("system satisfies neither eigen assumption")
    coeffs = system_to_coefficients(s).as_array()
    x = grid.x
    u1 = eps * profiles[0](x)
    u2 = eps * profiles[1](x)
    check_resolved(grid, u1, "u1(1)")
    check_resolved(grid, u2, "u2(1)")
    st1 = PdeState(grid, 1.0, u1, u2)
    if frame == "lens":
        return _run_lens(s, coeffs, eps, grid, st1, t_end, dt0, fit_window, n_diag, keep_w, t_match)
    if frame == "physical":
        return _run_physical(s, coeffs, eps, grid, st1, t_end, dt0, fit_window, n_diag, keep_w, t_match)
    raise ValueError(f"unknown frame {frame!r}")


def _coercive_spec(s):
    try:
        return next((q for q in conserved_quantities(s) if q.coercive), None)
    except NlslabError:
        return None


def _nearest(times, t_match) -> int:
    return int(np.argmin(np.abs(np.log(np.asarray(times)) - np.log(t_match))))


def _run_lens(s, coeffs, eps, grid, st1, t_end, dsig, window, n_diag, keep_w, t_match):
    y, xi = grid.x, grid.xi
    n_steps = max(1, int(np.ceil(np.log(t_end) / dsig)))
    dsig = np.log(t_end) / n_steps
    idx = _diag_indices(n_steps, n_diag, lambda k: np.exp(k * dsig))
    times = np.exp(idx * dsig)

    chirp = np.sqrt(1j) * np.exp(-0.5j * y ** 2)
    g1, g2 = chirp * st1.u1, chirp * st1.u2
    check_resolved(grid, g1, "lens-frame g1")
    check_resolved(grid, g2, "lens-frame g2")
    snaps = []
    j = 0
    for k in range(n_steps + 1):
        if j < len(idx) and k == idx[j]:
            snaps.append((g1, g2))
            j += 1
        if k < n_steps:
            tau0, tau1 = -np.exp(-k * dsig), -np.exp(-(k + 1) * dsig)
            g1, g2 = _strang(coeffs, g1, g2, xi, tau1 - tau0, dsig, True)

    # w(t) = U(1/t) g(-1/t) on the common y = xi grid
    ws = [(_free(a, xi, 1 / t), _free(b, xi, 1 / t)) for t, (a, b) in zip(times, snaps)]
    m = _nearest(times, t_match)
    A = _profile_ode(coeffs, ws[m][0], ws[m][1], np.log(times), float(np.log(times[m])))
    band = np.abs(y) <= BAND * grid.xi_max
    spec = _coercive_spec(s)
    out = _Collector(keep_w)
    for j, t in enumerate(times):
        g1, g2 = snaps[j]
        d1, d2 = g1 - A[j, 0], g2 - A[j, 1]
        linf = t ** -0.5 * float(max(np.max(np.abs(d1[band])), np.max(np.abs(d2[band]))))
        l2 = float(np.sqrt(grid.dx * np.sum(np.abs(d1[band]) ** 2 + np.abs(d2[band]) ** 2)))
        out.add(float(t), l2, linf, max(np.max(np.abs(g1)), np.max(np.abs(g2))), ws[j][0], ws[j][1], spec)
    return out.finish(eps, window, "lens", t_end, t_end, float(times[m]))


def _run_physical(s, coeffs, eps, grid, st1, t_end, dt, window, n_diag, keep_w, t_match):
    x, xi = grid.x, grid.xi
    w_init = extract_w(st1)
    # cone rule: keep |x| <= t * xi_ext inside the box
    amp = np.maximum(np.abs(w_init[0]), np.abs(w_init[1]))
    xi_ext = float(np.max(np.abs(xi[amp > 1e-8 * np.max(amp)]))) if np.max(amp) > 0 else 1.0
    t_cap = BAND * grid.L / max(xi_ext, 1e-12)
    t_eff = min(t_end, max(t_cap, 1.0 + dt))
    n_steps = max(1, int(np.ceil((t_eff - 1) / dt)))
    dt = (t_eff - 1) / n_steps
    idx = _diag_indices(n_steps, n_diag, lambda k: 1 + k * dt)
    times = 1 + idx * dt

    snaps = []
    u1, u2 = st1.u1, st1.u2
    j = 0
    for k in range(n_steps + 1):
        if j < len(idx) and k == idx[j]:
            snaps.append((u1, u2))
            j += 1
        if k < n_steps:
            u1, u2 = _strang(coeffs, u1, u2, xi, dt, dt, True)
    ws = [extract_w(PdeState(grid, t, a, b)) for t, (a, b) in zip(times, snaps)]
    m = _nearest(times, t_match)
    A = _profile_ode(coeffs, ws[m][0], ws[m][1], np.log(times), float(np.log(times[m])))

    spec = _coercive_spec(s)
    out = _Collector(keep_w)
    for j, t in enumerate(times):
        u1, u2 = snaps[j]
        yv = x / t
        band = np.abs(yv) <= BAND * grid.xi_max
        yc = np.clip(yv, xi.min(), xi.max())
        pre = (1j * t) ** -0.5 * np.exp(0.5j * x ** 2 / t)
        e1 = u1 - np.where(band, pre * _sorted_spline(grid, A[j, 0])(yc), 0)
        e2 = u2 - np.where(band, pre * _sorted_spline(grid, A[j, 1])(yc), 0)
        linf = float(max(np.max(np.abs(e1[band])), np.max(np.abs(e2[band]))))
        l2 = float(np.sqrt(grid.dx * np.sum(np.abs(e1[band]) ** 2 + np.abs(e2[band]) ** 2)))
        yt = np.sqrt(t) * max(np.max(np.abs(u1)), np.max(np.abs(u2)))
        out.add(float(t), l2, linf, yt, ws[j][0], ws[j][1], spec)
    return out.finish(eps, window, "physical", t_eff, t_end, float(times[m]))


class _Collector:
    def __init__(self, keep_w: bool):
        self.keep_w = keep_w
        self.t, self.l2, self.linf, self.yt, self.wsup = [], [], [], [], []
        self.node_min = self.node_max = self.mask = None
        self.cq = []
        self.snaps = []

    def add(self, t, l2, linf, yt, wa, wb, spec):
        self.t.append(t)
        self.l2.append(l2)
        self.linf.append(linf)
        self.yt.append(float(yt))
        self.wsup.append(float(max(np.max(np.abs(wa)), np.max(np.abs(wb)))))
        n = np.abs(wa) ** 2 + np.abs(wb) ** 2
        if self.mask is None:
            # frequencies carrying the solution
            self.mask = n > 1e-6 * np.max(n) if np.max(n) > 0 else np.zeros_like(n, dtype=bool)
            self.node_min, self.node_max = n.copy(), n.copy()
        else:
            self.node_min = np.minimum(self.node_min, n)
            self.node_max = np.maximum(self.node_max, n)
        if spec is not None:
            self.cq.append(safe_conserved(spec, (wa, wb)))
        if self.keep_w:
            self.snaps.append((t, wa.copy(), wb.copy()))

    def finish(self, eps, window, frame, t_eff, t_req, t_match) -> ProfileComparison:
        window = (window[0], min(window[1], t_eff))
        s_inf, r_inf = _fit(self.t, self.linf, window)
        s_2, r_2 = _fit(self.t, self.l2, window)
        m = self.mask
        ratio = float(np.max(self.node_max[m] / self.node_min[m])) if m is not None and m.any() else 1.0
        series = {"Y_T": self.yt, "sup_w": self.wsup, "node_ratio": ratio, "t_match": t_match}
        if self.cq:
            cq = np.array(self.cq)[:, m]
            ok = np.all(np.isfinite(cq), axis=0) & (np.abs(cq[0]) > 0)
            series["cq_w_drift"] = float(np.max(np.abs(cq[:, ok] - cq[0, ok]) / np.abs(cq[0, ok]))) if ok.any() else float("nan")
        return ProfileComparison(self.t, self.l2, self.linf, s_inf, s_2, r_inf, r_2, eps, window, frame,
                                 float(t_eff), float(t_req), self.snaps if self.keep_w else None, series)


def boundedness_diagnostics(run: ProfileComparison) -> dict:
    """sup_t |w|_inf, sup_t t^(1/2) |u|_inf, and the per-frequency sup/inf ratio of |w1|^2 + |w2|^2."""
    out = {
        "sup_w_inf": float(max(run.series["sup_w"])),
        "Y_T_proxy": float(max(run.series["Y_T"])),
        "node_ratio": float(run.series["node_ratio"]),
    }
    if "cq_w_drift" in run.series:
        out["cq_w_drift"] = float(run.series["cq_w_drift"])
    return out
