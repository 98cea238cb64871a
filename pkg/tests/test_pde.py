import numpy as np
import pytest

from nlslab.algebra import SystemRep
from nlslab.families import nls_a, nls_b
from nlslab.normalize import AssumptionNotSatisfied
from nlslab.pde import (Grid, GridUnderresolved, PdeState, WindowTooShort, ZeroTime, boundedness_diagnostics,
                        evolve, extract_w, free_gaussian, l2_norm, run_asymptotics, spectral_l2_norm, step)

ZERO = SystemRep.from_matrix(np.zeros((3, 3)))
SMALL = Grid(1024, 20 * np.pi)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(1000, 10.0)
    with pytest.raises(ValueError):
        Grid(128, 10.0)
    g = Grid(4096, 40 * np.pi)
    assert g.x[0] == -g.L and g.dx * g.N == pytest.approx(2 * g.L)


def test_free_gaussian_on_the_reference_grid():
    g = Grid(4096, 40 * np.pi)
    x = g.x
    st = step(ZERO, PdeState(g, 0.0, np.exp(-x ** 2), np.zeros_like(x)), 1.0)
    assert np.max(np.abs(st.u1 - free_gaussian(1.0, x))) < 1e-8


def test_zero_data_stays_zero():
    z = np.zeros(SMALL.N)
    st = evolve(nls_b(), PdeState(SMALL, 1.0, z, z), 0.1, 5)
    assert not st.u1.any() and not st.u2.any()


def test_nonlinear_step_without_dispersion_matches_ode():
    from nlslab.ode import integrate
    x = SMALL.x
    u0 = 0.7 * np.exp(-x ** 2)
    st = evolve(nls_b(), PdeState(SMALL, 0.0, u0, 0.4 * u0), 0.05, 20, dispersion=False)
    i = SMALL.N // 2
    tr = integrate(nls_b(), (u0[i], 0.4 * u0[i]), (0, 1), n_samples=2)
    assert st.u1[i] == pytest.approx(tr.phi1[-1], abs=1e-8)
    assert st.u2[i] == pytest.approx(tr.phi2[-1], abs=1e-8)


def test_extract_w_is_an_isometry_and_needs_nonzero_time():
    x = SMALL.x
    st = PdeState(SMALL, 2.0, np.exp(-x ** 2 + 1j * x), 0.5 * np.exp(-(x - 1) ** 2))
    w1, w2 = extract_w(st)
    assert abs(spectral_l2_norm(SMALL, w1) - l2_norm(SMALL, st.u1)) < 1e-12
    assert abs(spectral_l2_norm(SMALL, w2) - l2_norm(SMALL, st.u2)) < 1e-12
    with pytest.raises(ZeroTime):
        extract_w(PdeState(SMALL, 0.0, st.u1, st.u2))


def test_free_flow_conserves_mass():
    x = SMALL.x
    st0 = PdeState(SMALL, 1.0, 0.3 * np.exp(-x ** 2), 0.2 * np.exp(-x ** 2))
    st = evolve(ZERO, st0, 0.5, 10)
    assert l2_norm(SMALL, st.u1) == pytest.approx(l2_norm(SMALL, st0.u1), rel=1e-13)


def test_underresolved_initial_data_rejected():
    g = Grid(256, 400.0)
    with pytest.raises(GridUnderresolved):
        run_asymptotics(nls_b(), 0.1, g, t_end=100)


def test_run_argument_checks():
    with pytest.raises(WindowTooShort):
        run_asymptotics(nls_b(), 0.1, SMALL, t_end=100, fit_window=(10, 50))
    with pytest.raises(ValueError):
        run_asymptotics(nls_b(), 0.5, SMALL, t_end=100)
    with pytest.raises(AssumptionNotSatisfied):
        run_asymptotics(SystemRep.from_matrix(np.eye(3)), 0.1, SMALL, t_end=100)


def test_free_evolution_diagnostics():
    run = run_asymptotics(ZERO, 0.1, Grid(2048, 40 * np.pi), t_end=100)
    d = boundedness_diagnostics(run)
    assert d["node_ratio"] == pytest.approx(1.0, abs=1e-9)
    assert all(np.isfinite(v) for v in d.values())
    assert d["Y_T_proxy"] < 1.0


@pytest.mark.slow
def test_y_t_proxy_is_linear_in_eps():
    g = Grid(2048, 40 * np.pi)
    a = boundedness_diagnostics(run_asymptotics(nls_b(), 0.05, g, t_end=100))
    b = boundedness_diagnostics(run_asymptotics(nls_b(), 0.1, g, t_end=100))
    assert 1.5 <= b["Y_T_proxy"] / a["Y_T_proxy"] <= 2.5
    assert b["Y_T_proxy"] <= 10 * 0.1


@pytest.mark.slow
def test_late_matching_removes_the_initial_floor():
    """Matching the profile ODE at the final time exposes the decay of the remainder."""
    g = Grid(2048, 40 * np.pi)
    run = run_asymptotics(nls_a(0.5), 0.1, g, t_end=300, t_match=300.0)
    assert run.fitted_slope_Linf < -0.55 and run.fitted_slope_L2 < -0.35


def test_physical_frame_caps_t_end_to_the_box():
    run = run_asymptotics(nls_b(), 0.1, SMALL, t_end=1e3, frame="physical", dt0=0.05, fit_window=(1, 10))
    assert run.t_end < run.t_end_requested and run.frame == "physical"
