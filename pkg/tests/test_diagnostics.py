import numpy as np
import pytest

from quarterplane.admissible import riemann_set_scalar
from quarterplane.diagnostics import (
    boundary_entropy_residual,
    convergence_study,
    extract_boundary_trace,
)
from quarterplane.layers import viscous_layer_profile
from quarterplane.schemes import run_godunov, run_lf, run_viscous
from quarterplane.systems import make_model

BURGERS = make_model("burgers")
CUBIC = make_model("cubic")


def burgers_viscous_layer_run(eps, x_max=0.4, t_end=0.4):
    # h ~ eps^2 so the *rescaled* resolution h/eps improves as eps shrinks
    h = eps * eps / 0.32
    n = int(round(x_max / h))
    return run_viscous(BURGERS, -2.0, 1.0, h=h, eps=eps, t_end=t_end, n_cells=n)


def test_constant_run_trace():
    sol = run_lf(BURGERS, 0.4, 0.4, h=0.01, lam=0.25, q=0.5, t_end=0.3, n_cells=60)
    rep = extract_boundary_trace(BURGERS, sol)
    assert rep.trace == pytest.approx(0.4, abs=1e-13)
    assert rep.bv_proxy == pytest.approx(0.0, abs=1e-13)
    assert not rep.oscillation_suspected
    assert boundary_entropy_residual(BURGERS, rep) == pytest.approx(0.0, abs=1e-12)


def test_viscous_trace_and_rescaled_profile():
    sol = burgers_viscous_layer_run(0.01)
    rep = extract_boundary_trace(BURGERS, sol)
    assert abs(float(rep.trace) - (-2.0)) <= 0.05
    assert rep.profile_y[0] == 0.0
    assert float(rep.profile_states[0]) == pytest.approx(1.0)

    ode = viscous_layer_profile(BURGERS, 1.0, -2.0, y_max=50.0)
    ys = np.linspace(0.0, 5.0, 101)
    err = np.max(np.abs(rep.profile_interp(ys) - ode.interp(ys)))
    assert err <= 0.05


def test_godunov_run_has_no_layer():
    sol = run_godunov(BURGERS, -2.0, 1.0, h=1 / 200, lam=0.2, t_end=0.5, n_cells=200)
    rep = extract_boundary_trace(BURGERS, sol)
    assert abs(float(rep.trace) - (-2.0)) <= 0.05
    # the first interior cell already sits at the trace: no layer
    assert abs(sol.final[1] - (-2.0)) <= 0.05
    assert riemann_set_scalar(BURGERS, 1.0).member(round(float(rep.trace), 6) + 0.0) or \
        abs(float(rep.trace) - (-2.0)) <= 0.05


def test_entropy_residual_burgers_value():
    sol = burgers_viscous_layer_run(0.02)
    rep = extract_boundary_trace(BURGERS, sol)
    worst = boundary_entropy_residual(BURGERS, rep, (BURGERS.entropies[0],))
    # F(-2) - F(1) - U'(1) (f(-2) - f(1)) = -4.5 at the exact trace
    assert worst == pytest.approx(-4.5, abs=0.2)
    assert worst <= 1e-12


def test_trace_report_window_validation():
    sol = run_lf(BURGERS, 0.0, 0.0, h=0.01, lam=0.25, q=0.5, t_end=0.2, n_cells=40)
    with pytest.raises(ValueError):
        extract_boundary_trace(BURGERS, sol, window=(0.1, 0.5))
    with pytest.raises(ValueError):
        extract_boundary_trace(BURGERS, sol, probe_depth=400)


def test_convergence_study_viscous():
    ode = viscous_layer_profile(BURGERS, 1.0, -2.0, y_max=50.0)
    rows, flags = convergence_study(
        BURGERS, burgers_viscous_layer_run, [0.04, 0.02],
        expected_trace=-2.0, profile_reference=lambda y: float(ode.interp(y)))
    assert len(rows) == 2
    assert rows[-1].trace_error <= 0.05
    assert rows[-1].profile_error <= 0.05
    assert flags["trace_error_decreasing"]
    assert flags["profile_error_decreasing"]


def test_convergence_study_single_row():
    rows, flags = convergence_study(BURGERS, burgers_viscous_layer_run, [0.04],
                                    expected_trace=-2.0)
    assert len(rows) == 1
    assert flags["trace_error_decreasing"] is None


def test_convergence_study_rejects_nonmonotone():
    with pytest.raises(ValueError):
        convergence_study(BURGERS, burgers_viscous_layer_run, [0.04, 0.01, 0.02])
