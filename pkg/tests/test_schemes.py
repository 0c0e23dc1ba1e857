import numpy as np
import pytest

from quarterplane.layers import discrete_layer_membership
from quarterplane.schemes import (
    CFLError,
    discrete_entropy_residual,
    run_godunov,
    run_lf,
    run_split,
    run_viscous,
)
from quarterplane.systems import make_model

BURGERS = make_model("burgers")
CUBIC = make_model("cubic")
ELASTO = make_model("elastodynamics")


def test_constant_state_is_preserved():
    for runner in (run_lf, run_split):
        sol = runner(BURGERS, 0.4, 0.4, h=0.01, lam=0.25, q=0.5, t_end=0.2, n_cells=50)
        np.testing.assert_array_equal(sol.final, np.full(50, 0.4))
    sol = run_godunov(BURGERS, 0.4, 0.4, h=0.01, lam=0.25, t_end=0.2, n_cells=50)
    np.testing.assert_array_equal(sol.final, np.full(50, 0.4))
    sol = run_viscous(BURGERS, 0.4, 0.4, h=0.01, eps=0.01, t_end=0.1, n_cells=50)
    np.testing.assert_allclose(sol.final, 0.4, atol=1e-13)


def test_split_equals_lf():
    rng = np.random.default_rng(1)
    u0 = rng.uniform(-0.5, 0.5, 80)
    a = run_lf(BURGERS, u0, 0.3, h=0.01, lam=0.25, q=0.5, t_end=0.3, n_cells=80)
    b = run_split(BURGERS, u0, 0.3, h=0.01, lam=0.25, q=0.5, t_end=0.3, n_cells=80)
    np.testing.assert_allclose(a.final, b.final, atol=1e-13)


def test_upwind_splitting_outflow():
    # f+ carries u >= 0, f- carries u < 0; over the constant -2 everything
    # is left-going and the interior stays at -2.
    f_plus = lambda u: np.where(u >= 0, BURGERS.flux(u), 0.0)
    f_minus = lambda u: np.where(u < 0, BURGERS.flux(u), 0.0)
    sol = run_split(BURGERS, -2.0, 1.0, h=1 / 200, lam=0.25, t_end=0.5,
                    splitting=(f_minus, f_plus), n_cells=200)
    assert np.all(np.abs(sol.final[20:] - (-2.0)) <= 0.05)


def test_bad_splitting_rejected():
    with pytest.raises(ValueError):
        run_split(BURGERS, 0.0, 0.0, h=0.01, lam=0.25, t_end=0.1,
                  splitting=(lambda u: 0.3 * u, lambda u: BURGERS.flux(u)))


def test_cfl_violation_raises():
    with pytest.raises(CFLError):
        run_lf(BURGERS, 3.0, 3.0, h=0.01, lam=0.5, q=0.5, t_end=0.1)
    with pytest.raises(CFLError):
        run_lf(BURGERS, 0.0, 0.0, h=0.01, lam=0.25, q=1.5, t_end=0.1)
    with pytest.raises(CFLError):
        run_godunov(BURGERS, 3.0, 3.0, h=0.01, lam=0.5, t_end=0.1)


def test_conservation_bookkeeping():
    rng = np.random.default_rng(2)
    for runner, kw in ((run_lf, dict(lam=0.25, q=0.5)),
                       (run_split, dict(lam=0.25, q=0.5)),
                       (run_godunov, dict(lam=0.25))):
        u0 = rng.uniform(-1, 1, 60)
        sol = runner(BURGERS, u0, 0.5, h=0.02, t_end=0.4, n_cells=60, **kw)
        change = sol.mass_final - sol.mass_initial
        np.testing.assert_allclose(
            change, sol.flux_time_integral_left - sol.flux_time_integral_right,
            atol=1e-12)


def test_conservation_system():
    rng = np.random.default_rng(3)
    u0 = rng.uniform(-0.3, 0.3, (60, 2))
    sol = run_lf(ELASTO, u0, np.array([0.1, -0.1]), h=0.02, lam=0.2, q=0.5,
                 t_end=0.4, n_cells=60)
    change = sol.mass_final - sol.mass_initial
    np.testing.assert_allclose(
        change, sol.flux_time_integral_left - sol.flux_time_integral_right, atol=1e-12)


def test_max_principle_scalar():
    rng = np.random.default_rng(4)
    for model in (BURGERS, CUBIC):
        for runner, kw in ((run_lf, dict(lam=0.2, q=0.5)),
                           (run_godunov, dict(lam=0.2))):
            u0 = rng.uniform(-1.5, 1.5, 70)
            ub = float(rng.uniform(-1.5, 1.5))
            lo = min(u0.min(), ub)
            hi = max(u0.max(), ub)
            sol = runner(model, u0, ub, h=0.02, t_end=0.5, n_cells=70, **kw)
            assert sol.final.min() >= lo - 1e-12
            assert sol.final.max() <= hi + 1e-12


def test_entropy_residual_nonpositive_lf():
    rng = np.random.default_rng(5)
    for model in (BURGERS, CUBIC):
        u0 = rng.uniform(-1, 1, 60)
        sol = run_lf(model, u0, -0.5, h=0.02, lam=0.3, q=0.5, t_end=0.3,
                     n_cells=60, store_all=True)
        assert discrete_entropy_residual(model, sol) <= 1e-12


def test_entropy_residual_nonpositive_godunov():
    rng = np.random.default_rng(6)
    u0 = rng.uniform(-1, 1, 50)
    sol = run_godunov(BURGERS, u0, 0.8, h=0.02, lam=0.3, t_end=0.3,
                      n_cells=50, store_all=True)
    assert discrete_entropy_residual(BURGERS, sol) <= 1e-12


def test_entropy_residual_system():
    rng = np.random.default_rng(7)
    u0 = rng.uniform(-0.3, 0.3, (50, 2))
    sol = run_lf(ELASTO, u0, np.array([0.0, 0.0]), h=0.02, lam=0.2, q=0.5,
                 t_end=0.3, n_cells=50, store_all=True)
    assert discrete_entropy_residual(ELASTO, sol) <= 1e-12


def test_pinned_boundary_cell():
    sol = run_lf(BURGERS, -2.0, 1.0, h=0.02, lam=0.25, q=0.5, t_end=0.5,
                 n_cells=60, store_all=True)
    assert np.all(sol.history[:, 0] == 1.0)


def test_lf_steady_cells_match_layer_iterates():
    # Steady state of the scheme with u_B = 1 over the constant -2: cell j
    # tracks the j-th discrete layer iterate.
    h = 1.0 / 200
    sol = run_lf(BURGERS, -2.0, 1.0, h=h, lam=0.25, q=0.5, t_end=1.0, n_cells=200)
    prof = discrete_layer_membership(BURGERS, ("lf", 0.25, 0.5), 1.0, -2.0)
    k = min(len(prof.states), 30)
    np.testing.assert_allclose(sol.final[:k], prof.states[:k], atol=0.05)


def test_viscous_stationary_shock_order():
    # u = -b tanh(b (x - x0) / (2 eps)) is a steady solution; the drift of
    # the discrete solution from it shrinks ~4x when h halves.
    b, eps, x0 = 1.0, 0.1, 2.0

    def exact(x):
        return -b * np.tanh(b * (x - x0) / (2 * eps))

    errs = []
    for h in (0.1, 0.05):
        n = int(round(4.0 / h))
        xs = (np.arange(n) + 0.5) * h
        sol = run_viscous(BURGERS, exact, exact(0.0), h=h, eps=eps, t_end=1.0, n_cells=n)
        errs.append(np.max(np.abs(sol.final - exact(xs))))
    assert errs[0] < 0.02
    assert errs[0] / errs[1] > 3.0


def test_viscous_conservation():
    rng = np.random.default_rng(8)
    u0 = rng.uniform(-0.5, 0.5, 60)
    sol = run_viscous(BURGERS, u0, 0.2, h=0.02, eps=0.02, t_end=0.2, n_cells=60)
    change = sol.mass_final - sol.mass_initial
    np.testing.assert_allclose(
        change, sol.flux_time_integral_left - sol.flux_time_integral_right, atol=1e-12)


def test_snapshot_times_cover_range():
    sol = run_lf(BURGERS, 0.0, 0.5, h=0.02, lam=0.25, q=0.5, t_end=0.5, n_cells=40)
    assert sol.times[0] == 0.0
    assert sol.times[-1] == pytest.approx(0.5, abs=sol.tau)
    assert len(sol.times) == len(sol.snapshots)
