import io

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from netcrt import InvalidSpec, OdeInstability, OdeParams, compare_ode_vs_network, solve_pair_ode
from netcrt.ode import logistic, ode_only, write_trajectories


def test_gamma_zero_is_logistic():
    params = OdeParams(p0=0.3, p1=0.25, gamma=0.0, t_end=60)
    t, i0, i1 = solve_pair_ode(params)
    assert np.max(np.abs(i0 - logistic(t, 0.3, 0.01))) < 1e-6
    assert np.max(np.abs(i1 - logistic(t, 0.25, 0.01))) < 1e-6


def test_matches_solve_ivp():
    params = OdeParams(p0=0.4, p1=0.2, gamma=0.3, t_end=30)
    t, i0, i1 = solve_pair_ode(params)

    def rhs(_, y):
        a, b = y
        g = params.gamma
        return [((1 - g) * 0.4 * a + g * 0.2 * b) * (1 - a),
                ((1 - g) * 0.2 * b + g * 0.4 * a) * (1 - b)]

    ref = solve_ivp(rhs, (0, 30), [0.01, 0.01], t_eval=t, rtol=1e-11, atol=1e-13, method="DOP853")
    assert np.max(np.abs(i0 - ref.y[0])) < 1e-8
    assert np.max(np.abs(i1 - ref.y[1])) < 1e-8


def test_halving_dt_changes_little_and_order_four():
    base = dict(p0=0.3, p1=0.25, gamma=0.2, t_end=40)
    coarse = np.column_stack(solve_pair_ode(OdeParams(dt=0.1, **base))[1:])
    mid = np.column_stack(solve_pair_ode(OdeParams(dt=0.05, **base))[1:])
    fine = np.column_stack(solve_pair_ode(OdeParams(dt=0.025, **base))[1:])
    ref = np.column_stack(solve_pair_ode(OdeParams(dt=0.00625, **base))[1:])
    default = np.column_stack(solve_pair_ode(OdeParams(**base))[1:])
    half = np.column_stack(solve_pair_ode(OdeParams(dt=0.005, **base))[1:])
    assert np.max(np.abs(default - half)) < 1e-6
    e1 = np.max(np.abs(coarse - ref))
    e2 = np.max(np.abs(mid - ref))
    e3 = np.max(np.abs(fine - ref))
    assert 12 < e1 / e2 < 20
    assert 12 < e2 / e3 < 20


def test_half_mixing_equal_rates_symmetric():
    t, i0, i1 = solve_pair_ode(OdeParams(p0=0.3, p1=0.3, gamma=0.5))
    assert np.array_equal(i0, i1)


def test_half_mixing_shrinks_difference():
    _, a0, a1 = solve_pair_ode(OdeParams(gamma=0.0, t_end=20))
    _, b0, b1 = solve_pair_ode(OdeParams(gamma=0.5, t_end=20))
    assert np.max(np.abs(b0 - b1)) < 0.2 * np.max(np.abs(a0 - a1))


def test_arm_swap_symmetry():
    _, a0, a1 = solve_pair_ode(OdeParams(p0=0.3, p1=0.2, gamma=0.35))
    _, b0, b1 = solve_pair_ode(OdeParams(p0=0.2, p1=0.3, gamma=0.35))
    assert np.array_equal(a0, b1) and np.array_equal(a1, b0)


def test_full_mixing_switches_order():
    _, i0, i1 = solve_pair_ode(OdeParams(p0=0.3, p1=0.25, gamma=1.0))
    assert np.all(i1[1:] > i0[1:])


def test_trajectories_monotone_in_range():
    _, i0, i1 = solve_pair_ode(OdeParams(gamma=0.7, t_end=80))
    for x in (i0, i1):
        assert np.all(np.diff(x) >= 0)
        assert x[0] == 0.01 and np.all(x < 1)


def test_instability_detected():
    with pytest.raises(OdeInstability):
        solve_pair_ode(OdeParams(p0=30.0, p1=30.0, dt=0.5, i0=0.5))


def test_param_validation():
    with pytest.raises(InvalidSpec):
        OdeParams(dt=0.3)
    with pytest.raises(InvalidSpec):
        OdeParams(gamma=1.2)
    with pytest.raises(InvalidSpec):
        OdeParams(i0=0.0)


def test_network_comparison_small():
    comp = compare_ode_vs_network(OdeParams(gamma=0.1, t_end=15), n=100, replicates=40,
                                  rng=np.random.default_rng(0))
    assert comp.max_gap < 0.05
    assert comp.sim_mean[0, 0] == pytest.approx(0.01)
    assert comp.ode[comp.stop_index].mean() >= 0.1


def test_network_comparison_rejects_fractional_seeds():
    with pytest.raises(InvalidSpec):
        compare_ode_vs_network(OdeParams(i0=0.015), n=100, replicates=2,
                               rng=np.random.default_rng(0))


def test_trajectory_csv():
    buf = io.StringIO()
    write_trajectories(buf, [ode_only(OdeParams(t_end=3))])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "gamma,t,I0_ode,I1_ode,I0_sim_mean,I1_sim_mean"
    assert len(lines) == 5
    assert lines[1].startswith("0,0,0.01,0.01,,")
