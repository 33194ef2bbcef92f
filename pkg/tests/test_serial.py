# Copyright 2026 The asyncbcu developers, MIT license

import numpy as np
import pytest

from asyncbcu.errors import (ParameterError, StateError, StructuralError,
                             UnsupportedError)
from asyncbcu.problem import residual
from asyncbcu.serial import (RunConfig, SaddleState, StopRule,
                             check_eps_sigma, ergodic_average, ergodic_point,
                             initial_gap_constant, iteration_bound,
                             lalm_instance, run, step)
from asyncbcu.stepsize import serial_plan
from asyncbcu.trace import RunTrace
from asyncbcu.utils import make_streams


#--------------------------------------------------------------------
# State
#--------------------------------------------------------------------

def test_initial_state(desk_qp):
    state = SaddleState.initial(desk_qp)
    assert state.k == 0
    assert np.allclose(state.r, -desk_qp.constraint.rhs)
    assert np.all(state.lam == 0.0)
    with pytest.raises(StructuralError):
        SaddleState.initial(desk_qp, np.zeros(desk_qp.n + 1))


def test_ergodic_before_first_update(eq_qp):
    state = SaddleState.initial(eq_qp)
    with pytest.raises(StateError):
        state.ergodic_average(eq_qp.m)
    with pytest.raises(StateError):
        ergodic_point(state, eq_qp.m)


def test_residual_and_multiplier_recursion(tiny_ncqp):
    plan  = serial_plan(tiny_ncqp, 1.0)
    state = SaddleState.initial(tiny_ncqp)
    rng   = make_streams(4)[0]
    rsum  = np.zeros(tiny_ncqp.q)
    for k in range(300):
        step(tiny_ncqp, state, plan, rng)
        rsum += state.r
    assert state.k == 300
    assert np.allclose(state.r, residual(tiny_ncqp, state.x), atol=1e-9)
    assert np.allclose(state.lam, -plan.rho*rsum, atol=1e-9)


def test_lazy_ergodic_sum_matches_history(desk_qp):
    plan = serial_plan(desk_qp, 1.0)
    state, trace = run(desk_qp, RunConfig(plan, max_epochs=7, seed=3,
                                          keep_history=True))
    hist = np.array(state.history)
    m, K = desk_qp.m, state.k - 1
    assert state.ergodic_count == K
    assert np.allclose(state.ergodic_sum, hist[1:].sum(axis=0))
    assert np.allclose(ergodic_point(state, m),
                       (hist[-1] + hist[1:].sum(axis=0))/(1.0 + K/m))
    assert np.allclose(ergodic_average(state, m),
                       (hist[-1] + hist[1:].sum(axis=0)/m)/(1.0 + K/m))


def test_ergodic_weights_on_constant_iterates(eq_qp):
    # a state that never moves: x^t = c for every t
    c = np.array([0.3, 0.7])
    state = SaddleState.initial(eq_qp, c)
    for k in range(9):
        state.apply_block(eq_qp, k % 2, c[k % 2:k % 2 + 1], 0.5)
    m, K = eq_qp.m, state.ergodic_count
    assert K == 8
    assert np.allclose(ergodic_point(state, m), c*(1.0 + K)/(1.0 + K/m))
    assert np.allclose(ergodic_average(state, m), c)


def test_copy_is_independent(eq_qp):
    state = SaddleState.initial(eq_qp)
    state.apply_block(eq_qp, 0, np.array([1.0]), 0.5)
    twin = state.copy()
    state.apply_block(eq_qp, 1, np.array([2.0]), 0.5)
    assert twin.k == 1 and np.array_equal(twin.x, [1.0, 0.0])
    assert np.allclose(twin.ergodic_sum, 0.0)

#--------------------------------------------------------------------
# Runs
#--------------------------------------------------------------------

def test_same_seed_same_trace(tiny_ncqp):
    cfg = RunConfig(serial_plan(tiny_ncqp, 1.0), max_epochs=5, seed=11,
                    timing=False)
    a = run(tiny_ncqp, cfg)[1]
    b = run(tiny_ncqp, cfg)[1]
    assert a.to_csv() == b.to_csv()
    c = run(tiny_ncqp, RunConfig(cfg.plan, max_epochs=5, seed=12,
                                 timing=False))[1]
    assert not a.same_trajectory(c)


def test_trace_every_keeps_last_epoch(eq_qp):
    cfg = RunConfig(serial_plan(eq_qp, 1.0), max_epochs=10, trace_every=3)
    trace = run(eq_qp, cfg)[1]
    assert list(trace.column("epoch")) == [3, 6, 9, 10]
    assert trace.header["mode"] == "serial"
    assert trace.header["initial_feas"] == pytest.approx(1.0)


def test_zero_epochs_gives_empty_trace(eq_qp):
    state, trace = run(eq_qp, RunConfig(serial_plan(eq_qp, 1.0),
                                        max_epochs=0))
    assert len(trace) == 0 and state.k == 0


def test_config_validation(eq_qp):
    plan = serial_plan(eq_qp, 1.0)
    with pytest.raises(ParameterError):
        RunConfig(plan, max_epochs=-1)
    with pytest.raises(ParameterError):
        RunConfig(plan, trace_every=0)


def test_plan_must_match_instance(eq_qp, desk_qp):
    with pytest.raises(StructuralError):
        run(eq_qp, RunConfig(serial_plan(desk_qp, 1.0), max_epochs=1))


def test_serial_run_reaches_kkt_point(desk_qp):
    cfg = RunConfig(serial_plan(desk_qp, 1.0), max_epochs=20000, seed=0,
                    trace_every=50, stop=StopRule(feas_tol=1e-8,
                                                  obj_tol=1e-8))
    state, trace = run(desk_qp, cfg)
    assert trace.final()["epoch"] < 20000
    assert np.allclose(state.x, desk_qp.optimum.x_star, atol=1e-3)
    assert np.allclose(state.lam, desk_qp.optimum.lambda_star, atol=1e-2)


def test_stop_rule_without_optimum(tiny_ncqp):
    state = SaddleState.initial(tiny_ncqp)
    assert not StopRule().met(tiny_ncqp, state)
    assert not StopRule(feas_tol=1e9, obj_tol=1.0).met(tiny_ncqp, state)
    assert StopRule(feas_tol=1e9).met(tiny_ncqp, state)


@pytest.mark.slow
def test_ergodic_feasibility_decays_like_one_over_k(desk_qp):
    slopes = []
    for seed in range(5):
        cfg = RunConfig(serial_plan(desk_qp, 1.0), max_epochs=5000, seed=seed,
                        trace_every=10, timing=False)
        trace = run(desk_qp, cfg)[1]
        ep, feas = trace.column("epoch"), trace.column("ergodic_feas")
        last = ep >= 1000
        slopes.append(np.polyfit(np.log(ep[last]), np.log(feas[last]), 1)[0])
    assert np.mean(slopes) <= -0.9, slopes


def test_lalm_is_one_block(desk_qp):
    one = lalm_instance(desk_qp)
    plan = serial_plan(one, 1.0)
    assert one.m == 1 and plan.rho == 1.0
    cfg = RunConfig(plan, max_epochs=20000, trace_every=100,
                    stop=StopRule(feas_tol=1e-8, obj_tol=1e-8))
    state, trace = run(one, cfg)
    assert np.allclose(state.x, desk_qp.optimum.x_star, atol=1e-3)

#--------------------------------------------------------------------
# Solution quality tools
#--------------------------------------------------------------------

def test_gap_constant_and_bound(eq_qp):
    plan = serial_plan(eq_qp, 1.0)
    C0   = initial_gap_constant(eq_qp, plan, eq_qp.optimum)
    assert C0 == pytest.approx(0.375, rel=2e-3)
    K = iteration_bound(0.375, 2, 0.5, 0.5, 1e-2, 0.2)
    assert 3498 <= K <= 3499
    with pytest.raises(ParameterError):
        iteration_bound(0.375, 2, 0.5, 0.5, 1e-2, 1.0)


@pytest.mark.slow
def test_iteration_bound_delivers_eps_sigma_solutions(eq_qp):
    plan = serial_plan(eq_qp, 1.0)
    opt  = eq_qp.optimum
    C0   = initial_gap_constant(eq_qp, plan, opt)
    K    = iteration_bound(C0, eq_qp.m, plan.rho,
                           float(np.linalg.norm(opt.lambda_star)), 1e-2, 0.2)
    epochs = -(-K//eq_qp.m)
    traces = [run(eq_qp, RunConfig(plan, max_epochs=epochs, seed=seed,
                                   trace_every=epochs, timing=False))[1]
              for seed in range(20)]
    assert all(t.final()["epoch"] == epochs for t in traces)
    assert check_eps_sigma(traces, 1e-2, 0.2)


def _fake_trace(obj, feas, epoch=10):
    return RunTrace({}, [{"epoch": epoch, "obj_err": obj, "feas": feas,
                          "ergodic_obj_err": obj, "ergodic_feas": feas,
                          "wall_ms": 0.0}])


def test_eps_sigma_frequencies():
    good = [_fake_trace(1e-4, 1e-4) for i in range(18)]
    bad  = [_fake_trace(1.0, 1e-4) for i in range(2)]
    assert check_eps_sigma(good + bad, 1e-3, 0.1)
    assert not check_eps_sigma(good + bad, 1e-3, 0.05)
    with pytest.raises(ParameterError):
        check_eps_sigma(good, 1e-3, 0.1)
    with pytest.raises(ParameterError):
        check_eps_sigma(good + [_fake_trace(0, 0, epoch=5)]*2, 1e-3, 0.1)
    with pytest.raises(UnsupportedError):
        check_eps_sigma([_fake_trace(np.nan, 0.0)]*20, 1e-3, 0.1)
