# Copyright 2026 The asyncbcu developers, MIT license

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from asyncbcu.errors import ParameterError
from asyncbcu.problem import ProxTerm
from asyncbcu.prox import ScaledProxQuery, prox_apply, solve_block_subproblem
from asyncbcu.serial import SaddleState
from asyncbcu.stepsize import serial_plan

TERMS = [ProxTerm.zero(), ProxTerm.l1(0.7), ProxTerm.l1(2.0),
         ProxTerm.nonneg(), ProxTerm.box(-0.5, 1.5)]


def _brute(a, w, term):
    """1-d prox by bounded scalar minimization over dom(g)."""
    lo = max(term.lo, a - 20.0)
    hi = min(term.hi, a + 20.0)
    if (lo >= hi):
        lo, hi = term.lo, term.hi if np.isfinite(term.hi) else term.lo + 1.0
    phi = lambda y: term.value(np.array([y])) + (y - a)**2/(2.0*w)
    res = minimize_scalar(phi, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    return res.x, phi


def test_prox_matches_scalar_minimization():
    rng = np.random.default_rng(7)
    for t in range(1000):
        term = TERMS[t % len(TERMS)]
        a    = 5.0*rng.standard_normal()
        w    = float(rng.uniform(0.05, 3.0))
        y    = prox_apply(ScaledProxQuery(np.array([a]), w, term))[0]
        y_bf, phi = _brute(a, w, term)
        assert phi(y) <= phi(y_bf) + 1e-9
        assert abs(y - y_bf) < 1e-4


def test_soft_threshold_tie_goes_to_zero():
    y = prox_apply(ScaledProxQuery(np.array([1.0, -1.0, 1.5]), 0.5,
                                   ProxTerm.l1(2.0)))
    assert np.array_equal(y, [0.0, 0.0, 0.5])


def test_indicator_prox_is_projection():
    a = np.array([-3.0, 0.2, 9.0])
    assert np.array_equal(prox_apply(ScaledProxQuery(a, 1.0,
                                                     ProxTerm.box(0, 1))),
                          [0.0, 0.2, 1.0])
    assert np.array_equal(prox_apply(ScaledProxQuery(a, 4.0,
                                                     ProxTerm.nonneg())),
                          [0.0, 0.2, 9.0])


def test_zero_prox_returns_copy():
    a = np.array([1.0, 2.0])
    q = ScaledProxQuery(a, 1.0, ProxTerm.zero())
    y = prox_apply(q)
    y[0] = 5.0
    assert q.anchor[0] == 1.0


@pytest.mark.parametrize("weight", [0.0, -1.0, np.inf, np.nan])
def test_bad_weight(weight):
    with pytest.raises(ParameterError):
        ScaledProxQuery(np.zeros(2), weight, ProxTerm.zero())


def test_block_subproblem_is_stationary(desk_qp):
    """Without a prox term the solution zeroes the subproblem gradient."""
    rng   = np.random.default_rng(3)
    state = SaddleState.initial(desk_qp, rng.standard_normal(desk_qp.n))
    state.lam[:] = rng.standard_normal(desk_qp.q)
    plan  = serial_plan(desk_qp, 2.0)
    for i in range(desk_qp.m):
        sl   = desk_qp.partition.slice(i)
        grad = desk_qp.smooth.block_grad(state.x, i)
        y    = solve_block_subproblem(desk_qp, state.x, state.r, state.lam, i,
                                      grad, plan.beta, plan.eta[i])
        lin  = grad - desk_qp.constraint.block_rmatvec(
            i, state.lam - plan.beta*state.r)
        assert np.allclose(lin + plan.eta[i]*(y - state.x[sl]), 0.0,
                           atol=1e-10)


def test_block_subproblem_needs_positive_eta(eq_qp):
    state = SaddleState.initial(eq_qp)
    with pytest.raises(ParameterError):
        solve_block_subproblem(eq_qp, state.x, state.r, state.lam, 0,
                               np.zeros(1), 1.0, 0.0)
