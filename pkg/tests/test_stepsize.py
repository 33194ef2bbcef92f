# Copyright 2026 The asyncbcu developers, MIT license

import numpy as np
import pytest
import scipy.linalg as linalg

from asyncbcu.errors import ParameterError, UnsupportedError
from asyncbcu.problem import (BlockPartition, CallableSmooth,
                              ConstraintBlocks, ProblemInstance, ProxTerm)
from asyncbcu.stepsize import (StepsizePlan, async_plan, ensure_lipschitz,
                               estimate_lipschitz, serial_plan,
                               sync_parallel_plan, sync_plan)


def test_serial_plan_weights(desk_qp):
    plan = serial_plan(desk_qp, 3.0)
    L, _ = estimate_lipschitz(desk_qp)
    assert plan.rho == pytest.approx(3.0/desk_qp.m)
    assert np.allclose(plan.eta,
                       L + 3.0*desk_qp.constraint.per_block_sq_norm)
    assert plan.mode == "serial" and plan.tau == 0


def test_quadratic_constants_are_exact(desk_qp):
    L, L_r = estimate_lipschitz(desk_qp)
    Q = desk_qp.smooth.Q
    for i, (lo, hi) in enumerate(desk_qp.partition.ranges):
        assert L[i] == pytest.approx(linalg.eigvalsh(Q[lo:hi, lo:hi])[-1])
    cross = max(linalg.svdvals(Q[:, lo:hi])[0]
                for lo, hi in desk_qp.partition.ranges)
    assert L_r == pytest.approx(cross)


def test_gram_constants_bound_dense_gram(tiny_svm):
    L, L_r = estimate_lipschitz(tiny_svm)
    Z = tiny_svm.smooth.Z.toarray()
    G = Z @ Z.T
    for i, (lo, hi) in enumerate(tiny_svm.partition.ranges):
        true = linalg.eigvalsh(G[lo:hi, lo:hi])[-1]
        assert 0.95*true <= L[i] <= 1.01*true
    true_r = max(linalg.svdvals(G[:, lo:hi])[0]
                 for lo, hi in tiny_svm.partition.ranges)
    assert 0.95*true_r <= L_r <= 1.01*true_r


def test_zero_smooth_has_zero_constants(tiny_bp):
    L, L_r = estimate_lipschitz(tiny_bp)
    assert np.all(L == 0.0) and L_r == 0.0


def test_callable_oracle_needs_constants(eq_qp):
    part = eq_qp.partition
    f = CallableSmooth(lambda x: 0.0, lambda x, i: np.zeros(1), part)
    inst = ProblemInstance(part, eq_qp.constraint, f, ProxTerm.zero())
    with pytest.raises(UnsupportedError):
        serial_plan(inst, 1.0)
    g = f.with_lipschitz(np.ones(2), 1.0)
    assert serial_plan(inst.with_smooth(g), 1.0).eta.size == 2


def test_async_plan_reduces_to_serial_at_zero_delay(tiny_ncqp):
    assert async_plan(tiny_ncqp, 1.5, 0).same_as(serial_plan(tiny_ncqp, 1.5))


def test_async_weights_grow_with_delay(tiny_ncqp):
    etas = [async_plan(tiny_ncqp, 1.0, tau).eta for tau in (1, 2, 4, 8)]
    for a, b in zip(etas, etas[1:]):
        assert np.all(b > a)
    assert np.all(etas[0] > serial_plan(tiny_ncqp, 1.0).eta)


def test_async_plan_formula(desk_qp):
    inst = ensure_lipschitz(desk_qp)
    L    = inst.smooth.lipschitz_blocks
    L_r  = inst.smooth.lipschitz_cross
    L_c  = L.max()
    m, tau, alpha = inst.m, 3, 0.5
    want = (L + alpha*L_c + tau*L/m + (L_r/L_c/alpha + 2.0)*L_r*tau**2/m
            + 2.0*inst.constraint.per_block_sq_norm)
    plan = async_plan(inst, 2.0, tau, alpha)
    assert np.allclose(plan.eta, want)
    assert plan.mode == "async" and plan.tau == 3


def test_async_plan_without_smooth_part(tiny_bp):
    plan = async_plan(tiny_bp, 1.0, 5)
    assert np.allclose(plan.eta, serial_plan(tiny_bp, 1.0).eta)


def test_sync_group_weights_sum(tiny_ncqp):
    base  = serial_plan(tiny_ncqp, 1.0)
    group = [3, 0, 7]
    eta   = sync_parallel_plan(tiny_ncqp, 1.0, group)
    assert np.allclose(eta, base.eta[group].sum())
    assert np.allclose(sync_parallel_plan(tiny_ncqp, 1.0, [5]), base.eta[5])


def test_sync_plan_validates_group(tiny_ncqp):
    plan = sync_plan(tiny_ncqp, 1.0, 4)
    assert plan.mode == "sync" and plan.group_size == 4
    with pytest.raises(ParameterError):
        sync_plan(tiny_ncqp, 1.0, tiny_ncqp.m + 1)
    with pytest.raises(ParameterError):
        sync_parallel_plan(tiny_ncqp, 1.0, [])


def test_plan_invariants():
    with pytest.raises(ParameterError):
        StepsizePlan(beta=1.0, rho=0.6, eta=np.ones(2))
    with pytest.raises(ParameterError):
        StepsizePlan(beta=1.0, rho=0.5, eta=np.array([1.0, 0.0]))
    with pytest.raises(ParameterError):
        StepsizePlan(beta=0.0, rho=0.5, eta=np.ones(2))
    with pytest.raises(ParameterError):
        StepsizePlan(beta=1.0, rho=0.5, eta=np.ones(2), mode="fast")
    plan = StepsizePlan(beta=1.0, rho=0.5, eta=np.ones(2))
    assert plan.with_rho(0.1).rho == 0.1
    with pytest.raises(ValueError):
        plan.eta[0] = 2.0


def test_held_serial_weights_are_marked(tiny_ncqp):
    plan = serial_plan(tiny_ncqp, 1.0).held_for_delay(4)
    assert plan.serial_weights and plan.tau == 4 and plan.mode == "async"
    assert np.array_equal(plan.eta, serial_plan(tiny_ncqp, 1.0).eta)
    assert plan.as_dict()["serial_weights"] is True


@pytest.mark.parametrize("beta", [0.0, -1.0, np.nan])
def test_beta_must_be_positive(eq_qp, beta):
    with pytest.raises(ParameterError):
        serial_plan(eq_qp, beta)
