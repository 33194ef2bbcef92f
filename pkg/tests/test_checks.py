# Copyright 2026 The asyncbcu developers, MIT license

import numpy as np
import pytest

from asyncbcu import checks
from asyncbcu.problem import ConstraintBlocks, ProblemInstance
from asyncbcu.trace import RunTrace


@pytest.mark.parametrize("name", ["tiny_ncqp", "tiny_svm", "desk_qp"])
def test_generated_instances_pass(request, name):
    inst = request.getfixturevalue(name)
    results = checks.verify(inst, seed=1, solve_reference=False)
    failed = [str(r) for r in results if not r.passed]
    assert not failed, failed


def test_basis_pursuit_passes_with_certified_optimum(tiny_bp):
    results = checks.verify(tiny_bp)
    failed  = [str(r) for r in results if not r.passed]
    assert not failed, failed


def test_point_without_multiplier_is_not_a_reference(tiny_bp):
    opt  = tiny_bp.optimum
    bare = type(opt)(opt.x_star, None, opt.f_star, 0.0, "planted")
    result = checks.check_reference(tiny_bp.with_optimum(bare))
    assert not result.passed
    assert "without multiplier" in result.detail


@pytest.mark.parametrize("scale", [0.5, 0.96, 1.0 - 1e-4])
def test_understated_block_norms_are_caught(desk_qp, scale):
    assert checks.check_spectral_bounds(desk_qp).passed
    cb = desk_qp.constraint
    low = ConstraintBlocks(cb.blocks, cb.rhs, scale*cb.per_block_sq_norm)
    inst = ProblemInstance(desk_qp.partition, low, desk_qp.smooth,
                           desk_qp.prox_terms)
    result = checks.check_spectral_bounds(inst)
    assert not result.passed


def test_wrong_reference_is_caught(desk_qp):
    opt = desk_qp.optimum
    bad = type(opt)(opt.x_star + 0.1, opt.lambda_star, opt.f_star, 0.0,
                    "kkt")
    assert checks.check_reference(desk_qp).passed
    assert not checks.check_reference(desk_qp.with_optimum(bad)).passed


def test_understated_lipschitz_is_caught(desk_qp):
    smooth = desk_qp.smooth.with_lipschitz(np.full(desk_qp.m, 1e-3), 1e-3)
    result = checks.check_lipschitz(desk_qp.with_smooth(smooth))
    assert not result.passed


def test_trace_check_reports_instead_of_raising():
    row = {"epoch": 2, "obj_err": 0.0, "feas": 0.0, "ergodic_obj_err": 0.0,
           "ergodic_feas": 0.0, "wall_ms": 0.0}
    result = checks.check_trace(RunTrace({}, [row, dict(row)]))
    assert not result.passed
    assert "StructuralError" in result.detail


def test_report_frame(tiny_ncqp):
    frame = checks.report(checks.verify(tiny_ncqp, solve_reference=False))
    assert list(frame.columns) == ["check", "passed", "detail"]
    assert frame["passed"].all()
    assert len(frame) == 8
