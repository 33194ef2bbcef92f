# Copyright 2026 The asyncbcu developers, MIT license

import numpy as np
import pytest
import scipy.linalg as linalg

from asyncbcu.instances import (GeneratorSpec, ReferenceSolution,
                                gen_basis_pursuit, gen_dual_svm, gen_ncqp,
                                gen_svm_dataset)
from asyncbcu.problem import (BlockPartition, ConstraintBlocks,
                              ProblemInstance, ProxTerm, QuadraticSmooth)


def equality_qp(n=12, q=3, m=4, seed=0):
    """
    min 1/2 x.T Q x + c.T x  s.t.  A x = b, with Q = I + 0.1 B B.T and
    the optimum from the KKT linear system.

    """

    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    Q = np.eye(n) + 0.1*B @ B.T
    c = rng.standard_normal(n)
    A = rng.standard_normal((q, n))
    b = rng.standard_normal(q)

    K = np.block([[Q, -A.T], [A, np.zeros((q, q))]])
    sol = linalg.solve(K, np.concatenate([-c, b]))
    x_star, lam_star = sol[:n], sol[n:]
    f_star = 0.5*x_star @ Q @ x_star + c @ x_star

    part = BlockPartition.even(n, m)
    inst = ProblemInstance(part, ConstraintBlocks.from_matrix(A, b, part),
                           QuadraticSmooth(Q, c, part), ProxTerm.zero(),
                           metadata={"family": "equality_qp", "seed": seed})
    return inst.with_optimum(ReferenceSolution(x_star, lam_star, f_star, 0.0,
                                               "kkt"))


def two_variable_qp():
    """min 1/2 ||x||^2 s.t. x1 + x2 = 1: x* = (.5, .5), lambda* = .5."""
    part = BlockPartition.coordinates(2)
    inst = ProblemInstance(part,
                           ConstraintBlocks.from_matrix(np.ones((1, 2)),
                                                        [1.0], part),
                           QuadraticSmooth(np.eye(2), np.zeros(2), part),
                           ProxTerm.zero())
    return inst.with_optimum(ReferenceSolution(np.array([0.5, 0.5]),
                                               np.array([0.5]), 0.25, 0.0,
                                               "analytic"))


@pytest.fixture
def eq_qp():
    return two_variable_qp()


@pytest.fixture
def desk_qp():
    return equality_qp()


@pytest.fixture
def tiny_bp():
    return gen_basis_pursuit(GeneratorSpec("basis_pursuit", seed=1, q=20,
                                           n=60, nnz=4, block_count=10))


@pytest.fixture
def tiny_ncqp():
    return gen_ncqp(GeneratorSpec("ncqp", seed=2, q=5, n=20))


@pytest.fixture
def tiny_svm():
    data = gen_svm_dataset(40, 60, density=0.1, seed=3)
    return gen_dual_svm(data, C=1.0, block_width=5)
