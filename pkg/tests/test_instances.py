# Copyright 2026 The asyncbcu developers, MIT license

import numpy as np
import pytest
import scipy.sparse as sp

from asyncbcu.errors import (IngestionError, OracleFailure, ParameterError,
                             UnsupportedError)
from asyncbcu.instances import (GeneratorSpec, LabeledDataset, gen_dual_svm,
                                gen_svm_dataset, generate, kkt_residual,
                                load_instance, planted_certificate,
                                read_libsvm, reference_solve, save_instance,
                                write_libsvm)
from asyncbcu.problem import (BlockPartition, CallableSmooth, ConstraintBlocks,
                              ProblemInstance, ProxTerm, QuadraticSmooth,
                              objective, residual)

#--------------------------------------------------------------------
# Generators
#--------------------------------------------------------------------

def test_basis_pursuit_instance(tiny_bp):
    A = tiny_bp.constraint.full_matrix()
    assert np.allclose(np.linalg.norm(A, axis=1), 1.0)
    opt = tiny_bp.optimum
    assert opt.lambda_star is not None
    assert kkt_residual(tiny_bp, opt.x_star, opt.lambda_star) <= 1e-6
    if (opt.method == "planted"):
        assert np.count_nonzero(opt.x_star) == 4
    assert np.allclose(residual(tiny_bp, opt.x_star), 0.0, atol=1e-12)
    assert opt.f_star == pytest.approx(np.abs(opt.x_star).sum())
    assert all(t.kind == "l1" for t in tiny_bp.prox_terms)


def test_certificate_of_a_planted_signal():
    x   = np.array([1.5, 0.0, -2.0, 0.0, 0.0])
    lam = planted_certificate(np.eye(5), x)
    assert np.allclose(lam, [1.0, 0.0, -1.0, 0.0, 0.0])
    assert np.array_equal(planted_certificate(np.eye(3), np.zeros(3)),
                          np.zeros(3))


@pytest.mark.parametrize("A, x", [
    (np.ones((1, 2)), np.array([1.0, 0.0])),
    (np.ones((1, 3)), np.array([1.0, 1.0, 0.0])),
    (np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 1.0]]), np.array([1.0, 1.0, 0.0]))])
def test_no_certificate(A, x):
    assert planted_certificate(A, x) is None


def test_dense_signal_gets_a_solved_reference():
    spec = GeneratorSpec("basis_pursuit", seed=0, q=10, n=50, nnz=20,
                         block_count=10)
    opt  = generate(spec).optimum
    assert opt.method == "lalm"
    assert opt.f_star == pytest.approx(4.5713, rel=1e-3)
    assert opt.lambda_star is not None and opt.kkt_residual <= 1e-6


def test_basis_pursuit_default_blocks():
    inst = generate(GeneratorSpec("basis_pursuit", q=10, n=300, nnz=3))
    assert inst.m == 100


def test_ncqp_instance(tiny_ncqp):
    A = tiny_ncqp.constraint.full_matrix()
    assert np.allclose(A[:, -5:], np.eye(5))
    b = tiny_ncqp.constraint.rhs
    assert np.all((b >= 0.0) & (b <= 1.0))
    x = np.concatenate([np.zeros(15), b])
    assert np.allclose(residual(tiny_ncqp, x), 0.0)
    assert tiny_ncqp.m == 20
    assert np.all(np.linalg.eigvalsh(tiny_ncqp.smooth.Q) >= -1e-9)


def test_generators_are_seeded():
    spec = GeneratorSpec("ncqp", seed=8, q=3, n=9)
    a, b = generate(spec), generate(spec)
    assert np.array_equal(a.smooth.Q, b.smooth.Q)
    assert np.array_equal(a.constraint.rhs, b.constraint.rhs)
    c = generate(GeneratorSpec("ncqp", seed=9, q=3, n=9))
    assert not np.array_equal(a.smooth.Q, c.smooth.Q)


def test_dual_svm_instance(tiny_svm):
    assert tiny_svm.n == 40 and tiny_svm.q == 1 and tiny_svm.m == 8
    assert np.allclose(tiny_svm.constraint.per_block_sq_norm, 5.0)
    assert all(t.kind == "box" and t.hi == 1.0 for t in tiny_svm.prox_terms)
    assert tiny_svm.smooth.kind == "gram"
    theta = np.full(40, 0.5)
    assert np.isfinite(objective(tiny_svm, theta))
    assert objective(tiny_svm, np.full(40, 2.0)) == np.inf


def test_dual_svm_block_count():
    data = gen_svm_dataset(10, 4, density=0.5, seed=0)
    inst = gen_dual_svm(data, C=1.0, block_count=4)
    assert inst.m == 4
    assert sorted(inst.partition.widths) == [2, 2, 3, 3]
    inst = generate(GeneratorSpec("dual_svm", seed=0, n_samples=10,
                                  n_features=4, block_count=3))
    assert inst.m == 3


def test_dual_svm_rejects_bad_labels():
    X = sp.csr_matrix(np.eye(3))
    with pytest.raises(IngestionError):
        gen_dual_svm(LabeledDataset(X, np.array([1.0, 0.0, -1.0])))
    with pytest.raises(ParameterError):
        gen_dual_svm(LabeledDataset(X, np.array([1.0, -1.0, 1.0])), C=0.0)


@pytest.mark.parametrize("kw", [
    {"family": "lasso"},
    {"family": "basis_pursuit", "q": 0, "n": 5},
    {"family": "basis_pursuit", "q": 2, "n": 5, "nnz": 6},
    {"family": "ncqp", "q": 5, "n": 5},
    {"family": "dual_svm", "C": -1.0, "n_samples": 5, "n_features": 2},
    {"family": "dual_svm"},
    {"family": "ncqp", "q": 2, "n": 5, "block_count": 2, "block_width": 2}])
def test_bad_specs(kw):
    with pytest.raises(ParameterError):
        GeneratorSpec(**kw)


def test_synthetic_svm_through_generate():
    inst = generate(GeneratorSpec("dual_svm", seed=1, n_samples=30,
                                  n_features=10, density=0.2,
                                  block_width=10))
    assert inst.n == 30 and inst.m == 3
    assert inst.metadata["seed"] == 1

#--------------------------------------------------------------------
# LIBSVM files
#--------------------------------------------------------------------

def test_libsvm_file_is_read_back(tmp_path):
    data = gen_svm_dataset(25, 12, density=0.3, seed=4)
    path = tmp_path/"data.svm"
    write_libsvm(data, path)
    back = read_libsvm(path)
    assert np.array_equal(back.y, data.y)
    assert back.X.shape[0] == 25
    dense = np.zeros((25, data.n_features))
    dense[:, :back.n_features] = back.X.toarray()
    assert np.array_equal(dense, data.X.toarray())


def test_libsvm_comments_and_blank_lines(tmp_path):
    path = tmp_path/"small.svm"
    path.write_text("# header\n+1 1:0.5 3:2\n\n-1 2:1.5  # trailing\n")
    data = read_libsvm(path)
    assert list(data.y) == [1.0, -1.0]
    assert data.X.toarray().tolist() == [[0.5, 0.0, 2.0], [0.0, 1.5, 0.0]]


@pytest.mark.parametrize("line", ["x 1:1", "1 1:1 1:2", "1 0:1", "1 2:a",
                                  "1 3"])
def test_libsvm_errors_name_the_line(tmp_path, line):
    path = tmp_path/"bad.svm"
    path.write_text("1 1:1\n" + line + "\n")
    with pytest.raises(IngestionError) as info:
        read_libsvm(path)
    assert info.value.lineno == 2
    assert "line 2" in str(info.value)


def test_libsvm_rejects_binary_lines(tmp_path):
    path = tmp_path/"bad.svm"
    path.write_bytes(b"1 1:1\n\xff\xfe 1:2\n")
    with pytest.raises(IngestionError) as info:
        read_libsvm(path)
    assert info.value.lineno == 2

#--------------------------------------------------------------------
# Reference solutions
#--------------------------------------------------------------------

def test_reference_solve_matches_kkt_system(desk_qp):
    ref = reference_solve(desk_qp, tol=1e-10)
    assert ref.method == "lalm"
    assert np.allclose(ref.x_star, desk_qp.optimum.x_star, atol=1e-7)
    assert np.allclose(ref.lambda_star, desk_qp.optimum.lambda_star,
                       atol=1e-6)
    assert ref.f_star == pytest.approx(desk_qp.optimum.f_star, abs=1e-8)


def test_reference_solve_basis_pursuit(tiny_bp):
    ref = reference_solve(tiny_bp, tol=1e-8)
    assert np.linalg.norm(residual(tiny_bp, ref.x_star)) <= 1e-6
    # a second solve cannot beat the attached optimum
    assert ref.f_star <= tiny_bp.optimum.f_star + 1e-6
    assert np.max(np.abs(tiny_bp.constraint.full_matrix().T
                         @ ref.lambda_star)) <= 1.0 + 1e-5


def _conditioned_ncqp(seed=0, n=8, q=2):
    """min 1/2 x.T Q x + c.T x  s.t. [B, I] x = b, x >= 0, Q = I + 0.1 H H.T"""
    rng  = np.random.default_rng(seed)
    H    = rng.standard_normal((n, n))
    A    = np.hstack([rng.standard_normal((q, n - q)), np.eye(q)])
    part = BlockPartition.coordinates(n)
    return ProblemInstance(part,
                           ConstraintBlocks.from_matrix(
                               A, rng.uniform(0.0, 1.0, q), part),
                           QuadraticSmooth(np.eye(n) + 0.1*H @ H.T,
                                           rng.standard_normal(n), part),
                           ProxTerm.nonneg())


def test_reference_solve_nonnegative_qp():
    inst = _conditioned_ncqp()
    ref  = reference_solve(inst, tol=1e-9)
    goal = 1e-9*(1.0 + np.linalg.norm(inst.constraint.rhs))
    assert np.all(ref.x_star >= 0.0)
    assert kkt_residual(inst, ref.x_star, ref.lambda_star) <= goal
    assert ref.kkt_residual <= goal


def test_reference_solve_two_variable_qp(eq_qp):
    ref = reference_solve(eq_qp, tol=1e-10)
    assert np.allclose(ref.x_star, [0.5, 0.5], atol=1e-8)
    assert np.allclose(ref.lambda_star, [0.5], atol=1e-8)


def test_reference_solve_zero_signal():
    inst = generate(GeneratorSpec("basis_pursuit", seed=2, q=5, n=20, nnz=0,
                                  block_count=4))
    ref = reference_solve(inst)
    assert np.all(ref.x_star == 0.0) and ref.f_star == 0.0


def test_reference_solve_budget(desk_qp):
    with pytest.raises(OracleFailure):
        reference_solve(desk_qp, tol=1e-12, max_iter=10)


def test_reference_solve_needs_known_oracle(eq_qp):
    part = eq_qp.partition
    f = CallableSmooth(lambda x: 0.0, lambda x, i: np.zeros(1), part,
                       np.ones(2), 1.0)
    inst = ProblemInstance(part, eq_qp.constraint, f, eq_qp.prox_terms)
    with pytest.raises(UnsupportedError):
        reference_solve(inst)
    with pytest.raises(UnsupportedError):
        save_instance(inst, "unused.npz")

#--------------------------------------------------------------------
# Instance files
#--------------------------------------------------------------------

@pytest.mark.parametrize("name", ["tiny_bp", "tiny_ncqp", "tiny_svm",
                                  "desk_qp"])
def test_instance_file_keeps_the_program(tmp_path, request, name):
    inst = request.getfixturevalue(name)
    path = tmp_path/"inst.npz"
    save_instance(inst, path)
    back = load_instance(path)
    assert back.partition == inst.partition
    assert back.prox_terms == inst.prox_terms
    assert np.array_equal(back.constraint.per_block_sq_norm,
                          inst.constraint.per_block_sq_norm)
    x = np.random.default_rng(0).uniform(0.0, 1.0, inst.n)
    assert np.allclose(residual(back, x), residual(inst, x))
    assert objective(back, x) == pytest.approx(objective(inst, x))
    if (inst.optimum is None):
        assert back.optimum is None
    else:
        assert back.optimum.f_star == inst.optimum.f_star
        assert np.array_equal(back.optimum.x_star, inst.optimum.x_star)
