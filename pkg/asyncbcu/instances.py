# Copyright 2026 The asyncbcu developers, MIT license
"""
Test problems, data ingestion and reference solutions.

Families

   * basis pursuit  min ||x||_1  s.t. A x = b, Gaussian A with unit rows
                    and a planted sparse solution
   * NCQP           min 1/2 x.T Q x + c.T x  s.t. [B, I] x = b, x >= 0
   * dual SVM       min 1/2 ||X.T diag(y) theta||^2 - e.T theta
                    s.t. y.T theta = 0, 0 <= theta <= C

**Classes**

   * GeneratorSpec     - family, dimensions, seed and blocking
   * LabeledDataset    - sparse samples and +-1 labels
   * ReferenceSolution - x*, lambda*, F* and the KKT residual reached

**Functions**

   * gen_basis_pursuit, gen_ncqp, gen_dual_svm, gen_svm_dataset
   * generate          - dispatch on spec.family
   * read_libsvm, write_libsvm
   * reference_solve   - independent full-vector linearized ALM
   * kkt_residual
   * planted_certificate - dual certificate of a planted basis pursuit signal
   * save_instance, load_instance

|

"""

#-----------------------------------------------------
# Import main libraries and modules
#-----------------------------------------------------

import json
import logging
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.linalg as linalg

import asyncbcu.utils as utils
from asyncbcu.errors import (IngestionError, OracleFailure, ParameterError,
                             StructuralError, UnsupportedError)
from asyncbcu.problem import (BlockPartition, ConstraintBlocks, GramSmooth,
                              ProblemInstance, ProxTerm, QuadraticSmooth,
                              ZeroSmooth, objective)

logger = logging.getLogger(__name__)

FAMILIES = ("basis_pursuit", "ncqp", "dual_svm")

#-------------------------------------------------------------------------
# Specs and results
#-------------------------------------------------------------------------

@dataclass
class GeneratorSpec:

    """
    Parameters of a generated instance.

    *Parameters*

       family : str
          'basis_pursuit', 'ncqp' or 'dual_svm'
       seed : int
       q, n : int
          rows and columns of A (basis pursuit, NCQP)
       nnz : int
          nonzeros of the planted signal (basis pursuit)
       block_count, block_width : int, optional
          blocking, at most one of the two
       C : float
          box bound of the dual SVM, default 10
       source : str, optional
          LIBSVM file of the dual SVM
       n_samples, n_features, density : synthetic SVM data when no
          source is given

    |

    """

    family: str
    seed: int = 0
    q: int = 0
    n: int = 0
    nnz: int = 0
    block_count: Optional[int] = None
    block_width: Optional[int] = None
    C: float = 10.0
    source: Optional[str] = None
    n_samples: int = 0
    n_features: int = 0
    density: float = 0.05

    def __post_init__(self):
        if (self.family not in FAMILIES):
            raise ParameterError("unknown family %r" % (self.family,))
        if (self.block_count is not None and self.block_width is not None):
            raise ParameterError("give block_count or block_width, not both")
        if (self.family == "basis_pursuit"):
            if (self.q < 1 or self.n < 1):
                raise ParameterError("q and n must be positive")
            if (not 0 <= self.nnz <= self.n):
                raise ParameterError("need 0 <= nnz <= n, got nnz=%d, n=%d"
                                     % (self.nnz, self.n))
        elif (self.family == "ncqp"):
            if (self.q < 1 or self.n <= self.q):
                raise ParameterError("NCQP needs 0 < q < n")
        else:
            if (not self.C > 0.0):
                raise ParameterError("C must be positive")
            if (self.source is None
                    and (self.n_samples < 1 or self.n_features < 1)):
                raise ParameterError("synthetic SVM data needs n_samples "
                                     "and n_features")

    def as_dict(self):
        return asdict(self)


@dataclass
class LabeledDataset:
    """Rows of X (CSR, N x d) with labels y."""
    X: sp.csr_matrix
    y: np.ndarray
    name: str = ""

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]


@dataclass
class ReferenceSolution:

    """
    A certified primal-dual pair. Hand-built references may leave
    lambda_star as None; `checks.check_reference` does not accept them.

    |

    """

    x_star: np.ndarray
    lambda_star: Optional[np.ndarray]
    f_star: float
    kkt_residual: float
    method: str

    def as_dict(self):
        return {"f_star": self.f_star, "kkt_residual": self.kkt_residual,
                "method": self.method}

#-------------------------------------------------------------------------
# Generators
#-------------------------------------------------------------------------

def _partition(spec, n, default_count=None, default_width=None):
    if (spec.block_count is not None):
        return BlockPartition.even(n, spec.block_count)
    if (spec.block_width is not None):
        return BlockPartition.by_width(n, spec.block_width)
    if (default_count is not None):
        return BlockPartition.even(n, min(default_count, n))
    return BlockPartition.by_width(n, default_width)


def planted_certificate(A, x, margin=1e-9):
    """
    Dual certificate of a basis pursuit point: the least-norm lam with
    A_S.T lam = sign(x_S) on the support S of x.

    x is the unique minimizer of ||y||_1 subject to A y = A x when
    A_S has full column rank and ||A_j.T lam|| < 1 off the support.

    *Parameters*

    A : ndarray [q, n]
    x : ndarray [n]
    margin : float, optional
        required gap below 1 off the support

    *Returns*

    lam : ndarray [q] or None
        None when the certificate does not exist

    |

    """

    A       = np.asarray(A, dtype=float)
    support = np.flatnonzero(x)
    if (support.size == 0):
        return np.zeros(A.shape[0])
    if (support.size > A.shape[0]):
        return None
    AS = A[:, support]
    if (np.linalg.matrix_rank(AS) < support.size):
        return None
    s   = np.sign(x[support])
    lam = linalg.lstsq(AS.T, s)[0]
    if (np.linalg.norm(AS.T @ lam - s) > 1e-9*np.sqrt(support.size)):
        return None
    off = np.delete(np.arange(A.shape[1]), support)
    if (off.size and np.max(np.abs(A[:, off].T @ lam)) >= 1.0 - margin):
        return None
    return lam


def gen_basis_pursuit(spec):
    """
    Basis pursuit instance: Gaussian A normalized to unit Euclidean
    rows, planted x with `nnz` standard Gaussian entries at uniform
    positions, b = A x, f = 0, g_i = ||.||_1, even blocks (default 100).

    *Notes*

    The planted signal becomes the reference optimum only when
    `planted_certificate` proves it optimal. Otherwise the reference
    comes from `reference_solve`; if that fails too, the instance has
    no reference and obj_err is NaN.

    |

    """

    if (spec.family != "basis_pursuit"):
        raise ParameterError("spec is not a basis pursuit spec")
    rng  = utils.make_streams(spec.seed)[0]
    q, n = spec.q, spec.n

    A  = rng.standard_normal((q, n))
    A /= np.linalg.norm(A, axis=1)[:, None]
    xo = np.zeros(n)
    support = rng.choice(n, size=spec.nnz, replace=False)
    xo[support] = rng.standard_normal(spec.nnz)
    b  = A @ xo

    partition  = _partition(spec, n, default_count=100)
    constraint = ConstraintBlocks.from_matrix(A, b, partition)
    meta = {"family": "basis_pursuit", "seed": spec.seed,
            "row_norm": "euclidean", "spec": spec.as_dict()}
    logger.info("basis pursuit %d x %d, %d nonzeros, %d blocks",
                q, n, spec.nnz, partition.m)
    instance = ProblemInstance(partition, constraint, ZeroSmooth(partition),
                               ProxTerm.l1(1.0), None, meta)

    lam = planted_certificate(A, xo)
    if (lam is not None):
        optimum = ReferenceSolution(xo, lam, float(np.sum(np.abs(xo))),
                                    kkt_residual(instance, xo, lam, A),
                                    "planted")
        return instance.with_optimum(optimum)

    logger.warning("planted signal has no dual certificate, solving for "
                   "the reference optimum")
    try:
        return instance.with_optimum(reference_solve(instance))
    except OracleFailure as exc:
        logger.warning("basis pursuit instance left without reference: %s",
                       exc)
        return instance


def gen_ncqp(spec):
    """
    Nonnegative QP: Q = H H.T with Gaussian H, Gaussian c,
    A = [B, I] with Gaussian B (q x (n-q)), b uniform on [0, 1] so
    that x = (0, b) is feasible, g_i = indicator of x_i >= 0.
    Coordinate blocks by default.

    |

    """

    if (spec.family != "ncqp"):
        raise ParameterError("spec is not an NCQP spec")
    rng  = utils.make_streams(spec.seed)[0]
    q, n = spec.q, spec.n

    H = rng.standard_normal((n, n))
    Q = H @ H.T
    c = rng.standard_normal(n)
    B = rng.standard_normal((q, n - q))
    A = np.hstack([B, np.eye(q)])
    b = rng.uniform(0.0, 1.0, size=q)

    partition  = _partition(spec, n, default_width=1)
    constraint = ConstraintBlocks.from_matrix(A, b, partition)
    meta = {"family": "ncqp", "seed": spec.seed, "spec": spec.as_dict()}
    logger.info("NCQP n=%d q=%d, %d blocks", n, q, partition.m)
    return ProblemInstance(partition, constraint,
                           QuadraticSmooth(Q, c, partition),
                           ProxTerm.nonneg(), None, meta)


def gen_dual_svm(source, C=10.0, block_width=50, block_count=None):
    """
    Dual SVM instance of a labeled dataset. The Gram matrix is never
    formed: f(theta) = 1/2 ||Z.T theta||^2 - e.T theta with
    Z = diag(y) X. The constraint is y.T theta = 0, g_i the indicator
    of [0, C], blocks of `block_width` (the last absorbs the rest) or
    exactly `block_count` even blocks.

    *Parameters*

    source : LabeledDataset
    C : float, optional
        default = 10
    block_width : int, optional
        default = 50
    block_count : int, optional
        overrides block_width; widths differ by at most one

    |

    """

    y = np.asarray(source.y, dtype=float)
    if (y.size == 0):
        raise IngestionError("dataset has no samples")
    if (not np.all(np.isin(y, (-1.0, 1.0)))):
        raise IngestionError("labels must be -1 or +1")
    if (not C > 0.0):
        raise ParameterError("C must be positive")

    N = y.size
    Z = sp.diags(y) @ sp.csr_matrix(source.X, dtype=float)
    if (block_count is not None):
        partition = BlockPartition.even(N, block_count)
    else:
        partition = BlockPartition.by_width(N, block_width)
    constraint = ConstraintBlocks.from_matrix(
        y[None, :], np.zeros(1), partition,
        per_block_sq_norm=partition.widths.astype(float))
    meta = {"family": "dual_svm", "C": float(C), "dataset": source.name,
            "n_samples": N, "n_features": source.n_features,
            "nnz": int(source.X.nnz), "blocks": int(partition.m)}
    logger.info("dual SVM on %s: %d samples, %d features, %d blocks",
                source.name or "dataset", N, source.n_features, partition.m)
    return ProblemInstance(partition, constraint,
                           GramSmooth(Z, -np.ones(N), partition),
                           ProxTerm.box(0.0, C), None, meta)


def gen_svm_dataset(n_samples, n_features, density=0.05, seed=0, bias=True):
    """
    Synthetic sparse classification data. Labels are the signs of a
    random linear score plus a little noise; with `bias` a constant
    feature is appended.

    |

    """

    rng = utils.make_streams(seed)[0]
    X = sp.random(n_samples, n_features, density=density, format="csr",
                  random_state=rng, data_rvs=rng.standard_normal)
    w = rng.standard_normal(n_features)
    score = np.asarray(X @ w).ravel() + 0.1*rng.standard_normal(n_samples)
    y = np.where(score >= 0.0, 1.0, -1.0)
    if (bias):
        X = sp.hstack([X, sp.csr_matrix(np.ones((n_samples, 1)))],
                      format="csr")
    return LabeledDataset(X, y, "synthetic")


def generate(spec):
    """Instance of any family, GeneratorSpec fields echoed in metadata."""
    if (spec.family == "basis_pursuit"):
        return gen_basis_pursuit(spec)
    if (spec.family == "ncqp"):
        return gen_ncqp(spec)
    if (spec.source is not None):
        data = read_libsvm(spec.source)
    else:
        data = gen_svm_dataset(spec.n_samples, spec.n_features, spec.density,
                               spec.seed)
    width = spec.block_width if spec.block_width is not None else 50
    inst  = gen_dual_svm(data, spec.C, width, spec.block_count)
    inst.metadata.update({"seed": spec.seed, "spec": spec.as_dict()})
    return inst

#-------------------------------------------------------------------------
# LIBSVM format
#-------------------------------------------------------------------------

def read_libsvm(path):
    """
    Reads 'label idx:val idx:val ...' lines with 1-based, strictly
    increasing indices. Blank lines and text after '#' are ignored.

    *Returns*

    data : LabeledDataset
        X in CSR with 0-based columns, n_features = largest index

    |

    """

    rows, cols, vals, labels = [], [], [], []
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, 1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise IngestionError("not UTF-8 text (%s)" % exc.reason,
                                     lineno)
            line = line.split("#", 1)[0].strip()
            if (not line):
                continue
            tokens = line.split()
            try:
                label = float(tokens[0])
            except ValueError:
                raise IngestionError("bad label %r" % tokens[0], lineno)
            last = 0
            for tok in tokens[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    if (not sep):
                        raise ValueError
                    j = int(idx)
                    v = float(val)
                except ValueError:
                    raise IngestionError("bad entry %r" % tok, lineno)
                if (j <= last):
                    raise IngestionError("indices must be >= 1 and strictly "
                                         "increasing (%d after %d)"
                                         % (j, last), lineno)
                last = j
                rows.append(len(labels))
                cols.append(j - 1)
                vals.append(v)
            labels.append(label)

            if (len(labels) % 10000 == 0):
                logger.info("--- read %d samples", len(labels))

    n_features = max(cols) + 1 if cols else 0
    X = sp.csr_matrix((np.asarray(vals, dtype=float),
                       (np.asarray(rows, dtype=np.int64),
                        np.asarray(cols, dtype=np.int64))),
                      shape=(len(labels), n_features))
    y = np.asarray(labels, dtype=float)
    logger.info("read %s: %d samples, %d features, %d nonzeros, "
                "%d positive", path, X.shape[0], n_features, X.nnz,
                int(np.sum(y > 0)))
    return LabeledDataset(X, y, str(path))


def write_libsvm(data, path):
    """Writes `data` in LIBSVM format (values with 17 digits)."""
    X = sp.csr_matrix(data.X)
    X.sort_indices()
    with open(path, "w") as fh:
        for i in range(X.shape[0]):
            lo, hi = X.indptr[i], X.indptr[i+1]
            entries = " ".join("%d:%.17g" % (j + 1, v) for j, v in
                               zip(X.indices[lo:hi], X.data[lo:hi]))
            fh.write(("%g %s" % (data.y[i], entries)).rstrip() + "\n")

#-------------------------------------------------------------------------
# Reference solutions
#-------------------------------------------------------------------------

class _FullProx:
    """Vectorized prox of g = sum_i g_i on the whole vector."""

    def __init__(self, instance):
        n  = instance.n
        self.l1 = np.zeros(n)
        self.lo = np.full(n, -np.inf)
        self.hi = np.full(n, np.inf)
        for term, (lo, hi) in zip(instance.prox_terms,
                                  instance.partition.ranges):
            if (term.kind == "l1"):
                self.l1[lo:hi] = term.weight
            elif (term.is_indicator):
                self.lo[lo:hi] = term.lo
                self.hi[lo:hi] = term.hi

    def __call__(self, a, t):
        out = np.sign(a)*np.maximum(np.abs(a) - t*self.l1, 0.0)
        return np.clip(out, self.lo, self.hi)


def _smooth_lipschitz(smooth):
    if (isinstance(smooth, ZeroSmooth)):
        return 0.0
    if (isinstance(smooth, QuadraticSmooth)):
        if (sp.issparse(smooth.Q)):
            return np.sqrt(utils.spectral_norm_sq(smooth.Q))
        return float(np.max(np.abs(linalg.eigvalsh(smooth.Q))))
    if (isinstance(smooth, GramSmooth)):
        return utils.spectral_norm_sq(smooth.Z)
    raise UnsupportedError("no reference solver for a %s oracle"
                           % type(smooth).__name__)


def kkt_residual(instance, x, lam, A=None, prox=None):
    """
    max(||A x - b||, ||x - prox_g(x - (grad f(x) - A.T lam))||).

    |

    """

    A    = instance.constraint.full_matrix() if A is None else A
    prox = _FullProx(instance) if prox is None else prox
    r    = np.asarray(A @ x).ravel() - instance.constraint.rhs
    g    = instance.smooth.grad(x) - np.asarray(A.T @ lam).ravel()
    return max(float(np.linalg.norm(r)),
               float(np.linalg.norm(x - prox(x - g, 1.0))))


def reference_solve(instance, tol=1e-9, beta=1.0, max_iter=200000,
                    check_every=50):
    """
    High-accuracy solution by the full-vector linearized ALM

        x <- prox_{g/eta}(x - (grad f(x) - A.T(lam - beta r))/eta)
        lam <- lam - beta (A x - b),   eta = L + beta ||A||^2,

    written on whole vectors, independent of the block solver.

    *Parameters*

    instance : ProblemInstance
    tol : float, optional
        target for the KKT residual relative to (1 + ||b||)
    beta : float, optional
    max_iter : int, optional

    *Returns*

    ref : ReferenceSolution

    *Notes*

    Raises OracleFailure when the target is not reached within
    max_iter, or when a basis pursuit solution fails its dual
    certificate ||A.T lam||_inf <= 1 with matching signs on the
    support.

    |

    """

    A     = instance.constraint.full_matrix()
    b     = instance.constraint.rhs
    prox  = _FullProx(instance)
    goal  = tol*(1.0 + np.linalg.norm(b))
    eta   = _smooth_lipschitz(instance.smooth) + beta*utils.spectral_norm_sq(A)
    if (not eta > 0.0):
        eta = 1.0

    x   = np.zeros(instance.n)
    lam = np.zeros(instance.q)
    r   = np.asarray(A @ x).ravel() - b
    kkt = kkt_residual(instance, x, lam, A, prox)
    it  = 0
    while (kkt > goal):
        if (it >= max_iter):
            logger.warning("reference solve stopped at KKT residual %.3e",
                           kkt)
            raise OracleFailure("reference solve reached KKT residual %.3e "
                                "> %.3e after %d iterations"
                                % (kkt, goal, it))
        g   = instance.smooth.grad(x) - np.asarray(A.T @ (lam - beta*r)).ravel()
        x   = prox(x - g/eta, 1.0/eta)
        r   = np.asarray(A @ x).ravel() - b
        lam = lam - beta*r
        it += 1
        if (it % check_every == 0):
            kkt = kkt_residual(instance, x, lam, A, prox)

    if (np.linalg.norm(r) > goal):
        raise OracleFailure("reference point is infeasible")

    if (instance.smooth.kind == "zero"
            and all(t.kind == "l1" for t in instance.prox_terms)):
        _check_dual_certificate(instance, A, x, lam, tol)

    logger.info("reference solve: %d iterations, KKT residual %.3e", it, kkt)
    return ReferenceSolution(x, lam, float(objective(instance, x)),
                             float(kkt), "lalm")


def _check_dual_certificate(instance, A, x, lam, tol):
    v     = np.asarray(A.T @ lam).ravel()
    w     = instance.prox_terms[0].weight
    slack = 10.0*tol*(1.0 + np.linalg.norm(lam))
    if (np.max(np.abs(v), initial=0.0) > w*(1.0 + slack)):
        raise OracleFailure("dual certificate violated: max |A.T lam| = %.6g"
                            % np.max(np.abs(v)))
    support = np.abs(x) > np.sqrt(tol)*max(1.0, np.max(np.abs(x)))
    if (np.any(np.sign(v[support]) != np.sign(x[support]))):
        raise OracleFailure("dual certificate signs disagree on the support")

#-------------------------------------------------------------------------
# Instance files
#-------------------------------------------------------------------------

def _put_matrix(arrays, name, M):
    if (sp.issparse(M)):
        M = sp.csc_matrix(M)
        arrays[name + "_data"]    = M.data
        arrays[name + "_indices"] = M.indices
        arrays[name + "_indptr"]  = M.indptr
        arrays[name + "_shape"]   = np.asarray(M.shape)
    else:
        arrays[name] = np.asarray(M)


def _get_matrix(f, name):
    if (name in f.files):
        return f[name]
    return sp.csc_matrix((f[name + "_data"], f[name + "_indices"],
                          f[name + "_indptr"]),
                         shape=tuple(f[name + "_shape"]))


def save_instance(instance, path):
    """
    Writes an instance to a NumPy .npz archive with a JSON header
    (metadata, prox terms, oracle kind, reference optimum).

    |

    """

    smooth = instance.smooth
    if (smooth.kind not in ("zero", "quadratic", "gram")):
        raise UnsupportedError("cannot save a %s oracle"
                               % type(smooth).__name__)

    arrays = {"bounds": instance.partition.bounds,
              "rhs": instance.constraint.rhs,
              "sq_norms": instance.constraint.per_block_sq_norm}
    _put_matrix(arrays, "A", instance.constraint.full_matrix())
    if (smooth.kind == "quadratic"):
        _put_matrix(arrays, "Q", smooth.Q)
        arrays["c"] = smooth.c
    elif (smooth.kind == "gram"):
        _put_matrix(arrays, "Z", smooth.Z)
        arrays["c"] = smooth.c

    optimum = None
    if (instance.optimum is not None):
        opt = instance.optimum
        optimum = {"f_star": float(opt.f_star),
                   "kkt_residual": float(getattr(opt, "kkt_residual", 0.0)),
                   "method": getattr(opt, "method", "given")}
        arrays["x_star"] = opt.x_star
        if (opt.lambda_star is not None):
            arrays["lambda_star"] = opt.lambda_star

    header = {"format": 1, "smooth": smooth.kind,
              "prox": [t.as_dict() for t in instance.prox_terms],
              "metadata": instance.metadata, "optimum": optimum}
    np.savez_compressed(path, header=np.array(json.dumps(header)), **arrays)
    logger.info("saved %r to %s", instance, path)


def load_instance(path):
    """Reads an instance written by `save_instance`."""
    with np.load(path, allow_pickle=False) as f:
        header = json.loads(str(f["header"]))
        if (header.get("format") != 1):
            raise StructuralError("unknown instance file format")
        partition  = BlockPartition(f["bounds"])
        constraint = ConstraintBlocks.from_matrix(_get_matrix(f, "A"),
                                                  f["rhs"], partition,
                                                  f["sq_norms"])
        kind = header["smooth"]
        if (kind == "zero"):
            smooth = ZeroSmooth(partition)
        elif (kind == "quadratic"):
            smooth = QuadraticSmooth(_get_matrix(f, "Q"), f["c"], partition)
        else:
            smooth = GramSmooth(_get_matrix(f, "Z"), f["c"], partition)
        prox = [ProxTerm(**d) for d in header["prox"]]

        optimum = None
        if (header["optimum"] is not None):
            opt = header["optimum"]
            lam = f["lambda_star"] if "lambda_star" in f.files else None
            optimum = ReferenceSolution(f["x_star"], lam, opt["f_star"],
                                        opt["kkt_residual"], opt["method"])

    return ProblemInstance(partition, constraint, smooth, prox, optimum,
                           header["metadata"])
