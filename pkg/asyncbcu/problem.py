# Copyright 2026 The asyncbcu developers, MIT license
"""
Module with the block-partitioned problem

    min_x  f(x) + sum_i g_i(x_i)   s.t.   sum_i A_i x_i = b

and the oracles every solver consumes (block gradient of f, value of
F = f + g, constraint-block products).

**Classes**

   * BlockPartition   - contiguous blocks of the variable
   * ProxTerm         - a separable term g_i with a closed-form prox
   * ConstraintBlocks - the column blocks A_i of A and the rhs b
   * SmoothOracle     - base class of the smooth part f
   * ZeroSmooth, QuadraticSmooth, GramSmooth, CallableSmooth
   * ProblemInstance  - everything above, immutable

**Functions**

   * residual      - A x - b
   * block_grad_at - gradient of f w.r.t. block i
   * objective     - F(x) = f(x) + g(x)
   * saddle_gap    - F(x) - F(x*) - <lambda*, A x - b>

|

"""

#-----------------------------------------------------
# Import main libraries and modules
#-----------------------------------------------------

import copy
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

import asyncbcu.utils as utils
from asyncbcu.errors import StructuralError, ParameterError

#-------------------------------------------------------------------------
# BLOCK PARTITION
#-------------------------------------------------------------------------

class BlockPartition:

    """
    Partition of [0, n) into m contiguous, nonempty, sorted blocks.

    **Attributes**

       bounds : ndarray [m+1]
          block i is range(bounds[i], bounds[i+1])
       total_dim : int
          n
       m : int
          number of blocks

    |

    """

    def __init__(self, bounds):

        bounds = np.asarray(bounds, dtype=np.int64)
        if (bounds.ndim != 1 or bounds.size < 2):
            raise StructuralError("partition needs at least one block")
        if (bounds[0] != 0):
            raise StructuralError("partition must start at 0")
        if (np.any(np.diff(bounds) <= 0)):
            raise StructuralError("blocks must be nonempty and sorted")

        self.bounds    = bounds
        self.total_dim = int(bounds[-1])
        self.m         = int(bounds.size - 1)
        self.widths    = np.diff(bounds)

    @classmethod
    def even(cls, n, m):
        """m blocks whose widths differ by at most one."""
        if (m < 1 or m > n):
            raise ParameterError("need 1 <= m <= n, got m=%d, n=%d" % (m, n))
        return cls([(i*n)//m for i in range(m+1)])

    @classmethod
    def by_width(cls, n, width):
        """Blocks of `width` coordinates; the last absorbs the remainder."""
        if (width < 1):
            raise ParameterError("block width must be positive")
        m = max(n//width, 1)
        bounds = [i*width for i in range(m)] + [n]
        return cls(bounds)

    @classmethod
    def coordinates(cls, n):
        """Every coordinate is one block."""
        return cls(np.arange(n+1))

    @classmethod
    def single(cls, n):
        """All coordinates in one block."""
        return cls([0, n])

    @property
    def ranges(self):
        return [(int(self.bounds[i]), int(self.bounds[i+1]))
                for i in range(self.m)]

    def slice(self, i):
        return slice(int(self.bounds[i]), int(self.bounds[i+1]))

    def width(self, i):
        return int(self.widths[i])

    def __eq__(self, other):
        return (isinstance(other, BlockPartition)
                and np.array_equal(self.bounds, other.bounds))

    def __hash__(self):
        return hash(self.bounds.tobytes())

    def __repr__(self):
        return "BlockPartition(n=%d, m=%d)" % (self.total_dim, self.m)

#-------------------------------------------------------------------------
# PROX TERMS
#-------------------------------------------------------------------------

PROX_KINDS = ("zero", "l1", "box", "nonneg")

@dataclass(frozen=True)
class ProxTerm:

    """
    A separable term g_i with an exact coordinatewise prox.

    kind is one of 'zero', 'l1' (weight*||y||_1), 'box' (indicator of
    [lo, hi]) or 'nonneg' (indicator of y >= 0).

    |

    """

    kind: str = "zero"
    weight: float = 1.0
    lo: float = -np.inf
    hi: float = np.inf

    def __post_init__(self):
        if (self.kind not in PROX_KINDS):
            raise ParameterError("unknown prox kind %r" % (self.kind,))
        if (self.kind == "l1" and not (np.isfinite(self.weight)
                                       and self.weight >= 0.0)):
            raise ParameterError("l1 weight must be finite and >= 0")
        if (self.kind == "box" and not self.lo <= self.hi):
            raise ParameterError("box needs lo <= hi")
        if (self.kind == "nonneg"):
            object.__setattr__(self, "lo", 0.0)
            object.__setattr__(self, "hi", np.inf)

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def l1(cls, weight=1.0):
        return cls("l1", weight=float(weight))

    @classmethod
    def box(cls, lo, hi):
        return cls("box", lo=float(lo), hi=float(hi))

    @classmethod
    def nonneg(cls):
        return cls("nonneg")

    @property
    def is_indicator(self):
        return self.kind in ("box", "nonneg")

    def in_domain(self, y):
        if (not self.is_indicator):
            return True
        return bool(np.all(y >= self.lo) and np.all(y <= self.hi))

    def value(self, y):
        """g(y); +inf outside the box for indicator kinds."""
        if (self.kind == "l1"):
            return self.weight*float(np.sum(np.abs(y)))
        if (self.is_indicator and not self.in_domain(y)):
            return np.inf
        return 0.0

    def project(self, y):
        """Projection onto dom(g)."""
        if (self.is_indicator):
            return utils.clip(np.ascontiguousarray(y, dtype=float),
                              self.lo, self.hi)
        return np.array(y, dtype=float)

    def as_dict(self):
        return {"kind": self.kind, "weight": self.weight,
                "lo": self.lo, "hi": self.hi}

#-------------------------------------------------------------------------
# CONSTRAINT BLOCKS
#-------------------------------------------------------------------------

class ConstraintBlocks:

    """
    The column blocks A_1..A_m of A and the right-hand side b.

    Sparse blocks are kept column compressed so that A_i d and A_i.T v
    cost O(nnz(A_i)); dense blocks stay ndarrays.

    **Attributes**

       blocks : list
          m matrices of shape (q, w_i)
       rhs : ndarray [q]
          b
       per_block_sq_norm : ndarray [m]
          upper bounds of ||A_i||^2 (exact for blocks up to 512 wide)

    |

    """

    def __init__(self, blocks, rhs, per_block_sq_norm=None):

        if (len(blocks) < 1):
            raise StructuralError("need at least one constraint block")

        stored = []
        for B in blocks:
            if (sp.issparse(B)):
                B = sp.csc_matrix(B, dtype=float)
            else:
                B = np.atleast_2d(np.asarray(B, dtype=float))
            stored.append(B)

        q = stored[0].shape[0]
        for i, B in enumerate(stored):
            if (B.shape[0] != q):
                raise StructuralError("block %d has %d rows, expected %d"
                                      % (i, B.shape[0], q))
        rhs = np.asarray(rhs, dtype=float).ravel()
        if (rhs.size != q):
            raise StructuralError("rhs has length %d, expected %d"
                                  % (rhs.size, q))

        self.blocks    = stored
        self.blocks_t  = [B.T.tocsr() if sp.issparse(B) else B.T
                          for B in stored]
        self.rhs       = rhs
        self.q         = int(q)
        self.m         = len(stored)
        self.widths    = np.array([B.shape[1] for B in stored])

        if (per_block_sq_norm is None):
            per_block_sq_norm = [utils.block_sq_norm(B) for B in stored]
        per_block_sq_norm = np.asarray(per_block_sq_norm, dtype=float)
        if (per_block_sq_norm.size != self.m):
            raise StructuralError("need one squared norm per block")
        self.per_block_sq_norm = per_block_sq_norm

    @classmethod
    def from_matrix(cls, A, b, partition, per_block_sq_norm=None):
        """Splits a full q x n matrix along `partition`."""
        if (A.shape[1] != partition.total_dim):
            raise StructuralError("A has %d columns, partition covers %d"
                                  % (A.shape[1], partition.total_dim))
        if (sp.issparse(A)):
            A = sp.csc_matrix(A)
        blocks = [A[:, lo:hi] for lo, hi in partition.ranges]
        return cls(blocks, b, per_block_sq_norm)

    @property
    def is_sparse(self):
        return sp.issparse(self.blocks[0])

    def block_matvec(self, i, d):
        """A_i @ d"""
        return np.asarray(self.blocks[i] @ d).ravel()

    def block_rmatvec(self, i, v):
        """A_i.T @ v"""
        return np.asarray(self.blocks_t[i] @ v).ravel()

    def full_matrix(self):
        """A = [A_1, ..., A_m], sparse if the blocks are."""
        if (self.is_sparse):
            return sp.hstack(self.blocks, format="csc")
        return np.hstack(self.blocks)

#-------------------------------------------------------------------------
# SMOOTH ORACLES
#-------------------------------------------------------------------------

class SmoothOracle:

    """
    Base class of the smooth part f.

    Subclasses implement `value`, `grad` and `block_grad`. Oracles are
    pure: no method mutates the oracle.

    **Attributes**

       partition : BlockPartition
       lipschitz_blocks : ndarray [m] or None
          L_1..L_m (block Lipschitz constants of grad_i f)
       lipschitz_cross : float or None
          L_r, bound of ||grad f(x + U_i y) - grad f(x)|| / ||y_i||

    |

    """

    kind = "generic"

    def __init__(self, partition, lipschitz_blocks=None, lipschitz_cross=None):
        self.partition = partition
        self.lipschitz_blocks = (None if lipschitz_blocks is None
                                 else np.asarray(lipschitz_blocks, dtype=float))
        self.lipschitz_cross  = (None if lipschitz_cross is None
                                 else float(lipschitz_cross))

    @property
    def has_lipschitz(self):
        return (self.lipschitz_blocks is not None
                and self.lipschitz_cross is not None)

    def with_lipschitz(self, lipschitz_blocks, lipschitz_cross):
        new = copy.copy(self)
        SmoothOracle.__init__(new, self.partition, lipschitz_blocks,
                              lipschitz_cross)
        return new

    def rebind(self, partition):
        """Same f on another partition; constants must be re-estimated."""
        new = copy.copy(self)
        SmoothOracle.__init__(new, partition)
        return new

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def block_grad(self, x, i):
        return self.grad(x)[self.partition.slice(i)]


class ZeroSmooth(SmoothOracle):
    """f = 0 (basis pursuit)."""

    kind = "zero"

    def __init__(self, partition):
        m = partition.m
        super().__init__(partition, np.zeros(m), 0.0)

    def rebind(self, partition):
        return ZeroSmooth(partition)

    def value(self, x):
        return 0.0

    def grad(self, x):
        return np.zeros(self.partition.total_dim)

    def block_grad(self, x, i):
        return np.zeros(self.partition.width(i))


class QuadraticSmooth(SmoothOracle):
    """
    f(x) = 1/2 x.T Q x + c.T x with Q symmetric positive semidefinite,
    dense or sparse.

    |

    """

    kind = "quadratic"

    def __init__(self, Q, c, partition, lipschitz_blocks=None,
                 lipschitz_cross=None):
        super().__init__(partition, lipschitz_blocks, lipschitz_cross)
        n = partition.total_dim
        if (Q.shape != (n, n)):
            raise StructuralError("Q must be %d x %d" % (n, n))
        if (sp.issparse(Q)):
            Q = sp.csr_matrix(Q, dtype=float)
        else:
            Q = np.asarray(Q, dtype=float)
        c = np.asarray(c, dtype=float).ravel()
        if (c.size != n):
            raise StructuralError("c must have length %d" % n)
        self.Q = Q
        self.c = c
        self._rows = [Q[lo:hi] for lo, hi in partition.ranges]

    def rebind(self, partition):
        return QuadraticSmooth(self.Q, self.c, partition)

    def value(self, x):
        return float(0.5*(x @ (self.Q @ x)) + self.c @ x)

    def grad(self, x):
        return np.asarray(self.Q @ x).ravel() + self.c

    def block_grad(self, x, i):
        sl = self.partition.slice(i)
        return np.asarray(self._rows[i] @ x).ravel() + self.c[sl]


class GramSmooth(SmoothOracle):
    """
    f(theta) = 1/2 ||Z.T theta||^2 + c.T theta with Z sparse (N x d).

    The N x N matrix Z Z.T is never formed; one gradient block costs
    two sparse products, done by GIL-free kernels.

    |

    """

    kind = "gram"

    def __init__(self, Z, c, partition, lipschitz_blocks=None,
                 lipschitz_cross=None):
        super().__init__(partition, lipschitz_blocks, lipschitz_cross)
        Z = sp.csr_matrix(Z, dtype=float)
        Z.sort_indices()
        if (Z.shape[0] != partition.total_dim):
            raise StructuralError("Z must have %d rows" % partition.total_dim)
        c = np.asarray(c, dtype=float).ravel()
        if (c.size != Z.shape[0]):
            raise StructuralError("c must have length %d" % Z.shape[0])
        self.Z = Z
        self.c = c

    def rebind(self, partition):
        return GramSmooth(self.Z, self.c, partition)

    def _zt(self, theta):
        Z = self.Z
        return utils.csr_rmatvec(Z.indptr, Z.indices, Z.data,
                                 np.ascontiguousarray(theta, dtype=float),
                                 Z.shape[1])

    def value(self, x):
        w = self._zt(x)
        return float(0.5*(w @ w) + self.c @ x)

    def grad(self, x):
        return np.asarray(self.Z @ self._zt(x)).ravel() + self.c

    def block_grad(self, x, i):
        Z  = self.Z
        lo, hi = self.partition.ranges[i]
        w  = self._zt(x)
        return (utils.csr_rows_matvec(Z.indptr, Z.indices, Z.data, lo, hi, w)
                + self.c[lo:hi])


class CallableSmooth(SmoothOracle):
    """
    A user-supplied f given by callables. Lipschitz constants must be
    supplied, they cannot be estimated.

    |

    """

    def __init__(self, value, block_grad, partition, lipschitz_blocks=None,
                 lipschitz_cross=None):
        super().__init__(partition, lipschitz_blocks, lipschitz_cross)
        self._value = value
        self._block_grad = block_grad

    def rebind(self, partition):
        raise StructuralError("a callable oracle cannot be repartitioned")

    def value(self, x):
        return float(self._value(x))

    def grad(self, x):
        return np.concatenate([self.block_grad(x, i)
                               for i in range(self.partition.m)])

    def block_grad(self, x, i):
        return np.asarray(self._block_grad(x, i), dtype=float).ravel()

#-------------------------------------------------------------------------
# PROBLEM INSTANCE
#-------------------------------------------------------------------------

class ProblemInstance:

    """
    A block-partitioned convex program, immutable after construction.

    **Attributes**

       partition : BlockPartition
       constraint : ConstraintBlocks
       smooth : SmoothOracle
       prox_terms : tuple of ProxTerm, one per block
       optimum : object or None
          reference solution with attributes f_star, x_star and
          lambda_star (see instances.ReferenceSolution)
       metadata : dict
          generator parameters, seed, provenance

    |

    """

    def __init__(self, partition, constraint, smooth, prox_terms,
                 optimum=None, metadata=None):

        if (isinstance(prox_terms, ProxTerm)):
            prox_terms = [prox_terms]*partition.m
        prox_terms = tuple(prox_terms)

        if (constraint.m != partition.m):
            raise StructuralError("%d constraint blocks for %d blocks"
                                  % (constraint.m, partition.m))
        if (not np.array_equal(constraint.widths, partition.widths)):
            raise StructuralError("constraint block widths differ from "
                                  "the partition")
        if (smooth.partition != partition):
            raise StructuralError("smooth oracle is bound to another "
                                  "partition")
        if (len(prox_terms) != partition.m):
            raise StructuralError("%d prox terms for %d blocks"
                                  % (len(prox_terms), partition.m))

        self.partition  = partition
        self.constraint = constraint
        self.smooth     = smooth
        self.prox_terms = prox_terms
        self.optimum    = optimum
        self.metadata   = dict(metadata or {})

    @property
    def m(self):
        return self.partition.m

    @property
    def n(self):
        return self.partition.total_dim

    @property
    def q(self):
        return self.constraint.q

    def with_optimum(self, optimum):
        new = copy.copy(self)
        new.optimum = optimum
        return new

    def with_smooth(self, smooth):
        new = copy.copy(self)
        new.smooth = smooth
        return new

    def repartition(self, partition):
        """
        The same program on another partition. Needs one prox kind for
        all blocks; Lipschitz constants of the new oracle are unset.

        |

        """

        if (partition.total_dim != self.n):
            raise StructuralError("partition covers %d coordinates, "
                                  "instance has %d"
                                  % (partition.total_dim, self.n))
        if (len(set(self.prox_terms)) != 1):
            raise StructuralError("repartition needs identical prox terms")
        A = self.constraint.full_matrix()
        constraint = ConstraintBlocks.from_matrix(A, self.constraint.rhs,
                                                  partition)
        return ProblemInstance(partition, constraint,
                               self.smooth.rebind(partition),
                               self.prox_terms[0], self.optimum,
                               self.metadata)

    def __repr__(self):
        return ("ProblemInstance(family=%s, n=%d, q=%d, m=%d)"
                % (self.metadata.get("family", "custom"),
                   self.n, self.q, self.m))

#-------------------------------------------------------------------------
# Oracles
#-------------------------------------------------------------------------

def _check_point(instance, x):
    x = np.asarray(x, dtype=float)
    if (x.ndim != 1 or x.size != instance.n):
        raise StructuralError("point has shape %s, expected (%d,)"
                              % (x.shape, instance.n))
    return x


def residual(instance, x):
    """
    r = A x - b, accumulated block by block.

    *Parameters*

    instance : ProblemInstance
    x : ndarray [n]

    *Returns*

    r : ndarray [q]

    |

    """

    x  = _check_point(instance, x)
    cb = instance.constraint
    r  = -cb.rhs.copy()
    for i, (lo, hi) in enumerate(instance.partition.ranges):
        r += cb.block_matvec(i, x[lo:hi])
    return r


def block_grad_at(instance, x, i):
    """
    grad_i f(x), the gradient of f w.r.t. block i at the full point x.

    |

    """

    if (not 0 <= i < instance.m):
        raise StructuralError("block index %d outside [0, %d)"
                              % (i, instance.m))
    return instance.smooth.block_grad(x, i)


def objective(instance, x):
    """
    F(x) = f(x) + sum_i g_i(x_i). Returns +inf when x is outside
    the domain of an indicator term.

    |

    """

    x   = _check_point(instance, x)
    val = 0.0
    for term, (lo, hi) in zip(instance.prox_terms, instance.partition.ranges):
        val += term.value(x[lo:hi])
        if (val == np.inf):
            return np.inf
    return instance.smooth.value(x) + val


def saddle_gap(instance, x, reference):
    """
    Phi(x, x*, lambda*) = F(x) - F(x*) - <lambda*, A x - b>,
    nonnegative for every x when (x*, lambda*) is a saddle point.

    |

    """

    return (objective(instance, x) - reference.f_star
            - float(reference.lambda_star @ residual(instance, x)))
