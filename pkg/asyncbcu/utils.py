# Copyright 2026 The asyncbcu developers, MIT license
"""
Module with all the definitions (routines) of general use
of the asyncbcu solvers.

Contains:
   *  make_streams     - independent, reproducible random streams
   *  sample_block     - uniform block index
   *  sample_group     - p distinct uniform block indices
   *  soft_threshold   - coordinatewise shrinkage kernel
   *  clip             - coordinatewise projection onto [lo, hi]
   *  csr_rmatvec      - transposed product with a CSR matrix
   *  csr_rows_matvec  - product of a row range of a CSR matrix
   *  spectral_norm_sq - squared spectral norm by power iteration
   *  block_sq_norm    - ||B||^2 of a constraint block, exact when small

|

"""

#-----------------------------------------------------
# Import main libraries and modules
#-----------------------------------------------------

import logging

import numpy as np
import scipy.linalg as linalg
import scipy.sparse as sp
from numba import njit
from scipy.sparse.linalg import aslinearoperator

logger = logging.getLogger(__name__)

#-------------------------------------------------------------------------
# Random streams
#-------------------------------------------------------------------------

def make_streams(seed, count=1):
    """
    Creates `count` independent random generators from one seed.

    The streams are children of ``numpy.random.SeedSequence(seed)``,
    so stream ``j`` is the same whatever `count` is. Stream 0 is the
    block-selection stream shared by every solver mode; further
    streams feed delay sampling and worker threads.

    *Parameters*

    seed : int
        64-bit seed
    count : int
        number of streams

    *Returns*

    streams : list of numpy.random.Generator
        PCG64 generators

    |

    """

    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def sample_block(rng, m):
    """
    Uniform block index in [0, m).

    ``Generator.integers`` draws bounded integers by rejection
    (Lemire's method), so there is no modulo bias and the mapping
    from the PCG64 stream to blocks is the same on every platform.

    |

    """

    return int(rng.integers(m))


def sample_group(rng, m, p):
    """
    Draws p distinct block indices, uniformly, by repeated
    `sample_block` calls with duplicates rejected.

    For p = 1 the stream is consumed exactly as by one call to
    `sample_block`.

    *Returns*

    group : list of int
        indices in order of drawing

    |

    """

    group = []
    seen  = set()
    while (len(group) < p):
        i = sample_block(rng, m)
        if (i not in seen):
            seen.add(i)
            group.append(i)
    return group

#-------------------------------------------------------------------------
# Coordinatewise kernels
#-------------------------------------------------------------------------

@njit(cache=True)
def soft_threshold(a, t):
    """
    Shrinkage sign(a)*max(|a|-t, 0), coordinatewise.

    Points with |a| = t map to exactly 0.

    |

    """

    out = np.empty_like(a)
    for j in range(a.shape[0]):
        aj = a[j]
        if (aj > t):
            out[j] = aj - t
        elif (aj < -t):
            out[j] = aj + t
        else:
            out[j] = 0.0
    return out


@njit(cache=True)
def clip(a, lo, hi):
    """
    Projection of a onto the box [lo, hi], coordinatewise.

    |

    """

    out = np.empty_like(a)
    for j in range(a.shape[0]):
        aj = a[j]
        if (aj < lo):
            out[j] = lo
        elif (aj > hi):
            out[j] = hi
        else:
            out[j] = aj
    return out

#-------------------------------------------------------------------------
# CSR kernels (release the GIL, called from worker threads)
#-------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def csr_rmatvec(indptr, indices, data, v, ncols):
    """
    Computes Z.T @ v for a CSR matrix Z given by its arrays.

    *Parameters*

    indptr, indices, data : ndarray
        CSR arrays of Z (nrows x ncols)
    v : ndarray [nrows]
        vector to multiply
    ncols : int
        number of columns of Z

    *Returns*

    out : ndarray [ncols]

    |

    """

    out = np.zeros(ncols)
    for i in range(indptr.shape[0] - 1):
        vi = v[i]
        if (vi != 0.0):
            for p in range(indptr[i], indptr[i+1]):
                out[indices[p]] += data[p] * vi
    return out


@njit(cache=True, nogil=True)
def csr_rows_matvec(indptr, indices, data, lo, hi, w):
    """
    Computes Z[lo:hi] @ w for a CSR matrix Z given by its arrays.

    |

    """

    out = np.empty(hi - lo)
    for i in range(lo, hi):
        s = 0.0
        for p in range(indptr[i], indptr[i+1]):
            s += data[p] * w[indices[p]]
        out[i-lo] = s
    return out

#-------------------------------------------------------------------------
# SPECTRAL_NORM_SQ - power iteration on M.T @ M
#-------------------------------------------------------------------------

def spectral_norm_sq(M, maxiter=50, rtol=1e-8, inflate=1.001, seed=0):
    """
    Squared spectral norm ||M||^2 = largest eigenvalue of M.T @ M,
    by power iteration.

    The Rayleigh quotient ||M v||^2 of a unit vector never exceeds
    the true value, so the estimate is inflated by `inflate` to
    obtain an upper bound.

    *Parameters*

    M : ndarray, sparse matrix or LinearOperator
        matrix of shape (q, w)
    maxiter : int, optional
        maximum number of iterations, default = 50
    rtol : float, optional
        stop when the estimate changes less than rtol (relative),
        default = 1e-8
    inflate : float, optional
        factor applied to the converged estimate, default = 1.001
    seed : int, optional
        seed of the starting vector, default = 0

    *Returns*

    sq_norm : float
        inflated estimate of ||M||^2

    |

    """

    op = aslinearoperator(M)
    ncol = op.shape[1]
    if (ncol == 0 or op.shape[0] == 0):
        return 0.0

    rng = np.random.default_rng(seed)
    v   = rng.standard_normal(ncol)
    v   = v/np.linalg.norm(v)

    est = 0.0
    for it in range(maxiter):
        u   = np.asarray(op.matvec(v)).ravel()
        new = float(u @ u)
        if (new == 0.0):
            return 0.0
        w = np.asarray(op.rmatvec(u)).ravel()
        v = w/np.linalg.norm(w)
        if (abs(new - est) <= rtol*new):
            est = new
            break
        est = new
    else:
        logger.debug("power iteration stopped at maxiter=%d", maxiter)

    return inflate*est


def block_sq_norm(B, dense_limit=512):
    """
    Upper bound of ||B||^2 for a constraint block.

    Blocks with min(B.shape) <= dense_limit get the exact value from
    an SVD (a sum of squares for a single row or column). Larger
    sparse blocks fall back to `spectral_norm_sq` with 300 iterations
    and its default inflation.

    |

    """

    if (min(B.shape) == 0):
        return 0.0
    if (min(B.shape) > dense_limit):
        return spectral_norm_sq(B, maxiter=300)
    D = B.toarray() if sp.issparse(B) else np.asarray(B, dtype=float)
    if (min(D.shape) == 1):
        return float(np.sum(D*D))
    return float(linalg.svdvals(D)[0])**2
