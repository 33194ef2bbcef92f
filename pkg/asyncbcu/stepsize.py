# Copyright 2026 The asyncbcu developers, MIT license
"""
Stepsizes of the primal-dual block update: the dual stepsize rho and
the per-block weights eta_i (P_i = eta_i I), for serial, delay-aware
asynchronous and synchronous-parallel runs.

**Classes**

   * StepsizePlan - beta, rho, eta and the mode they were derived for

**Functions**

   * estimate_lipschitz - L_1..L_m and L_r of a quadratic smooth part
   * ensure_lipschitz   - instance whose oracle carries its constants
   * serial_plan        - eta_i = L_i + beta ||A_i||^2, rho = beta/m
   * async_plan         - weights inflated for a delay bound tau
   * sync_parallel_plan - summed weights of a group of p blocks
   * sync_plan          - plan carrying serial weights, summed per round

|

"""

#-----------------------------------------------------
# Import main libraries and modules
#-----------------------------------------------------

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as linalg
import scipy.sparse as sp
from scipy.sparse.linalg import aslinearoperator

import asyncbcu.utils as utils
from asyncbcu.errors import ParameterError, UnsupportedError
from asyncbcu.problem import QuadraticSmooth, GramSmooth, ZeroSmooth

logger = logging.getLogger(__name__)

PLAN_MODES = ("serial", "async", "sync")

#-------------------------------------------------------------------------
# STEPSIZE PLAN
#-------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StepsizePlan:

    """
    Stepsizes of one run.

    **Attributes**

       beta : float
          augmented Lagrangian penalty
       rho : float
          dual stepsize, 0 < rho <= beta/m
       eta : ndarray [m]
          per-block weights
       mode : str
          'serial', 'async' or 'sync'
       tau : int
          delay bound the weights account for (async)
       alpha : float
          free parameter of the delay-aware weights (async)
       group_size : int
          blocks updated per round (sync)
       serial_weights : bool
          True when a delayed run deliberately keeps the serial weights

    |

    """

    beta: float
    rho: float
    eta: np.ndarray
    mode: str = "serial"
    tau: int = 0
    alpha: float = 1.0
    group_size: int = 1
    serial_weights: bool = False

    def __post_init__(self):
        eta = np.array(self.eta, dtype=float)
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)
        m = eta.size
        if (self.mode not in PLAN_MODES):
            raise ParameterError("unknown plan mode %r" % (self.mode,))
        if (not self.beta > 0.0):
            raise ParameterError("beta must be positive")
        if (not self.rho > 0.0):
            raise ParameterError("rho must be positive")
        if (self.rho*m > self.beta*(1.0 + 1e-12)):
            raise ParameterError("rho = %g exceeds beta/m = %g"
                                 % (self.rho, self.beta/m))
        if (np.any(~np.isfinite(eta)) or np.any(eta <= 0.0)):
            raise ParameterError("every eta_i must be positive and finite")

    @property
    def m(self):
        return self.eta.size

    def with_rho(self, rho):
        """Same weights with a smaller dual stepsize."""
        return dataclasses.replace(self, rho=float(rho))

    def held_for_delay(self, tau):
        """
        Marks serial weights as used for a delayed run with bound tau,
        so traces record that the delay-aware rule was not applied.

        |

        """

        return dataclasses.replace(self, mode="async", tau=int(tau),
                                   serial_weights=True)

    def same_as(self, other):
        return (self.beta == other.beta and self.rho == other.rho
                and np.array_equal(self.eta, other.eta)
                and self.mode == other.mode and self.tau == other.tau
                and self.alpha == other.alpha
                and self.group_size == other.group_size
                and self.serial_weights == other.serial_weights)

    def as_dict(self):
        return {"beta": self.beta, "rho": self.rho, "mode": self.mode,
                "tau": self.tau, "alpha": self.alpha,
                "group_size": self.group_size,
                "serial_weights": self.serial_weights,
                "eta_min": float(self.eta.min()),
                "eta_max": float(self.eta.max())}

#-------------------------------------------------------------------------
# Lipschitz constants
#-------------------------------------------------------------------------

def _dense_sq_block_norm(B):
    if (B.shape[0] == 1 or B.shape[1] == 1):
        return float(np.sum(B*B))
    return float(linalg.svdvals(B)[0])**2


def estimate_lipschitz(instance):
    """
    Lipschitz constants of a quadratic (or zero) smooth part.

    L_i is the spectral norm of the diagonal Hessian block of block i,
    L_r the largest spectral norm over the column blocks Q[:, i-block].

    *Parameters*

    instance : ProblemInstance

    *Returns*

    L : ndarray [m]
    L_r : float

    *Notes*

    Dense Q uses exact decompositions. Sparse Q and the implicit Gram
    oracle use power iteration (upper bounds within 0.1%).

    |

    """

    smooth    = instance.smooth
    partition = instance.partition
    m         = partition.m

    if (isinstance(smooth, ZeroSmooth)):
        return np.zeros(m), 0.0

    if (isinstance(smooth, QuadraticSmooth)):
        Q = smooth.Q
        L = np.zeros(m)
        cross = np.zeros(m)
        for i, (lo, hi) in enumerate(partition.ranges):
            if (sp.issparse(Q)):
                L[i]     = np.sqrt(utils.spectral_norm_sq(Q[lo:hi, lo:hi]))
                cross[i] = np.sqrt(utils.spectral_norm_sq(Q[:, lo:hi]))
            elif (hi - lo == 1):
                L[i]     = abs(Q[lo, lo])
                cross[i] = np.linalg.norm(Q[:, lo])
            else:
                L[i]     = np.max(np.abs(linalg.eigvalsh(Q[lo:hi, lo:hi])))
                cross[i] = np.sqrt(_dense_sq_block_norm(Q[:, lo:hi]))
        return L, float(cross.max())

    if (isinstance(smooth, GramSmooth)):
        Z  = smooth.Z
        Zop = aslinearoperator(Z)
        L = np.zeros(m)
        cross = np.zeros(m)
        for i, (lo, hi) in enumerate(partition.ranges):
            Zi = Z[lo:hi]
            L[i] = utils.spectral_norm_sq(Zi)
            cross[i] = np.sqrt(utils.spectral_norm_sq(
                Zop.dot(aslinearoperator(Zi.T))))
        return L, float(cross.max())

    if (smooth.has_lipschitz):
        return smooth.lipschitz_blocks.copy(), smooth.lipschitz_cross

    raise UnsupportedError("cannot estimate Lipschitz constants of a %s "
                           "oracle; supply them" % type(smooth).__name__)


def ensure_lipschitz(instance):
    """Returns `instance` with Lipschitz constants set on its oracle."""
    if (instance.smooth.has_lipschitz):
        return instance
    L, L_r = estimate_lipschitz(instance)
    return instance.with_smooth(instance.smooth.with_lipschitz(L, L_r))


def _constants(instance):
    smooth = instance.smooth
    if (smooth.has_lipschitz):
        return smooth.lipschitz_blocks, smooth.lipschitz_cross
    return estimate_lipschitz(instance)


def _check_beta(beta):
    if (not (np.isfinite(beta) and beta > 0.0)):
        raise ParameterError("beta must be positive, got %r" % (beta,))

#-------------------------------------------------------------------------
# Plans
#-------------------------------------------------------------------------

def serial_plan(instance, beta):
    """
    Plan of the serial method: rho = beta/m and
    eta_i = L_i + beta ||A_i||^2.

    With m = 1 this is the linearized ALM (rho = beta,
    P = (L + beta ||A||^2) I).

    |

    """

    _check_beta(beta)
    L, _ = _constants(instance)
    m    = instance.m
    eta  = L + beta*instance.constraint.per_block_sq_norm
    return StepsizePlan(beta=float(beta), rho=beta/m, eta=eta)


def async_plan(instance, beta, tau, alpha=1.0):
    """
    Delay-aware plan for gradients at most tau iterations old:

        eta_i = L_i + alpha L_c + tau L_i/m
                + (kappa/alpha + 2) L_r tau^2/m + beta ||A_i||^2

    with L_c = max_j L_j and kappa = L_r/L_c.

    *Notes*

    tau = 0 returns `serial_plan` unchanged: the formula still carries
    alpha L_c at tau = 0, but without delay the serial bound applies.
    When L_c = 0 the kappa term is dropped (it vanishes with L_r).

    |

    """

    _check_beta(beta)
    if (not alpha > 0.0):
        raise ParameterError("alpha must be positive, got %r" % (alpha,))
    tau = int(tau)
    if (tau < 0):
        raise ParameterError("tau must be >= 0")
    if (tau == 0):
        return serial_plan(instance, beta)

    L, L_r = _constants(instance)
    m      = instance.m
    L_c    = float(np.max(L))
    if (L_c > 0.0):
        kappa = L_r/L_c
        delay = alpha*L_c + tau*L/m + (kappa/alpha + 2.0)*L_r*tau**2/m
    else:
        delay = tau*L/m + 2.0*L_r*tau**2/m
    eta = L + delay + beta*instance.constraint.per_block_sq_norm
    return StepsizePlan(beta=float(beta), rho=beta/m, eta=eta, mode="async",
                        tau=tau, alpha=float(alpha))


def sync_parallel_plan(instance, beta, group):
    """
    Weights of one synchronous round over `group`: every i in the
    group gets sum_{j in group} (L_j + beta ||A_j||^2).

    *Returns*

    eta_group : ndarray [len(group)]

    |

    """

    _check_beta(beta)
    group = list(group)
    if (len(group) == 0):
        raise ParameterError("group must be nonempty")
    L, _ = _constants(instance)
    idx  = np.asarray(group)
    single = L[idx] + beta*instance.constraint.per_block_sq_norm[idx]
    return np.full(idx.size, np.sum(single))


def sync_plan(instance, beta, group_size):
    """
    Plan for synchronous rounds of `group_size` blocks. It stores the
    serial weights; the engine sums them over each sampled group with
    `sync_parallel_plan`.

    |

    """

    if (group_size < 1 or group_size > instance.m):
        raise ParameterError("group size must be in [1, m]")
    base = serial_plan(instance, beta)
    return dataclasses.replace(base, mode="sync", group_size=int(group_size))
