# Copyright 2026 The asyncbcu developers, MIT license
"""
Module with the serial randomized primal-dual block update.

Every iteration picks one block uniformly at random, solves its
linearized augmented Lagrangian subproblem exactly, and updates the
residual and the multipliers

    r <- r + A_i (x_i_new - x_i),   lam <- lam - rho r.

**Classes**

   * SaddleState - iterate (x, r, lam), counter k, ergodic accumulator
   * StopRule    - optional early stopping tolerances
   * RunConfig   - configuration of a serial run

**Functions**

   * step                - one block update
   * run                 - the solver loop, traced per epoch
   * drive               - epoch loop shared with the delay simulator
   * ergodic_point       - (x^{K+1} + sum_k x^{k+1})/(1 + K/m)
   * ergodic_average     - the same with weights 1/m on the sum
   * check_eps_sigma     - empirical (eps, sigma)-solution test
   * initial_gap_constant- C0 of the ergodic rate bound
   * iteration_bound     - iterations K that guarantee (eps, sigma)
   * lalm_instance       - the one-block regrouping (linearized ALM)

|

"""

#-----------------------------------------------------
# Import main libraries and modules
#-----------------------------------------------------

import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

import asyncbcu.utils as utils
from asyncbcu.errors import (ParameterError, StateError, StructuralError,
                             UnsupportedError)
from asyncbcu.problem import (BlockPartition, block_grad_at, objective,
                              residual)
from asyncbcu.prox import solve_block_subproblem
from asyncbcu.stepsize import StepsizePlan
from asyncbcu.trace import RunTrace, instance_fingerprint, record_epoch

logger = logging.getLogger(__name__)

#-------------------------------------------------------------------------
# SADDLE STATE
#-------------------------------------------------------------------------

class SaddleState:

    """
    Iterate of the primal-dual method.

    **Attributes**

       x : ndarray [n]
          primal point, updated in place one block at a time
       r : ndarray [q]
          residual A x - b, maintained incrementally
       lam : ndarray [q]
          multipliers
       k : int
          number of block updates (= multiplier updates) so far
       history : list of ndarray or None
          x^1, x^2, ... when created with keep_history=True

    **Notes**

    The ergodic accumulator holds sum_{t=2}^{k} x^t. It is kept lazily:
    each block remembers since which iteration its current value has
    been held, and the sum is charged only when the block changes, so
    a step costs O(block width).

    |

    """

    def __init__(self, x, r, lam, partition, keep_history=False):
        self.x   = x
        self.r   = r
        self.lam = lam
        self.k   = 0
        self.partition = partition
        self._sum  = np.zeros_like(x)
        self._mark = np.full(partition.m, 2, dtype=np.int64)
        self.history = [] if keep_history else None

    @classmethod
    def initial(cls, instance, x0=None, keep_history=False):
        """x = x0 (default 0), r = A x0 - b, lam = 0, k = 0."""
        if (x0 is None):
            x = np.zeros(instance.n)
        else:
            x = np.array(x0, dtype=float)
            if (x.shape != (instance.n,)):
                raise StructuralError("x0 has shape %s, expected (%d,)"
                                      % (x.shape, instance.n))
        r = residual(instance, x)
        return cls(x, r, np.zeros(instance.q), instance.partition,
                   keep_history)

    @property
    def ergodic_count(self):
        """K, the number of terms in the ergodic sum."""
        return max(self.k - 1, 0)

    @property
    def ergodic_sum(self):
        """sum_{t=2}^{k} x^t"""
        held = np.maximum(self.k - self._mark + 1, 0)
        return self._sum + np.repeat(held, self.partition.widths)*self.x

    def apply_block(self, instance, i, x_new, rho):
        """
        Writes the new block i and applies the residual and multiplier
        updates. Every engine goes through here.

        |

        """

        sl  = self.partition.slice(i)
        old = self.x[sl].copy()
        k   = self.k

        held = k - self._mark[i] + 1
        if (held > 0):
            self._sum[sl] += held*old
        self._mark[i] = max(k + 1, 2)

        self.x[sl] = x_new
        self.r    += instance.constraint.block_matvec(i, x_new - old)
        self.lam  -= rho*self.r
        self.k     = k + 1

        if (self.history is not None):
            self.history.append(self.x.copy())

    def ergodic_point(self, m):
        if (self.k < 1):
            raise StateError("no update has been made yet")
        K = self.ergodic_count
        return (self.x + self.ergodic_sum)/(1.0 + K/m)

    def ergodic_average(self, m):
        if (self.k < 1):
            raise StateError("no update has been made yet")
        K = self.ergodic_count
        return (self.x + self.ergodic_sum/m)/(1.0 + K/m)

    def copy(self):
        new = SaddleState(self.x.copy(), self.r.copy(), self.lam.copy(),
                          self.partition)
        new.k     = self.k
        new._sum  = self._sum.copy()
        new._mark = self._mark.copy()
        return new

#-------------------------------------------------------------------------
# Configuration
#-------------------------------------------------------------------------

@dataclass
class StopRule:

    """
    Stop when ||r|| <= feas_tol and, if given, |F(x) - F*| <= obj_tol,
    both measured on the running iterate at the end of an epoch.

    |

    """

    feas_tol: Optional[float] = None
    obj_tol: Optional[float] = None

    def met(self, instance, state):
        if (self.feas_tol is None and self.obj_tol is None):
            return False
        if (self.feas_tol is not None
                and np.linalg.norm(state.r) > self.feas_tol):
            return False
        if (self.obj_tol is not None):
            if (instance.optimum is None):
                return False
            err = abs(objective(instance, state.x) - instance.optimum.f_star)
            if (err > self.obj_tol):
                return False
        return True


@dataclass
class RunConfig:

    """
    Configuration of a serial (or simulated-delay) run.

    *Parameters*

       plan : StepsizePlan
       max_epochs : int
          number of epochs (m block updates each)
       seed : int
          seed of the random streams
       trace_every : int
          epochs between trace records
       stop : StopRule, optional
       x0 : ndarray, optional
          starting point, default 0
       timing : bool
          record wall-clock time; False writes 0 so traces are
          reproducible byte for byte
       keep_history : bool
          keep every iterate (for oracle tests)

    |

    """

    plan: StepsizePlan
    max_epochs: int = 100
    seed: int = 0
    trace_every: int = 1
    stop: Optional[StopRule] = None
    x0: Optional[np.ndarray] = None
    timing: bool = True
    keep_history: bool = False

    def __post_init__(self):
        if (self.max_epochs < 0):
            raise ParameterError("max_epochs must be >= 0")
        if (self.trace_every < 1):
            raise ParameterError("trace_every must be >= 1")

    def as_dict(self):
        stop = None
        if (self.stop is not None):
            stop = {"feas_tol": self.stop.feas_tol,
                    "obj_tol": self.stop.obj_tol}
        return {"plan": self.plan.as_dict(), "max_epochs": self.max_epochs,
                "seed": self.seed, "trace_every": self.trace_every,
                "stop": stop, "x0": "zero" if self.x0 is None else "given",
                "timing": self.timing}

#-------------------------------------------------------------------------
# STEP
#-------------------------------------------------------------------------

def step(instance, state, plan, rng):
    """
    One iteration: sample i uniformly, take the gradient at the
    current point, solve the block subproblem, update r and lam.

    |

    """

    i    = utils.sample_block(rng, instance.m)
    grad = block_grad_at(instance, state.x, i)
    xi   = solve_block_subproblem(instance, state.x, state.r, state.lam, i,
                                  grad, plan.beta, plan.eta[i])
    state.apply_block(instance, i, xi, plan.rho)
    return state

#-------------------------------------------------------------------------
# RUN
#-------------------------------------------------------------------------

class _Clock:
    """Accumulates time spent inside the solver loop only."""

    def __init__(self, enabled=True):
        self.enabled = enabled
        self.total   = 0.0
        self._t0     = None

    def start(self):
        if (self.enabled):
            self._t0 = time.perf_counter()

    def stop(self):
        if (self.enabled):
            self.total += time.perf_counter() - self._t0

    @property
    def ms(self):
        return 1000.0*self.total


def make_header(mode, instance, config, state):
    return {"mode": mode,
            "config": config.as_dict(),
            "instance": instance_fingerprint(instance),
            "initial_feas": float(np.linalg.norm(state.r)),
            "initial_obj": float(objective(instance, state.x))}


def check_plan(instance, plan):
    if (plan.m != instance.m):
        raise StructuralError("plan has %d weights, instance %d blocks"
                              % (plan.m, instance.m))


def drive(instance, config, advance, mode, header=None, row=None):
    """
    Epoch loop shared by the serial solver and the delay simulator.

    *Parameters*

    instance : ProblemInstance
    config : RunConfig
    advance : callable (state) -> None
        performs one iteration
    mode : str
        label stored in the trace header
    header : dict, optional
        extra header entries
    row : callable () -> dict, optional
        extra columns for every record

    *Returns*

    state : SaddleState
    trace : RunTrace

    |

    """

    check_plan(instance, config.plan)
    state = SaddleState.initial(instance, config.x0, config.keep_history)
    trace = RunTrace(make_header(mode, instance, config, state))
    if (header):
        trace.header.update(header)

    m     = instance.m
    clock = _Clock(config.timing)
    for epoch in range(1, config.max_epochs + 1):
        clock.start()
        for it in range(m):
            advance(state)
        clock.stop()

        stopped = (config.stop is not None
                   and config.stop.met(instance, state))
        if (epoch % config.trace_every == 0 or epoch == config.max_epochs
                or stopped):
            extra = row() if row is not None else {}
            record_epoch(trace, instance, state, epoch, clock.ms, **extra)
        if (stopped):
            logger.info("%s: stop rule met at epoch %d", mode, epoch)
            break

    return state, trace


def run(instance, config):
    """
    Runs the serial method for config.max_epochs epochs (each epoch is
    m block updates), recording the running and ergodic errors after
    every `trace_every` epochs.

    *Returns*

    state : SaddleState
        final state
    trace : RunTrace

    |

    """

    rng  = utils.make_streams(config.seed)[0]
    plan = config.plan

    def advance(state):
        step(instance, state, plan, rng)

    return drive(instance, config, advance, "serial")

#-------------------------------------------------------------------------
# Ergodic points
#-------------------------------------------------------------------------

def ergodic_point(state, m):
    """
    (x^{K+1} + sum_{k=1}^K x^{k+1}) / (1 + K/m), where K + 1 updates
    have been made.

    *Notes*

    With m > 1 the weights sum to (1+K)/(1+K/m), not to one; constant
    iterates c give c(1+K)/(1+K/m). Use `ergodic_average` for a convex
    combination.

    |

    """

    return state.ergodic_point(m)


def ergodic_average(state, m):
    """
    (x^{K+1} + (1/m) sum_{k=1}^K x^{k+1}) / (1 + K/m), a convex
    combination of the iterates.

    |

    """

    return state.ergodic_average(m)

#-------------------------------------------------------------------------
# (eps, sigma)-solutions
#-------------------------------------------------------------------------

def check_eps_sigma(traces, eps, sigma, min_runs=20):
    """
    Empirical test of the (eps, sigma)-solution property of the
    ergodic average: over independent seeds, the frequency of
    |F(xbar)-F*| >= eps and of ||A xbar - b|| >= eps must both be at
    most sigma.

    *Parameters*

    traces : list of RunTrace
        one per seed, same epoch budget
    eps : float
    sigma : float
    min_runs : int, optional
        minimum number of traces, default = 20

    *Returns*

    ok : bool

    |

    """

    if (len(traces) < min_runs):
        raise ParameterError("need at least %d traces, got %d"
                             % (min_runs, len(traces)))
    finals = [t.final() for t in traces]
    if (len({f["epoch"] for f in finals}) != 1):
        raise ParameterError("traces end at different epochs")

    obj  = np.array([f["ergodic_obj_err"] for f in finals], dtype=float)
    feas = np.array([f["ergodic_feas"] for f in finals], dtype=float)
    if (np.any(np.isnan(obj))):
        raise UnsupportedError("objective errors need a reference optimum")

    freq_obj  = np.mean(obj >= eps)
    freq_feas = np.mean(feas >= eps)
    logger.info("eps-sigma: P(obj err >= eps) = %.3f, "
                "P(feas >= eps) = %.3f", freq_obj, freq_feas)
    return bool(freq_obj <= sigma and freq_feas <= sigma)


def initial_gap_constant(instance, plan, reference, x0=None):
    """
    C0 = (1-1/m)[F(x0)-F(x*)] + 1/2 ||x0-x*||_P^2
         + (beta/2 - beta/m) ||r0||^2,  with P = blockdiag(eta_i I).

    |

    """

    m  = instance.m
    x0 = np.zeros(instance.n) if x0 is None else np.asarray(x0, dtype=float)
    r0 = residual(instance, x0)
    d  = x0 - reference.x_star
    weights = np.repeat(plan.eta, instance.partition.widths)
    return float((1.0 - 1.0/m)*(objective(instance, x0) - reference.f_star)
                 + 0.5*np.sum(weights*d*d)
                 + (plan.beta/2.0 - plan.beta/m)*(r0 @ r0))


def iteration_bound(C0, m, rho, lambda_norm, eps, sigma):
    """
    Number of iterations K after which the ergodic point is an
    (eps, sigma)-solution:

        K >= m max( (C0 + (1+|lam*|)^2/(2 m rho))/(eps sigma) - 1,
                    (5 C0 + 13 |lam*|^2/(2 m rho))/(eps sigma) - 1 )

    |

    """

    if (not (eps > 0.0 and 0.0 < sigma < 1.0)):
        raise ParameterError("need eps > 0 and 0 < sigma < 1")
    es = eps*sigma
    a  = (C0 + (1.0 + lambda_norm)**2/(2.0*m*rho))/es - 1.0
    b  = (5.0*C0 + 13.0*lambda_norm**2/(2.0*m*rho))/es - 1.0
    return int(np.ceil(m*max(a, b, 0.0)))

#-------------------------------------------------------------------------
# LALM
#-------------------------------------------------------------------------

def lalm_instance(instance):
    """
    The instance regrouped into one block. The serial method on it,
    with `serial_plan`, is the linearized augmented Lagrangian method
    (rho = beta, P = (L + beta ||A||^2) I).

    |

    """

    return instance.repartition(BlockPartition.single(instance.n))
