# Copyright 2026 The asyncbcu developers, MIT license
"""
Deterministic emulation of delayed block gradients.

The tau+1 most recent iterates are kept and every gradient is taken
at one of them, chosen uniformly at random; everything else is the
serial method. Iterates before x^0 are taken to be x^0.

**Classes**

   * IterateRing - the tau+1 most recent iterates

**Functions**

   * run_simulated_delay - serial loop with delayed gradients
   * uniformity_pvalue   - chi-square test of a delay histogram

|

"""

#-----------------------------------------------------
# Import main libraries and modules
#-----------------------------------------------------

import logging

import numpy as np
import scipy.stats as stats

import asyncbcu.utils as utils
from asyncbcu.errors import ParameterError
from asyncbcu.parallel import DelayedSnapshot
from asyncbcu.problem import block_grad_at
from asyncbcu.prox import solve_block_subproblem
from asyncbcu.serial import drive

logger = logging.getLogger(__name__)

#-------------------------------------------------------------------------
# ITERATE RING
#-------------------------------------------------------------------------

class IterateRing:

    """
    Ring buffer of full iterates x^{k-tau} .. x^k.

    **Attributes**

       tau : int
       buffer : ndarray [tau+1, n]
          every slot starts as a copy of x^0
       head : int
          slot of the most recent iterate

    |

    """

    def __init__(self, x0, tau):
        tau = int(tau)
        if (tau < 0):
            raise ParameterError("tau must be >= 0")
        self.tau    = tau
        self.buffer = np.tile(np.asarray(x0, dtype=float), (tau + 1, 1))
        self.head   = 0

    @property
    def capacity(self):
        return self.tau + 1

    def push(self, x):
        self.head = (self.head + 1) % self.capacity
        self.buffer[self.head] = x

    def get(self, delay):
        """The iterate `delay` steps back (x^0 if before the start)."""
        if (not 0 <= delay <= self.tau):
            raise ParameterError("delay %d outside [0, %d]"
                                 % (delay, self.tau))
        return self.buffer[(self.head - delay) % self.capacity]

    def sample(self, rng):
        """A uniformly chosen entry and its delay."""
        d = int(rng.integers(self.capacity))
        return DelayedSnapshot(self.get(d), d)

#-------------------------------------------------------------------------
# RUN_SIMULATED_DELAY
#-------------------------------------------------------------------------

def run_simulated_delay(instance, config, tau):
    """
    Serial method with the block gradient evaluated at a uniformly
    sampled entry of the iterate ring.

    *Parameters*

    instance : ProblemInstance
    config : serial.RunConfig
    tau : int
        delay bound, >= 0

    *Returns*

    state : SaddleState
    trace : RunTrace
        serial columns plus tau; the header holds the delay histogram

    *Notes*

    Blocks are drawn from the serial stream and delays from a separate
    stream, so tau = 0 reproduces the serial run bit for bit.

    |

    """

    tau = int(tau)
    if (tau < 0):
        raise ParameterError("tau must be >= 0")

    streams   = utils.make_streams(config.seed, 2)
    block_rng = streams[0]
    delay_rng = streams[1]
    plan      = config.plan
    m         = instance.m
    counts    = np.zeros(tau + 1, dtype=np.int64)
    x0        = np.zeros(instance.n) if config.x0 is None else config.x0
    ring      = IterateRing(x0, tau) if tau > 0 else None

    def advance(state):
        i = utils.sample_block(block_rng, m)
        if (ring is None):
            x_hat, d = state.x, 0
        else:
            snap = ring.sample(delay_rng)
            x_hat, d = snap.x_hat, snap.delay
        counts[d] += 1
        grad = block_grad_at(instance, x_hat, i)
        xi   = solve_block_subproblem(instance, state.x, state.r, state.lam,
                                      i, grad, plan.beta, plan.eta[i])
        state.apply_block(instance, i, xi, plan.rho)
        if (ring is not None):
            ring.push(state.x)

    state, trace = drive(instance, config, advance, "delay",
                         header={"tau": tau}, row=lambda: {"tau": tau})

    nz = np.flatnonzero(counts)
    total = int(counts.sum())
    trace.header["delay_stats"] = {
        "max_delay": int(nz[-1]) if nz.size else 0,
        "mean_delay": (float(np.arange(tau + 1) @ counts/total)
                       if total else 0.0),
        "consumed": total,
        "delay_histogram": counts.tolist()}
    logger.info("delay run tau=%d: %d iterations", tau, total)
    return state, trace


def uniformity_pvalue(histogram):
    """
    p-value of the chi-square test that `histogram` comes from the
    uniform distribution on its bins.

    |

    """

    histogram = np.asarray(histogram, dtype=float)
    if (histogram.size < 2):
        return 1.0
    return float(stats.chisquare(histogram).pvalue)
