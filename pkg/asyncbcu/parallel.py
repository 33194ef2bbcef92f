# Copyright 2026 The asyncbcu developers, MIT license
"""
Module with the shared-memory parallel engines.

The asynchronous engine has one master thread, the only writer of
x, r, lam and k, and p-1 worker threads. A worker samples a block j,
reads x without locking (a read may mix coordinates of different
iterations), computes grad_j f and posts it to a bounded FIFO queue.
Each master iteration consumes at most one message; with an empty
queue the master samples a block and computes the gradient itself.

The synchronous engine samples p distinct blocks per round, computes
their updates at the common iterate on a thread pool and applies the
residual and multiplier updates in sorted block order.

**Classes**

   * GradientMessage - block, gradient and birth iteration
   * DelayedSnapshot - a worker's read of x and its delay
   * EngineConfig    - configuration of a parallel run
   * DelayStats      - observed delays and message counts
   * AsyncEngine     - master/worker threads around a SaddleState

**Functions**

   * run_async         - asynchronous run
   * run_sync_parallel - synchronous-parallel run (speedup baseline)
   * delay_stats       - delay summary stored in a trace

|

"""

#-----------------------------------------------------
# Import main libraries and modules
#-----------------------------------------------------

import logging
import queue
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

import asyncbcu.utils as utils
from asyncbcu.errors import EngineError, ParameterError
from asyncbcu.problem import block_grad_at
from asyncbcu.prox import solve_block_subproblem
from asyncbcu.serial import SaddleState, StopRule, make_header, check_plan
from asyncbcu.stepsize import ensure_lipschitz, sync_parallel_plan
from asyncbcu.trace import RunTrace, record_epoch

logger = logging.getLogger(__name__)

#-------------------------------------------------------------------------
# Messages
#-------------------------------------------------------------------------

@dataclass
class GradientMessage:
    """grad_j f at a worker's read of x; born_at is k when the read began."""
    block: int
    grad: np.ndarray
    born_at: int
    worker: int = -1


@dataclass
class DelayedSnapshot:
    """A read of x (possibly stale) and its delay in master iterations."""
    x_hat: np.ndarray
    delay: int

    def __post_init__(self):
        if (self.delay < 0):
            raise ParameterError("delay must be >= 0")

#-------------------------------------------------------------------------
# Configuration
#-------------------------------------------------------------------------

@dataclass
class EngineConfig:

    """
    Configuration of an asynchronous or synchronous-parallel run.

    *Parameters*

       plan : StepsizePlan
       workers : int
          p - 1 worker threads (p nodes including the master)
       seed : int
       max_epochs : int
          budget, max_epochs*m multiplier updates
       queue_capacity : int, optional
          default 4*workers
       drop_older_than : int, optional
          None uses every message; tau discards messages with
          delay > tau
       trace_every : int
       stop : StopRule, optional
       x0 : ndarray, optional
       timing : bool
       master_waits : bool
          the master never computes gradients itself and waits for
          messages instead (pipeline test mode, needs workers >= 1)
       keep_history : bool

    |

    """

    plan: object
    workers: int = 0
    seed: int = 0
    max_epochs: int = 100
    queue_capacity: Optional[int] = None
    drop_older_than: Optional[int] = None
    trace_every: int = 1
    stop: Optional[StopRule] = None
    x0: Optional[np.ndarray] = None
    timing: bool = True
    master_waits: bool = False
    keep_history: bool = False

    def __post_init__(self):
        if (self.workers < 0):
            raise ParameterError("workers must be >= 0")
        if (self.queue_capacity is None):
            self.queue_capacity = max(4*self.workers, 1)
        if (self.queue_capacity < 1):
            raise ParameterError("queue_capacity must be >= 1")
        if (self.drop_older_than is not None and self.drop_older_than < 0):
            raise ParameterError("drop_older_than must be >= 0")
        if (self.max_epochs < 0):
            raise ParameterError("max_epochs must be >= 0")
        if (self.trace_every < 1):
            raise ParameterError("trace_every must be >= 1")
        if (self.master_waits and self.workers == 0):
            raise ParameterError("master_waits needs at least one worker")

    @property
    def nodes(self):
        return self.workers + 1

    def max_iters(self, m):
        """Number of multiplier updates of the run."""
        return self.max_epochs*m

    def as_dict(self):
        stop = None
        if (self.stop is not None):
            stop = {"feas_tol": self.stop.feas_tol,
                    "obj_tol": self.stop.obj_tol}
        return {"plan": self.plan.as_dict(), "workers": self.workers,
                "seed": self.seed, "max_epochs": self.max_epochs,
                "queue_capacity": self.queue_capacity,
                "stale_policy": ("use_anyway" if self.drop_older_than is None
                                 else "drop_if_older_than"),
                "drop_older_than": self.drop_older_than,
                "trace_every": self.trace_every, "stop": stop,
                "x0": "zero" if self.x0 is None else "given",
                "timing": self.timing, "master_waits": self.master_waits}


@dataclass
class DelayStats:

    """
    Delays of the consumed messages and message counts of a run.

    |

    """

    histogram: np.ndarray = field(default_factory=lambda: np.zeros(1, int))
    self_computed: int = 0
    dropped_stale: int = 0
    dropped_overflow: int = 0

    def count(self, delay):
        """Adds one consumed message with the given delay."""
        size = self.histogram.size
        if (delay >= size):
            grown = np.zeros(max(2*size, delay + 1), dtype=int)
            grown[:size] = self.histogram
            self.histogram = grown
        self.histogram[delay] += 1

    def trim(self):
        self.histogram = self.histogram[:self.max_delay + 1].copy()

    @property
    def consumed(self):
        return int(self.histogram.sum())

    @property
    def max_delay(self):
        nz = np.flatnonzero(self.histogram)
        return int(nz[-1]) if nz.size else 0

    @property
    def mean_delay(self):
        if (self.consumed == 0):
            return 0.0
        return float(np.arange(self.histogram.size) @ self.histogram
                     / self.consumed)

    @property
    def dropped(self):
        return self.dropped_stale + self.dropped_overflow

    def as_dict(self):
        return {"max_delay": self.max_delay, "mean_delay": self.mean_delay,
                "consumed": self.consumed,
                "self_computed": self.self_computed,
                "dropped_stale": self.dropped_stale,
                "dropped_overflow": self.dropped_overflow,
                "delay_histogram": self.histogram.tolist()}

#-------------------------------------------------------------------------
# ASYNC ENGINE
#-------------------------------------------------------------------------

class AsyncEngine:

    """
    Master/worker engine of the asynchronous primal-dual method.

    Workers only read x. The master updates x in place block by block,
    so a worker read may see a partially updated x; each float64 store
    is atomic.

    **Methods**

       - run : start the workers, run the master loop, join

    |

    """

    _WAIT = 0.05

    def __init__(self, instance, config):
        check_plan(instance, config.plan)
        self.instance = instance
        self.config   = config
        self.state    = SaddleState.initial(instance, config.x0,
                                            config.keep_history)
        self.queue    = queue.Queue(maxsize=config.queue_capacity)
        self.stats    = DelayStats()

        self._halt    = threading.Event()
        self._lock    = threading.Lock()
        self._errors  = []
        self._threads = []

    #---------------------------------------------------------------------
    # Workers
    #---------------------------------------------------------------------

    def _post(self, msg):
        """
        Enqueue. A worker waits on a full queue; if it is still full
        after the wait, the oldest message is dropped.

        |

        """

        while (not self._halt.is_set()):
            try:
                self.queue.put(msg, timeout=self._WAIT)
                return
            except queue.Full:
                try:
                    self.queue.get_nowait()
                    with self._lock:
                        self.stats.dropped_overflow += 1
                except queue.Empty:
                    pass

    def _worker(self, w, rng):
        instance = self.instance
        state    = self.state
        m        = instance.m
        try:
            while (not self._halt.is_set()):
                j    = utils.sample_block(rng, m)
                born = state.k
                grad = block_grad_at(instance, state.x, j)
                self._post(GradientMessage(j, grad, born, w))
        except Exception as exc:
            logger.error("worker %d failed: %r", w, exc)
            with self._lock:
                self._errors.append((w, exc))
            self._halt.set()

    def _start(self, streams):
        for w in range(self.config.workers):
            t = threading.Thread(target=self._worker, args=(w, streams[2+w]),
                                 name="asyncbcu-worker-%d" % w, daemon=True)
            self._threads.append(t)
            t.start()
        logger.info("started %d workers", len(self._threads))

    def _shutdown(self):
        self._halt.set()
        while True:
            try:
                self.queue.get_nowait()
            except queue.Empty:
                break
        for t in self._threads:
            t.join()
        self._threads = []

    def _raise_worker_error(self):
        with self._lock:
            if (not self._errors):
                return
            w, exc = self._errors[0]
        self._shutdown()
        raise EngineError("worker %d raised %s: %s"
                          % (w, type(exc).__name__, exc), worker=w) from exc

    #---------------------------------------------------------------------
    # Master
    #---------------------------------------------------------------------

    def _next_message(self):
        """One usable message, or None when the master computes itself."""
        cfg = self.config
        if (cfg.workers == 0):
            return None
        while True:
            try:
                if (cfg.master_waits):
                    msg = self.queue.get(timeout=self._WAIT)
                else:
                    msg = self.queue.get_nowait()
            except queue.Empty:
                if (cfg.master_waits):
                    self._raise_worker_error()
                    continue
                return None
            delay = self.state.k - msg.born_at
            if (cfg.drop_older_than is not None
                    and delay > cfg.drop_older_than):
                self.stats.dropped_stale += 1
                continue
            return msg

    def run(self):
        """
        Runs max_epochs*m master iterations.

        *Returns*

        state : SaddleState
        trace : RunTrace
        stats : DelayStats

        |

        """

        instance = self.instance
        cfg      = self.config
        plan     = cfg.plan
        state    = self.state
        m        = instance.m

        streams   = utils.make_streams(cfg.seed, 2 + cfg.workers)
        block_rng = streams[0]
        trace     = RunTrace(make_header("async", instance, cfg, state))

        elapsed = 0.0
        self._start(streams)
        try:
            for epoch in range(1, cfg.max_epochs + 1):
                t0 = time.perf_counter()
                for it in range(m):
                    self._raise_worker_error()
                    msg = self._next_message()
                    if (msg is None):
                        i    = utils.sample_block(block_rng, m)
                        grad = block_grad_at(instance, state.x, i)
                        self.stats.self_computed += 1
                    else:
                        i    = msg.block
                        grad = msg.grad
                        self.stats.count(state.k - msg.born_at)
                    xi = solve_block_subproblem(instance, state.x, state.r,
                                                state.lam, i, grad, plan.beta,
                                                plan.eta[i])
                    state.apply_block(instance, i, xi, plan.rho)
                elapsed += time.perf_counter() - t0

                stopped = (cfg.stop is not None
                           and cfg.stop.met(instance, state))
                if (epoch % cfg.trace_every == 0 or epoch == cfg.max_epochs
                        or stopped):
                    self._record(trace, epoch, elapsed)
                if (stopped):
                    logger.info("async: stop rule met at epoch %d", epoch)
                    break
        finally:
            self._shutdown()
        self._raise_worker_error()

        self.stats.trim()
        trace.header["delay_stats"] = self.stats.as_dict()
        if (self.stats.dropped):
            logger.warning("async: dropped %d messages (%d stale, %d overflow)",
                           self.stats.dropped, self.stats.dropped_stale,
                           self.stats.dropped_overflow)
        return state, trace, self.stats

    def _record(self, trace, epoch, elapsed):
        cfg    = self.config
        ms     = 1000.0*elapsed if cfg.timing else 0.0
        ips    = self.state.k/elapsed if (cfg.timing and elapsed > 0) else 0.0
        record_epoch(trace, self.instance, self.state, epoch, ms,
                     iterations_per_sec=ips,
                     max_delay=self.stats.max_delay,
                     mean_delay=self.stats.mean_delay,
                     dropped_messages=self.stats.dropped)


def run_async(instance, config):
    """
    Asynchronous run with config.workers worker threads.

    With workers = 0 the master computes every gradient itself from
    the block stream of the serial solver, so the trajectory is the
    serial one for the same seed.

    *Returns*

    state : SaddleState
    trace : RunTrace
    stats : DelayStats

    |

    """

    return AsyncEngine(instance, config).run()

#-------------------------------------------------------------------------
# SYNC PARALLEL
#-------------------------------------------------------------------------

def run_sync_parallel(instance, config):
    """
    Synchronous-parallel counterpart with p = config.workers + 1 blocks
    per round.

    Each round samples p distinct blocks, solves their subproblems at
    the common (x, r, lam) on a thread pool, then applies the block,
    residual and multiplier updates one block at a time in sorted
    block order. A plan of mode 'sync' sums the weights of the sampled
    group (`sync_parallel_plan`); any other plan is used as is.

    *Returns*

    state : SaddleState
    trace : RunTrace

    |

    """

    check_plan(instance, config.plan)
    instance = ensure_lipschitz(instance)
    plan     = config.plan
    m        = instance.m
    p        = config.nodes
    if (p > m):
        raise ParameterError("group size %d exceeds m = %d" % (p, m))
    if (plan.mode == "sync" and plan.group_size != p):
        raise ParameterError("plan was built for groups of %d, engine "
                             "runs %d" % (plan.group_size, p))

    state     = SaddleState.initial(instance, config.x0, config.keep_history)
    trace     = RunTrace(make_header("sync", instance, config, state))
    trace.header["group_size"] = p
    block_rng = utils.make_streams(config.seed)[0]
    budget    = config.max_iters(m)

    def solve(i, eta_i, grad):
        return solve_block_subproblem(instance, state.x, state.r, state.lam,
                                      i, grad, plan.beta, eta_i)

    elapsed = 0.0
    epoch   = 0
    with ThreadPoolExecutor(max_workers=p) as pool:
        while (state.k < budget):
            t0    = time.perf_counter()
            group = utils.sample_group(block_rng, m, p)
            if (plan.mode == "sync"):
                eta = sync_parallel_plan(instance, plan.beta, group)
            else:
                eta = plan.eta[group]
            grads = list(pool.map(lambda i: block_grad_at(instance, state.x,
                                                          i), group))
            new   = list(pool.map(solve, group, eta, grads))
            for idx in np.argsort(group, kind="stable"):
                state.apply_block(instance, group[idx], new[idx], plan.rho)
            elapsed += time.perf_counter() - t0

            if (state.k//m <= epoch):
                continue
            epoch   = state.k//m
            stopped = (config.stop is not None
                       and config.stop.met(instance, state))
            if (epoch % config.trace_every == 0
                    or epoch == config.max_epochs or stopped):
                ms  = 1000.0*elapsed if config.timing else 0.0
                ips = (state.k/elapsed
                       if (config.timing and elapsed > 0) else 0.0)
                record_epoch(trace, instance, state, epoch, ms,
                             iterations_per_sec=ips)
            if (stopped):
                logger.info("sync: stop rule met at epoch %d", epoch)
                break

    return state, trace

#-------------------------------------------------------------------------
# Delay summary
#-------------------------------------------------------------------------

def delay_stats(trace):
    """
    Observed delays of a finished asynchronous (or simulated-delay) run.

    *Returns*

    max_delay : int
    mean_delay : float
    histogram : ndarray, histogram[d] = messages consumed with delay d

    |

    """

    stats = trace.header.get("delay_stats")
    if (stats is None):
        return 0, 0.0, np.zeros(1, dtype=int)
    hist = np.asarray(stats["delay_histogram"], dtype=int)
    return int(stats["max_delay"]), float(stats["mean_delay"]), hist
