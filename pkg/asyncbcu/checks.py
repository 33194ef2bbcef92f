# Copyright 2026 The asyncbcu developers, MIT license
"""
Invariant checks of instances and traces, run by `asyncbcu verify`.

Every check returns a CheckResult instead of raising, so a report can
list all failures at once.

**Functions**

   * check_structure, check_spectral_bounds, check_residual,
     check_prox_certificates, check_lipschitz, check_gradient,
     check_residual_recursion, check_reference, check_trace
   * verify - all instance checks (and the trace check if given)

|

"""

#-----------------------------------------------------
# Import main libraries and modules
#-----------------------------------------------------

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

import asyncbcu.utils as utils
from asyncbcu.errors import BCUError
from asyncbcu.instances import kkt_residual, reference_solve
from asyncbcu.problem import block_grad_at, residual
from asyncbcu.prox import ScaledProxQuery, prox_apply
from asyncbcu.serial import SaddleState, step
from asyncbcu.stepsize import ensure_lipschitz, serial_plan

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def __str__(self):
        return "%-20s %s  %s" % (self.name, "PASS" if self.passed else "FAIL",
                                 self.detail)


def _guarded(name):
    def wrap(fn):
        def run(*args, **kwargs):
            try:
                passed, detail = fn(*args, **kwargs)
            except BCUError as exc:
                passed, detail = False, "%s: %s" % (type(exc).__name__, exc)
            if (not passed):
                logger.warning("check %s failed: %s", name, detail)
            return CheckResult(name, bool(passed), detail)
        run.__name__ = fn.__name__
        run.__doc__  = fn.__doc__
        return run
    return wrap


#-------------------------------------------------------------------------
# Instance checks
#-------------------------------------------------------------------------

@_guarded("structure")
def check_structure(instance):
    """Block widths agree everywhere and the data are finite."""
    cb = instance.constraint
    ok = (np.array_equal(cb.widths, instance.partition.widths)
          and cb.m == instance.m and len(instance.prox_terms) == instance.m
          and instance.smooth.partition == instance.partition
          and np.all(np.isfinite(cb.rhs)))
    return ok, "n=%d q=%d m=%d" % (instance.n, instance.q, instance.m)


@_guarded("spectral_bounds")
def check_spectral_bounds(instance, rtol=1e-6):
    """
    per_block_sq_norm[i] must bound ||A_i||^2 from above. The
    reference is exact for blocks up to 512 wide and a converged
    power iteration (a lower bound of the true value) above that;
    only a relative shortfall of `rtol` is tolerated.

    |

    """

    cb    = instance.constraint
    worst = np.inf
    for i, B in enumerate(cb.blocks):
        if (min(B.shape) > 512):
            est = utils.spectral_norm_sq(B, maxiter=1000, rtol=1e-12,
                                         inflate=1.0, seed=1)
        else:
            est = utils.block_sq_norm(B)
        if (est > 0.0):
            worst = min(worst, cb.per_block_sq_norm[i]/est)
    return worst >= 1.0 - rtol, "min stored/estimated = %.8g" % worst


@_guarded("residual")
def check_residual(instance, seed=0):
    """Blockwise residual against the assembled matrix."""
    rng = np.random.default_rng(seed)
    x   = rng.standard_normal(instance.n)
    A   = instance.constraint.full_matrix()
    ref = np.asarray(A @ x).ravel() - instance.constraint.rhs
    err = np.linalg.norm(residual(instance, x) - ref)
    return err <= 1e-10*(1.0 + np.linalg.norm(ref)), "error %.3e" % err


@_guarded("prox_certificates")
def check_prox_certificates(instance, seed=0, trials=20):
    """
    (anchor - y)/weight must be a subgradient of g_i at y = prox.

    |

    """

    rng   = np.random.default_rng(seed)
    worst = 0.0
    for t in range(trials):
        i      = int(rng.integers(instance.m))
        term   = instance.prox_terms[i]
        anchor = 3.0*rng.standard_normal(instance.partition.width(i))
        weight = float(rng.uniform(0.1, 2.0))
        y = prox_apply(ScaledProxQuery(anchor, weight, term))
        s = (anchor - y)/weight

        if (term.kind == "zero"):
            err = np.max(np.abs(s))
        elif (term.kind == "l1"):
            nz  = y != 0.0
            err = max(np.max(np.abs(s[nz] - term.weight*np.sign(y[nz])),
                             initial=0.0),
                      np.max(np.abs(s[~nz]) - term.weight, initial=0.0))
        else:
            inside = (y > term.lo) & (y < term.hi)
            err = max(np.max(np.abs(s[inside]), initial=0.0),
                      np.max(s[y == term.lo], initial=0.0),
                      np.max(-s[y == term.hi], initial=0.0),
                      0.0 if term.in_domain(y) else np.inf)
        worst = max(worst, err)
    return worst <= 1e-9, "max certificate error %.3e" % worst


@_guarded("lipschitz")
def check_lipschitz(instance, seed=0, probes=10):
    """
    ||grad_i f(x + U_i d) - grad_i f(x)|| <= L_i ||d|| and
    ||grad f(x + U_i d) - grad f(x)|| <= L_r ||d|| on random probes.

    |

    """

    instance = ensure_lipschitz(instance)
    smooth   = instance.smooth
    L, L_r   = smooth.lipschitz_blocks, smooth.lipschitz_cross
    rng      = np.random.default_rng(seed)
    worst    = 0.0
    for t in range(probes):
        x  = rng.standard_normal(instance.n)
        i  = int(rng.integers(instance.m))
        sl = instance.partition.slice(i)
        y  = x.copy()
        y[sl] += rng.standard_normal(instance.partition.width(i))
        dn = np.linalg.norm(y - x)
        gx, gy = smooth.grad(x), smooth.grad(y)
        blk = np.linalg.norm(gy[sl] - gx[sl])
        full = np.linalg.norm(gy - gx)
        tol = 1e-9*(1.0 + np.linalg.norm(gx))
        worst = max(worst, blk - L[i]*dn - tol, full - L_r*dn - tol)
    return worst <= 0.0, "max excess %.3e" % worst


@_guarded("gradient")
def check_gradient(instance, seed=0, h=1e-4):
    """Central differences of f against block gradients."""
    rng  = np.random.default_rng(seed)
    x    = rng.standard_normal(instance.n)
    i    = int(rng.integers(instance.m))
    sl   = instance.partition.slice(i)
    d    = np.zeros(instance.n)
    d[sl] = rng.standard_normal(instance.partition.width(i))
    f    = instance.smooth.value
    fd   = (f(x + h*d) - f(x - h*d))/(2.0*h)
    gd   = float(block_grad_at(instance, x, i) @ d[sl])
    err  = abs(fd - gd)
    return err <= 1e-5*(1.0 + abs(gd) + abs(f(x))), "error %.3e" % err


@_guarded("residual_recursion")
def check_residual_recursion(instance, seed=0, steps=200, beta=1.0):
    """
    Serial steps keep r = A x - b and lam = -rho sum_t r^t.

    |

    """

    plan  = serial_plan(instance, beta)
    state = SaddleState.initial(instance)
    rng   = utils.make_streams(seed)[0]
    bnorm = np.linalg.norm(instance.constraint.rhs)
    rsum  = np.zeros(instance.q)
    worst_r = worst_l = 0.0
    for k in range(steps):
        step(instance, state, plan, rng)
        rsum += state.r
        worst_r = max(worst_r, np.linalg.norm(state.r
                                              - residual(instance, state.x)))
        worst_l = max(worst_l, np.linalg.norm(state.lam + plan.rho*rsum)
                      / (1.0 + np.linalg.norm(state.lam)))
    ok = worst_r <= 1e-8*(1.0 + bnorm) and worst_l <= 1e-8
    return ok, "residual drift %.3e, dual drift %.3e" % (worst_r, worst_l)


@_guarded("reference")
def check_reference(instance, tol=1e-8, solve=True):
    """
    The attached optimum carries a multiplier lambda* and passes the
    KKT test; without one, a reference solve must succeed. A point
    without a multiplier is not certified and fails.

    |

    """

    goal = tol*(1.0 + np.linalg.norm(instance.constraint.rhs))
    opt  = instance.optimum
    if (opt is None):
        if (not solve):
            return True, "no reference attached"
        opt = reference_solve(instance, tol=tol)
        return True, "solved, KKT residual %.3e" % opt.kkt_residual
    feas = np.linalg.norm(residual(instance, opt.x_star))
    if (opt.lambda_star is None):
        return False, "%s point without multiplier, feasibility %.3e" % (
            opt.method, feas)
    kkt = kkt_residual(instance, opt.x_star, opt.lambda_star)
    return kkt <= goal, "%s, KKT residual %.3e" % (opt.method, kkt)

#-------------------------------------------------------------------------
# Trace check and the suite
#-------------------------------------------------------------------------

@_guarded("trace")
def check_trace(trace):
    trace.validate()
    return True, "%d rows" % len(trace)


def verify(instance, seed=0, trace=None, solve_reference=True):
    """
    Runs every instance check (and `check_trace` when a trace is
    given).

    *Returns*

    results : list of CheckResult

    |

    """

    results = [check_structure(instance),
               check_spectral_bounds(instance),
               check_residual(instance, seed),
               check_prox_certificates(instance, seed),
               check_lipschitz(instance, seed),
               check_gradient(instance, seed),
               check_residual_recursion(instance, seed),
               check_reference(instance, solve=solve_reference)]
    if (trace is not None):
        results.append(check_trace(trace))
    logger.info("verify: %d of %d checks passed",
                sum(r.passed for r in results), len(results))
    return results


def report(results):
    """The results as a DataFrame (name, passed, detail)."""
    return pd.DataFrame([(r.name, r.passed, r.detail) for r in results],
                        columns=["check", "passed", "detail"])
