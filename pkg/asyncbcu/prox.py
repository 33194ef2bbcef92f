# Copyright 2026 The asyncbcu developers, MIT license
"""
Closed-form proximal maps of the separable terms g_i, scaled for the
block subproblem with P_i = eta_i I.

**Classes**

   * ScaledProxQuery - anchor, weight and term of one prox evaluation

**Functions**

   * prox_apply             - argmin_y g(y) + ||y - anchor||^2/(2 weight)
   * solve_block_subproblem - exact minimizer of the linearized block step

|

"""

#-----------------------------------------------------
# Import main libraries and modules
#-----------------------------------------------------

from dataclasses import dataclass

import numpy as np

import asyncbcu.utils as utils
from asyncbcu.errors import ParameterError
from asyncbcu.problem import ProxTerm

#-------------------------------------------------------------------------
# ScaledProxQuery
#-------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaledProxQuery:

    """
    One prox evaluation.

    *Parameters*

    anchor : ndarray
        the point x_i - (1/eta_i)*(linear term)
    weight : float
        1/eta_i, positive and finite
    term : ProxTerm
        the g_i to apply

    |

    """

    anchor: np.ndarray
    weight: float
    term: ProxTerm

    def __post_init__(self):
        w = self.weight
        if (not (np.isfinite(w) and w > 0.0)):
            raise ParameterError("prox weight must be positive and finite, "
                                 "got %r" % (w,))
        object.__setattr__(self, "anchor",
                           np.ascontiguousarray(np.atleast_1d(self.anchor),
                                                dtype=float))

#-------------------------------------------------------------------------
# PROX_APPLY
#-------------------------------------------------------------------------

def prox_apply(query):
    """
    Proximal map of a scaled term,

        argmin_y  term(y) + ||y - anchor||^2 / (2*weight)

    *Closed forms*

       zero   : anchor
       l1(w)  : soft threshold at w*weight (ties at the kink go to 0)
       box    : clip to [lo, hi]
       nonneg : clip at 0

    |

    """

    term = query.term
    a    = query.anchor
    if (term.kind == "l1"):
        return utils.soft_threshold(a, term.weight*query.weight)
    if (term.is_indicator):
        return utils.clip(a, term.lo, term.hi)
    return a.copy()

#-------------------------------------------------------------------------
# SOLVE_BLOCK_SUBPROBLEM
#-------------------------------------------------------------------------

def solve_block_subproblem(instance, x, r, lam, i, grad, beta, eta_i):
    """
    Solves the block-i step

        argmin_y <grad - A_i.T (lam - beta r), y> + g_i(y)
                 + (eta_i/2) ||y - x_i||^2

    exactly, as a prox with anchor x_i - (grad - A_i.T(lam - beta r))/eta_i
    and weight 1/eta_i.

    *Parameters*

    instance : ProblemInstance
    x, r, lam : ndarray
        current primal point, residual and multipliers
    i : int
        block index
    grad : ndarray
        the block gradient to use (current or delayed)
    beta : float
        augmented Lagrangian penalty
    eta_i : float
        block weight, P_i = eta_i I

    *Returns*

    x_i_new : ndarray [w_i]

    |

    """

    if (not eta_i > 0.0):
        raise ParameterError("eta_i must be positive, got %r" % (eta_i,))

    xi     = x[instance.partition.slice(i)]
    linear = grad - instance.constraint.block_rmatvec(i, lam - beta*r)
    query  = ScaledProxQuery(xi - linear/eta_i, 1.0/eta_i,
                             instance.prox_terms[i])
    return prox_apply(query)
