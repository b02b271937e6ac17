"""Numerical laboratory for CLT rates of stationary sequences in L^p(mu).

Submodules: ``measure`` (discretized L^p spaces), ``frechet`` (norm-power
functionals and their derivatives), ``generators`` (stationary sequences),
``empirical`` (empirical-CDF fields), ``dependence`` (mixing coefficients),
``gaussian`` (limit covariance and sampling), ``metrics`` (distances),
``bounds`` (rate bound and fits) and ``cli``.
"""

from .measure import DiscreteMeasure, LpVector, lp_norm
from .frechet import PsiFunctional, psi_eval, psi_d1, psi_d2, psi_d3, fd_derivative
from .generators import IIDModel, FiniteMarkov, LSVModel, simulate, two_state_chain
from .laws import DiscreteLaw1D

__version__ = "0.1.0"

__all__ = [
    "DiscreteMeasure",
    "LpVector",
    "lp_norm",
    "PsiFunctional",
    "psi_eval",
    "psi_d1",
    "psi_d2",
    "psi_d3",
    "fd_derivative",
    "IIDModel",
    "FiniteMarkov",
    "LSVModel",
    "simulate",
    "two_state_chain",
    "DiscreteLaw1D",
]
