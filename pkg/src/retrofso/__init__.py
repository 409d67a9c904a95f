"""Outage analysis of retroreflector-based FSO fine tracking.

Analytical moment pipeline (joint pointing loss, correlated Gamma-Gamma
fading, alpha-mu moment matching) plus a Monte Carlo channel simulator used
to cross-check it.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DomainError,
    EstimationError,
    NumericalError,
    UnsupportedOrderError,
)
from .numerics import QuadratureSpec
from .geometry import CCRLayout, DerivedBudget, LinkGeometry, derive_budget, layout_circular, layout_linear
from .channel_moments import MomentSet, TurbulenceParams, s_moment, moment_set, u_moment


__all__ = [
    "AlphaMuParams",
    "CCRLayout",
    "ConfigurationError",
    "DerivedBudget",
    "DomainError",
    "EstimationError",
    "LinkGeometry",
    "MomentSet",
    "NumericalError",
    "QuadratureSpec",
    "TurbulenceParams",
    "UnsupportedOrderError",
    "alpha_mu_cdf",
    "derive_budget",
    "fit_alpha_mu",
    "layout_circular",
    "layout_linear",
    "moment_set",
    "outage_probability",
    "s_moment",
    "u_moment",
]
from .alphamu import AlphaMuParams, alpha_mu_cdf, fit_alpha_mu, outage_probability
