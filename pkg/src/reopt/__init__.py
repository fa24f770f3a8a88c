"""Pricing engine for random-expiry options on trinomial trees."""

from .errors import (
    InvalidHazard,
    InvalidLaw,
    InvalidMode,
    InvalidParams,
    InvalidPrice,
    PricingError,
    TooLarge,
    UnboundedPayoff,
)
from .model import (
    EXPONENTIAL,
    LINEAR,
    MarketParams,
    MoveFactors,
    PeriodProbabilities,
    general_probs,
    homogeneous_probs,
    make_factors,
)
from .expiry import (
    ContinuousExpiry,
    ExpiryLaw,
    ExponentialWithAtom,
    GenericDensity,
    PointMass,
    discount_mgf,
    discretize,
    geometric_law,
    law_from_hazards,
)
from .payoff import PayoffSpec, evaluate
from .pricer import (
    PathRecord,
    PriceRange,
    PriceResult,
    fixed_expiry_prices,
    price_conditioning_sum,
    price_general_tree,
    price_path_enumeration,
    price_range,
    price_recombining,
    price_recursive_binomial,
    price_trinomial,
    price_with,
    price_zsc_closed_form,
)
from .continuum import (
    ConvergenceRow,
    McConfig,
    McEstimate,
    convergence_study,
    mc_price,
    sample_expiry,
)
from .bench import BenchRow, run_bench
from .selftest import SelftestReport, run_selftest

__version__ = "0.1.0"

__all__ = [
    "PricingError", "InvalidParams", "InvalidHazard", "InvalidLaw", "InvalidMode",
    "InvalidPrice", "UnboundedPayoff", "TooLarge",
    "MarketParams", "MoveFactors", "PeriodProbabilities",
    "make_factors", "homogeneous_probs", "general_probs", "EXPONENTIAL", "LINEAR",
    "ExpiryLaw", "ContinuousExpiry", "ExponentialWithAtom", "PointMass",
    "GenericDensity", "geometric_law", "law_from_hazards", "discretize", "discount_mgf",
    "PayoffSpec", "evaluate",
    "PriceResult", "PathRecord", "PriceRange",
    "price_trinomial", "price_recursive_binomial", "price_recombining",
    "price_conditioning_sum", "price_path_enumeration", "price_zsc_closed_form",
    "price_range", "price_general_tree", "price_with", "fixed_expiry_prices",
    "McConfig", "McEstimate", "ConvergenceRow", "sample_expiry", "mc_price",
    "convergence_study",
    "BenchRow", "run_bench",
    "SelftestReport", "run_selftest",
    "__version__",
]
