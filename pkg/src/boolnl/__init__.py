"""Higher-order nonlinearity of Boolean functions.

Truth tables and transforms live in :mod:`boolnl.core`, Reed-Muller codes in
:mod:`boolnl.rmcode`, exact nonlinearity in :mod:`boolnl.nonlin`, bound
evaluators in :mod:`boolnl.bounds` and seeded experiments in
:mod:`boolnl.experiments`.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AnfCoefficients,
    TruthTable,
    WalshSpectrum,
    correlation_y,
    degree,
    distance,
    mobius_transform,
    parse_hex,
    sample_uniform,
    scalar_product_signs,
    walsh_hadamard,
    weight,
)
from .errors import CapExceeded, DimensionMismatch, DomainError  # noqa: E402
from .nonlin import (  # noqa: E402
    NonlinearityResult,
    nonlinearity,
    nonlinearity_exhaustive,
    nonlinearity_order1,
    normalized_statistic,
)
from .rmcode import RMCodeSpec, build_basis, encode, weight_census  # noqa: E402
from .rng import SeedSpec, derive_stream  # noqa: E402

__all__ = [
    "AnfCoefficients",
    "CapExceeded",
    "DimensionMismatch",
    "DomainError",
    "NonlinearityResult",
    "RMCodeSpec",
    "SeedSpec",
    "TruthTable",
    "WalshSpectrum",
    "build_basis",
    "correlation_y",
    "degree",
    "derive_stream",
    "distance",
    "encode",
    "mobius_transform",
    "nonlinearity",
    "nonlinearity_exhaustive",
    "nonlinearity_order1",
    "normalized_statistic",
    "parse_hex",
    "sample_uniform",
    "scalar_product_signs",
    "walsh_hadamard",
    "weight",
    "weight_census",
]
