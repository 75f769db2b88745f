"""Large-deviation exponents for selected data compression of Markov sources."""

from . import empirical, ldr, markov, oracle, rates
from .errors import (
    AperiodicityError,
    DomainError,
    IrreducibilityError,
    LDPError,
    ShiftConsistencyError,
    SizeError,
    SpecError,
    StochasticityError,
    StructuralError,
)

__all__ = [
    "empirical",
    "ldr",
    "markov",
    "oracle",
    "rates",
    "AperiodicityError",
    "DomainError",
    "IrreducibilityError",
    "LDPError",
    "ShiftConsistencyError",
    "SizeError",
    "SpecError",
    "StochasticityError",
    "StructuralError",
]

__version__ = "0.1.0"
