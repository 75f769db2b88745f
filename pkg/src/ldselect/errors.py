"""Exception hierarchy shared by every module."""

from __future__ import annotations


class LDPError(Exception):
    """Base class for all errors raised by :mod:`ldselect`."""


class StructuralError(LDPError):
    """A transition model violates a structural requirement."""

    property_name = "structure"


class StochasticityError(StructuralError):
    property_name = "row-stochastic"


class IrreducibilityError(StructuralError):
    property_name = "irreducible"


class AperiodicityError(StructuralError):
    property_name = "aperiodic"


class ShiftConsistencyError(StructuralError):
    property_name = "shift-consistent"


class DomainError(LDPError, ValueError):
    """An argument lies outside the domain of an operation."""


class SpecError(LDPError, ValueError):
    """A weight/selection/constraint specification is malformed."""


class SizeError(LDPError):
    """Exhaustive enumeration would exceed the size guard."""
