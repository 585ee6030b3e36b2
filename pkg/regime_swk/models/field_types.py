"""
Common type aliases for the regime_swk models.

This module provides reusable type aliases with validation constraints.
Uses Field() for all constraints.
"""
from typing import Annotated, Literal, TypeAlias

from pydantic import Field


# =============================================================================
# Numeric Constraints
# =============================================================================

NonNegativeInt: TypeAlias = Annotated[int, Field(ge=0)]
PositiveInt: TypeAlias = Annotated[int, Field(ge=1)]
PositiveFloat: TypeAlias = Annotated[float, Field(gt=0)]
Seed: TypeAlias = Annotated[int, Field(ge=0, lt=2**64)]
"""Non-negative integer seed accepted by numpy SeedSequence."""

Correlation: TypeAlias = Annotated[float, Field(gt=-1.0, lt=1.0)]
"""Open interval (-1, 1)."""

WassersteinOrder: TypeAlias = Literal[1, 2]
"""Order p of the Wasserstein distance; only the closed-form orders are supported."""


# =============================================================================
# Limits
# =============================================================================

MAX_EXHAUSTIVE_ATOMS: int = 8
"""Largest atom count accepted by the brute-force transport oracle."""

MAX_EXHAUSTIVE_LABELS: int = 8
"""Largest cluster or regime count accepted by exhaustive label matching."""
