"""
Base classes for models.

This module provides base classes for consistent model design.
"""
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator


class ModelBase(BaseModel):
    """
    Base class for all configuration and record models.

    Features:
    - use_attribute_docstrings: Uses field docstrings for schema descriptions
    - validate_by_name: Allows validation by field name
    - extra='forbid': Rejects unknown fields
    """
    model_config = ConfigDict(
        use_attribute_docstrings=True,
        validate_by_name=True,
        extra='forbid',
    )


class ArrayModelBase(ModelBase):
    """
    Base class for immutable models that hold numpy arrays.

    Arrays are coerced to ``float64`` or ``int64`` as declared by the subclass
    through ``ARRAY_DTYPES`` and are flagged read-only after validation, so a
    model can be shared across concurrent runs without copies.
    """
    model_config = ConfigDict(
        use_attribute_docstrings=True,
        validate_by_name=True,
        extra='forbid',
        frozen=True,
        arbitrary_types_allowed=True,
    )

    @model_validator(mode='before')
    @classmethod
    def _coerce_arrays(cls, values: Any) -> Any:
        dtypes: dict[str, type] = getattr(cls, 'ARRAY_DTYPES', {})
        if isinstance(values, dict):
            values = dict(values)
            for name, dtype in dtypes.items():
                if values.get(name) is not None:
                    values[name] = np.array(values[name], dtype=dtype)
        return values

    @model_validator(mode='after')
    def _freeze_arrays(self) -> 'ArrayModelBase':
        for value in self.__dict__.values():
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
        return self
