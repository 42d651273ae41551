from fractions import Fraction
from typing import Any

import pydantic


def format_fraction(value: Fraction) -> str:
    """Render a rational as ``"num/den"`` (integers included, e.g. ``"0/1"``)."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


class CustomModel(pydantic.BaseModel):
    """Standard pydantic BaseModel configuration.

    Every record in the toolkit is an immutable value, so instances are frozen (and therefore hashable).
    """

    class Config:
        arbitrary_types_allowed = True
        copy_on_model_validation = "none"
        frozen = True
        extra = "forbid"
        allow_population_by_field_name = True

        json_encoders = {
            Fraction: format_fraction,
        }

    def __rich_repr__(self):
        """WORKAROUND for Rich Repr Protocol, which trips over the Fraction fields when loguru pretty prints errors."""
        yield None


def convert_to_fraction(value: Any) -> Fraction:
    """Convert ints, ``"num/den"`` strings and Fractions to a canonical Fraction.

    Floats are rejected: exact code paths must never be seeded with binary floating-point values.
    """
    if isinstance(value, float):
        raise TypeError(f"Refusing to build an exact rational from float {value!r}")
    if isinstance(value, (int, str, Fraction)):
        return Fraction(value)
    raise TypeError(f"Cannot interpret {value!r} as a rational number")
