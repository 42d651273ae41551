import re
from typing import List
from typing import Tuple

_RANGE_PATTERN = re.compile(r"^\s*(-?\d+)\s*(?:\.\.\s*(-?\d+)\s*)?$")


def parse_int_range(string: str) -> Tuple[int, int]:
    """Parse an inclusive integer interval written as ``"a..b"`` or a single integer ``"a"``.

    Returns:
        (lower, upper): the interval bounds; a single integer gives ``(a, a)``
    """
    match = _RANGE_PATTERN.match(string)
    if match is None:
        raise ValueError(f"Cannot parse integer range {string!r}; expected 'a..b' or 'a'")
    lower = int(match.group(1))
    upper = int(match.group(2)) if match.group(2) is not None else lower
    if upper < lower:
        raise ValueError(f"Integer range {string!r} is empty")

    return lower, upper


def parse_float_list(string: str) -> List[float]:
    """Parse a comma-separated list of floats, e.g. ``"1e-1,5e-2"``."""
    parts = [part.strip() for part in string.split(",") if part.strip()]
    if not parts:
        raise ValueError(f"Cannot parse an empty float list from {string!r}")

    return [float(part) for part in parts]
