import math

TIE_RTOL = 1e-12


def near(a: float, b: float, rtol: float = TIE_RTOL) -> bool:
    if a == b:
        return True
    if math.isinf(a) or math.isinf(b):
        return False
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def first_argmin(values) -> int:
    """Index of the first value that ties (to relative 1e-12) with the minimum."""
    values = list(values)
    best = min(values)
    for i, v in enumerate(values):
        if near(v, best):
            return i
    raise ValueError("empty or NaN-valued sequence")


def first_argmax(values) -> int:
    values = list(values)
    best = max(values)
    for i, v in enumerate(values):
        if near(v, best):
            return i
    raise ValueError("empty or NaN-valued sequence")
