"""Built-in functions, keyword constants and primitive operator semantics.

Doubles follow IEEE 754 (Python raises on several of these, so the helpers
below map those cases back to inf/NaN). Ints are 64-bit signed; overflow is
an :class:`EvaluationError` rather than a silent wrap.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Callable

from lola.errors import EvaluationError
from lola.syntax import StreamType

B, I, D, S = StreamType.BOOL, StreamType.INT, StreamType.DOUBLE, StreamType.STRING

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1
DOUBLE_MIN = -sys.float_info.max  # most negative finite, the identity of max
DOUBLE_MAX = sys.float_info.max

KEYWORD_TYPES = {"position": I, "int_min": I, "int_max": I, "double_min": D, "double_max": D}
KEYWORD_VALUES = {"int_min": INT_MIN, "int_max": INT_MAX, "double_min": DOUBLE_MIN, "double_max": DOUBLE_MAX}


class IntDivisionByZero(Exception):
    """Raised by :func:`int_div`; callers turn it into a diagnostic."""


def check_int(v: int) -> int:
    if INT_MIN <= v <= INT_MAX:
        return v
    raise EvaluationError(f"integer overflow: {v} does not fit in 64 bits")


def int_add(a: int, b: int) -> int:
    return check_int(a + b)


def int_sub(a: int, b: int) -> int:
    return check_int(a - b)


def int_mul(a: int, b: int) -> int:
    return check_int(a * b)


def int_neg(a: int) -> int:
    return check_int(-a)


def int_div(a: int, b: int) -> int:
    """Quotient truncated toward zero."""
    if b == 0:
        raise IntDivisionByZero
    q = abs(a) // abs(b)
    return check_int(q if (a < 0) == (b < 0) else -q)


def float_div(a: float, b: float) -> float:
    try:
        return a / b
    except ZeroDivisionError:
        if a == 0.0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def float_pow(a: float, b: float) -> float:
    try:
        return math.pow(a, b)
    except ValueError:
        # negative base with non-integral exponent, or 0 ** negative
        if a == 0.0:
            odd = b.is_integer() and int(b) % 2 == 1
            return math.copysign(math.inf, a) if odd else math.inf
        return math.nan
    except OverflowError:
        odd = b.is_integer() and int(b) % 2 == 1
        return -math.inf if (a < 0 and odd) else math.inf


def _total(fn: Callable[[float], float]) -> Callable[[float], float]:
    def wrapped(x: float) -> float:
        try:
            return fn(x)
        except ValueError:
            return math.nan
        except OverflowError:
            return math.inf

    wrapped.__name__ = fn.__name__
    return wrapped


sqrt = _total(math.sqrt)
sin = _total(math.sin)
cos = _total(math.cos)
tan = _total(math.tan)
exp = _total(math.exp)


def log(x: float) -> float:
    if x == 0.0:
        return -math.inf
    try:
        return math.log(x)
    except ValueError:
        return math.nan


def difference(a: float, b: float) -> float:
    """Deviation magnitude ``|a - b|``."""
    return abs(a - b)


def fmax(a: float, b: float) -> float:
    if math.isnan(a) or math.isnan(b):
        return math.nan
    return a if a >= b else b


def fmin(a: float, b: float) -> float:
    if math.isnan(a) or math.isnan(b):
        return math.nan
    return a if a <= b else b


def to_int(x: float) -> int:
    if math.isnan(x) or math.isinf(x):
        raise EvaluationError(f"cannot convert {x} to int")
    return check_int(int(x))


def iabs(a: int) -> int:
    return check_int(abs(a))


@dataclass(frozen=True)
class Builtin:
    name: str
    params: tuple[StreamType, ...]
    result: StreamType
    impl: Callable
    partial: bool = False  # may raise EvaluationError


_CATALOG: dict[str, list[Builtin]] = {}


def _add(name: str, params: tuple, result: StreamType, impl: Callable, partial: bool = False) -> None:
    _CATALOG.setdefault(name, []).append(Builtin(name, params, result, impl, partial))


_add("min", (I, I), I, min)
_add("min", (D, D), D, fmin)
_add("max", (I, I), I, max)
_add("max", (D, D), D, fmax)
_add("abs", (I,), I, iabs, partial=True)
_add("abs", (D,), D, abs)
_add("sqrt", (D,), D, sqrt)
_add("sin", (D,), D, sin)
_add("cos", (D,), D, cos)
_add("tan", (D,), D, tan)
_add("exp", (D,), D, exp)
_add("log", (D,), D, log)
_add("atan2", (D, D), D, math.atan2)
_add("difference", (D, D), D, difference)
_add("concat", (S, S), S, lambda a, b: a + b)
_add("int", (D,), I, to_int, partial=True)
_add("double", (I,), D, float)


def provide_builtins() -> dict[str, list[Builtin]]:
    """Name -> overloads. Returned dict is a copy; safe to mutate."""
    return {name: list(overloads) for name, overloads in _CATALOG.items()}


def resolve(name: str, arg_types: tuple[StreamType, ...]) -> Builtin | None:
    for b in _CATALOG.get(name, ()):
        if b.params == arg_types:
            return b
    return None


def keyword_value(name: str, position: int) -> int | float:
    if name == "position":
        return position
    return KEYWORD_VALUES[name]
