"""One-dimensional continued fractions with exact rational arithmetic.

A word ``(a_1, ..., a_n)`` of positive integers names the cylinder of
points in (0, 1) whose first ``n`` partial quotients are ``a_1..a_n``.
All quantities here are exact ``Fraction`` values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from mpmath import iv

from .errors import InvalidInput
from .numerics import ivprec

Word = tuple[int, ...]


def as_word(word: Iterable[int]) -> Word:
    """Validate a word of partial quotients and return it as a tuple."""
    out = []
    for a in word:
        if isinstance(a, bool) or not isinstance(a, int):
            try:
                if int(a) != a:
                    raise ValueError
                a = int(a)
            except (TypeError, ValueError):
                raise InvalidInput(f"partial quotient {a!r} is not an integer") from None
        if a < 1:
            raise InvalidInput(f"partial quotient {a} is not a positive integer")
        out.append(a)
    return tuple(out)


def as_rational(x) -> Fraction:
    """Coerce ints, Fractions, floats and ``"p/q"`` strings to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InvalidInput("booleans are not rationals")
    if isinstance(x, (int, float)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise InvalidInput(f"cannot parse {x!r} as a rational") from None
    try:
        return Fraction(x)
    except (TypeError, ValueError):
        raise InvalidInput(f"cannot interpret {x!r} as a rational") from None


def format_rational(x: Fraction) -> str:
    """Serialize a rational as ``"p/q"``, always writing the denominator."""
    return f"{x.numerator}/{x.denominator}"


class Convergents(NamedTuple):
    p: int
    q: int
    p_prev: int
    q_prev: int


def convergents(word: Sequence[int]) -> Convergents:
    """Return ``(p_n, q_n, p_{n-1}, q_{n-1})`` for the word.

    Starts from ``p_{-1}=1, p_0=0, q_{-1}=0, q_0=1``; the empty word gives
    ``(0, 1, 1, 0)``.
    """
    word = as_word(word)
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    for a in word:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
    return Convergents(p, q, p_prev, q_prev)


@dataclass(frozen=True)
class Interval:
    """A real interval with rational endpoints and explicit closedness."""

    lo: Fraction
    hi: Fraction
    lo_closed: bool
    hi_closed: bool

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = as_rational(x)
        above = x >= self.lo if self.lo_closed else x > self.lo
        below = x <= self.hi if self.hi_closed else x < self.hi
        return above and below

    def gap(self, other: "Interval") -> Fraction:
        """Distance between the closures of two intervals (0 if they meet)."""
        return max(Fraction(0), other.lo - self.hi, self.lo - other.hi)

    def to_json(self) -> dict:
        return {
            "lo": format_rational(self.lo),
            "hi": format_rational(self.hi),
            "lo_closed": self.lo_closed,
            "hi_closed": self.hi_closed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Interval":
        return cls(as_rational(data["lo"]), as_rational(data["hi"]),
                   bool(data["lo_closed"]), bool(data["hi_closed"]))

    def __str__(self) -> str:
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{self.lo}, {self.hi}{right}"


UNIT_INTERVAL = Interval(Fraction(0), Fraction(1), False, False)


def cylinder_interval(word: Sequence[int]) -> Interval:
    """The set of x in (0, 1) whose expansion starts with ``word``.

    The endpoint ``p_n/q_n`` itself belongs to the cylinder and the other
    endpoint ``(p_n+p_{n-1})/(q_n+q_{n-1})`` does not. For even ``n`` the
    included endpoint is the left one.
    """
    word = as_word(word)
    if not word:
        return UNIT_INTERVAL
    p, q, pp, qp = convergents(word)
    a = Fraction(p, q)
    b = Fraction(p + pp, q + qp)
    if len(word) % 2 == 0:
        return Interval(a, b, True, False)
    return Interval(b, a, False, True)


def cylinder_length(word: Sequence[int]) -> Fraction:
    """``1 / (q_n (q_n + q_{n-1}))``."""
    _, q, _, qp = convergents(word)
    return Fraction(1, q * (q + qp))


class Expansion(NamedTuple):
    digits: Word
    terminated: bool


def digits_of(x, depth: int) -> Expansion:
    """First ``min(depth, len)`` partial quotients of ``x`` in (0, 1).

    Terminating expansions are reported in the canonical form whose last
    digit is at least 2; ``terminated`` says whether the expansion ended
    within ``depth`` digits.
    """
    x = as_rational(x)
    if not (0 < x < 1):
        raise InvalidInput(f"{x} is not in the open unit interval")
    if depth < 0:
        raise InvalidInput("depth must be non-negative")
    digits = []
    num, den = x.numerator, x.denominator
    # x = num/den; next digit is floor(den/num)
    while len(digits) < depth and num != 0:
        a, r = divmod(den, num)
        digits.append(a)
        num, den = r, num
    return Expansion(tuple(digits), num == 0)


def prepend_digits(y, word: Sequence[int]) -> Fraction:
    """The point ``[0; a_1, ..., a_N + y]`` obtained by pushing ``word`` in front of ``y``.

    Uses the Moebius form ``(p_N + y p_{N-1}) / (q_N + y q_{N-1})``.
    """
    y = as_rational(y)
    word = as_word(word)
    if not (0 <= y <= 1):
        raise InvalidInput(f"{y} is not in [0, 1]")
    p, q, pp, qp = convergents(word)
    return (p + y * pp) / (q + y * qp)


class LengthBounds(NamedTuple):
    lower: Fraction
    length: Fraction
    upper: Fraction


def check_length_bounds(word: Sequence[int]) -> LengthBounds:
    """Exact length together with the product bounds around it.

    ``lower = 1/2 prod (a_i+1)^-2`` and ``upper = prod a_i^-2``.
    """
    word = as_word(word)
    lower = Fraction(1, 2)
    upper = Fraction(1)
    for a in word:
        lower /= (a + 1) ** 2
        upper /= a * a
    return LengthBounds(lower, cylinder_length(word), upper)


def golden_length_bound(n: int):
    """Interval enclosure of ``phi^2 phi^(-2n)``, the uniform length bound at depth ``n``."""
    with ivprec(120):
        phi = (1 + iv.sqrt(5)) / 2
        return phi ** (2 - 2 * n)
