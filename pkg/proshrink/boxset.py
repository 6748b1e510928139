"""
Coordinate-wise box constraints X = I_1 x ... x I_n.

Intervals are classified into three families:

- T1: sign-definite intervals that stay away from zero
  ([c, inf) with c > 0, (-inf, c] with c < 0, [c, d] with 0 < c < d,
  [d, c] with d < c < 0). On these |t| = sign(c) * t.
- T2: finite intervals with zero strictly inside (c < 0 < d).
- CLOSURE: everything else that is still a valid interval, such as [0, d],
  the whole line, half-lines containing zero, and degenerate [c, c].

Projection onto a box is a per-coordinate clamp, which np.clip does with
infinite bounds left untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence

import numpy as np
from numpy.typing import ArrayLike

from proshrink.core_linalg import DimensionMismatchError, Vector


class IntervalError(ValueError):
    """Raised for invalid intervals or operations undefined on their class."""


class IntervalClass(Enum):
    T1 = "T1"
    T2 = "T2"
    CLOSURE = "CLOSURE"


@dataclass(frozen=True)
class Interval:
    """
    A closed interval [lower, upper] of the extended real line.

    Attributes:
        lower: Left endpoint, -inf allowed
        upper: Right endpoint, +inf allowed

    Raises:
        IntervalError: If an endpoint is NaN, lower > upper, or an endpoint
            sits at the wrong infinity (lower = +inf or upper = -inf)

    Example:
        ```python
        I = Interval(1.0, 2.0)
        I.classify()        # IntervalClass.T1
        I.project(3.0)      # 2.0
        I.scale(2.0)        # Interval(0.5, 1.0)
        ```
    """

    lower: float
    upper: float

    def __post_init__(self) -> None:
        lower, upper = float(self.lower), float(self.upper)
        if math.isnan(lower) or math.isnan(upper):
            raise IntervalError(f"Interval endpoints must not be NaN: [{lower}, {upper}]")
        if lower == math.inf or upper == -math.inf:
            raise IntervalError(f"Interval [{lower}, {upper}] is empty")
        if lower > upper:
            raise IntervalError(f"Interval lower bound {lower} exceeds upper bound {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def whole_line(cls) -> Interval:
        return cls(-math.inf, math.inf)

    def classify(self) -> IntervalClass:
        """Return the interval family (T1, T2 or CLOSURE)."""
        lower, upper = self.lower, self.upper
        if (lower > 0 and upper > lower) or (upper < 0 and lower < upper):
            return IntervalClass.T1
        if lower < 0 < upper and math.isfinite(lower) and math.isfinite(upper):
            return IntervalClass.T2
        return IntervalClass.CLOSURE

    def sign_anchor(self) -> float:
        """
        Sign of the endpoint nearest zero for a T1 interval.

        Returns:
            +1.0 when the interval lies right of zero, -1.0 when left

        Raises:
            IntervalError: If the interval is not T1
        """
        if self.classify() is not IntervalClass.T1:
            raise IntervalError(f"sign anchor is only defined on T1 intervals, got {self}")
        return 1.0 if self.lower > 0 else -1.0

    def project(self, w: float) -> float:
        """Clamp w into the interval."""
        return min(max(float(w), self.lower), self.upper)

    def scale(self, tau: float) -> Interval:
        """
        Return I / tau, so that project(tau * w) == tau * scale(tau).project(w).

        Raises:
            IntervalError: If tau <= 0
        """
        if not tau > 0:
            raise IntervalError(f"scale factor must be positive, got {tau}")
        return Interval(self.lower / tau, self.upper / tau)

    def contains(self, t: float) -> bool:
        return self.lower <= t <= self.upper

    def __str__(self) -> str:
        left = "(" if self.lower == -math.inf else "["
        right = ")" if self.upper == math.inf else "]"
        return f"{left}{self.lower:g}, {self.upper:g}{right}"


class BoxSet:
    """
    Product of per-coordinate intervals, stored as two bound arrays.

    Attributes:
        lower: float64 array of left endpoints (read-only)
        upper: float64 array of right endpoints (read-only)

    Example:
        ```python
        box = BoxSet.uniform(400, -1.0, 1.0)
        box.contains(np.zeros(400))       # True
        box.project(np.array([...]))      # clamps each coordinate
        ```
    """

    def __init__(self, lower: ArrayLike, upper: ArrayLike) -> None:
        """
        Build a box from endpoint arrays.

        Args:
            lower: Left endpoints, length n >= 1
            upper: Right endpoints, same length

        Raises:
            DimensionMismatchError: If the arrays differ in shape or are empty
            IntervalError: If any coordinate interval is invalid
        """
        lo = np.array(lower, dtype=np.float64, ndmin=1)
        hi = np.array(upper, dtype=np.float64, ndmin=1)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise DimensionMismatchError(
                f"box bounds must be 1-D arrays of equal length, got {lo.shape} and {hi.shape}"
            )
        if lo.size == 0:
            raise DimensionMismatchError("box must have at least one coordinate")

        bad = np.isnan(lo) | np.isnan(hi) | (lo > hi) | (lo == np.inf) | (hi == -np.inf)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise IntervalError(f"coordinate {i}: invalid interval [{lo[i]}, {hi[i]}]")

        lo.setflags(write=False)
        hi.setflags(write=False)
        self.lower = lo
        self.upper = hi

    @classmethod
    def from_intervals(cls, intervals: Iterable[Interval]) -> BoxSet:
        items = list(intervals)
        return cls([I.lower for I in items], [I.upper for I in items])

    @classmethod
    def uniform(cls, n: int, lower: float, upper: float) -> BoxSet:
        """Box with the same interval [lower, upper] on all n coordinates."""
        if n < 1:
            raise DimensionMismatchError(f"box dimension must be >= 1, got {n}")
        return cls(np.full(n, lower, dtype=np.float64), np.full(n, upper, dtype=np.float64))

    @classmethod
    def whole_line(cls, n: int) -> BoxSet:
        """The unconstrained box R^n."""
        return cls.uniform(n, -np.inf, np.inf)

    def __len__(self) -> int:
        return int(self.lower.shape[0])

    def __getitem__(self, i: int) -> Interval:
        return Interval(float(self.lower[i]), float(self.upper[i]))

    def __iter__(self) -> Iterator[Interval]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BoxSet):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __repr__(self) -> str:
        return f"BoxSet(n={len(self)})"

    @property
    def intervals(self) -> list[Interval]:
        return list(self)

    @property
    def is_whole_line(self) -> bool:
        return bool(np.all(self.lower == -np.inf) and np.all(self.upper == np.inf))

    def classes(self) -> Sequence[IntervalClass]:
        return [I.classify() for I in self]

    def _check(self, v: Vector, name: str) -> None:
        if v.shape != self.lower.shape:
            raise DimensionMismatchError(f"{name} has shape {v.shape}, box has {len(self)} coordinates")

    def project(self, v: Vector) -> Vector:
        """Coordinate-wise clamp of v onto the box."""
        v = np.asarray(v, dtype=np.float64)
        self._check(v, "v")
        return np.clip(v, self.lower, self.upper)

    def contains(self, x: Vector) -> bool:
        """True iff every coordinate lies in its interval, endpoints included."""
        x = np.asarray(x, dtype=np.float64)
        self._check(x, "x")
        return bool(np.all((x >= self.lower) & (x <= self.upper)))

    def scale(self, tau: float) -> BoxSet:
        """The box X / tau."""
        if not tau > 0:
            raise IntervalError(f"scale factor must be positive, got {tau}")
        return BoxSet(self.lower / tau, self.upper / tau)
