"""Symmetric local Levy measures with regularly varying tails.

Only the pure power family U(x) = c * x**(-alpha) ships; it has a closed-form
inverse and makes the marginal law of the process exactly symmetric stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

TailFunction = Callable[[np.ndarray], np.ndarray]


def _positive(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"{name} must be positive")
    return arr


def _unwrap(arr: np.ndarray):
    return float(arr) if arr.ndim == 0 else arr


@dataclass(frozen=True)
class SplitTail:
    """Tails of the big-jump (|x| > 1) and small-jump (|x| <= 1) pieces."""

    big: TailFunction
    small: TailFunction


@dataclass(frozen=True)
class LevyTail:
    """Upper tail U(x) = rho(x, inf) = scale * x**(-alpha) of a symmetric Levy measure.

    ``p0`` is the lower-tail exponent with x**p0 * U(x) -> 0 as x -> 0; it
    defaults to the midpoint of (alpha, 2).
    """

    alpha: float
    scale: float = 1.0
    p0: float | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.p0 is None:
            object.__setattr__(self, "p0", (self.alpha + 2.0) / 2.0)
        if not self.alpha < self.p0 < 2.0:
            raise ValueError(f"p0 must lie in (alpha, 2), got {self.p0}")

    def tail(self, x):
        x = _positive(x, "x")
        return _unwrap(self.scale * x ** (-self.alpha))

    def inverse_tail(self, y):
        """Right-continuous inverse inf{x > 0 : U(x) <= y}."""
        y = _positive(y, "y")
        return _unwrap((self.scale / y) ** (1.0 / self.alpha))

    def split(self) -> SplitTail:
        u1 = self.scale  # U(1)

        def big(x):
            x = _positive(x, "x")
            return _unwrap(self.scale * np.maximum(x, 1.0) ** (-self.alpha))

        def small(x):
            x = _positive(x, "x")
            return _unwrap(np.where(x < 1.0, self.scale * x ** (-self.alpha) - u1, 0.0))

        return SplitTail(big=big, small=small)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "scale": self.scale, "p0": self.p0}

    @classmethod
    def from_dict(cls, d: dict) -> "LevyTail":
        return cls(alpha=float(d["alpha"]), scale=float(d.get("scale", 1.0)),
                   p0=None if d.get("p0") is None else float(d["p0"]))


def tail(lt: LevyTail, x):
    return lt.tail(x)


def inverse_tail(lt: LevyTail, y):
    return lt.inverse_tail(y)


def split(lt: LevyTail) -> SplitTail:
    return lt.split()


def squared_transform(tail_l: TailFunction) -> TailFunction:
    """Tail of the positive Levy measure of squared jumps: x -> 2 * tail_l(sqrt(x)).

    This is the local Levy measure driving the diagonal part of the sample
    autocovariance.
    """

    def transformed(x):
        x = _positive(x, "x")
        return _unwrap(2.0 * np.asarray(tail_l(np.sqrt(x)), dtype=float))

    return transformed
