"""Power-law dose profiles.

Ordered component doses in a prescription decay like w_r = w_1 * r^(-z).
The decay exponent z summarizes the whole dose vector in one token: its
range [0, 3) is split into 15 equal intervals of width 0.2, the last one
open above, and each token decodes back to its interval center.

Fitting uses log-log least squares anchored at the heaviest dose:

    z = sum_{r=2..n} ln(r) * ln(w_1 / w_r)  /  sum_{r=2..n} ln(r)^2

which is deterministic, scale invariant (only ratios w_1/w_r enter) and
exact on model-consistent inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .types import CorpusError

ZIPF_INTERVALS = 15
ZIPF_MAX = 3.0
_WIDTH = ZIPF_MAX / ZIPF_INTERVALS


def fit_zipf_exponent(weights: list[float] | tuple[float, ...]) -> float:
    """Fit the decay exponent of a non-increasing positive weight list."""
    if len(weights) == 0:
        raise CorpusError("empty weight list")
    prev = None
    for w in weights:
        if w <= 0.0:
            raise CorpusError(f"non-positive weight {w}")
        if prev is not None and w > prev:
            raise CorpusError("weights must be non-increasing")
        prev = w
    if len(weights) == 1:
        return 0.0
    w1 = weights[0]
    num = 0.0
    den = 0.0
    for r, w in enumerate(weights[1:], start=2):
        lr = math.log(r)
        num += lr * math.log(w1 / w)
        den += lr * lr
    return num / den


def zipf_token(z: float) -> int:
    """Interval index of z under the fixed 15-interval layout; clamped above."""
    if z < 0.0:
        raise CorpusError(f"exponent {z} is negative")
    return min(int(z / _WIDTH), ZIPF_INTERVALS - 1)


def zipf_interval_center(token: int) -> float:
    """Center of a token's interval; used when decoding a token back to z."""
    if not 0 <= token < ZIPF_INTERVALS:
        raise CorpusError(f"token {token} outside [0, {ZIPF_INTERVALS - 1}]")
    return (token + 0.5) * _WIDTH


def reconstruct_weights(z: float, w_max: float, n: int, *, rounded: bool = False) -> list[float]:
    """Doses w_r = w_max * r^(-z) for ranks 1..n.

    With rounded=True values are rounded to the 0.1 g display grid (and
    floored at 0.1 g so every dose stays positive).
    """
    if n < 1:
        raise CorpusError(f"need n >= 1, got {n}")
    if w_max <= 0.0:
        raise CorpusError(f"need w_max > 0, got {w_max}")
    weights = [w_max * r ** (-z) for r in range(1, n + 1)]
    if rounded:
        weights = [max(round(w, 1), 0.1) for w in weights]
    return weights


@dataclass(frozen=True)
class ZipfModel:
    """A fitted dose profile: exponent, anchor weight and its token."""

    exponent: float
    w_max: float
    interval_token: int

    def __post_init__(self) -> None:
        if zipf_token(self.exponent) != self.interval_token:
            raise CorpusError(
                f"token {self.interval_token} inconsistent with exponent {self.exponent}"
            )

    @classmethod
    def fit(cls, weights) -> "ZipfModel":
        z = fit_zipf_exponent(weights)
        return cls(exponent=z, w_max=weights[0], interval_token=zipf_token(z))

    @classmethod
    def from_token(cls, token: int, w_max: float) -> "ZipfModel":
        return cls(exponent=zipf_interval_center(token), w_max=w_max, interval_token=token)

    def weights(self, n: int, *, rounded: bool = False) -> list[float]:
        return reconstruct_weights(self.exponent, self.w_max, n, rounded=rounded)
