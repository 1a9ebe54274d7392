"""Closed-form entanglement references and the weak-barren-plateau test.

All entropies are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from scipy.special import digamma

from shadowguard.simulator import Region, as_region


def page_entropy_asymptotic(k: int, n: int) -> float:
    """k ln 2 - 2^-(n - 2k + 1): Page value of a k-qubit region of n qubits."""
    if not (1 <= k and 2 * k <= n):
        raise ValueError(f"need 1 <= k <= n/2, got k={k}, n={n}")
    return k * math.log(2) - 2.0 ** -(n - 2 * k + 1)


def page_entropy_exact(d_a: int, d: int) -> float:
    """Mean von Neumann entropy of a d_a-dimensional subsystem of a Haar state.

    With m = min(d_a, d/d_a) and m' = d/m this is
    sum_{j=m'+1}^{d} 1/j - (m - 1)/(2 m').
    """
    if d_a < 1 or d < 1 or d % d_a:
        raise ValueError("d_a must be a positive divisor of d")
    m = min(d_a, d // d_a)
    big = d // m
    harmonic = float(digamma(d + 1) - digamma(big + 1))
    return harmonic - (m - 1) / (2 * big)


def haar_average_purity(d_a: int, d_b: int) -> float:
    """(d_a + d_b) / (1 + d_a d_b): Haar-averaged purity of a d_a x d_b bipartition."""
    if d_a < 1 or d_b < 1:
        raise ValueError("dimensions must be positive")
    return (d_a + d_b) / (1 + d_a * d_b)


@dataclass(frozen=True)
class WbpConfig:
    """Weak-barren-plateau test on one region: WBP iff S2 >= alpha * S_Page(k, n)."""

    alpha: float
    region: Region
    n_qubits: int
    threshold: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        region = as_region(self.region, self.n_qubits)
        object.__setattr__(self, "region", region)
        object.__setattr__(self, "threshold", self.alpha * page_entropy_asymptotic(region.k, self.n_qubits))

    @classmethod
    def build(cls, alpha: float, region: Region | Iterable[int], n_qubits: int) -> WbpConfig:
        return cls(alpha, as_region(region, n_qubits), n_qubits)


def wbp_check(s2: float, config: WbpConfig) -> bool:
    """True when the region is in a weak barren plateau; equality counts as WBP."""
    if s2 < 0:
        raise ValueError("S2 must be non-negative")
    return s2 >= config.threshold
