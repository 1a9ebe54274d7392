"""Classical shadows from random single-qubit Pauli measurements.

A snapshot is stored as one (basis, bit) pair per qubit; the implied matrix is
``kron_q (3 |s_q><s_q| - I)`` and is never materialized. Basis codes follow
the simulator (0=X, 1=Y, 2=Z) and bit 0 is the +1 eigenvalue.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from shadowguard._kernels import basis_probabilities
from shadowguard.hamiltonians import ObservableSum, PauliTerm
from shadowguard.simulator import Region, Statevector, as_region

SCHEMES = ("pauli", "computational")
MAX_PURITY_REGION = 6
# entries of the probability table handled per sampling chunk
_CHUNK_ENTRIES = 1 << 22

# tr[(3|s><s| - I)(3|s'><s'| - I)] indexed by local code 2*basis + bit
_PAIR_KERNEL = np.full((6, 6), 0.5)
for _b in range(3):
    _PAIR_KERNEL[2 * _b, 2 * _b] = _PAIR_KERNEL[2 * _b + 1, 2 * _b + 1] = 5.0
    _PAIR_KERNEL[2 * _b, 2 * _b + 1] = _PAIR_KERNEL[2 * _b + 1, 2 * _b] = -4.0


@dataclass(frozen=True)
class Mixture:
    """Classical mixture sum_i w_i |psi_i><psi_i|; each snapshot draws a component."""

    weights: tuple[float, ...]
    states: tuple[Statevector, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.states) or not len(w):
            raise ValueError("need one weight per state")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        if len({s.n_qubits for s in self.states}) != 1:
            raise ValueError("mixture components must have equal qubit counts")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def n_qubits(self) -> int:
        return self.states[0].n_qubits


@dataclass(frozen=True, eq=False)
class ShadowSet:
    """T snapshots: ``bases`` and ``bits`` are (T, n) uint8 arrays."""

    bases: np.ndarray
    bits: np.ndarray
    seed: int | None = None
    scheme: str = "pauli"
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        bases = np.array(self.bases, dtype=np.uint8)
        bits = np.array(self.bits, dtype=np.uint8)
        if bases.ndim != 2 or bases.shape != bits.shape:
            raise ValueError("bases and bits must be (T, n) arrays of equal shape")
        if bases.size and (bases.max() > 2 or bits.max() > 1):
            raise ValueError("bases must be in {0,1,2} and bits in {0,1}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "computational" and np.any(bases != 2):
            raise ValueError("computational-basis shadows must have every basis = Z")
        bases.flags.writeable = False
        bits.flags.writeable = False
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "bits", bits)

    @property
    def T(self) -> int:
        return self.bases.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.bases.shape[1]

    def __len__(self) -> int:
        return self.T

    def subset(self, rows) -> ShadowSet:
        return ShadowSet(self.bases[rows], self.bits[rows], self.seed, self.scheme, dict(self.source))

    def snapshot_matrix(self, t: int, qubits: Sequence[int] | None = None) -> np.ndarray:
        """Dense reduced snapshot on ``qubits`` (little-endian within the region)."""
        qubits = range(self.n_qubits) if qubits is None else qubits
        out = np.ones((1, 1), dtype=np.complex128)
        for q in qubits:
            out = np.kron(_local_snapshot(int(self.bases[t, q]), int(self.bits[t, q])), out)
        return out

    def codes(self) -> np.ndarray:
        return 2 * self.bases + self.bits

    def to_json(self) -> dict:
        rows = ["".join(map(str, row)) for row in self.codes().tolist()]
        return {
            "n_qubits": self.n_qubits,
            "T": self.T,
            "seed": self.seed,
            "scheme": self.scheme,
            "source": self.source,
            "codes": rows,
        }

    @classmethod
    def from_json(cls, data: dict | str) -> ShadowSet:
        if isinstance(data, str):
            data = json.loads(data)
        n = data["n_qubits"]
        codes = np.array([[int(ch) for ch in row] for row in data["codes"]], dtype=np.uint8).reshape(-1, n)
        return cls(codes // 2, codes % 2, data.get("seed"), data.get("scheme", "pauli"), data.get("source", {}))


def _local_snapshot(basis: int, bit: int) -> np.ndarray:
    """3|s><s| - I for the eigenvector of Pauli ``basis`` with eigenvalue (-1)^bit."""
    sign = 1 - 2 * bit
    paulis = (
        np.array([[0, 1], [1, 0]], dtype=np.complex128),
        np.array([[0, -1j], [1j, 0]]),
        np.array([[1, 0], [0, -1]], dtype=np.complex128),
    )
    proj = 0.5 * (np.eye(2) + sign * paulis[basis])
    return 3 * proj - np.eye(2)


def _sample_outcomes(state: Statevector, configs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One Born-rule shot per row of ``configs``; returns outcome indices."""
    uniq, inverse = np.unique(configs, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    u = rng.random(configs.shape[0])
    dim = state.dim
    out = np.empty(configs.shape[0], dtype=np.int64)
    chunk = max(1, _CHUNK_ENTRIES // dim)
    for start in range(0, uniq.shape[0], chunk):
        block = np.ascontiguousarray(uniq[start:start + chunk], dtype=np.int8)
        probs = np.empty((block.shape[0], dim))
        basis_probabilities(state.amplitudes, block, probs)
        cdf = np.cumsum(probs, axis=1)
        cdf /= cdf[:, -1:]
        # stack rows on one increasing axis: row r occupies (r, r + 1]
        offsets = np.arange(block.shape[0])[:, None]
        flat = (cdf + offsets).ravel()
        rows = np.nonzero((inverse >= start) & (inverse < start + block.shape[0]))[0]
        local = inverse[rows] - start
        pos = np.searchsorted(flat, local + u[rows], side="right")
        out[rows] = np.minimum(pos - local * dim, dim - 1)
    return out


def collect_shadows(source: Statevector | Mixture, T: int, rng: np.random.Generator,
                    scheme: str = "pauli", seed: int | None = None,
                    metadata: dict | None = None) -> ShadowSet:
    """Acquire T snapshots of ``source``.

    Every snapshot uses an independent copy of the source (a fixed pure state
    or a component drawn from a :class:`Mixture`), an independent uniformly
    random Pauli basis per qubit (or Z everywhere for the computational
    scheme), and a single shot.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    n = source.n_qubits
    if scheme == "pauli":
        bases = rng.integers(0, 3, size=(T, n), dtype=np.int8)
    else:
        bases = np.full((T, n), 2, dtype=np.int8)

    if isinstance(source, Mixture):
        component = rng.choice(len(source.states), size=T, p=source.weights)
        outcomes = np.empty(T, dtype=np.int64)
        for c, state in enumerate(source.states):
            rows = np.nonzero(component == c)[0]
            if rows.size:
                outcomes[rows] = _sample_outcomes(state, bases[rows], rng)
    else:
        outcomes = _sample_outcomes(source, bases, rng)

    bits = (outcomes[:, None] >> np.arange(n)) & 1
    return ShadowSet(bases.astype(np.uint8), bits.astype(np.uint8), seed, scheme, dict(metadata or {}))


def _require(shadows: ShadowSet, minimum: int = 1) -> None:
    if shadows.T < minimum:
        raise ValueError(f"need at least {minimum} snapshots, got {shadows.T}")


def snapshot_values(shadows: ShadowSet, term: PauliTerm) -> np.ndarray:
    """Single-snapshot estimates tr(O rho_t) of one Pauli term, shape (T,).

    Only the term's support is read: 0 if a support qubit was measured in a
    different basis, else 3^k times the product of the eigenvalue signs
    (no 3^k factor for computational-basis shadows).
    """
    _require(shadows)
    coef = complex(term.coefficient)
    if term.weight == 0:
        return np.full(shadows.T, coef.real)
    qubits = np.array([q for q, _ in term.support])
    if qubits.max() >= shadows.n_qubits:
        raise ValueError("term acts outside the shadow register")
    codes = np.array(["XYZ".index(p) for _, p in term.support], dtype=np.uint8)
    if shadows.scheme == "computational":
        if np.any(codes != 2):
            raise ValueError("computational-basis shadows only estimate Z-type terms")
        scale = 1.0
    else:
        scale = 3.0 ** term.weight
    match = np.all(shadows.bases[:, qubits] == codes, axis=1)
    parity = np.bitwise_xor.reduce(shadows.bits[:, qubits], axis=1)
    return coef.real * scale * match * (1.0 - 2.0 * parity)


def estimate_observable(shadows: ShadowSet, term: PauliTerm) -> float:
    return float(np.mean(snapshot_values(shadows, term)))


def snapshot_energies(shadows: ShadowSet, obs: ObservableSum) -> np.ndarray:
    """Per-snapshot energy estimates; every term is read from the same snapshots."""
    _require(shadows)
    out = np.zeros(shadows.T)
    for term in obs.terms:
        out += snapshot_values(shadows, term)
    return out


def estimate_energy(shadows: ShadowSet, obs: ObservableSum) -> float:
    return float(np.mean(snapshot_energies(shadows, obs)))


def _region_histogram(shadows: ShadowSet, qubits: Sequence[int]) -> np.ndarray:
    k = len(qubits)
    local = shadows.codes()[:, list(qubits)].astype(np.int64)
    flat = local @ (6 ** np.arange(k))
    return np.bincount(flat, minlength=6 ** k).astype(np.float64)


def _pair_sum(counts: np.ndarray, k: int) -> float:
    """sum over ordered pairs (t, t') of the factorized kernel, including t = t'."""
    c = counts.reshape((6,) * k)
    kc = c
    for axis in range(k):
        kc = np.moveaxis(np.tensordot(_PAIR_KERNEL, kc, axes=([1], [axis])), 0, axis)
    return float(np.sum(c * kc))


def estimate_purity(shadows: ShadowSet, region: Region | Sequence[int]) -> float:
    """Distinct-pair U-statistic for tr(rho_A^2); reported raw (may leave [0, 1]).

    The sum over t != t' of prod_a tr(rho_a^t rho_a^t') only depends on the
    local outcome codes, so it is evaluated from a 6^k histogram of codes
    rather than pair by pair.
    """
    if shadows.scheme != "pauli":
        raise ValueError("purity estimation needs randomized Pauli shadows")
    region = as_region(region, shadows.n_qubits)
    if region.k > MAX_PURITY_REGION:
        raise ValueError(f"region size limited to {MAX_PURITY_REGION}")
    _require(shadows, 2)
    T = shadows.T
    total = _pair_sum(_region_histogram(shadows, region.qubits), region.k)
    return (total - T * 5.0 ** region.k) / (T * (T - 1))


def estimate_purity_mom(shadows: ShadowSet, region: Region | Sequence[int], n_batches: int) -> float:
    """Median over contiguous batches of the distinct-pair purity estimate."""
    if n_batches < 1:
        raise ValueError("n_batches must be >= 1")
    if shadows.T < 2 * n_batches:
        raise ValueError(f"need T >= 2 * n_batches = {2 * n_batches}, got {shadows.T}")
    batches = np.array_split(np.arange(shadows.T), n_batches)
    return float(np.median([estimate_purity(shadows.subset(b), region) for b in batches]))


def renyi2_from_purity(purity: float, k: int) -> tuple[float, bool]:
    """(-ln clamp(purity, [2^-k, 1]), whether the clamp engaged)."""
    clipped = min(max(purity, 2.0 ** -k), 1.0)
    return float(max(-math.log(clipped), 0.0)), clipped != purity


def estimate_renyi2(shadows: ShadowSet, region: Region | Sequence[int]) -> float:
    region = as_region(region, shadows.n_qubits)
    return renyi2_from_purity(estimate_purity(shadows, region), region.k)[0]


def _check_budget_args(k: int, epsilon: float, delta: float) -> None:
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if not delta > 0:
        raise ValueError("delta must be positive")


def budget_observables(k: int, L: int, epsilon: float, delta: float) -> int:
    """ceil(4^(k+1) ln(2L/delta) / epsilon^2) snapshots for L k-local terms."""
    _check_budget_args(k, epsilon, delta)
    if int(L) != L or L < 1:
        raise ValueError("L must be a positive integer")
    log_term = math.log(2 * L / delta)
    if log_term <= 0:
        raise ValueError("ln(2L/delta) must be positive")
    return math.ceil(4 ** (k + 1) * log_term / epsilon ** 2)


def budget_gradient(k: int, L: int, epsilon: float, delta: float) -> int:
    """ceil(4^(k+1) L^2 ln(2L/delta) / epsilon^2) snapshots per shifted point."""
    _check_budget_args(k, epsilon, delta)
    if int(L) != L or L < 1:
        raise ValueError("L must be a positive integer")
    log_term = math.log(2 * L / delta)
    if log_term <= 0:
        raise ValueError("ln(2L/delta) must be positive")
    return math.ceil(4 ** (k + 1) * L ** 2 * log_term / epsilon ** 2)


def budget_purity(k: int, epsilon: float, delta: float, purity_upper_bound: float = 1.0) -> int:
    """ceil(4^(k+1) purity / (epsilon^2 delta)), in exact rational arithmetic."""
    _check_budget_args(k, epsilon, delta)
    if not delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if not 0 < purity_upper_bound <= 1:
        raise ValueError("purity bound must lie in (0, 1]")
    eps, dlt, pur = (Fraction(str(x)) for x in (epsilon, delta, purity_upper_bound))
    return math.ceil(Fraction(4 ** (k + 1)) * pur / (eps ** 2 * dlt))
