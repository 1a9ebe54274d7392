"""Dense statevector engine.

This is the ground-truth oracle for every estimator in the package: exact
expectation values, reduced density matrices, entropies and ground states.

Conventions
-----------
Qubit ``q`` is bit ``q`` of the basis index (little-endian): for two qubits
the amplitude of ``|q1 q0> = |01>`` sits at index 1. Reduced density matrices
use the same convention restricted to the region, i.e. the first (lowest)
qubit of the region is the least-significant bit of the reduced index.
Measurement bit 0 means the +1 eigenvalue of the measured Pauli.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
import scipy.linalg

from shadowguard._kernels import basis_probabilities

if TYPE_CHECKING:
    from shadowguard.hamiltonians import ObservableSum

MAX_QUBITS = 24
MAX_DENSE_QUBITS = 12
AXES = "XYZ"


class CapacityError(ValueError):
    """Requested system size exceeds what the dense engine will allocate."""


def axis_code(axis: str | int) -> int:
    if isinstance(axis, (int, np.integer)):
        if 0 <= int(axis) <= 2:
            return int(axis)
        raise ValueError(f"axis code must be 0, 1 or 2, got {axis}")
    try:
        return AXES.index(axis.upper())
    except ValueError:
        raise ValueError(f"axis must be one of X, Y, Z; got {axis!r}") from None


class Statevector:
    """Pure state of ``n_qubits`` qubits as a dense complex128 vector.

    Gate functions mutate ``amplitudes`` in place; use :meth:`copy` before
    handing a state to another worker.
    """

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes: np.ndarray):
        amps = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < 2 or amps.size & (amps.size - 1):
            raise ValueError("amplitude vector length must be a power of two >= 2")
        self.amplitudes = amps

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def copy(self) -> Statevector:
        return Statevector(self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self) -> str:
        return f"Statevector(n_qubits={self.n_qubits})"


@dataclass(frozen=True)
class Region:
    """Sorted, distinct qubit indices of a subsystem A."""

    qubits: tuple[int, ...]

    def __post_init__(self):
        qs = tuple(int(q) for q in self.qubits)
        if not qs:
            raise ValueError("region must contain at least one qubit")
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise ValueError(f"region indices must be strictly increasing: {qs}")
        if qs[0] < 0:
            raise ValueError("region indices must be non-negative")
        object.__setattr__(self, "qubits", qs)

    @property
    def k(self) -> int:
        return len(self.qubits)

    def check(self, n: int) -> Region:
        if self.qubits[-1] >= n:
            raise ValueError(f"region {self.qubits} does not fit in {n} qubits")
        return self

    @classmethod
    def first(cls, k: int) -> Region:
        return cls(tuple(range(k)))


def as_region(region: Region | Iterable[int], n: int) -> Region:
    if not isinstance(region, Region):
        region = Region(tuple(region))
    return region.check(n)


def _check_qubit(state: Statevector, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits} qubits")


def zero_state(n: int) -> Statevector:
    if not 1 <= n <= MAX_QUBITS:
        raise CapacityError(f"n must be in [1, {MAX_QUBITS}], got {n}")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(amps)


def basis_state(bits: Sequence[int]) -> Statevector:
    """Computational basis state with ``bits[q]`` on qubit q."""
    state = zero_state(len(bits))
    state.amplitudes[0] = 0.0
    state.amplitudes[sum(int(b) << q for q, b in enumerate(bits))] = 1.0
    return state


def rotation_matrix(axis: str | int, angle: float) -> np.ndarray:
    """2x2 matrix of exp(-i angle G / 2)."""
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    code = axis_code(axis)
    if code == 0:
        return np.array([[c, -1j * s], [-1j * s, c]])
    if code == 1:
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    return np.array([[c - 1j * s, 0], [0, c + 1j * s]])


def _qubit_view(amps: np.ndarray, qubit: int) -> np.ndarray:
    n = amps.size.bit_length() - 1
    return amps.reshape(1 << (n - qubit - 1), 2, 1 << qubit)


def apply_single_qubit(state: Statevector, qubit: int, matrix: np.ndarray) -> Statevector:
    _check_qubit(state, qubit)
    v = _qubit_view(state.amplitudes, qubit)
    a = v[:, 0, :].copy()
    b = v[:, 1, :].copy()
    v[:, 0, :] = matrix[0, 0] * a + matrix[0, 1] * b
    v[:, 1, :] = matrix[1, 0] * a + matrix[1, 1] * b
    return state


def apply_rotation(state: Statevector, qubit: int, axis: str | int, angle: float) -> Statevector:
    if not np.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    return apply_single_qubit(state, qubit, rotation_matrix(axis, angle))


def apply_cz(state: Statevector, q1: int, q2: int) -> Statevector:
    _check_qubit(state, q1)
    _check_qubit(state, q2)
    if q1 == q2:
        raise ValueError("CZ needs two distinct qubits")
    idx = np.arange(state.dim)
    both = ((idx >> q1) & 1) & ((idx >> q2) & 1)
    state.amplitudes[both.astype(bool)] *= -1
    return state


def cz_diagonal(n: int, edges: Iterable[tuple[int, int]]) -> np.ndarray:
    """Diagonal (+/-1) of the product of CZ gates on ``edges``."""
    idx = np.arange(1 << n)
    parity = np.zeros(1 << n, dtype=np.int64)
    for a, b in edges:
        parity ^= ((idx >> a) & 1) & ((idx >> b) & 1)
    return np.where(parity, -1.0, 1.0)


def expectation(state: Statevector, obs: ObservableSum) -> float:
    """Exact <psi|H|psi> for a Hermitian Pauli sum."""
    obs.check_hermitian()
    if obs.min_qubits() > state.n_qubits:
        raise ValueError("observable acts on more qubits than the state has")
    psi = state.amplitudes
    val = np.vdot(psi, obs.to_sparse(state.n_qubits) @ psi)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary residue {val.imag:.3e}")
    return float(val.real)


def _region_matrix(amps: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Reshape amplitudes to (2^k, 2^(n-k)) with region qubits as rows."""
    n = amps.size.bit_length() - 1
    k = len(qubits)
    tensor = amps.reshape((2,) * n)
    # tensor axis a carries qubit n-1-a; row index must have qubits[-1] as MSB
    src = [n - 1 - q for q in reversed(qubits)]
    return np.moveaxis(tensor, src, list(range(k))).reshape(1 << k, -1)


def reduced_density_matrix(state: Statevector, region: Region | Iterable[int]) -> np.ndarray:
    region = as_region(region, state.n_qubits)
    m = _region_matrix(state.amplitudes, region.qubits)
    return m @ m.conj().T


def purity_exact(state: Statevector, region: Region | Iterable[int]) -> float:
    rho = reduced_density_matrix(state, region)
    return float(np.sum(np.abs(rho) ** 2))


def renyi2_exact(state: Statevector, region: Region | Iterable[int]) -> float:
    """Second Renyi entropy -ln tr(rho_A^2), in nats."""
    return float(max(-np.log(purity_exact(state, region)), 0.0))


def von_neumann_exact(state: Statevector, region: Region | Iterable[int]) -> float:
    w = np.linalg.eigvalsh(reduced_density_matrix(state, region))
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log(w)))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of rho - sigma."""
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


def fidelity(a: Statevector, b: Statevector) -> float:
    if a.dim != b.dim:
        raise ValueError("states have different dimensions")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def _basis_configs(bases) -> np.ndarray:
    if isinstance(bases, str):
        bases = list(bases)
    arr = np.asarray(bases)
    if arr.dtype.kind in "OUS":
        arr = np.vectorize(axis_code, otypes=[np.int8])(arr)
    arr = np.atleast_2d(arr).astype(np.int8)
    if arr.size and (arr.min() < 0 or arr.max() > 2):
        raise ValueError("basis codes must be 0 (X), 1 (Y) or 2 (Z)")
    return arr


def measurement_probabilities(state: Statevector, bases) -> np.ndarray:
    """Outcome distributions for one or more product Pauli bases.

    ``bases`` is a length-n sequence or an (m, n) array; the result has shape
    (m, 2^n) with row u the distribution over outcome indices.
    """
    configs = _basis_configs(bases)
    if configs.shape[1] != state.n_qubits:
        raise ValueError("need one basis per qubit")
    out = np.empty((configs.shape[0], state.dim))
    basis_probabilities(state.amplitudes, configs, out)
    return out


def sample_pauli_measurement(state: Statevector, bases, rng: np.random.Generator) -> np.ndarray:
    """Single shot in the product basis ``bases``; returns one bit per qubit."""
    probs = measurement_probabilities(state, bases)[0]
    outcome = rng.choice(state.dim, p=probs / probs.sum())
    return (outcome >> np.arange(state.n_qubits)) & 1


def haar_random_state(n: int, rng: np.random.Generator) -> Statevector:
    if not 1 <= n <= MAX_DENSE_QUBITS:
        raise CapacityError(f"Haar sampling supports 1 <= n <= {MAX_DENSE_QUBITS}")
    z = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return Statevector(z / np.linalg.norm(z))


def ground_state_dense(obs: ObservableSum, n: int) -> tuple[float, Statevector]:
    """Lowest eigenpair by dense diagonalization (n <= 12)."""
    if n > MAX_DENSE_QUBITS:
        raise CapacityError(f"dense diagonalization limited to n <= {MAX_DENSE_QUBITS}")
    h = obs.to_sparse(n).toarray()
    if not np.any(h.imag):
        h = h.real
    w, v = scipy.linalg.eigh(h, subset_by_index=[0, 0])
    energy = float(w[0])
    vec = v[:, 0].astype(np.complex128)
    vec /= np.linalg.norm(vec)
    residual = np.linalg.norm(h @ vec - energy * vec)
    if residual > 1e-8:
        raise RuntimeError(f"eigensolver residual {residual:.2e} above 1e-8")
    return energy, Statevector(vec)
