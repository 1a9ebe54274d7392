"""Hardware-efficient ansatz: layers of random-axis rotations followed by a CZ ring.

``U(theta) = prod_l W (prod_i R_{l,i}(theta_{l,i}))`` with
``R = exp(-i theta G / 2)``, ``G`` drawn uniformly from {X, Y, Z} once per
circuit, and ``W`` the product of CZ gates on the ring (i, i+1 mod n).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from shadowguard import _kernels
from shadowguard.simulator import AXES, Statevector, axis_code, cz_diagonal, zero_state


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class CircuitSpec:
    """Fixed circuit structure: an (p, n) array of axis codes (0=X, 1=Y, 2=Z)."""

    axes: np.ndarray

    def __post_init__(self):
        axes = np.asarray(self.axes)
        if axes.dtype.kind in "OUS":
            axes = np.vectorize(axis_code, otypes=[np.int8])(axes)
        axes = axes.astype(np.int8)
        if axes.ndim != 2 or axes.shape[0] < 1 or axes.shape[1] < 1:
            raise ValueError(f"axes must be a (p >= 1, n >= 1) array, got shape {axes.shape}")
        if axes.min() < 0 or axes.max() > 2:
            raise ValueError("axis codes must be 0, 1 or 2")
        object.__setattr__(self, "axes", _frozen(axes))

    @property
    def depth(self) -> int:
        return self.axes.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.axes.shape[1]

    @property
    def n_params(self) -> int:
        return self.axes.size

    @cached_property
    def entangler_edges(self) -> tuple[tuple[int, int], ...]:
        n = self.n_qubits
        if n == 1:
            return ()
        return tuple(sorted({tuple(sorted((i, (i + 1) % n))) for i in range(n)}))

    @cached_property
    def cz_diagonal(self) -> np.ndarray:
        return _frozen(cz_diagonal(self.n_qubits, self.entangler_edges))

    def truncated(self, depth: int) -> CircuitSpec:
        """Circuit made of the first ``depth`` layers."""
        if not 1 <= depth <= self.depth:
            raise ValueError(f"depth must be in [1, {self.depth}]")
        return CircuitSpec(self.axes[:depth])

    def __eq__(self, other):
        return isinstance(other, CircuitSpec) and np.array_equal(self.axes, other.axes)

    __hash__ = None

    def axes_labels(self) -> list[str]:
        return ["".join(AXES[a] for a in row) for row in self.axes]

    def to_json(self) -> dict:
        return {"n_qubits": self.n_qubits, "depth": self.depth, "axes": self.axes_labels()}

    @classmethod
    def from_json(cls, data: dict | str) -> CircuitSpec:
        if isinstance(data, str):
            data = json.loads(data)
        return cls(np.array([list(row) for row in data["axes"]]))


@dataclass(frozen=True, eq=False)
class Params:
    """Variational angles, shape (p, n), stored unwrapped."""

    angles: np.ndarray

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=np.float64)
        if angles.ndim != 2:
            raise ValueError("angles must be a 2-D (p, n) array")
        if not np.all(np.isfinite(angles)):
            raise ValueError("angles must be finite")
        object.__setattr__(self, "angles", _frozen(angles))

    @property
    def shape(self) -> tuple[int, int]:
        return self.angles.shape

    def flat(self) -> np.ndarray:
        return self.angles.ravel()

    def __eq__(self, other):
        return isinstance(other, Params) and np.array_equal(self.angles, other.angles)

    __hash__ = None

    def to_json(self) -> dict:
        return {"angles": self.angles.tolist()}

    @classmethod
    def from_json(cls, data: dict | str) -> Params:
        if isinstance(data, str):
            data = json.loads(data)
        return cls(np.array(data["angles"], dtype=np.float64))


def build_circuit(n: int, p: int, rng: np.random.Generator) -> CircuitSpec:
    if n < 1 or p < 1:
        raise ValueError("need n >= 1 qubits and p >= 1 layers")
    return CircuitSpec(rng.integers(0, 3, size=(p, n), dtype=np.int8))


def extend_circuit(circuit: CircuitSpec, extra: int, rng: np.random.Generator) -> CircuitSpec:
    """Append ``extra`` layers with fresh random axes; existing layers are kept."""
    new = rng.integers(0, 3, size=(extra, circuit.n_qubits), dtype=np.int8)
    return CircuitSpec(np.vstack([circuit.axes, new]))


def _check_shapes(circuit: CircuitSpec, params: Params) -> None:
    if params.shape != circuit.axes.shape:
        raise ValueError(f"params shape {params.shape} does not match circuit {circuit.axes.shape}")


def prepare_state(circuit: CircuitSpec, params: Params, initial: Statevector | None = None) -> Statevector:
    """U(theta) applied to |0...0> (or to a copy of ``initial``)."""
    _check_shapes(circuit, params)
    state = zero_state(circuit.n_qubits) if initial is None else initial.copy()
    _kernels.forward(state.amplitudes, circuit.axes, params.angles, circuit.cz_diagonal)
    return state


def zero_params(circuit: CircuitSpec) -> Params:
    return Params(np.zeros(circuit.axes.shape))


def init_uniform(circuit: CircuitSpec, rng: np.random.Generator) -> Params:
    return init_small_angle(circuit, 1.0, rng, _allow_one=True)


def init_small_angle(circuit: CircuitSpec, eps_theta: float, rng: np.random.Generator,
                     _allow_one: bool = False) -> Params:
    """Angles uniform on [-eps_theta*pi, eps_theta*pi).

    The draw is ``eps_theta * u`` with ``u`` uniform on [-pi, pi), so the same
    generator state gives proportionally scaled angles for every eps_theta.
    """
    upper = 1.0 if _allow_one else np.nextafter(1.0, 0.0)
    if not 0.0 <= eps_theta <= upper:
        raise ValueError(f"eps_theta must lie in [0, 1), got {eps_theta}")
    u = rng.uniform(-np.pi, np.pi, size=circuit.axes.shape)
    return Params(eps_theta * u)


def mirror_circuit(circuit: CircuitSpec) -> CircuitSpec:
    """Copy of ``circuit`` whose second half mirrors the first (identity-block layout).

    With h = p/2, layer h+j (0-based) takes the axes of layer h-j for
    j = 1..h-1. Layers 0 and h keep their axes; they carry zero angles in an
    identity block.
    """
    p = circuit.depth
    if p % 2:
        raise ValueError("identity blocks need an even number of layers")
    h = p // 2
    axes = circuit.axes.copy()
    for j in range(1, h):
        axes[h + j] = axes[h - j]
    return CircuitSpec(axes)


def is_mirrored(circuit: CircuitSpec) -> bool:
    p = circuit.depth
    if p % 2:
        return False
    h = p // 2
    return all(np.array_equal(circuit.axes[h + j], circuit.axes[h - j]) for j in range(1, h))


def init_identity_block(circuit: CircuitSpec, rng: np.random.Generator) -> Params:
    """One identity block: U(theta)|0> = |0> up to a global phase.

    Layers 1..h-1 get uniform angles; layer h+j gets the negated angles of
    layer h-j. Because a layer is "rotations then CZ ring" and the ring is
    self-inverse and fixes |0...0>, layers 0 and h must carry zero angles for
    the mirror to close exactly. Requires a mirrored circuit
    (see :func:`mirror_circuit`).
    """
    if circuit.depth % 2:
        raise ValueError("identity-block initialization needs an even depth")
    if not is_mirrored(circuit):
        raise ValueError("circuit axes are not mirrored; build it with mirror_circuit()")
    h = circuit.depth // 2
    angles = np.zeros(circuit.axes.shape)
    if h > 1:
        angles[1:h] = rng.uniform(-np.pi, np.pi, size=(h - 1, circuit.n_qubits))
        for j in range(1, h):
            angles[h + j] = -angles[h - j]
    return Params(angles)
