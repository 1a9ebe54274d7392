"""Depth scans over random circuits: gradient variance and entropy growth.

Each seed builds one circuit at the largest requested depth and propagates
states layer by layer, so the value at depth p comes from the first p layers
of the same circuit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from shadowguard import _kernels
from shadowguard.ansatz import build_circuit
from shadowguard.hamiltonians import PauliTerm
from shadowguard.simulator import Statevector, purity_exact, zero_state


def _z_signs(term: PauliTerm, n: int) -> np.ndarray:
    """Diagonal of a Z-type Pauli string."""
    if any(p != "Z" for _, p in term.support):
        raise ValueError("the scan observable must be a product of Z operators")
    idx = np.arange(1 << n)
    parity = np.zeros(1 << n, dtype=np.int64)
    for q, _ in term.support:
        parity ^= (idx >> q) & 1
    return float(term.coefficient.real) * (1.0 - 2.0 * parity)


def _s2(amps: np.ndarray, qubits: tuple[int, ...]) -> float:
    return float(max(-np.log(purity_exact(Statevector(amps), qubits)), 0.0))


@dataclass
class ScanTable:
    """Per-(n, depth) aggregates; arrays indexed [n_index, depth_index]."""

    system_sizes: tuple[int, ...]
    depths: tuple[int, ...]
    grads: np.ndarray       # (len(N), len(p), n_seeds) raw dE/dtheta_{1,1}
    s2_k2: np.ndarray       # (len(N), len(p), n_seeds)
    s2_half: np.ndarray     # (len(N), len(p), n_seeds)

    @property
    def var_grad(self) -> np.ndarray:
        return self.grads.var(axis=2, ddof=1)

    @property
    def mean_s2_k2(self) -> np.ndarray:
        return self.s2_k2.mean(axis=2)

    @property
    def mean_s2_half(self) -> np.ndarray:
        return self.s2_half.mean(axis=2)

    def saturated_variance(self, min_depth: int) -> np.ndarray:
        """Mean gradient variance over depths >= min_depth, per system size."""
        cols = [j for j, p in enumerate(self.depths) if p >= min_depth]
        if not cols:
            raise ValueError("no depth at or beyond min_depth")
        return self.var_grad[:, cols].mean(axis=1)

    def rows(self):
        for i, n in enumerate(self.system_sizes):
            for j, p in enumerate(self.depths):
                yield n, p, self.var_grad[i, j], self.mean_s2_half[i, j], self.mean_s2_k2[i, j]


def gradient_samples(n: int, depths: Sequence[int], term: PauliTerm, seed_seq: np.random.SeedSequence,
                     k2_region: tuple[int, ...] = (0, 1)) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """dE/dtheta_{0,0}, S2(k2_region) and half-cut S2 at every depth for one random circuit."""
    depths = sorted(set(int(p) for p in depths))
    rng = np.random.default_rng(seed_seq)
    circuit = build_circuit(n, depths[-1], rng)
    angles = rng.uniform(-np.pi, np.pi, size=circuit.axes.shape)
    signs = _z_signs(term, n)
    half = tuple(range(n // 2))

    states = [zero_state(n).amplitudes for _ in range(3)]
    shifts = (0.0, np.pi / 2, -np.pi / 2)
    want = set(depths)
    grads, s2k, s2h = [], [], []
    for layer in range(depths[-1]):
        for psi, shift in zip(states, shifts):
            theta = angles[layer:layer + 1].copy()
            if layer == 0:
                theta[0, 0] += shift
            _kernels.forward(psi, circuit.axes[layer:layer + 1], theta, circuit.cz_diagonal)
        if layer + 1 in want:
            e_plus = float(np.dot(np.abs(states[1]) ** 2, signs))
            e_minus = float(np.dot(np.abs(states[2]) ** 2, signs))
            grads.append(0.5 * (e_plus - e_minus))
            s2k.append(_s2(states[0], k2_region))
            s2h.append(_s2(states[0], half))
    return np.array(grads), np.array(s2k), np.array(s2h)


def gradient_variance_scan(system_sizes: Sequence[int], depths: Sequence[int], n_seeds: int,
                           term: PauliTerm | None = None, seed: int = 0, map_fn=map) -> ScanTable:
    """Variance over random circuits of the gradient of ``term`` w.r.t. the first angle.

    The default observable is Z_0 Z_1. ``map_fn`` may be a parallel map; the
    result does not depend on it because every (n, seed) pair owns a spawned
    seed sequence.
    """
    term = PauliTerm.from_string("Z0 Z1") if term is None else term
    depths = tuple(sorted(set(int(p) for p in depths)))
    sizes = tuple(int(n) for n in system_sizes)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    shape = (len(sizes), len(depths), n_seeds)
    grads, s2k, s2h = np.empty(shape), np.empty(shape), np.empty(shape)
    for i, n in enumerate(sizes):
        jobs = [(n, depths, term, ss) for ss in children[i].spawn(n_seeds)]
        for s, (g, a, b) in enumerate(map_fn(_scan_job, jobs)):
            grads[i, :, s], s2k[i, :, s], s2h[i, :, s] = g, a, b
    return ScanTable(sizes, depths, grads, s2k, s2h)


def _scan_job(args):
    n, depths, term, ss = args
    return gradient_samples(n, depths, term, ss)


def entropy_growth(n: int, depths: Sequence[int], eps_values: Sequence[float], n_seeds: int,
                   region: tuple[int, ...] = (0, 1), seed: int = 0, map_fn=map) -> np.ndarray:
    """S2 samples, shape (len(eps), len(depths), n_seeds), for small-angle circuits.

    Angles are eps * u with u uniform on [-pi, pi) drawn once per seed, so all
    eps values share the same circuit and the same underlying draw.
    """
    depths = tuple(sorted(set(int(p) for p in depths)))
    children = np.random.SeedSequence(seed).spawn(n_seeds)
    jobs = [(n, depths, tuple(eps_values), region, ss) for ss in children]
    out = np.empty((len(eps_values), len(depths), n_seeds))
    for s, arr in enumerate(map_fn(_growth_job, jobs)):
        out[:, :, s] = arr
    return out


def _growth_job(args):
    n, depths, eps_values, region, ss = args
    rng = np.random.default_rng(ss)
    circuit = build_circuit(n, depths[-1], rng)
    u = rng.uniform(-np.pi, np.pi, size=circuit.axes.shape)
    want = {p: j for j, p in enumerate(depths)}
    res = np.empty((len(eps_values), len(depths)))
    for e, eps in enumerate(eps_values):
        psi = zero_state(n).amplitudes
        theta = eps * u
        for layer in range(depths[-1]):
            _kernels.forward(psi, circuit.axes[layer:layer + 1], theta[layer:layer + 1], circuit.cz_diagonal)
            if layer + 1 in want:
                res[e, want[layer + 1]] = _s2(psi, region)
    return res
