"""Energies, gradients, QFIM and the step-size bounds used by the optimizer."""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.sparse

from shadowguard import _kernels
from shadowguard.ansatz import CircuitSpec, Params, prepare_state
from shadowguard.hamiltonians import ObservableSum
from shadowguard.shadows import collect_shadows, estimate_energy
from shadowguard.simulator import Statevector, zero_state

Evaluator = Callable[[CircuitSpec, Params], float]


def _as_sparse(obs, n: int) -> scipy.sparse.csr_matrix:
    if isinstance(obs, ObservableSum):
        obs.check_hermitian()
        return obs.to_sparse(n)
    return obs


def exact_energy(circuit: CircuitSpec, params: Params, obs) -> float:
    """<psi(theta)|H|psi(theta)>; ``obs`` is an ObservableSum or a prebuilt sparse matrix."""
    h = _as_sparse(obs, circuit.n_qubits)
    psi = prepare_state(circuit, params).amplitudes
    return float(np.vdot(psi, h @ psi).real)


def adjoint_gradient(circuit: CircuitSpec, params: Params, state: Statevector, h) -> np.ndarray:
    """Exact dE/dtheta, shape (p, n), by one reverse sweep from the final state."""
    psi = state.amplitudes.copy()
    lam = np.ascontiguousarray(h @ psi)
    grad = np.empty(circuit.axes.shape)
    _kernels.backward_gradient(psi, lam, circuit.axes, params.angles, circuit.cz_diagonal, grad)
    return grad


def energy_and_gradient(circuit: CircuitSpec, params: Params, obs) -> tuple[float, np.ndarray, Statevector]:
    h = _as_sparse(obs, circuit.n_qubits)
    state = prepare_state(circuit, params)
    psi = state.amplitudes
    energy = float(np.vdot(psi, h @ psi).real)
    return energy, adjoint_gradient(circuit, params, state, h), state


def exact_evaluator(obs, n: int) -> Evaluator:
    h = _as_sparse(obs, n)
    return lambda circuit, params: exact_energy(circuit, params, h)


class ShadowEnergyEvaluator:
    """Energy from a fresh classical-shadow set of size T at every call."""

    def __init__(self, obs: ObservableSum, T: int, rng: np.random.Generator):
        self.obs = obs
        self.T = int(T)
        self.rng = rng
        self.calls = 0

    def __call__(self, circuit: CircuitSpec, params: Params) -> float:
        self.calls += 1
        shadows = collect_shadows(prepare_state(circuit, params), self.T, self.rng)
        return estimate_energy(shadows, self.obs)


def parameter_shift_gradient(circuit: CircuitSpec, params: Params, obs: ObservableSum,
                             evaluator: Evaluator | None = None) -> np.ndarray:
    """dE/dtheta_i = (E(theta + pi/2 e_i) - E(theta - pi/2 e_i)) / 2 for every angle."""
    if evaluator is None:
        evaluator = exact_evaluator(obs, circuit.n_qubits)
    base = params.angles
    grad = np.empty(base.shape)
    shift = np.pi / 2
    for idx in np.ndindex(base.shape):
        plus = base.copy()
        plus[idx] += shift
        minus = base.copy()
        minus[idx] -= shift
        grad[idx] = 0.5 * (evaluator(circuit, Params(plus)) - evaluator(circuit, Params(minus)))
    return grad


def gd_step(params: Params, gradient: np.ndarray, eta: float) -> Params:
    """theta - eta * grad."""
    return Params(params.angles - eta * np.asarray(gradient).reshape(params.shape))


def _tangent(circuit: CircuitSpec, params: Params, direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    psi = zero_state(circuit.n_qubits).amplitudes
    tan = np.zeros_like(psi)
    d = np.ascontiguousarray(np.asarray(direction, dtype=np.float64).reshape(circuit.axes.shape))
    _kernels.forward_tangent(psi, tan, circuit.axes, params.angles, circuit.cz_diagonal, d)
    return psi, tan


def qfim_quadratic_form(circuit: CircuitSpec, params: Params, direction: np.ndarray) -> float:
    """v^T F v = 4 (||d_v psi||^2 - |<psi|d_v psi>|^2) from one tangent pass."""
    psi, tan = _tangent(circuit, params, direction)
    return float(4.0 * (np.vdot(tan, tan).real - abs(np.vdot(psi, tan)) ** 2))


def state_derivatives(circuit: CircuitSpec, params: Params) -> tuple[np.ndarray, np.ndarray]:
    """Final state and all |d_i psi>, shape (p*n, 2^n), row-major in (layer, qubit)."""
    size = circuit.n_params
    derivs = np.empty((size, 1 << circuit.n_qubits), dtype=np.complex128)
    psi = None
    for i in range(size):
        e = np.zeros(size)
        e[i] = 1.0
        psi, derivs[i] = _tangent(circuit, params, e)
    return psi, derivs


def qfim(circuit: CircuitSpec, params: Params) -> np.ndarray:
    """F_ij = 4 Re[<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>]."""
    psi, d = state_derivatives(circuit, params)
    overlaps = d.conj() @ psi
    gram = d.conj() @ d.T
    f = 4.0 * (gram - np.outer(overlaps, overlaps.conj())).real
    return 0.5 * (f + f.T)


def trace_distance_step_bound(gradient: np.ndarray, qfim_matrix: np.ndarray, eta: float) -> float:
    """sqrt(eta^2/4 g^T F g): leading-order trace distance moved by one GD step."""
    g = np.asarray(gradient).ravel()
    return step_bound_from_quadratic(float(g @ qfim_matrix @ g), eta)


def step_bound_from_quadratic(g_f_g: float, eta: float) -> float:
    return float(np.sqrt(max(eta * eta / 4.0 * g_f_g, 0.0)))


def purity_change_bound(trace_distance: float, k: int) -> float:
    """Largest |change in tr rho_A^2| for a k-qubit region moved by trace distance T_A."""
    if not -1e-12 <= trace_distance <= 1 + 1e-12:
        raise ValueError("trace distance must lie in [0, 1]")
    t = min(max(trace_distance, 0.0), 1.0)
    return 1.0 - (1.0 - t) ** 2 - t * t / (2 ** k - 1)
